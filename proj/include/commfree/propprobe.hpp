#pragma once

#include <optional>
#include <string>
#include <vector>

#include "commfree/comm.hpp"
#include "commfree/homs.hpp"
#include "commfree/stallings.hpp"
#include "commfree/words.hpp"

namespace commfree {

// Subspace of (Z/p)^dim; the basis is kept in reduced echelon form, so two
// subspaces are equal exactly when their row lists are.
class FpSubspace {
 public:
  FpSubspace(long long p, int dim);

  long long prime() const { return p_; }
  int ambient_dim() const { return dim_; }
  int dim() const { return static_cast<int>(rows_.size()); }
  const std::vector<std::vector<int>>& rows() const { return rows_; }

  // Reduce v against the rows and adjoin the residue; false when v was
  // already in the span.
  bool insert(const std::vector<long long>& v);
  bool contains(const std::vector<long long>& v) const;

  friend bool operator==(const FpSubspace&, const FpSubspace&) = default;

 private:
  long long p_;
  int dim_;
  std::vector<std::vector<int>> rows_;  // pivots strictly increasing
};

// {x in a : Mx in b}. M is square, row index = target coordinate.
FpSubspace meet_preimage(const FpSubspace& a, const std::vector<std::vector<int>>& m,
                         const FpSubspace& b);
FpSubspace intersect(const FpSubspace& a, const FpSubspace& b);

// Span of the images of the given words in U/[U,U]U^p, in coordinates of
// U's basis. Every word must lie in U.
FpSubspace frattini_image(const std::vector<Word>& words, const Subgroup& u, long long p);

// The index-p kernels on the first and third coordinate axes share the rank
// 1 + p(d-1). phi matches their commutator bases with x1^p -> x1 and
// [x2,x1] -> x2, so the tower h_0 = x2, h_k = [h_{k-1}, x1^{p^(k-1)}]
// collapses one level per application: phi(h_k) = h_{k-1}, phi^k(h_k) = x2.
struct PhiCertificate {
  FreeHom phi;                    // F(X,x1,p) -> F(X,x3,p)
  std::vector<Word> tower;        // h_0 .. h_kmax
  std::vector<bool> step_ok;      // phi(h_k) == h_{k-1},  k = 1..kmax
  std::vector<bool> collapse_ok;  // phi^k(h_k) == x2,     k = 1..kmax
  bool ok = false;
};
// Requires rank >= 3 (the third axis hosts the codomain).
PhiCertificate phi_iso_certificate(const RankContext& ctx, long long p, int kmax);

// Deterministic move list for the orbit search below: the tower-collapse
// germ and its inverse when the rank allows one, a root-extraction germ per
// generator (inverted power conjugator), then the transvection germs of
// every subgroup with a one-step index-p chain.
struct K1Move {
  std::string name;
  Commensuration c;
};
std::vector<K1Move> k1_moves(const RankContext& ctx, long long p);

// A word escapes the first congruence layer either directly (nonzero image
// in F/[F,F]F^p) or after transport along a product of level-one germs; in
// both cases the nonzero vector is the certificate.
struct ExclusionCertificate {
  enum class Kind { image_nonzero, orbit_escape };
  Kind kind;
  Word w;
  std::vector<int> moves;  // indices into k1_moves, applied left to right
  std::vector<std::string> move_names;
  Word transported;              // equals w for image_nonzero
  std::vector<long long> vec;    // nonzero coordinates mod p
};
struct ExclusionOutcome {
  bool refused = false;
  std::optional<ExclusionCertificate> cert;
};

// Breadth-first over germ products of at most orbit_bound factors, seeded
// with single-germ power chains; every returned certificate has been
// replayed from scratch. Refusal means exhaustion (or the internal state
// cap), never membership.
ExclusionOutcome k1_exclude(const RankContext& ctx, const Word& w, long long p,
                            int orbit_bound = 4);

// Re-derive the transport and the vector from the stored move indices.
bool verify_exclusion(const RankContext& ctx, long long p, const ExclusionCertificate& cert);

// First-layer upper bound per subgroup: intersect the layer images of V cap U
// over all the p-open V of index <= p^n, then shrink to the largest subspace
// stable under SL_rank(U)(Z/p) acting through basis transvections.
struct LayerReport {
  Subgroup u;
  long long index;
  int rank;
  int containment_dim;  // after the per-V constraints
  int invariant_dim;    // after the stability shrink
  FpSubspace space;
};
// Requires p^n <= 8 (enumeration bound).
std::vector<LayerReport> kn_layer_constraint(const RankContext& ctx, long long p, int n);

}  // namespace commfree
