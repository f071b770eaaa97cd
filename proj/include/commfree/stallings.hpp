#pragma once

#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "commfree/words.hpp"

namespace commfree {

// Folded based core graph of a finitely generated subgroup. Vertices are
// 0..n-1 with base 0; succ[g][v] / pred[g][v] are partial injections per
// generator, -1 marking an absent dart. Canonical form: vertices numbered
// by BFS from the base, exploring at each vertex the darts in order
// (g0 out, g0 in, g1 out, g1 in, ...).
struct SubgroupGraph {
  int ambient_rank = 0;
  int n = 0;
  std::vector<std::vector<int>> succ, pred;  // [g][v]

  bool operator==(const SubgroupGraph&) const = default;
  bool complete() const;  // every dart present (finite-index covering)
  std::string serialize() const;
};

// Immutable subgroup value. Construction folds, prunes to the core,
// canonicalizes, and caches basis / transversal / index data.
class Subgroup {
 public:
  static Subgroup whole_group(const RankContext& ctx);
  static Subgroup trivial_subgroup(const RankContext& ctx);
  static Subgroup from_generators(const RankContext& ctx, const std::vector<Word>& gens);
  // Folds, keeps the base component, prunes non-base degree-1 vertices.
  static Subgroup from_graph(const RankContext& ctx, const SubgroupGraph& g);

  const RankContext& context() const;
  const SubgroupGraph& graph() const;
  int rank() const;
  std::optional<long long> index() const;  // nullopt: infinite index
  // Ambient words; order matches the canonical numbering of non-tree darts.
  const std::vector<Word>& basis() const;
  // Right Schreier transversal, tree paths from the base; entry 0 is trivial.
  // Finite index only.
  const std::vector<Word>& transversal() const;
  // Alphabet for words over this subgroup's basis.
  RankContext basis_context() const;

  bool contains(const Word& w) const;
  // Expression of a member in basis letters; nullopt for non-members.
  std::optional<Word> rewrite(const Word& w) const;
  // Substitute basis words into a word over basis letters.
  Word embed(const Word& w_in_basis) const;

  bool same_subgroup(const Subgroup& o) const;
  bool contains_subgroup(const Subgroup& o) const;  // o <= this

 private:
  struct Data;
  std::shared_ptr<const Data> d_;
  explicit Subgroup(std::shared_ptr<const Data> d) : d_(std::move(d)) {}
  friend struct SubgroupAccess;
};

Subgroup intersect(const Subgroup& a, const Subgroup& b);
// by * H * by^-1
Subgroup conjugate_subgroup(const Subgroup& h, const Word& by);
bool is_normal(const Subgroup& h);
// Largest normal subgroup inside h; finite index required.
Subgroup normal_core(const Subgroup& h);

// Kernel of x -> 1, other generators -> 0 into Z/m: the unique normal
// subgroup of index m whose quotient is cyclic generated by the image of x.
Subgroup standard_cyclic_kernel(const RankContext& ctx, int x, long long m);
// Schreier basis of the above: {x^m} then x^j y x^-j for y != x, j = 0..m-1.
std::vector<Word> schreier_basis(const RankContext& ctx, int x, long long m);
// Commutator variant: {x^m} then [y, x, ..., x] (j copies of x), j = 0..m-1.
std::vector<Word> commutator_basis(const RankContext& ctx, int x, long long m);

// Canonical representatives of surjections onto Z/m modulo units.
std::vector<std::vector<long long>> scq_vectors(int rank, long long m);
// Kernel of w -> sum t_i * (exponent of generator i) mod m.
Subgroup scq_kernel(const RankContext& ctx, const std::vector<long long>& t, long long m);
// All normal subgroups with cyclic quotient of order m, canonical order.
std::vector<Subgroup> scq(const RankContext& ctx, long long m);
// Normal subgroups of index p (p prime): same as scq(ctx, p).
std::vector<Subgroup> index_p_normals(const RankContext& ctx, long long p);
// For a member of scq(ctx, m): a vector t with h = scq_kernel(t).
std::optional<std::vector<long long>> scq_recover_vector(const Subgroup& h, long long m);

struct PopennessCertificate {
  bool open = false;
  // whole group = chain[0] > chain[1] > ... > chain.back() = H, each term
  // normal of index p in its predecessor. Ambient coordinates.
  std::vector<Subgroup> chain;
  std::string reason;  // set when !open
};
// Decides whether h sits in a subnormal chain with index-p steps.
// Complete search (hyperplane descent with memoization); never refuses.
PopennessCertificate is_p_open(const Subgroup& h, long long p);

struct HallCompletion {
  Subgroup overgroup;  // finite index, contains h as a free factor
  // Basis of overgroup whose first rank(h) entries are basis(h); obtained by
  // completing the partial injections of the core graph, spanning tree kept.
  std::vector<Word> extended_basis;
};
HallCompletion hall_completion(const Subgroup& h);

// Every subgroup of index <= max_index, one call each, canonical order.
void enumerate_subgroups(const RankContext& ctx, int max_index,
                         const std::function<void(const Subgroup&)>& fn);

// Every subgroup with a subnormal chain of index-p steps and index at most
// max_index, one call each, by increasing index: breadth-first through the
// index-p normal subgroups of each stop.
void enumerate_p_open(const RankContext& ctx, long long p, long long max_index,
                      const std::function<void(const Subgroup&)>& fn);

}  // namespace commfree
