#pragma once

#include <optional>
#include <string>

#include "commfree/comm.hpp"

namespace commfree {

// p'-part of the exponent of w over its maximal root: w = v^m with v not a
// proper power, the value is m / p^{v_p(m)}. Conjugation-invariant germ
// datum; w must be nontrivial.
long long dp_invariant(const Word& w, long long p);

struct PrimitiveRealization {
  bool found = false;
  bool refused = false;  // index bound exhausted before a hit
  std::optional<Subgroup> u;
};
// Breadth-first search over p-open subgroups by index for one containing w
// as a primitive element. Subgroups of index > max_index are not explored.
PrimitiveRealization commp_primitive_realization(const RankContext& ctx, const Word& w,
                                                 long long p, long long max_index);

// Germ c with c i(x^k) c^-1 = i(x^(mk)) for every k, where i(g) denotes the
// inner germ of conjugation by g. Requires x primitive and m >= 1; for the
// pro-p flavor m must keep the cyclic kernel p-open (a power of p).
Commensuration power_conjugator(const RankContext& ctx, Flavor flavor, long long p,
                                const Word& x, long long m);

struct WitnessResult {
  bool refused = false;
  std::optional<Commensuration> c;
};
// Pro-p germ c with c i(w) c^-1 = i(w^p), built from a power conjugator of
// the maximal root inside a realization where the root is primitive.
WitnessResult bs_witness(const RankContext& ctx, const Word& w, long long p,
                         long long max_index);

// Germ conjugating i(g) to i(h); exists for all nontrivial g, h. Verified
// before returning.
Commensuration comm_conjugator(const RankContext& ctx, const Word& g, const Word& h);

struct CommpConjugacy {
  bool possible = false;
  bool refused = false;  // realization bound hit; no verdict
  long long dp_g = 0, dp_h = 0;
  std::optional<Commensuration> c;
};
// Pro-p conjugacy of inner germs: possible exactly when the dp invariants
// agree. On success c i(g) c^-1 = i(h), verified before returning.
CommpConjugacy commp_conjugator(const RankContext& ctx, const Word& g, const Word& h,
                                long long p, long long max_index);

// Whitehead minimization of the subgroup's core graph (Gersten): returns an
// automorphism of the ambient group carrying h onto a subgroup generated by
// a subset of the basis letters, or nullopt when h is not a free factor.
std::optional<FreeHom> free_factor_witness(const Subgroup& h);

struct SubgroupConjugacy {
  bool possible = false;
  bool refused = false;
  std::string reason;  // set when impossible or refused
  std::optional<Commensuration> c;
};
// Germ c with c (h1 cap U) c^-1 = h2 cap V exactly (U, V the sides of c).
// Needs matching rank and openness class; pro-p flavor additionally descends
// through p-open subgroups to present each h_i as a free factor, refusing at
// max_index.
SubgroupConjugacy subgroup_conjugator(const Subgroup& h1, const Subgroup& h2,
                                      Flavor flavor, long long p,
                                      long long max_index = 64);

}  // namespace commfree
