#pragma once

#include <string>
#include <vector>

#include "commfree/homs.hpp"
#include "commfree/stallings.hpp"
#include "commfree/words.hpp"

namespace commfree {

// Which family of finite-index subgroups germs are allowed to shrink to:
// all of them, or only those with a subnormal chain of index-p steps.
enum class Flavor { profinite, pro_p };

// Isomorphism between finite-index subgroups, considered up to restriction
// (two are the same germ when they agree on a common finite-index subgroup).
struct Commensuration {
  Flavor flavor = Flavor::profinite;
  long long p = 0;  // prime; pro_p only
  FreeHom iso;      // U = iso.domain, V = iso.codomain
};

// Validates: iso certified, both sides of finite index, and for pro_p that
// p is prime and both sides admit index-p subnormal chains.
Commensuration make_commensuration(Flavor flavor, long long p, const FreeHom& iso);
Commensuration inner_commensuration(const RankContext& ctx, Flavor flavor, long long p,
                                    const Word& g);
Commensuration identity_commensuration(const RankContext& ctx, Flavor flavor, long long p);

// Same germ: the isos agree on the intersection of their domains.
bool equivalent(const Commensuration& a, const Commensuration& b);
// Germ of c2 . c1 (c1 acts first), defined on the pullback of the overlap.
Commensuration multiply(const Commensuration& c2, const Commensuration& c1);
Commensuration invert_commensuration(const Commensuration& c);
// Image f(h n U) of a subgroup under the germ.
Subgroup conj_subgroup(const Commensuration& c, const Subgroup& h);

// Determinant-one automorphism of the whole group carrying h1 to h2. Both
// arguments must be normal with cyclic quotient of order m; built from
// transvections via a Euclidean reduction of the defining vectors.
FreeHom scq_transitivity(const Subgroup& h1, const Subgroup& h2, long long m);

// Transport through the inclusion of n: g lives over the rebased free group
// on n's basis; the result acts between the corresponding subgroups of n's
// ambient group.
FreeHom lift_hom(const Subgroup& n, const FreeHom& g);
Commensuration lift_germ(const Subgroup& n, const Commensuration& c);

struct PDecomposition {
  bool ok = false;
  std::string reason;                    // set when !ok
  std::vector<Commensuration> factors;   // c = factors[0] . factors[1] . ...
};
// Writes a pro-p commensuration as a product of germs of determinant-one
// automorphisms of p-open subgroups. Peels one index-p layer at a time:
// aligns the minimal normal covers by scq_transitivity, divides it out, and
// recurses inside the cover rebased as a free group in its own right.
PDecomposition decompose_p(const Commensuration& c);

}  // namespace commfree
