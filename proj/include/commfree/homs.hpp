#pragma once

#include <optional>
#include <vector>

#include "commfree/stallings.hpp"
#include "commfree/words.hpp"

namespace commfree {

// Homomorphism between subgroups of the same ambient free group, given by
// the images (ambient words) of the domain's cached basis elements. iso is
// certified at construction: the images generate the codomain and the ranks
// agree (a surjection between free groups of equal finite rank is bijective).
struct FreeHom {
  Subgroup domain;
  Subgroup codomain;
  std::vector<Word> images;
  bool iso = false;
};

FreeHom hom_from_images(const Subgroup& domain, const Subgroup& codomain,
                        const std::vector<Word>& images);
FreeHom identity_hom(const Subgroup& s);
// w must lie in the domain.
Word apply_hom(const FreeHom& h, const Word& w);
// h1 first, then h2; requires codomain(h1) <= domain(h2). The codomain of
// the composite is tightened to the actual image.
FreeHom compose(const FreeHom& h2, const FreeHom& h1);
// Requires iso. Expresses each codomain basis element in the images via
// history-tracked folding and reads the expression in the domain basis.
FreeHom invert_hom(const FreeHom& h);
// Domain shrinks to s <= domain(h); codomain tightens to the image of s.
FreeHom restrict_hom(const FreeHom& h, const Subgroup& s);

// Substitute gens[i] for letter i.
Word substitute(const std::vector<Word>& gens, const Word& w);
// Expression of w as a word in the given generators (letter i = gens[i]),
// nullopt if w lies outside the subgroup they generate. When the gens are
// not independent the expression is one valid choice.
std::optional<Word> express_in_generators(const std::vector<Word>& gens, const Word& w);
// Hom on s given by images of an arbitrary basis list of s (not necessarily
// the cached one).
FreeHom hom_from_basis_assignment(const Subgroup& s, const std::vector<Word>& basis_list,
                                  const Subgroup& codomain, const std::vector<Word>& images);

// Induced map on abelianizations in basis coordinates; rows index the
// codomain basis, columns the domain basis.
std::vector<std::vector<long long>> abel_matrix(const FreeHom& h);
// Exact integer determinant (fraction-free elimination); square only.
long long det_abel(const FreeHom& h);
// Automorphism (domain == codomain, iso) with determinant +1.
bool is_saut(const FreeHom& h);

// b_i -> b_i b_j^sign, other basis elements fixed.
FreeHom nielsen_right(const Subgroup& s, int i, int j, int sign = 1);
// b_i -> b_j^sign b_i.
FreeHom nielsen_left(const Subgroup& s, int i, int j, int sign = 1);
// b_i -> b_perm[i].
FreeHom perm_aut(const Subgroup& s, const std::vector<int>& perm);
// b_i -> b_i^-1, others fixed.
FreeHom inversion_aut(const Subgroup& s, int i);

struct PrimitivityResult {
  bool primitive = false;
  // Automorphisms of s, applied in order; when primitive their composite
  // sends w to the first basis element of s.
  std::vector<FreeHom> sequence;
  // Image of w under the composite, in basis letters of s.
  Word terminal;
};
// Greedy Whitehead descent on cyclic length with fixed tie-breaking
// (first strictly reducing automorphism in enumeration order).
PrimitivityResult whitehead_is_primitive(const Subgroup& s, const Word& w);

}  // namespace commfree
