#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <boost/rational.hpp>

#include "commfree/comm.hpp"

namespace commfree {

// Germs of the transvections b_i -> b_i b_j and b_i -> b_j b_i of the whole
// group and of every normal subgroup with cyclic quotient of order m.
std::vector<Commensuration> sm_generators(const RankContext& ctx, long long m);
// As above plus basis inversions and adjacent transpositions: the full
// automorphism groups instead of their determinant-one subgroups.
std::vector<Commensuration> am_generators(const RankContext& ctx, long long m);
// Transvection germs of every p-open subgroup of index at most p^n as
// pro-p commensurations; the bound p^n must not exceed 8.
std::vector<Commensuration> spn_generators(const RankContext& ctx, long long p, int n);

struct DetLemmaEntry {
  std::string name;
  long long computed = 0;
  long long predicted = 0;
};
// Determinants of letter automorphisms restricted to the cyclic kernel of
// level m, next to their closed-form predictions: inverting the second
// letter gives (-1)^m, rewriting it to its conjugate under the first gives
// (-1)^(m-1), inverting the first letter gives
// (-1)^(1 + (rank-1) * floor((m-1)/2)).
std::vector<DetLemmaEntry> det_lemma_suite(const RankContext& ctx, long long m);

struct RestrictionReport {
  bool power_formula = false;  // image of x1^m in the Schreier basis
  bool abelian_fixed = false;  // non-power basis elements fixed mod [H, H]
  bool unipotent = false;      // (M - I)^rank vanishes, so det is +1
  std::vector<std::vector<long long>> matrix;
};
// The transvection x1 -> x1 x2 restricted to the cyclic kernel of level m:
// x1^m picks up one full turn of conjugates, everything else moves by a
// commutator, and the abelianized restriction is unipotent.
RestrictionReport r12_restriction_check(const RankContext& ctx, long long m);

using Rat = boost::rational<long long>;
struct Mat2 {
  Rat a, b, c, d;  // row major

  friend Mat2 operator*(const Mat2& x, const Mat2& y) {
    return {x.a * y.a + x.b * y.c, x.a * y.b + x.b * y.d, x.c * y.a + x.d * y.c,
            x.c * y.b + x.d * y.d};
  }
  friend bool operator==(const Mat2&, const Mat2&) = default;
};
Mat2 mat2_identity();
Mat2 mat2_inverse(const Mat2& x);
Mat2 mat2_power(const Mat2& x, int k);  // k may be negative
bool mat2_projectively_equal(const Mat2& x, const Mat2& y);  // up to sign

struct ArithmeticReport {
  bool conj_shift = false;   // [[0,-1],[m,0]] carries E21(m/p) to E12(-1/p)
  bool diag_product = false; // E12(1/p) E21(-p) E12(1/p) S == diag(1/p, p)
  bool power_up = false;     // E12(p^2k) == D^-k E12(1) D^k for k <= kmax
  bool power_down = false;   // E21(p^2k) == D^k E21(1) D^-k for k <= kmax
  bool ok = false;           // all of the above
};
// Matrix identities behind the power conjugators, checked exactly over the
// rationals (projective equality; D = diag(1/p, p)).
ArithmeticReport arithmetic_identities(long long p, int kmax);

// Matrices with a, d = 1 mod ell, ell | b and m*ell | c: random samples,
// their products, and their conjugates under [[0,-1],[m,0]] stay in the
// pattern.
bool pattern_closure(long long m, long long ell, int trials, uint64_t seed);

}  // namespace commfree
