#include "commfree/families.hpp"

#include <random>
#include <stdexcept>
#include <utility>

namespace commfree {

namespace {

void add_transvection_germs(std::vector<Commensuration>& out, const Subgroup& s,
                            Flavor flavor, long long p) {
  const int r = s.rank();
  for (int i = 0; i < r; ++i)
    for (int j = 0; j < r; ++j) {
      if (i == j) continue;
      out.push_back(make_commensuration(flavor, p, nielsen_right(s, i, j)));
      out.push_back(make_commensuration(flavor, p, nielsen_left(s, i, j)));
    }
}

void add_aut_extras(std::vector<Commensuration>& out, const Subgroup& s) {
  const int r = s.rank();
  for (int i = 0; i < r; ++i)
    out.push_back(make_commensuration(Flavor::profinite, 0, inversion_aut(s, i)));
  for (int i = 0; i + 1 < r; ++i) {
    std::vector<int> perm(static_cast<size_t>(r));
    for (int j = 0; j < r; ++j) perm[static_cast<size_t>(j)] = j;
    std::swap(perm[static_cast<size_t>(i)], perm[static_cast<size_t>(i) + 1]);
    out.push_back(make_commensuration(Flavor::profinite, 0, perm_aut(s, perm)));
  }
}

}  // namespace

std::vector<Commensuration> sm_generators(const RankContext& ctx, long long m) {
  std::vector<Commensuration> out;
  add_transvection_germs(out, Subgroup::whole_group(ctx), Flavor::profinite, 0);
  for (const Subgroup& h : scq(ctx, m))
    add_transvection_germs(out, h, Flavor::profinite, 0);
  return out;
}

std::vector<Commensuration> am_generators(const RankContext& ctx, long long m) {
  std::vector<Commensuration> out;
  Subgroup whole = Subgroup::whole_group(ctx);
  add_transvection_germs(out, whole, Flavor::profinite, 0);
  add_aut_extras(out, whole);
  for (const Subgroup& h : scq(ctx, m)) {
    add_transvection_germs(out, h, Flavor::profinite, 0);
    add_aut_extras(out, h);
  }
  return out;
}

std::vector<Commensuration> spn_generators(const RankContext& ctx, long long p, int n) {
  long long bound = 1;
  for (int i = 0; i < n; ++i) bound *= p;
  if (bound > 8) throw std::invalid_argument("subgroup index bound limited to 8");
  std::vector<Commensuration> out;
  enumerate_p_open(ctx, p, bound, [&](const Subgroup& u) {
    add_transvection_germs(out, u, Flavor::pro_p, p);
  });
  return out;
}

std::vector<DetLemmaEntry> det_lemma_suite(const RankContext& ctx, long long m) {
  if (ctx.rank() < 2) throw std::invalid_argument("determinant table needs rank >= 2");
  if (m < 2) throw std::invalid_argument("determinant table needs level >= 2");
  Subgroup whole = Subgroup::whole_group(ctx);
  Subgroup h = standard_cyclic_kernel(ctx, 0, m);
  const long long d = ctx.rank();
  auto sign_pow = [](long long e) { return e % 2 == 0 ? 1LL : -1LL; };

  std::vector<DetLemmaEntry> out;
  out.push_back({"invert-second-letter", det_abel(restrict_hom(inversion_aut(whole, 1), h)),
                 sign_pow(m)});

  std::vector<Word> gamma_imgs;
  for (int i = 0; i < ctx.rank(); ++i) gamma_imgs.push_back(Word::letter(i));
  gamma_imgs[1] = conjugate(Word::letter(1), Word::letter(0));
  FreeHom gamma{whole, whole, std::move(gamma_imgs), true};
  out.push_back(
      {"conjugate-second-letter", det_abel(restrict_hom(gamma, h)), sign_pow(m - 1)});

  out.push_back({"invert-first-letter", det_abel(restrict_hom(inversion_aut(whole, 0), h)),
                 sign_pow(1 + (d - 1) * ((m - 1) / 2))});
  return out;
}

RestrictionReport r12_restriction_check(const RankContext& ctx, long long m) {
  if (ctx.rank() < 2) throw std::invalid_argument("restriction check needs rank >= 2");
  if (m < 1) throw std::invalid_argument("restriction check needs level >= 1");
  Subgroup h = standard_cyclic_kernel(ctx, 0, m);
  FreeHom r12 = nielsen_right(Subgroup::whole_group(ctx), 0, 1);
  FreeHom res = restrict_hom(r12, h);
  RestrictionReport out;

  // (x1 x2)^m spelled in the conjugates z_j = x1^j x2 x1^-j
  Word x1m = pow(Word::letter(0), m);
  auto z = [&](long long j) { return conjugate(Word::letter(1), pow(Word::letter(0), j)); };
  Word expected;
  for (long long j = 1; j < m; ++j) expected = expected * z(j);
  expected = expected * x1m * z(0);
  out.power_formula = apply_hom(r12, x1m) == expected;

  out.abelian_fixed = true;
  const int rk = h.rank();
  for (const Word& b : h.basis()) {
    if (b == x1m) continue;
    Word ib = *h.rewrite(apply_hom(res, b));
    Word rb = *h.rewrite(b);
    if (abelianize(rk, ib) != abelianize(rk, rb)) out.abelian_fixed = false;
  }

  out.matrix = abel_matrix(res);
  std::vector<std::vector<long long>> n = out.matrix;
  for (int i = 0; i < rk; ++i) n[static_cast<size_t>(i)][static_cast<size_t>(i)] -= 1;
  auto mat_mul = [&](const std::vector<std::vector<long long>>& x,
                     const std::vector<std::vector<long long>>& y) {
    std::vector<std::vector<long long>> r(static_cast<size_t>(rk),
                                          std::vector<long long>(static_cast<size_t>(rk), 0));
    for (int i = 0; i < rk; ++i)
      for (int k = 0; k < rk; ++k) {
        long long v = x[static_cast<size_t>(i)][static_cast<size_t>(k)];
        if (v == 0) continue;
        for (int j = 0; j < rk; ++j)
          r[static_cast<size_t>(i)][static_cast<size_t>(j)] +=
              v * y[static_cast<size_t>(k)][static_cast<size_t>(j)];
      }
    return r;
  };
  std::vector<std::vector<long long>> acc = n;
  for (int s = 1; s < rk; ++s) acc = mat_mul(acc, n);
  out.unipotent = true;
  for (const auto& row : acc)
    for (long long v : row)
      if (v != 0) out.unipotent = false;
  return out;
}

Mat2 mat2_identity() { return {Rat(1), Rat(0), Rat(0), Rat(1)}; }

Mat2 mat2_inverse(const Mat2& x) {
  Rat det = x.a * x.d - x.b * x.c;
  if (det == Rat(0)) throw std::invalid_argument("singular matrix");
  return {x.d / det, -x.b / det, -x.c / det, x.a / det};
}

Mat2 mat2_power(const Mat2& x, int k) {
  Mat2 base = k < 0 ? mat2_inverse(x) : x;
  int e = k < 0 ? -k : k;
  Mat2 r = mat2_identity();
  for (int i = 0; i < e; ++i) r = r * base;
  return r;
}

bool mat2_projectively_equal(const Mat2& x, const Mat2& y) {
  Mat2 neg{-y.a, -y.b, -y.c, -y.d};
  return x == y || x == neg;
}

ArithmeticReport arithmetic_identities(long long p, int kmax) {
  if (p < 2 || kmax < 1) throw std::invalid_argument("need p >= 2 and kmax >= 1");
  auto e12 = [](Rat t) { return Mat2{Rat(1), t, Rat(0), Rat(1)}; };
  auto e21 = [](Rat t) { return Mat2{Rat(1), Rat(0), t, Rat(1)}; };
  ArithmeticReport out;

  out.conj_shift = true;
  for (long long m : {1LL, p, p * p, 2 * p}) {
    Mat2 dm{Rat(0), Rat(-1), Rat(m), Rat(0)};
    Mat2 lhs = dm * e21(Rat(m, p)) * mat2_inverse(dm);
    if (!mat2_projectively_equal(lhs, e12(Rat(-1, p)))) out.conj_shift = false;
  }

  Mat2 s{Rat(0), Rat(-1), Rat(1), Rat(0)};
  Mat2 diag{Rat(1, p), Rat(0), Rat(0), Rat(p)};
  out.diag_product =
      mat2_projectively_equal(e12(Rat(1, p)) * e21(Rat(-p)) * e12(Rat(1, p)) * s, diag);

  out.power_up = out.power_down = true;
  for (int k = 1; k <= kmax; ++k) {
    long long q = 1;
    for (int i = 0; i < 2 * k; ++i) q *= p;
    Mat2 up = mat2_power(diag, -k) * e12(Rat(1)) * mat2_power(diag, k);
    Mat2 down = mat2_power(diag, k) * e21(Rat(1)) * mat2_power(diag, -k);
    if (!mat2_projectively_equal(up, e12(Rat(q)))) out.power_up = false;
    if (!mat2_projectively_equal(down, e21(Rat(q)))) out.power_down = false;
  }
  out.ok = out.conj_shift && out.diag_product && out.power_up && out.power_down;
  return out;
}

bool pattern_closure(long long m, long long ell, int trials, uint64_t seed) {
  if (m < 1 || ell < 1 || trials < 1) throw std::invalid_argument("bad pattern parameters");
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<long long> coef(-4, 4);
  auto sample = [&] {
    return Mat2{Rat(1 + ell * coef(rng)), Rat(ell * coef(rng)), Rat(m * ell * coef(rng)),
                Rat(1 + ell * coef(rng))};
  };
  auto in_pattern = [&](const Mat2& x) {
    for (const Rat& v : {x.a, x.b, x.c, x.d})
      if (v.denominator() != 1) return false;
    auto div = [](long long v, long long q) { return v % q == 0; };
    return div(x.a.numerator() - 1, ell) && div(x.d.numerator() - 1, ell) &&
           div(x.b.numerator(), ell) && div(x.c.numerator(), m * ell);
  };
  Mat2 dm{Rat(0), Rat(-1), Rat(m), Rat(0)};
  for (int t = 0; t < trials; ++t) {
    Mat2 x = sample(), y = sample();
    if (!in_pattern(x) || !in_pattern(y)) return false;
    if (!in_pattern(x * y)) return false;
    if (!in_pattern(dm * x * mat2_inverse(dm))) return false;
    if (!in_pattern(mat2_inverse(dm) * y * dm)) return false;
  }
  return true;
}

}  // namespace commfree
