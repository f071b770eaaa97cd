#include "commfree/conjugacy.hpp"

#include <cstdint>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace commfree {

namespace {

FreeHom compose_sequence(const Subgroup& s, const std::vector<FreeHom>& seq) {
  FreeHom acc = identity_hom(s);
  for (const FreeHom& f : seq) acc = compose(f, acc);
  return acc;
}

// c i(g) c^-1 == i(h), where i(g) is the inner germ of conjugation by g
bool conjugates_inner(const Commensuration& c, const Word& g, const Word& h) {
  const RankContext& ctx = c.iso.domain.context();
  Commensuration ig = inner_commensuration(ctx, c.flavor, c.p, g);
  Commensuration ih = inner_commensuration(ctx, c.flavor, c.p, h);
  return equivalent(multiply(multiply(c, ig), invert_commensuration(c)), ih);
}

// Breadth-first walk over p-open subgroups in index order, restricted to
// those satisfying keep. Any chain of index-p steps whose endpoint satisfies
// keep passes through kept subgroups only (the filters used here are upward
// closed), so the restriction loses nothing. visit returns true to stop.
template <class Keep, class Visit>
void p_open_walk(const RankContext& ctx, long long p, long long max_index,
                 const Keep& keep, const Visit& visit) {
  std::vector<Subgroup> frontier{Subgroup::whole_group(ctx)};
  std::set<std::string> seen{frontier.front().graph().serialize()};
  while (!frontier.empty()) {
    for (const Subgroup& u : frontier)
      if (visit(u)) return;
    std::vector<Subgroup> next;
    for (const Subgroup& u : frontier) {
      if (*u.index() * p > max_index) continue;
      RankContext uctx = RankContext::rebased(u.rank());
      for (const Subgroup& n : index_p_normals(uctx, p)) {
        std::vector<Word> gens;
        gens.reserve(n.basis().size());
        for (const Word& b : n.basis()) gens.push_back(u.embed(b));
        Subgroup cand = Subgroup::from_generators(ctx, gens);
        if (!keep(cand)) continue;
        if (!seen.insert(cand.graph().serialize()).second) continue;
        next.push_back(cand);
      }
    }
    frontier = std::move(next);
  }
}

// Germ with c i(v^k) c^-1 = i(v^(pk)) for every k; v must be primitive in
// the p-open realization u.
Commensuration root_power_germ(const RankContext& ctx, const Subgroup& u, const Word& v,
                               long long p) {
  if (*u.index() == 1) return power_conjugator(ctx, Flavor::pro_p, p, v, p);
  RankContext uctx = RankContext::rebased(u.rank());
  std::optional<Word> vr = u.rewrite(v);
  if (!vr) throw std::logic_error("realization does not contain the root");
  return lift_germ(u, power_conjugator(uctx, Flavor::pro_p, p, *vr, p));
}

// Germ taking i(w) to i(first letter). Some basis letter fails to commute
// with a nontrivial w (the centralizer is cyclic); a rank-two subgroup on
// the pair is completed to finite index with {x, w} at the front of its
// basis, where swapping the two carries i(w) to i(x).
Commensuration letter_normalizer(const RankContext& ctx, const Word& w) {
  Subgroup whole = Subgroup::whole_group(ctx);
  if (w == Word::letter(0)) return identity_commensuration(ctx, Flavor::profinite, 0);
  std::optional<Word> x;
  for (int i = 0; i < ctx.rank() && !x; ++i) {
    Word xi = Word::letter(i);
    if (!(xi * w == w * xi)) x = xi;
  }
  if (!x) {
    Word ba = Word::letter(1) * Word::letter(0);
    if (!(ba * w == w * ba)) x = ba;
  }
  if (!x) throw std::invalid_argument("element commutes with the probe set");
  Subgroup c = Subgroup::from_generators(ctx, {*x, w});
  if (c.rank() != 2) throw std::logic_error("non-commuting pair of rank below two");
  HallCompletion hc = hall_completion(c);
  std::vector<Word> before{*x, w}, after{w, *x};
  for (size_t i = 2; i < hc.extended_basis.size(); ++i) {
    before.push_back(hc.extended_basis[i]);
    after.push_back(hc.extended_basis[i]);
  }
  FreeHom sigma = hom_from_basis_assignment(hc.overgroup, before, hc.overgroup, after);
  Commensuration germ = make_commensuration(Flavor::profinite, 0, sigma);
  if (x->length() == 1 && !code_is_inverse(x->code(0))) {
    int i = code_gen(x->code(0));
    if (i == 0) return germ;
    std::vector<int> perm(static_cast<size_t>(ctx.rank()));
    for (int j = 0; j < ctx.rank(); ++j) perm[static_cast<size_t>(j)] = j;
    std::swap(perm[0], perm[static_cast<size_t>(i)]);
    Commensuration swap0 = make_commensuration(Flavor::profinite, 0, perm_aut(whole, perm));
    return multiply(swap0, germ);
  }
  return multiply(letter_normalizer(ctx, *x), germ);  // probe word; one level deep
}

struct FactorPresentation {
  bool refused = false;
  std::optional<Subgroup> k;  // finite-index overgroup with h as a free factor
  std::vector<Word> hpart;    // basis list of h
  std::vector<Word> comp;     // completes hpart to a basis of k
};

FactorPresentation present_free_factor(const Subgroup& h, Flavor flavor, long long p,
                                       long long max_index) {
  const RankContext& ctx = h.context();
  FactorPresentation out;
  if (flavor == Flavor::profinite) {
    HallCompletion hc = hall_completion(h);
    size_t r = h.basis().size();
    out.k = hc.overgroup;
    out.hpart.assign(hc.extended_basis.begin(),
                     hc.extended_basis.begin() + static_cast<long>(r));
    out.comp.assign(hc.extended_basis.begin() + static_cast<long>(r),
                    hc.extended_basis.end());
    return out;
  }
  p_open_walk(
      ctx, p, max_index,
      [&](const Subgroup& s) { return s.contains_subgroup(h); },
      [&](const Subgroup& u) {
        if (u.rank() > 6) return false;  // free factor test capped below
        RankContext uctx = RankContext::rebased(u.rank());
        std::vector<Word> hw;
        hw.reserve(h.basis().size());
        for (const Word& b : h.basis()) hw.push_back(*u.rewrite(b));
        Subgroup hu = Subgroup::from_generators(uctx, hw);
        std::optional<FreeHom> wit = free_factor_witness(hu);
        if (!wit) return false;
        FreeHom back = invert_hom(*wit);
        std::vector<Word> rim;
        rim.reserve(hu.basis().size());
        for (const Word& b : hu.basis()) rim.push_back(apply_hom(*wit, b));
        Subgroup rose = Subgroup::from_generators(uctx, rim);
        std::vector<Word> first, rest;
        for (int g = 0; g < uctx.rank(); ++g) {
          Word lw = Word::letter(g);
          (rose.contains(lw) ? first : rest).push_back(apply_hom(back, lw));
        }
        if (first.size() != hu.basis().size())
          throw std::logic_error("rose rank disagrees with the subgroup rank");
        out.k = u;
        for (const Word& x : first) out.hpart.push_back(u.embed(x));
        for (const Word& x : rest) out.comp.push_back(u.embed(x));
        return true;
      });
  out.refused = !out.k.has_value();
  return out;
}

// Basis of the kernel of c1 -> 1, other listed generators -> 0 into Z/m,
// with the h-part in front: the subgroup it generates contains <hpart>
// entirely and has index m in <hpart ++ comp>.
std::vector<Word> layer_basis(const std::vector<Word>& hpart, const std::vector<Word>& comp,
                              long long m) {
  if (comp.empty()) throw std::logic_error("free factor complement is empty");
  const Word& c1 = comp.front();
  std::vector<Word> b = hpart;
  b.push_back(pow(c1, m));
  for (long long j = 1; j < m; ++j)
    for (const Word& ht : hpart) b.push_back(conjugate(ht, pow(c1, j)));
  for (size_t k = 1; k < comp.size(); ++k)
    for (long long j = 0; j < m; ++j) b.push_back(conjugate(comp[k], pow(c1, j)));
  return b;
}

}  // namespace

long long dp_invariant(const Word& w, long long p) {
  if (w.trivial()) throw std::invalid_argument("dp invariant of the identity");
  if (p < 2) throw std::invalid_argument("dp invariant needs p >= 2");
  long long m = maximal_root(w).second;
  while (m % p == 0) m /= p;
  return m;
}

PrimitiveRealization commp_primitive_realization(const RankContext& ctx, const Word& w,
                                                 long long p, long long max_index) {
  if (w.trivial()) throw std::invalid_argument("realization of the identity");
  PrimitiveRealization out;
  p_open_walk(
      ctx, p, max_index,
      [&](const Subgroup& s) { return s.contains(w); },
      [&](const Subgroup& u) {
        if (u.rank() > 12) return false;
        PrimitivityResult pr = whitehead_is_primitive(u, w);
        if (!pr.primitive) return false;
        out.found = true;
        out.u = u;
        return true;
      });
  out.refused = !out.found;
  return out;
}

Commensuration power_conjugator(const RankContext& ctx, Flavor flavor, long long p,
                                const Word& x, long long m) {
  if (ctx.rank() < 2) throw std::invalid_argument("power conjugator needs ambient rank >= 2");
  if (m < 1) throw std::invalid_argument("power conjugator needs a positive exponent");
  Subgroup whole = Subgroup::whole_group(ctx);
  PrimitivityResult pr = whitehead_is_primitive(whole, x);
  if (!pr.primitive) throw std::invalid_argument("power conjugator needs a primitive element");
  FreeHom omega = compose_sequence(whole, pr.sequence);
  if (!(apply_hom(omega, x) == Word::letter(0)))
    throw std::logic_error("primitivity sequence does not normalize the element");

  // first letter to second with a sign flip; determinant stays +1
  std::vector<Word> theta_imgs{Word::letter(1), inverse(Word::letter(0))};
  for (int i = 2; i < ctx.rank(); ++i) theta_imgs.push_back(Word::letter(i));
  FreeHom theta{whole, whole, std::move(theta_imgs), true};

  // inside the cyclic kernel, conjugation by the second letter and by the
  // m-th power of the first are both inner; swapping those two basis
  // elements (one inverted, keeping the determinant) intertwines them
  Subgroup h = standard_cyclic_kernel(ctx, 0, m);
  const std::vector<Word>& hb = h.basis();
  Word y = pow(Word::letter(0), m), z = Word::letter(1);
  auto pos_of = [&](const Word& t) -> size_t {
    for (size_t i = 0; i < hb.size(); ++i)
      if (hb[i] == t) return i;
    throw std::logic_error("cyclic kernel basis misses an expected element");
  };
  std::vector<Word> rho_imgs = hb;
  rho_imgs[pos_of(z)] = y;
  rho_imgs[pos_of(y)] = inverse(z);
  FreeHom rho{h, h, std::move(rho_imgs), true};

  Commensuration cw = make_commensuration(flavor, p, omega);
  Commensuration ct = make_commensuration(flavor, p, theta);
  Commensuration cr = make_commensuration(flavor, p, rho);
  Commensuration acc = multiply(invert_commensuration(cw), cr);
  acc = multiply(acc, ct);
  return multiply(acc, cw);
}

WitnessResult bs_witness(const RankContext& ctx, const Word& w, long long p,
                         long long max_index) {
  if (w.trivial()) throw std::invalid_argument("power witness for the identity");
  WitnessResult out;
  Word root = maximal_root(w).first;
  PrimitiveRealization r = commp_primitive_realization(ctx, root, p, max_index);
  if (!r.found) {
    out.refused = true;
    return out;
  }
  Commensuration c = root_power_germ(ctx, *r.u, root, p);
  if (!conjugates_inner(c, w, pow(w, p)))
    throw std::logic_error("power witness failed verification");
  out.c = c;
  return out;
}

Commensuration comm_conjugator(const RankContext& ctx, const Word& g, const Word& h) {
  if (g.trivial() || h.trivial())
    throw std::invalid_argument("inner germ of the identity is central");
  if (ctx.rank() < 2) throw std::invalid_argument("conjugator needs ambient rank >= 2");
  Commensuration psi = multiply(invert_commensuration(letter_normalizer(ctx, h)),
                                letter_normalizer(ctx, g));
  if (!conjugates_inner(psi, g, h)) throw std::logic_error("conjugator failed verification");
  return psi;
}

CommpConjugacy commp_conjugator(const RankContext& ctx, const Word& g, const Word& h,
                                long long p, long long max_index) {
  if (g.trivial() || h.trivial())
    throw std::invalid_argument("inner germ of the identity is central");
  if (ctx.rank() < 2) throw std::invalid_argument("conjugator needs ambient rank >= 2");
  CommpConjugacy out;
  auto rg = maximal_root(g);
  auto rh = maximal_root(h);
  long long dg = rg.second, eg = 0, dh = rh.second, eh = 0;
  while (dg % p == 0) {
    dg /= p;
    ++eg;
  }
  while (dh % p == 0) {
    dh /= p;
    ++eh;
  }
  out.dp_g = dg;
  out.dp_h = dh;
  if (dg != dh) return out;  // the invariant separates the germs

  // carry i(root^(d p^e)) to the reference germ i(x2^d): undo the power
  // conjugator e times, then move the realization onto the standard cyclic
  // kernel of equal index with the root landing on the letter x2
  auto route = [&](const Word& root, long long e) -> std::optional<Commensuration> {
    PrimitiveRealization r = commp_primitive_realization(ctx, root, p, max_index);
    if (!r.found) return std::nullopt;
    const Subgroup& u = *r.u;
    Commensuration acc = identity_commensuration(ctx, Flavor::pro_p, p);
    if (e > 0) {
      Commensuration down = invert_commensuration(root_power_germ(ctx, u, root, p));
      for (long long i = 0; i < e; ++i) acc = multiply(down, acc);
    }
    PrimitivityResult pr = whitehead_is_primitive(u, root);
    if (!pr.primitive) throw std::logic_error("realization lost primitivity");
    FreeHom sigma = compose_sequence(u, pr.sequence);
    long long idx = *u.index();
    Subgroup w = idx == 1 ? Subgroup::whole_group(ctx) : standard_cyclic_kernel(ctx, 0, idx);
    Word target = Word::letter(1);
    std::vector<Word> reordered{target};
    bool hit = false;
    for (const Word& b : w.basis()) {
      if (!hit && b == target) {
        hit = true;
        continue;
      }
      reordered.push_back(b);
    }
    if (!hit) throw std::logic_error("cyclic kernel basis misses the free letter");
    FreeHom tau{u, w, std::move(reordered), true};
    Commensuration carry = make_commensuration(Flavor::pro_p, p, compose(tau, sigma));
    return multiply(carry, acc);
  };

  std::optional<Commensuration> ag = route(rg.first, eg);
  std::optional<Commensuration> ah = route(rh.first, eh);
  if (!ag || !ah) {
    out.refused = true;
    return out;
  }
  Commensuration psi = multiply(invert_commensuration(*ah), *ag);
  if (!conjugates_inner(psi, g, h)) throw std::logic_error("conjugator failed verification");
  out.possible = true;
  out.c = psi;
  return out;
}

std::optional<FreeHom> free_factor_witness(const Subgroup& h) {
  const RankContext& ctx = h.context();
  const int d = ctx.rank();
  if (d > 6) throw std::invalid_argument("free factor test limited to ambient rank 6");
  Subgroup whole = Subgroup::whole_group(ctx);
  FreeHom acc = identity_hom(whole);
  Subgroup cur = h;

  // images of the letters under the Whitehead map with multiplier code a:
  // gen(a) is fixed; another letter gains the multiplier in front when its
  // positive code is in the set and the inverse behind when its negative is
  auto whitehead_images = [&](int32_t a, uint32_t mask, const std::vector<int32_t>& others) {
    Word wa = Word::from_codes({a});
    std::set<int32_t> in_set;
    for (size_t k = 0; k < others.size(); ++k)
      if (mask >> k & 1u) in_set.insert(others[k]);
    std::vector<Word> imgs;
    imgs.reserve(static_cast<size_t>(d));
    for (int g = 0; g < d; ++g) {
      Word im = Word::letter(g);
      if (g != code_gen(a)) {
        if (in_set.count(letter_code(g, false))) im = wa * im;
        if (in_set.count(letter_code(g, true))) im = im * inverse(wa);
      }
      imgs.push_back(im);
    }
    return imgs;
  };

  // greedy descent on the vertex count of the core graph; a non-minimal
  // graph always admits a strictly reducing move, and the subgroup is a free
  // factor exactly when the minimum is a wedge of loops
  bool progressed = true;
  while (progressed && cur.graph().n > 1) {
    progressed = false;
    for (int32_t a = 0; a < 2 * d && !progressed; ++a) {
      std::vector<int32_t> others;
      for (int32_t c = 0; c < 2 * d; ++c)
        if (code_gen(c) != code_gen(a)) others.push_back(c);
      for (uint32_t mask = 1; mask < (1u << others.size()) && !progressed; ++mask) {
        std::vector<Word> imgs = whitehead_images(a, mask, others);
        std::vector<Word> gens;
        gens.reserve(cur.basis().size());
        for (const Word& b : cur.basis()) gens.push_back(substitute(imgs, b));
        Subgroup cand = Subgroup::from_generators(ctx, gens);
        if (cand.graph().n < cur.graph().n) {
          cur = cand;
          acc = compose(FreeHom{whole, whole, imgs, true}, acc);
          progressed = true;
        }
      }
    }
  }
  if (cur.graph().n != 1) return std::nullopt;
  return acc;
}

SubgroupConjugacy subgroup_conjugator(const Subgroup& h1, const Subgroup& h2, Flavor flavor,
                                      long long p, long long max_index) {
  if (!(h1.context() == h2.context()))
    throw std::invalid_argument("subgroups live over different ambient groups");
  const RankContext& ctx = h1.context();
  SubgroupConjugacy out;
  if (h1.rank() == 0 || h2.rank() == 0) {
    if (h1.rank() == 0 && h2.rank() == 0) {
      out.possible = true;
      out.c = identity_commensuration(ctx, flavor, p);
    } else {
      out.reason = "only one side is trivial";
    }
    return out;
  }
  if (h1.rank() != h2.rank()) {
    out.reason = "rank mismatch";
    return out;
  }
  bool open1 = h1.index().has_value(), open2 = h2.index().has_value();
  if (open1 != open2) {
    out.reason = "only one side has finite index";
    return out;
  }
  if (open1) {
    // the image of a finite-index subgroup under a germ keeps finite index,
    // and overgroups of p-open subgroups are p-open, so these are the only
    // finite-index pairs that can match
    if (flavor == Flavor::pro_p && (!is_p_open(h1, p).open || !is_p_open(h2, p).open)) {
      out.reason = "finite-index side is not p-open";
      return out;
    }
    out.c = make_commensuration(flavor, p, FreeHom{h1, h2, h2.basis(), true});
    out.possible = true;
  } else {
    FactorPresentation f1 = present_free_factor(h1, flavor, p, max_index);
    FactorPresentation f2 = present_free_factor(h2, flavor, p, max_index);
    if (f1.refused || f2.refused) {
      out.refused = true;
      out.reason = "no free-factor presentation within the index bound";
      return out;
    }
    // drop both overgroups to subgroups of one common index, keeping each
    // h_i inside and at the front of an explicit basis
    Subgroup j = intersect(*f1.k, *f2.k);
    long long m1 = *j.index() / *f1.k->index();
    long long m2 = *j.index() / *f2.k->index();
    std::vector<Word> b1 = layer_basis(f1.hpart, f1.comp, m1);
    std::vector<Word> b2 = layer_basis(f2.hpart, f2.comp, m2);
    if (b1.size() != b2.size()) throw std::logic_error("layer bases disagree in size");
    Subgroup l1 = Subgroup::from_generators(ctx, b1);
    Subgroup l2 = Subgroup::from_generators(ctx, b2);
    out.c = make_commensuration(flavor, p, hom_from_basis_assignment(l1, b1, l2, b2));
    out.possible = true;
  }
  Subgroup moved = conj_subgroup(*out.c, h1);
  if (!moved.same_subgroup(intersect(h2, out.c->iso.codomain)))
    throw std::logic_error("subgroup conjugator failed verification");
  return out;
}

}  // namespace commfree
