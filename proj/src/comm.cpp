#include "commfree/comm.hpp"

#include <stdexcept>
#include <utility>

namespace commfree {

namespace {

bool is_prime(long long n) {
  if (n < 2) return false;
  for (long long d = 2; d * d <= n; ++d)
    if (n % d == 0) return false;
  return true;
}

void require_same_group(const Commensuration& a, const Commensuration& b) {
  if (a.flavor != b.flavor || (a.flavor == Flavor::pro_p && a.p != b.p))
    throw std::invalid_argument("commensurations live in different groups");
  if (!(a.iso.domain.context() == b.iso.domain.context()))
    throw std::invalid_argument("commensurations over different ambient contexts");
}

Subgroup image_subgroup(const FreeHom& f, const Subgroup& h) {
  std::vector<Word> imgs;
  imgs.reserve(h.basis().size());
  for (const Word& b : h.basis()) imgs.push_back(apply_hom(f, b));
  return Subgroup::from_generators(h.context(), imgs);
}

struct DecompRec {
  bool ok = false;
  std::string reason;
  std::vector<FreeHom> factors;
};

// det -1 automorphism of the whole group whose restriction to some p-open
// subgroup has determinant +1; nullopt if the bounded search finds none.
std::optional<std::pair<FreeHom, Subgroup>> det_fix(const RankContext& ctx, long long p) {
  Subgroup F = Subgroup::whole_group(ctx);
  int d = ctx.rank();
  std::vector<FreeHom> betas;
  for (int i = 0; i < d; ++i) betas.push_back(inversion_aut(F, i));
  for (int i = 0; i < d; ++i)
    for (int j = i + 1; j < d; ++j) {
      std::vector<int> perm(static_cast<size_t>(d));
      for (int k = 0; k < d; ++k) perm[static_cast<size_t>(k)] = k;
      std::swap(perm[static_cast<size_t>(i)], perm[static_cast<size_t>(j)]);
      betas.push_back(perm_aut(F, perm));
    }
  std::vector<Subgroup> hs;
  for (int x = 0; x < d; ++x) {
    hs.push_back(standard_cyclic_kernel(ctx, x, p));
    hs.push_back(standard_cyclic_kernel(ctx, x, p * p));
  }
  for (const Subgroup& h : scq(ctx, p)) hs.push_back(h);
  for (const FreeHom& beta : betas)
    for (const Subgroup& h : hs) {
      if (!image_subgroup(beta, h).same_subgroup(h)) continue;
      FreeHom r = restrict_hom(beta, h);
      if (det_abel(r) == 1) return std::make_pair(beta, h);
    }
  return std::nullopt;
}

DecompRec decomp_rec(const RankContext& ctx, const FreeHom& f, long long p) {
  DecompRec out;
  long long idx = *f.domain.index();
  if (idx == 1) {
    if (det_abel(f) == 1) {
      out.ok = true;
      out.factors = {f};
      return out;
    }
    auto fix = det_fix(ctx, p);
    if (!fix) {
      out.reason = "no determinant-correcting restriction found";
      return out;
    }
    auto& [beta, h] = *fix;
    out.ok = true;
    // f = (f . beta^-1) . beta and the germ of beta survives restriction to h
    out.factors = {compose(f, invert_hom(beta)), restrict_hom(beta, h)};
    return out;
  }

  // index-p normal covers of both sides, first in canonical order
  auto cover = [&](const Subgroup& s) -> Subgroup {
    for (const Subgroup& n : index_p_normals(ctx, p))
      if (n.contains_subgroup(s)) return n;
    throw std::logic_error("decompose: no index-p normal cover");
  };
  Subgroup M = cover(f.domain), N = cover(f.codomain);
  FreeHom alpha = scq_transitivity(M, N, p);
  FreeHom alpha_inv = invert_hom(alpha);

  // divide the aligner out: f' = f . alpha^-1 maps alpha(U) to V inside N
  Subgroup U2 = image_subgroup(alpha, f.domain);
  std::vector<Word> imgs;
  imgs.reserve(U2.basis().size());
  for (const Word& b : U2.basis()) imgs.push_back(apply_hom(f, apply_hom(alpha_inv, b)));

  // rebase into N viewed as a free group on its own basis
  RankContext nctx = RankContext::rebased(N.rank());
  auto rebase = [&](const Word& w) {
    auto e = N.rewrite(w);
    if (!e) throw std::logic_error("decompose: word escapes the normal cover");
    return *e;
  };
  std::vector<Word> dom_list, img_list;
  for (const Word& b : U2.basis()) dom_list.push_back(rebase(b));
  for (const Word& w : imgs) img_list.push_back(rebase(w));
  Subgroup un = Subgroup::from_generators(nctx, dom_list);
  Subgroup vn = Subgroup::from_generators(nctx, img_list);
  FreeHom fn = hom_from_basis_assignment(un, dom_list, vn, img_list);

  DecompRec rec = decomp_rec(nctx, fn, p);
  if (!rec.ok) return rec;

  // lift the inner factors through the cover, then append the aligner
  out.ok = true;
  for (const FreeHom& g : rec.factors) out.factors.push_back(lift_hom(N, g));
  out.factors.push_back(alpha);
  return out;
}

}  // namespace

FreeHom lift_hom(const Subgroup& n, const FreeHom& g) {
  const RankContext& ctx = n.context();
  std::vector<Word> hb, hi;
  hb.reserve(g.domain.basis().size());
  hi.reserve(g.images.size());
  for (const Word& b : g.domain.basis()) hb.push_back(n.embed(b));
  for (const Word& w : g.images) hi.push_back(n.embed(w));
  Subgroup dom = Subgroup::from_generators(ctx, hb);
  Subgroup cod = Subgroup::from_generators(ctx, hi);
  return hom_from_basis_assignment(dom, hb, cod, hi);
}

Commensuration lift_germ(const Subgroup& n, const Commensuration& c) {
  return Commensuration{c.flavor, c.p, lift_hom(n, c.iso)};
}

Commensuration make_commensuration(Flavor flavor, long long p, const FreeHom& iso) {
  if (!iso.iso) throw std::invalid_argument("commensuration needs a certified isomorphism");
  if (!iso.domain.index() || !iso.codomain.index())
    throw std::invalid_argument("commensuration sides must have finite index");
  if (flavor == Flavor::pro_p) {
    if (!is_prime(p)) throw std::invalid_argument("pro-p flavor needs a prime p");
    if (!is_p_open(iso.domain, p).open || !is_p_open(iso.codomain, p).open)
      throw std::invalid_argument("pro-p commensuration sides must be p-open");
  }
  return Commensuration{flavor, flavor == Flavor::pro_p ? p : 0, iso};
}

Commensuration inner_commensuration(const RankContext& ctx, Flavor flavor, long long p,
                                    const Word& g) {
  Subgroup F = Subgroup::whole_group(ctx);
  std::vector<Word> imgs;
  imgs.reserve(static_cast<size_t>(ctx.rank()));
  for (int i = 0; i < ctx.rank(); ++i) imgs.push_back(conjugate(Word::letter(i), g));
  return make_commensuration(flavor, p, FreeHom{F, F, std::move(imgs), true});
}

Commensuration identity_commensuration(const RankContext& ctx, Flavor flavor, long long p) {
  return inner_commensuration(ctx, flavor, p, Word());
}

bool equivalent(const Commensuration& a, const Commensuration& b) {
  require_same_group(a, b);
  Subgroup w = intersect(a.iso.domain, b.iso.domain);
  for (const Word& x : w.basis())
    if (!(apply_hom(a.iso, x) == apply_hom(b.iso, x))) return false;
  return true;
}

Commensuration multiply(const Commensuration& c2, const Commensuration& c1) {
  require_same_group(c1, c2);
  Subgroup w = intersect(c1.iso.codomain, c2.iso.domain);
  FreeHom back = invert_hom(c1.iso);
  std::vector<Word> dom_gens;
  dom_gens.reserve(w.basis().size());
  for (const Word& b : w.basis()) dom_gens.push_back(apply_hom(back, b));
  Subgroup dom = Subgroup::from_generators(w.context(), dom_gens);
  std::vector<Word> imgs;
  imgs.reserve(dom.basis().size());
  for (const Word& b : dom.basis())
    imgs.push_back(apply_hom(c2.iso, apply_hom(c1.iso, b)));
  Subgroup cod = Subgroup::from_generators(w.context(), imgs);
  return Commensuration{c1.flavor, c1.p, FreeHom{std::move(dom), std::move(cod), std::move(imgs), true}};
}

Commensuration invert_commensuration(const Commensuration& c) {
  return Commensuration{c.flavor, c.p, invert_hom(c.iso)};
}

Subgroup conj_subgroup(const Commensuration& c, const Subgroup& h) {
  Subgroup w = intersect(h, c.iso.domain);
  std::vector<Word> imgs;
  imgs.reserve(w.basis().size());
  for (const Word& b : w.basis()) imgs.push_back(apply_hom(c.iso, b));
  return Subgroup::from_generators(h.context(), imgs);
}

FreeHom scq_transitivity(const Subgroup& h1, const Subgroup& h2, long long m) {
  const RankContext& ctx = h1.context();
  Subgroup F = Subgroup::whole_group(ctx);
  auto t1 = scq_recover_vector(h1, m), t2 = scq_recover_vector(h2, m);
  if (!t1 || !t2)
    throw std::invalid_argument("scq_transitivity: not a cyclic-quotient kernel of that order");

  // Reduce the vector to (unit, 0, ..., 0). Each move t_i += k*t_j is the
  // action of b_i -> b_i b_j^-k on defining characters; all have det +1.
  auto reduce = [&](std::vector<long long> t) -> FreeHom {
    FreeHom acc = identity_hom(F);
    auto move = [&](int i, int j, long long k) {
      if (k == 0) return;
      std::vector<Word> imgs = F.basis();
      imgs[static_cast<size_t>(i)] =
          imgs[static_cast<size_t>(i)] * pow(F.basis()[static_cast<size_t>(j)], -k);
      acc = compose(FreeHom{F, F, std::move(imgs), true}, acc);
      t[static_cast<size_t>(i)] += k * t[static_cast<size_t>(j)];
    };
    for (size_t j = 1; j < t.size(); ++j) {
      while (t[j] != 0) {
        long long q = t[0] / t[j];
        move(0, static_cast<int>(j), -q);
        if (t[0] == 0) {
          move(0, static_cast<int>(j), 1);
          move(static_cast<int>(j), 0, -1);
        } else {
          move(static_cast<int>(j), 0, -(t[j] / t[0]));
        }
      }
    }
    return acc;
  };
  FreeHom b1 = reduce(*t1), b2 = reduce(*t2);
  FreeHom alpha = compose(invert_hom(b2), b1);
  if (!image_subgroup(alpha, h1).same_subgroup(h2))
    throw std::logic_error("scq_transitivity: reduction failed to align the kernels");
  return alpha;
}

PDecomposition decompose_p(const Commensuration& c) {
  if (c.flavor != Flavor::pro_p)
    throw std::invalid_argument("decompose_p: pro-p commensurations only");
  const RankContext& ctx = c.iso.domain.context();
  DecompRec rec = decomp_rec(ctx, c.iso, c.p);
  PDecomposition out;
  out.ok = rec.ok;
  out.reason = rec.reason;
  if (!rec.ok) return out;
  out.factors.reserve(rec.factors.size());
  for (FreeHom& f : rec.factors)
    out.factors.push_back(Commensuration{Flavor::pro_p, c.p, std::move(f)});
  Commensuration prod = out.factors.front();
  for (size_t i = 1; i < out.factors.size(); ++i) prod = multiply(prod, out.factors[i]);
  if (!equivalent(prod, c))
    throw std::logic_error("decompose_p: factors fail to recompose");
  return out;
}

}  // namespace commfree
