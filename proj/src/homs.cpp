#include "commfree/homs.hpp"

#include <cstdint>
#include <map>
#include <stdexcept>
#include <utility>

namespace commfree {

namespace {

// Folding of the graph of <gens> with each dart carrying a word over the
// generator alphabet. Invariant: for a closed path at the base, substituting
// gens into the accumulated decoration recovers the path label. Hanging trees
// are kept; membership traces fail on them anyway.
class ExpressFolder {
 public:
  explicit ExpressFolder(const std::vector<Word>& gens) {
    make_vertex();  // base 0
    for (size_t i = 0; i < gens.size(); ++i) {
      const Word& w = gens[i];
      if (w.trivial()) continue;
      int prev = 0;
      for (int t = 0; t < w.length(); ++t) {
        int next = (t + 1 == w.length()) ? 0 : make_vertex();
        Word dec = (t == 0) ? Word::letter(static_cast<int>(i), code_is_inverse(w.code(t)))
                            : Word();
        if (!code_is_inverse(w.code(t))) {
          darts_.push_back({prev, code_gen(w.code(t)), next, std::move(dec), true});
        } else {
          darts_.push_back({next, code_gen(w.code(t)), prev, std::move(dec), true});
        }
        prev = next;
      }
    }
    fold();
    index();
  }

  // Decoration word of a path reading w from the base back to the base.
  std::optional<Word> trace(const Word& w) const {
    int cur = find_const(0);
    Word acc;
    for (int32_t c : w.codes()) {
      auto it = adj_.find({cur, c});
      if (it == adj_.end()) return std::nullopt;
      acc = acc * it->second.second;
      cur = it->second.first;
    }
    if (cur != find_const(0)) return std::nullopt;
    return acc;
  }

 private:
  struct Dart {
    int u, g, v;
    Word dec;
    bool alive;
  };
  std::vector<Dart> darts_;
  std::vector<int> parent_;
  std::map<std::pair<int, int>, std::pair<int, Word>> adj_;

  int make_vertex() {
    parent_.push_back(static_cast<int>(parent_.size()));
    return static_cast<int>(parent_.size()) - 1;
  }
  int find(int v) {
    while (parent_[v] != v) {
      parent_[v] = parent_[parent_[v]];
      v = parent_[v];
    }
    return v;
  }
  int find_const(int v) const {
    while (parent_[v] != v) v = parent_[v];
    return v;
  }

  void fold() {
    bool changed = true;
    while (changed) {
      changed = false;
      std::map<std::pair<int, int>, std::pair<int, int>> seen;  // -> (dart, side)
      for (size_t idx = 0; idx < darts_.size() && !changed; ++idx) {
        if (!darts_[idx].alive) continue;
        const Dart& d = darts_[idx];
        int ends[2] = {find(d.u), find(d.v)};
        for (int side = 0; side < 2; ++side) {
          auto key = std::make_pair(ends[side], 2 * d.g + side);
          auto [it, fresh] = seen.emplace(key, std::make_pair(static_cast<int>(idx), side));
          if (fresh) continue;
          merge(it->second.first, it->second.second, static_cast<int>(idx), side);
          changed = true;
          break;
        }
      }
    }
  }

  // Two darts leave the same vertex with the same oriented label; the sides
  // give their orientations there (0 = forward). Loops make the side
  // essential: endpoints alone cannot tell the orientations apart.
  void merge(int i1, int side1, int i2, int side2) {
    auto oriented = [&](const Dart& d, int side) -> std::pair<int, Word> {
      if (side == 0) return {find(d.v), d.dec};
      return {find(d.u), inverse(d.dec)};
    };
    auto [v1, d1] = oriented(darts_[i1], side1);
    auto [v2, d2] = oriented(darts_[i2], side2);
    // Compensation is exact for paths transiting the dying vertex but shifts
    // paths terminating there; keep the base on the surviving side.
    if (v2 == find(0)) {
      std::swap(i1, i2);
      std::swap(v1, v2);
      std::swap(d1, d2);
    }
    darts_[i2].alive = false;
    if (v1 == v2) return;  // parallel darts: decorations agree up to relations
    Word c = inverse(d1) * d2;
    Word cinv = inverse(c);
    for (auto& e : darts_) {
      if (!e.alive) continue;
      bool tail = find(e.u) == v2, head = find(e.v) == v2;
      if (tail && head) {
        e.dec = c * e.dec * cinv;
      } else if (tail) {
        e.dec = c * e.dec;
      } else if (head) {
        e.dec = e.dec * cinv;
      }
    }
    parent_[v2] = v1;
  }

  void index() {
    for (auto& d : darts_) {
      if (!d.alive) continue;
      int u = find(d.u), v = find(d.v);
      adj_[{u, 2 * d.g}] = {v, d.dec};
      adj_[{v, 2 * d.g + 1}] = {u, inverse(d.dec)};
    }
  }
};

long long det_bareiss(std::vector<std::vector<long long>> a) {
  int n = static_cast<int>(a.size());
  if (n == 0) return 1;
  using i128 = __int128;
  std::vector<std::vector<i128>> m(n, std::vector<i128>(n));
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) m[i][j] = a[i][j];
  i128 prev = 1;
  int sign = 1;
  for (int k = 0; k + 1 < n; ++k) {
    if (m[k][k] == 0) {
      int piv = -1;
      for (int r = k + 1; r < n; ++r)
        if (m[r][k] != 0) {
          piv = r;
          break;
        }
      if (piv < 0) return 0;
      std::swap(m[k], m[piv]);
      sign = -sign;
    }
    for (int i = k + 1; i < n; ++i)
      for (int j = k + 1; j < n; ++j)
        m[i][j] = (m[i][j] * m[k][k] - m[i][k] * m[k][j]) / prev;
    prev = m[k][k];
  }
  return sign * static_cast<long long>(m[n - 1][n - 1]);
}

// Whitehead map with multiplier letter a: letters of gen(a) are fixed, any
// other letter c becomes (a if c in A) c (a^-1 if c^-1 in A).
Word whitehead_apply(int a, const std::vector<char>& in_a, const Word& u) {
  std::vector<int32_t> out;
  out.reserve(static_cast<size_t>(3 * u.length()));
  for (int32_t c : u.codes()) {
    if (code_gen(c) == code_gen(a)) {
      out.push_back(c);
      continue;
    }
    if (in_a[static_cast<size_t>(c)]) out.push_back(a);
    out.push_back(c);
    if (in_a[static_cast<size_t>(inverse_code(c))]) out.push_back(inverse_code(a));
  }
  return Word::from_codes(std::move(out));
}

int cyclic_length(const Word& w) { return cyclic_reduce(w).first.length(); }

FreeHom aut_from_basis_images(const Subgroup& s, std::vector<Word> ambient_images) {
  return FreeHom{s, s, std::move(ambient_images), true};
}

}  // namespace

FreeHom hom_from_images(const Subgroup& domain, const Subgroup& codomain,
                        const std::vector<Word>& images) {
  if (!(domain.context() == codomain.context()))
    throw std::invalid_argument("hom_from_images: mismatched ambient contexts");
  if (static_cast<int>(images.size()) != domain.rank())
    throw std::invalid_argument("hom_from_images: need one image per basis element");
  for (const Word& w : images)
    if (!codomain.contains(w))
      throw std::invalid_argument("hom_from_images: image outside codomain");
  bool iso = domain.rank() == codomain.rank() &&
             Subgroup::from_generators(domain.context(), images).same_subgroup(codomain);
  return FreeHom{domain, codomain, images, iso};
}

FreeHom identity_hom(const Subgroup& s) { return FreeHom{s, s, s.basis(), true}; }

Word apply_hom(const FreeHom& h, const Word& w) {
  auto e = h.domain.rewrite(w);
  if (!e) throw std::invalid_argument("apply_hom: word outside domain");
  return substitute(h.images, *e);
}

FreeHom compose(const FreeHom& h2, const FreeHom& h1) {
  if (!h2.domain.contains_subgroup(h1.codomain))
    throw std::invalid_argument("compose: codomain of first map not inside domain of second");
  std::vector<Word> imgs;
  imgs.reserve(h1.images.size());
  for (const Word& w : h1.images) imgs.push_back(apply_hom(h2, w));
  Subgroup cod = Subgroup::from_generators(h1.domain.context(), imgs);
  bool iso = cod.rank() == h1.domain.rank();  // equal-rank surjection
  return FreeHom{h1.domain, std::move(cod), std::move(imgs), iso};
}

FreeHom invert_hom(const FreeHom& h) {
  if (!h.iso) throw std::invalid_argument("invert_hom: not an isomorphism");
  ExpressFolder folder(h.images);
  std::vector<Word> inv;
  inv.reserve(h.codomain.basis().size());
  for (const Word& b : h.codomain.basis()) {
    auto e = folder.trace(b);
    if (!e) throw std::logic_error("invert_hom: codomain basis not reached by images");
    inv.push_back(h.domain.embed(*e));
  }
  return FreeHom{h.codomain, h.domain, std::move(inv), true};
}

FreeHom restrict_hom(const FreeHom& h, const Subgroup& s) {
  if (!h.domain.contains_subgroup(s))
    throw std::invalid_argument("restrict_hom: subgroup not inside domain");
  std::vector<Word> imgs;
  imgs.reserve(s.basis().size());
  for (const Word& b : s.basis()) imgs.push_back(apply_hom(h, b));
  Subgroup cod = Subgroup::from_generators(s.context(), imgs);
  bool iso = cod.rank() == s.rank();
  return FreeHom{s, std::move(cod), std::move(imgs), iso};
}

Word substitute(const std::vector<Word>& gens, const Word& w) {
  std::vector<int32_t> out;
  for (int32_t c : w.codes()) {
    if (code_gen(c) >= static_cast<int>(gens.size()))
      throw std::invalid_argument("substitute: letter beyond generator list");
    const Word& g = gens[static_cast<size_t>(code_gen(c))];
    if (!code_is_inverse(c)) {
      for (int32_t x : g.codes()) out.push_back(x);
    } else {
      for (int t = g.length() - 1; t >= 0; --t) out.push_back(inverse_code(g.code(t)));
    }
  }
  return Word::from_codes(std::move(out));
}

std::optional<Word> express_in_generators(const std::vector<Word>& gens, const Word& w) {
  ExpressFolder folder(gens);
  return folder.trace(w);
}

FreeHom hom_from_basis_assignment(const Subgroup& s, const std::vector<Word>& basis_list,
                                  const Subgroup& codomain, const std::vector<Word>& images) {
  if (basis_list.size() != images.size())
    throw std::invalid_argument("hom_from_basis_assignment: list size mismatch");
  ExpressFolder folder(basis_list);
  std::vector<Word> cached;
  cached.reserve(s.basis().size());
  for (const Word& b : s.basis()) {
    auto e = folder.trace(b);
    if (!e)
      throw std::invalid_argument("hom_from_basis_assignment: list does not generate the subgroup");
    cached.push_back(substitute(images, *e));
  }
  return hom_from_images(s, codomain, cached);
}

std::vector<std::vector<long long>> abel_matrix(const FreeHom& h) {
  int rows = h.codomain.rank(), cols = static_cast<int>(h.images.size());
  std::vector<std::vector<long long>> m(static_cast<size_t>(rows),
                                        std::vector<long long>(static_cast<size_t>(cols), 0));
  for (int j = 0; j < cols; ++j) {
    auto e = h.codomain.rewrite(h.images[static_cast<size_t>(j)]);
    if (!e) throw std::logic_error("abel_matrix: image outside codomain");
    auto col = abelianize(rows, *e);
    for (int i = 0; i < rows; ++i) m[static_cast<size_t>(i)][static_cast<size_t>(j)] = col[static_cast<size_t>(i)];
  }
  return m;
}

long long det_abel(const FreeHom& h) {
  if (h.codomain.rank() != static_cast<int>(h.images.size()))
    throw std::invalid_argument("det_abel: matrix not square");
  return det_bareiss(abel_matrix(h));
}

bool is_saut(const FreeHom& h) {
  return h.iso && h.domain.same_subgroup(h.codomain) && det_abel(h) == 1;
}

FreeHom nielsen_right(const Subgroup& s, int i, int j, int sign) {
  if (i == j || i < 0 || j < 0 || i >= s.rank() || j >= s.rank())
    throw std::invalid_argument("nielsen_right: bad indices");
  std::vector<Word> imgs = s.basis();
  imgs[static_cast<size_t>(i)] =
      imgs[static_cast<size_t>(i)] * (sign > 0 ? s.basis()[static_cast<size_t>(j)]
                                               : inverse(s.basis()[static_cast<size_t>(j)]));
  return aut_from_basis_images(s, std::move(imgs));
}

FreeHom nielsen_left(const Subgroup& s, int i, int j, int sign) {
  if (i == j || i < 0 || j < 0 || i >= s.rank() || j >= s.rank())
    throw std::invalid_argument("nielsen_left: bad indices");
  std::vector<Word> imgs = s.basis();
  imgs[static_cast<size_t>(i)] =
      (sign > 0 ? s.basis()[static_cast<size_t>(j)] : inverse(s.basis()[static_cast<size_t>(j)])) *
      imgs[static_cast<size_t>(i)];
  return aut_from_basis_images(s, std::move(imgs));
}

FreeHom perm_aut(const Subgroup& s, const std::vector<int>& perm) {
  int r = s.rank();
  if (static_cast<int>(perm.size()) != r) throw std::invalid_argument("perm_aut: size mismatch");
  std::vector<char> hit(static_cast<size_t>(r), 0);
  for (int p : perm) {
    if (p < 0 || p >= r || hit[static_cast<size_t>(p)])
      throw std::invalid_argument("perm_aut: not a permutation");
    hit[static_cast<size_t>(p)] = 1;
  }
  std::vector<Word> imgs;
  imgs.reserve(static_cast<size_t>(r));
  for (int i = 0; i < r; ++i) imgs.push_back(s.basis()[static_cast<size_t>(perm[static_cast<size_t>(i)])]);
  return aut_from_basis_images(s, std::move(imgs));
}

FreeHom inversion_aut(const Subgroup& s, int i) {
  if (i < 0 || i >= s.rank()) throw std::invalid_argument("inversion_aut: bad index");
  std::vector<Word> imgs = s.basis();
  imgs[static_cast<size_t>(i)] = inverse(imgs[static_cast<size_t>(i)]);
  return aut_from_basis_images(s, std::move(imgs));
}

PrimitivityResult whitehead_is_primitive(const Subgroup& s, const Word& w) {
  auto e = s.rewrite(w);
  if (!e) throw std::invalid_argument("whitehead_is_primitive: word outside subgroup");
  int r = s.rank();
  PrimitivityResult out;
  if (r == 0 || e->trivial()) {
    out.terminal = *e;
    return out;
  }
  if (r > 12) throw std::invalid_argument("whitehead_is_primitive: rank too large");
  Word u = *e;

  // Automorphism of s from letter images over the basis alphabet.
  auto record = [&](const std::vector<Word>& letter_images) {
    std::vector<Word> ambient;
    ambient.reserve(letter_images.size());
    for (const Word& li : letter_images) ambient.push_back(s.embed(li));
    out.sequence.push_back(aut_from_basis_images(s, std::move(ambient)));
  };

  std::vector<int> others;  // codes usable in A, per multiplier
  int curlen = cyclic_length(u);
  bool progress = true;
  while (curlen > 1 && progress) {
    progress = false;
    for (int a = 0; a < 2 * r && !progress; ++a) {
      others.clear();
      for (int c = 0; c < 2 * r; ++c)
        if (code_gen(c) != code_gen(a)) others.push_back(c);
      uint64_t lim = 1ull << others.size();
      std::vector<char> in_a(static_cast<size_t>(2 * r), 0);
      for (uint64_t mask = 1; mask < lim && !progress; ++mask) {
        for (size_t t = 0; t < others.size(); ++t)
          in_a[static_cast<size_t>(others[t])] = (mask >> t) & 1 ? 1 : 0;
        Word v = whitehead_apply(a, in_a, u);
        int len = cyclic_length(v);
        if (len < curlen) {
          std::vector<Word> letter_images;
          letter_images.reserve(static_cast<size_t>(r));
          for (int i = 0; i < r; ++i)
            letter_images.push_back(whitehead_apply(a, in_a, Word::letter(i)));
          record(letter_images);
          u = std::move(v);
          curlen = len;
          progress = true;
        }
      }
    }
  }

  if (curlen != 1) {
    out.terminal = u;
    return out;
  }
  auto [core, conj] = cyclic_reduce(u);
  if (!conj.trivial()) {
    // inner automorphism stripping the conjugator
    std::vector<Word> letter_images;
    Word cinv = inverse(conj);
    for (int i = 0; i < r; ++i) letter_images.push_back(cinv * Word::letter(i) * conj);
    record(letter_images);
    u = core;
  }
  int32_t c = u.code(0);
  if (code_gen(c) != 0) {
    std::vector<Word> letter_images;
    for (int i = 0; i < r; ++i) {
      int tgt = i == 0 ? code_gen(c) : (i == code_gen(c) ? 0 : i);
      letter_images.push_back(Word::letter(tgt));
    }
    record(letter_images);
    c = letter_code(0, code_is_inverse(c));
  }
  if (code_is_inverse(c)) {
    std::vector<Word> letter_images;
    letter_images.push_back(Word::letter(0, true));
    for (int i = 1; i < r; ++i) letter_images.push_back(Word::letter(i));
    record(letter_images);
  }
  out.primitive = true;
  out.terminal = Word::letter(0);
  return out;
}

}  // namespace commfree
