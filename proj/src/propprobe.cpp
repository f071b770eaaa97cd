#include "commfree/propprobe.hpp"

#include <algorithm>
#include <deque>
#include <set>
#include <stdexcept>

#include "commfree/families.hpp"
#include "commfree/conjugacy.hpp"

namespace commfree {

namespace {

int norm_mod(long long v, long long p) {
  long long r = v % p;
  if (r < 0) r += p;
  return static_cast<int>(r);
}

// Inverse mod p by extended Euclid; p prime in all callers.
int inv_mod(int a, long long p) {
  long long t = 0, nt = 1, r = p, nr = a % p;
  while (nr != 0) {
    long long q = r / nr;
    t -= q * nt;
    std::swap(t, nt);
    r -= q * nr;
    std::swap(r, nr);
  }
  if (r != 1) throw std::invalid_argument("modulus is not prime to the entry");
  return norm_mod(t, p);
}

bool nonzero_vec(const std::vector<long long>& v) {
  return std::any_of(v.begin(), v.end(), [](long long x) { return x != 0; });
}

}  // namespace

FpSubspace::FpSubspace(long long p, int dim) : p_(p), dim_(dim) {
  if (p < 2) throw std::invalid_argument("prime must be at least 2");
  if (dim < 0) throw std::invalid_argument("dimension must be nonnegative");
}

bool FpSubspace::insert(const std::vector<long long>& v) {
  if (static_cast<int>(v.size()) != dim_) throw std::invalid_argument("vector dimension mismatch");
  std::vector<int> r(v.size());
  for (size_t i = 0; i < v.size(); ++i) r[i] = norm_mod(v[i], p_);
  for (const std::vector<int>& row : rows_) {
    int piv = static_cast<int>(std::find_if(row.begin(), row.end(), [](int x) { return x != 0; }) -
                               row.begin());
    int c = r[static_cast<size_t>(piv)];
    if (c == 0) continue;
    for (int i = piv; i < dim_; ++i)
      r[static_cast<size_t>(i)] = norm_mod(r[static_cast<size_t>(i)] - static_cast<long long>(c) * row[static_cast<size_t>(i)], p_);
  }
  int piv = -1;
  for (int i = 0; i < dim_; ++i)
    if (r[static_cast<size_t>(i)] != 0) {
      piv = i;
      break;
    }
  if (piv < 0) return false;
  int s = inv_mod(r[static_cast<size_t>(piv)], p_);
  for (int i = piv; i < dim_; ++i) r[static_cast<size_t>(i)] = norm_mod(static_cast<long long>(r[static_cast<size_t>(i)]) * s, p_);
  // Clear the new pivot column in the old rows, then keep pivots increasing.
  for (std::vector<int>& row : rows_) {
    int c = row[static_cast<size_t>(piv)];
    if (c == 0) continue;
    for (int i = piv; i < dim_; ++i)
      row[static_cast<size_t>(i)] = norm_mod(row[static_cast<size_t>(i)] - static_cast<long long>(c) * r[static_cast<size_t>(i)], p_);
  }
  auto pos = std::find_if(rows_.begin(), rows_.end(), [&](const std::vector<int>& row) {
    int rp = static_cast<int>(std::find_if(row.begin(), row.end(), [](int x) { return x != 0; }) -
                              row.begin());
    return rp > piv;
  });
  rows_.insert(pos, r);
  return true;
}

bool FpSubspace::contains(const std::vector<long long>& v) const {
  FpSubspace probe = *this;
  return !probe.insert(v);
}

FpSubspace meet_preimage(const FpSubspace& a, const std::vector<std::vector<int>>& m,
                         const FpSubspace& b) {
  if (a.prime() != b.prime()) throw std::invalid_argument("prime mismatch");
  const long long p = a.prime();
  const int amb = b.ambient_dim();
  const int k = a.dim();
  // Residues of M a_i modulo b, one row per basis vector of a.
  std::vector<std::vector<int>> residues;
  for (const std::vector<int>& row : a.rows()) {
    std::vector<long long> img(static_cast<size_t>(amb), 0);
    for (int r = 0; r < amb; ++r) {
      long long acc = 0;
      for (size_t c = 0; c < row.size(); ++c) acc += static_cast<long long>(m[static_cast<size_t>(r)][c]) * row[c];
      img[static_cast<size_t>(r)] = norm_mod(acc, p);
    }
    // Residue of img after elimination against b's rows.
    std::vector<int> r2(static_cast<size_t>(amb));
    for (int i = 0; i < amb; ++i) r2[static_cast<size_t>(i)] = norm_mod(img[static_cast<size_t>(i)], p);
    for (const std::vector<int>& brow : b.rows()) {
      int piv = static_cast<int>(std::find_if(brow.begin(), brow.end(), [](int x) { return x != 0; }) -
                                 brow.begin());
      int c = r2[static_cast<size_t>(piv)];
      if (c == 0) continue;
      for (int i = piv; i < amb; ++i)
        r2[static_cast<size_t>(i)] = norm_mod(r2[static_cast<size_t>(i)] - static_cast<long long>(c) * brow[static_cast<size_t>(i)], p);
    }
    residues.push_back(r2);
  }
  // Kernel of c -> sum c_i residues_i: echelonize with coefficient tracking.
  std::vector<std::vector<int>> coef(static_cast<size_t>(k), std::vector<int>(static_cast<size_t>(k), 0));
  for (int i = 0; i < k; ++i) coef[static_cast<size_t>(i)][static_cast<size_t>(i)] = 1;
  std::vector<bool> used(static_cast<size_t>(k), false);
  FpSubspace out(p, a.ambient_dim());
  for (int col = 0; col < amb; ++col) {
    int pivot = -1;
    for (int i = 0; i < k; ++i)
      if (!used[static_cast<size_t>(i)] && residues[static_cast<size_t>(i)][static_cast<size_t>(col)] != 0) {
        pivot = i;
        break;
      }
    if (pivot < 0) continue;
    used[static_cast<size_t>(pivot)] = true;
    int s = inv_mod(residues[static_cast<size_t>(pivot)][static_cast<size_t>(col)], p);
    for (int i = 0; i < k; ++i) {
      if (i == pivot || residues[static_cast<size_t>(i)][static_cast<size_t>(col)] == 0) continue;
      long long f = static_cast<long long>(residues[static_cast<size_t>(i)][static_cast<size_t>(col)]) * s % p;
      for (int j = 0; j < amb; ++j)
        residues[static_cast<size_t>(i)][static_cast<size_t>(j)] =
            norm_mod(residues[static_cast<size_t>(i)][static_cast<size_t>(j)] - f * residues[static_cast<size_t>(pivot)][static_cast<size_t>(j)], p);
      for (int j = 0; j < k; ++j)
        coef[static_cast<size_t>(i)][static_cast<size_t>(j)] =
            norm_mod(coef[static_cast<size_t>(i)][static_cast<size_t>(j)] - f * coef[static_cast<size_t>(pivot)][static_cast<size_t>(j)], p);
    }
  }
  for (int i = 0; i < k; ++i) {
    if (used[static_cast<size_t>(i)]) continue;
    if (nonzero_vec(std::vector<long long>(residues[static_cast<size_t>(i)].begin(), residues[static_cast<size_t>(i)].end()))) continue;
    // Zero residue: this coefficient row is in the kernel; map back into a.
    std::vector<long long> x(static_cast<size_t>(a.ambient_dim()), 0);
    const auto& rows = a.rows();
    for (int j = 0; j < k; ++j) {
      int c = coef[static_cast<size_t>(i)][static_cast<size_t>(j)];
      if (c == 0) continue;
      for (int t = 0; t < a.ambient_dim(); ++t)
        x[static_cast<size_t>(t)] += static_cast<long long>(c) * rows[static_cast<size_t>(j)][static_cast<size_t>(t)];
    }
    out.insert(x);
  }
  return out;
}

FpSubspace intersect(const FpSubspace& a, const FpSubspace& b) {
  if (a.ambient_dim() != b.ambient_dim()) throw std::invalid_argument("dimension mismatch");
  std::vector<std::vector<int>> id(static_cast<size_t>(a.ambient_dim()),
                                   std::vector<int>(static_cast<size_t>(a.ambient_dim()), 0));
  for (int i = 0; i < a.ambient_dim(); ++i) id[static_cast<size_t>(i)][static_cast<size_t>(i)] = 1;
  return meet_preimage(a, id, b);
}

FpSubspace frattini_image(const std::vector<Word>& words, const Subgroup& u, long long p) {
  FpSubspace out(p, u.rank());
  for (const Word& w : words) {
    std::optional<Word> expr = u.rewrite(w);
    if (!expr) throw std::invalid_argument("word does not lie in the subgroup");
    out.insert(abelianize(u.rank(), *expr));
  }
  return out;
}

PhiCertificate phi_iso_certificate(const RankContext& ctx, long long p, int kmax) {
  if (ctx.rank() < 3) throw std::invalid_argument("rank at least 3 required");
  if (p < 2) throw std::invalid_argument("prime must be at least 2");
  if (kmax < 0) throw std::invalid_argument("tower bound must be nonnegative");
  Subgroup u1 = standard_cyclic_kernel(ctx, 0, p);
  Subgroup u3 = standard_cyclic_kernel(ctx, 2, p);
  std::vector<Word> s1 = commutator_basis(ctx, 0, p);
  std::vector<Word> s3 = commutator_basis(ctx, 2, p);
  const Word x1 = Word::letter(0);
  const Word x2 = Word::letter(1);
  // Pinned targets: x1^p -> x1 and [x2,x1] -> x2; the rest pair off in order.
  const Word src_power = pow(x1, p);
  const Word src_comm = iterated_commutator(x2, x1, 1);
  std::vector<Word> images(s1.size());
  std::vector<bool> taken(s3.size(), false);
  size_t i_power = s1.size(), i_comm = s1.size();
  for (size_t i = 0; i < s1.size(); ++i) {
    if (s1[i] == src_power) i_power = i;
    if (s1[i] == src_comm) i_comm = i;
  }
  for (size_t i = 0; i < s3.size(); ++i) {
    if (s3[i] == x1) {
      images[i_power] = x1;
      taken[i] = true;
    } else if (s3[i] == x2) {
      images[i_comm] = x2;
      taken[i] = true;
    }
  }
  size_t next = 0;
  for (size_t i = 0; i < s1.size(); ++i) {
    if (i == i_power || i == i_comm) continue;
    while (taken[next]) ++next;
    images[i] = s3[next];
    taken[next] = true;
  }
  PhiCertificate cert{hom_from_basis_assignment(u1, s1, u3, images), {}, {}, {}, false};

  cert.tower.push_back(x2);
  long long q = 1;  // p^(k-1)
  for (int k = 1; k <= kmax; ++k) {
    cert.tower.push_back(left_normed_commutator({cert.tower.back(), pow(x1, q)}));
    q *= p;
  }
  bool all = cert.phi.iso;
  for (int k = 1; k <= kmax; ++k) {
    bool step = apply_hom(cert.phi, cert.tower[static_cast<size_t>(k)]) ==
                cert.tower[static_cast<size_t>(k - 1)];
    Word w = cert.tower[static_cast<size_t>(k)];
    bool collapse = true;
    for (int t = 0; t < k; ++t) {
      if (!cert.phi.domain.contains(w)) {
        collapse = false;
        break;
      }
      w = apply_hom(cert.phi, w);
    }
    collapse = collapse && w == x2;
    cert.step_ok.push_back(step);
    cert.collapse_ok.push_back(collapse);
    all = all && step && collapse;
  }
  cert.ok = all;
  return cert;
}

std::vector<K1Move> k1_moves(const RankContext& ctx, long long p) {
  if (p < 2) throw std::invalid_argument("prime must be at least 2");
  std::vector<K1Move> out;
  if (ctx.rank() >= 3) {
    PhiCertificate cert = phi_iso_certificate(ctx, p, 0);
    Commensuration phi = make_commensuration(Flavor::pro_p, p, cert.phi);
    out.push_back({"collapse", phi});
    out.push_back({"collapse-inv", invert_commensuration(phi)});
  }
  for (int g = 0; g < ctx.rank(); ++g) {
    Commensuration up = power_conjugator(ctx, Flavor::pro_p, p, Word::letter(g), p);
    out.push_back({"root@" + ctx.name(g), invert_commensuration(up)});
  }
  std::vector<Commensuration> spn = spn_generators(ctx, p, 1);
  for (size_t i = 0; i < spn.size(); ++i)
    out.push_back({"nielsen#" + std::to_string(i), spn[i]});
  return out;
}

ExclusionOutcome k1_exclude(const RankContext& ctx, const Word& w, long long p, int orbit_bound) {
  if (w.trivial()) throw std::invalid_argument("trivial word");
  if (p < 2) throw std::invalid_argument("prime must be at least 2");
  if (orbit_bound < 0) throw std::invalid_argument("orbit bound must be nonnegative");
  std::vector<long long> direct = abelianize_mod(ctx.rank(), w, p);
  if (nonzero_vec(direct)) {
    ExclusionCertificate cert{ExclusionCertificate::Kind::image_nonzero, w, {}, {}, w, direct};
    if (!verify_exclusion(ctx, p, cert)) throw std::logic_error("unverified certificate");
    return {false, cert};
  }
  std::vector<K1Move> moves = k1_moves(ctx, p);
  auto escape = [&](const std::vector<int>& path, const Word& end,
                    const std::vector<long long>& vec) {
    ExclusionCertificate cert;
    cert.kind = ExclusionCertificate::Kind::orbit_escape;
    cert.w = w;
    cert.moves = path;
    for (int mi : path) cert.move_names.push_back(moves[static_cast<size_t>(mi)].name);
    cert.transported = end;
    cert.vec = vec;
    if (!verify_exclusion(ctx, p, cert)) throw std::logic_error("unverified certificate");
    return ExclusionOutcome{false, cert};
  };
  // Single-germ power chains first: they already cover root extraction
  // towers and the collapse tower, and keep the breadth-first stage short.
  for (int mi = 0; mi < static_cast<int>(moves.size()); ++mi) {
    const FreeHom& f = moves[static_cast<size_t>(mi)].c.iso;
    Word cur = w;
    std::vector<int> path;
    for (int d = 0; d < orbit_bound; ++d) {
      if (!f.domain.contains(cur)) break;
      cur = apply_hom(f, cur);
      path.push_back(mi);
      std::vector<long long> vec = abelianize_mod(ctx.rank(), cur, p);
      if (nonzero_vec(vec)) return escape(path, cur, vec);
    }
  }
  struct Node {
    Word w;
    std::vector<int> path;
  };
  std::deque<Node> queue;
  std::set<Word> seen;
  queue.push_back({w, {}});
  seen.insert(w);
  constexpr int kStateCap = 50000;
  int expanded = 0;
  while (!queue.empty()) {
    Node cur = queue.front();
    queue.pop_front();
    if (static_cast<int>(cur.path.size()) >= orbit_bound) continue;
    if (++expanded > kStateCap) break;
    for (int mi = 0; mi < static_cast<int>(moves.size()); ++mi) {
      const FreeHom& f = moves[static_cast<size_t>(mi)].c.iso;
      if (!f.domain.contains(cur.w)) continue;
      Word img = apply_hom(f, cur.w);
      if (!seen.insert(img).second) continue;
      std::vector<int> path = cur.path;
      path.push_back(mi);
      std::vector<long long> vec = abelianize_mod(ctx.rank(), img, p);
      if (nonzero_vec(vec)) return escape(path, img, vec);
      queue.push_back({img, std::move(path)});
    }
  }
  return {true, std::nullopt};
}

bool verify_exclusion(const RankContext& ctx, long long p, const ExclusionCertificate& cert) {
  if (cert.w.trivial() || !nonzero_vec(cert.vec)) return false;
  Word cur = cert.w;
  if (cert.kind == ExclusionCertificate::Kind::orbit_escape) {
    std::vector<K1Move> moves = k1_moves(ctx, p);
    if (cert.moves.empty()) return false;
    for (int mi : cert.moves) {
      if (mi < 0 || mi >= static_cast<int>(moves.size())) return false;
      const FreeHom& f = moves[static_cast<size_t>(mi)].c.iso;
      if (!f.domain.contains(cur)) return false;
      cur = apply_hom(f, cur);
    }
  } else if (!cert.moves.empty()) {
    return false;
  }
  if (cur != cert.transported) return false;
  return abelianize_mod(ctx.rank(), cur, p) == cert.vec;
}

std::vector<LayerReport> kn_layer_constraint(const RankContext& ctx, long long p, int n) {
  if (p < 2 || n < 0) throw std::invalid_argument("bad layer parameters");
  long long bound = 1;
  for (int i = 0; i < n; ++i) {
    bound *= p;
    if (bound > 8) throw std::invalid_argument("enumeration bound exceeded");
  }
  std::vector<Subgroup> members;
  enumerate_p_open(ctx, p, bound, [&](const Subgroup& s) { members.push_back(s); });
  std::vector<LayerReport> out;
  for (const Subgroup& u : members) {
    const int r = u.rank();
    FpSubspace w(p, r);
    for (int i = 0; i < r; ++i) {
      std::vector<long long> e(static_cast<size_t>(r), 0);
      e[static_cast<size_t>(i)] = 1;
      w.insert(e);
    }
    for (const Subgroup& v : members)
      w = intersect(w, frattini_image(intersect(v, u).basis(), u, p));
    const int cdim = w.dim();
    // Largest subspace stable under every elementary transvection matrix.
    std::vector<std::vector<std::vector<int>>> mats;
    for (int i = 0; i < r; ++i)
      for (int j = 0; j < r; ++j) {
        if (i == j) continue;
        for (int s : {1, static_cast<int>(p) - 1}) {
          std::vector<std::vector<int>> m(static_cast<size_t>(r), std::vector<int>(static_cast<size_t>(r), 0));
          for (int t = 0; t < r; ++t) m[static_cast<size_t>(t)][static_cast<size_t>(t)] = 1;
          m[static_cast<size_t>(j)][static_cast<size_t>(i)] = s;
          mats.push_back(std::move(m));
          if (p == 2) break;  // 1 and p-1 coincide
        }
      }
    bool changed = true;
    while (changed && w.dim() > 0) {
      changed = false;
      for (const auto& m : mats) {
        FpSubspace next = meet_preimage(w, m, w);
        if (next.dim() < w.dim()) {
          w = next;
          changed = true;
        }
      }
    }
    out.push_back({u, u.index().value(), r, cdim, w.dim(), w});
  }
  return out;
}

}  // namespace commfree
