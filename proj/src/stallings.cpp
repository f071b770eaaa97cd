#include "commfree/stallings.hpp"

#include <algorithm>
#include <cassert>
#include <map>
#include <mutex>
#include <numeric>
#include <queue>
#include <set>
#include <sstream>
#include <stdexcept>
#include <unordered_map>

namespace commfree {

namespace {

struct Folder {
  std::vector<int> parent;
  std::vector<std::map<int, int>> adj;  // adj[v][dircode] = target
  std::vector<std::pair<int, int>> pending;

  int make() {
    parent.push_back(static_cast<int>(parent.size()));
    adj.emplace_back();
    return static_cast<int>(parent.size()) - 1;
  }
  int find(int v) {
    while (parent[static_cast<size_t>(v)] != v) {
      parent[static_cast<size_t>(v)] = parent[static_cast<size_t>(parent[static_cast<size_t>(v)])];
      v = parent[static_cast<size_t>(v)];
    }
    return v;
  }
  void insert_dir(int v, int c, int u) {
    v = find(v);
    u = find(u);
    auto [it, fresh] = adj[static_cast<size_t>(v)].try_emplace(c, u);
    if (!fresh) {
      int t = find(it->second);
      it->second = t;
      if (t != u) pending.push_back({t, u});
    }
  }
  void add_dart(int v, int g, int w) {
    insert_dir(v, 2 * g, w);
    insert_dir(w, 2 * g + 1, v);
  }
  void fold() {
    while (!pending.empty()) {
      auto [a, b] = pending.back();
      pending.pop_back();
      a = find(a);
      b = find(b);
      if (a == b) continue;
      if (adj[static_cast<size_t>(a)].size() < adj[static_cast<size_t>(b)].size()) std::swap(a, b);
      parent[static_cast<size_t>(b)] = a;
      auto moved = std::move(adj[static_cast<size_t>(b)]);
      adj[static_cast<size_t>(b)].clear();
      for (auto [c, t] : moved) insert_dir(a, c, t);
    }
  }
};

// Folds, keeps the base component, prunes degree-1 non-base vertices,
// returns adjacency in arbitrary numbering with the base first.
struct RawGraph {
  int d = 0;
  int n = 0;
  std::vector<std::map<int, int>> adj;
};

RawGraph settle(Folder& f, int base, int d) {
  f.fold();
  base = f.find(base);
  // base component
  std::vector<int> order;
  std::map<int, int> id;
  id[base] = 0;
  order.push_back(base);
  for (size_t qi = 0; qi < order.size(); ++qi) {
    int v = order[qi];
    for (auto [c, t] : f.adj[static_cast<size_t>(v)]) {
      (void)c;
      int u = f.find(t);
      if (id.emplace(u, static_cast<int>(order.size())).second) order.push_back(u);
    }
  }
  RawGraph r;
  r.d = d;
  r.n = static_cast<int>(order.size());
  r.adj.resize(static_cast<size_t>(r.n));
  for (int i = 0; i < r.n; ++i)
    for (auto [c, t] : f.adj[static_cast<size_t>(order[static_cast<size_t>(i)])])
      r.adj[static_cast<size_t>(i)][c] = id[f.find(t)];
  // prune hanging trees (a core graph has no degree-1 vertex except maybe the base)
  std::vector<bool> dead(static_cast<size_t>(r.n), false);
  bool changed = true;
  while (changed) {
    changed = false;
    for (int v = 1; v < r.n; ++v) {
      if (dead[static_cast<size_t>(v)] || r.adj[static_cast<size_t>(v)].size() != 1) continue;
      auto [c, u] = *r.adj[static_cast<size_t>(v)].begin();
      r.adj[static_cast<size_t>(v)].clear();
      dead[static_cast<size_t>(v)] = true;
      auto it = r.adj[static_cast<size_t>(u)].find(c ^ 1);
      assert(it != r.adj[static_cast<size_t>(u)].end() && it->second == v);
      r.adj[static_cast<size_t>(u)].erase(it);
      changed = true;
    }
  }
  // compact dead vertices
  std::vector<int> remap(static_cast<size_t>(r.n), -1);
  int m = 0;
  for (int v = 0; v < r.n; ++v)
    if (!dead[static_cast<size_t>(v)]) remap[static_cast<size_t>(v)] = m++;
  RawGraph out;
  out.d = d;
  out.n = m;
  out.adj.resize(static_cast<size_t>(m));
  for (int v = 0; v < r.n; ++v) {
    if (dead[static_cast<size_t>(v)]) continue;
    for (auto [c, t] : r.adj[static_cast<size_t>(v)])
      out.adj[static_cast<size_t>(remap[static_cast<size_t>(v)])][c] = remap[static_cast<size_t>(t)];
  }
  return out;
}

}  // namespace

bool SubgroupGraph::complete() const {
  for (int g = 0; g < ambient_rank; ++g)
    for (int v = 0; v < n; ++v)
      if (succ[static_cast<size_t>(g)][static_cast<size_t>(v)] < 0 ||
          pred[static_cast<size_t>(g)][static_cast<size_t>(v)] < 0)
        return false;
  return true;
}

std::string SubgroupGraph::serialize() const {
  std::ostringstream os;
  os << ambient_rank << ';' << n << ';';
  for (int g = 0; g < ambient_rank; ++g)
    for (int v = 0; v < n; ++v) os << succ[static_cast<size_t>(g)][static_cast<size_t>(v)] << ',';
  return os.str();
}

struct Subgroup::Data {
  RankContext ctx;
  SubgroupGraph g;
  std::vector<int> parent_vertex;   // BFS tree, -1 at base
  std::vector<int> parent_dircode;
  std::vector<std::vector<int>> tree_pos;   // [gen][v]: dart (v,gen,succ) in tree
  std::vector<std::vector<int>> basis_id;   // [gen][v]: index of non-tree dart, -1
  std::vector<Word> basis_words;
  std::vector<Word> transversal_words;
  std::optional<long long> index;
  explicit Data(RankContext c) : ctx(std::move(c)) {}
};

struct SubgroupAccess {
  static Subgroup wrap(std::shared_ptr<const Subgroup::Data> d) { return Subgroup(std::move(d)); }
  static const Subgroup::Data& data(const Subgroup& s) { return *s.d_; }
  static std::shared_ptr<Subgroup::Data> build(const RankContext& ctx, const RawGraph& raw);
};

// BFS canonicalization from the base, dircodes in increasing order.
std::shared_ptr<Subgroup::Data> SubgroupAccess::build(const RankContext& ctx, const RawGraph& raw) {
  const int d = ctx.rank();
  auto data = std::make_shared<Subgroup::Data>(ctx);
  const int n = raw.n;
  std::vector<int> order;  // old ids in canonical order
  std::vector<int> newid(static_cast<size_t>(n), -1);
  order.push_back(0);
  newid[0] = 0;
  std::vector<int> pv(static_cast<size_t>(n), -1), pc(static_cast<size_t>(n), -1);
  for (size_t qi = 0; qi < order.size(); ++qi) {
    int v = order[qi];
    for (int c = 0; c < 2 * d; ++c) {
      auto it = raw.adj[static_cast<size_t>(v)].find(c);
      if (it == raw.adj[static_cast<size_t>(v)].end()) continue;
      int u = it->second;
      if (newid[static_cast<size_t>(u)] < 0) {
        newid[static_cast<size_t>(u)] = static_cast<int>(order.size());
        pv[static_cast<size_t>(u)] = v;
        pc[static_cast<size_t>(u)] = c;
        order.push_back(u);
      }
    }
  }
  assert(static_cast<int>(order.size()) == n);

  auto& g = data->g;
  g.ambient_rank = d;
  g.n = n;
  g.succ.assign(static_cast<size_t>(d), std::vector<int>(static_cast<size_t>(n), -1));
  g.pred.assign(static_cast<size_t>(d), std::vector<int>(static_cast<size_t>(n), -1));
  for (int v = 0; v < n; ++v)
    for (auto [c, t] : raw.adj[static_cast<size_t>(v)]) {
      if (c & 1) continue;
      int gen = c >> 1;
      g.succ[static_cast<size_t>(gen)][static_cast<size_t>(newid[static_cast<size_t>(v)])] =
          newid[static_cast<size_t>(t)];
      g.pred[static_cast<size_t>(gen)][static_cast<size_t>(newid[static_cast<size_t>(t)])] =
          newid[static_cast<size_t>(v)];
    }

  data->parent_vertex.assign(static_cast<size_t>(n), -1);
  data->parent_dircode.assign(static_cast<size_t>(n), -1);
  data->tree_pos.assign(static_cast<size_t>(d), std::vector<int>(static_cast<size_t>(n), 0));
  for (int v = 0; v < n; ++v) {
    if (pv[static_cast<size_t>(order[static_cast<size_t>(v)])] < 0) continue;
    int old = order[static_cast<size_t>(v)];
    int u = newid[static_cast<size_t>(pv[static_cast<size_t>(old)])];
    int c = pc[static_cast<size_t>(old)];
    data->parent_vertex[static_cast<size_t>(v)] = u;
    data->parent_dircode[static_cast<size_t>(v)] = c;
    // positive dart of the tree edge
    if (c & 1)
      data->tree_pos[static_cast<size_t>(c >> 1)][static_cast<size_t>(v)] = 1;
    else
      data->tree_pos[static_cast<size_t>(c >> 1)][static_cast<size_t>(u)] = 1;
  }

  // tree path words
  std::vector<Word> tpath(static_cast<size_t>(n));
  for (int v = 1; v < n; ++v) {
    int u = data->parent_vertex[static_cast<size_t>(v)];
    int c = data->parent_dircode[static_cast<size_t>(v)];
    tpath[static_cast<size_t>(v)] =
        tpath[static_cast<size_t>(u)] * Word::letter(c >> 1, (c & 1) != 0);
  }

  data->basis_id.assign(static_cast<size_t>(d), std::vector<int>(static_cast<size_t>(n), -1));
  for (int v = 0; v < n; ++v)
    for (int gen = 0; gen < d; ++gen) {
      int w = g.succ[static_cast<size_t>(gen)][static_cast<size_t>(v)];
      if (w < 0 || data->tree_pos[static_cast<size_t>(gen)][static_cast<size_t>(v)]) continue;
      data->basis_id[static_cast<size_t>(gen)][static_cast<size_t>(v)] =
          static_cast<int>(data->basis_words.size());
      data->basis_words.push_back(tpath[static_cast<size_t>(v)] * Word::letter(gen) *
                                  inverse(tpath[static_cast<size_t>(w)]));
    }

  if (g.complete()) {
    data->index = n;
    data->transversal_words = tpath;
  }
  return data;
}

namespace {

Subgroup make_subgroup(const RankContext& ctx, const RawGraph& raw) {
  return SubgroupAccess::wrap(SubgroupAccess::build(ctx, raw));
}

RawGraph raw_from_folder(Folder& f, int base, int d) { return settle(f, base, d); }

}  // namespace

Subgroup Subgroup::whole_group(const RankContext& ctx) {
  Folder f;
  int b = f.make();
  for (int g = 0; g < ctx.rank(); ++g) f.add_dart(b, g, b);
  auto raw = raw_from_folder(f, b, ctx.rank());
  return make_subgroup(ctx, raw);
}

Subgroup Subgroup::trivial_subgroup(const RankContext& ctx) {
  Folder f;
  int b = f.make();
  auto raw = raw_from_folder(f, b, ctx.rank());
  return make_subgroup(ctx, raw);
}

Subgroup Subgroup::from_generators(const RankContext& ctx, const std::vector<Word>& gens) {
  Folder f;
  int base = f.make();
  for (const Word& w : gens) {
    if (w.trivial()) continue;
    if (w.max_gen() >= ctx.rank()) throw std::invalid_argument("generator word outside context");
    int prev = base;
    for (int i = 0; i < w.length(); ++i) {
      int target = (i + 1 == w.length()) ? base : f.make();
      int32_t c = w.code(i);
      if (code_is_inverse(c))
        f.add_dart(target, code_gen(c), prev);
      else
        f.add_dart(prev, code_gen(c), target);
      prev = target;
    }
  }
  auto raw = raw_from_folder(f, base, ctx.rank());
  return make_subgroup(ctx, raw);
}

Subgroup Subgroup::from_graph(const RankContext& ctx, const SubgroupGraph& g) {
  if (g.ambient_rank != ctx.rank()) throw std::invalid_argument("graph rank mismatch");
  Folder f;
  for (int v = 0; v < g.n; ++v) f.make();
  for (int gen = 0; gen < g.ambient_rank; ++gen)
    for (int v = 0; v < g.n; ++v) {
      int w = g.succ[static_cast<size_t>(gen)][static_cast<size_t>(v)];
      if (w >= 0) f.add_dart(v, gen, w);
    }
  auto raw = raw_from_folder(f, 0, ctx.rank());
  return make_subgroup(ctx, raw);
}

const RankContext& Subgroup::context() const { return d_->ctx; }
const SubgroupGraph& Subgroup::graph() const { return d_->g; }
int Subgroup::rank() const { return static_cast<int>(d_->basis_words.size()); }
std::optional<long long> Subgroup::index() const { return d_->index; }
const std::vector<Word>& Subgroup::basis() const { return d_->basis_words; }
const std::vector<Word>& Subgroup::transversal() const {
  if (!d_->index) throw std::logic_error("transversal requires finite index");
  return d_->transversal_words;
}
RankContext Subgroup::basis_context() const { return RankContext::rebased(rank()); }

bool Subgroup::contains(const Word& w) const { return rewrite(w).has_value(); }

std::optional<Word> Subgroup::rewrite(const Word& w) const {
  const auto& D = *d_;
  if (w.max_gen() >= D.g.ambient_rank) return std::nullopt;
  int v = 0;
  std::vector<int32_t> out;
  for (int i = 0; i < w.length(); ++i) {
    int32_t c = w.code(i);
    int gen = code_gen(c);
    if (!code_is_inverse(c)) {
      int t = D.g.succ[static_cast<size_t>(gen)][static_cast<size_t>(v)];
      if (t < 0) return std::nullopt;
      int k = D.basis_id[static_cast<size_t>(gen)][static_cast<size_t>(v)];
      if (k >= 0) out.push_back(letter_code(k, false));
      v = t;
    } else {
      int t = D.g.pred[static_cast<size_t>(gen)][static_cast<size_t>(v)];
      if (t < 0) return std::nullopt;
      int k = D.basis_id[static_cast<size_t>(gen)][static_cast<size_t>(t)];
      if (k >= 0) out.push_back(letter_code(k, true));
      v = t;
    }
  }
  if (v != 0) return std::nullopt;
  return Word::from_codes(std::move(out));
}

Word Subgroup::embed(const Word& w_in_basis) const {
  Word out;
  for (int i = 0; i < w_in_basis.length(); ++i) {
    int32_t c = w_in_basis.code(i);
    int k = code_gen(c);
    if (k >= rank()) throw std::invalid_argument("basis letter out of range");
    const Word& b = d_->basis_words[static_cast<size_t>(k)];
    out = out * (code_is_inverse(c) ? inverse(b) : b);
  }
  return out;
}

bool Subgroup::same_subgroup(const Subgroup& o) const {
  return d_->ctx == o.d_->ctx && d_->g == o.d_->g;
}

bool Subgroup::contains_subgroup(const Subgroup& o) const {
  for (const Word& b : o.basis())
    if (!contains(b)) return false;
  return true;
}

Subgroup intersect(const Subgroup& a, const Subgroup& b) {
  if (!(a.context() == b.context())) throw std::invalid_argument("context mismatch");
  const auto& ga = a.graph();
  const auto& gb = b.graph();
  const int d = ga.ambient_rank;
  std::map<std::pair<int, int>, int> id;
  std::vector<std::pair<int, int>> order;
  Folder f;
  id[{0, 0}] = f.make();
  order.push_back({0, 0});
  for (size_t qi = 0; qi < order.size(); ++qi) {
    auto [va, vb] = order[qi];
    int v = id[{va, vb}];
    for (int gen = 0; gen < d; ++gen) {
      int ta = ga.succ[static_cast<size_t>(gen)][static_cast<size_t>(va)];
      int tb = gb.succ[static_cast<size_t>(gen)][static_cast<size_t>(vb)];
      if (ta < 0 || tb < 0) continue;
      auto key = std::pair(ta, tb);
      auto it = id.find(key);
      if (it == id.end()) {
        it = id.emplace(key, f.make()).first;
        order.push_back(key);
      }
      f.add_dart(v, gen, it->second);
    }
  }
  auto raw = raw_from_folder(f, 0, d);
  return make_subgroup(a.context(), raw);
}

Subgroup conjugate_subgroup(const Subgroup& h, const Word& by) {
  if (h.graph().complete()) {
    // Rebase the covering at the vertex reached by by^-1.
    const auto& g = h.graph();
    int v = 0;
    Word u = inverse(by);
    for (int i = 0; i < u.length(); ++i) {
      int32_t c = u.code(i);
      v = code_is_inverse(c)
              ? g.pred[static_cast<size_t>(code_gen(c))][static_cast<size_t>(v)]
              : g.succ[static_cast<size_t>(code_gen(c))][static_cast<size_t>(v)];
    }
    Folder f;
    for (int i = 0; i < g.n; ++i) f.make();
    for (int gen = 0; gen < g.ambient_rank; ++gen)
      for (int w = 0; w < g.n; ++w)
        f.add_dart(w, gen, g.succ[static_cast<size_t>(gen)][static_cast<size_t>(w)]);
    auto raw = raw_from_folder(f, v, g.ambient_rank);
    return make_subgroup(h.context(), raw);
  }
  std::vector<Word> gens;
  gens.reserve(h.basis().size());
  for (const Word& b : h.basis()) gens.push_back(conjugate(b, by));
  return Subgroup::from_generators(h.context(), gens);
}

bool is_normal(const Subgroup& h) {
  for (int g = 0; g < h.context().rank(); ++g)
    if (!conjugate_subgroup(h, Word::letter(g)).same_subgroup(h)) return false;
  return true;
}

Subgroup normal_core(const Subgroup& h) {
  if (!h.index()) throw std::invalid_argument("normal_core requires finite index");
  Subgroup core = h;
  for (const Word& t : h.transversal()) {
    if (t.trivial()) continue;
    core = intersect(core, conjugate_subgroup(h, t));
  }
  return core;
}

Subgroup standard_cyclic_kernel(const RankContext& ctx, int x, long long m) {
  if (x < 0 || x >= ctx.rank()) throw std::invalid_argument("bad distinguished generator");
  if (m < 1) throw std::invalid_argument("bad modulus");
  std::vector<long long> t(static_cast<size_t>(ctx.rank()), 0);
  t[static_cast<size_t>(x)] = 1;
  return scq_kernel(ctx, t, m);
}

std::vector<Word> schreier_basis(const RankContext& ctx, int x, long long m) {
  std::vector<Word> out;
  out.push_back(pow(Word::letter(x), m));
  for (long long j = 0; j < m; ++j)
    for (int y = 0; y < ctx.rank(); ++y) {
      if (y == x) continue;
      out.push_back(conjugate(Word::letter(y), pow(Word::letter(x), j)));
    }
  return out;
}

std::vector<Word> commutator_basis(const RankContext& ctx, int x, long long m) {
  std::vector<Word> out;
  out.push_back(pow(Word::letter(x), m));
  for (long long j = 0; j < m; ++j)
    for (int y = 0; y < ctx.rank(); ++y) {
      if (y == x) continue;
      out.push_back(iterated_commutator(Word::letter(y), Word::letter(x), static_cast<int>(j)));
    }
  return out;
}

namespace {

long long gcdll(long long a, long long b) { return std::gcd(a, b); }

}  // namespace

std::vector<std::vector<long long>> scq_vectors(int rank, long long m) {
  if (m < 2) throw std::invalid_argument("modulus must be >= 2");
  std::vector<long long> units;
  for (long long u = 1; u < m; ++u)
    if (gcdll(u, m) == 1) units.push_back(u);
  std::vector<std::vector<long long>> out;
  std::vector<long long> t(static_cast<size_t>(rank), 0);
  while (true) {
    long long content = m;
    for (long long x : t) content = gcdll(content, x);
    if (content == 1) {
      bool canonical = true;
      for (long long u : units) {
        std::vector<long long> s(t.size());
        for (size_t i = 0; i < t.size(); ++i) s[i] = (t[i] * u) % m;
        if (s < t) {
          canonical = false;
          break;
        }
      }
      if (canonical) out.push_back(t);
    }
    // odometer
    int i = rank - 1;
    while (i >= 0 && t[static_cast<size_t>(i)] == m - 1) t[static_cast<size_t>(i--)] = 0;
    if (i < 0) break;
    ++t[static_cast<size_t>(i)];
  }
  return out;
}

Subgroup scq_kernel(const RankContext& ctx, const std::vector<long long>& t, long long m) {
  if (static_cast<int>(t.size()) != ctx.rank()) throw std::invalid_argument("vector size mismatch");
  if (m == 1) return Subgroup::whole_group(ctx);
  SubgroupGraph g;
  g.ambient_rank = ctx.rank();
  g.n = static_cast<int>(m);
  g.succ.assign(static_cast<size_t>(ctx.rank()), std::vector<int>(static_cast<size_t>(m), -1));
  g.pred.assign(static_cast<size_t>(ctx.rank()), std::vector<int>(static_cast<size_t>(m), -1));
  for (int gen = 0; gen < ctx.rank(); ++gen) {
    long long step = ((t[static_cast<size_t>(gen)] % m) + m) % m;
    for (long long v = 0; v < m; ++v) {
      long long w = (v + step) % m;
      g.succ[static_cast<size_t>(gen)][static_cast<size_t>(v)] = static_cast<int>(w);
      g.pred[static_cast<size_t>(gen)][static_cast<size_t>(w)] = static_cast<int>(v);
    }
  }
  return Subgroup::from_graph(ctx, g);
}

std::vector<Subgroup> scq(const RankContext& ctx, long long m) {
  std::vector<Subgroup> out;
  for (const auto& t : scq_vectors(ctx.rank(), m)) out.push_back(scq_kernel(ctx, t, m));
  return out;
}

std::vector<Subgroup> index_p_normals(const RankContext& ctx, long long p) {
  return scq(ctx, p);
}

std::optional<std::vector<long long>> scq_recover_vector(const Subgroup& h, long long m) {
  const int r = h.context().rank();
  std::vector<long long> t(static_cast<size_t>(r), 0);
  while (true) {
    long long content = m;
    for (long long x : t) content = gcdll(content, x);
    if (content == 1 && scq_kernel(h.context(), t, m).same_subgroup(h)) return t;
    int i = r - 1;
    while (i >= 0 && t[static_cast<size_t>(i)] == m - 1) t[static_cast<size_t>(i--)] = 0;
    if (i < 0) break;
    ++t[static_cast<size_t>(i)];
  }
  return std::nullopt;
}

namespace {

bool is_prime(long long p) {
  if (p < 2) return false;
  for (long long q = 2; q * q <= p; ++q)
    if (p % q == 0) return false;
  return true;
}

// Mod-p row reduction; rows normalized to leading 1, echelon order.
std::vector<std::vector<long long>> row_reduce_mod(std::vector<std::vector<long long>> rows,
                                                   long long p) {
  size_t cols = rows.empty() ? 0 : rows[0].size();
  std::vector<std::vector<long long>> out;
  size_t lead = 0;
  for (size_t c = 0; c < cols && !rows.empty(); ++c) {
    size_t pick = rows.size();
    for (size_t i = 0; i < rows.size(); ++i)
      if (rows[i][c] % p != 0) {
        pick = i;
        break;
      }
    if (pick == rows.size()) continue;
    std::swap(rows[0], rows[pick]);
    // normalize
    long long inv = 1;
    for (long long x = 1; x < p; ++x)
      if ((rows[0][c] * x) % p == 1) {
        inv = x;
        break;
      }
    for (auto& x : rows[0]) x = (x * inv) % p;
    for (size_t i = 1; i < rows.size(); ++i) {
      long long f = rows[i][c] % p;
      if (f == 0) continue;
      for (size_t j = 0; j < cols; ++j)
        rows[i][j] = ((rows[i][j] - f * rows[0][j]) % p + p) % p;
    }
    out.push_back(rows[0]);
    rows.erase(rows.begin());
    ++lead;
  }
  (void)lead;
  return out;
}

struct PopenMemo {
  std::mutex mu;
  std::unordered_map<std::string, std::optional<std::vector<long long>>> memo;
};

PopenMemo& popen_memo() {
  static PopenMemo m;
  return m;
}

// Returns the lex-first hyperplane vector leading to a full chain, nullopt
// if none. Instance: h in the coordinates of its ambient free group.
std::optional<std::vector<long long>> popen_step(const Subgroup& h, long long p) {
  if (h.same_subgroup(Subgroup::whole_group(h.context())))
    return std::vector<long long>{};  // empty marker: chain ends here
  std::string key = std::to_string(p) + '|' + h.graph().serialize();
  {
    std::lock_guard<std::mutex> lk(popen_memo().mu);
    auto it = popen_memo().memo.find(key);
    if (it != popen_memo().memo.end()) return it->second;
  }
  std::optional<std::vector<long long>> result;
  const int r = h.context().rank();
  std::vector<std::vector<long long>> img;
  for (const Word& b : h.basis()) img.push_back(abelianize_mod(r, b, p));
  img = row_reduce_mod(std::move(img), p);
  for (const auto& t : scq_vectors(r, p)) {
    bool ortho = true;
    for (const auto& row : img) {
      long long s = 0;
      for (int i = 0; i < r; ++i) s += t[static_cast<size_t>(i)] * row[static_cast<size_t>(i)];
      if (s % p != 0) {
        ortho = false;
        break;
      }
    }
    if (!ortho) continue;
    Subgroup N = scq_kernel(h.context(), t, p);
    RankContext sub = N.basis_context();
    std::vector<Word> rebased;
    bool ok = true;
    for (const Word& b : h.basis()) {
      auto rw = N.rewrite(b);
      if (!rw) {
        ok = false;
        break;
      }
      rebased.push_back(*rw);
    }
    assert(ok);
    if (!ok) continue;
    Subgroup h2 = Subgroup::from_generators(sub, rebased);
    if (popen_step(h2, p).has_value()) {
      result = t;
      break;
    }
  }
  std::lock_guard<std::mutex> lk(popen_memo().mu);
  popen_memo().memo[key] = result;
  return result;
}

}  // namespace

PopennessCertificate is_p_open(const Subgroup& h, long long p) {
  if (!is_prime(p)) throw std::invalid_argument("p must be prime");
  PopennessCertificate cert;
  if (!h.index()) {
    cert.reason = "infinite index";
    return cert;
  }
  long long idx = *h.index();
  long long q = idx;
  while (q % p == 0) q /= p;
  if (q != 1) {
    cert.reason = "index " + std::to_string(idx) + " is not a power of " + std::to_string(p);
    return cert;
  }
  // Walk the memoized hyperplane choices, translating each level back into
  // ambient coordinates.
  const RankContext& F = h.context();
  cert.chain.push_back(Subgroup::whole_group(F));
  Subgroup cur = h;             // current level coordinates
  std::vector<Word> frame;      // ambient words for the current level's letters
  for (int i = 0; i < F.rank(); ++i) frame.push_back(Word::letter(i));
  while (true) {
    auto t = popen_step(cur, p);
    if (!t) {
      cert.chain.clear();
      cert.reason = "no subnormal chain with index-" + std::to_string(p) + " steps";
      return cert;
    }
    if (t->empty()) break;  // cur is the whole group at this level
    Subgroup N = scq_kernel(cur.context(), *t, p);
    std::vector<Word> nframe;
    for (const Word& b : N.basis()) {
      Word amb;
      for (int i = 0; i < b.length(); ++i) {
        int32_t c = b.code(i);
        const Word& f = frame[static_cast<size_t>(code_gen(c))];
        amb = amb * (code_is_inverse(c) ? inverse(f) : f);
      }
      nframe.push_back(amb);
    }
    cert.chain.push_back(Subgroup::from_generators(F, nframe));
    RankContext sub = N.basis_context();
    std::vector<Word> rebased;
    for (const Word& b : cur.basis()) rebased.push_back(*N.rewrite(b));
    cur = Subgroup::from_generators(sub, rebased);
    frame = std::move(nframe);
  }
  cert.open = true;
  assert(cert.chain.back().same_subgroup(h));
  return cert;
}

HallCompletion hall_completion(const Subgroup& h) {
  const auto& D = SubgroupAccess::data(h);
  const auto& g = D.g;
  const int d = g.ambient_rank;
  SubgroupGraph full = g;
  // tree path words in the original numbering
  std::vector<Word> tpath(static_cast<size_t>(g.n));
  for (int v = 1; v < g.n; ++v) {
    int u = D.parent_vertex[static_cast<size_t>(v)];
    int c = D.parent_dircode[static_cast<size_t>(v)];
    tpath[static_cast<size_t>(v)] = tpath[static_cast<size_t>(u)] * Word::letter(c >> 1, (c & 1) != 0);
  }
  std::vector<Word> extended = h.basis();
  for (int gen = 0; gen < d; ++gen) {
    std::vector<int> tails, heads;
    for (int v = 0; v < g.n; ++v) {
      if (full.succ[static_cast<size_t>(gen)][static_cast<size_t>(v)] < 0) tails.push_back(v);
      if (full.pred[static_cast<size_t>(gen)][static_cast<size_t>(v)] < 0) heads.push_back(v);
    }
    assert(tails.size() == heads.size());
    for (size_t k = 0; k < tails.size(); ++k) {
      int v = tails[k], w = heads[k];
      full.succ[static_cast<size_t>(gen)][static_cast<size_t>(v)] = w;
      full.pred[static_cast<size_t>(gen)][static_cast<size_t>(w)] = v;
      extended.push_back(tpath[static_cast<size_t>(v)] * Word::letter(gen) *
                         inverse(tpath[static_cast<size_t>(w)]));
    }
  }
  return HallCompletion{Subgroup::from_graph(h.context(), full), std::move(extended)};
}

void enumerate_subgroups(const RankContext& ctx, int max_index,
                         const std::function<void(const Subgroup&)>& fn) {
  if (max_index < 1) return;
  const int d = ctx.rank();
  std::vector<std::vector<int>> succ(static_cast<size_t>(d),
                                     std::vector<int>(static_cast<size_t>(max_index), -1));
  std::vector<std::vector<int>> pred = succ;
  int n_used = 1;

  std::function<void(int)> rec = [&](int pos) {
    if (pos == n_used * 2 * d) {
      SubgroupGraph g;
      g.ambient_rank = d;
      g.n = n_used;
      g.succ.assign(static_cast<size_t>(d), std::vector<int>(static_cast<size_t>(n_used)));
      g.pred = g.succ;
      for (int gen = 0; gen < d; ++gen)
        for (int v = 0; v < n_used; ++v) {
          g.succ[static_cast<size_t>(gen)][static_cast<size_t>(v)] =
              succ[static_cast<size_t>(gen)][static_cast<size_t>(v)];
          g.pred[static_cast<size_t>(gen)][static_cast<size_t>(v)] =
              pred[static_cast<size_t>(gen)][static_cast<size_t>(v)];
        }
      fn(Subgroup::from_graph(ctx, g));
      return;
    }
    int v = pos / (2 * d);
    int c = pos % (2 * d);
    int gen = c / 2;
    if (c % 2 == 0) {
      if (succ[static_cast<size_t>(gen)][static_cast<size_t>(v)] >= 0) {
        rec(pos + 1);
        return;
      }
      for (int w = 0; w <= n_used; ++w) {
        // existing targets w < n_used with a free pred slot, or the fresh vertex w == n_used
        if (w < n_used) {
          if (pred[static_cast<size_t>(gen)][static_cast<size_t>(w)] >= 0) continue;
        } else if (n_used >= max_index) {
          break;
        }
        bool fresh = (w == n_used);
        if (fresh) ++n_used;
        succ[static_cast<size_t>(gen)][static_cast<size_t>(v)] = w;
        pred[static_cast<size_t>(gen)][static_cast<size_t>(w)] = v;
        rec(pos + 1);
        succ[static_cast<size_t>(gen)][static_cast<size_t>(v)] = -1;
        pred[static_cast<size_t>(gen)][static_cast<size_t>(w)] = -1;
        if (fresh) --n_used;
      }
    } else {
      if (pred[static_cast<size_t>(gen)][static_cast<size_t>(v)] >= 0) {
        rec(pos + 1);
        return;
      }
      for (int w = 0; w <= n_used; ++w) {
        if (w < n_used) {
          if (succ[static_cast<size_t>(gen)][static_cast<size_t>(w)] >= 0) continue;
        } else if (n_used >= max_index) {
          break;
        }
        bool fresh = (w == n_used);
        if (fresh) ++n_used;
        succ[static_cast<size_t>(gen)][static_cast<size_t>(w)] = v;
        pred[static_cast<size_t>(gen)][static_cast<size_t>(v)] = w;
        rec(pos + 1);
        succ[static_cast<size_t>(gen)][static_cast<size_t>(w)] = -1;
        pred[static_cast<size_t>(gen)][static_cast<size_t>(v)] = -1;
        if (fresh) --n_used;
      }
    }
  };
  rec(0);
}

void enumerate_p_open(const RankContext& ctx, long long p, long long max_index,
                      const std::function<void(const Subgroup&)>& fn) {
  if (max_index < 1) return;
  std::vector<Subgroup> frontier{Subgroup::whole_group(ctx)};
  std::set<std::string> seen{frontier.front().graph().serialize()};
  while (!frontier.empty()) {
    for (const Subgroup& u : frontier) fn(u);
    std::vector<Subgroup> next;
    for (const Subgroup& u : frontier) {
      if (*u.index() * p > max_index) continue;
      RankContext uctx = RankContext::rebased(u.rank());
      for (const Subgroup& n : index_p_normals(uctx, p)) {
        std::vector<Word> gens;
        gens.reserve(n.basis().size());
        for (const Word& b : n.basis()) gens.push_back(u.embed(b));
        Subgroup cand = Subgroup::from_generators(ctx, gens);
        if (seen.insert(cand.graph().serialize()).second) next.push_back(cand);
      }
    }
    frontier = std::move(next);
  }
}

}  // namespace commfree
