#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <map>
#include <set>
#include <vector>

#include "commfree/stallings.hpp"

using namespace commfree;

namespace {

const RankContext F2 = RankContext::standard(2);

Word W(const char* s) { return parse_word(F2, s); }

std::vector<Word> WS(std::initializer_list<const char*> xs) {
  std::vector<Word> out;
  for (auto s : xs) out.push_back(W(s));
  return out;
}

// Composition closure of the permutations given by a complete coset table;
// the subgroup at the base is normal iff the closure has order n (regular
// action), and the quotient is then the closure itself.
std::vector<std::vector<int>> action_closure(const SubgroupGraph& g) {
  std::set<std::vector<int>> seen;
  std::vector<std::vector<int>> frontier;
  std::vector<int> idperm(static_cast<size_t>(g.n));
  for (int i = 0; i < g.n; ++i) idperm[static_cast<size_t>(i)] = i;
  seen.insert(idperm);
  frontier.push_back(idperm);
  while (!frontier.empty()) {
    std::vector<std::vector<int>> next;
    for (const auto& p : frontier)
      for (int gen = 0; gen < g.ambient_rank; ++gen) {
        std::vector<int> q(static_cast<size_t>(g.n));
        for (int v = 0; v < g.n; ++v)
          q[static_cast<size_t>(v)] =
              g.succ[static_cast<size_t>(gen)][static_cast<size_t>(p[static_cast<size_t>(v)])];
        if (seen.insert(q).second) next.push_back(q);
      }
    frontier = std::move(next);
  }
  return {seen.begin(), seen.end()};
}

int perm_order(const std::vector<int>& p) {
  std::vector<int> q(p.size());
  for (size_t i = 0; i < p.size(); ++i) q[i] = static_cast<int>(i);
  for (int ord = 1;; ++ord) {
    std::vector<int> r(p.size());
    for (size_t i = 0; i < p.size(); ++i) r[i] = p[q[i]];
    q = r;
    bool ident = true;
    for (size_t i = 0; i < p.size(); ++i)
      if (q[i] != static_cast<int>(i)) ident = false;
    if (ident) return ord;
  }
}

// Independent subnormal-chain search: try every normal index-p overgroup.
bool brute_p_open(const Subgroup& h, long long p) {
  if (!h.index()) return false;
  long long idx = *h.index();
  if (idx == 1) return true;
  if (idx % p != 0) return false;
  bool found = false;
  enumerate_subgroups(h.context(), static_cast<int>(p), [&](const Subgroup& k) {
    if (found || !k.index() || *k.index() != p) return;
    if (static_cast<long long>(action_closure(k.graph()).size()) != p) return;
    if (!k.contains_subgroup(h)) return;
    std::vector<Word> rebased;
    for (const Word& b : h.basis()) rebased.push_back(*k.rewrite(b));
    if (brute_p_open(Subgroup::from_generators(k.basis_context(), rebased), p)) found = true;
  });
  return found;
}

}  // namespace

TEST_CASE("whole group and trivial subgroup") {
  Subgroup F = Subgroup::whole_group(F2);
  CHECK(F.index() == 1);
  CHECK(F.rank() == 2);
  CHECK(F.basis() == WS({"a", "b"}));
  CHECK(F.contains(W("a b^-1 a^3")));
  Subgroup T = Subgroup::trivial_subgroup(F2);
  CHECK(T.rank() == 0);
  CHECK(!T.index().has_value());
  CHECK(!T.contains(W("a")));
  CHECK(T.contains(Word()));
}

TEST_CASE("standard cyclic kernels") {
  Subgroup H = standard_cyclic_kernel(F2, 0, 2);
  CHECK(H.index() == 2);
  CHECK(H.rank() == 3);
  // Membership is the mod-2 exponent condition on the distinguished letter.
  CHECK(H.contains(W("b a b^-1 a")));
  CHECK(H.contains(W("a^2")));
  CHECK(H.contains(W("b")));
  CHECK(!H.contains(W("a")));
  CHECK(!H.contains(W("a b")));
  CHECK(H.same_subgroup(Subgroup::from_generators(F2, WS({"a^2", "b", "a b a^-1"}))));

  for (long long m : {2, 3, 4, 5}) {
    Subgroup K = standard_cyclic_kernel(F2, 0, m);
    CHECK(K.index() == m);
    CHECK(K.rank() == 1 + m);
    CHECK(K.same_subgroup(Subgroup::from_generators(F2, schreier_basis(F2, 0, m))));
    CHECK(K.same_subgroup(Subgroup::from_generators(F2, commutator_basis(F2, 0, m))));
    CHECK(is_normal(K));
  }
}

TEST_CASE("infinite index detection") {
  Subgroup H = Subgroup::from_generators(F2, WS({"a^2", "b"}));
  CHECK(!H.index().has_value());
  CHECK(H.rank() == 2);
  CHECK(H.contains(W("b a^2")));
  CHECK(!H.contains(W("a b a^-1")));
  // No finite-index subgroup equals it (oracle: low-index sweep).
  enumerate_subgroups(F2, 6, [&](const Subgroup& k) { CHECK(!k.same_subgroup(H)); });
}

TEST_CASE("rewrite and embed round trip") {
  Subgroup H = Subgroup::from_generators(F2, WS({"a^2", "b^2", "a b"}));
  for (const char* s : {"a^2", "b^2", "a b", "a^2 b^2", "a b a^2 b^2 a b"}) {
    Word w = W(s);
    REQUIRE(H.contains(w));
    Word r = *H.rewrite(w);
    CHECK(H.embed(r) == w);
  }
  CHECK(!H.rewrite(W("a")).has_value());
  // basis letters map to basis words
  for (int k = 0; k < H.rank(); ++k)
    CHECK(H.embed(Word::letter(k)) == H.basis()[static_cast<size_t>(k)]);
}

TEST_CASE("intersection of the two standard index-2 kernels") {
  Subgroup A = standard_cyclic_kernel(F2, 0, 2);
  Subgroup B = standard_cyclic_kernel(F2, 1, 2);
  Subgroup I = intersect(A, B);
  CHECK(I.index() == 4);
  CHECK(I.rank() == 5);
  CHECK(I.contains(W("a^2")));
  CHECK(I.contains(W("b^2")));
  CHECK(I.contains(W("a b a^-1 b^-1")));
  CHECK(!I.contains(W("a b")));
  CHECK(A.contains_subgroup(I));
  CHECK(B.contains_subgroup(I));
}

TEST_CASE("intersection of infinite-index subgroups") {
  Subgroup A = Subgroup::from_generators(F2, WS({"a^2", "b a b^-1"}));
  Subgroup B = Subgroup::from_generators(F2, WS({"a"}));
  Subgroup I = intersect(A, B);
  CHECK(I.same_subgroup(Subgroup::from_generators(F2, WS({"a^2"}))));
}

TEST_CASE("point stabilizer: conjugates and normal core") {
  // a acts as (0 1), b acts as (0 2) on three points; H = Stab(0).
  SubgroupGraph g;
  g.ambient_rank = 2;
  g.n = 3;
  g.succ = {{1, 0, 2}, {2, 1, 0}};
  g.pred = {{1, 0, 2}, {2, 1, 0}};
  Subgroup H = Subgroup::from_graph(F2, g);
  CHECK(H.index() == 3);
  CHECK(H.rank() == 4);
  CHECK(!is_normal(H));
  Subgroup C = normal_core(H);
  CHECK(C.index() == 6);  // the action closure is all of S_3
  CHECK(is_normal(C));
  CHECK(H.contains_subgroup(C));

  Subgroup Ha = conjugate_subgroup(H, W("a"));
  for (const Word& b : H.basis()) CHECK(Ha.contains(conjugate(b, W("a"))));
  CHECK(!Ha.same_subgroup(H));
  // fast path (covering rebase) agrees with refolding generators
  std::vector<Word> conj_gens;
  for (const Word& b : H.basis()) conj_gens.push_back(conjugate(b, W("a")));
  CHECK(Ha.same_subgroup(Subgroup::from_generators(F2, conj_gens)));
}

TEST_CASE("transversal is a right Schreier transversal") {
  Subgroup H = standard_cyclic_kernel(F2, 0, 4);
  auto ts = H.transversal();
  REQUIRE(ts.size() == 4);
  CHECK(ts[0].trivial());
  // prefix closure
  for (const Word& t : ts)
    for (int l = 0; l < t.length(); ++l) {
      Word prefix = Word::from_codes(
          std::vector<int32_t>(t.codes().begin(), t.codes().begin() + l));
      CHECK(std::count(ts.begin(), ts.end(), prefix) == 1);
    }
  // distinct cosets: t_i t_j^-1 in H only for i == j
  for (size_t i = 0; i < ts.size(); ++i)
    for (size_t j = 0; j < ts.size(); ++j)
      CHECK(H.contains(ts[i] * inverse(ts[j])) == (i == j));
}

TEST_CASE("subgroup counts match the Hall recurrence") {
  // index n subgroups of F_2: 1, 3, 13, 71, 461
  std::map<long long, int> counts;
  enumerate_subgroups(F2, 5, [&](const Subgroup& h) {
    REQUIRE(h.index().has_value());
    ++counts[*h.index()];
    CHECK(h.rank() == 1 + *h.index());
  });
  CHECK(counts[1] == 1);
  CHECK(counts[2] == 3);
  CHECK(counts[3] == 13);
  CHECK(counts[4] == 71);
  CHECK(counts[5] == 461);
}

TEST_CASE("rank formula in rank 3") {
  const RankContext F3 = RankContext::standard(3);
  int seen = 0;
  enumerate_subgroups(F3, 3, [&](const Subgroup& h) {
    CHECK(h.rank() == 1 + *h.index() * 2);
    ++seen;
  });
  CHECK(seen == 1 + 7 + 97);  // index 1..3 counts for F_3
}

TEST_CASE("scq enumeration against brute force") {
  std::vector<long long> expect = {3, 4, 6, 6};
  for (long long m = 2; m <= 5; ++m) {
    auto subs = scq(F2, m);
    CHECK(static_cast<long long>(subs.size()) == expect[static_cast<size_t>(m - 2)]);
    // oracle: normal subgroups of index m with cyclic quotient, via coset tables
    std::set<std::string> brute;
    enumerate_subgroups(F2, static_cast<int>(m), [&](const Subgroup& h) {
      if (!h.index() || *h.index() != m) return;
      auto closure = action_closure(h.graph());
      if (static_cast<long long>(closure.size()) != m) return;  // not normal
      bool cyclic = false;
      for (const auto& p : closure)
        if (perm_order(p) == m) cyclic = true;
      if (!cyclic) return;
      brute.insert(h.graph().serialize());
    });
    std::set<std::string> ours;
    for (const auto& s : subs) {
      CHECK(is_normal(s));
      ours.insert(s.graph().serialize());
    }
    CHECK(ours == brute);
  }
  // prime p: (p^d - 1)/(p - 1)
  CHECK(scq(F2, 7).size() == 8);
  CHECK(scq(RankContext::standard(3), 3).size() == 13);
}

TEST_CASE("scq vector recovery") {
  for (long long m : {2, 3, 4, 6}) {
    for (const auto& t : scq_vectors(2, m)) {
      Subgroup h = scq_kernel(F2, t, m);
      auto rec = scq_recover_vector(h, m);
      REQUIRE(rec.has_value());
      CHECK(scq_kernel(F2, *rec, m).same_subgroup(h));
    }
  }
}

TEST_CASE("popenness certificates") {
  // nested standard kernels are p-open
  for (long long p : {2LL, 3LL}) {
    Subgroup H = standard_cyclic_kernel(F2, 0, p * p);
    auto cert = is_p_open(H, p);
    REQUIRE(cert.open);
    REQUIRE(cert.chain.size() == 3);
    CHECK(cert.chain[0].same_subgroup(Subgroup::whole_group(F2)));
    CHECK(cert.chain[2].same_subgroup(H));
    for (size_t i = 1; i < cert.chain.size(); ++i) {
      CHECK(cert.chain[i - 1].contains_subgroup(cert.chain[i]));
      CHECK(*cert.chain[i].index() == static_cast<long long>(p) * *cert.chain[i - 1].index());
    }
  }
  // stabilizer of a point under a = (0 1 2 3), b = (0 1): index 4, not 2-open
  SubgroupGraph g;
  g.ambient_rank = 2;
  g.n = 4;
  g.succ = {{1, 2, 3, 0}, {1, 0, 2, 3}};
  g.pred = {{3, 0, 1, 2}, {1, 0, 2, 3}};
  Subgroup S = Subgroup::from_graph(F2, g);
  CHECK(S.index() == 4);
  auto cert = is_p_open(S, 2);
  CHECK(!cert.open);
  CHECK(!cert.reason.empty());
  // odd index
  CHECK(!is_p_open(standard_cyclic_kernel(F2, 0, 3), 2).open);
  CHECK(is_p_open(Subgroup::whole_group(F2), 2).open);
  CHECK_THROWS(is_p_open(S, 4));
}

TEST_CASE("popenness agrees with brute force up to index 4") {
  int checked = 0;
  enumerate_subgroups(F2, 4, [&](const Subgroup& h) {
    CHECK(is_p_open(h, 2).open == brute_p_open(h, 2));
    ++checked;
  });
  CHECK(checked == 88);
}

TEST_CASE("hall completion") {
  Subgroup H = Subgroup::from_generators(F2, WS({"a^2", "b"}));
  auto hc = hall_completion(H);
  CHECK(hc.overgroup.same_subgroup(standard_cyclic_kernel(F2, 0, 2)));
  REQUIRE(hc.extended_basis.size() == 3);
  CHECK(std::vector<Word>(hc.extended_basis.begin(), hc.extended_basis.begin() + H.rank()) ==
        H.basis());
  CHECK(hc.overgroup.same_subgroup(Subgroup::from_generators(F2, hc.extended_basis)));

  // generic infinite-index subgroups: invariants only
  for (auto gens : {WS({"a b a^-1", "b^2 a"}), WS({"a^3", "b a b"}), WS({"a b a b^-1"})}) {
    Subgroup K = Subgroup::from_generators(F2, gens);
    auto c = hall_completion(K);
    REQUIRE(c.overgroup.index().has_value());
    CHECK(c.overgroup.contains_subgroup(K));
    CHECK(static_cast<int>(c.extended_basis.size()) == c.overgroup.rank());
    CHECK(std::vector<Word>(c.extended_basis.begin(), c.extended_basis.begin() + K.rank()) ==
          K.basis());
    CHECK(c.overgroup.same_subgroup(Subgroup::from_generators(F2, c.extended_basis)));
  }
  // a complete covering is its own completion
  Subgroup C = standard_cyclic_kernel(F2, 1, 3);
  auto cc = hall_completion(C);
  CHECK(cc.overgroup.same_subgroup(C));
  CHECK(cc.extended_basis == C.basis());
  // the trivial subgroup completes to the whole group
  auto tc = hall_completion(Subgroup::trivial_subgroup(F2));
  CHECK(tc.overgroup.same_subgroup(Subgroup::whole_group(F2)));
}

TEST_CASE("canonical form is construction independent") {
  Subgroup A = Subgroup::from_generators(F2, WS({"a^2", "b", "a b a^-1"}));
  Subgroup B = Subgroup::from_generators(F2, WS({"a b a^-1", "b", "b a^2 b^-1"}));
  CHECK(A.same_subgroup(B));
  CHECK(A.graph().serialize() == B.graph().serialize());
  Subgroup C = Subgroup::from_graph(F2, A.graph());
  CHECK(C.same_subgroup(A));
}
