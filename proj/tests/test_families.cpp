#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <set>
#include <string>
#include <vector>

#include "commfree/comm.hpp"
#include "commfree/families.hpp"
#include "commfree/homs.hpp"
#include "commfree/stallings.hpp"
#include "commfree/words.hpp"

using namespace commfree;

TEST_CASE("generator families") {
  RankContext ctx = RankContext::standard(2);

  std::vector<Commensuration> sm = sm_generators(ctx, 2);
  // 4 transvection germs of the whole group, 12 of each index-2 normal
  CHECK(sm.size() == 40);
  for (const Commensuration& c : sm) {
    CHECK(c.flavor == Flavor::profinite);
    CHECK(is_saut(c.iso));
  }

  std::vector<Commensuration> am = am_generators(ctx, 2);
  CHECK(am.size() == 58);  // adds inversions and adjacent transpositions

  // four cyclic quotients of order 3, each of rank 4
  std::vector<Commensuration> sm3 = sm_generators(ctx, 3);
  CHECK(sm3.size() == 4 + 4 * 24);

  std::vector<Commensuration> sp = spn_generators(ctx, 2, 1);
  CHECK(sp.size() == 40);
  for (const Commensuration& c : sp) {
    CHECK(c.flavor == Flavor::pro_p);
    CHECK(c.p == 2);
  }
  CHECK_THROWS_AS(spn_generators(ctx, 3, 2), std::invalid_argument);

  // the p-open enumeration matches a brute filter over all subgroups
  std::set<std::string> walked;
  enumerate_p_open(ctx, 2, 4, [&](const Subgroup& u) {
    CHECK(is_p_open(u, 2).open);
    CHECK(walked.insert(u.graph().serialize()).second);
  });
  std::set<std::string> brute;
  enumerate_subgroups(ctx, 4, [&](const Subgroup& u) {
    if (is_p_open(u, 2).open) brute.insert(u.graph().serialize());
  });
  CHECK(walked == brute);

  size_t expected = 0;
  enumerate_p_open(ctx, 2, 4, [&](const Subgroup& u) {
    expected += static_cast<size_t>(u.rank()) * static_cast<size_t>(u.rank() - 1) * 2;
  });
  CHECK(spn_generators(ctx, 2, 2).size() == expected);
}

TEST_CASE("determinant table") {
  for (int d : {2, 3}) {
    RankContext ctx = RankContext::standard(d);
    for (long long m : {2LL, 3LL, 4LL, 5LL}) {
      for (const DetLemmaEntry& e : det_lemma_suite(ctx, m)) {
        INFO("rank ", d, " level ", m, " ", e.name);
        CHECK(e.computed == e.predicted);
      }
    }
  }
}

TEST_CASE("transvection restricted to the cyclic kernel") {
  for (int d : {2, 3}) {
    RankContext ctx = RankContext::standard(d);
    for (long long m : {1LL, 2LL, 3LL, 4LL}) {
      RestrictionReport r = r12_restriction_check(ctx, m);
      INFO("rank ", d, " level ", m);
      CHECK(r.power_formula);
      CHECK(r.abelian_fixed);
      CHECK(r.unipotent);
    }
  }

  RankContext ctx = RankContext::standard(2);
  Subgroup h = standard_cyclic_kernel(ctx, 0, 3);
  FreeHom res = restrict_hom(nielsen_right(Subgroup::whole_group(ctx), 0, 1), h);
  CHECK(det_abel(res) == 1);
  CHECK(is_saut(res));
}

TEST_CASE("rational matrix identities") {
  for (long long p : {2LL, 3LL, 5LL}) {
    ArithmeticReport r = arithmetic_identities(p, 4);
    INFO("p ", p);
    CHECK(r.conj_shift);
    CHECK(r.diag_product);
    CHECK(r.power_up);
    CHECK(r.power_down);
    CHECK(r.ok);
  }

  Mat2 s{Rat(0), Rat(-1), Rat(1), Rat(0)};
  CHECK(mat2_projectively_equal(s * s, mat2_identity()));
  CHECK(!mat2_projectively_equal(s, mat2_identity()));
  CHECK(mat2_power(s, 4) == mat2_identity());
  CHECK(mat2_power(s, -1) == mat2_power(s, 3));
}

TEST_CASE("congruence pattern closure") {
  CHECK(pattern_closure(2, 2, 20, 11));
  CHECK(pattern_closure(3, 6, 20, 12));
  CHECK(pattern_closure(5, 10, 10, 13));
}
