#include <algorithm>

#include "common.hpp"
#include "doctest.h"
#include "gvas/reach.hpp"

using namespace gvas;

namespace {

bool has_cycle(const std::vector<CycleSummary>& cs, int x, Int left, Int right) {
  return std::any_of(cs.begin(), cs.end(), [&](const CycleSummary& c) {
    return c.nonterminal == x && c.left == left && c.right == right && c.global == left + right;
  });
}

}  // namespace

TEST_CASE("simple cycles of G1") {
  Gvas g = fixture::load("g1");
  auto cs = simple_cycles(g);
  CHECK(has_cycle(cs, fixture::nt(g, "Y"), -1, 2));
  CHECK(has_cycle(cs, fixture::nt(g, "X"), -1, 0));
  for (const CycleSummary& c : cs) {
    CycleEffects e = cycle_effects(c.witness);
    CHECK(e.left == c.left);
    CHECK(e.right == c.right);
    CHECK(min_valid(cycle_left(c.witness)) == c.left_need);
  }
}

TEST_CASE("trivial grammar has no cycles") {
  CHECK(simple_cycles(fixture::load("trivial")).empty());
}

TEST_CASE("G2 cycle effects are even") {
  for (const CycleSummary& c : simple_cycles(fixture::load("g2"))) CHECK(c.global % 2 == 0);
}

TEST_CASE("residuum of G2") {
  Gvas g = fixture::load("g2");
  ResiduumInfo r = residuum(g);
  CHECK(r.d == 2);
  CHECK(r.r.at(fixture::nt(g, "X")) == 0);
  CHECK(r.r.at(fixture::nt(g, "Y")) == 1);
}

TEST_CASE("residues match complete derivations") {
  for (std::string name : {"g2", "g4", "g6", "st1"}) {
    CAPTURE(name);
    Gvas g = fixture::load(name);
    ResiduumInfo r = residuum(g);
    for (auto [x, res] : r.r)
      for (const Derivation& d : enumerate_complete(g, x, 21, 200)) {
        Int e = effect_of(d);
        CHECK((r.d == 0 ? e == res : ((e - res) % r.d + r.d) % r.d == 0));
      }
  }
}

TEST_CASE("residuum of G1") {
  ResiduumInfo r = residuum(fixture::load("g1"));
  CHECK(r.d == 1);
}

TEST_CASE("infinitary fixtures") {
  CHECK(is_infinitary(fixture::load("g2")).value);
  CHECK(is_infinitary(fixture::load("g6")).value);
  CHECK_FALSE(is_infinitary(fixture::load("g4")).value);
  CHECK_THROWS_AS(is_infinitary(fixture::load("g1")), Error);
}

TEST_CASE("infinitary pump has positive left and global effects") {
  for (std::string name : {"g2", "g6", "st1", "st2", "st3"}) {
    CAPTURE(name);
    Gvas g = prune(fixture::load(name));
    Infinitary inf = is_infinitary(g);
    REQUIRE(inf.value);
    REQUIRE(inf.pump);
    CycleEffects e = cycle_effects(*inf.pump);
    CHECK(e.left > 0);
    CHECK(e.global > 0);
    CHECK(find_positive_cycle(g, g.start, 25).has_value());
  }
  CHECK_FALSE(find_positive_cycle(fixture::load("g4"), 0, 25).has_value());
}

TEST_CASE("constants of G6") {
  Constants c = constants_of(fixture::load("g6"));
  CHECK(c.A == 0);
  CHECK(c.C == 1);
  CHECK(c.D == 0);
  CHECK(c.Dp == 0);
}

TEST_CASE("constants of G2 satisfy their predicates") {
  Gvas g = fixture::load("g2");
  Constants c = constants_of(g);
  for (const auto& [x, cyc] : c.pump) {
    CycleEffects e = cycle_effects(cyc);
    CHECK(e.left > 0);
    CHECK(e.global > 0);
    CHECK(run_validity(cycle_left(cyc), c.A).valid);
  }
  for (const auto& [x, d] : c.completion) {
    CHECK(effect_of(d) >= -c.C);
    CHECK(run_validity(run_of(d), c.C).valid);
    CHECK(produced_by(g, d));
  }
}

TEST_CASE("D prime formula") {
  Gvas g = fixture::load("g2");
  REQUIRE(component_dag(g).members[component_dag(g).top].size() == 3);
  Constants c = constants_with(g, 2, constants_of(g).pump);
  CHECK(c.D == 6);
  CHECK(c.Dp == 42);
}

TEST_CASE("bezout combinations") {
  CHECK(bezout_combination({2}, 2) == std::vector<Int>{1});
  CHECK(bezout_combination({3}, 3) == std::vector<Int>{1});
  std::vector<Int> k = bezout_combination({4, 6}, 12);
  REQUIRE(k.size() == 2);
  CHECK(k[0] >= 0);
  CHECK(k[1] >= 0);
  CHECK(((4 * k[0] + 6 * k[1]) % 12) == 2);
  std::vector<Int> m = bezout_combination({-3, 5, 10}, 15);
  CHECK(((-3 * m[0] + 5 * m[1] + 10 * m[2]) % 15 + 15) % 15 == 1);
  CHECK_THROWS_AS(bezout_combination({}, 2), Error);
  CHECK_THROWS_AS(bezout_combination({4}, 6), Error);
}

TEST_CASE("gcd of effects") {
  CHECK(gcd_of({4, 6, -8}) == 2);
  CHECK(gcd_of({}) == 0);
}

TEST_CASE("simple derivation profiles") {
  Gvas g = fixture::load("st3");
  auto ps = simple_derivations(g, g.start);
  std::vector<std::pair<Int, Int>> got;
  for (const SimpleProfile& p : ps) {
    got.push_back({p.effect, p.need});
    CHECK(effect_of(p.witness) == p.effect);
    CHECK(min_valid(run_of(p.witness)) == p.need);
  }
  std::sort(got.begin(), got.end());
  CHECK(got == std::vector<std::pair<Int, Int>>{{-2, 2}, {-1, 1}, {0, 0}, {1, 2}});
}

TEST_CASE("contexts and double contexts") {
  Gvas g = fixture::load("g2");
  IdSource ids;
  int x = fixture::nt(g, "X"), y = fixture::nt(g, "Y");
  auto c = context_between(g, x, y, ids);
  REQUIRE(c);
  CHECK(c->tree.at(c->distinguished).label == Symbol::N(y));
  auto dc = double_context(g, x, ids);
  REQUIRE(dc);
  auto [tree, l1, l2] = *dc;
  CHECK(tree.at(l1).label == Symbol::N(x));
  CHECK(tree.at(l2).label == Symbol::N(x));
  CHECK_FALSE(double_context(fixture::load("g1"), 0, ids).has_value());
  auto small = smallest_complete(g);
  REQUIRE(small[x]);
  CHECK(produced_by(g, *small[x]));
  CHECK(live_nonterminals(g)[y]);
}
