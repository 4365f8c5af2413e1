#include <algorithm>

#include "common.hpp"
#include "doctest.h"
#include "gvas/reach.hpp"

using namespace gvas;

namespace {

// Explicit points of a linear set with coordinates up to w.
std::set<Point> enumerate(const LinearSet2& s, Int w) {
  std::set<Point> out{s.base};
  std::vector<Point> todo{s.base};
  while (!todo.empty()) {
    Point p = todo.back();
    todo.pop_back();
    for (Point q : s.periods) {
      Point n{p.first + q.first, p.second + q.second};
      if (n.first > w || n.second > w || n == p) continue;
      if (out.insert(n).second) todo.push_back(n);
    }
  }
  return out;
}

void check_round_trip(const SemilinearRelation& s, Int w) {
  Gvas h = semilin_to_thin(s);
  CHECK(component_dag(h).all_thin());
  ReachOracle ro(h, 64);
  for (Int a = 0; a <= w; ++a)
    for (Int b = 0; b <= w; ++b) {
      Verdict v = ro.query(a, b);
      REQUIRE(v.kind != VerdictKind::Unknown);
      CHECK((v.kind == VerdictKind::Yes) == member(s, {a, b}));
    }
}

}  // namespace

TEST_CASE("membership agrees with explicit enumeration") {
  std::vector<LinearSet2> sets = {
      {{0, 0}, {}}, {{1, 3}, {{1, 1}}}, {{0, 2}, {{1, 1}, {0, 3}}}, {{2, 0}, {{1, 1}, {2, 0}, {0, 5}}}, {{4, 4}, {{0, 0}}}};
  for (const LinearSet2& s : sets) {
    std::set<Point> pts = enumerate(s, 16);
    for (Int x = 0; x <= 16; ++x)
      for (Int y = 0; y <= 16; ++y) CHECK(member(s, {x, y}) == (pts.count({x, y}) == 1));
  }
}

TEST_CASE("regions") {
  CHECK(Region::rectangle(1, 3, 2, 4).contains({3, 2}));
  CHECK_FALSE(Region::rectangle(1, 3, 2, 4).contains({4, 2}));
  CHECK(Region::vertical_line(2, 5).contains({2, 5}));
  CHECK_FALSE(Region::vertical_line(2, 5).contains({2, 4}));
  CHECK(Region::upper_triangle(1, 2).contains({3, 5}));
  CHECK_FALSE(Region::upper_triangle(1, 2).contains({3, 4}));
  CHECK(Region::lower_triangle(1, 2).contains({5, 3}));
  CHECK_FALSE(Region::lower_triangle(1, 2).contains({5, 4}));
  CHECK(Region::right_of(3).contains({3, 0}));
}

TEST_CASE("restrict and unite") {
  SemilinearRelation s{{{{0, 0}, {{1, 1}}}}, true};
  SemilinearRelation t{{{{0, 3}, {{1, 1}}}}, true};
  SemilinearRelation u = unite(s, t);
  CHECK(member(u, {2, 2}));
  CHECK(member(u, {2, 5}));
  CHECK_FALSE(member(u, {2, 4}));
  SemilinearRelation r = restrict(u, Region::rectangle(0, 4, 0, 4));
  CHECK(member(r, {1, 4}));
  CHECK_FALSE(member(r, {2, 5}));
  CHECK_FALSE(member(r, {5, 5}));
}

TEST_CASE("diagonalize adds the diagonal period") {
  SemilinearRelation s{{{{0, 2}, {{1, 0}, {0, 1}}}}, false};
  SemilinearRelation d = diagonalize(s);
  CHECK(d.diagonalized);
  REQUIRE(d.parts.size() == 1);
  CHECK(std::count(d.parts[0].periods.begin(), d.parts[0].periods.end(), Point{1, 1}) == 1);
  CHECK(member(d, {3, 7}));
  CHECK_FALSE(member(d, {3, 1}));
  SemilinearRelation column{{{{0, 2}, {{0, 2}}}}, false};
  CHECK_THROWS_AS(diagonalize(column), Error);
}

TEST_CASE("json round trip") {
  SemilinearRelation s{{{{1, 2}, {{1, 1}, {0, 3}}}, {{0, 0}, {{1, 1}}}}, true};
  SemilinearRelation t = semilinear_from_json(to_json(s));
  CHECK(t.diagonalized);
  REQUIRE(t.parts.size() == 2);
  CHECK(t.parts[0] == s.parts[0]);
  CHECK(t.parts[1] == s.parts[1]);
  CHECK_FALSE(semilinear_from_json(to_json(SemilinearRelation{{{{0, 0}, {}}}, false})).diagonalized);
}

TEST_CASE("vertical lines") {
  SemilinearRelation v = vertical_rep(2, 5, 3, 2);
  CHECK(member(v, {2, 5}));
  CHECK(member(v, {2, 8}));
  CHECK_FALSE(member(v, {2, 6}));
  CHECK_FALSE(member(v, {2, 2}));
  CHECK_FALSE(member(v, {3, 8}));
  SemilinearRelation p = vertical_rep(1, 4, 0, 4);
  CHECK(member(p, {1, 4}));
  CHECK_FALSE(member(p, {1, 5}));
}

TEST_CASE("semilinear relations become thin grammars") {
  check_round_trip({{{{0, 0}, {{1, 1}}}}, true}, 10);
  check_round_trip({{{{0, 1}, {{1, 1}, {0, 2}}}, {{3, 0}, {{1, 1}}}}, true}, 10);
  check_round_trip({{}, true}, 6);
}

TEST_CASE("line thresholds agree with the oracle") {
  for (std::string name : {"g6", "g2", "st1", "st3"}) {
    Gvas g = prune(fixture::load(name));
    Infinitary inf = is_infinitary(g);
    REQUIRE(inf.pump);
    auto smallest = smallest_complete(g);
    IdSource ids;
    for (const auto& [id, n] : inf.pump->tree.nodes) ids.bump_past(id);
    Derivation tau = plug(*inf.pump, *smallest[g.start], ids);
    Int a0 = min_valid(run_of(tau));
    ReachOracle ro(g, 128);
    for (Int a = a0; a <= a0 + 2; ++a) {
      CAPTURE(name);
      CAPTURE(a);
      LineRep r = line_linear_threshold(g, a, tau, tau.root, inf.pump->distinguished);
      CHECK(r.a == a);
      CHECK(r.T <= r.constructed_T);
      for (Int b = r.T; b <= r.T + 10; ++b) {
        Verdict v = ro.query(a, b);
        REQUIRE(v.kind != VerdictKind::Unknown);
        CHECK(member(r.rep, {a, b}) == (v.kind == VerdictKind::Yes));
      }
      if (name == "g2") CHECK(r.d == 2);
      if (name == "g6") CHECK(r.d == 1);
    }
  }
}

TEST_CASE("line threshold rejects a cycle without positive left effect") {
  Gvas g = fixture::load("g4");
  IdSource ids;
  auto dc = double_context(g, g.start, ids);
  REQUIRE(dc);
  auto [tree, l1, l2] = *dc;
  (void)l2;
  CHECK_THROWS_AS(line_linear_threshold(g, 0, tree, tree.root, l1), Error);
}
