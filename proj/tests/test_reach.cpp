#include "common.hpp"
#include "doctest.h"
#include "gvas/reach.hpp"

using namespace gvas;

namespace {

const Budget kBrute{40, 64, 50'000'000};

// R_H agrees with R_G on [0,w]^2: brute-force pairs of G are in H, and no
// extra pair of H is refuted for G.
void check_window(const Gvas& g, const Gvas& h, Int w) {
  PairSet pg = brute_window(g, w, kBrute);
  Saturation sh(h, 64);
  ReachOracle rg(g, 64);
  for (Int a = 0; a <= w; ++a)
    for (Int b = 0; b <= w; ++b) {
      CAPTURE(a);
      CAPTURE(b);
      if (pg.count({a, b})) CHECK(sh.has(h.start, a, b));
      else if (sh.has(h.start, a, b)) CHECK(rg.query(a, b).kind != VerdictKind::No);
    }
}

}  // namespace

TEST_CASE("bound formulas") {
  CHECK(bmax_formula(2, 3, 5, 0) == 152);
  CHECK(t_formula(5, 2, 3) == 11);
}

TEST_CASE("bounds of G6") {
  Gvas g = fixture::load("g6");
  CoverBounds b = cover_bounds(g, 0);
  CHECK(b.m == 1);
  CHECK(b.bMax == bmax_formula(1, g.nt_count(), 0, dag_depth(component_dag(g))));
  CHECK(b.T == t_formula(0, 1, 1));
  CHECK(dag_depth(component_dag(g)) == 0);
}

TEST_CASE("negative cycles block the bounds") {
  Gvas g = fixture::load("g4");
  CHECK(has_negative_cycle(g));
  CHECK_FALSE(has_negative_cycle(fixture::load("g6")));
  try {
    cover_bounds(g, 0);
    FAIL("expected NegativeCycleExists");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::NegativeCycleExists);
  }
}

TEST_CASE("cover examples") {
  CHECK(cover(fixture::load("trivial"), 4, 4).kind == VerdictKind::Yes);
  Gvas g6 = fixture::load("g6");
  Verdict v = cover(g6, 0, 7);
  REQUIRE(v.kind == VerdictKind::Yes);
  CoverBounds b = cover_bounds(g6, 0);
  CHECK(v.witness_output >= 7);
  CHECK(v.witness_output <= b.bMax);
  CHECK(run_validity(run_of(*v.witness), 0).final_value == v.witness_output);
  CHECK(cover(fixture::load("g1"), 2, 5).kind == VerdictKind::No);
}

TEST_CASE("cover is definitive without negative cycles") {
  for (std::string name : {"g2", "g6", "st1"}) {
    CAPTURE(name);
    Gvas g = prune(fixture::load(name));
    REQUIRE_FALSE(has_negative_cycle(g));
    PairSet p = brute_window(g, 12, kBrute);
    for (Int a = 0; a <= 3; ++a)
      for (Int t = 0; t <= 12; ++t) {
        CAPTURE(a);
        CAPTURE(t);
        Verdict v = cover(g, a, t);
        REQUIRE(v.kind != VerdictKind::Unknown);
        bool brute = false;
        for (auto [x, y] : p) brute = brute || (x == a && y >= t);
        if (brute) CHECK(v.kind == VerdictKind::Yes);
        if (v.kind == VerdictKind::Yes) {
          CHECK(v.witness_output >= t);
          CHECK(run_validity(run_of(*v.witness), a).final_value == v.witness_output);
        }
      }
  }
}

TEST_CASE("small lines") {
  PipelineOptions opt;
  struct Case {
    std::string name;
    Int a;
    bool infinitary;
  };
  for (const Case& c : {Case{"g6", 0, true}, Case{"g4", 3, false}, Case{"g2", 0, true}, Case{"st3", 1, true}}) {
    CAPTURE(c.name);
    Gvas g = prune(fixture::load(c.name));
    LinesResult r = small_lines(g, c.a, opt);
    CHECK(r.infinitary == c.infinitary);
    CHECK(component_dag(r.h).all_thin());
    ReachOracle rg(g, 128), rh(r.h, 128);
    for (Int b = 0; b <= r.T + 10; ++b) {
      CAPTURE(b);
      Verdict vh = rh.query(c.a, b);
      REQUIRE(vh.kind != VerdictKind::Unknown);
      Verdict vg = rg.query(c.a, b);
      REQUIRE(vg.kind != VerdictKind::Unknown);
      if (vh.kind == VerdictKind::Yes) CHECK(vg.kind == VerdictKind::Yes);
      if (b >= r.T) CHECK(vh.kind == vg.kind);
    }
  }
  CHECK(small_lines(fixture::load("g6"), 0, opt).success);
}

TEST_CASE("bounded area on the trivial grammar") {
  Gvas g = fixture::load("trivial");
  Gvas h = bounded_area(g, 0, {});
  CHECK(component_dag(h).all_thin());
  check_window(g, h, 8);
  Saturation s(h, 16);
  CHECK(s.has(h.start, 3, 3));
  CHECK_FALSE(s.has(h.start, 3, 4));
}

TEST_CASE("thinify keeps thin grammars") {
  Gvas g = fixture::load("g1");
  Gvas h = thinify(g);
  CHECK(component_dag(h).all_thin());
  CHECK(h.rules.size() == g.rules.size());
  CHECK(h.nt_count() == g.nt_count());
}

TEST_CASE("thinify fixtures keep their window relation") {
  for (std::string name : {"g2", "g4", "g6", "st1"}) {
    CAPTURE(name);
    Gvas g = fixture::load(name);
    ThinifyStats stats;
    Gvas h = thinify(g, {}, &stats);
    CHECK(component_dag(h).all_thin());
    CHECK(stats.substitutions >= 1);
    check_window(g, h, 8);
  }
}

TEST_CASE("reach examples") {
  Gvas g2 = fixture::load("g2");
  Verdict yes = reach(g2, 0, 2);
  REQUIRE(yes.kind == VerdictKind::Yes);
  CHECK(yes.witness_output == 2);
  CHECK(annotate(*yes.witness, 0).out.at(yes.witness->root) == 2);
  CHECK(reach(g2, 0, 3).kind == VerdictKind::No);
  CHECK(reach(fixture::load("trivial"), 5, 5).kind == VerdictKind::Yes);
  CHECK(reach(fixture::load("g1"), 3, 8).kind == VerdictKind::Yes);
}

TEST_CASE("corpus is seeded and within limits") {
  auto a = corpus(0xC0FFEE, 30), b = corpus(0xC0FFEE, 30);
  REQUIRE(a.size() == 30);
  for (size_t i = 0; i < a.size(); ++i) {
    CHECK(to_text(a[i]) == to_text(b[i]));
    CHECK(a[i].nt_count() <= 3);
    CHECK(a[i].rules.size() <= 6);
    for (const Rule& r : a[i].rules) {
      CHECK(r.rhs.size() <= 3);
      for (const Symbol& s : r.rhs)
        if (!s.nt) CHECK((s.v >= -3 && s.v <= 3));
    }
  }
  CHECK(to_text(corpus(1, 1)[0]) != to_text(a[0]));
}

TEST_CASE("reach agrees with brute force on corpus samples") {
  auto gs = corpus(0xC0FFEE, 6);
  for (size_t i = 0; i < gs.size(); ++i) {
    CAPTURE(i);
    Gvas g = binarize(gs[i]);
    PairSet p = brute_window(g, 4, kBrute);
    for (Int a = 0; a <= 4; a += 2)
      for (Int b = 0; b <= 4; ++b) {
        Verdict v = reach(g, a, b);
        if (p.count({a, b})) CHECK(v.kind == VerdictKind::Yes);
        if (v.kind == VerdictKind::Unknown) CHECK_FALSE(v.reason.empty());
      }
  }
}
