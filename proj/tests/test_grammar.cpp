#include <algorithm>
#include <random>

#include "common.hpp"
#include "doctest.h"
#include "gvas/json_io.hpp"
#include "gvas/oracle.hpp"
#include "gvas/reach.hpp"

using namespace gvas;

TEST_CASE("parse smallest grammar") {
  Gvas g = parse_gvas("start S\nS -> 0");
  CHECK(g.nt_count() == 1);
  CHECK(g.rules.size() == 1);
  CHECK_FALSE(g.binarized);
}

TEST_CASE("parse G1") {
  Gvas g = fixture::raw("g1");
  CHECK(g.nt_count() == 2);
  CHECK(g.find("X") >= 0);
  CHECK(g.find("Y") >= 0);
  CHECK(g.rules.size() == 4);
  CHECK(g.names[g.start] == "X");
}

TEST_CASE("empty rhs is padded") {
  Gvas g = parse_gvas("start S\nS ->");
  REQUIRE(g.rules.size() == 1);
  CHECK(g.rules[0].rhs.empty());
  Gvas b = binarize(g);
  CHECK(b.rules[0].rhs == std::vector<Symbol>{Symbol::T(0), Symbol::T(0)});
}

TEST_CASE("parse errors") {
  CHECK_THROWS_AS(parse_gvas("S -> 0"), Error);
  CHECK_THROWS_AS(parse_gvas("start T\nS -> 0"), Error);
  CHECK_THROWS_AS(parse_gvas("start S\nstart S\nS -> 0"), Error);
  CHECK_THROWS_AS(parse_gvas("start S\nS -> 0 $"), Error);
  try {
    parse_gvas("start S\nS => 0");
    FAIL("no error");
  } catch (const Error& e) {
    CHECK(std::string(e.what()).find("line 2") != std::string::npos);
    CHECK(e.kind() == ErrorKind::Syntax);
  }
}

TEST_CASE("comments and identifiers") {
  Gvas g = parse_gvas("# header\n  # indented\nstart A_1\nA_1 -> -3 B2 4\nB2 -> 0\n");
  CHECK(g.nt_count() == 2);
  CHECK(g.rules[0].rhs[0] == Symbol::T(-3));
}

TEST_CASE("binarize follows the right-nested scheme") {
  Gvas g = fixture::load("g2");
  CHECK(g.binarized);
  CHECK(to_text(g) == "start X\nX -> X#1 1\nX#1 -> X Y\nY -> X 1\nX -> 0 0\n");
  Gvas long_rule = binarize(parse_gvas("start S\nS -> 1 2 3 4 5\n"));
  CHECK(to_text(long_rule) == "start S\nS -> S#1 5\nS#1 -> S#2 4\nS#2 -> S#3 3\nS#3 -> 1 2\n");
  for (const Rule& r : long_rule.rules) CHECK(r.rhs.size() == 2);
  CHECK(long_rule.origins[long_rule.find("S#2")] == Origin::Binarization);
}

TEST_CASE("binarize is idempotent on binary grammars") {
  Gvas g = fixture::load("g6");
  Gvas h = binarize(g);
  CHECK(h.rules == g.rules);
  CHECK(h.names == g.names);
}

TEST_CASE("size_of") {
  CHECK(size_of(binarize(parse_gvas("start S\nS -> 0"))) == 1 + 1 + 2 + 2);
  CHECK(size_of(parse_gvas("start S\nS -> 0")) == 4);
  CHECK(bit_length(-5) == 3);
  CHECK(bit_length(0) == 1);
  // 3 nonterminals + 4 rules + 8 rhs symbols + bits of 1, 1, 0, 0
  CHECK(size_of(fixture::load("g2")) == 19);
}

TEST_CASE("reverse") {
  Gvas g = fixture::text("start X\nX -> 5 Y\nX -> Y Z\nY -> 0 0\nZ -> 1 1\n");
  Gvas r = reverse(g);
  CHECK(r.rules[0].rhs == std::vector<Symbol>{Symbol::N(g.find("Y")), Symbol::T(-5)});
  CHECK(r.rules[1].rhs == std::vector<Symbol>{Symbol::N(g.find("Z")), Symbol::N(g.find("Y"))});
  CHECK(reverse(r).rules == g.rules);
}

TEST_CASE("component dag classification") {
  Gvas g1 = fixture::load("g1");
  ComponentDag d1 = component_dag(g1);
  CHECK(d1.members.size() == 2);
  CHECK(d1.all_thin());
  CHECK(d1.comp_of[g1.find("X")] == d1.top);
  CHECK(d1.comp_of[g1.find("X#1")] == d1.top);
  CHECK(d1.comp_of[g1.find("Y")] != d1.top);

  Gvas g2 = fixture::load("g2");
  ComponentDag d2 = component_dag(g2);
  CHECK(d2.members.size() == 1);
  CHECK(d2.branching(d2.top));

  ComponentDag dt = component_dag(fixture::load("trivial"));
  CHECK(dt.members.size() == 1);
  CHECK(dt.all_thin());
}

TEST_CASE("branching is uniform inside components") {
  std::vector<Gvas> gs{fixture::load("g1"), fixture::load("g2"), fixture::load("g4"), fixture::load("g6")};
  for (const Gvas& g : corpus(0xC0FFEE, 30)) gs.push_back(g);
  for (const Gvas& g : gs) {
    ComponentDag dag = component_dag(g);
    for (size_t c = 0; c < dag.members.size(); ++c)
      for (int x : dag.members[c]) CHECK(derives_two_copies(g, x) == dag.branching(static_cast<int>(c)));
  }
}

TEST_CASE("text and JSON round trips") {
  for (const char* name : {"g1", "g2", "g4", "g6", "trivial"}) {
    Gvas g = fixture::raw(name);
    Gvas again = parse_gvas(to_text(g));
    CHECK(to_text(again) == to_text(g));
    Gvas j = gvas_from_json(to_json(g));
    CHECK(to_text(j) == to_text(g));
    Gvas b = fixture::load(name);
    CHECK(to_text(binarize(parse_gvas(to_text(b)))) == to_text(b));
  }
}

TEST_CASE("substitute") {
  Gvas g2 = fixture::load("g2");
  // Y behaves as X followed by +1
  Gvas hy = prefixed(restrict_to(g2, g2.find("Y")), "H_");
  Gvas s = substitute(g2, g2.find("Y"), hy);
  CHECK(s.find("Y") < 0);
  Budget b{25, 16, 10'000'000};
  CHECK(brute_window(s, 10, b) == brute_window(g2, 10, b));

  Gvas g = fixture::text("start S\nS -> 1 V\nV -> 2 -2\n");
  Gvas zero = fixture::text("start W\nW -> 0 0\n");
  Gvas t = substitute(g, g.find("V"), zero);
  CHECK(brute_window(t, 10, b) == brute_window(g, 10, b));

  CHECK_THROWS_AS(substitute(g2, g2.find("Y"), g2), Error);
}

namespace {

// Relation of an arbitrary-arity grammar over counters [0, cap], computed by
// plain Kleene iteration on the unbinarized rules.
std::vector<std::set<std::pair<Int, Int>>> nary_fixpoint(const Gvas& g, Int cap) {
  std::vector<std::set<std::pair<Int, Int>>> rel(g.nt_count());
  bool changed = true;
  while (changed) {
    changed = false;
    auto old = rel;
    for (const Rule& r : g.rules)
      for (Int i = 0; i <= cap; ++i) {
        std::set<Int> cur{i};
        for (const Symbol& s : r.rhs) {
          std::set<Int> next;
          for (Int v : cur) {
            if (!s.nt) {
              if (v + s.v >= 0 && v + s.v <= cap) next.insert(v + s.v);
            } else {
              for (auto [a, b] : old[s.id()])
                if (a == v) next.insert(b);
            }
          }
          cur = next;
        }
        for (Int o : cur) changed |= rel[r.lhs].insert({i, o}).second;
      }
  }
  return rel;
}

}  // namespace

TEST_CASE("binarize and reverse preserve relations on windows") {
  Budget b{12, 10, 10'000'000};
  std::vector<Gvas> gs{fixture::raw("g1"), fixture::raw("g2"), fixture::raw("g4"), fixture::raw("g6")};
  auto c = corpus(0xC0FFEE, 20);
  for (const Gvas& g : c) gs.push_back(g);
  for (const Gvas& g : gs) {
    Gvas bin = binarize(g);
    auto direct = nary_fixpoint(g, 10);
    Saturation sat(bin, 10);
    for (Int i = 0; i <= 10; ++i)
      for (Int o = 0; o <= 10; ++o) CHECK(sat.has(bin.start, i, o) == (direct[g.start].count({i, o}) == 1));
    PairSet fwd = brute_window(bin, 10, b);
    PairSet bwd = brute_window(reverse(bin), 10, b);
    for (auto [s, t] : fwd) CHECK(bwd.count({t, s}) == 1);
    for (auto [s, t] : bwd) CHECK(fwd.count({t, s}) == 1);
  }
}
