#include "common.hpp"
#include "doctest.h"
#include "gvas/reach.hpp"
#include "gvas/supertree.hpp"

using namespace gvas;

namespace {

struct Built {
  Gvas g;
  Constants c;
  std::unique_ptr<SaturationOracles> oracles;
  Supertree st;
};

Built build(const std::string& name, Int a) {
  Built b;
  b.g = prune(fixture::load(name));
  b.c = constants_of(b.g);
  b.oracles = std::make_unique<SaturationOracles>(b.g, std::max<Int>(64, 2 * (b.c.A + b.c.C * b.c.Dp + 1)));
  b.st = build_supertree(b.g, a, b.c, *b.oracles);
  return b;
}

// The initial rule of superleaf i, as start rule of its own grammar.
bool leaf_derives(const LeafRules& lr, int i, Int a, Int b) {
  Gvas h = lr.h;
  int s = h.add_nt(h.fresh_name("Q"), Origin::Pipeline);
  h.rules.push_back({s, lr.initial[i].rhs});
  h.start = s;
  h = binarize(h);
  return Saturation(h, 128).has(s, a, b);
}

const std::vector<std::pair<std::string, std::vector<Int>>> kBuilds = {
    {"g2", {0, 1}}, {"g6", {0, 1}}, {"st1", {0, 1, 2}}, {"st2", {0, 1, 2}}, {"st3", {0, 1, 2}}};

}  // namespace

TEST_CASE("constants of the supertree fixtures") {
  Constants c = constants_of(prune(fixture::load("st1")));
  CHECK(c.A == 1);
  CHECK(c.C == 2);
  CHECK(c.D == 2);
  CHECK(c.Dp == 6);
  Constants c3 = constants_of(prune(fixture::load("st3")));
  CHECK(c3.A == 2);
  CHECK(c3.Dp == 6);
}

TEST_CASE("input at least A succeeds at the root") {
  Built b = build("st1", 1);
  REQUIRE(b.st.nodes.size() == 2);
  CHECK(b.st.nodes[1].status == SuperStatus::Successful);
  CHECK(b.st.successes() == std::vector<int>{1});
  CHECK(b.st.superleaves().empty());
  CHECK(b.st.threshold == b.c.A + b.c.C * b.c.Dp);
}

TEST_CASE("distinct pairs on current branches and flow conditions") {
  for (const auto& [name, as] : kBuilds)
    for (Int a : as) {
      CAPTURE(name);
      CAPTURE(a);
      Built b = build(name, a);
      for (const Supernode& s : b.st.nodes) {
        CHECK(flow_ok(s.pd));
        if (s.status != SuperStatus::Neutral) {
          CHECK(s.children.empty());
          continue;
        }
        auto [distinct, depth] = current_branch_distinct(s.pd);
        CHECK(distinct);
        CHECK(depth <= b.c.D);
        CHECK((s.stopped || !s.children.empty()));
        if (s.stopped) CHECK(s.children.empty());
      }
    }
}

TEST_CASE("superleaves and failures on st3") {
  Built b = build("st3", 1);
  CHECK(b.st.successes().empty());
  CHECK(b.st.superleaves().size() == 2);
  size_t failed = 0;
  for (const Supernode& s : b.st.nodes) failed += s.status == SuperStatus::Failed;
  CHECK(failed > 0);
  CHECK_FALSE(b.st.gamma.empty());
  for (int l : b.st.superleaves()) CHECK(stop_condition(b.st.nodes[l].pd, b.st.graph(), b.st.top));
}

TEST_CASE("superleaf rules under-approximate the relation") {
  for (Int a : {0, 1}) {
    Built b = build("st3", a);
    LeafRules lr = leaves_to_thin(b.st);
    CHECK(lr.rule_of_leaf.size() == b.st.superleaves().size());
    CHECK(component_dag(lr.h).all_thin());
    Saturation h(lr.h, 64);
    ReachOracle g(b.g, 64);
    for (Int out = 0; out <= 20; ++out)
      if (h.has(lr.h.start, a, out)) CHECK(g.query(a, out).kind == VerdictKind::Yes);
  }
}

TEST_CASE("leaves_to_thin refuses trees with successes") {
  Built b = build("st2", 0);
  REQUIRE_FALSE(b.st.successes().empty());
  CHECK_THROWS_AS(leaves_to_thin(b.st), Error);
  CHECK(leaves_to_thin(b.st, false).rule_of_leaf.size() == b.st.superleaves().size());
}

TEST_CASE("success reps agree with the oracle above T") {
  for (const auto& [name, as] : kBuilds)
    for (Int a : as) {
      CAPTURE(name);
      CAPTURE(a);
      Built b = build(name, a);
      ReachOracle ro(b.g, 128);
      for (int s : b.st.successes()) {
        LineRep r = success_semilinear(b.st, s, *b.oracles);
        CHECK(r.a == a);
        for (Int out = r.T; out <= r.T + 10; ++out) {
          Verdict v = ro.query(a, out);
          REQUIRE(v.kind != VerdictKind::Unknown);
          CHECK(member(r.rep, {a, out}) == (v.kind == VerdictKind::Yes));
        }
      }
    }
}

TEST_CASE("replay of witnesses ends in a covering superleaf or success") {
  for (const auto& [name, as] : kBuilds)
    for (Int a : as) {
      CAPTURE(name);
      CAPTURE(a);
      Built b = build(name, a);
      LeafRules lr = leaves_to_thin(b.st, false);
      ReachOracle ro(b.g, 128);
      for (Int out = 0; out <= 10; ++out) {
        Verdict v = ro.query(a, out);
        if (v.kind != VerdictKind::Yes) continue;
        CAPTURE(out);
        Derivation w = remove_neutral_cycles(*v.witness);
        CHECK(effect_of(w) == effect_of(*v.witness));
        int s = replay_double_traversal(b.st, annotate(w, a));
        REQUIRE(s >= 0);
        if (b.st.nodes[s].status == SuperStatus::Successful) continue;
        REQUIRE(lr.rule_of_leaf.count(s));
        CHECK(leaf_derives(lr, lr.rule_of_leaf.at(s), a, out));
      }
    }
}

TEST_CASE("replay rejects a mismatched input") {
  Built b = build("st3", 0);
  ReachOracle ro(b.g, 64);
  Verdict v = ro.query(1, 1);
  REQUIRE(v.kind == VerdictKind::Yes);
  CHECK_THROWS_AS(replay_double_traversal(b.st, annotate(*v.witness, 1)), Error);
}

TEST_CASE("neutral cycle removal") {
  Gvas g = fixture::load("g6");
  IdSource ids;
  Derivation one = join(ids, Symbol::N(0), leaf(ids, Symbol::T(1)), leaf(ids, Symbol::T(0)));
  Derivation two = join(ids, Symbol::N(0), leaf(ids, Symbol::T(1)), leaf(ids, Symbol::T(0)));
  Derivation d = join(ids, Symbol::N(0), one, two);
  CHECK(remove_neutral_cycles(d) == d);

  Gvas pad = fixture::text("start S\nS -> S 0\nS -> 1\n");
  Derivation base = join(ids, Symbol::N(0), leaf(ids, Symbol::T(1)), leaf(ids, Symbol::T(0)));
  Derivation wrapped = join(ids, Symbol::N(0), join(ids, Symbol::N(0), base, leaf(ids, Symbol::T(0))), leaf(ids, Symbol::T(0)));
  REQUIRE(produced_by(pad, wrapped));
  Derivation r = remove_neutral_cycles(wrapped);
  CHECK(r.size() == 3);
  CHECK(produced_by(pad, r));
  CHECK(effect_of(r) == 1);
}

TEST_CASE("dot and json export") {
  Built b = build("st1", 0);
  std::string dot = to_dot(b.st);
  CHECK(dot.rfind("digraph supertree", 0) == 0);
  nlohmann::json j = to_json(b.st);
  CHECK(j.is_object());
}
