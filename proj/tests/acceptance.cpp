#include <chrono>
#include <cstdio>
#include <functional>
#include <iostream>
#include <sstream>

#include "common.hpp"
#include "gvas/reach.hpp"
#include "gvas/region.hpp"
#include "gvas/supertree.hpp"

using namespace gvas;

namespace {

struct Outcome {
  bool pass = true;
  std::ostringstream detail;
  int failures = 0;
  void fail(const std::string& what) {
    pass = false;
    if (failures++ < 5) detail << " [" << what << "]";
  }
};

std::string pt(Int a, Int b) { return "(" + std::to_string(a) + "," + std::to_string(b) + ")"; }

const Budget kBrute{40, 64, 50'000'000};
const std::vector<std::string> kFixtures = {"g1", "g2", "g4", "g6", "trivial"};

void point_law(Outcome& o) {
  Gvas g = fixture::load("g1");
  int checked = 0;
  for (Int a = 1; a <= 4; ++a)
    for (Int b = 0; b <= 20; ++b) {
      Verdict v = reach(g, a, b);
      bool want = 1 <= b && b <= (Int{1} << a);
      ++checked;
      if (v.kind == VerdictKind::Unknown) o.fail("unknown at " + pt(a, b));
      else if ((v.kind == VerdictKind::Yes) != want) o.fail("wrong verdict at " + pt(a, b));
    }
  o.detail << " " << checked << " pairs";
}

void residuum_fixture(Outcome& o) {
  Gvas g = fixture::load("g2");
  ResiduumInfo r = residuum(g);
  if (r.d != 2) o.fail("d = " + std::to_string(r.d));
  if (r.r.at(fixture::nt(g, "X")) != 0) o.fail("r(X)");
  if (r.r.at(fixture::nt(g, "Y")) != 1) o.fail("r(Y)");
  o.detail << " d=" << r.d;
}

void flow(Outcome& o) {
  IdSource ids;
  NodeId m10 = 0;
  Derivation d = fixture::two_level_example(ids, &m10);
  CountedDerivation c = annotate(d, 20);
  if (c.out.at(d.root) != 15) o.fail("output at 20");
  try {
    annotate(d, 10);
  } catch (const Error&) {
    o.fail("annotate at 10 failed");
  }
  try {
    annotate(d, 9);
    o.fail("annotate at 9 succeeded");
  } catch (const Error& e) {
    if (e.kind() != ErrorKind::NegativeCounter || std::string(e.what()).find("node " + std::to_string(m10) + " ") == std::string::npos)
      o.fail(std::string("wrong blame: ") + e.what());
  }
}

// R_H and R_G agree on [0,8]^2. Pairs of H beyond the brute-force node cap
// must be confirmed by an oracle witness for G.
void window_equivalence(Outcome& o) {
  std::vector<std::pair<std::string, Gvas>> gs;
  for (const std::string& f : kFixtures) gs.push_back({f, fixture::load(f)});
  auto cs = corpus(0xC0FFEE, 30);
  for (size_t i = 0; i < cs.size(); ++i) gs.push_back({"corpus " + std::to_string(i), binarize(cs[i])});
  int completed = 0, unknown = 0, confirmed = 0;
  for (const auto& [name, g] : gs) {
    Gvas h;
    try {
      h = thinify(g);
    } catch (const Error& e) {
      if (e.kind() == ErrorKind::CapExceeded || e.kind() == ErrorKind::OracleUnknown) {
        ++unknown;
        continue;
      }
      o.fail(name + ": " + e.what());
      continue;
    }
    ++completed;
    if (!component_dag(h).all_thin()) o.fail(name + " not thin");
    PairSet pg = brute_window(g, 8, kBrute);
    Saturation sh(h, 64);
    ReachOracle rg(g, 256);
    for (Int a = 0; a <= 8; ++a)
      for (Int b = 0; b <= 8; ++b) {
        bool inh = sh.has(h.start, a, b);
        bool ing = pg.count({a, b}) == 1;
        if (ing && !inh) o.fail(name + " misses " + pt(a, b));
        if (inh && !ing) {
          Verdict v = rg.query(a, b);
          if (v.kind == VerdictKind::Yes && run_validity(run_of(*v.witness), a).final_value == b) ++confirmed;
          else o.fail(name + " extra " + pt(a, b) + " " + to_string(v.kind));
        }
      }
  }
  o.detail << " " << completed << " completed, " << unknown << " unknown, " << confirmed << " pairs beyond the node cap";
}

void coherence(Outcome& o) {
  auto cs = corpus(0xC0FFEE, 30);
  int top = 0, inf = 0;
  for (size_t i = 0; i < cs.size(); ++i) {
    Gvas g = prune(binarize(cs[i]));
    if (g.nt_count() == 0 || !top_branching(g)) continue;
    ++top;
    std::string name = "corpus " + std::to_string(i);
    bool c2 = false;
    for (const CycleSummary& c : simple_cycles(g)) c2 = c2 || c.global > 0;
    Infinitary r = is_infinitary(g);
    bool c3 = false;
    if (r.pump) {
      CycleEffects e = cycle_effects(r.pump->tree.nodes.empty() ? Cycle{} : *r.pump);
      c3 = e.left > 0 && e.global > 0 && r.pump->tree.size() <= (size_t{1} << std::min<size_t>(20, size_of(g)));
    }
    bool c4 = find_positive_cycle(g, g.start, 31).has_value();
    if (r.value != c2 || c2 != c3 || c3 != c4)
      o.fail(name + " conditions " + std::to_string(c2) + std::to_string(c3) + std::to_string(c4));
    inf += c2;
    // condition 5: output sets from small inputs under growing counter caps
    Saturation s16(g, 16), s32(g, 32), s64(g, 64);
    bool grows = false, stable = true;
    for (Int a = 0; a <= 6; ++a) {
      size_t n16 = s16.outputs(g.start, a).size(), n32 = s32.outputs(g.start, a).size(), n64 = s64.outputs(g.start, a).size();
      grows = grows || (n16 < n32 && n32 < n64 && n64 > 8);
      stable = stable && n32 == n64;
    }
    if (c2 && !grows) o.fail(name + " infinitary but outputs do not grow");
    if (!c2 && !stable) o.fail(name + " finite but outputs grow");
  }
  o.detail << " " << top << " top-branching, " << inf << " infinitary";
}

void line_checks(Outcome& o) {
  int calls = 0;
  for (std::string name : {"g2", "g6", "st1", "st2", "st3"}) {
    Gvas g = prune(fixture::load(name));
    Infinitary inf = is_infinitary(g);
    auto smallest = smallest_complete(g);
    IdSource ids;
    for (const auto& [id, n] : inf.pump->tree.nodes) ids.bump_past(id);
    Derivation tau = plug(*inf.pump, *smallest[g.start], ids);
    Int a0 = min_valid(run_of(tau));
    ReachOracle ro(g, 256);
    for (Int a = a0; a <= a0 + 3; ++a) {
      LineRep r = line_linear_threshold(g, a, tau, tau.root, inf.pump->distinguished);
      ++calls;
      for (Int b = r.T; b <= r.T + 10; ++b) {
        Verdict v = ro.query(a, b);
        if (v.kind == VerdictKind::Unknown || member(r.rep, {a, b}) != (v.kind == VerdictKind::Yes))
          o.fail(name + " at " + pt(a, b));
      }
    }
  }
  o.detail << " " << calls << " invocations";
}

struct Build {
  Gvas g;
  Constants c;
  std::unique_ptr<SaturationOracles> oracles;
  Supertree st;
};

Build build(const std::string& name, Int a) {
  Build b;
  b.g = prune(fixture::load(name));
  b.c = constants_of(b.g);
  b.oracles = std::make_unique<SaturationOracles>(b.g, std::max<Int>(64, 2 * (b.c.A + b.c.C * b.c.Dp + 1)));
  b.st = build_supertree(b.g, a, b.c, *b.oracles);
  return b;
}

void supertree_structure(Outcome& o) {
  size_t nodes = 0, neutral = 0;
  for (std::string name : {"g2", "g6", "st1", "st2", "st3"})
    for (Int a = 0; a <= 2; ++a) {
      Build b = build(name, a);
      std::string at = name + " a=" + std::to_string(a);
      for (const Supernode& s : b.st.nodes) {
        ++nodes;
        if (!flow_ok(s.pd)) o.fail(at + " flow at " + std::to_string(s.id));
        if (s.status != SuperStatus::Neutral) {
          if (!s.children.empty()) o.fail(at + " non-neutral " + std::to_string(s.id) + " has children");
          continue;
        }
        ++neutral;
        auto [distinct, depth] = current_branch_distinct(s.pd);
        if (!distinct || depth > b.c.D) o.fail(at + " branch at " + std::to_string(s.id));
        if (s.stopped != s.children.empty()) o.fail(at + " stop discipline at " + std::to_string(s.id));
        if (s.stopped && !stop_condition(s.pd, b.st.graph(), b.st.top)) o.fail(at + " stopped without condition");
      }
    }
  o.detail << " " << nodes << " supernodes, " << neutral << " neutral";
}

bool leaf_derives(const LeafRules& lr, int i, Int a, Int b) {
  Gvas h = lr.h;
  int s = h.add_nt(h.fresh_name("Q"), Origin::Pipeline);
  h.rules.push_back({s, lr.initial[i].rhs});
  h.start = s;
  h = binarize(h);
  return Saturation(h, 128).has(s, a, b);
}

void round_trip(Outcome& o) {
  int pairs = 0, by_rep = 0, by_leaf = 0;
  for (Int a = 0; a <= 1; ++a) {
    Build b = build("g2", a);
    ReachOracle ro(b.g, 128);
    std::vector<LineRep> reps;
    for (int s : b.st.successes()) reps.push_back(success_semilinear(b.st, s, *b.oracles));
    LeafRules lr = leaves_to_thin(b.st, false);
    for (Int out = 0; out <= 10; ++out) {
      Verdict v = ro.query(a, out);
      if (v.kind == VerdictKind::Unknown) o.fail("oracle unknown at " + pt(a, out));
      if (v.kind != VerdictKind::Yes) continue;
      ++pairs;
      bool covered = false;
      for (const LineRep& r : reps) covered = covered || (out >= r.T && member(r.rep, {a, out}));
      if (covered) {
        ++by_rep;
        continue;
      }
      try {
        int s = replay_double_traversal(b.st, annotate(remove_neutral_cycles(*v.witness), a));
        if (lr.rule_of_leaf.count(s) && leaf_derives(lr, lr.rule_of_leaf.at(s), a, out)) ++by_leaf;
        else o.fail("replay of " + pt(a, out));
      } catch (const Error& e) {
        o.fail("replay of " + pt(a, out) + ": " + e.what());
      }
    }
  }
  o.detail << " " << pairs << " pairs, " << by_rep << " by success reps, " << by_leaf << " by superleaves";
}

void coverability_bounds(Outcome& o) {
  if (bmax_formula(2, 3, 5, 0) != 152) o.fail("bMax arithmetic");
  int verdicts = 0;
  for (const std::string& f : kFixtures) {
    Gvas g = prune(fixture::load(f));
    if (has_negative_cycle(g)) continue;
    for (Int a = 0; a <= 4; ++a)
      for (Int t = 0; t <= 12; ++t) {
        CoverBounds bounds = cover_bounds(g, t);
        Verdict v = cover(g, a, t);
        ++verdicts;
        if (v.kind == VerdictKind::Unknown) o.fail(f + " unknown at " + pt(a, t));
        if (v.kind != VerdictKind::Yes) continue;
        Int b = run_validity(run_of(*v.witness), a).final_value;
        if (b != v.witness_output || b < t || (t > a && b > bounds.bMax)) o.fail(f + " witness at " + pt(a, t));
      }
  }
  o.detail << " " << verdicts << " cover verdicts";
}

Int oracle_cap_for(const SemilinearRelation& s) {
  Int m = 16;
  for (const LinearSet2& l : s.parts) {
    m = std::max({m, 2 * l.base.first + 16, 2 * l.base.second + 16});
    for (Point p : l.periods) m = std::max({m, 2 * p.first + 16, 2 * p.second + 16});
  }
  return m;
}

void battery(Outcome& o) {
  const Point D{1, 1};
  std::vector<SemilinearRelation> rs = {
      {{{{0, 0}, {D}}}, true},
      {{{{0, 3}, {D}}}, true},
      {{{{2, 0}, {D}}}, true},
      {{{{0, 0}, {D, {0, 1}}}}, true},
      {{{{0, 0}, {D, {1, 0}}}}, true},
      {{{{0, 1}, {D, {0, 2}}}}, true},
      {{{{1, 0}, {D, {3, 0}}}}, true},
      {{{{0, 0}, {D, {0, 1}, {1, 0}}}}, true},
      {{{{2, 5}, {D, {0, 4}}}}, true},
      {{{{0, 0}, {D}}, {{0, 2}, {D}}}, true},
      {{{{1, 4}, {D, {1, 3}}}}, true},
      {{{{3, 1}, {D, {2, 1}}}}, true},
      {{{{0, 2}, {D, {0, 3}}}, {{4, 0}, {D, {2, 0}}}}, true},
      {{{{5, 5}, {D}}, {{0, 7}, {D, {0, 5}}}, {{6, 1}, {D}}}, true},
      {{{{1, 1}, {D, {2, 3}, {3, 2}}}}, true},
  };
  for (size_t i = 0; i < rs.size(); ++i) {
    Gvas h = semilin_to_thin(rs[i]);
    if (!component_dag(h).all_thin()) o.fail("relation " + std::to_string(i) + " not thin");
    ReachOracle ro(h, oracle_cap_for(rs[i]));
    for (Int a = 0; a <= 10; ++a)
      for (Int b = 0; b <= 10; ++b) {
        Verdict v = ro.query(a, b);
        if (v.kind == VerdictKind::Unknown || (v.kind == VerdictKind::Yes) != member(rs[i], {a, b}))
          o.fail("relation " + std::to_string(i) + " at " + pt(a, b));
      }
  }
  o.detail << " " << rs.size() << " relations";
}

}  // namespace

int main() {
  struct Criterion {
    int id;
    const char* title;
    double limit;
    std::function<void(Outcome&)> run;
  };
  std::vector<Criterion> all = {
      {1, "point law of G1", 60, point_law},
      {2, "residuum of G2", 5, residuum_fixture},
      {3, "flow on the two-level example", 1, flow},
      {4, "thinify window equivalence", 600, window_equivalence},
      {5, "infinitary conditions coherence", 120, coherence},
      {6, "line thresholds against the oracle", 120, line_checks},
      {7, "supertree structure", 120, supertree_structure},
      {8, "supertree round trip on G2", 180, round_trip},
      {9, "coverability bounds", 60, coverability_bounds},
      {10, "semilinear to thin battery", 120, battery},
  };
  int failed = 0;
  for (const Criterion& c : all) {
    Outcome o;
    auto t0 = std::chrono::steady_clock::now();
    try {
      c.run(o);
    } catch (const std::exception& e) {
      o.fail(std::string("exception: ") + e.what());
    }
    double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    if (secs > c.limit) o.fail("over the time limit");
    if (!o.pass) ++failed;
    std::printf("%s criterion %d: %s (%.2fs)%s%s\n", o.pass ? "PASS" : "FAIL", c.id, c.title, secs, o.detail.str().c_str(),
                o.failures > 5 ? (" and " + std::to_string(o.failures - 5) + " more").c_str() : "");
    std::fflush(stdout);
  }
  return failed == 0 ? 0 : 1;
}
