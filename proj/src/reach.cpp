#include "gvas/reach.hpp"

#include <algorithm>
#include <functional>
#include <random>

#include "gvas/region.hpp"

namespace gvas {

Int bmax_formula(Int m, Int nonterminals, Int B, Int depth) {
  Int n1 = add(nonterminals, 1);
  Int first = mul(mul(m, n1), add(B, mul(mul(2, m), nonterminals)));
  Int second = mul(mul(mul(2, add(depth, 1)), m), n1);
  return add(first, second);
}

Int t_formula(Int B, Int top_size, Int m) { return add(B, mul(top_size, m)); }

int dag_depth(const ComponentDag& dag) {
  std::vector<int> depth(dag.members.size(), 0);
  for (int c : dag.bottom_up)
    for (int s : dag.edges[c]) depth[c] = std::max(depth[c], depth[s] + 1);
  int best = 0;
  for (int d : depth) best = std::max(best, d);
  return best;
}

bool has_negative_cycle(const Gvas& g) {
  for (const CycleSummary& c : simple_cycles(g))
    if (c.global < 0) return true;
  return false;
}

CoverBounds cover_bounds(const Gvas& g, Int B, int max_nodes) {
  if (!g.binarized) throw Error(ErrorKind::PreconditionViolation, "grammar is not binarized");
  auto cycles = simple_cycles(g);
  Int m = 0;
  for (const CycleSummary& c : cycles) {
    if (c.global < 0)
      throw Error(ErrorKind::NegativeCycleExists, "simple " + g.names[c.nonterminal] + "-cycle of effect " + std::to_string(c.global));
    m = std::max(m, c.global);
  }
  for (int x = 0; x < g.nt_count(); ++x)
    enumerate_complete(g, x, max_nodes, [&](const Derivation& d) {
      if (!is_irreducible(g, d)) return true;
      Int e = effect_of(d);
      m = std::max({m, e < 0 ? -e : e, min_valid(run_of(d))});
      return true;
    });
  ComponentDag dag = component_dag(g);
  CoverBounds out;
  out.m = m;
  out.bMax = bmax_formula(m, g.nt_count(), B, dag_depth(dag));
  out.T = t_formula(B, static_cast<Int>(dag.members[dag.top].size()), m);
  return out;
}

Verdict thin_reach(const Gvas& h, Int a, Int b, const Budget& budget) {
  if (!is_thin(h)) throw Error(ErrorKind::NotThin, "thin_reach needs a thin grammar");
  if (a < 0 || b < 0) return Verdict::no("negative counter");
  try {
    ReachOracle o(h, std::max({budget.maxCounter, a + 1, b + 1}), budget.maxSteps);
    return o.query(a, b);
  } catch (const Error& e) {
    if (e.kind() == ErrorKind::CapExceeded) return Verdict::unknown(e.what());
    throw;
  }
}

Verdict cover(const Gvas& g, Int a, Int target, const Budget& budget) {
  if (!g.binarized) throw Error(ErrorKind::PreconditionViolation, "grammar is not binarized");
  try {
    if (has_negative_cycle(g)) {
      ReachOracle o(g, std::max({budget.maxCounter, a + 1, target + 1}), budget.maxSteps);
      return o.cover(a, target);
    }
    CoverBounds bb = cover_bounds(g, target);
    ReachOracle o(g, std::max({budget.maxCounter, a + 1, bb.bMax + 1}), budget.maxSteps);
    Verdict v = o.cover(a, target);
    if (v.kind == VerdictKind::Yes && a < target && v.witness_output > bb.bMax)
      throw Error(ErrorKind::InvariantBroken, "smallest covering output exceeds b_max");
    v.reason += "; b_max = " + std::to_string(bb.bMax);
    return v;
  } catch (const Error& e) {
    if (e.kind() == ErrorKind::CapExceeded || e.kind() == ErrorKind::SearchCapExceeded) return Verdict::unknown(e.what());
    throw;
  }
}

namespace {

void require_top_branching(const Gvas& g) {
  if (!g.binarized) throw Error(ErrorKind::PreconditionViolation, "grammar is not binarized");
  if (!top_branching(g)) throw Error(ErrorKind::PreconditionViolation, "top component is not branching");
}

std::vector<Symbol> yield_symbols(const Derivation& d) {
  std::vector<Symbol> out;
  for (NodeId l : d.leaves()) out.push_back(d.at(l).label);
  return out;
}

// Copies h into out with fresh names; returns the image of h's start.
int merge_into(Gvas& out, const Gvas& h, const std::string& prefix) {
  std::vector<int> map(h.nt_count());
  for (int i = 0; i < h.nt_count(); ++i) map[i] = out.add_nt(out.fresh_name(prefix + h.names[i]), Origin::Pipeline);
  for (const Rule& r : h.rules) {
    Rule nr{map[r.lhs], r.rhs};
    for (Symbol& s : nr.rhs)
      if (s.nt) s.v = map[s.id()];
    out.rules.push_back(nr);
  }
  return map[h.start];
}

Gvas empty_grammar() {
  Gvas h;
  h.start = h.add_nt("S", Origin::Pipeline);
  h.rules.push_back({h.start, {Symbol::N(h.start), Symbol::T(0)}});
  h.binarized = true;
  return h;
}

}  // namespace

LinesResult small_lines(const Gvas& g, Int a, const PipelineOptions& opt) {
  require_top_branching(g);
  LinesResult out;
  Infinitary inf = is_infinitary(g);
  out.infinitary = inf.value;
  if (!inf.value) {
    auto profiles = simple_derivations(g, g.start);
    if (profiles.empty()) {
      out.h = empty_grammar();
      return out;
    }
    Int best = profiles.front().effect;
    Gvas h;
    h.start = h.add_nt("S", Origin::Pipeline);
    for (const SimpleProfile& p : profiles) {
      best = std::max(best, p.effect);
      h.rules.push_back({h.start, yield_symbols(p.witness)});
    }
    out.T = std::max<Int>(0, add(add(a, 1), best));
    out.h = binarize(h);
    return out;
  }
  Constants consts = constants_of(g);
  Int thr = add(consts.A, mul(consts.C, consts.Dp));
  SaturationOracles oracles(g, std::max(opt.lowerCap, mul(2, add(thr, 1))), opt.budget.maxSteps);
  Supertree st = build_supertree(g, a, consts, oracles, opt.caps, true);
  auto succ = st.successes();
  if (!succ.empty()) {
    LineRep line = success_semilinear(st, succ.front(), oracles, opt.line);
    SemilinearRelation rep = vertical_rep(a, line.T, line.d, line.residue);
    for (LinearSet2& p : rep.parts) p.periods.push_back({1, 1});
    rep.diagonalized = true;
    out.success = true;
    out.T = line.T;
    out.h = semilin_to_thin(rep);
    return out;
  }
  out.h = leaves_to_thin(st).h;
  return out;
}

Gvas bounded_area(const Gvas& g, Int B, const std::vector<Gvas>& pieces, const PipelineOptions& opt) {
  if (!g.binarized) throw Error(ErrorKind::PreconditionViolation, "grammar is not binarized");
  Gvas h;
  h.start = h.add_nt("S", Origin::Pipeline);
  for (size_t i = 0; i < pieces.size(); ++i) {
    int s = merge_into(h, pieces[i], "P" + std::to_string(i + 1) + "_");
    h.rules.push_back({h.start, {Symbol::N(s)}});
  }
  ReachOracle o(g, std::max(opt.budget.maxCounter, add(mul(4, add(B, 1)), 16)), opt.budget.maxSteps);
  std::map<Int, Int> need_of;  // effect -> smallest need among box rules
  for (Int i = 0; i <= B; ++i)
    for (Int j = 0; j <= B; ++j) {
      if (auto it = need_of.find(j - i); it != need_of.end() && it->second <= i) continue;
      Verdict v = o.query(i, j);
      if (v.kind == VerdictKind::Unknown)
        throw Error(ErrorKind::OracleUnknown, "box pair (" + std::to_string(i) + ", " + std::to_string(j) + "): " + v.reason);
      if (v.kind != VerdictKind::Yes) continue;
      Run r = run_of(*v.witness);
      Int need = min_valid(r);
      if (effect_of(*v.witness) != j - i || need > i) throw Error(ErrorKind::InvariantBroken, "box witness mismatch");
      need_of[j - i] = need;
      h.rules.push_back({h.start, yield_symbols(*v.witness)});
    }
  if (h.rules.empty()) h.rules.push_back({h.start, {Symbol::N(h.start), Symbol::T(0)}});
  return binarize(h);
}

Gvas thin_equivalent(const Gvas& g, const PipelineOptions& opt, ThinifyStats* stats) {
  require_top_branching(g);
  FarRep far = far_from_axis(g, opt.line);
  std::vector<Gvas> pieces{far.h};
  Int Bp = far.B;
  for (Int a = 0; a < far.B; ++a) {
    LinesResult v = small_lines(g, a, opt);
    pieces.push_back(v.h);
    Bp = std::max(Bp, v.T);
  }
  Gvas rg = reverse(g);
  for (Int b = 0; b < far.B; ++b) {
    LinesResult v = small_lines(rg, b, opt);
    pieces.push_back(reverse(v.h));
    Bp = std::max(Bp, v.T);
  }
  if (stats)
    stats->log.push_back(g.names[g.start] + ": B = " + std::to_string(far.B) + ", B' = " + std::to_string(Bp) + ", " +
                         std::to_string(pieces.size()) + " pieces");
  return bounded_area(g, Bp, pieces, opt);
}

Gvas thinify(const Gvas& input, const PipelineOptions& opt, ThinifyStats* stats) {
  Gvas g = prune(input.binarized ? input : binarize(input));
  int serial = 0;
  for (int round = 0; round < 256; ++round) {
    ComponentDag dag = component_dag(g);
    if (dag.all_thin()) return g;
    // a branching component whose descendants are all thin
    std::vector<bool> thin_below(dag.members.size(), true);
    int pick = -1;
    for (int c : dag.bottom_up) {
      for (int s : dag.edges[c]) thin_below[c] = thin_below[c] && thin_below[s] && !dag.branching(s);
      if (pick < 0 && dag.branching(c) && thin_below[c]) pick = c;
    }
    if (pick < 0) throw Error(ErrorKind::InvariantBroken, "no branching component with thin descendants");
    std::set<int> inside(dag.members[pick].begin(), dag.members[pick].end());
    std::vector<std::string> needed;
    for (int x : dag.members[pick]) {
      bool need = x == g.start;
      for (const Rule& r : g.rules)
        if (!inside.count(r.lhs))
          for (const Symbol& s : r.rhs) need = need || (s.nt && s.id() == x);
      if (need) needed.push_back(g.names[x]);
    }
    std::vector<std::pair<std::string, Gvas>> eq;
    for (const std::string& name : needed) eq.push_back({name, thin_equivalent(restrict_to(g, g.find(name), true), opt, stats)});
    for (auto& [name, h] : eq) {
      std::string prefix;
      do prefix = "H" + std::to_string(++serial) + "_";
      while (std::any_of(g.names.begin(), g.names.end(), [&](const std::string& n) { return n.rfind(prefix, 0) == 0; }));
      g = substitute(g, g.find(name), prefixed(h, prefix));
      if (stats) ++stats->substitutions;
    }
    g = prune(g);
    if (stats) ++stats->components;
  }
  throw Error(ErrorKind::CapExceeded, "thinify round cap");
}

Verdict reach(const Gvas& g, Int a, Int b, const PipelineOptions& opt) {
  try {
    Gvas bin = g.binarized ? g : binarize(g);
    Gvas h = thinify(bin, opt);
    Verdict v = thin_reach(h, a, b, opt.budget);
    if (v.kind == VerdictKind::Yes) {
      CountedDerivation c = annotate(*v.witness, a);
      if (c.out.at(c.tree.root) != b) throw Error(ErrorKind::InvariantBroken, "witness output differs from the target");
    }
    return v;
  } catch (const Error& e) {
    switch (e.kind()) {
      case ErrorKind::CapExceeded:
      case ErrorKind::SearchCapExceeded:
      case ErrorKind::OracleUnknown:
        return Verdict::unknown(std::string(to_string(e.kind())) + ": " + e.what());
      default:
        throw;
    }
  }
}

std::vector<Gvas> corpus(std::uint64_t seed, int n) {
  std::mt19937_64 rng(seed);
  auto pick = [&](int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(rng); };
  const char* names[] = {"S", "A", "B"};
  std::vector<Gvas> out;
  for (int k = 0; k < n; ++k) {
    Gvas g;
    int nts = pick(1, 3);
    for (int i = 0; i < nts; ++i) g.add_nt(names[i], Origin::User);
    g.start = 0;
    int rules = pick(nts, 6);
    for (int r = 0; r < rules; ++r) {
      Rule rule;
      bool base = r < nts;
      rule.lhs = base ? r : pick(0, nts - 1);
      int len = base ? pick(0, 2) : pick(0, 3);
      for (int i = 0; i < len; ++i) {
        if (!base && pick(0, 1)) rule.rhs.push_back(Symbol::N(pick(0, nts - 1)));
        else rule.rhs.push_back(Symbol::T(pick(-3, 3)));
      }
      g.rules.push_back(rule);
    }
    out.push_back(g);
  }
  return out;
}

}  // namespace gvas
