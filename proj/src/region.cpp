#include "gvas/region.hpp"

#include <algorithm>
#include <functional>

#include "gvas/cycles.hpp"

namespace gvas {

namespace {

Int floor_mod(Int a, Int m) {
  Int r = a % m;
  return r < 0 ? r + m : r;
}

void require_top_branching(const Gvas& g) {
  if (!g.binarized) throw Error(ErrorKind::PreconditionViolation, "grammar is not binarized");
  if (!top_branching(g)) throw Error(ErrorKind::PreconditionViolation, "top component is not branching");
}

Point swap(Point p) { return {p.second, p.first}; }

}  // namespace

TriangleRep triangle_rep(const Gvas& g, const LineOptions& opt) {
  require_top_branching(g);
  TriangleRep t;
  Infinitary inf = is_infinitary(g);
  if (!inf.value) {
    Int best = 0;
    bool any = false;
    for (const SimpleProfile& p : simple_derivations(g, g.start)) {
      best = any ? std::max(best, p.effect) : p.effect;
      any = true;
    }
    if (!any) throw Error(ErrorKind::NoCompleteDerivation, g.names[g.start]);
    t.a = 0;
    t.delta = std::max<Int>(0, best + 1);
    ResiduumInfo res = residuum(g);
    t.d = res.d;
    t.residue = res.d > 0 ? floor_mod(res.r.at(g.start), res.d) : res.r.at(g.start);
    return t;
  }
  auto smallest = smallest_complete(g);
  IdSource ids;
  for (const auto& [id, n] : inf.pump->tree.nodes) ids.bump_past(id);
  Derivation tau = plug(*inf.pump, *smallest[g.start], ids);
  Int a = min_valid(run_of(tau));
  LineRep line = line_linear_threshold(g, a, tau, tau.root, inf.pump->distinguished, opt);
  t.a = a;
  t.delta = std::max<Int>(0, line.T - a);
  t.d = line.d;
  t.residue = floor_mod(line.residue - a, line.d);
  Int first = t.delta + floor_mod(t.residue - t.delta, t.d);
  t.rep.parts.push_back({{a, a + first}, {{1, 1}, {0, t.d}}});
  t.rep.diagonalized = true;
  return t;
}

TriangleRep lower_triangle_rep(const Gvas& g, const LineOptions& opt) {
  TriangleRep t = triangle_rep(reverse(g), opt);
  for (LinearSet2& l : t.rep.parts) {
    l.base = swap(l.base);
    for (Point& p : l.periods) p = swap(p);
  }
  return t;
}

Derivation small_effect_derivation(const Gvas& g, Int delta) {
  if (!g.binarized) throw Error(ErrorKind::PreconditionViolation, "grammar is not binarized");
  ResiduumInfo res = residuum(g);
  Int r = res.r.at(g.start);
  if (res.d > 0 && floor_mod(delta - r, res.d) != 0)
    throw Error(ErrorKind::NoSuchEffect, "effect " + std::to_string(delta) + " is not congruent to " + std::to_string(r) +
                                             " modulo " + std::to_string(res.d));
  struct Back {
    int rule;
    Int e1;
  };
  int n = g.nt_count();
  Int base = (delta < 0 ? -delta : delta) + 4 * (1 + max_abs_terminal(g)) * n + 8;
  for (int round = 0; round < 4; ++round) {
    Int R = base << round;
    std::vector<std::map<Int, Back>> eff(n);
    auto effects = [&](const Symbol& s) {
      std::vector<Int> out;
      if (!s.nt) out.push_back(s.v);
      else
        for (const auto& kv : eff[s.id()]) out.push_back(kv.first);
      return out;
    };
    bool changed = true;
    while (changed) {
      changed = false;
      for (int ri = 0; ri < static_cast<int>(g.rules.size()); ++ri) {
        const Rule& rule = g.rules[ri];
        auto e1s = effects(rule.rhs[0]);
        auto e2s = effects(rule.rhs[1]);
        for (Int e1 : e1s)
          for (Int e2 : e2s) {
            Int e = e1 + e2;
            if (e < -R || e > R) continue;
            if (eff[rule.lhs].try_emplace(e, Back{ri, e1}).second) changed = true;
          }
      }
    }
    if (!eff[g.start].count(delta)) continue;
    IdSource ids;
    size_t budget = 200000;
    std::function<Derivation(const Symbol&, Int)> build = [&](const Symbol& s, Int e) -> Derivation {
      if (budget-- == 0) throw Error(ErrorKind::SearchCapExceeded, "derivation size cap");
      if (!s.nt) return leaf(ids, s);
      const Back& b = eff[s.id()].at(e);
      const Rule& rule = g.rules[b.rule];
      Derivation l = build(rule.rhs[0], b.e1);
      Derivation rr = build(rule.rhs[1], e - b.e1);
      return join(ids, s, l, rr);
    };
    Derivation d = build(Symbol::N(g.start), delta);
    if (effect_of(d) != delta) throw Error(ErrorKind::InvariantBroken, "small effect derivation mismatch");
    return d;
  }
  throw Error(ErrorKind::NoSuchEffect, "no derivation of effect " + std::to_string(delta) + " within the search range");
}

std::optional<DiagonalWitness> diagonal_witness(const Gvas& g, Int delta) {
  try {
    Derivation d = small_effect_derivation(g, delta);
    return DiagonalWitness{min_valid(run_of(d)), d};
  } catch (const Error& e) {
    if (e.kind() == ErrorKind::NoSuchEffect) return std::nullopt;
    throw;
  }
}

FarRep far_from_axis(const Gvas& g, const LineOptions& opt) {
  require_top_branching(g);
  FarRep f;
  f.upper = triangle_rep(g, opt);
  f.lower = lower_triangle_rep(g, opt);
  f.B = std::max(f.upper.a, f.lower.a);
  f.rep = unite(f.upper.rep, f.lower.rep);
  for (Int delta = -f.lower.delta; delta <= f.upper.delta; ++delta) {
    auto w = diagonal_witness(g, delta);
    if (!w) continue;
    f.lines.push_back({delta, w->a});
    f.B = std::max(f.B, w->a + (delta < 0 ? -delta : delta));
    f.rep.parts.push_back({{w->a, w->a + delta}, {{1, 1}}});
  }
  f.rep.diagonalized = true;
  f.h = semilin_to_thin(f.rep);
  return f;
}

}  // namespace gvas
