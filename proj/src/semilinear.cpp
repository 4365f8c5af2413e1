#include "gvas/semilinear.hpp"

#include <algorithm>
#include <functional>
#include <numeric>
#include <set>

#include "gvas/cycles.hpp"

namespace gvas {

namespace {

Int floor_mod(Int a, Int m) {
  Int r = a % m;
  return r < 0 ? r + m : r;
}

bool has_diagonal(const LinearSet2& s) {
  return std::find(s.periods.begin(), s.periods.end(), Point{1, 1}) != s.periods.end();
}

void normalize(LinearSet2& s) {
  std::set<Point> ps;
  for (const Point& p : s.periods)
    if (p != Point{0, 0}) ps.insert(p);
  s.periods.assign(ps.begin(), ps.end());
}

// Calls visit on every k in N^n with |k|_1 <= bound.
void for_each_bounded(size_t n, Int bound, const std::function<void(const std::vector<Int>&)>& visit) {
  std::vector<Int> k(n, 0);
  std::function<void(size_t, Int)> rec = [&](size_t i, Int left) {
    if (i == n) {
      visit(k);
      return;
    }
    for (Int v = 0; v <= left; ++v) {
      k[i] = v;
      rec(i + 1, left - v);
    }
    k[i] = 0;
  };
  rec(0, bound);
}

// Minimal elements (componentwise on (k, slack)) of the solutions of
// s + sum f_i k_i >= 0 with |k|_1 <= bound.
std::vector<std::vector<Int>> minimal_solutions(const std::vector<Int>& f, Int s, Int bound, bool nonzero) {
  std::vector<std::vector<Int>> sols;
  for_each_bounded(f.size(), bound, [&](const std::vector<Int>& k) {
    Int v = s;
    bool any = false;
    for (size_t i = 0; i < f.size(); ++i) {
      v = add(v, mul(f[i], k[i]));
      if (k[i]) any = true;
    }
    if (v < 0 || (nonzero && !any)) return;
    std::vector<Int> e = k;
    e.push_back(v);
    sols.push_back(std::move(e));
  });
  auto norm = [](const std::vector<Int>& v) { return std::accumulate(v.begin(), v.end(), Int{0}); };
  std::stable_sort(sols.begin(), sols.end(), [&](const auto& a, const auto& b) { return norm(a) < norm(b); });
  std::vector<std::vector<Int>> kept;
  for (const auto& c : sols) {
    bool dominated = false;
    for (const auto& m : kept) {
      bool le = true;
      for (size_t i = 0; i < c.size() && le; ++i) le = m[i] <= c[i];
      if (le) {
        dominated = true;
        break;
      }
    }
    if (!dominated) kept.push_back(c);
  }
  for (auto& v : kept) v.pop_back();
  return kept;
}

Point combine(const LinearSet2& L, const std::vector<Int>& k, Point start) {
  for (size_t i = 0; i < k.size(); ++i) {
    start.first = add(start.first, mul(k[i], L.periods[i].first));
    start.second = add(start.second, mul(k[i], L.periods[i].second));
  }
  return start;
}

std::vector<LinearSet2> cut(const LinearSet2& L, const HalfPlane& h) {
  Int s = sub(add(mul(h.alpha, L.base.first), mul(h.beta, L.base.second)), h.gamma);
  std::vector<Int> f;
  Int M = 1;
  bool all_pos = true, all_neg = true;
  for (const Point& p : L.periods) {
    Int v = add(mul(h.alpha, p.first), mul(h.beta, p.second));
    f.push_back(v);
    M = std::max(M, v < 0 ? -v : v);
    if (v < 0) all_pos = false;
    if (v > 0) all_neg = false;
  }
  if (all_pos && s >= 0) return {L};
  if (all_neg && s < 0) return {};
  Int hb = 2 * M + 1;
  Int ib = (s < 0 ? -s : 0) + 2 * M + 1;
  auto homs = minimal_solutions(f, 0, hb, true);
  auto inhs = minimal_solutions(f, s, ib, false);
  std::vector<Point> periods;
  for (const auto& k : homs) periods.push_back(combine(L, k, {0, 0}));
  std::vector<LinearSet2> out;
  for (const auto& k : inhs) {
    LinearSet2 part{combine(L, k, L.base), periods};
    normalize(part);
    out.push_back(std::move(part));
  }
  return out;
}

}  // namespace

Region Region::rectangle(Int x0, Int x1, Int y0, Int y1) {
  return Region{{{1, 0, x0}, {-1, 0, -x1}, {0, 1, y0}, {0, -1, -y1}}};
}

Region Region::vertical_line(Int a, Int from) { return Region{{{1, 0, a}, {-1, 0, -a}, {0, 1, from}}}; }

Region Region::right_of(Int a) { return Region{{{1, 0, a}}}; }

Region Region::upper_triangle(Int a, Int delta) { return Region{{{1, 0, a}, {-1, 1, delta}}}; }

Region Region::lower_triangle(Int a, Int delta) { return Region{{{0, 1, a}, {1, -1, delta}}}; }

bool Region::contains(Point p) const {
  for (const HalfPlane& h : planes)
    if (h.alpha * p.first + h.beta * p.second < h.gamma) return false;
  return true;
}

bool member(const LinearSet2& s, Point p) {
  Int rx = p.first - s.base.first, ry = p.second - s.base.second;
  if (rx < 0 || ry < 0) return false;
  std::vector<Point> ps;
  for (const Point& q : s.periods)
    if (q != Point{0, 0}) ps.push_back(q);
  std::set<std::tuple<size_t, Int, Int>> dead;
  std::function<bool(size_t, Int, Int)> go = [&](size_t i, Int x, Int y) {
    if (x == 0 && y == 0) return true;
    if (i == ps.size()) return false;
    if (dead.count({i, x, y})) return false;
    auto [px, py] = ps[i];
    Int lim = INT64_MAX;
    if (px > 0) lim = std::min(lim, x / px);
    if (py > 0) lim = std::min(lim, y / py);
    for (Int k = 0; k <= lim; ++k)
      if (go(i + 1, x - k * px, y - k * py)) return true;
    dead.insert({i, x, y});
    return false;
  };
  return go(0, rx, ry);
}

bool member(const SemilinearRelation& s, Point p) {
  for (const LinearSet2& l : s.parts)
    if (member(l, p)) return true;
  return false;
}

SemilinearRelation diagonalize(const SemilinearRelation& s, Int window) {
  for (Int x = 0; x < window; ++x)
    for (Int y = 0; y < window; ++y)
      if (member(s, {x, y}) && !member(s, {x + 1, y + 1}))
        throw Error(ErrorKind::NonDiagonalDetected,
                    "(" + std::to_string(x) + "," + std::to_string(y) + ") is not followed by its diagonal successor");
  SemilinearRelation out = s;
  for (LinearSet2& l : out.parts) {
    if (!has_diagonal(l)) l.periods.push_back({1, 1});
    normalize(l);
  }
  out.diagonalized = true;
  return out;
}

SemilinearRelation unite(const SemilinearRelation& s, const SemilinearRelation& t) {
  SemilinearRelation out = s;
  out.parts.insert(out.parts.end(), t.parts.begin(), t.parts.end());
  out.diagonalized = (s.diagonalized || s.parts.empty()) && (t.diagonalized || t.parts.empty());
  return out;
}

SemilinearRelation restrict(const SemilinearRelation& s, const Region& r) {
  std::vector<LinearSet2> cur = s.parts;
  for (const HalfPlane& h : r.planes) {
    std::vector<LinearSet2> next;
    for (const LinearSet2& l : cur)
      for (LinearSet2& piece : cut(l, h))
        if (std::find(next.begin(), next.end(), piece) == next.end()) next.push_back(std::move(piece));
    cur = std::move(next);
  }
  SemilinearRelation out;
  out.parts = std::move(cur);
  out.diagonalized = std::all_of(out.parts.begin(), out.parts.end(), has_diagonal);
  return out;
}

Gvas semilin_to_thin(const SemilinearRelation& s) {
  Gvas g;
  g.start = g.add_nt("S", Origin::Pipeline);
  if (s.parts.empty()) {
    g.rules.push_back({g.start, {Symbol::N(g.start), Symbol::T(0)}});
    return binarize(g);
  }
  int i = 0;
  for (const LinearSet2& l : s.parts) {
    if (!has_diagonal(l)) throw Error(ErrorKind::NotDiagonal, "part " + std::to_string(i) + " lacks the period (1,1)");
    ++i;
    int x = g.add_nt("P" + std::to_string(i), Origin::Pipeline);
    int y = g.add_nt("Q" + std::to_string(i), Origin::Pipeline);
    g.rules.push_back({g.start, {Symbol::N(x)}});
    g.rules.push_back({x, {Symbol::T(-l.base.first), Symbol::N(y), Symbol::T(l.base.second)}});
    g.rules.push_back({y, {Symbol::T(0)}});
    for (const Point& p : l.periods)
      if (p != Point{1, 1}) g.rules.push_back({y, {Symbol::T(-p.first), Symbol::N(y), Symbol::T(p.second)}});
  }
  return binarize(g);
}

nlohmann::json to_json(const SemilinearRelation& s) {
  nlohmann::json parts = nlohmann::json::array();
  for (const LinearSet2& l : s.parts) {
    nlohmann::json ps = nlohmann::json::array();
    for (const Point& p : l.periods) ps.push_back({p.first, p.second});
    parts.push_back({{"base", {l.base.first, l.base.second}}, {"periods", ps}});
  }
  return {{"parts", parts}};
}

SemilinearRelation semilinear_from_json(const nlohmann::json& j) {
  SemilinearRelation s;
  for (const auto& part : j.at("parts")) {
    LinearSet2 l;
    l.base = {part.at("base").at(0).get<Int>(), part.at("base").at(1).get<Int>()};
    for (const auto& p : part.at("periods")) l.periods.push_back({p.at(0).get<Int>(), p.at(1).get<Int>()});
    s.parts.push_back(std::move(l));
  }
  s.diagonalized = !s.parts.empty() && std::all_of(s.parts.begin(), s.parts.end(), has_diagonal);
  return s;
}

SemilinearRelation vertical_rep(Int a, Int T, Int d, Int residue) {
  SemilinearRelation s;
  if (d <= 0) {
    if (T == residue) s.parts.push_back({{a, T}, {}});
    return s;
  }
  Int b = T + floor_mod(residue - T, d);
  s.parts.push_back({{a, b}, {{0, d}}});
  return s;
}

LineRep line_linear_threshold(const Gvas& g, Int a, const Derivation& tau, NodeId cycle_root, NodeId distinguished,
                              const LineOptions& opt) {
  if (!g.binarized || !top_branching(g)) throw Error(ErrorKind::PreconditionViolation, "grammar must be binarized and top-branching");
  if (!tau.complete()) throw Error(ErrorKind::PreconditionViolation, "tau is not complete");
  if (!run_validity(run_of(tau), a).valid) throw Error(ErrorKind::PreconditionViolation, "tau is not valid at the input");
  Cycle gamma = remove_cycle(tau, cycle_root, distinguished).second;
  CycleEffects ge = cycle_effects(gamma);
  if (ge.left <= 0 || ge.global <= 0) throw Error(ErrorKind::PreconditionViolation, "cycle effects must be positive");
  int x = tau.at(distinguished).label.id();

  ResiduumInfo res = residuum(g);
  Int d = res.d, p = ge.global;
  if (d <= 0 || p % d != 0) throw Error(ErrorKind::InvariantBroken, "cycle effect is not a multiple of the residuum period");
  Int k = p / d;
  Int residue = floor_mod(a + res.r.at(g.start), d);

  IdSource ids;
  for (const auto& [id, n] : tau.nodes) ids.bump_past(id);
  for (const auto& [id, n] : gamma.tree.nodes) ids.bump_past(id);

  auto cycles = simple_cycles(g);
  std::vector<Int> effects;
  std::vector<const CycleSummary*> used;
  for (const CycleSummary& c : cycles)
    if (c.global != 0) {
      effects.push_back(c.global);
      used.push_back(&c);
    }
  std::vector<Int> coeff(effects.size(), 0);
  if (k > 1) coeff = bezout_combination(effects, p);

  // sigma: a complete x-tree holding a node for every cycle we must insert
  auto smallest = smallest_complete(g);
  if (!smallest[x]) throw Error(ErrorKind::NoCompleteDerivation, g.names[x]);
  std::vector<int> needed;
  for (size_t j = 0; j < used.size(); ++j)
    if (coeff[j] > 0 && std::find(needed.begin(), needed.end(), used[j]->nonterminal) == needed.end())
      needed.push_back(used[j]->nonterminal);
  std::function<Derivation(size_t)> cover = [&](size_t from) -> Derivation {
    if (from == needed.size()) return fresh_copy(*smallest[x], ids);
    auto dc = double_context(g, x, ids);
    if (!dc) throw Error(ErrorKind::InvariantBroken, "no double context in a branching component");
    auto& [tree, h1, h2] = *dc;
    auto ctx = context_between(g, x, needed[from], ids);
    if (!ctx || !smallest[needed[from]]) throw Error(ErrorKind::InvariantBroken, "cycle nonterminal unreachable");
    Derivation one = plug(*ctx, *smallest[needed[from]], ids);
    Derivation out = replace_subtree(tree, h1, one, ids);
    NodeId hole2 = h2;
    return replace_subtree(out, hole2, cover(from + 1), ids);
  };
  Derivation sigma = cover(0);

  auto find_label = [](const Derivation& t, int z) {
    for (const auto& [id, n] : t.nodes)
      if (n.label == Symbol::N(z)) return id;
    return NodeId{0};
  };

  LineRep out;
  out.a = a;
  out.d = d;
  out.residue = residue;
  Int T = 0;
  for (Int i = 0; i < k; ++i) {
    Derivation si = sigma;
    for (size_t j = 0; j < used.size(); ++j) {
      Int copies = mul(i, coeff[j]);
      if (copies == 0) continue;
      NodeId at = find_label(si, used[j]->nonterminal);
      if (!at) throw Error(ErrorKind::InvariantBroken, "sigma lacks a cycle host");
      for (Int c = 0; c < copies; ++c) si = insert_cycle(si, at, fresh_copy(used[j]->witness, ids));
    }
    Derivation ti = replace_subtree(tau, distinguished, si, ids);
    NodeId m = 0;
    {
      auto par = tau.parents();
      auto it = par.find(distinguished);
      const Node& pn = ti.at(it == par.end() ? ti.root : it->second);
      m = it == par.end() ? ti.root : (tau.at(it->second).left == distinguished ? pn.left : pn.right);
    }
    int copies = 0;
    while (!run_validity(run_of(ti), a).valid) {
      if (++copies > 4096) throw Error(ErrorKind::SearchCapExceeded, "pump copies for validity");
      ti = insert_cycle(ti, m, fresh_copy(gamma, ids));
    }
    Int o = add(a, effect_of(ti));
    if (floor_mod(o, d) != residue) throw Error(ErrorKind::InvariantBroken, "output outside the residue class");
    T = std::max(T, o);
  }
  out.constructed_T = T;
  if (opt.tighten && T > 0) {
    ReachOracle oracle(g, std::max<Int>(opt.budget.maxCounter, T + 16), opt.budget.maxSteps);
    for (Int b = T - d; b >= 0; b -= d) {
      if (oracle.query(a, b).kind != VerdictKind::Yes) break;
      T = b;
    }
  }
  out.T = T;
  out.rep = vertical_rep(a, T, d, residue);
  return out;
}

}  // namespace gvas
