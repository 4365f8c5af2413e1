#include "gvas/cycles.hpp"

#include <algorithm>
#include <deque>
#include <functional>
#include <numeric>
#include <tuple>

namespace gvas {

namespace {

void require_binarized(const Gvas& g) {
  if (!g.binarized) throw Error(ErrorKind::PreconditionViolation, "grammar is not binarized");
}

// Replaces the leaf `hole` of d by the tree `sub`, keeping every identifier
// except the root of sub, whose role is taken over by `hole`.
void fill(Derivation& d, NodeId hole, const Derivation& sub) {
  Node& h = d.at(hole);
  if (!h.leaf()) throw Error(ErrorKind::InvariantBroken, "fill target is not a leaf");
  if (h.label != sub.at(sub.root).label) throw Error(ErrorKind::LabelMismatch, "fill label mismatch");
  for (const auto& [id, n] : sub.nodes) {
    if (id == sub.root) continue;
    if (d.nodes.count(id)) throw Error(ErrorKind::IdCollision, "node " + std::to_string(id) + " already present");
    d.nodes[id] = n;
  }
  d.nodes[hole] = sub.at(sub.root);
}

using Key = std::pair<int, std::vector<int>>;

struct CEntry {
  Int need = 0;
  long long size = 0;
  int rule = -1;
  Int effL = 0;
};

struct XEntry {
  Int need = 0;
  long long size = 0;
  int rule = -1;
  int side = 0;        // 0: hole below the left child, 1: below the right child
  bool direct = false; // the carrier child is the hole itself
  Int cl = 0, cr = 0;  // carrier context key
  Int e = 0;           // effect of the complete sibling
};

// Memoized search over simple derivations and simple contexts: no path
// carries two nodes with the same nonterminal.
class SimpleSearch {
 public:
  SimpleSearch(const Gvas& g, const SearchCaps& caps)
      : g_(g), caps_(caps), by_(g.rules_by_lhs()), dag_(component_dag(g)) {
    require_binarized(g);
  }

  const std::map<Int, CEntry>& complete(int z, const std::vector<int>& forbidden) {
    Key key{z, restrict(forbidden, z)};
    auto it = comp_.find(key);
    if (it != comp_.end()) return it->second;
    std::vector<int> inner = with(key.second, z);
    std::map<Int, CEntry> out;
    for (int ri : by_[z]) {
      const Rule& r = g_.rules[ri];
      auto a = options(r.rhs[0], inner);
      auto b = options(r.rhs[1], inner);
      for (const auto& [e1, x1] : a)
        for (const auto& [e2, x2] : b) {
          Int eff = add(e1, e2);
          check_value(eff);
          CEntry c{std::max(x1.first, sub(x2.first, e1)), 1 + x1.second + x2.second, ri, e1};
          auto [pos, fresh] = out.emplace(eff, c);
          if (!fresh && std::tie(c.need, c.size) < std::tie(pos->second.need, pos->second.size)) pos->second = c;
        }
    }
    charge(out.size());
    return comp_.emplace(std::move(key), std::move(out)).first->second;
  }

  // Contexts rooted at z whose hole is labelled x; z differs from x unless
  // `forbidden` is empty.
  const std::map<std::pair<Int, Int>, XEntry>& context(int x, int z, const std::vector<int>& forbidden) {
    auto key = std::make_tuple(x, z, restrict(forbidden, x));
    auto it = ctx_.find(key);
    if (it != ctx_.end()) return it->second;
    // the cycle root's label may recur off the main branch
    std::vector<int> inner = z == x ? std::get<2>(key) : with(std::get<2>(key), z);
    std::map<std::pair<Int, Int>, XEntry> out;
    auto offer = [&](std::pair<Int, Int> k, const XEntry& c) {
      check_value(k.first);
      check_value(k.second);
      auto [pos, fresh] = out.emplace(k, c);
      if (!fresh && std::tie(c.need, c.size) < std::tie(pos->second.need, pos->second.size)) pos->second = c;
    };
    for (int ri : by_[z]) {
      const Rule& r = g_.rules[ri];
      for (int side = 0; side < 2; ++side) {
        const Symbol& carrier = r.rhs[side];
        const Symbol& other = r.rhs[1 - side];
        if (!carrier.nt) continue;
        std::map<std::pair<Int, Int>, std::pair<Int, long long>> holes;
        bool direct = carrier.id() == x;
        if (direct) {
          holes[{0, 0}] = {0, 1};
        } else {
          int c = carrier.id();
          if (dag_.comp_of[c] != dag_.comp_of[x] || contains(inner, c)) continue;
          for (const auto& [k, xe] : context(x, c, inner)) holes[k] = {xe.need, xe.size};
        }
        auto sib = options(other, inner);
        for (const auto& [k, hv] : holes)
          for (const auto& [e, sv] : sib) {
            XEntry c;
            c.rule = ri;
            c.side = side;
            c.direct = direct;
            c.cl = k.first;
            c.cr = k.second;
            c.e = e;
            c.size = 1 + hv.second + sv.second;
            if (side == 0) {
              c.need = hv.first;
              offer({k.first, add(k.second, e)}, c);
            } else {
              c.need = std::max(sv.first, sub(hv.first, e));
              offer({add(e, k.first), k.second}, c);
            }
          }
      }
    }
    charge(out.size());
    return ctx_.emplace(std::move(key), std::move(out)).first->second;
  }

  Derivation build_complete(int z, const std::vector<int>& forbidden, Int eff, IdSource& ids) {
    const CEntry& c = complete(z, forbidden).at(eff);
    std::vector<int> inner = with(restrict(forbidden, z), z);
    const Rule& r = g_.rules[c.rule];
    Derivation l = build_symbol(r.rhs[0], inner, c.effL, ids);
    Derivation rr = build_symbol(r.rhs[1], inner, eff - c.effL, ids);
    return join(ids, Symbol::N(z), l, rr);
  }

  Cycle build_context(int x, int z, const std::vector<int>& forbidden, std::pair<Int, Int> k, IdSource& ids) {
    const XEntry& c = context(x, z, forbidden).at(k);
    std::vector<int> inner = z == x ? restrict(forbidden, x) : with(restrict(forbidden, x), z);
    const Rule& r = g_.rules[c.rule];
    Cycle hole;
    if (c.direct) {
      hole.tree = leaf(ids, Symbol::N(x));
      hole.distinguished = hole.tree.root;
    } else {
      hole = build_context(x, r.rhs[c.side].id(), inner, {c.cl, c.cr}, ids);
    }
    Derivation sib = build_symbol(r.rhs[1 - c.side], inner, c.e, ids);
    Cycle out;
    out.tree = c.side == 0 ? join(ids, Symbol::N(z), hole.tree, sib) : join(ids, Symbol::N(z), sib, hole.tree);
    out.distinguished = hole.distinguished;
    return out;
  }

 private:
  using Options = std::map<Int, std::pair<Int, long long>>;  // effect -> (need, size)

  Options options(const Symbol& s, const std::vector<int>& inner) {
    Options o;
    if (!s.nt) {
      o[s.v] = {std::max<Int>(0, -s.v), 1};
    } else if (!contains(inner, s.id())) {
      for (const auto& [e, c] : complete(s.id(), inner)) o[e] = {c.need, c.size};
    }
    return o;
  }

  Derivation build_symbol(const Symbol& s, const std::vector<int>& inner, Int eff, IdSource& ids) {
    if (!s.nt) return leaf(ids, s);
    return build_complete(s.id(), inner, eff, ids);
  }

  std::vector<int> restrict(const std::vector<int>& p, int y) const {
    std::vector<int> out;
    for (int v : p)
      if (dag_.comp_of[v] == dag_.comp_of[y]) out.push_back(v);
    return out;
  }
  static std::vector<int> with(std::vector<int> p, int z) {
    auto pos = std::lower_bound(p.begin(), p.end(), z);
    if (pos == p.end() || *pos != z) p.insert(pos, z);
    return p;
  }
  static bool contains(const std::vector<int>& p, int z) { return std::binary_search(p.begin(), p.end(), z); }

  void check_value(Int v) const {
    if (v > caps_.valueCap || v < -caps_.valueCap)
      throw Error(ErrorKind::SearchCapExceeded, "value cap " + std::to_string(caps_.valueCap));
  }
  void charge(size_t n) {
    states_ += static_cast<long long>(n) + 1;
    if (states_ > caps_.stateCap) throw Error(ErrorKind::SearchCapExceeded, "state cap " + std::to_string(caps_.stateCap));
  }

  const Gvas& g_;
  SearchCaps caps_;
  std::vector<std::vector<int>> by_;
  ComponentDag dag_;
  std::map<Key, std::map<Int, CEntry>> comp_;
  std::map<std::tuple<int, int, std::vector<int>>, std::map<std::pair<Int, Int>, XEntry>> ctx_;
  long long states_ = 0;
};

void check_nodes(size_t n, const SearchCaps& caps) {
  if (static_cast<long long>(n) > caps.nodeCap)
    throw Error(ErrorKind::SearchCapExceeded, "node cap " + std::to_string(caps.nodeCap));
}

std::vector<CycleSummary> cycles_with(const Gvas& g, SimpleSearch& s, const SearchCaps& caps, IdSource& ids) {
  std::vector<bool> live = live_nonterminals(g);
  std::vector<CycleSummary> out;
  for (int x = 0; x < g.nt_count(); ++x) {
    if (!live[x]) continue;
    const auto& ctx = s.context(x, x, {});
    for (const auto& [k, xe] : ctx) {
      CycleSummary c;
      c.nonterminal = x;
      c.witness = s.build_context(x, x, {}, k, ids);
      check_nodes(c.witness.tree.size(), caps);
      CycleEffects e = cycle_effects(c.witness);
      if (e.left != k.first || e.right != k.second)
        throw Error(ErrorKind::InvariantBroken, "simple cycle effects disagree with the search");
      c.left = e.left;
      c.right = e.right;
      c.global = e.global;
      c.left_need = min_valid(cycle_left(c.witness));
      out.push_back(std::move(c));
    }
  }
  return out;
}

Int floor_mod(Int a, Int m) {
  Int r = a % m;
  return r < 0 ? r + m : r;
}

// Double context x => u1 x u2 x u3 through a rule of the top component with
// two nonterminals of that component; returns the tree and both holes.
std::optional<std::tuple<Derivation, NodeId, NodeId>> double_context_impl(const Gvas& g, int x, IdSource& ids) {
  ComponentDag dag = component_dag(g);
  int cx = dag.comp_of[x];
  for (const Rule& r : g.rules) {
    if (dag.comp_of[r.lhs] != cx) continue;
    if (!r.rhs[0].nt || !r.rhs[1].nt) continue;
    if (dag.comp_of[r.rhs[0].id()] != cx || dag.comp_of[r.rhs[1].id()] != cx) continue;
    auto top = context_between(g, x, r.lhs, ids);
    auto a = context_between(g, r.rhs[0].id(), x, ids);
    auto b = context_between(g, r.rhs[1].id(), x, ids);
    if (!top || !a || !b) continue;
    Derivation mid = join(ids, Symbol::N(r.lhs), a->tree, b->tree);
    Derivation d = top->tree;
    fill(d, top->distinguished, mid);
    return std::make_tuple(d, a->distinguished, b->distinguished);
  }
  return std::nullopt;
}

std::optional<Cycle> pump_from(const Gvas& g, int x, const CycleSummary& d1, int copies, IdSource& ids) {
  auto d2 = double_context_impl(g, x, ids);
  if (!d2) return std::nullopt;
  auto smallest = smallest_complete(g);
  int v = d1.nonterminal;
  if (!smallest[v]) return std::nullopt;
  auto d3 = context_between(g, x, v, ids);
  if (!d3) return std::nullopt;
  Derivation cur = fresh_copy(*smallest[v], ids);
  for (int i = 0; i < copies; ++i) {
    Cycle c = fresh_copy(d1.witness, ids);
    fill(c.tree, c.distinguished, cur);
    cur = std::move(c.tree);
  }
  Derivation inner = d3->tree;
  fill(inner, d3->distinguished, cur);
  auto& [tree, left_hole, right_hole] = *d2;
  fill(tree, left_hole, inner);
  return Cycle{tree, right_hole};
}

// Pump family for x: for each positive simple cycle, the smallest number of
// copies giving positive left and global effects, plus a few more.
std::vector<Cycle> pump_family(const Gvas& g, int x, const std::vector<CycleSummary>& cycles, IdSource& ids,
                               int extra) {
  std::vector<Cycle> out;
  for (const CycleSummary& c : cycles) {
    if (c.global <= 0) continue;
    auto base = pump_from(g, x, c, 0, ids);
    if (!base) continue;
    CycleEffects e = cycle_effects(*base);
    Int n = 0;
    while (e.left + n * c.global <= 0 || e.global + n * c.global <= 0) ++n;
    for (Int k = n; k <= n + extra; ++k) {
      auto p = pump_from(g, x, c, static_cast<int>(k), ids);
      CycleEffects pe = cycle_effects(*p);
      if (pe.left <= 0 || pe.global <= 0) throw Error(ErrorKind::InvariantBroken, "pump construction lost positivity");
      out.push_back(std::move(*p));
    }
  }
  return out;
}

}  // namespace

std::vector<bool> live_nonterminals(const Gvas& g) {
  std::vector<bool> out(g.nt_count(), false);
  if (g.nt_count() == 0) return out;
  auto reach = reachable_from(g, g.start);
  auto prod = productive(g);
  for (int x = 0; x < g.nt_count(); ++x) out[x] = reach[x] && prod[x];
  return out;
}

std::optional<std::tuple<Derivation, NodeId, NodeId>> double_context(const Gvas& g, int x, IdSource& ids) {
  return double_context_impl(g, x, ids);
}

Derivation plug(const Cycle& ctx, const Derivation& sub, IdSource& ids) {
  Derivation d = ctx.tree;
  fill(d, ctx.distinguished, fresh_copy(sub, ids));
  return d;
}

std::vector<std::optional<Derivation>> smallest_complete(const Gvas& g) {
  require_binarized(g);
  const long long inf = -1;
  std::vector<long long> size(g.nt_count(), inf);
  std::vector<int> choice(g.nt_count(), -1);
  auto sz = [&](const Symbol& s) -> long long { return s.nt ? size[s.id()] : 1; };
  for (bool changed = true; changed;) {
    changed = false;
    for (int ri = 0; ri < static_cast<int>(g.rules.size()); ++ri) {
      const Rule& r = g.rules[ri];
      long long a = sz(r.rhs[0]), b = sz(r.rhs[1]);
      if (a == inf || b == inf) continue;
      long long s = 1 + a + b;
      if (size[r.lhs] == inf || s < size[r.lhs]) {
        size[r.lhs] = s;
        choice[r.lhs] = ri;
        changed = true;
      }
    }
  }
  IdSource ids;
  std::vector<std::optional<Derivation>> out(g.nt_count());
  std::function<Derivation(const Symbol&)> build = [&](const Symbol& s) -> Derivation {
    if (!s.nt) return leaf(ids, s);
    const Rule& r = g.rules[choice[s.id()]];
    Derivation l = build(r.rhs[0]);
    Derivation rr = build(r.rhs[1]);
    return join(ids, s, l, rr);
  };
  for (int x = 0; x < g.nt_count(); ++x)
    if (size[x] != inf) out[x] = build(Symbol::N(x));
  return out;
}

std::optional<Cycle> context_between(const Gvas& g, int from, int to, IdSource& ids) {
  require_binarized(g);
  if (from == to) {
    Cycle c;
    c.tree = leaf(ids, Symbol::N(to));
    c.distinguished = c.tree.root;
    return c;
  }
  auto prod = productive(g);
  std::vector<int> via(g.nt_count(), -1), side(g.nt_count(), -1);
  std::vector<bool> seen(g.nt_count(), false);
  std::deque<int> work{from};
  seen[from] = true;
  auto by = g.rules_by_lhs();
  while (!work.empty() && !seen[to]) {
    int z = work.front();
    work.pop_front();
    for (int ri : by[z]) {
      const Rule& r = g.rules[ri];
      for (int s = 0; s < 2; ++s) {
        const Symbol& c = r.rhs[s];
        const Symbol& o = r.rhs[1 - s];
        if (!c.nt || seen[c.id()]) continue;
        if (o.nt && !prod[o.id()]) continue;
        seen[c.id()] = true;
        via[c.id()] = ri;
        side[c.id()] = s;
        work.push_back(c.id());
      }
    }
  }
  if (!seen[to]) return std::nullopt;
  auto smallest = smallest_complete(g);
  Cycle c;
  c.tree = leaf(ids, Symbol::N(to));
  c.distinguished = c.tree.root;
  for (int v = to; v != from;) {
    const Rule& r = g.rules[via[v]];
    int s = side[v];
    const Symbol& o = r.rhs[1 - s];
    Derivation sib = o.nt ? fresh_copy(*smallest[o.id()], ids) : leaf(ids, o);
    c.tree = s == 0 ? join(ids, Symbol::N(r.lhs), c.tree, sib) : join(ids, Symbol::N(r.lhs), sib, c.tree);
    v = r.lhs;
  }
  return c;
}

std::vector<CycleSummary> simple_cycles(const Gvas& g, const SearchCaps& caps) {
  SimpleSearch s(g, caps);
  IdSource ids;
  return cycles_with(g, s, caps, ids);
}

std::vector<SimpleProfile> simple_derivations(const Gvas& g, int x, const SearchCaps& caps) {
  SimpleSearch s(g, caps);
  IdSource ids;
  std::vector<SimpleProfile> out;
  for (const auto& [e, c] : s.complete(x, {})) {
    SimpleProfile p;
    p.effect = e;
    p.need = c.need;
    p.witness = s.build_complete(x, {}, e, ids);
    check_nodes(p.witness.size(), caps);
    if (effect_of(p.witness) != e || min_valid(run_of(p.witness)) != c.need)
      throw Error(ErrorKind::InvariantBroken, "simple derivation profile mismatch");
    out.push_back(std::move(p));
  }
  return out;
}

Int gcd_of(const std::vector<Int>& values) {
  Int d = 0;
  for (Int v : values) d = std::gcd(d, v < 0 ? -v : v);
  return d;
}

ResiduumInfo residuum(const Gvas& g, const SearchCaps& caps) {
  SimpleSearch s(g, caps);
  IdSource ids;
  auto prod = productive(g);
  if (g.nt_count() == 0 || !prod[g.start])
    throw Error(ErrorKind::NoCompleteDerivation, g.nt_count() ? g.names[g.start] : "<empty>");
  ResiduumInfo info;
  std::vector<Int> globals;
  for (const CycleSummary& c : cycles_with(g, s, caps, ids)) globals.push_back(c.global);
  info.d = gcd_of(globals);
  std::vector<bool> live = live_nonterminals(g);
  for (int x = 0; x < g.nt_count(); ++x) {
    if (!live[x]) continue;
    const auto& m = s.complete(x, {});
    auto best = std::min_element(m.begin(), m.end(), [](const auto& a, const auto& b) {
      return std::make_tuple(a.second.size, a.first) < std::make_tuple(b.second.size, b.first);
    });
    info.r[x] = info.d > 0 ? floor_mod(best->first, info.d) : best->first;
  }
  return info;
}

Infinitary is_infinitary(const Gvas& g, const SearchCaps& caps) {
  require_binarized(g);
  if (!top_branching(g)) throw Error(ErrorKind::PreconditionViolation, "top component is not branching");
  Infinitary out;
  auto cycles = simple_cycles(g, caps);
  for (const CycleSummary& c : cycles)
    if (c.global > 0) out.value = true;
  if (!out.value) return out;
  IdSource ids;
  auto family = pump_family(g, g.start, cycles, ids, 0);
  if (family.empty()) throw Error(ErrorKind::InvariantBroken, "positive simple cycle without a pump witness");
  auto best = std::min_element(family.begin(), family.end(), [](const Cycle& a, const Cycle& b) {
    return std::make_pair(min_valid(cycle_left(a)), a.tree.size()) < std::make_pair(min_valid(cycle_left(b)), b.tree.size());
  });
  out.pump = *best;
  return out;
}

std::optional<Cycle> find_positive_cycle(const Gvas& g, int x, int max_nodes) {
  require_binarized(g);
  // complete[z][s]: effect -> (rule, left size, left effect)
  // ctx[z][s]: left effect -> best right effect, with back pointers
  struct CB {
    int rule;
    int ls;
    Int e1;
  };
  struct XB {
    Int r;
    int rule;
    int side;
    int ls;
    Int cl, cr, e;
  };
  int n = g.nt_count();
  int top = std::max(1, max_nodes);
  std::vector<std::vector<std::map<Int, CB>>> comp(n, std::vector<std::map<Int, CB>>(top + 1));
  std::vector<std::vector<std::map<Int, XB>>> ctx(n, std::vector<std::map<Int, XB>>(top + 1));
  auto by = g.rules_by_lhs();
  auto effects = [&](const Symbol& s, int size) {
    std::vector<Int> out;
    if (!s.nt) {
      if (size == 1) out.push_back(s.v);
    } else {
      for (const auto& kv : comp[s.id()][size]) out.push_back(kv.first);
    }
    return out;
  };
  auto holes = [&](const Symbol& s, int size) {
    std::vector<std::pair<Int, Int>> out;
    if (!s.nt) return out;
    if (size == 1 && s.id() == x) out.emplace_back(0, 0);
    if (size > 1)
      for (const auto& [l, xb] : ctx[s.id()][size]) out.emplace_back(l, xb.r);
    return out;
  };
  for (int s = 3; s <= top; s += 2) {
    for (int z = 0; z < n; ++z) {
      for (int ri : by[z]) {
        const Rule& r = g.rules[ri];
        for (int ls = 1; ls <= s - 2; ls += 2) {
          int rs = s - 1 - ls;
          auto ea = effects(r.rhs[0], ls);
          auto eb = effects(r.rhs[1], rs);
          for (Int a : ea)
            for (Int b : eb) comp[z][s].try_emplace(a + b, CB{ri, ls, a});
          auto ha = holes(r.rhs[0], ls);
          for (auto [l, rr] : ha)
            for (Int b : eb) {
              auto [it, fresh] = ctx[z][s].try_emplace(l, XB{rr + b, ri, 0, ls, l, rr, b});
              if (!fresh && it->second.r < rr + b) it->second = XB{rr + b, ri, 0, ls, l, rr, b};
            }
          auto hb = holes(r.rhs[1], rs);
          for (Int a : ea)
            for (auto [l, rr] : hb) {
              auto [it, fresh] = ctx[z][s].try_emplace(a + l, XB{rr, ri, 1, ls, l, rr, a});
              if (!fresh && it->second.r < rr) it->second = XB{rr, ri, 1, ls, l, rr, a};
            }
        }
      }
    }
    for (const auto& [l, xb] : ctx[x][s]) {
      if (l <= 0 || l + xb.r <= 0) continue;
      IdSource ids;
      std::function<Derivation(const Symbol&, int, Int)> build_c = [&](const Symbol& sym, int size, Int e) {
        if (!sym.nt) return leaf(ids, sym);
        const CB& c = comp[sym.id()][size].at(e);
        const Rule& r = g.rules[c.rule];
        Derivation a = build_c(r.rhs[0], c.ls, c.e1);
        Derivation b = build_c(r.rhs[1], size - 1 - c.ls, e - c.e1);
        return join(ids, sym, a, b);
      };
      std::function<Cycle(int, int, Int)> build_x = [&](int z, int size, Int left) {
        Cycle out;
        if (size == 1) {
          out.tree = leaf(ids, Symbol::N(x));
          out.distinguished = out.tree.root;
          return out;
        }
        const XB& xb2 = ctx[z][size].at(left);
        const Rule& r = g.rules[xb2.rule];
        int rs = size - 1 - xb2.ls;
        if (xb2.side == 0) {
          Cycle h = build_x(r.rhs[0].id(), xb2.ls, xb2.cl);
          Derivation sib = build_c(r.rhs[1], rs, xb2.e);
          out.tree = join(ids, Symbol::N(z), h.tree, sib);
          out.distinguished = h.distinguished;
        } else {
          Derivation sib = build_c(r.rhs[0], xb2.ls, xb2.e);
          Cycle h = build_x(r.rhs[1].id(), rs, xb2.cl);
          out.tree = join(ids, Symbol::N(z), sib, h.tree);
          out.distinguished = h.distinguished;
        }
        return out;
      };
      Cycle c = build_x(x, s, l);
      CycleEffects e = cycle_effects(c);
      if (e.left <= 0 || e.global <= 0) throw Error(ErrorKind::InvariantBroken, "bounded cycle search mismatch");
      return c;
    }
  }
  return std::nullopt;
}

Constants constants_with(const Gvas& g, Int A, const std::map<int, Cycle>& pumps, const SearchCaps& caps) {
  require_binarized(g);
  Constants k;
  k.A = A;
  k.pump = pumps;
  SimpleSearch s(g, caps);
  IdSource ids;
  Int C = 0;
  for (const Rule& r : g.rules)
    for (const Symbol& sym : r.rhs)
      if (!sym.nt) C = std::max(C, 1 - sym.v);
  std::vector<bool> live = live_nonterminals(g);
  for (int x = 0; x < g.nt_count(); ++x) {
    if (!live[x]) continue;
    const auto& m = s.complete(x, {});
    Int best = 0;
    Int best_eff = 0;
    bool first = true;
    for (const auto& [e, c] : m) {
      Int v = std::max(c.need, -e);
      if (first || v < best) {
        best = v;
        best_eff = e;
        first = false;
      }
    }
    C = std::max(C, best);
    k.completion[x] = s.build_complete(x, {}, best_eff, ids);
    check_nodes(k.completion[x].size(), caps);
  }
  k.C = C;
  ComponentDag dag = component_dag(g);
  Int top = static_cast<Int>(dag.members[dag.top].size());
  k.D = mul(A, top);
  k.Dp = add(k.D, mul(k.D, k.D));
  return k;
}

Constants constants_of(const Gvas& g, const SearchCaps& caps) {
  require_binarized(g);
  if (!top_branching(g)) throw Error(ErrorKind::PreconditionViolation, "top component is not branching");
  auto cycles = simple_cycles(g, caps);
  ComponentDag dag = component_dag(g);
  IdSource ids;
  Int A = 0;
  std::map<int, Cycle> pumps;
  for (int x : dag.members[dag.top]) {
    auto family = pump_family(g, x, cycles, ids, 2);
    if (auto c = find_positive_cycle(g, x, std::min(caps.nodeCap, 31))) family.push_back(*c);
    if (family.empty()) throw Error(ErrorKind::PreconditionViolation, "grammar is not infinitary");
    const Cycle* best = nullptr;
    Int need = 0;
    for (const Cycle& c : family) {
      Int v = min_valid(cycle_left(c));
      if (!best || v < need || (v == need && c.tree.size() < best->tree.size())) {
        best = &c;
        need = v;
      }
    }
    A = std::max(A, need);
    pumps[x] = *best;
  }
  return constants_with(g, A, pumps, caps);
}

std::vector<Int> bezout_combination(const std::vector<Int>& effects, Int p) {
  if (effects.empty()) throw Error(ErrorKind::EmptyEffects, "no cycle effects");
  if (p <= 0) throw Error(ErrorKind::PreconditionViolation, "modulus must be positive");
  Int d = gcd_of(effects);
  if (d == 0 || p % d != 0) throw Error(ErrorKind::PreconditionViolation, "gcd does not divide the modulus");
  // coefficients of the running gcd as a combination of the prefix
  std::vector<Int> k(effects.size(), 0);
  Int g = 0;
  for (size_t j = 0; j < effects.size(); ++j) {
    Int c = effects[j];
    // extended Euclid on (g, c)
    Int r0 = g, r1 = c, s0 = 1, s1 = 0, t0 = 0, t1 = 1;
    while (r1 != 0) {
      Int q = r0 / r1;
      std::tie(r0, r1) = std::make_pair(r1, sub(r0, mul(q, r1)));
      std::tie(s0, s1) = std::make_pair(s1, sub(s0, mul(q, s1)));
      std::tie(t0, t1) = std::make_pair(t1, sub(t0, mul(q, t1)));
    }
    if (r0 < 0) {
      r0 = -r0;
      s0 = -s0;
      t0 = -t0;
    }
    for (size_t i = 0; i < j; ++i) k[i] = floor_mod(mul(floor_mod(k[i], p), floor_mod(s0, p)), p);
    k[j] = floor_mod(t0, p);
    g = r0;
  }
  for (auto& v : k) v = floor_mod(v, p);
  Int sum = 0;
  for (size_t j = 0; j < effects.size(); ++j) sum = floor_mod(add(sum, mul(k[j], floor_mod(effects[j], p))), p);
  if (sum != floor_mod(d, p)) throw Error(ErrorKind::InvariantBroken, "combination check failed");
  return k;
}

}  // namespace gvas
