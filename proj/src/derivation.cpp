#include "gvas/derivation.hpp"

#include <algorithm>
#include <set>
#include <sstream>

namespace gvas {

const Node& Derivation::at(NodeId id) const {
  auto it = nodes.find(id);
  if (it == nodes.end()) throw Error(ErrorKind::PreconditionViolation, "unknown node " + std::to_string(id));
  return it->second;
}

Node& Derivation::at(NodeId id) {
  auto it = nodes.find(id);
  if (it == nodes.end()) throw Error(ErrorKind::PreconditionViolation, "unknown node " + std::to_string(id));
  return it->second;
}

bool Derivation::complete() const {
  for (const auto& [id, n] : nodes)
    if (n.leaf() && n.label.nt) return false;
  return true;
}

std::map<NodeId, NodeId> Derivation::parents() const {
  std::map<NodeId, NodeId> p;
  for (const auto& [id, n] : nodes)
    if (!n.leaf()) {
      p[n.left] = id;
      p[n.right] = id;
    }
  return p;
}

std::vector<NodeId> Derivation::leaves() const {
  std::vector<NodeId> out;
  if (!root) return out;
  std::vector<NodeId> stack{root};
  while (!stack.empty()) {
    NodeId v = stack.back();
    stack.pop_back();
    const Node& n = at(v);
    if (n.leaf()) {
      out.push_back(v);
    } else {
      stack.push_back(n.right);
      stack.push_back(n.left);
    }
  }
  return out;
}

Derivation leaf(IdSource& ids, Symbol s) {
  Derivation d;
  d.root = ids.fresh();
  d.nodes[d.root] = Node{s};
  return d;
}

NodeId graft(Derivation& into, const Derivation& sub) {
  for (const auto& [id, n] : sub.nodes) {
    if (into.nodes.count(id)) throw Error(ErrorKind::IdCollision, "node " + std::to_string(id) + " already present");
    into.nodes[id] = n;
  }
  return sub.root;
}

Derivation join(IdSource& ids, Symbol label, const Derivation& l, const Derivation& r) {
  Derivation d;
  d.root = ids.fresh();
  NodeId a = graft(d, l);
  NodeId b = graft(d, r);
  d.nodes[d.root] = Node{label, a, b};
  return d;
}

std::vector<Symbol> yield_of(const Derivation& d) {
  std::vector<Symbol> out;
  for (NodeId v : d.leaves()) out.push_back(d.at(v).label);
  return out;
}

Run run_of(const Derivation& d) {
  Run r;
  for (const Symbol& s : yield_of(d))
    if (!s.nt) r.values.push_back(s.v);
  return r;
}

Int effect_of(const Derivation& d) {
  Int s = 0;
  for (Int v : run_of(d).values) s = add(s, v);
  return s;
}

Validity run_validity(const Run& r, Int n) {
  Int cur = n;
  if (cur < 0) return {false, 0, 0};
  for (size_t i = 0; i < r.values.size(); ++i) {
    cur = add(cur, r.values[i]);
    if (cur < 0) return {false, 0, i};
  }
  return {true, cur, 0};
}

Int min_valid(const Run& r) {
  Int cur = 0, low = 0;
  for (Int v : r.values) {
    cur = add(cur, v);
    low = std::min(low, cur);
  }
  return -low;
}

CountedDerivation annotate(const Derivation& d, Int input) {
  if (!d.complete()) throw Error(ErrorKind::PreconditionViolation, "annotate: derivation is not complete");
  if (input < 0) throw Error(ErrorKind::NegativeCounter, "negative input at node " + std::to_string(d.root));
  CountedDerivation c{d, {}, {}};
  Int cur = input;
  for (const EulerAction& a : euler_tour(d)) {
    const Node& n = d.at(a.node);
    if (a.kind == Visit::First) {
      c.in[a.node] = cur;
      if (n.leaf()) {
        cur = add(cur, n.label.v);
        if (cur < 0)
          throw Error(ErrorKind::NegativeCounter, "node " + std::to_string(a.node) + " (terminal " + std::to_string(n.label.v) + ")");
      }
    } else {
      c.out[a.node] = cur;
    }
  }
  return c;
}

std::vector<EulerAction> euler_tour(const Derivation& d) {
  std::vector<EulerAction> out;
  if (!d.root) return out;
  out.reserve(2 * d.size());
  std::vector<std::pair<NodeId, bool>> stack{{d.root, false}};
  while (!stack.empty()) {
    auto [v, expanded] = stack.back();
    stack.pop_back();
    if (expanded) {
      out.push_back({Visit::Last, v});
      continue;
    }
    out.push_back({Visit::First, v});
    const Node& n = d.at(v);
    stack.push_back({v, true});
    if (!n.leaf()) {
      stack.push_back({n.right, false});
      stack.push_back({n.left, false});
    }
  }
  return out;
}

Derivation from_euler_tour(const std::vector<EulerAction>& tour, const std::map<NodeId, Symbol>& labels) {
  Derivation d;
  std::vector<NodeId> stack;
  for (const EulerAction& a : tour) {
    if (a.kind == Visit::First) {
      d.nodes[a.node] = Node{labels.at(a.node)};
      if (stack.empty()) {
        if (d.root) throw Error(ErrorKind::PreconditionViolation, "tour has two roots");
        d.root = a.node;
      } else {
        Node& p = d.nodes[stack.back()];
        if (!p.left)
          p.left = a.node;
        else if (!p.right)
          p.right = a.node;
        else
          throw Error(ErrorKind::PreconditionViolation, "node with three children in tour");
      }
      stack.push_back(a.node);
    } else {
      if (stack.empty() || stack.back() != a.node) throw Error(ErrorKind::PreconditionViolation, "unbalanced tour");
      const Node& n = d.nodes[a.node];
      if (n.left && !n.right) throw Error(ErrorKind::PreconditionViolation, "node with one child in tour");
      stack.pop_back();
    }
  }
  if (!stack.empty()) throw Error(ErrorKind::PreconditionViolation, "unbalanced tour");
  return d;
}

namespace {

void check_cycle(const Cycle& c) {
  const Node& dist = c.tree.at(c.distinguished);
  if (!dist.leaf() || dist.label != c.tree.at(c.tree.root).label || !dist.label.nt)
    throw Error(ErrorKind::IncompleteCycle, "distinguished leaf does not carry the root nonterminal");
  for (const auto& [id, n] : c.tree.nodes)
    if (id != c.distinguished && n.leaf() && n.label.nt)
      throw Error(ErrorKind::IncompleteCycle, "nonterminal leaf " + std::to_string(id));
}

}  // namespace

Run cycle_left(const Cycle& c) {
  Run r;
  for (NodeId v : c.tree.leaves()) {
    if (v == c.distinguished) break;
    const Symbol& s = c.tree.at(v).label;
    if (!s.nt) r.values.push_back(s.v);
  }
  return r;
}

Run cycle_right(const Cycle& c) {
  Run r;
  bool after = false;
  for (NodeId v : c.tree.leaves()) {
    if (v == c.distinguished) {
      after = true;
      continue;
    }
    const Symbol& s = c.tree.at(v).label;
    if (after && !s.nt) r.values.push_back(s.v);
  }
  return r;
}

CycleEffects cycle_effects(const Cycle& c) {
  check_cycle(c);
  CycleEffects e;
  for (Int v : cycle_left(c).values) e.left = add(e.left, v);
  for (Int v : cycle_right(c).values) e.right = add(e.right, v);
  e.global = add(e.left, e.right);
  return e;
}

Derivation insert_cycle(const Derivation& d, NodeId at, const Cycle& c) {
  const Node& target = d.at(at);
  if (target.label != c.tree.at(c.tree.root).label || c.tree.at(c.distinguished).label != target.label)
    throw Error(ErrorKind::LabelMismatch, "cycle label differs from node " + std::to_string(at));
  if (!c.tree.at(c.distinguished).leaf()) throw Error(ErrorKind::IncompleteCycle, "distinguished node is not a leaf");
  for (const auto& [id, n] : c.tree.nodes)
    if (id != c.distinguished && d.nodes.count(id))
      throw Error(ErrorKind::IdCollision, "cycle node " + std::to_string(id) + " already in derivation");
  auto par = d.parents();
  Derivation out = d;
  for (const auto& [id, n] : c.tree.nodes) {
    if (id == c.distinguished) continue;
    Node m = n;
    if (m.left == c.distinguished) m.left = at;
    if (m.right == c.distinguished) m.right = at;
    out.nodes[id] = m;
  }
  NodeId croot = c.tree.root == c.distinguished ? at : c.tree.root;
  auto it = par.find(at);
  if (it == par.end()) {
    out.root = croot;
  } else {
    Node& p = out.nodes[it->second];
    if (p.left == at) p.left = croot;
    else p.right = croot;
  }
  return out;
}

std::pair<Derivation, Cycle> remove_cycle(const Derivation& d, NodeId cycle_root, NodeId distinguished) {
  const Node& top = d.at(cycle_root);
  const Node& bottom = d.at(distinguished);
  if (top.label != bottom.label || !top.label.nt)
    throw Error(ErrorKind::LabelMismatch, "cycle endpoints carry different labels");
  auto par = d.parents();
  bool below = false;
  for (NodeId v = distinguished;;) {
    auto it = par.find(v);
    if (it == par.end()) break;
    v = it->second;
    if (v == cycle_root) {
      below = true;
      break;
    }
  }
  if (!below) throw Error(ErrorKind::NotAncestor, std::to_string(cycle_root) + " is not a strict ancestor of " + std::to_string(distinguished));
  Cycle c;
  c.tree.root = cycle_root;
  c.distinguished = distinguished;
  std::vector<NodeId> stack{cycle_root};
  while (!stack.empty()) {
    NodeId v = stack.back();
    stack.pop_back();
    if (v == distinguished) {
      c.tree.nodes[v] = Node{bottom.label};
      continue;
    }
    const Node& n = d.at(v);
    c.tree.nodes[v] = n;
    if (!n.leaf()) {
      stack.push_back(n.left);
      stack.push_back(n.right);
    }
  }
  Derivation out;
  out.root = d.root == cycle_root ? distinguished : d.root;
  for (const auto& [id, n] : d.nodes)
    if (!c.tree.nodes.count(id) || id == distinguished) out.nodes[id] = n;
  auto it = par.find(cycle_root);
  if (it != par.end()) {
    Node& p = out.nodes[it->second];
    if (p.left == cycle_root) p.left = distinguished;
    else p.right = distinguished;
  }
  return {out, c};
}

Derivation fresh_copy(const Derivation& d, IdSource& ids) {
  std::map<NodeId, NodeId> re;
  for (const auto& [id, n] : d.nodes) re[id] = ids.fresh();
  Derivation out;
  out.root = re.at(d.root);
  for (const auto& [id, n] : d.nodes) {
    Node m = n;
    if (!m.leaf()) {
      m.left = re.at(m.left);
      m.right = re.at(m.right);
    }
    out.nodes[re.at(id)] = m;
  }
  return out;
}

Cycle fresh_copy(const Cycle& c, IdSource& ids) {
  std::map<NodeId, NodeId> re;
  for (const auto& [id, n] : c.tree.nodes) re[id] = ids.fresh();
  Cycle out;
  out.tree.root = re.at(c.tree.root);
  out.distinguished = re.at(c.distinguished);
  for (const auto& [id, n] : c.tree.nodes) {
    Node m = n;
    if (!m.leaf()) {
      m.left = re.at(m.left);
      m.right = re.at(m.right);
    }
    out.tree.nodes[re.at(id)] = m;
  }
  return out;
}

Derivation subtree(const Derivation& d, NodeId at) {
  Derivation out;
  out.root = at;
  std::vector<NodeId> stack{at};
  while (!stack.empty()) {
    NodeId v = stack.back();
    stack.pop_back();
    const Node& n = d.at(v);
    out.nodes[v] = n;
    if (!n.leaf()) {
      stack.push_back(n.left);
      stack.push_back(n.right);
    }
  }
  return out;
}

Derivation replace_subtree(const Derivation& d, NodeId at, const Derivation& sub, IdSource& ids) {
  Derivation fresh = fresh_copy(sub, ids);
  Derivation old = subtree(d, at);
  auto par = d.parents();
  Derivation out;
  for (const auto& [id, n] : d.nodes)
    if (!old.nodes.count(id)) out.nodes[id] = n;
  graft(out, fresh);
  auto it = par.find(at);
  if (it == par.end()) {
    out.root = fresh.root;
  } else {
    out.root = d.root;
    Node& p = out.nodes[it->second];
    if (p.left == at) p.left = fresh.root;
    else p.right = fresh.root;
  }
  return out;
}

bool produced_by(const Gvas& g, const Derivation& d) {
  for (const auto& [id, n] : d.nodes) {
    if (n.leaf()) continue;
    if (!n.label.nt) return false;
    std::vector<Symbol> rhs{d.at(n.left).label, d.at(n.right).label};
    bool ok = false;
    for (const Rule& r : g.rules)
      if (r.lhs == n.label.id() && r.rhs == rhs) {
        ok = true;
        break;
      }
    if (!ok) return false;
  }
  return true;
}

namespace {

struct Shape {
  int rule = -1;  // -1: terminal leaf
  int lsize = 0, lidx = 0, ridx = 0;
};

class Enumerator {
 public:
  Enumerator(const Gvas& g) : g_(g), by_(g.rules_by_lhs()) {}

  const std::vector<Shape>& shapes(const Symbol& s, int size) {
    auto key = std::make_tuple(s.nt, s.v, size);
    auto it = memo_.find(key);
    if (it != memo_.end()) return it->second;
    std::vector<Shape> out;
    if (!s.nt) {
      if (size == 1) out.push_back(Shape{});
    } else if (size >= 3) {
      for (int ri : by_[s.id()]) {
        const Rule& r = g_.rules[ri];
        for (int ls = 1; ls <= size - 2; ls += 2) {
          int rs = size - 1 - ls;
          size_t nl = shapes(r.rhs[0], ls).size();
          size_t nr = shapes(r.rhs[1], rs).size();
          for (size_t a = 0; a < nl; ++a)
            for (size_t b = 0; b < nr; ++b)
              out.push_back(Shape{ri, ls, static_cast<int>(a), static_cast<int>(b)});
        }
      }
    }
    return memo_[key] = std::move(out);
  }

  Derivation build(const Symbol& s, int size, int idx, IdSource& ids) {
    const Shape sh = shapes(s, size)[idx];
    if (sh.rule < 0) return leaf(ids, s);
    const Rule& r = g_.rules[sh.rule];
    NodeId self = ids.fresh();
    Derivation l = build(r.rhs[0], sh.lsize, sh.lidx, ids);
    Derivation rr = build(r.rhs[1], size - 1 - sh.lsize, sh.ridx, ids);
    Derivation d;
    d.root = self;
    graft(d, l);
    graft(d, rr);
    d.nodes[self] = Node{s, l.root, rr.root};
    return d;
  }

 private:
  const Gvas& g_;
  std::vector<std::vector<int>> by_;
  std::map<std::tuple<bool, Int, int>, std::vector<Shape>> memo_;
};

}  // namespace

void enumerate_complete(const Gvas& g, int x, int max_nodes, const std::function<bool(const Derivation&)>& visit) {
  if (!g.binarized) throw Error(ErrorKind::PreconditionViolation, "enumerate_complete needs a binarized grammar");
  Enumerator e(g);
  Symbol s = Symbol::N(x);
  for (int size = 3; size <= max_nodes; size += 2) {
    size_t n = e.shapes(s, size).size();
    for (size_t i = 0; i < n; ++i) {
      IdSource ids;
      if (!visit(e.build(s, size, static_cast<int>(i), ids))) return;
    }
  }
}

std::vector<Derivation> enumerate_complete(const Gvas& g, int x, int max_nodes, size_t limit) {
  std::vector<Derivation> out;
  enumerate_complete(g, x, max_nodes, [&](const Derivation& d) {
    out.push_back(d);
    return out.size() < limit;
  });
  return out;
}

std::vector<unsigned long long> count_complete(const Gvas& g, int x, int max_nodes) {
  int n = g.nt_count();
  // cnt[v][s]: complete v-derivations with exactly s nodes
  std::vector<std::vector<unsigned long long>> cnt(n, std::vector<unsigned long long>(max_nodes + 1, 0));
  auto sym = [&](const Symbol& s, int size) -> unsigned long long {
    if (!s.nt) return size == 1 ? 1 : 0;
    return cnt[s.id()][size];
  };
  for (int size = 3; size <= max_nodes; size += 2)
    for (const Rule& r : g.rules)
      for (int ls = 1; ls <= size - 2; ++ls) {
        unsigned long long a = sym(r.rhs[0], ls), b = sym(r.rhs[1], size - 1 - ls), p;
        if (__builtin_mul_overflow(a, b, &p) || __builtin_add_overflow(cnt[r.lhs][size], p, &cnt[r.lhs][size]))
          cnt[r.lhs][size] = ~0ULL;
      }
  return cnt[x];
}

bool is_simple(const Derivation& d) {
  std::vector<std::pair<NodeId, std::set<Int>>> stack{{d.root, {}}};
  while (!stack.empty()) {
    auto [v, path] = stack.back();
    stack.pop_back();
    const Node& n = d.at(v);
    if (n.label.nt && !path.insert(n.label.v).second) return false;
    if (!n.leaf()) {
      stack.push_back({n.left, path});
      stack.push_back({n.right, path});
    }
  }
  return true;
}

namespace {

std::set<Int> labels_of(const Derivation& d) {
  std::set<Int> out;
  for (const auto& [id, n] : d.nodes)
    if (n.label.nt) out.insert(n.label.v);
  return out;
}

}  // namespace

bool is_irreducible(const Gvas& g, const Derivation& d) {
  (void)g;
  std::set<Int> all = labels_of(d);
  for (const auto& [m, mn] : d.nodes) {
    if (mn.leaf() || !mn.label.nt) continue;
    // collect strict descendants with the same label whose cut cycle is simple
    std::vector<std::pair<NodeId, std::set<Int>>> stack{{mn.left, {mn.label.v}}, {mn.right, {mn.label.v}}};
    while (!stack.empty()) {
      auto [v, path] = stack.back();
      stack.pop_back();
      const Node& n = d.at(v);
      if (n.label == mn.label) {
        Derivation cut = subtree(d, m);
        for (const auto& [w, wn] : subtree(d, v).nodes)
          if (w != v) cut.nodes.erase(w);
        cut.nodes[v] = Node{n.label};
        // simple: below the root no path repeats a nonterminal, and the root
        // label recurs only off the main branch
        std::set<NodeId> main;
        auto cpar = cut.parents();
        for (NodeId u = v; u != cut.root; u = cpar.at(u)) main.insert(u);
        bool simple = true;
        std::vector<std::pair<NodeId, std::set<Int>>> st{{cut.root, {}}};
        while (!st.empty() && simple) {
          auto [u, p] = st.back();
          st.pop_back();
          if (u == v) continue;
          const Node& un = cut.at(u);
          if (u != cut.root && un.label.nt && !p.insert(un.label.v).second) simple = false;
          if (u != cut.root && main.count(u) && un.label == mn.label) simple = false;
          if (!un.leaf()) {
            st.push_back({un.left, p});
            st.push_back({un.right, p});
          }
        }
        if (simple) {
          Derivation rest = remove_cycle(d, m, v).first;
          if (labels_of(rest) == all) return false;
        }
      }
      if (n.label.nt && !path.insert(n.label.v).second) continue;
      if (!n.leaf()) {
        stack.push_back({n.left, path});
        stack.push_back({n.right, path});
      }
    }
  }
  return true;
}

std::vector<SententialForm> finite_index_schedule(const Gvas& g, const Derivation& d) {
  ComponentDag dag = component_dag(g);
  if (!dag.all_thin()) throw Error(ErrorKind::NotThin, "finite_index_schedule needs a thin grammar");
  if (!d.complete()) throw Error(ErrorKind::PreconditionViolation, "derivation is not complete");
  std::vector<SententialForm> forms{{FormSymbol{d.at(d.root).label, d.root}}};
  SententialForm cur = forms.front();
  std::function<void(NodeId)> expand = [&](NodeId v) {
    while (true) {
      const Node& n = d.at(v);
      if (n.leaf()) return;
      auto pos = std::find_if(cur.begin(), cur.end(), [&](const FormSymbol& f) { return f.node == v; });
      size_t at = static_cast<size_t>(pos - cur.begin());
      cur.erase(cur.begin() + at);
      cur.insert(cur.begin() + at, {FormSymbol{d.at(n.left).label, n.left}, FormSymbol{d.at(n.right).label, n.right}});
      forms.push_back(cur);
      int comp = dag.comp_of[n.label.id()];
      NodeId tail = 0;
      for (NodeId c : {n.left, n.right}) {
        const Symbol& s = d.at(c).label;
        if (!s.nt) continue;
        if (dag.comp_of[s.id()] == comp && !tail)
          tail = c;
        else
          expand(c);
      }
      if (!tail) return;
      v = tail;
    }
  };
  expand(d.root);
  return forms;
}

namespace {

std::string dot_label(const Gvas& g, const Symbol& s) { return g.symbol_text(s); }

template <class Extra>
std::string dot_common(const Gvas& g, const Derivation& d, Extra extra) {
  std::ostringstream o;
  o << "digraph derivation {\n  node [shape=box];\n";
  for (const auto& [id, n] : d.nodes) o << "  n" << id << " [label=\"" << dot_label(g, n.label) << extra(id) << "\"];\n";
  for (const auto& [id, n] : d.nodes)
    if (!n.leaf()) o << "  n" << id << " -> n" << n.left << ";\n  n" << id << " -> n" << n.right << ";\n";
  o << "}\n";
  return o.str();
}

}  // namespace

std::string to_dot(const Gvas& g, const Derivation& d) {
  return dot_common(g, d, [](NodeId) { return std::string(); });
}

std::string to_dot(const Gvas& g, const CountedDerivation& c) {
  return dot_common(g, c.tree, [&](NodeId id) {
    return " [" + std::to_string(c.in.at(id)) + "→" + std::to_string(c.out.at(id)) + "]";
  });
}

}  // namespace gvas
