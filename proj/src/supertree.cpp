#include "gvas/supertree.hpp"

#include <algorithm>
#include <deque>
#include <functional>
#include <sstream>

namespace gvas {

const char* to_string(SuperStatus s) {
  switch (s) {
    case SuperStatus::Neutral: return "neutral";
    case SuperStatus::Successful: return "successful";
    case SuperStatus::Failed: return "failed";
  }
  return "neutral";
}

std::vector<Pair> CycleClass::pairs() const {
  std::vector<Pair> out{root};
  for (const Step& s : steps) out.push_back({s.in, s.label});
  return out;
}

bool ReachGraph::reaches_flag(const Pair& from) const {
  std::set<Pair> seen{from};
  std::deque<Pair> work{from};
  while (!work.empty()) {
    Pair p = work.front();
    work.pop_front();
    if (flagged.count(p)) return true;
    auto it = edges.find(p);
    if (it == edges.end()) continue;
    for (const Pair& q : it->second)
      if (seen.insert(q).second) work.push_back(q);
  }
  return false;
}

namespace {

std::optional<NodeId> parent_of(const std::map<NodeId, NodeId>& par, NodeId n) {
  auto it = par.find(n);
  if (it == par.end()) return std::nullopt;
  return it->second;
}

std::vector<NodeId> strict_ancestors(const Derivation& t, NodeId n) {
  auto par = t.parents();
  std::vector<NodeId> out;
  for (auto p = parent_of(par, n); p; p = parent_of(par, *p)) out.push_back(*p);
  return out;
}

Pair pair_of(const PartialDerivation& pd, NodeId n) { return {pd.in.at(n), pd.tree.at(n).label.id()}; }

// Class of the partial cycle rooted at `root` with distinguished leaf `dist`.
CycleClass class_of(const Derivation& t, const std::map<NodeId, Int>& in, NodeId root, NodeId dist) {
  auto par = t.parents();
  CycleClass c;
  c.root = {in.at(root), t.at(root).label.id()};
  NodeId cur = dist;
  while (cur != root) {
    NodeId p = par.at(cur);
    const Node& pn = t.at(p);
    CycleClass::Step s;
    s.in = in.at(p);
    s.label = pn.label.id();
    s.from_left = pn.left == cur;
    if (s.from_left) s.right = t.at(pn.right).label;
    c.steps.push_back(s);
    cur = p;
  }
  return c;
}

// Copies every node of `c` with fresh ids, except `dist` which becomes `at`.
struct Copied {
  Cycle cycle;
  std::map<NodeId, NodeId> ids;
};

Copied copy_part(const PartialCycle& pc, NodeId at, NodeId& next) {
  Copied out;
  for (const auto& [id, n] : pc.part.tree.nodes) out.ids[id] = id == pc.distinguished ? at : next++;
  Derivation t;
  for (const auto& [id, n] : pc.part.tree.nodes) {
    if (id == pc.distinguished) continue;
    Node m = n;
    if (m.left) m.left = out.ids.at(m.left);
    if (m.right) m.right = out.ids.at(m.right);
    t.nodes[out.ids.at(id)] = m;
  }
  t.nodes[at] = pc.part.tree.at(pc.distinguished);
  t.root = out.ids.at(pc.part.tree.root);
  out.cycle = Cycle{t, at};
  return out;
}

// Inserts a copy of pc above node `at` of pd; returns the id map.
std::map<NodeId, NodeId> insert_part(PartialDerivation& pd, NodeId at, const PartialCycle& pc, NodeId& next) {
  Copied cp = copy_part(pc, at, next);
  // insert_cycle expects the distinguished leaf to be a leaf in the cycle
  Cycle c = cp.cycle;
  c.tree.nodes[at] = Node{pd.tree.at(at).label, 0, 0};
  pd.tree = insert_cycle(pd.tree, at, c);
  for (const auto& [old, fresh] : cp.ids) {
    if (old == pc.distinguished) continue;
    if (auto it = pc.part.in.find(old); it != pc.part.in.end()) pd.in[fresh] = it->second;
    if (auto it = pc.part.out.find(old); it != pc.part.out.end()) pd.out[fresh] = it->second;
  }
  return cp.ids;
}

Derivation remap_names(const Derivation& d, const Gvas& from, const Gvas& to) {
  Derivation out = d;
  for (auto& [id, n] : out.nodes)
    if (n.label.nt) {
      int k = to.find(from.names[n.label.id()]);
      if (k < 0) throw Error(ErrorKind::InvariantBroken, "nonterminal " + from.names[n.label.id()] + " missing");
      n.label = Symbol::N(k);
    }
  return out;
}

// Replaces leaf `at` by a fresh copy of sub; `at` keeps its id as the root.
void fill_leaf(Derivation& d, NodeId at, const Derivation& sub, NodeId& next) {
  if (!d.at(at).leaf()) throw Error(ErrorKind::InvariantBroken, "fill target is not a leaf");
  if (d.at(at).label != sub.at(sub.root).label) throw Error(ErrorKind::LabelMismatch, "fill label mismatch");
  std::map<NodeId, NodeId> m;
  for (const auto& [id, n] : sub.nodes) m[id] = id == sub.root ? at : next++;
  for (const auto& [id, n] : sub.nodes) {
    Node k = n;
    if (k.left) k.left = m.at(k.left);
    if (k.right) k.right = m.at(k.right);
    d.nodes[m.at(id)] = k;
  }
}

NodeId max_id(const Derivation& d) {
  NodeId m = 0;
  for (const auto& [id, n] : d.nodes) m = std::max(m, id);
  return m;
}

class Builder {
 public:
  Builder(Supertree& st, LowerOracles& oracles, bool stop_at_success)
      : st_(st), oracles_(oracles), stop_at_success_(stop_at_success), by_(st.g.rules_by_lhs()) {}

  void run() {
    PartialDerivation root;
    root.tree.root = next_++;
    root.tree.nodes[root.tree.root] = Node{Symbol::N(st_.g.start), 0, 0};
    root.in[root.tree.root] = st_.a;
    root.act = {Visit::First, root.tree.root};
    add(-1, SuperStatus::Neutral, root, Genesis{});
    while (true) {
      while (!work_.empty()) {
        int id = work_.front();
        work_.pop_front();
        process(id);
        if (done_) return;
      }
      bool changed = false;
      ReachGraph gr = st_.graph();
      for (Supernode& s : st_.nodes)
        if (s.stopped && !stop_condition(s.pd, gr, st_.top)) {
          s.stopped = false;
          work_.push_back(s.id);
          changed = true;
        }
      for (size_t i = 0; i < st_.nodes.size(); ++i)
        if (st_.nodes[i].expanded && insertion_point(st_.nodes[i].pd))
          if (add_insertions(static_cast<int>(i))) changed = true;
      if (done_) return;
      if (!changed) return;
    }
  }

 private:
  bool insertion_point(const PartialDerivation& pd) const {
    if (pd.finished || pd.act.kind != Visit::Last) return false;
    const Symbol& l = pd.tree.at(pd.act.node).label;
    return l.nt && st_.top[l.id()];
  }

  int add(int parent, SuperStatus status, PartialDerivation pd, Genesis gen) {
    if (static_cast<int>(st_.nodes.size()) >= st_.caps.maxSupernodes)
      throw Error(ErrorKind::CapExceeded, "supernode cap " + std::to_string(st_.caps.maxSupernodes));
    if (static_cast<int>(pd.tree.size()) > st_.caps.maxPdNodes)
      throw Error(ErrorKind::CapExceeded, "partial derivation cap " + std::to_string(st_.caps.maxPdNodes));
    Supernode s;
    s.id = static_cast<int>(st_.nodes.size());
    s.parent = parent;
    s.status = status;
    s.pd = std::move(pd);
    s.genesis = std::move(gen);
    st_.nodes.push_back(std::move(s));
    int id = st_.nodes.back().id;
    if (parent >= 0) st_.nodes[parent].children.push_back(id);
    if (status == SuperStatus::Neutral) work_.push_back(id);
    if (status == SuperStatus::Failed) record_cycle(id);
    if (status == SuperStatus::Successful && stop_at_success_) done_ = true;
    return id;
  }

  // A failed supernode whose current node repeats an ancestor contributes a partial cycle.
  void record_cycle(int id) {
    const PartialDerivation& pd = st_.nodes[id].pd;
    NodeId c = pd.act.node;
    if (pd.act.kind != Visit::First || !pd.has_in(c) || pd.has_out(c)) return;
    const Symbol& l = pd.tree.at(c).label;
    if (!l.nt || !st_.top[l.id()]) return;
    for (NodeId q : strict_ancestors(pd.tree, c)) {
      if (pd.in.at(q) != pd.in.at(c) || pd.tree.at(q).label != l) continue;
      PartialCycle pc;
      pc.part.tree = subtree(pd.tree, q);
      for (const auto& [id2, n] : pc.part.tree.nodes) {
        if (auto it = pd.in.find(id2); it != pd.in.end()) pc.part.in[id2] = it->second;
        if (auto it = pd.out.find(id2); it != pd.out.end()) pc.part.out[id2] = it->second;
      }
      pc.distinguished = c;
      pc.cls = class_of(pc.part.tree, pc.part.in, q, c);
      pc.origin = id;
      st_.gamma[pc.cls.root].try_emplace(pc.cls, std::move(pc));
      return;
    }
  }

  bool repeats(const PartialDerivation& pd, NodeId n, Int in, const Symbol& label) const {
    for (NodeId q : strict_ancestors(pd.tree, n))
      if (pd.in.at(q) == in && pd.tree.at(q).label == label) return true;
    return false;
  }

  void process(int id) {
    Supernode& s = st_.nodes[id];
    if (s.status != SuperStatus::Neutral || s.expanded) return;
    if (stop_condition(s.pd, st_.graph(), st_.top)) {
      s.stopped = true;
      return;
    }
    s.expanded = true;
    expand(id);
  }

  void expand(int id) {
    PartialDerivation pd = st_.nodes[id].pd;
    if (pd.finished) return;
    const Int A = st_.consts.A;
    NodeId n = pd.act.node;
    Node nd = pd.tree.at(n);
    auto par = pd.tree.parents();
    if (pd.act.kind == Visit::First) {
      Int in = pd.in.at(n);
      if (!nd.label.nt) {
        // Rule 1
        Int v = add_checked(in, nd.label.v);
        PartialDerivation c = pd;
        Genesis gen{1, 0, v, "terminal"};
        if (v < 0) {
          add(id, SuperStatus::Failed, c, gen);
          return;
        }
        c.out[n] = v;
        c.act = {Visit::Last, n};
        add(id, v >= st_.threshold ? SuperStatus::Successful : SuperStatus::Neutral, c, gen);
        return;
      }
      int x = nd.label.id();
      if (!st_.top[x]) {
        // Rule 2
        Verdict cv = oracles_.cover(x, in, st_.threshold);
        if (cv.kind == VerdictKind::Unknown)
          throw Error(ErrorKind::OracleUnknown, "cover " + st_.g.names[x] + " from " + std::to_string(in) + ": " + cv.reason);
        if (cv.kind == VerdictKind::Yes) {
          add(id, SuperStatus::Successful, pd, Genesis{2, 0, cv.witness_output, "cover"});
          return;
        }
        for (Int b = 0; b < st_.threshold; ++b) {
          Verdict rv = oracles_.reach(x, in, b);
          if (rv.kind == VerdictKind::Unknown)
            throw Error(ErrorKind::OracleUnknown,
                        "reach " + st_.g.names[x] + " from " + std::to_string(in) + " to " + std::to_string(b) + ": " + rv.reason);
          if (rv.kind != VerdictKind::Yes) continue;
          PartialDerivation c = pd;
          c.out[n] = b;
          c.act = {Visit::Last, n};
          add(id, SuperStatus::Neutral, c, Genesis{2, static_cast<int>(b), b, "output"});
        }
        return;
      }
      if (in >= A) {
        add(id, SuperStatus::Successful, pd, Genesis{4, 0, in, "top node input at least A"});
        return;
      }
      // Rule 3
      for (int ri : by_[x]) {
        const Rule& r = st_.g.rules[ri];
        PartialDerivation c = pd;
        NodeId l = next_++, rr = next_++;
        c.tree.nodes[l] = Node{r.rhs[0], 0, 0};
        c.tree.nodes[rr] = Node{r.rhs[1], 0, 0};
        c.tree.nodes[n].left = l;
        c.tree.nodes[n].right = rr;
        c.in[l] = in;
        c.act = {Visit::First, l};
        bool failed = r.rhs[0].nt && st_.top[r.rhs[0].id()] && repeats(c, l, in, r.rhs[0]);
        add(id, failed ? SuperStatus::Failed : SuperStatus::Neutral, c, Genesis{3, ri, 0, "rule"});
      }
      return;
    }
    auto p = parent_of(par, n);
    if (!p) {
      PartialDerivation c = pd;
      c.finished = true;
      add(id, SuperStatus::Neutral, c, Genesis{5, -1, 0, "root"});
    } else if (pd.tree.at(*p).left == n) {
      // Rule 4
      NodeId sib = pd.tree.at(*p).right;
      PartialDerivation c = pd;
      Int v = pd.out.at(n);
      c.in[sib] = v;
      c.act = {Visit::First, sib};
      const Symbol& sl = c.tree.at(sib).label;
      SuperStatus st = SuperStatus::Neutral;
      if (sl.nt && st_.top[sl.id()]) {
        if (v >= A) st = SuperStatus::Successful;
        else if (repeats(c, sib, v, sl)) st = SuperStatus::Failed;
      }
      add(id, st, c, Genesis{4, 0, v, "sibling"});
    } else {
      // Rule 5, first point
      PartialDerivation c = pd;
      c.out[*p] = pd.out.at(n);
      c.act = {Visit::Last, *p};
      bool failed = false;
      Derivation sub = subtree(c.tree, *p);
      for (const auto& [q, qn] : sub.nodes)
        if (q != *p && qn.label == c.tree.at(*p).label && c.in.count(q) && c.out.count(q) &&
            c.in.at(q) == c.in.at(*p) && c.out.at(q) == c.out.at(*p))
          failed = true;
      add(id, failed ? SuperStatus::Failed : SuperStatus::Neutral, c, Genesis{5, -1, c.out[*p], "parent output"});
    }
    if (insertion_point(pd)) add_insertions(id);
  }

  // Rule 5, second point: one child per realized class that keeps the branch repetition-free.
  bool add_insertions(int id) {
    PartialDerivation pd = st_.nodes[id].pd;
    NodeId n = pd.act.node;
    Pair key = pair_of(pd, n);
    auto it = st_.gamma.find(key);
    if (it == st_.gamma.end()) return false;
    std::set<Pair> above;
    for (NodeId q : strict_ancestors(pd.tree, n)) above.insert(pair_of(pd, q));
    bool changed = false;
    int idx = 0;
    for (const auto& [cls, pc] : it->second) {
      ++idx;
      if (!added_[id].insert(cls).second) continue;
      auto ps = cls.pairs();
      bool ok = true;
      std::set<Pair> seen = above;
      for (size_t i = 1; i < ps.size() && ok; ++i) ok = seen.insert(ps[i]).second;
      if (!ok) continue;
      PartialDerivation c = pd;
      insert_part(c, n, pc, next_);
      add(id, SuperStatus::Neutral, c, Genesis{5, idx - 1, 0, "insert cycle"});
      changed = true;
      if (done_) return true;
    }
    return changed;
  }

  static Int add_checked(Int a, Int b) { return gvas::add(a, b); }

  Supertree& st_;
  LowerOracles& oracles_;
  bool stop_at_success_;
  bool done_ = false;
  std::vector<std::vector<int>> by_;
  std::deque<int> work_;
  std::map<int, std::set<CycleClass>> added_;
  NodeId next_ = 1;
};

}  // namespace

SaturationOracles::SaturationOracles(const Gvas& g, Int cap, long long max_steps) : g_(g), cap_(cap), steps_(max_steps) {}

const ReachOracle& SaturationOracles::oracle(int v) {
  auto it = cache_.find(v);
  if (it == cache_.end()) {
    Gvas gv = restrict_to(g_, v);
    auto o = std::make_unique<ReachOracle>(gv, cap_, steps_);
    it = cache_.emplace(v, std::make_pair(std::move(gv), std::move(o))).first;
  }
  return *it->second.second;
}

Verdict SaturationOracles::translate(int v, Verdict w) {
  if (w.witness) w.witness = remap_names(*w.witness, cache_.at(v).first, g_);
  return w;
}

Verdict SaturationOracles::reach(int v, Int a, Int b) {
  Verdict w = oracle(v).query(a, b);
  return translate(v, std::move(w));
}

Verdict SaturationOracles::cover(int v, Int a, Int target) {
  Verdict w = oracle(v).cover(a, target);
  return translate(v, std::move(w));
}

std::vector<int> Supertree::successes() const {
  std::vector<int> out;
  for (const Supernode& s : nodes)
    if (s.status == SuperStatus::Successful) out.push_back(s.id);
  return out;
}

std::vector<int> Supertree::superleaves() const {
  std::vector<int> out;
  for (const Supernode& s : nodes)
    if (s.status == SuperStatus::Neutral && s.stopped && s.children.empty()) out.push_back(s.id);
  return out;
}

ReachGraph Supertree::graph() const {
  ReachGraph gr;
  gr.A = consts.A;
  for (Int a2 = 0; a2 < consts.A; ++a2)
    for (int x = 0; x < g.nt_count(); ++x)
      if (top[x]) gr.vertices.insert({a2, x});
  for (const auto& [key, classes] : gamma)
    for (const auto& [cls, pc] : classes) {
      for (const Pair& p : cls.pairs()) gr.edges[key].insert(p);
      for (const auto& s : cls.steps)
        if (s.from_left && s.right.nt && top[s.right.id()]) gr.flagged.insert(key);
    }
  return gr;
}

bool stop_condition(const PartialDerivation& pd, const ReachGraph& graph, const std::vector<bool>& top) {
  if (pd.finished) return true;
  auto is_top = [&](const Symbol& s) { return s.nt && top[s.id()]; };
  NodeId n = pd.act.node;
  if (pd.act.kind == Visit::First && is_top(pd.tree.at(n).label)) return false;
  std::vector<Pair> open;
  for (const auto& [id, node] : pd.tree.nodes) {
    if (!is_top(node.label)) continue;
    if (!pd.has_in(id)) return false;
    if (!pd.has_out(id) || (pd.act.kind == Visit::Last && id == n)) open.push_back(pair_of(pd, id));
  }
  for (const Pair& p : open)
    if (graph.reaches_flag(p)) return false;
  return true;
}

std::pair<bool, int> current_branch_distinct(const PartialDerivation& pd) {
  if (pd.finished) return {true, 0};
  std::set<Pair> seen;
  auto anc = strict_ancestors(pd.tree, pd.act.node);
  for (NodeId q : anc)
    if (!seen.insert(pair_of(pd, q)).second) return {false, static_cast<int>(anc.size())};
  return {true, static_cast<int>(anc.size())};
}

bool flow_ok(const PartialDerivation& pd) {
  auto par = pd.tree.parents();
  for (const auto& [id, n] : pd.tree.nodes) {
    if (n.leaf() && !n.label.nt && pd.has_in(id) && pd.has_out(id) && pd.out.at(id) != pd.in.at(id) + n.label.v)
      return false;
    if (pd.has_in(id) && pd.in.at(id) < 0) return false;
    if (pd.has_out(id) && pd.out.at(id) < 0) return false;
    if (!n.leaf()) {
      if (pd.has_in(id) && pd.has_in(n.left) && pd.in.at(id) != pd.in.at(n.left)) return false;
      if (pd.has_out(n.left) && pd.has_in(n.right) && pd.out.at(n.left) != pd.in.at(n.right)) return false;
      if (pd.has_out(id) && pd.has_out(n.right) && pd.out.at(id) != pd.out.at(n.right)) return false;
      if (pd.has_out(id) && !pd.has_out(n.right)) return false;
    }
    if (pd.has_out(id) && !pd.has_in(id)) return false;
  }
  return true;
}

Supertree build_supertree(const Gvas& g, Int a, const Constants& consts, LowerOracles& oracles,
                          const SupertreeCaps& caps, bool stop_at_success) {
  if (!g.binarized || !top_branching(g)) throw Error(ErrorKind::PreconditionViolation, "grammar must be binarized and top-branching");
  if (a < 0) throw Error(ErrorKind::NegativeCounter, "negative input");
  Supertree st;
  st.g = g;
  st.a = a;
  st.consts = consts;
  st.caps = caps;
  st.threshold = add(consts.A, mul(consts.C, consts.Dp));
  ComponentDag dag = component_dag(g);
  st.top.assign(g.nt_count(), false);
  for (int x : dag.members[dag.top]) st.top[x] = true;
  Builder b(st, oracles, stop_at_success);
  b.run();
  return st;
}

namespace {

// Complete derivation for a success: every open leaf gets a derivation, the
// pump node gets the pump inserted until the whole run is valid.
LineRep finish_success(const Supertree& st, PartialDerivation pd, NodeId m, std::map<NodeId, Derivation> fixed,
                       const LineOptions& opt, LowerOracles& oracles) {
  NodeId next = max_id(pd.tree) + 1;
  Derivation t = pd.tree;
  for (NodeId l : pd.tree.leaves()) {
    const Symbol& s = pd.tree.at(l).label;
    if (!s.nt) continue;
    if (auto it = fixed.find(l); it != fixed.end()) {
      fill_leaf(t, l, it->second, next);
      continue;
    }
    if (l != m && pd.has_in(l) && pd.has_out(l)) {
      Verdict v = oracles.reach(s.id(), pd.in.at(l), pd.out.at(l));
      if (v.kind != VerdictKind::Yes || !v.witness)
        throw Error(ErrorKind::OracleUnknown, "no witness for a specified lower leaf of " + st.g.names[s.id()]);
      fill_leaf(t, l, *v.witness, next);
      continue;
    }
    auto c = st.consts.completion.find(s.id());
    if (c == st.consts.completion.end()) throw Error(ErrorKind::NoCompleteDerivation, st.g.names[s.id()]);
    fill_leaf(t, l, c->second, next);
  }
  int x = pd.tree.at(m).label.id();
  auto pump = st.consts.pump.find(x);
  if (pump == st.consts.pump.end()) throw Error(ErrorKind::InvariantBroken, "no pump for " + st.g.names[x]);
  IdSource ids(next);
  NodeId inner = 0;
  for (int copies = 0;; ++copies) {
    if (copies > 0 && run_validity(run_of(t), st.a).valid) break;
    if (copies > 4096) throw Error(ErrorKind::InvariantBroken, "success construction stays invalid");
    Cycle c = fresh_copy(pump->second, ids);
    inner = c.tree.root;
    t = insert_cycle(t, m, c);
  }
  return line_linear_threshold(st.g, st.a, t, inner, m, opt);
}

}  // namespace

LineRep success_semilinear(const Supertree& st, int node, LowerOracles& oracles, const LineOptions& opt) {
  const Supernode& s = st.nodes.at(node);
  if (s.status != SuperStatus::Successful) throw Error(ErrorKind::PreconditionViolation, "supernode is not successful");
  PartialDerivation pd = s.pd;
  std::map<NodeId, Derivation> fixed;
  NodeId n = pd.act.node;
  auto is_top = [&](const Symbol& l) { return l.nt && st.top[l.id()]; };
  if (pd.act.kind == Visit::First && is_top(pd.tree.at(n).label)) return finish_success(st, pd, n, fixed, opt, oracles);
  if (pd.act.kind == Visit::First) {
    // lower nonterminal covering the threshold
    const Symbol& l = pd.tree.at(n).label;
    Verdict cv = oracles.cover(l.id(), pd.in.at(n), st.threshold);
    if (cv.kind != VerdictKind::Yes || !cv.witness) throw Error(ErrorKind::OracleUnknown, "cover witness unavailable");
    pd.out[n] = cv.witness_output;
    pd.act = {Visit::Last, n};
    fixed[n] = *cv.witness;
  }
  // propagate: the next unvisited top node after the current action
  auto next_top = [&](const PartialDerivation& p) -> NodeId {
    auto tour = euler_tour(p.tree);
    auto pos = std::find(tour.begin(), tour.end(), p.act);
    for (auto it = pos; it != tour.end(); ++it)
      if (it->kind == Visit::First && is_top(p.tree.at(it->node).label) && !p.has_in(it->node)) return it->node;
    return 0;
  };
  NodeId m = next_top(pd);
  if (!m) {
    ReachGraph gr = st.graph();
    // breadth-first search over (pair, class, branch index) from the open nodes
    struct Hop {
      Pair from;
      const PartialCycle* pc;
      size_t index;
    };
    std::map<Pair, Hop> back;
    std::deque<Pair> work;
    std::map<Pair, NodeId> start;
    for (NodeId q : strict_ancestors(pd.tree, n)) {
      Pair p = pair_of(pd, q);
      if (start.emplace(p, q).second) work.push_back(p);
    }
    if (is_top(pd.tree.at(n).label) && pd.has_out(n)) {
      Pair p = pair_of(pd, n);
      if (start.emplace(p, n).second) work.push_back(p);
    }
    std::set<Pair> seen(work.begin(), work.end());
    std::optional<Pair> goal;
    while (!work.empty() && !goal) {
      Pair p = work.front();
      work.pop_front();
      if (gr.flagged.count(p)) {
        goal = p;
        break;
      }
      auto it = st.gamma.find(p);
      if (it == st.gamma.end()) continue;
      for (const auto& [cls, pc] : it->second) {
        auto ps = cls.pairs();
        for (size_t i = 0; i < ps.size(); ++i)
          if (seen.insert(ps[i]).second) {
            back[ps[i]] = Hop{p, &pc, i};
            work.push_back(ps[i]);
          }
      }
    }
    if (!goal) throw Error(ErrorKind::InvariantBroken, "success without a reachable unvisited top node");
    std::vector<Hop> path;
    for (Pair p = *goal; !start.count(p) || back.count(p);) {
      if (start.count(p) && !back.count(p)) break;
      Hop h = back.at(p);
      path.push_back(h);
      p = h.from;
      if (start.count(p)) break;
    }
    std::reverse(path.begin(), path.end());
    Pair origin = path.empty() ? *goal : path.front().from;
    NodeId at = start.at(origin);
    NodeId next = max_id(pd.tree) + 1;
    for (const Hop& h : path) {
      auto ids = insert_part(pd, at, *h.pc, next);
      // walk up the inserted copy to the node of branch index h.index
      NodeId cur = at;
      auto par = pd.tree.parents();
      for (size_t i = 0; i < h.index; ++i) cur = par.at(cur);
      at = cur;
    }
    const PartialCycle* flagged = nullptr;
    for (const auto& [cls, pc] : st.gamma.at(*goal))
      for (const auto& step : cls.steps)
        if (!flagged && step.from_left && is_top(step.right)) flagged = &pc;
    insert_part(pd, at, *flagged, next);
    m = next_top(pd);
    if (!m) throw Error(ErrorKind::InvariantBroken, "inserted cycles expose no top node");
  }
  return finish_success(st, pd, m, fixed, opt, oracles);
}

LeafRules leaves_to_thin(const Supertree& st, bool require_no_success) {
  if (require_no_success && !st.successes().empty()) throw Error(ErrorKind::PreconditionViolation, "supertree has a successful supernode");
  const Gvas& g = st.g;
  auto is_top = [&](const Symbol& l) { return l.nt && st.top[l.id()]; };
  Gvas h;
  std::map<int, int> low;
  for (int x = 0; x < g.nt_count(); ++x)
    if (!st.top[x]) low[x] = h.add_nt(g.names[x], g.origins[x]);
  for (const Rule& r : g.rules) {
    if (st.top[r.lhs]) continue;
    Rule nr{low.at(r.lhs), r.rhs};
    for (Symbol& s : nr.rhs) {
      if (is_top(s)) throw Error(ErrorKind::InvariantBroken, "lower rule mentions a top nonterminal");
      if (s.nt) s.v = low.at(s.id());
    }
    h.rules.push_back(nr);
  }
  h.start = h.add_nt(h.fresh_name("S"), Origin::Pipeline);
  auto sym = [&](const Symbol& s) {
    if (is_top(s)) throw Error(ErrorKind::InvariantBroken, "top nonterminal left in a superleaf rule");
    return s.nt ? Symbol::N(low.at(s.id())) : s;
  };
  std::map<std::tuple<Int, int, std::set<Pair>>, int> vs;
  std::function<int(Int, int, const std::set<Pair>&)> v_of = [&](Int a, int x, const std::set<Pair>& F) -> int {
    auto key = std::make_tuple(a, x, F);
    if (auto it = vs.find(key); it != vs.end()) return it->second;
    int id = h.add_nt(h.fresh_name("V" + std::to_string(vs.size() + 1)), Origin::Pipeline);
    vs[key] = id;
    h.rules.push_back({id, {Symbol::T(0)}});
    auto it = st.gamma.find({a, x});
    if (it != st.gamma.end())
      for (const auto& [cls, pc] : it->second) {
        auto ps = cls.pairs();
        if (std::any_of(ps.begin(), ps.end(), [&](const Pair& p) { return F.count(p); })) continue;
        Rule r{id, {}};
        for (size_t i = 0; i < cls.steps.size(); ++i) {
          const auto& step = cls.steps[i];
          if (step.from_left) r.rhs.push_back(sym(step.right));
          std::set<Pair> F2 = F;
          for (size_t j = i + 2; j < ps.size(); ++j) F2.insert(ps[j]);
          r.rhs.push_back(Symbol::N(v_of(step.in, step.label, F2)));
        }
        h.rules.push_back(r);
      }
    return id;
  };
  LeafRules out;
  for (int leaf_id : st.superleaves()) {
    const PartialDerivation& pd = st.nodes[leaf_id].pd;
    Rule r{h.start, {}};
    if (pd.finished) {
      for (NodeId l : pd.tree.leaves()) r.rhs.push_back(sym(pd.tree.at(l).label));
    } else {
      NodeId n = pd.act.node;
      for (NodeId l : pd.tree.leaves())
        if (pd.has_out(l)) r.rhs.push_back(sym(pd.tree.at(l).label));
      auto anc = strict_ancestors(pd.tree, n);
      std::vector<Pair> ap;
      for (NodeId q : anc) ap.push_back(pair_of(pd, q));
      auto above = [&](size_t i) { return std::set<Pair>(ap.begin() + static_cast<long>(i), ap.end()); };
      if (pd.act.kind == Visit::First) r.rhs.push_back(sym(pd.tree.at(n).label));
      else if (is_top(pd.tree.at(n).label)) r.rhs.push_back(Symbol::N(v_of(pd.in.at(n), pd.tree.at(n).label.id(), above(0))));
      NodeId below = n;
      for (size_t i = 0; i < anc.size(); ++i) {
        const Node& qn = pd.tree.at(anc[i]);
        if (qn.left == below) r.rhs.push_back(sym(pd.tree.at(qn.right).label));
        r.rhs.push_back(Symbol::N(v_of(ap[i].first, ap[i].second, above(i + 1))));
        below = anc[i];
      }
    }
    out.rule_of_leaf[leaf_id] = static_cast<int>(out.initial.size());
    out.initial.push_back(r);
    h.rules.push_back(r);
  }
  if (out.initial.empty()) h.rules.push_back({h.start, {Symbol::N(h.start), Symbol::T(0)}});
  out.h = binarize(h);
  return out;
}

Derivation remove_neutral_cycles(const Derivation& d) {
  Derivation cur = d;
  while (true) {
    auto par = cur.parents();
    bool found = false;
    for (const auto& [id, n] : cur.nodes) {
      if (!n.label.nt) continue;
      for (auto p = parent_of(par, id); p && !found; p = parent_of(par, *p)) {
        if (cur.at(*p).label != n.label) continue;
        Cycle c = remove_cycle(cur, *p, id).second;
        CycleEffects e = cycle_effects(c);
        if (e.left == 0 && e.right == 0) {
          cur = remove_cycle(cur, *p, id).first;
          found = true;
        }
      }
      if (found) break;
    }
    if (!found) return cur;
  }
}

int replay_double_traversal(const Supertree& st, const CountedDerivation& theta) {
  auto broken = [](const std::string& what) { return Error(ErrorKind::InvariantBroken, what); };
  auto is_top = [&](const Symbol& l) { return l.nt && st.top[l.id()]; };
  if (theta.in.at(theta.tree.root) != st.a) throw broken("theta input differs from the supertree input");
  Derivation cur = theta.tree;  // theta' with extractions
  const auto& in = theta.in;
  const auto& out = theta.out;
  EulerAction act{Visit::First, cur.root};
  int S = 0;
  std::map<NodeId, NodeId> corr{{cur.root, st.nodes[0].pd.tree.root}};
  std::map<NodeId, int> first_sn{{cur.root, 0}};
  std::map<NodeId, Cycle> stored;
  auto child_where = [&](int s, const std::function<bool(const Supernode&)>& ok) -> int {
    for (int c : st.nodes[s].children)
      if (ok(st.nodes[c])) return c;
    return -1;
  };
  for (long step = 0; step < 1'000'000; ++step) {
    const Supernode& sn = st.nodes[S];
    if (sn.status == SuperStatus::Successful) return S;
    auto par = cur.parents();
    if (act.kind == Visit::First) {
      NodeId M = act.node;
      const Node& mn = cur.at(M);
      if (is_top(mn.label)) {
        std::optional<NodeId> rep;
        for (auto p = parent_of(par, M); p; p = parent_of(par, *p))
          if (cur.at(*p).label == mn.label && in.at(*p) == in.at(M)) rep = p;
        if (rep) {
          auto [rest, cyc] = remove_cycle(cur, *rep, M);
          if (stored.count(M)) throw broken("second cycle stored for one node");
          stored[M] = cyc;
          cur = rest;
          S = first_sn.at(*rep);
          corr[M] = corr.at(*rep);
          first_sn[M] = S;
          continue;
        }
      }
      if (sn.status != SuperStatus::Neutral) throw broken("reached a failed supernode at step " + std::to_string(step));
      if (sn.stopped) return S;
      const PartialDerivation& pd = sn.pd;
      if (!(pd.act == EulerAction{Visit::First, corr.at(M)})) throw broken("current actions diverge at step " + std::to_string(step));
      if (pd.in.at(corr.at(M)) != in.at(M)) throw broken("inputs diverge at step " + std::to_string(step));
      if (!mn.label.nt) {
        int c = child_where(S, [](const Supernode&) { return true; });
        if (c < 0) throw broken("no rule 1 child");
        S = c;
        act = {Visit::Last, M};
      } else if (!is_top(mn.label)) {
        int c = child_where(S, [&](const Supernode& k) {
          return k.status == SuperStatus::Successful || k.pd.out.at(corr.at(M)) == out.at(M);
        });
        if (c < 0) throw broken("no rule 2 child for output " + std::to_string(out.at(M)));
        S = c;
        act = {Visit::Last, M};
      } else {
        Symbol l = cur.at(mn.left).label, r = cur.at(mn.right).label;
        int c = child_where(S, [&](const Supernode& k) {
          if (k.status == SuperStatus::Successful) return true;
          if (k.genesis.rule != 3) return false;
          const Rule& rule = st.g.rules[k.genesis.choice];
          return rule.rhs[0] == l && rule.rhs[1] == r;
        });
        if (c < 0) throw broken("no rule 3 child");
        S = c;
        if (st.nodes[c].status == SuperStatus::Successful) return S;
        const Node& tn = st.nodes[c].pd.tree.at(corr.at(M));
        corr[mn.left] = tn.left;
        corr[mn.right] = tn.right;
        act = {Visit::First, mn.left};
        first_sn[mn.left] = S;
      }
      continue;
    }
    NodeId M = act.node;
    if (sn.status != SuperStatus::Neutral) throw broken("reached a failed supernode at step " + std::to_string(step));
    if (sn.stopped) return S;
    if (!(sn.pd.act == EulerAction{Visit::Last, corr.at(M)})) throw broken("current actions diverge at step " + std::to_string(step));
    if (sn.pd.out.at(corr.at(M)) != out.at(M)) throw broken("outputs diverge at step " + std::to_string(step));
    if (auto it = stored.find(M); it != stored.end()) {
      Cycle cyc = it->second;
      stored.erase(it);
      cur = insert_cycle(cur, M, cyc);
      CycleClass want = class_of(cur, in, cyc.tree.root, M);
      int c = child_where(S, [&](const Supernode& k) {
        if (k.genesis.rule != 5 || k.genesis.note != "insert cycle") return false;
        auto anc = strict_ancestors(k.pd.tree, corr.at(M));
        if (anc.size() < want.steps.size()) return false;
        return class_of(k.pd.tree, k.pd.in, anc[want.steps.size() - 1], corr.at(M)) == want;
      });
      if (c < 0) throw broken("no insertion child for a stored cycle");
      S = c;
      // map the inserted main branch and its right children
      auto tpar = st.nodes[c].pd.tree.parents();
      auto cpar = cur.parents();
      NodeId a = M, b = corr.at(M);
      for (size_t i = 0; i < want.steps.size(); ++i) {
        NodeId pa = cpar.at(a), pb = tpar.at(b);
        corr[pa] = pb;
        const Node& na = cur.at(pa);
        const Node& nb = st.nodes[c].pd.tree.at(pb);
        corr[na.left] = nb.left;
        corr[na.right] = nb.right;
        a = pa;
        b = pb;
      }
      continue;
    }
    auto p = parent_of(par, M);
    int c = child_where(S, [](const Supernode& k) { return k.genesis.rule == 4 || (k.genesis.rule == 5 && k.genesis.note != "insert cycle"); });
    if (c < 0) throw broken("no continuation child at step " + std::to_string(step));
    S = c;
    if (!p) {
      if (!st.nodes[S].stopped) throw broken("finished supernode not stopped");
      return S;
    }
    if (cur.at(*p).left == M) {
      NodeId sib = cur.at(*p).right;
      act = {Visit::First, sib};
      first_sn[sib] = S;
    } else {
      act = {Visit::Last, *p};
    }
  }
  throw broken("traversal step cap");
}

std::string to_dot(const Supertree& st) {
  std::ostringstream o;
  o << "digraph supertree {\n  node [shape=box, style=filled];\n";
  for (const Supernode& s : st.nodes) {
    const char* color = s.status == SuperStatus::Successful ? "palegreen" : s.status == SuperStatus::Failed ? "lightpink" : "white";
    o << "  s" << s.id << " [label=\"" << s.id << " r" << s.genesis.rule << " " << s.genesis.note << "\", fillcolor=" << color
      << "];\n";
  }
  for (const Supernode& s : st.nodes)
    for (int c : s.children) o << "  s" << s.id << " -> s" << c << ";\n";
  o << "}\n";
  return o.str();
}

nlohmann::json to_json(const Supertree& st) {
  nlohmann::json nodes = nlohmann::json::array();
  for (const Supernode& s : st.nodes) {
    nlohmann::json pd;
    pd["tree"] = to_json(st.g, s.pd.tree);
    nlohmann::json in = nlohmann::json::object(), out = nlohmann::json::object();
    for (const auto& [k, v] : s.pd.in) in[std::to_string(k)] = v;
    for (const auto& [k, v] : s.pd.out) out[std::to_string(k)] = v;
    pd["in"] = in;
    pd["out"] = out;
    pd["action"] = s.pd.finished ? std::string("end")
                                 : std::string(s.pd.act.kind == Visit::First ? "first " : "last ") + std::to_string(s.pd.act.node);
    nodes.push_back({{"id", s.id},
                     {"parent", s.parent},
                     {"status", to_string(s.status)},
                     {"genesis", {{"rule", s.genesis.rule}, {"choice", s.genesis.choice}, {"value", s.genesis.value}, {"note", s.genesis.note}}},
                     {"stopped", s.stopped},
                     {"children", s.children},
                     {"pd", pd}});
  }
  size_t classes = 0;
  for (const auto& [k, v] : st.gamma) classes += v.size();
  return {{"a", st.a},
          {"A", st.consts.A},
          {"C", st.consts.C},
          {"D", st.consts.D},
          {"Dp", st.consts.Dp},
          {"threshold", st.threshold},
          {"cycle_classes", classes},
          {"supernodes", nodes}};
}

}  // namespace gvas
