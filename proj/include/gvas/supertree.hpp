#pragma once

#include <map>
#include <memory>
#include <optional>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "gvas/cycles.hpp"
#include "gvas/derivation.hpp"
#include "gvas/grammar.hpp"
#include "gvas/json_io.hpp"
#include "gvas/oracle.hpp"
#include "gvas/semilinear.hpp"

namespace gvas {

struct PartialDerivation {
  Derivation tree;
  std::map<NodeId, Int> in, out;
  EulerAction act{Visit::First, 0};
  bool finished = false;  // past the last visit of the root

  NodeId current() const { return act.node; }
  bool has_in(NodeId n) const { return in.count(n) != 0; }
  bool has_out(NodeId n) const { return out.count(n) != 0; }
};

enum class SuperStatus { Neutral, Successful, Failed };
const char* to_string(SuperStatus s);

struct Genesis {
  int rule = 0;  // 0 for the root, otherwise 1..5
  int choice = -1;
  Int value = 0;
  std::string note;
};

using Pair = std::pair<Int, int>;  // (input, nonterminal)

// Bottom-to-top description of a simple partial cycle.
struct CycleClass {
  struct Step {
    Int in = 0;
    int label = 0;
    bool from_left = false;  // the main branch enters this node through its left child
    Symbol right;            // label of the right child when from_left
    auto operator<=>(const Step&) const = default;
  };
  Pair root;
  std::vector<Step> steps;  // N_1 .. N_k
  auto operator<=>(const CycleClass&) const = default;
  std::vector<Pair> pairs() const;  // N_0 .. N_k
};

struct PartialCycle {
  PartialDerivation part;  // the act field is unused
  NodeId distinguished = 0;
  CycleClass cls;
  int origin = -1;  // failed supernode it was taken from
};

struct Supernode {
  int id = 0;
  int parent = -1;
  std::vector<int> children;
  SuperStatus status = SuperStatus::Neutral;
  PartialDerivation pd;
  Genesis genesis;
  bool stopped = false;
  bool expanded = false;
};

// Reachability verdicts for lower nonterminals.
class LowerOracles {
 public:
  virtual ~LowerOracles() = default;
  virtual Verdict reach(int v, Int a, Int b) = 0;
  virtual Verdict cover(int v, Int a, Int target) = 0;
};

// Saturation-backed oracles on G_V with a fixed counter cap.
class SaturationOracles : public LowerOracles {
 public:
  SaturationOracles(const Gvas& g, Int cap, long long max_steps = 200'000'000);
  Verdict reach(int v, Int a, Int b) override;
  Verdict cover(int v, Int a, Int target) override;

 private:
  Verdict translate(int v, Verdict w);
  const ReachOracle& oracle(int v);
  Gvas g_;
  Int cap_;
  long long steps_;
  std::map<int, std::pair<Gvas, std::unique_ptr<ReachOracle>>> cache_;
};

struct SupertreeCaps {
  int maxSupernodes = 50'000;
  int maxPdNodes = 4'096;
};

struct ReachGraph {
  Int A = 0;
  std::set<Pair> vertices;
  std::map<Pair, std::set<Pair>> edges;
  std::set<Pair> flagged;
  bool reaches_flag(const Pair& from) const;
};

struct Supertree {
  Gvas g;
  Int a = 0;
  Constants consts;
  Int threshold = 0;  // A + C * D'
  std::vector<bool> top;
  std::vector<Supernode> nodes;
  std::map<Pair, std::map<CycleClass, PartialCycle>> gamma;
  SupertreeCaps caps;

  std::vector<int> successes() const;
  std::vector<int> superleaves() const;  // stopped neutral leaves
  ReachGraph graph() const;
};

Supertree build_supertree(const Gvas& g, Int a, const Constants& consts, LowerOracles& oracles,
                          const SupertreeCaps& caps = {}, bool stop_at_success = false);

bool stop_condition(const PartialDerivation& pd, const ReachGraph& graph, const std::vector<bool>& top);

// Pairwise distinct (input, label) pairs on the strict ancestors of the
// current node, and their number.
std::pair<bool, int> current_branch_distinct(const PartialDerivation& pd);
// Every specified counter agrees with the flow conditions.
bool flow_ok(const PartialDerivation& pd);

LineRep success_semilinear(const Supertree& st, int node, LowerOracles& oracles, const LineOptions& opt = {});

struct LeafRules {
  Gvas h;
  std::map<int, int> rule_of_leaf;  // superleaf -> index of its initial rule in the unbinarized grammar
  std::vector<Rule> initial;        // unbinarized initial rules, indices into h's nonterminals
};

// The pipeline requires a tree without successful supernodes; tests may
// inspect superleaf rules of any tree.
LeafRules leaves_to_thin(const Supertree& st, bool require_no_success = true);

// Follows theta through the supertree; returns the superleaf reached.
int replay_double_traversal(const Supertree& st, const CountedDerivation& theta);

// Removes cycles whose left and right effects are both zero.
Derivation remove_neutral_cycles(const Derivation& d);

std::string to_dot(const Supertree& st);
nlohmann::json to_json(const Supertree& st);

}  // namespace gvas
