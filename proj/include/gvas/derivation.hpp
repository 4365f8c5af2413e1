#pragma once

#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "gvas/grammar.hpp"

namespace gvas {

using NodeId = std::uint64_t;

// Monotone identifier allocator shared by every tree of one analysis session.
class IdSource {
 public:
  explicit IdSource(NodeId first = 1) : next_(first) {}
  NodeId fresh() { return next_++; }
  void bump_past(NodeId id) {
    if (id >= next_) next_ = id + 1;
  }

 private:
  NodeId next_;
};

struct Node {
  Symbol label;
  NodeId left = 0;
  NodeId right = 0;
  bool leaf() const { return left == 0; }
  bool operator==(const Node&) const = default;
};

struct Derivation {
  NodeId root = 0;
  std::map<NodeId, Node> nodes;

  const Node& at(NodeId id) const;
  Node& at(NodeId id);
  size_t size() const { return nodes.size(); }
  bool complete() const;
  std::map<NodeId, NodeId> parents() const;
  std::vector<NodeId> leaves() const;  // left to right
  bool operator==(const Derivation&) const = default;
};

struct Run {
  std::vector<Int> values;
};

struct Validity {
  bool valid = false;
  Int final_value = 0;   // when valid
  size_t bad_prefix = 0; // when invalid: index of the first failing step
};

struct CountedDerivation {
  Derivation tree;
  std::map<NodeId, Int> in, out;
};

struct Cycle {
  Derivation tree;
  NodeId distinguished = 0;
};

struct CycleEffects {
  Int left = 0, right = 0, global = 0;
  bool operator==(const CycleEffects&) const = default;
};

enum class Visit { First, Last };

struct EulerAction {
  Visit kind;
  NodeId node;
  bool operator==(const EulerAction&) const = default;
};

// Tree builders.
Derivation leaf(IdSource& ids, Symbol s);
Derivation join(IdSource& ids, Symbol label, const Derivation& l, const Derivation& r);
NodeId graft(Derivation& into, const Derivation& sub);  // copies nodes, returns sub root

std::vector<Symbol> yield_of(const Derivation& d);
Run run_of(const Derivation& d);  // terminals of the yield
Int effect_of(const Derivation& d);
Validity run_validity(const Run& r, Int n);
// Smallest input at which the run is valid.
Int min_valid(const Run& r);

CountedDerivation annotate(const Derivation& d, Int input);

std::vector<EulerAction> euler_tour(const Derivation& d);
Derivation from_euler_tour(const std::vector<EulerAction>& tour, const std::map<NodeId, Symbol>& labels);

CycleEffects cycle_effects(const Cycle& c);
Run cycle_left(const Cycle& c);
Run cycle_right(const Cycle& c);

Derivation insert_cycle(const Derivation& d, NodeId at, const Cycle& c);
std::pair<Derivation, Cycle> remove_cycle(const Derivation& d, NodeId cycle_root, NodeId distinguished);
// Copy of c with fresh identifiers; the distinguished leaf keeps being tracked.
Cycle fresh_copy(const Cycle& c, IdSource& ids);
Derivation fresh_copy(const Derivation& d, IdSource& ids);
// Replaces the subtree rooted at `at` by `sub` (which receives fresh ids).
Derivation replace_subtree(const Derivation& d, NodeId at, const Derivation& sub, IdSource& ids);
Derivation subtree(const Derivation& d, NodeId at);

// Checks every internal node against the rules of g.
bool produced_by(const Gvas& g, const Derivation& d);

void enumerate_complete(const Gvas& g, int x, int max_nodes, const std::function<bool(const Derivation&)>& visit);
std::vector<Derivation> enumerate_complete(const Gvas& g, int x, int max_nodes, size_t limit = SIZE_MAX);
// Number of complete x-derivations by exact node count, counted independently of the enumerator.
std::vector<unsigned long long> count_complete(const Gvas& g, int x, int max_nodes);

bool is_simple(const Derivation& d);
bool is_irreducible(const Gvas& g, const Derivation& d);

struct FormSymbol {
  Symbol sym;
  NodeId node;
};
using SententialForm = std::vector<FormSymbol>;
std::vector<SententialForm> finite_index_schedule(const Gvas& g, const Derivation& d);

std::string to_dot(const Gvas& g, const Derivation& d);
std::string to_dot(const Gvas& g, const CountedDerivation& d);

}  // namespace gvas
