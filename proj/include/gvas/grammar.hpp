#pragma once

#include <compare>
#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

namespace gvas {

using Int = std::int64_t;

enum class ErrorKind {
  Syntax,
  Semantic,
  IdCollision,
  LabelMismatch,
  NotAncestor,
  NegativeCounter,
  IncompleteCycle,
  NotThin,
  NotDiagonal,
  NonDiagonalDetected,
  NoCompleteDerivation,
  NoSuchEffect,
  NegativeCycleExists,
  EmptyEffects,
  PreconditionViolation,
  SearchCapExceeded,
  CapExceeded,
  OracleUnknown,
  InvariantBroken,
  Overflow,
};

const char* to_string(ErrorKind k);

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& msg);
  ErrorKind kind() const { return kind_; }

 private:
  ErrorKind kind_;
};

// Checked arithmetic on Int; throws Error(Overflow).
Int add(Int a, Int b);
Int sub(Int a, Int b);
Int mul(Int a, Int b);
int bit_length(Int v);

enum class Origin { User, Binarization, Pipeline };

struct Symbol {
  bool nt = false;
  Int v = 0;  // nonterminal index when nt, terminal value otherwise

  static Symbol N(int id) { return {true, id}; }
  static Symbol T(Int value) { return {false, value}; }
  int id() const { return static_cast<int>(v); }
  auto operator<=>(const Symbol&) const = default;
};

struct Rule {
  int lhs = 0;
  std::vector<Symbol> rhs;
  bool operator==(const Rule&) const = default;
};

struct Gvas {
  std::vector<std::string> names;
  std::vector<Origin> origins;
  int start = 0;
  std::vector<Rule> rules;
  bool binarized = false;

  int nt_count() const { return static_cast<int>(names.size()); }
  int find(const std::string& name) const;
  int add_nt(const std::string& name, Origin origin);
  // Returns a name not yet used, derived from base.
  std::string fresh_name(const std::string& base) const;
  std::vector<std::vector<int>> rules_by_lhs() const;
  std::string symbol_text(const Symbol& s) const;
};

Gvas parse_gvas(const std::string& text);
std::string to_text(const Gvas& g);

Gvas binarize(const Gvas& g);
Int size_of(const Gvas& g);
Gvas reverse(const Gvas& g);

enum class ComponentClass { Thin, Branching };

struct ComponentDag {
  std::vector<int> comp_of;                 // nonterminal -> component
  std::vector<std::vector<int>> members;    // component -> nonterminals
  std::vector<std::set<int>> edges;         // component -> strictly lower components
  std::vector<ComponentClass> cls;
  std::vector<int> bottom_up;               // every component after all its successors
  int top = 0;

  bool branching(int comp) const { return cls[comp] == ComponentClass::Branching; }
  bool all_thin() const;
};

ComponentDag component_dag(const Gvas& g);

// X derives a sentential form with two occurrences of X.
bool derives_two_copies(const Gvas& g, int x);

Gvas substitute(const Gvas& g, int v, const Gvas& h);

std::vector<bool> reachable_from(const Gvas& g, int x);
std::vector<bool> productive(const Gvas& g);
// Keeps nonterminals reachable from x (and, when drop_unproductive, able to
// derive a terminal word); x becomes the start. Relative order is preserved.
Gvas restrict_to(const Gvas& g, int x, bool drop_unproductive = false);
Gvas with_start(const Gvas& g, int x);
// Renames every nonterminal with prefix, marking them pipeline-fresh.
Gvas prefixed(const Gvas& g, const std::string& prefix);
Gvas prune(const Gvas& g);

bool is_thin(const Gvas& g);
bool top_branching(const Gvas& g);
Int max_abs_terminal(const Gvas& g);

}  // namespace gvas
