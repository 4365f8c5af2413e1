#pragma once

#include <map>
#include <optional>
#include <tuple>
#include <vector>

#include "gvas/derivation.hpp"
#include "gvas/grammar.hpp"

namespace gvas {

struct SearchCaps {
  int nodeCap = 64;
  Int valueCap = Int{1} << 16;
  long long stateCap = 2'000'000;
};

struct CycleSummary {
  int nonterminal = 0;
  Int left = 0, right = 0, global = 0;
  Int left_need = 0;  // smallest input at which the left part is valid
  Cycle witness;
};

struct ResiduumInfo {
  Int d = 0;
  std::map<int, Int> r;
};

struct Constants {
  Int A = 0, C = 0, D = 0, Dp = 0;
  // per top nonterminal: a cycle with positive left and global effects whose
  // left part is valid at A
  std::map<int, Cycle> pump;
  // per nonterminal: a complete derivation of effect >= -C valid at C
  std::map<int, Derivation> completion;
};

struct Infinitary {
  bool value = false;
  std::optional<Cycle> pump;
};

// Profile of a simple complete derivation: effect and smallest valid input.
struct SimpleProfile {
  Int effect = 0;
  Int need = 0;
  Derivation witness;
};

// Nonterminals reachable from the start that derive a terminal word.
std::vector<bool> live_nonterminals(const Gvas& g);

std::vector<CycleSummary> simple_cycles(const Gvas& g, const SearchCaps& caps = {});
// One profile per effect (smallest need) over simple complete x-derivations.
std::vector<SimpleProfile> simple_derivations(const Gvas& g, int x, const SearchCaps& caps = {});
ResiduumInfo residuum(const Gvas& g, const SearchCaps& caps = {});
Infinitary is_infinitary(const Gvas& g, const SearchCaps& caps = {});
// Bounded search for any x-cycle with positive left and global effects.
std::optional<Cycle> find_positive_cycle(const Gvas& g, int x, int max_nodes);
Constants constants_of(const Gvas& g, const SearchCaps& caps = {});
Constants constants_with(const Gvas& g, Int A, const std::map<int, Cycle>& pumps, const SearchCaps& caps = {});
std::vector<Int> bezout_combination(const std::vector<Int>& effects, Int p);
Int gcd_of(const std::vector<Int>& values);

// A smallest complete derivation per nonterminal (empty when unproductive).
std::vector<std::optional<Derivation>> smallest_complete(const Gvas& g);
// A tree rooted at `from` with exactly one nonterminal leaf, labelled `to`,
// all other leaves terminal. Returns nothing when `to` is unreachable.
std::optional<Cycle> context_between(const Gvas& g, int from, int to, IdSource& ids);

// A tree x => u1 x u2 x u3 inside the component of x, with both x leaves.
std::optional<std::tuple<Derivation, NodeId, NodeId>> double_context(const Gvas& g, int x, IdSource& ids);

// Plugs `sub` (fresh ids) into the distinguished leaf of `ctx`.
Derivation plug(const Cycle& ctx, const Derivation& sub, IdSource& ids);

}  // namespace gvas
