#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "gvas/derivation.hpp"
#include "gvas/grammar.hpp"

namespace gvas {

struct Budget {
  int maxDerivNodes = 41;
  Int maxCounter = 64;
  long long maxSteps = 50'000'000;
};

enum class VerdictKind { Yes, No, Unknown };

const char* to_string(VerdictKind k);

struct Verdict {
  VerdictKind kind = VerdictKind::Unknown;
  std::optional<Derivation> witness;
  Int witness_output = 0;
  std::string reason;

  static Verdict yes(Derivation w, Int out, std::string why = {});
  static Verdict no(std::string why);
  static Verdict unknown(std::string why);
};

// Square bit matrix over counter values [0, n-1].
class BitRel {
 public:
  BitRel() = default;
  explicit BitRel(int n) : n_(n), words_((n + 63) / 64), bits_(static_cast<size_t>(n) * words_, 0) {}
  int n() const { return n_; }
  int words() const { return words_; }
  const std::uint64_t* row_ptr(int i) const { return bits_.data() + row(i); }
  bool get(int i, int j) const { return (bits_[row(i) + j / 64] >> (j % 64)) & 1ULL; }
  void set(int i, int j) { bits_[row(i) + j / 64] |= 1ULL << (j % 64); }
  bool or_row_from(int i, const BitRel& other, int j);  // row i |= other.row j; true if changed
  bool merge(const BitRel& other);
  BitRel compose(const BitRel& other) const;
  bool empty_row(int i) const;
  bool operator==(const BitRel&) const = default;

 private:
  size_t row(int i) const { return static_cast<size_t>(i) * words_; }
  int n_ = 0;
  int words_ = 0;
  std::vector<std::uint64_t> bits_;
};

using PairSet = std::set<std::pair<Int, Int>>;

// All (a,b) in [0,window]^2 witnessed by a complete derivation of at most
// budget.maxDerivNodes nodes whose counters stay in [0, budget.maxCounter].
PairSet brute_window(const Gvas& g, Int window, const Budget& budget);

// Least fixpoint of the per-nonterminal relations restricted to counters in
// [0, cap]. In abstract mode the value cap stands for every value >= cap,
// which makes the result an over-approximation of the exact relation.
class Saturation {
 public:
  Saturation(const Gvas& g, Int cap, bool abstract_top = false, long long max_steps = 200'000'000);

  Int cap() const { return cap_; }
  bool abstract_top() const { return abstract_; }
  bool has(int x, Int i, Int o) const;
  std::vector<Int> outputs(int x, Int i) const;
  const BitRel& relation(int x) const { return rel_[x]; }
  int rounds() const { return rounds_; }
  // Exact mode only: a derivation from i to o whose counters stay below the cap.
  Derivation witness(int x, Int i, Int o, IdSource& ids, size_t max_nodes = 200000) const;
  // Exact mode only: true when no run from (x, a) can exceed the cap, so the
  // relation restricted to input a is exact.
  bool closed_from(int x, Int a) const;

 private:
  struct Back {
    std::int32_t rule = -1;
    std::int32_t mid = -1;
  };
  BitRel terminal_rel(Int t) const;
  const BitRel& term(Int t) const;

  Gvas g_;
  Int cap_;
  bool abstract_;
  int rounds_ = 0;
  std::vector<BitRel> rel_;
  mutable std::map<Int, BitRel> term_cache_;
  std::vector<std::vector<Back>> back_;
};

// Per-nonterminal set of effects modulo m over complete derivations.
std::vector<std::vector<bool>> effect_residues(const Gvas& g, int m);

// Reachability decisions with certificates for one grammar and start symbol.
class ReachOracle {
 public:
  ReachOracle(const Gvas& g, Int cap, long long max_steps = 200'000'000);
  Verdict query(Int a, Int b) const;
  Verdict cover(Int a, Int target) const;
  Int cap() const { return exact_.cap(); }
  const Saturation& exact() const { return exact_; }
  const Saturation& over() const { return over_; }

 private:
  std::optional<std::string> refute(Int a, Int b) const;
  Gvas g_;
  Saturation exact_;
  Saturation over_;
  std::vector<std::pair<int, std::vector<bool>>> residues_;
  // effect bounds over all complete start derivations, when they exist
  std::optional<Int> max_effect_, min_effect_;
};

}  // namespace gvas
