#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "gvas/cycles.hpp"
#include "gvas/grammar.hpp"
#include "gvas/oracle.hpp"
#include "gvas/semilinear.hpp"
#include "gvas/supertree.hpp"

namespace gvas {

struct CoverBounds {
  Int m = 0;
  Int bMax = 0;
  Int T = 0;
};

Int bmax_formula(Int m, Int nonterminals, Int B, Int depth);
Int t_formula(Int B, Int top_size, Int m);
// Longest path, in edges, of the component dag.
int dag_depth(const ComponentDag& dag);
bool has_negative_cycle(const Gvas& g);
CoverBounds cover_bounds(const Gvas& g, Int B, int max_nodes = 25);

// Requires a thin grammar.
Verdict thin_reach(const Gvas& h, Int a, Int b, const Budget& budget = {});
Verdict cover(const Gvas& g, Int a, Int target, const Budget& budget = {});

struct PipelineOptions {
  Budget budget;
  SupertreeCaps caps;
  LineOptions line;
  Int lowerCap = 64;
};

struct LinesResult {
  Int T = 0;
  Gvas h;
  bool infinitary = false;
  bool success = false;
};

// h is thin and exactly under-approximates g on {a} x [T, inf).
LinesResult small_lines(const Gvas& g, Int a, const PipelineOptions& opt = {});

// Thin grammar with the relation of g (top-branching, thin lower part)
// assembled from the pieces, which must agree with g outside [0, B]^2.
Gvas bounded_area(const Gvas& g, Int B, const std::vector<Gvas>& pieces, const PipelineOptions& opt = {});

struct ThinifyStats {
  int components = 0;
  int substitutions = 0;
  std::vector<std::string> log;
};

// Thin equivalent of a top-branching grammar whose lower part is thin.
Gvas thin_equivalent(const Gvas& g, const PipelineOptions& opt = {}, ThinifyStats* stats = nullptr);
Gvas thinify(const Gvas& g, const PipelineOptions& opt = {}, ThinifyStats* stats = nullptr);

Verdict reach(const Gvas& g, Int a, Int b, const PipelineOptions& opt = {});

// Seeded random raw grammars: at most 3 nonterminals, terminals in [-3, 3],
// at most 6 rules, right-hand sides of length 0 to 3.
std::vector<Gvas> corpus(std::uint64_t seed, int n);

}  // namespace gvas
