#pragma once

#include <optional>
#include <vector>

#include "gvas/derivation.hpp"
#include "gvas/grammar.hpp"
#include "gvas/semilinear.hpp"

namespace gvas {

// rep denotes R intersected with UT(a, delta) = {(x,y) : x >= a, y >= x + delta}.
struct TriangleRep {
  Int a = 0;
  Int delta = 0;
  Int d = 0;
  Int residue = 0;
  SemilinearRelation rep;
};

TriangleRep triangle_rep(const Gvas& g, const LineOptions& opt = {});
// Same for LT(a, delta) = {(x,y) : y >= a, x >= y + delta}.
TriangleRep lower_triangle_rep(const Gvas& g, const LineOptions& opt = {});

Derivation small_effect_derivation(const Gvas& g, Int delta);

struct DiagonalWitness {
  Int a = 0;
  Derivation witness;
};

std::optional<DiagonalWitness> diagonal_witness(const Gvas& g, Int delta);

struct FarRep {
  Int B = 0;
  TriangleRep upper, lower;
  std::vector<std::pair<Int, Int>> lines;  // (delta, a_delta)
  SemilinearRelation rep;
  Gvas h;
};

FarRep far_from_axis(const Gvas& g, const LineOptions& opt = {});

}  // namespace gvas
