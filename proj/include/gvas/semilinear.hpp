#pragma once

#include <optional>
#include <utility>
#include <vector>

#include "gvas/derivation.hpp"
#include "gvas/grammar.hpp"
#include "gvas/oracle.hpp"
#include "json.hpp"

namespace gvas {

using Point = std::pair<Int, Int>;

struct LinearSet2 {
  Point base{0, 0};
  std::vector<Point> periods;
  bool operator==(const LinearSet2&) const = default;
};

struct SemilinearRelation {
  std::vector<LinearSet2> parts;
  bool diagonalized = false;
};

// alpha*x + beta*y >= gamma
struct HalfPlane {
  Int alpha = 0, beta = 0, gamma = 0;
};

struct Region {
  std::vector<HalfPlane> planes;

  static Region rectangle(Int x0, Int x1, Int y0, Int y1);
  static Region vertical_line(Int a, Int from);
  static Region right_of(Int a);                 // x >= a
  static Region upper_triangle(Int a, Int delta);  // x >= a, y >= x + delta
  static Region lower_triangle(Int a, Int delta);  // y >= a, y <= x - delta
  bool contains(Point p) const;
};

bool member(const LinearSet2& s, Point p);
bool member(const SemilinearRelation& s, Point p);

// Adds (1,1) to every part; the window [0, window]^2 is spot-checked for
// closure under +(1,1) first.
SemilinearRelation diagonalize(const SemilinearRelation& s, Int window = 12);
SemilinearRelation unite(const SemilinearRelation& s, const SemilinearRelation& t);
SemilinearRelation restrict(const SemilinearRelation& s, const Region& r);

// Thin grammar whose reachability relation is the denotation of s.
Gvas semilin_to_thin(const SemilinearRelation& s);

nlohmann::json to_json(const SemilinearRelation& s);
SemilinearRelation semilinear_from_json(const nlohmann::json& j);

struct LineRep {
  Int a = 0;
  Int T = 0;
  Int d = 0;
  Int residue = 0;  // outputs b >= T with b == residue (mod d) are reachable
  Int constructed_T = 0;
  SemilinearRelation rep;
};

struct LineOptions {
  bool tighten = true;
  Budget budget{41, 256, 200'000'000};
};

LineRep line_linear_threshold(const Gvas& g, Int a, const Derivation& tau, NodeId cycle_root, NodeId distinguished,
                              const LineOptions& opt = {});

// The vertical line {a} x {b >= T : b == residue (mod d)} (d = 0: the single point).
SemilinearRelation vertical_rep(Int a, Int T, Int d, Int residue);

}  // namespace gvas
