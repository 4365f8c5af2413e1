#pragma once

#include <fstream>
#include <sstream>
#include <string>

#include "gvas/derivation.hpp"
#include "gvas/grammar.hpp"

namespace fixture {

inline std::string read(const std::string& name) {
  std::ifstream in(std::string(GVAS_FIXTURES) + "/" + name + ".gvas");
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline gvas::Gvas raw(const std::string& name) { return gvas::parse_gvas(read(name)); }
inline gvas::Gvas load(const std::string& name) { return gvas::binarize(raw(name)); }
inline gvas::Gvas text(const std::string& src) { return gvas::binarize(gvas::parse_gvas(src)); }

inline int nt(const gvas::Gvas& g, const std::string& n) { return g.find(n); }

// X(Y(-10, 12), -7)
inline gvas::Derivation two_level_example(gvas::IdSource& ids, gvas::NodeId* minus10 = nullptr, gvas::NodeId* ynode = nullptr) {
  using namespace gvas;
  Derivation a = leaf(ids, Symbol::T(-10));
  Derivation b = leaf(ids, Symbol::T(12));
  Derivation y = join(ids, Symbol::N(1), a, b);
  Derivation c = leaf(ids, Symbol::T(-7));
  if (minus10) *minus10 = a.root;
  if (ynode) *ynode = y.root;
  return join(ids, Symbol::N(0), y, c);
}

}  // namespace fixture
