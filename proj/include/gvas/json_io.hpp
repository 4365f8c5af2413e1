#pragma once

#include "gvas/derivation.hpp"
#include "gvas/grammar.hpp"
#include "json.hpp"

namespace gvas {

using json = nlohmann::json;

json to_json(const Gvas& g);
Gvas gvas_from_json(const json& j);

json symbol_json(const Gvas& g, const Symbol& s);
json to_json(const Gvas& g, const Derivation& d);
json to_json(const Gvas& g, const CountedDerivation& d);

}  // namespace gvas
