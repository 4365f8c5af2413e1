#include "gvas/json_io.hpp"

namespace gvas {

json symbol_json(const Gvas& g, const Symbol& s) {
  if (s.nt) return json{{"nt", g.names[s.id()]}};
  return json{{"int", s.v}};
}

json to_json(const Gvas& g) {
  json rules = json::array();
  for (const Rule& r : g.rules) {
    json rhs = json::array();
    for (const Symbol& s : r.rhs) rhs.push_back(symbol_json(g, s));
    rules.push_back(json{{"lhs", g.names[r.lhs]}, {"rhs", rhs}});
  }
  return json{{"start", g.names[g.start]}, {"rules", rules}};
}

Gvas gvas_from_json(const json& j) {
  Gvas g;
  auto intern = [&](const std::string& n) {
    int id = g.find(n);
    return id >= 0 ? id : g.add_nt(n, Origin::User);
  };
  try {
    for (const json& r : j.at("rules")) {
      Rule rule;
      rule.lhs = intern(r.at("lhs").get<std::string>());
      for (const json& s : r.at("rhs")) {
        if (s.contains("nt"))
          rule.rhs.push_back(Symbol::N(intern(s.at("nt").get<std::string>())));
        else
          rule.rhs.push_back(Symbol::T(s.at("int").get<Int>()));
      }
      g.rules.push_back(std::move(rule));
    }
    std::string start = j.at("start").get<std::string>();
    g.start = g.find(start);
    if (g.start < 0) throw Error(ErrorKind::Syntax, "undeclared start nonterminal " + start);
  } catch (const json::exception& e) {
    throw Error(ErrorKind::Syntax, std::string("grammar JSON: ") + e.what());
  }
  return g;
}

json to_json(const Gvas& g, const Derivation& d) {
  json nodes = json::array();
  for (const auto& [id, n] : d.nodes) {
    json e{{"id", id}, {"label", symbol_json(g, n.label)}};
    if (!n.leaf()) {
      e["left"] = n.left;
      e["right"] = n.right;
    }
    nodes.push_back(e);
  }
  return json{{"root", d.root}, {"nodes", nodes}};
}

json to_json(const Gvas& g, const CountedDerivation& c) {
  json j = to_json(g, c.tree);
  for (json& e : j["nodes"]) {
    NodeId id = e["id"].get<NodeId>();
    e["in"] = c.in.at(id);
    e["out"] = c.out.at(id);
  }
  return j;
}

}  // namespace gvas
