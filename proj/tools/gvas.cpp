#include <fstream>
#include <iostream>
#include <sstream>

#include "CLI11.hpp"
#include "gvas/cycles.hpp"
#include "gvas/json_io.hpp"
#include "gvas/oracle.hpp"
#include "gvas/reach.hpp"
#include "gvas/region.hpp"
#include "gvas/supertree.hpp"

using namespace gvas;

namespace {

struct Options {
  std::string file;
  bool json = false;
  bool prune = false;
  std::uint64_t seed = 0xC0FFEE;
  Budget budget;
  Int from = 0, to = 0, target = 0, a = 0, window = 8;
  std::string out, dot, dump;
};

// FILE may also be "corpus:K", the K-th grammar of the seeded corpus.
Gvas load(const Options& o) {
  Gvas g;
  if (o.file.rfind("corpus:", 0) == 0) {
    int k = std::stoi(o.file.substr(7));
    if (k < 0) throw Error(ErrorKind::Syntax, "bad corpus index");
    g = corpus(o.seed, k + 1).back();
  } else {
    std::ifstream in(o.file);
    if (!in) throw Error(ErrorKind::Syntax, "cannot read " + o.file);
    std::stringstream ss;
    ss << in.rdbuf();
    g = parse_gvas(ss.str());
  }
  g = binarize(g);
  return o.prune ? prune(g) : g;
}

PipelineOptions pipeline(const Options& o) {
  PipelineOptions p;
  p.budget = o.budget;
  return p;
}

int verdict_exit(VerdictKind k) { return k == VerdictKind::Yes ? 0 : k == VerdictKind::No ? 1 : 2; }

int report_verdict(const Options& o, const Gvas& g, const Verdict& v) {
  if (o.json) {
    json j{{"verdict", to_string(v.kind)}, {"diagnostics", v.reason}};
    if (v.witness) {
      j["witness"] = to_json(g, *v.witness);
      j["output"] = v.witness_output;
    }
    std::cout << j.dump(2) << "\n";
  } else {
    std::cout << to_string(v.kind);
    if (v.kind == VerdictKind::Yes) std::cout << " (output " << v.witness_output << ")";
    if (!v.reason.empty()) std::cout << ": " << v.reason;
    std::cout << "\n";
  }
  return verdict_exit(v.kind);
}

std::string members_text(const Gvas& g, const std::vector<int>& m) {
  std::string s = "{";
  for (size_t i = 0; i < m.size(); ++i) s += (i ? ", " : "") + g.names[m[i]];
  return s + "}";
}

int analyze(const Options& o) {
  Gvas g = load(o);
  ComponentDag dag = component_dag(g);
  json j{{"nonterminals", g.nt_count()}, {"rules", g.rules.size()}, {"size", size_of(g)}};
  json comps = json::array();
  for (size_t c = 0; c < dag.members.size(); ++c)
    comps.push_back({{"members", members_text(g, dag.members[c])},
                     {"class", dag.branching(static_cast<int>(c)) ? "Branching" : "Thin"},
                     {"top", static_cast<int>(c) == dag.top}});
  j["components"] = comps;
  j["thin"] = dag.all_thin();
  if (dag.branching(dag.top)) {
    Infinitary inf = is_infinitary(g);
    ResiduumInfo res = residuum(g);
    j["infinitary"] = inf.value;
    j["d"] = res.d;
    json r = json::object();
    for (const auto& [x, v] : res.r) r[g.names[x]] = v;
    j["r"] = r;
  }
  if (o.json) {
    std::cout << j.dump(2) << "\n";
    return 0;
  }
  std::cout << g.nt_count() << " nonterminals, " << g.rules.size() << " rules, size " << size_of(g) << "\n";
  for (const auto& c : comps)
    std::cout << "component " << c["members"].get<std::string>() << " " << c["class"].get<std::string>()
              << (c["top"].get<bool>() ? " (top)" : "") << "\n";
  std::cout << "grammar is " << (dag.all_thin() ? "thin" : "not thin") << "\n";
  if (j.contains("infinitary")) {
    std::cout << "infinitary: " << (j["infinitary"].get<bool>() ? "yes" : "no") << "\n";
    std::cout << "residuum d = " << j["d"] << ", r = " << j["r"].dump() << "\n";
  }
  return 0;
}

int reach_cmd(const Options& o) {
  Gvas g = load(o);
  return report_verdict(o, g, reach(g, o.from, o.to, pipeline(o)));
}

int cover_cmd(const Options& o) {
  Gvas g = load(o);
  return report_verdict(o, g, cover(g, o.from, o.target, o.budget));
}

int thinify_cmd(const Options& o) {
  Gvas g = load(o);
  ThinifyStats stats;
  Gvas h = thinify(g, pipeline(o), &stats);
  std::string text = to_text(h);
  if (o.out.empty() || o.out == "-") std::cout << text;
  else std::ofstream(o.out) << text;
  if (o.json) {
    std::cout << json{{"components", stats.components}, {"substitutions", stats.substitutions}, {"log", stats.log},
                      {"nonterminals", h.nt_count()}, {"rules", h.rules.size()}}
                     .dump(2)
              << "\n";
  } else {
    for (const std::string& l : stats.log) std::cerr << l << "\n";
  }
  return 0;
}

int lines_cmd(const Options& o) {
  Gvas g = load(o);
  LinesResult r = small_lines(g, o.a, pipeline(o));
  if (o.json) {
    std::cout << json{{"a", o.a}, {"T", r.T}, {"infinitary", r.infinitary}, {"success", r.success}, {"h", to_json(r.h)}}.dump(2)
              << "\n";
  } else {
    std::cout << "a = " << o.a << ", T = " << r.T << (r.infinitary ? ", infinitary" : ", finite")
              << (r.success ? ", success" : "") << "\n"
              << to_text(r.h);
  }
  return 0;
}

int region_cmd(const Options& o) {
  Gvas g = load(o);
  FarRep f = far_from_axis(g);
  json lines = json::array();
  for (auto [d, a] : f.lines) lines.push_back({{"delta", d}, {"a", a}});
  json j{{"B", f.B},
         {"upper", {{"a", f.upper.a}, {"delta", f.upper.delta}, {"d", f.upper.d}, {"residue", f.upper.residue}}},
         {"lower", {{"a", f.lower.a}, {"delta", f.lower.delta}, {"d", f.lower.d}, {"residue", f.lower.residue}}},
         {"lines", lines},
         {"rep", to_json(f.rep)}};
  std::cout << (o.json ? j.dump(2) : j.dump()) << "\n";
  return 0;
}

int oracle_cmd(const Options& o) {
  Gvas g = load(o);
  PairSet p = brute_window(g, o.window, o.budget);
  if (o.json) {
    json j = json::array();
    for (auto [a, b] : p) j.push_back({a, b});
    std::cout << j.dump() << "\n";
  } else {
    for (auto [a, b] : p) std::cout << a << " -> " << b << "\n";
  }
  return 0;
}

int supertree_cmd(const Options& o) {
  Gvas g = load(o);
  Constants consts = constants_of(g);
  SaturationOracles oracles(g, std::max<Int>(64, 2 * (consts.A + consts.C * consts.Dp + 1)), o.budget.maxSteps);
  Supertree st = build_supertree(g, o.a, consts, oracles);
  if (!o.dot.empty()) std::ofstream(o.dot) << to_dot(st);
  if (!o.dump.empty()) std::ofstream(o.dump) << to_json(st).dump(2) << "\n";
  size_t classes = 0;
  for (const auto& [k, v] : st.gamma) classes += v.size();
  json j{{"supernodes", st.nodes.size()},
         {"successful", st.successes().size()},
         {"superleaves", st.superleaves().size()},
         {"cycle_classes", classes},
         {"A", consts.A},
         {"threshold", st.threshold}};
  if (o.json) std::cout << j.dump(2) << "\n";
  else
    for (const auto& [k, v] : j.items()) std::cout << k << ": " << v << "\n";
  return st.successes().empty() ? 1 : 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Reachability for one-counter grammar vector addition systems"};
  app.require_subcommand(1, 1);
  Options o;
  app.add_flag("--json", o.json, "JSON output");
  app.add_flag("--prune", o.prune, "drop unreachable and unproductive nonterminals first");
  app.add_option("--seed", o.seed, "corpus seed for FILE = corpus:K")->capture_default_str();
  app.add_option("--max-nodes", o.budget.maxDerivNodes, "derivation node budget")->capture_default_str();
  app.add_option("--max-counter", o.budget.maxCounter, "counter budget")->capture_default_str();
  app.add_option("--max-steps", o.budget.maxSteps, "step budget")->capture_default_str();

  std::function<int(const Options&)> run;
  auto sub = [&](const char* name, const char* help, int (*fn)(const Options&)) {
    CLI::App* s = app.add_subcommand(name, help);
    s->fallthrough();
    s->add_option("FILE", o.file, "grammar file")->required();
    s->callback([&run, fn] { run = fn; });
    return s;
  };
  sub("analyze", "components and cycle data", analyze);
  CLI::App* r = sub("reach", "decide a -> b", reach_cmd);
  r->add_option("--from", o.from)->required();
  r->add_option("--to", o.to)->required();
  CLI::App* c = sub("cover", "decide coverability", cover_cmd);
  c->add_option("--from", o.from)->required();
  c->add_option("--target", o.target)->required();
  sub("thinify", "thin grammar with the same relation", thinify_cmd)->add_option("-o", o.out, "output file");
  sub("lines", "vertical line analysis", lines_cmd)->add_option("--a", o.a)->required();
  sub("region", "far-from-axis representation", region_cmd);
  sub("oracle", "brute-force window", oracle_cmd)->add_option("--window", o.window)->capture_default_str();
  CLI::App* t = sub("supertree", "build the supertree", supertree_cmd);
  t->add_option("--a", o.a)->required();
  t->add_option("--dot", o.dot, "DOT output file");
  t->add_option("--dump", o.dump, "JSON output file");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? 0 : 3;
  }
  try {
    return run(o);
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    switch (e.kind()) {
      case ErrorKind::Syntax:
      case ErrorKind::Semantic:
      case ErrorKind::IdCollision: return 3;
      default: return 2;
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  }
}
