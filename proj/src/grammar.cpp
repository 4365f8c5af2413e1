#include "gvas/grammar.hpp"

#include <algorithm>
#include <cctype>
#include <functional>
#include <sstream>

namespace gvas {

const char* to_string(ErrorKind k) {
  switch (k) {
    case ErrorKind::Syntax: return "SyntaxError";
    case ErrorKind::Semantic: return "SemanticError";
    case ErrorKind::IdCollision: return "IdCollision";
    case ErrorKind::LabelMismatch: return "LabelMismatch";
    case ErrorKind::NotAncestor: return "NotAncestor";
    case ErrorKind::NegativeCounter: return "NegativeCounter";
    case ErrorKind::IncompleteCycle: return "IncompleteCycle";
    case ErrorKind::NotThin: return "NotThin";
    case ErrorKind::NotDiagonal: return "NotDiagonal";
    case ErrorKind::NonDiagonalDetected: return "NonDiagonalDetected";
    case ErrorKind::NoCompleteDerivation: return "NoCompleteDerivation";
    case ErrorKind::NoSuchEffect: return "NoSuchEffect";
    case ErrorKind::NegativeCycleExists: return "NegativeCycleExists";
    case ErrorKind::EmptyEffects: return "EmptyEffects";
    case ErrorKind::PreconditionViolation: return "PreconditionViolation";
    case ErrorKind::SearchCapExceeded: return "SearchCapExceeded";
    case ErrorKind::CapExceeded: return "CapExceeded";
    case ErrorKind::OracleUnknown: return "OracleUnknown";
    case ErrorKind::InvariantBroken: return "InvariantBroken";
    case ErrorKind::Overflow: return "Overflow";
  }
  return "Error";
}

Error::Error(ErrorKind kind, const std::string& msg)
    : std::runtime_error(std::string(to_string(kind)) + ": " + msg), kind_(kind) {}

Int add(Int a, Int b) {
  Int r;
  if (__builtin_add_overflow(a, b, &r)) throw Error(ErrorKind::Overflow, "addition");
  return r;
}

Int sub(Int a, Int b) {
  Int r;
  if (__builtin_sub_overflow(a, b, &r)) throw Error(ErrorKind::Overflow, "subtraction");
  return r;
}

Int mul(Int a, Int b) {
  Int r;
  if (__builtin_mul_overflow(a, b, &r)) throw Error(ErrorKind::Overflow, "multiplication");
  return r;
}

int bit_length(Int v) {
  if (v == 0) return 1;
  unsigned long long u = v < 0 ? 0ULL - static_cast<unsigned long long>(v) : static_cast<unsigned long long>(v);
  int n = 0;
  while (u) {
    ++n;
    u >>= 1;
  }
  return n;
}

int Gvas::find(const std::string& name) const {
  for (int i = 0; i < nt_count(); ++i)
    if (names[i] == name) return i;
  return -1;
}

int Gvas::add_nt(const std::string& name, Origin origin) {
  if (find(name) >= 0) throw Error(ErrorKind::IdCollision, "nonterminal " + name + " already exists");
  names.push_back(name);
  origins.push_back(origin);
  return nt_count() - 1;
}

std::string Gvas::fresh_name(const std::string& base) const {
  if (find(base) < 0) return base;
  for (int k = 1;; ++k) {
    std::string cand = base + "#" + std::to_string(k);
    if (find(cand) < 0) return cand;
  }
}

std::vector<std::vector<int>> Gvas::rules_by_lhs() const {
  std::vector<std::vector<int>> out(names.size());
  for (int i = 0; i < static_cast<int>(rules.size()); ++i) out[rules[i].lhs].push_back(i);
  return out;
}

std::string Gvas::symbol_text(const Symbol& s) const {
  return s.nt ? names[s.id()] : std::to_string(s.v);
}

namespace {

bool ident_start(char c) { return std::isalpha(static_cast<unsigned char>(c)) != 0; }
bool ident_char(char c) {
  return std::isalnum(static_cast<unsigned char>(c)) != 0 || c == '_' || c == '#';
}

[[noreturn]] void syntax(int line, int col, const std::string& what) {
  throw Error(ErrorKind::Syntax, "line " + std::to_string(line) + ", column " + std::to_string(col) + ": " + what);
}

struct Lexer {
  const std::string& s;
  int line;
  size_t pos = 0;

  void skip() {
    while (pos < s.size() && std::isspace(static_cast<unsigned char>(s[pos]))) ++pos;
  }
  bool done() {
    skip();
    return pos >= s.size();
  }
  int col() const { return static_cast<int>(pos) + 1; }

  std::string ident() {
    skip();
    if (pos >= s.size() || !ident_start(s[pos])) syntax(line, col(), "identifier expected");
    size_t b = pos;
    while (pos < s.size() && ident_char(s[pos])) ++pos;
    return s.substr(b, pos - b);
  }
};

Int parse_int(const std::string& tok, int line, int col) {
  Int v = 0;
  size_t i = tok[0] == '-' ? 1 : 0;
  if (i == tok.size()) syntax(line, col, "digit expected after '-'");
  for (; i < tok.size(); ++i) {
    if (!std::isdigit(static_cast<unsigned char>(tok[i]))) syntax(line, col, "malformed integer '" + tok + "'");
    if (__builtin_mul_overflow(v, 10, &v) || __builtin_add_overflow(v, tok[i] - '0', &v))
      syntax(line, col, "integer out of range '" + tok + "'");
  }
  return tok[0] == '-' ? -v : v;
}

}  // namespace

Gvas parse_gvas(const std::string& text) {
  Gvas g;
  std::optional<std::string> start;
  int start_line = 0;
  std::istringstream in(text);
  std::string raw;
  int line = 0;
  auto intern = [&](const std::string& n) {
    int id = g.find(n);
    return id >= 0 ? id : g.add_nt(n, Origin::User);
  };
  while (std::getline(in, raw)) {
    ++line;
    if (!raw.empty() && raw.back() == '\r') raw.pop_back();
    Lexer lx{raw, line};
    if (lx.done()) continue;
    if (raw[lx.pos] == '#') continue;
    size_t word_at = lx.pos;
    std::string first = lx.ident();
    lx.skip();
    bool arrow = lx.pos + 1 < raw.size() && raw[lx.pos] == '-' && raw[lx.pos + 1] == '>';
    if (first == "start" && !arrow) {
      if (start) syntax(line, static_cast<int>(word_at) + 1, "duplicate start declaration (first on line " + std::to_string(start_line) + ")");
      start = lx.ident();
      start_line = line;
      if (!lx.done()) syntax(line, lx.col(), "unexpected text after start declaration");
      continue;
    }
    if (!arrow) syntax(line, lx.col(), "'->' expected");
    lx.pos += 2;
    Rule r;
    r.lhs = intern(first);
    while (!lx.done()) {
      int c = lx.col();
      size_t b = lx.pos;
      while (lx.pos < raw.size() && !std::isspace(static_cast<unsigned char>(raw[lx.pos]))) ++lx.pos;
      std::string tok = raw.substr(b, lx.pos - b);
      if (ident_start(tok[0])) {
        for (char ch : tok)
          if (!ident_char(ch)) syntax(line, c, "malformed identifier '" + tok + "'");
        r.rhs.push_back(Symbol::N(intern(tok)));
      } else if (tok[0] == '-' || std::isdigit(static_cast<unsigned char>(tok[0]))) {
        r.rhs.push_back(Symbol::T(parse_int(tok, line, c)));
      } else {
        syntax(line, c, "unexpected symbol '" + tok + "'");
      }
    }
    g.rules.push_back(std::move(r));
  }
  if (!start) throw Error(ErrorKind::Syntax, "missing start declaration");
  g.start = g.find(*start);
  if (g.start < 0)
    throw Error(ErrorKind::Syntax, "line " + std::to_string(start_line) + ": undeclared start nonterminal " + *start);
  g.binarized = false;
  return g;
}

std::string to_text(const Gvas& g) {
  std::ostringstream o;
  o << "start " << g.names[g.start] << "\n";
  for (const Rule& r : g.rules) {
    o << g.names[r.lhs] << " ->";
    for (const Symbol& s : r.rhs) o << ' ' << g.symbol_text(s);
    o << "\n";
  }
  return o.str();
}

Gvas binarize(const Gvas& g) {
  Gvas out = g;
  out.rules.clear();
  out.binarized = true;
  std::map<int, int> counter;
  for (const Rule& r : g.rules) {
    std::vector<Symbol> rhs = r.rhs;
    while (rhs.size() < 2) rhs.push_back(Symbol::T(0));
    if (rhs.size() == 2) {
      out.rules.push_back({r.lhs, rhs});
      continue;
    }
    // X -> s1 .. sk becomes X -> Y_{k-1} s_k, Y_{k-1} -> Y_{k-2} s_{k-1}, ..., Y_2 -> s1 s2
    size_t k = rhs.size();
    std::vector<int> fresh(k, -1);
    for (size_t j = k - 1; j >= 2; --j) {
      std::string name;
      do {
        name = g.names[r.lhs] + "#" + std::to_string(++counter[r.lhs]);
      } while (out.find(name) >= 0);
      fresh[j] = out.add_nt(name, Origin::Binarization);
    }
    out.rules.push_back({r.lhs, {Symbol::N(fresh[k - 1]), rhs[k - 1]}});
    for (size_t j = k - 1; j >= 3; --j) out.rules.push_back({fresh[j], {Symbol::N(fresh[j - 1]), rhs[j - 1]}});
    out.rules.push_back({fresh[2], {rhs[0], rhs[1]}});
  }
  return out;
}

Int size_of(const Gvas& g) {
  Int s = g.nt_count() + static_cast<Int>(g.rules.size());
  for (const Rule& r : g.rules) {
    s = add(s, static_cast<Int>(r.rhs.size()));
    for (const Symbol& x : r.rhs)
      if (!x.nt) s = add(s, bit_length(x.v));
  }
  return s;
}

Gvas reverse(const Gvas& g) {
  Gvas out = g;
  for (Rule& r : out.rules) {
    std::reverse(r.rhs.begin(), r.rhs.end());
    for (Symbol& s : r.rhs)
      if (!s.nt) s.v = sub(0, s.v);
  }
  return out;
}

bool ComponentDag::all_thin() const {
  return std::all_of(cls.begin(), cls.end(), [](ComponentClass c) { return c == ComponentClass::Thin; });
}

ComponentDag component_dag(const Gvas& g) {
  int n = g.nt_count();
  std::vector<std::vector<int>> adj(n);
  for (const Rule& r : g.rules)
    for (const Symbol& s : r.rhs)
      if (s.nt) adj[r.lhs].push_back(s.id());
  for (auto& a : adj) {
    std::sort(a.begin(), a.end());
    a.erase(std::unique(a.begin(), a.end()), a.end());
  }
  ComponentDag dag;
  dag.comp_of.assign(n, -1);
  std::vector<int> index(n, -1), low(n, 0), stack;
  std::vector<bool> on(n, false);
  int counter = 0;
  std::function<void(int)> visit = [&](int v) {
    index[v] = low[v] = counter++;
    stack.push_back(v);
    on[v] = true;
    for (int w : adj[v]) {
      if (index[w] < 0) {
        visit(w);
        low[v] = std::min(low[v], low[w]);
      } else if (on[w]) {
        low[v] = std::min(low[v], index[w]);
      }
    }
    if (low[v] == index[v]) {
      int c = static_cast<int>(dag.members.size());
      dag.members.emplace_back();
      int w;
      do {
        w = stack.back();
        stack.pop_back();
        on[w] = false;
        dag.comp_of[w] = c;
        dag.members[c].push_back(w);
      } while (w != v);
      std::sort(dag.members[c].begin(), dag.members[c].end());
      dag.bottom_up.push_back(c);
    }
  };
  if (n > 0 && index[g.start] < 0) visit(g.start);
  for (int v = 0; v < n; ++v)
    if (index[v] < 0) visit(v);
  int m = static_cast<int>(dag.members.size());
  dag.edges.assign(m, {});
  dag.cls.assign(m, ComponentClass::Thin);
  for (const Rule& r : g.rules) {
    int c = dag.comp_of[r.lhs];
    int same = 0;
    for (const Symbol& s : r.rhs) {
      if (!s.nt) continue;
      int d = dag.comp_of[s.id()];
      if (d == c)
        ++same;
      else
        dag.edges[c].insert(d);
    }
    if (same >= 2) dag.cls[c] = ComponentClass::Branching;
  }
  dag.top = n > 0 ? dag.comp_of[g.start] : 0;
  return dag;
}

std::vector<bool> reachable_from(const Gvas& g, int x) {
  std::vector<bool> seen(g.nt_count(), false);
  auto by = g.rules_by_lhs();
  std::vector<int> work{x};
  seen[x] = true;
  while (!work.empty()) {
    int v = work.back();
    work.pop_back();
    for (int ri : by[v])
      for (const Symbol& s : g.rules[ri].rhs)
        if (s.nt && !seen[s.id()]) {
          seen[s.id()] = true;
          work.push_back(s.id());
        }
  }
  return seen;
}

bool derives_two_copies(const Gvas& g, int x) {
  std::vector<bool> from_x = reachable_from(g, x);
  for (const Rule& r : g.rules) {
    if (!from_x[r.lhs]) continue;
    int back = 0;
    for (const Symbol& s : r.rhs)
      if (s.nt && reachable_from(g, s.id())[x]) ++back;
    if (back >= 2) return true;
  }
  return false;
}

std::vector<bool> productive(const Gvas& g) {
  std::vector<bool> p(g.nt_count(), false);
  bool changed = true;
  while (changed) {
    changed = false;
    for (const Rule& r : g.rules) {
      if (p[r.lhs]) continue;
      if (std::all_of(r.rhs.begin(), r.rhs.end(), [&](const Symbol& s) { return !s.nt || p[s.id()]; })) {
        p[r.lhs] = true;
        changed = true;
      }
    }
  }
  return p;
}

Gvas restrict_to(const Gvas& g, int x, bool drop_unproductive) {
  Gvas base = g;
  if (drop_unproductive) {
    std::vector<bool> p = productive(g);
    base.rules.clear();
    for (const Rule& r : g.rules)
      if (p[r.lhs] && std::all_of(r.rhs.begin(), r.rhs.end(), [&](const Symbol& s) { return !s.nt || p[s.id()]; }))
        base.rules.push_back(r);
  }
  std::vector<bool> keep = reachable_from(base, x);
  std::vector<int> remap(g.nt_count(), -1);
  Gvas out;
  out.binarized = g.binarized;
  for (int i = 0; i < g.nt_count(); ++i)
    if (keep[i]) {
      remap[i] = out.nt_count();
      out.names.push_back(g.names[i]);
      out.origins.push_back(g.origins[i]);
    }
  out.start = remap[x];
  for (const Rule& r : base.rules) {
    if (!keep[r.lhs]) continue;
    Rule nr{remap[r.lhs], r.rhs};
    for (Symbol& s : nr.rhs)
      if (s.nt) s.v = remap[s.id()];
    out.rules.push_back(std::move(nr));
  }
  return out;
}

Gvas with_start(const Gvas& g, int x) {
  Gvas out = g;
  out.start = x;
  return out;
}

Gvas prefixed(const Gvas& g, const std::string& prefix) {
  Gvas out = g;
  for (size_t i = 0; i < out.names.size(); ++i) {
    out.names[i] = prefix + out.names[i];
    out.origins[i] = Origin::Pipeline;
  }
  return out;
}

Gvas prune(const Gvas& g) { return restrict_to(g, g.start, true); }

Gvas substitute(const Gvas& g, int v, const Gvas& h) {
  if (v < 0 || v >= g.nt_count()) throw Error(ErrorKind::PreconditionViolation, "substitute: bad nonterminal");
  Gvas out;
  out.binarized = g.binarized && h.binarized;
  std::vector<int> gmap(g.nt_count(), -1), hmap(h.nt_count(), -1);
  for (int i = 0; i < g.nt_count(); ++i) {
    if (i == v) continue;
    gmap[i] = out.add_nt(g.names[i], g.origins[i]);
  }
  for (int i = 0; i < h.nt_count(); ++i) {
    if (out.find(h.names[i]) >= 0)
      throw Error(ErrorKind::IdCollision, "substitute: nonterminal " + h.names[i] + " occurs in both grammars");
    hmap[i] = out.add_nt(h.names[i], h.origins[i]);
  }
  gmap[v] = hmap[h.start];
  out.start = gmap[g.start];
  for (const Rule& r : g.rules) {
    if (r.lhs == v) continue;
    Rule nr{gmap[r.lhs], r.rhs};
    for (Symbol& s : nr.rhs)
      if (s.nt) s.v = gmap[s.id()];
    out.rules.push_back(std::move(nr));
  }
  for (const Rule& r : h.rules) {
    Rule nr{hmap[r.lhs], r.rhs};
    for (Symbol& s : nr.rhs)
      if (s.nt) s.v = hmap[s.id()];
    out.rules.push_back(std::move(nr));
  }
  return out;
}

bool is_thin(const Gvas& g) { return component_dag(g).all_thin(); }

bool top_branching(const Gvas& g) {
  ComponentDag dag = component_dag(g);
  return dag.branching(dag.top);
}

Int max_abs_terminal(const Gvas& g) {
  Int m = 0;
  for (const Rule& r : g.rules)
    for (const Symbol& s : r.rhs)
      if (!s.nt) m = std::max(m, s.v < 0 ? sub(0, s.v) : s.v);
  return m;
}

}  // namespace gvas
