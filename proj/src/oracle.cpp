#include "gvas/oracle.hpp"

#include <algorithm>
#include <functional>

#include "gvas/cycles.hpp"

namespace gvas {

const char* to_string(VerdictKind k) {
  switch (k) {
    case VerdictKind::Yes: return "yes";
    case VerdictKind::No: return "no";
    case VerdictKind::Unknown: return "unknown";
  }
  return "unknown";
}

Verdict Verdict::yes(Derivation w, Int out, std::string why) {
  Verdict v;
  v.kind = VerdictKind::Yes;
  v.witness = std::move(w);
  v.witness_output = out;
  v.reason = std::move(why);
  return v;
}

Verdict Verdict::no(std::string why) {
  Verdict v;
  v.kind = VerdictKind::No;
  v.reason = std::move(why);
  return v;
}

Verdict Verdict::unknown(std::string why) {
  Verdict v;
  v.kind = VerdictKind::Unknown;
  v.reason = std::move(why);
  return v;
}

bool BitRel::or_row_from(int i, const BitRel& other, int j) {
  bool changed = false;
  std::uint64_t* dst = bits_.data() + row(i);
  const std::uint64_t* src = other.row_ptr(j);
  for (int w = 0; w < words_; ++w) {
    std::uint64_t nv = dst[w] | src[w];
    if (nv != dst[w]) {
      dst[w] = nv;
      changed = true;
    }
  }
  return changed;
}

bool BitRel::merge(const BitRel& other) {
  bool changed = false;
  for (size_t k = 0; k < bits_.size(); ++k) {
    std::uint64_t nv = bits_[k] | other.bits_[k];
    if (nv != bits_[k]) {
      bits_[k] = nv;
      changed = true;
    }
  }
  return changed;
}

BitRel BitRel::compose(const BitRel& other) const {
  BitRel out(n_);
  for (int i = 0; i < n_; ++i) {
    const std::uint64_t* r = row_ptr(i);
    for (int w = 0; w < words_; ++w) {
      std::uint64_t word = r[w];
      while (word) {
        int b = __builtin_ctzll(word);
        word &= word - 1;
        out.or_row_from(i, other, w * 64 + b);
      }
    }
  }
  return out;
}

bool BitRel::empty_row(int i) const {
  const std::uint64_t* r = row_ptr(i);
  for (int w = 0; w < words_; ++w)
    if (r[w]) return false;
  return true;
}

namespace {

BitRel exact_terminal(Int t, int n) {
  BitRel r(n);
  for (int i = 0; i < n; ++i) {
    Int j = i + t;
    if (j >= 0 && j < n) r.set(i, static_cast<int>(j));
  }
  return r;
}

}  // namespace

PairSet brute_window(const Gvas& g, Int window, const Budget& budget) {
  if (!g.binarized) throw Error(ErrorKind::PreconditionViolation, "brute_window needs a binarized grammar");
  int n = static_cast<int>(budget.maxCounter) + 1;
  int maxn = budget.maxDerivNodes;
  std::vector<std::vector<BitRel>> rel(g.nt_count(), std::vector<BitRel>(maxn + 1, BitRel(n)));
  std::map<Int, BitRel> terms;
  auto sym = [&](const Symbol& s, int size) -> const BitRel* {
    if (s.nt) return &rel[s.id()][size];
    if (size != 1) return nullptr;
    auto it = terms.find(s.v);
    if (it == terms.end()) it = terms.emplace(s.v, exact_terminal(s.v, n)).first;
    return &it->second;
  };
  for (int size = 3; size <= maxn; size += 2)
    for (const Rule& r : g.rules)
      for (int ls = 1; ls <= size - 2; ls += 2) {
        const BitRel* a = sym(r.rhs[0], ls);
        const BitRel* b = sym(r.rhs[1], size - 1 - ls);
        if (!a || !b) continue;
        rel[r.lhs][size].merge(a->compose(*b));
      }
  PairSet out;
  Int w = std::min<Int>(window, n - 1);
  for (int size = 3; size <= maxn; size += 2)
    for (Int i = 0; i <= w; ++i)
      for (Int o = 0; o <= w; ++o)
        if (rel[g.start][size].get(static_cast<int>(i), static_cast<int>(o))) out.insert({i, o});
  return out;
}

BitRel Saturation::terminal_rel(Int t) const {
  int n = static_cast<int>(cap_) + 1;
  if (!abstract_) return exact_terminal(t, n);
  BitRel r(n);
  int top = static_cast<int>(cap_);
  for (int i = 0; i < top; ++i) {
    Int j = i + t;
    if (j < 0) continue;
    r.set(i, j >= cap_ ? top : static_cast<int>(j));
  }
  if (t >= 0) {
    r.set(top, top);
  } else {
    for (Int j = std::max<Int>(0, cap_ + t); j <= cap_; ++j) r.set(top, static_cast<int>(j));
  }
  return r;
}

const BitRel& Saturation::term(Int t) const {
  auto it = term_cache_.find(t);
  if (it == term_cache_.end()) it = term_cache_.emplace(t, terminal_rel(t)).first;
  return it->second;
}

Saturation::Saturation(const Gvas& g, Int cap, bool abstract_top, long long max_steps)
    : g_(g), cap_(cap), abstract_(abstract_top) {
  if (!g.binarized) throw Error(ErrorKind::PreconditionViolation, "saturation needs a binarized grammar");
  if (cap < 1 || cap > 30000) throw Error(ErrorKind::PreconditionViolation, "saturation cap out of range");
  int n = static_cast<int>(cap) + 1;
  rel_.assign(g.nt_count(), BitRel(n));
  if (!abstract_) back_.assign(g.nt_count(), std::vector<Back>(static_cast<size_t>(n) * n));
  long long steps = 0;
  bool changed = true;
  while (changed) {
    changed = false;
    ++rounds_;
    // in place: back pointers are chosen before the new bit is set, so they
    // always refer to strictly older facts
    auto rel_of = [&](const Symbol& s) -> const BitRel& { return s.nt ? rel_[s.id()] : term(s.v); };
    for (size_t ri = 0; ri < g.rules.size(); ++ri) {
      const Rule& r = g.rules[ri];
      const BitRel& a = rel_of(r.rhs[0]);
      const BitRel& b = rel_of(r.rhs[1]);
      steps += static_cast<long long>(n) * n;
      if (steps > max_steps) throw Error(ErrorKind::CapExceeded, "saturation step budget exhausted");
      BitRel c = a.compose(b);
      BitRel& dst = rel_[r.lhs];
      for (int i = 0; i < n; ++i) {
        const std::uint64_t* cr = c.row_ptr(i);
        const std::uint64_t* dr = dst.row_ptr(i);
        for (int w = 0; w < c.words(); ++w) {
          std::uint64_t fresh = cr[w] & ~dr[w];
          while (fresh) {
            int bit = __builtin_ctzll(fresh);
            fresh &= fresh - 1;
            int o = w * 64 + bit;
            changed = true;
            if (!abstract_)
              for (int m = 0; m < n; ++m)
                if (a.get(i, m) && b.get(m, o)) {
                  back_[r.lhs][static_cast<size_t>(i) * n + o] = Back{static_cast<std::int32_t>(ri), m};
                  break;
                }
            dst.set(i, o);
          }
        }
      }
    }
  }
}

bool Saturation::has(int x, Int i, Int o) const {
  if (i < 0 || o < 0 || i > cap_ || o > cap_) return false;
  return rel_[x].get(static_cast<int>(i), static_cast<int>(o));
}

std::vector<Int> Saturation::outputs(int x, Int i) const {
  std::vector<Int> out;
  if (i < 0 || i > cap_) return out;
  for (Int o = 0; o <= cap_; ++o)
    if (rel_[x].get(static_cast<int>(i), static_cast<int>(o))) out.push_back(o);
  return out;
}

Derivation Saturation::witness(int x, Int i, Int o, IdSource& ids, size_t max_nodes) const {
  if (abstract_) throw Error(ErrorKind::PreconditionViolation, "no witnesses in abstract mode");
  if (!has(x, i, o)) throw Error(ErrorKind::PreconditionViolation, "no such pair in relation");
  int n = static_cast<int>(cap_) + 1;
  size_t made = 0;
  std::function<Derivation(const Symbol&, Int, Int)> build = [&](const Symbol& s, Int a, Int b) -> Derivation {
    if (++made > max_nodes) throw Error(ErrorKind::CapExceeded, "witness exceeds node cap");
    if (!s.nt) return leaf(ids, s);
    const Back& bk = back_[s.id()][static_cast<size_t>(a) * n + b];
    const Rule& r = g_.rules[bk.rule];
    NodeId self = ids.fresh();
    Derivation l = build(r.rhs[0], a, bk.mid);
    Derivation rr = build(r.rhs[1], bk.mid, b);
    Derivation d;
    d.root = self;
    graft(d, l);
    graft(d, rr);
    d.nodes[self] = Node{s, l.root, rr.root};
    return d;
  };
  return build(Symbol::N(x), i, o);
}

bool Saturation::closed_from(int x, Int a) const {
  if (abstract_) throw Error(ErrorKind::PreconditionViolation, "closure is defined for the exact relation");
  if (a < 0 || a > cap_) return false;
  int n = static_cast<int>(cap_) + 1;
  auto by = g_.rules_by_lhs();
  std::vector<std::vector<bool>> called(g_.nt_count(), std::vector<bool>(n, false));
  std::vector<std::pair<int, int>> work{{x, static_cast<int>(a)}};
  called[x][a] = true;
  auto call = [&](const Symbol& s, int i) {
    if (!s.nt) return i + s.v <= cap_;
    if (!called[s.id()][i]) {
      called[s.id()][i] = true;
      work.push_back({s.id(), i});
    }
    return true;
  };
  while (!work.empty()) {
    auto [y, i] = work.back();
    work.pop_back();
    for (int ri : by[y]) {
      const Rule& r = g_.rules[ri];
      if (!call(r.rhs[0], i)) return false;
      const Symbol& f = r.rhs[0];
      if (!f.nt) {
        Int m = i + f.v;
        if (m >= 0 && !call(r.rhs[1], static_cast<int>(m))) return false;
      } else {
        for (int m = 0; m < n; ++m)
          if (rel_[f.id()].get(i, m) && !call(r.rhs[1], m)) return false;
      }
    }
  }
  return true;
}

std::vector<std::vector<bool>> effect_residues(const Gvas& g, int m) {
  std::vector<std::vector<bool>> res(g.nt_count(), std::vector<bool>(m, false));
  auto norm = [m](Int v) { return static_cast<int>(((v % m) + m) % m); };
  bool changed = true;
  while (changed) {
    changed = false;
    for (const Rule& r : g.rules) {
      std::vector<bool> acc(m, false);
      acc[0] = true;
      for (const Symbol& s : r.rhs) {
        std::vector<bool> next(m, false);
        for (int u = 0; u < m; ++u) {
          if (!acc[u]) continue;
          if (!s.nt) {
            next[norm(u + s.v)] = true;
          } else {
            for (int v = 0; v < m; ++v)
              if (res[s.id()][v]) next[(u + v) % m] = true;
          }
        }
        acc = next;
      }
      for (int u = 0; u < m; ++u)
        if (acc[u] && !res[r.lhs][u]) {
          res[r.lhs][u] = true;
          changed = true;
        }
    }
  }
  return res;
}

ReachOracle::ReachOracle(const Gvas& g, Int cap, long long max_steps)
    : g_(g), exact_(g, cap, false, max_steps), over_(g, cap, true, max_steps) {
  for (int m = 2; m <= 12; ++m) residues_.push_back({m, effect_residues(g, m)[g.start]});
  if (!g.binarized) return;
  // without positive (negative) simple cycles the largest (smallest) effect is
  // reached at a simple derivation
  try {
    bool pos = false, neg = false;
    for (const CycleSummary& c : simple_cycles(g)) {
      pos = pos || c.global > 0;
      neg = neg || c.global < 0;
    }
    auto profiles = simple_derivations(g, g.start);
    if (profiles.empty()) return;
    Int hi = profiles.front().effect, lo = hi;
    for (const SimpleProfile& p : profiles) {
      hi = std::max(hi, p.effect);
      lo = std::min(lo, p.effect);
    }
    if (!pos) max_effect_ = hi;
    if (!neg) min_effect_ = lo;
  } catch (const Error& e) {
    if (e.kind() != ErrorKind::SearchCapExceeded) throw;
  }
}

std::optional<std::string> ReachOracle::refute(Int a, Int b) const {
  if (max_effect_ && b - a > *max_effect_) return "every effect is at most " + std::to_string(*max_effect_);
  if (min_effect_ && b - a < *min_effect_) return "every effect is at least " + std::to_string(*min_effect_);
  for (const auto& [m, set] : residues_)
    if (!set[static_cast<size_t>((((b - a) % m) + m) % m)])
      return "effect " + std::to_string(b - a) + " has no derivation modulo " + std::to_string(m);
  if (a < exact_.cap()) {
    if (exact_.closed_from(g_.start, a)) return "exploration from " + std::to_string(a) + " closed below counter cap " + std::to_string(exact_.cap());
    Int probe = std::min(b, over_.cap());
    if (!over_.has(g_.start, a, probe))
      return "excluded by the capped over-approximation (cap " + std::to_string(over_.cap()) + ")";
  }
  return std::nullopt;
}

Verdict ReachOracle::query(Int a, Int b) const {
  if (a < 0 || b < 0) return Verdict::no("negative counter");
  if (exact_.has(g_.start, a, b)) {
    IdSource ids;
    return Verdict::yes(exact_.witness(g_.start, a, b, ids), b, "witness below counter cap");
  }
  if (auto why = refute(a, b)) return Verdict::no(*why);
  return Verdict::unknown("counter cap " + std::to_string(exact_.cap()) + " reached without a certificate");
}

Verdict ReachOracle::cover(Int a, Int target) const {
  if (a < 0) return Verdict::no("negative counter");
  for (Int o : exact_.outputs(g_.start, a))
    if (o >= target) {
      IdSource ids;
      return Verdict::yes(exact_.witness(g_.start, a, o, ids), o, "witness below counter cap");
    }
  if (max_effect_ && target - a > *max_effect_) return Verdict::no("every effect is at most " + std::to_string(*max_effect_));
  if (a < exact_.cap()) {
    if (exact_.closed_from(g_.start, a)) return Verdict::no("exploration closed below counter cap");
    bool any = false;
    for (Int o : over_.outputs(g_.start, a))
      if (o >= target || o == over_.cap()) any = true;
    if (!any) return Verdict::no("excluded by the capped over-approximation");
  }
  return Verdict::unknown("counter cap " + std::to_string(exact_.cap()) + " reached without a certificate");
}

}  // namespace gvas
