#pragma once

/// Open subsets of the shift space, specified by depth-indexed cylinder
/// classifiers.  A classifier assigns IN / OUT / BOUNDARY to cylinder words:
/// IN words have their whole cylinder inside the set, OUT words miss it,
/// BOUNDARY words meet both the set and its complement.  From these the
/// inner/outer approximations B_m (largest union of m-cylinders inside),
/// C_m (smallest union containing the set) and the annulus D_m = C_m \ B_m
/// are enumerated.

#include <cmath>
#include <cstdint>
#include <limits>
#include <memory>
#include <stdexcept>
#include <string>
#include <vector>

#include "rtldp/block.hpp"
#include "rtldp/cylinder_set.hpp"
#include "rtldp/potential.hpp"
#include "rtldp/sft.hpp"
#include "rtldp/thermo.hpp"

namespace rtldp {

enum class CellClass { In, Out, Boundary };

/// A depth-indexed classifier describing an open set.  classify() receives a
/// word covering dependence_window(m) and must be pure; refinement
/// monotonicity (IN/OUT verdicts survive extension) is validated by
/// sampling in approximations().
class OpenSetSpec {
 public:
  virtual ~OpenSetSpec() = default;
  virtual std::string name() const = 0;
  virtual int min_depth() const { return 0; }
  virtual int max_depth() const { return std::numeric_limits<int>::max(); }
  /// Coordinates the depth-m classification actually depends on, as a
  /// subwindow [lo, hi] of [-m, m].  Enumeration and the resulting cylinder
  /// sets are restricted to this window.
  virtual std::pair<int, int> dependence_window(int m) const { return {-m, m}; }
  virtual CellClass classify(const Word& w) const = 0;
};

/// Clopen set: an explicit finite union of cylinders.  Boundary is empty
/// from depth >= the set's window on.
class ExplicitUnionSpec : public OpenSetSpec {
 public:
  ExplicitUnionSpec(const Sft& sft, CylinderSet set)
      : sft_(sft), set_(set.reduce(sft)) {}

  std::string name() const override { return "cylinder-union"; }
  int min_depth() const override {
    return std::max({-set_.anchor(), set_.anchor() + set_.length() - 1, 0});
  }
  std::pair<int, int> dependence_window(int) const override {
    return {set_.anchor(), set_.anchor() + set_.length() - 1};
  }
  CellClass classify(const Word& w) const override {
    int off = set_.anchor() - w.anchor;
    if (off < 0 || off + set_.length() > w.length())
      throw std::invalid_argument("word does not cover the set window");
    std::vector<int> sub(w.symbols.begin() + off, w.symbols.begin() + off + set_.length());
    return set_.contains_code(word_code(sub, sft_.alphabet_size())) ? CellClass::In
                                                                    : CellClass::Out;
  }
  const CylinderSet& set() const { return set_; }

 private:
  Sft sft_;
  CylinderSet set_;
};

/// Pattern-occurrence family: points matching a prefix cylinder whose
/// orbit-side tail contains a given pattern.  direction = future means
///   A = { y : y_0..y_{|p|-1} = p and q occurs in y at some position >= |p| },
/// direction = past mirrors this on coordinates <= -1.  Words without a
/// certain occurrence are IN when every admissible continuation must
/// eventually produce the pattern, OUT when none can, BOUNDARY otherwise;
/// the decision uses a pattern-avoidance automaton over the SFT.
class PatternSpec : public OpenSetSpec {
 public:
  enum class Direction { Future, Past };

  PatternSpec(const Sft& sft, std::vector<int> prefix, std::vector<int> pattern,
              Direction dir, std::string label = "")
      : sft_(sft), prefix_(std::move(prefix)), pattern_(std::move(pattern)), dir_(dir),
        label_(std::move(label)) {
    if (prefix_.empty() || pattern_.empty())
      throw std::invalid_argument("pattern spec needs nonempty prefix and pattern");
    if (!sft_.is_admissible(Word{prefix_, 0}))
      throw std::invalid_argument("pattern spec prefix is inadmissible");
    if (!sft_.is_admissible(Word{pattern_, 0}))
      throw std::invalid_argument("pattern spec pattern is inadmissible");
    build_automaton();
  }

  std::string name() const override {
    if (!label_.empty()) return label_;
    return std::string("pattern-") + (dir_ == Direction::Future ? "future" : "past");
  }
  int min_depth() const override { return std::max<int>(prefix_.size() - 1, 0); }
  std::pair<int, int> dependence_window(int m) const override {
    int pl = static_cast<int>(prefix_.size());
    if (dir_ == Direction::Future) return {0, std::max(m, pl - 1)};
    return {std::min(-m, 0), pl - 1};
  }

  CellClass classify(const Word& w) const override {
    int pl = static_cast<int>(prefix_.size());
    if (w.anchor > 0 || w.last_coord() < pl - 1)
      throw std::invalid_argument("word does not cover the prefix window");
    for (int i = 0; i < pl; ++i)
      if (w.symbols[i - w.anchor] != prefix_[i]) return CellClass::Out;
    // Feed the tail through the matcher: future side reads positions
    // |p|..end, past side reads positions -1, -2, ... (reversed pattern).
    int q = 0;
    int last_sym;
    if (dir_ == Direction::Future) {
      last_sym = w.symbols.back();
      for (int pos = pl; pos <= w.last_coord(); ++pos) {
        q = step(q, w.symbols[pos - w.anchor]);
        if (q == match_state()) return CellClass::In;
      }
      // Occurrences may also straddle the prefix start when |p| does not
      // pin them; positions < |p| never count by definition.
    } else {
      last_sym = w.symbols.front();
      for (int pos = -1; pos >= w.anchor; --pos) {
        q = step(q, w.symbols[pos - w.anchor]);
        if (q == match_state()) return CellClass::In;
      }
    }
    int node = automaton_index(last_sym, q);
    if (!can_reach_match_[node]) return CellClass::Out;
    return can_avoid_forever_[node] ? CellClass::Boundary : CellClass::In;
  }

 private:
  int match_state() const { return static_cast<int>(pattern_.size()); }

  // KMP step for the (direction-adjusted) pattern.
  int step(int q, int sym) const {
    while (true) {
      if (q < match_state() && kmp_pat_[q] == sym) return q + 1;
      if (q == 0) return 0;
      q = kmp_fail_[q];
    }
  }

  int automaton_index(int sym, int q) const { return sym * (match_state() + 1) + q; }

  void build_automaton() {
    kmp_pat_ = pattern_;
    if (dir_ == Direction::Past) std::reverse(kmp_pat_.begin(), kmp_pat_.end());
    int m = match_state();
    kmp_fail_.assign(m + 1, 0);
    for (int i = 1; i < m; ++i) {
      int q = kmp_fail_[i];
      while (q > 0 && kmp_pat_[q] != kmp_pat_[i]) q = kmp_fail_[q];
      kmp_fail_[i + 1] = (kmp_pat_[q] == kmp_pat_[i]) ? q + 1 : 0;
    }
    // Product graph over (current symbol, matcher state), edges restricted
    // to the SFT (transposed for the past direction) and to non-matching
    // matcher transitions.  A node can avoid the pattern forever iff it
    // reaches a cycle of this graph; it can reach a match iff some
    // transition into the match state is reachable.
    int n = sft_.alphabet_size();
    int nodes = n * (m + 1);
    std::vector<int> ptr(nodes + 1, 0), adj;
    std::vector<uint8_t> hits_match(nodes, 0);
    for (int a = 0; a < n; ++a)
      for (int q = 0; q <= m; ++q) {
        int u = automaton_index(a, q);
        ptr[u + 1] = ptr[u];
        if (q == m) continue;  // matched: absorbing, no avoid edges
        for (int b = 0; b < n; ++b) {
          bool edge = dir_ == Direction::Future ? sft_.allows(a, b) : sft_.allows(b, a);
          if (!edge) continue;
          int q2 = step(q, b);
          if (q2 == m) {
            hits_match[u] = 1;
            continue;
          }
          adj.push_back(automaton_index(b, q2));
          ++ptr[u + 1];
        }
      }
    // can_avoid_forever: reaches a cycle of the avoid graph.  Reachability
    // is constant on strongly connected components; Tarjan ids come out in
    // reverse topological order, so successors carry smaller ids and one
    // sweep by increasing id suffices.
    std::vector<int> comp;
    int ncomp = detail::strongly_connected_components(nodes, ptr, adj, comp);
    std::vector<uint8_t> comp_avoid(ncomp, 0), comp_reach(ncomp, 0);
    for (int u = 0; u < nodes; ++u)
      for (int e = ptr[u]; e < ptr[u + 1]; ++e)
        if (comp[adj[e]] == comp[u]) comp_avoid[comp[u]] = 1;  // component has a cycle
    for (int u = 0; u < nodes; ++u)
      if (hits_match[u]) comp_reach[comp[u]] = 1;
    std::vector<std::vector<int>> members(ncomp);
    for (int u = 0; u < nodes; ++u) members[comp[u]].push_back(u);
    for (int c = 0; c < ncomp; ++c)
      for (int u : members[c])
        for (int e = ptr[u]; e < ptr[u + 1]; ++e) {
          int c2 = comp[adj[e]];
          if (c2 == c) continue;
          comp_avoid[c] |= comp_avoid[c2];
          comp_reach[c] |= comp_reach[c2];
        }
    can_avoid_forever_.assign(nodes, 0);
    can_reach_match_.assign(nodes, 0);
    for (int u = 0; u < nodes; ++u) {
      can_avoid_forever_[u] = comp_avoid[comp[u]];
      can_reach_match_[u] = comp_reach[comp[u]];
    }
  }

  Sft sft_;
  std::vector<int> prefix_, pattern_, kmp_pat_;
  Direction dir_;
  std::string label_;
  std::vector<int> kmp_fail_;
  std::vector<uint8_t> can_avoid_forever_, can_reach_match_;
};

/// User-supplied classification tables, one per depth.  Words absent from
/// both lists are OUT.
class TableSpec : public OpenSetSpec {
 public:
  struct DepthTable {
    int depth;
    CylinderSet in_words;
    CylinderSet boundary_words;
  };

  TableSpec(const Sft& sft, std::vector<DepthTable> tables) : sft_(sft), tables_(std::move(tables)) {
    if (tables_.empty()) throw std::invalid_argument("table spec needs at least one depth");
    std::sort(tables_.begin(), tables_.end(),
              [](const DepthTable& a, const DepthTable& b) { return a.depth < b.depth; });
    for (const auto& t : tables_) depths_.push_back(t.depth);
  }

  std::string name() const override { return "table"; }
  int min_depth() const override { return tables_.front().depth; }
  int max_depth() const override { return tables_.back().depth; }
  CellClass classify(const Word& w) const override {
    int m = std::max(-w.anchor, w.last_coord());
    const DepthTable* best = nullptr;
    for (const auto& t : tables_)
      if (t.depth == m) best = &t;
    if (!best)
      throw std::invalid_argument("table spec has no table for depth " + std::to_string(m));
    Word full = w;
    if (w.anchor != -m || w.length() != 2 * m + 1)
      throw std::invalid_argument("table spec expects full (-m,m) words");
    uint64_t c = word_code(full.symbols, sft_.alphabet_size());
    if (best->in_words.contains_code(c)) return CellClass::In;
    if (best->boundary_words.contains_code(c)) return CellClass::Boundary;
    return CellClass::Out;
  }

 private:
  Sft sft_;
  std::vector<DepthTable> tables_;
  std::vector<int> depths_;
};

/// FUTURE11 on the full 2-shift: y_0 = 0 and the word 11 occurs afterwards.
inline std::shared_ptr<OpenSetSpec> make_future11(const Sft& sft) {
  return std::make_shared<PatternSpec>(sft, std::vector<int>{0}, std::vector<int>{1, 1},
                                       PatternSpec::Direction::Future, "FUTURE11");
}

/// NEXT0 on the full 2-shift: the union of [0 1^k 0] over k >= 0; boundary
/// is the single point 0 1^infty.
inline std::shared_ptr<OpenSetSpec> make_next0(const Sft& sft) {
  return std::make_shared<PatternSpec>(sft, std::vector<int>{0}, std::vector<int>{0},
                                       PatternSpec::Direction::Future, "NEXT0");
}

struct Approximation {
  int depth = 0;
  CylinderSet inner;    // B_m
  CylinderSet outer;    // C_m
  CylinderSet annulus;  // D_m = C_m \ B_m
};

/// Enumerate B_m, C_m, D_m at depth m over the classifier's dependence
/// window.  Refinement monotonicity of IN/OUT verdicts is spot-checked on
/// up to `validation_samples` words (throws on violation).
inline Approximation approximations(const Sft& sft, const OpenSetSpec& spec, int m,
                                    int validation_samples = 64) {
  if (m < spec.min_depth())
    throw std::invalid_argument("classifier not total at depth " + std::to_string(m) +
                                " (min depth " + std::to_string(spec.min_depth()) + ")");
  auto [lo, hi] = spec.dependence_window(m);
  if (lo < -m || hi > m) throw std::logic_error("dependence window exceeds depth");
  int len = hi - lo + 1;
  std::vector<uint64_t> in_codes, boundary_codes;
  auto codes = admissible_word_codes(sft, len);
  std::vector<CellClass> classes(codes.size());
  for (size_t i = 0; i < codes.size(); ++i) {
    Word w{code_to_symbols(codes[i], len, sft.alphabet_size()), lo};
    classes[i] = spec.classify(w);
    if (classes[i] == CellClass::In)
      in_codes.push_back(codes[i]);
    else if (classes[i] == CellClass::Boundary)
      boundary_codes.push_back(codes[i]);
  }
  // Refinement check: verdicts IN and OUT must be stable under extension to
  // depth m+1 (sampled deterministically; exhaustive when small).
  if (m + 1 <= spec.max_depth()) {
    auto [lo2, hi2] = spec.dependence_window(m + 1);
    size_t stride = std::max<size_t>(1, codes.size() / std::max(1, validation_samples));
    for (size_t i = 0; i < codes.size(); i += stride) {
      if (classes[i] == CellClass::Boundary) continue;
      Word w{code_to_symbols(codes[i], len, sft.alphabet_size()), lo};
      CylinderSet one = CylinderSet::from_words(sft, {w});
      CylinderSet ext = one.refine(sft, lo2, hi2 - lo2 + 1);
      for (const Word& v : ext.words()) {
        if (spec.classify(v) != classes[i])
          throw std::invalid_argument(
              "open-set classifier violates refinement monotonicity at depth " +
              std::to_string(m) + ", word " +
              word_to_string(w.symbols, sft.alphabet_size()));
      }
    }
  }
  Approximation ap;
  ap.depth = m;
  std::vector<uint64_t> outer_codes = in_codes;
  outer_codes.insert(outer_codes.end(), boundary_codes.begin(), boundary_codes.end());
  ap.inner = in_codes.empty() ? CylinderSet::empty(sft, lo, len)
                              : CylinderSet::from_codes(sft, lo, len, in_codes);
  ap.outer = outer_codes.empty() ? CylinderSet::empty(sft, lo, len)
                                 : CylinderSet::from_codes(sft, lo, len, outer_codes);
  ap.annulus = boundary_codes.empty() ? CylinderSet::empty(sft, lo, len)
                                      : CylinderSet::from_codes(sft, lo, len, boundary_codes);
  return ap;
}

// ---------------------------------------------------------------------------
// Maximum invariant mass via Karp's maximum mean cycle.

struct MeanCycle {
  long long num = 0;  // exact value num/den (0/1 when no cycle exists)
  long long den = 1;
  double value() const { return den ? static_cast<double>(num) / den : 0.0; }
};

/// Karp's maximum mean cycle on a digraph with integer vertex weights
/// pushed to outgoing edges: the cycle mean equals the orbit frequency of
/// the weighted vertices.  Exact rational output.
inline MeanCycle karp_max_mean_cycle(int n, const std::vector<int>& ptr,
                                     const std::vector<int>& adj,
                                     const std::vector<int>& vertex_weight) {
  std::vector<int> comp;
  int ncomp = detail::strongly_connected_components(n, ptr, adj, comp);
  std::vector<std::vector<int>> members(ncomp);
  for (int v = 0; v < n; ++v) members[comp[v]].push_back(v);
  MeanCycle best;
  bool found = false;
  constexpr long long kNone = std::numeric_limits<long long>::min();
  for (int c = 0; c < ncomp; ++c) {
    const auto& verts = members[c];
    int k = static_cast<int>(verts.size());
    // Skip trivial SCCs without a self-loop.
    bool has_edge = false;
    for (int v : verts)
      for (int e = ptr[v]; e < ptr[v + 1]; ++e)
        if (comp[adj[e]] == c) has_edge = true;
    if (!has_edge) continue;
    std::vector<int> local(n, -1);
    for (int i = 0; i < k; ++i) local[verts[i]] = i;
    size_t cells = static_cast<size_t>(k + 1) * k;
    if (cells > 100'000'000)
      throw std::runtime_error("max-mean-cycle table too large; reduce depth");
    std::vector<long long> d(cells, kNone);
    d[local[verts[0]]] = 0;
    for (int step = 1; step <= k; ++step) {
      long long* prev = d.data() + static_cast<size_t>(step - 1) * k;
      long long* cur = d.data() + static_cast<size_t>(step) * k;
      for (int i = 0; i < k; ++i) cur[i] = kNone;
      for (int i = 0; i < k; ++i) {
        if (prev[i] == kNone) continue;
        int u = verts[i];
        long long cand = prev[i] + vertex_weight[u];
        for (int e = ptr[u]; e < ptr[u + 1]; ++e) {
          if (comp[adj[e]] != c) continue;
          int j = local[adj[e]];
          if (cand > cur[j]) cur[j] = cand;
        }
      }
    }
    const long long* dn = d.data() + static_cast<size_t>(k) * k;
    for (int i = 0; i < k; ++i) {
      if (dn[i] == kNone) continue;
      long long bn = 0, bd = 0;  // min over steps of (d_k - d_s)/(k - s)
      bool have = false;
      for (int s = 0; s < k; ++s) {
        long long ds = d[static_cast<size_t>(s) * k + i];
        if (ds == kNone) continue;
        long long num = dn[i] - ds, den = k - s;
        if (!have || num * bd < bn * den) {  // num/den < bn/bd
          bn = num;
          bd = den;
          have = true;
        }
      }
      if (have && (!found || bn * best.den > best.num * bd)) {
        best.num = bn;
        best.den = bd;
        found = true;
      }
    }
  }
  if (!found) return MeanCycle{0, 1};
  // Normalize the fraction.
  long long g = std::gcd(best.num < 0 ? -best.num : best.num, best.den);
  if (g > 1) {
    best.num /= g;
    best.den /= g;
  }
  return best;
}

/// rho(set) = sup over sigma-invariant probability measures of mu(set),
/// computed exactly as a maximum mean cycle on the block digraph with
/// vertex weight 1_set (ergodic decomposition makes cycles sufficient).
inline MeanCycle max_invariant_mass_exact(const Sft& sft, const CylinderSet& set) {
  CylinderSet r = set.reduce(sft);
  if (r.is_empty()) return MeanCycle{0, 1};
  BlockSystem blocks(sft, r.length());
  auto mask = blocks.membership_mask(r);
  std::vector<int> weight(mask.begin(), mask.end());
  return karp_max_mean_cycle(blocks.state_count(), blocks.ptr(), blocks.succ(), weight);
}

inline double max_invariant_mass(const Sft& sft, const CylinderSet& set) {
  return max_invariant_mass_exact(sft, set).value();
}

// ---------------------------------------------------------------------------
// Boundary-pressure bound: fit mu(D_n) ~ c e^{-theta n} and report
// pressure - theta/2 as the upper bound for the boundary pressure.

struct BoundaryDepthRow {
  int depth = 0;
  double annulus_mass = 0.0;
  double annulus_pressure = kNegInf;  // pressure of the maximal invariant set inside D_n
};

struct BoundaryPressureBound {
  double theta = kPosInf;   // fitted decay rate; +inf when the boundary cells are null
  double intercept = 0.0;   // fitted log c
  double bound = kNegInf;   // pressure - theta/2
  bool boundary_empty = false;
  std::vector<BoundaryDepthRow> rows;
};

inline BoundaryPressureBound boundary_pressure_bound(const GibbsChain& chain,
                                                     const OpenSetSpec& spec,
                                                     const Potential& phi,
                                                     const std::vector<int>& depths) {
  if (depths.empty()) throw std::invalid_argument("depth range is empty");
  const Sft& sft = chain.blocks().sft();
  BoundaryPressureBound out;
  std::vector<double> xs, ys;
  for (int m : depths) {
    Approximation ap = approximations(sft, spec, m);
    BoundaryDepthRow row;
    row.depth = m;
    CylinderSet d = ap.annulus.reduce(sft);
    row.annulus_mass = chain.set_mass(d);
    if (!d.is_empty()) {
      // Spectral pressure of the largest invariant set inside the annulus:
      // restrict the weighted matrix to annulus states.  Diagnostic only; it
      // bounds the pressure of measures supported in D_n, not the boundary
      // pressure itself.
      BlockSystem blocks(sft, std::max(d.length(), phi.span()));
      auto mask = blocks.membership_mask(d);
      std::vector<uint8_t> removed(mask.size());
      for (size_t i = 0; i < mask.size(); ++i) removed[i] = !mask[i];
      CsrMatrix mat = blocks.weighted_matrix(blocks.vertex_potential(phi), &removed);
      double rho = spectral_radius(mat);
      row.annulus_pressure = rho > 0.0 ? std::log(rho) : kNegInf;
    }
    out.rows.push_back(row);
  }
  // Fit on the largest suffix of depths with positive masses.
  size_t start = out.rows.size();
  for (size_t i = out.rows.size(); i-- > 0;) {
    if (out.rows[i].annulus_mass > 0.0)
      start = i;
    else
      break;
  }
  for (size_t i = start; i < out.rows.size(); ++i) {
    xs.push_back(out.rows[i].depth);
    ys.push_back(std::log(out.rows[i].annulus_mass));
  }
  if (xs.size() < 2) {
    out.boundary_empty = true;
    out.theta = kPosInf;
    out.bound = kNegInf;
    return out;
  }
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (size_t i = 0; i < xs.size(); ++i) {
    sx += xs[i];
    sy += ys[i];
    sxx += xs[i] * xs[i];
    sxy += xs[i] * ys[i];
  }
  double n = static_cast<double>(xs.size());
  double slope = (n * sxy - sx * sy) / (n * sxx - sx * sx);
  out.theta = -slope;
  out.intercept = (sy - slope * sx) / n;
  out.bound = chain.pressure() - out.theta / 2.0;
  return out;
}

}  // namespace rtldp
