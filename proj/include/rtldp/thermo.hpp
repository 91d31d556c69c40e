#pragma once

/// Spectral thermodynamic formalism on the block presentation: topological
/// pressure, equilibrium Gibbs chains and cylinder measures, survivor
/// (dotted-system) pressure, penalized pressure with its derivative, an
/// empirical Gibbs constant, and a truncated induced-operator eigenvalue as
/// an independent cross-check of the penalized-pressure root.

#include <cmath>
#include <limits>
#include <memory>
#include <stdexcept>
#include <string>
#include <vector>

#include "rtldp/block.hpp"
#include "rtldp/cylinder_set.hpp"
#include "rtldp/potential.hpp"
#include "rtldp/sft.hpp"
#include "rtldp/spectral.hpp"

namespace rtldp {

inline constexpr double kNegInf = -std::numeric_limits<double>::infinity();
inline constexpr double kPosInf = std::numeric_limits<double>::infinity();

/// Stationary Markov chain on block states realizing an equilibrium state.
/// stochastic()_{uv} = M_{uv} h_v / (lambda h_u) on the dominant component;
/// stationary() is its invariant probability vector.
class GibbsChain {
 public:
  GibbsChain(std::shared_ptr<const BlockSystem> blocks, std::vector<double> log_weight,
             const PerronOptions& opt = {})
      : blocks_(std::move(blocks)), lw_(std::move(log_weight)) {
    CsrMatrix m = blocks_->weighted_matrix(lw_);
    PerronData pd = perron(m, opt);
    if (pd.eigenvalue <= 0.0)
      throw std::runtime_error("weighted transfer matrix has no cycle");
    if (pd.multiple_dominant)
      throw std::runtime_error(
          "equilibrium state not unique: several components attain the pressure "
          "(the mixing hypothesis is violated)");
    perron_ = std::move(pd);
    if (perron_.component_count > 1)
      warnings_.push_back("block presentation not irreducible; chain restricted to the "
                          "dominant component");
    int n = blocks_->state_count();
    const auto& ptr = blocks_->ptr();
    const auto& succ = blocks_->succ();
    prob_.assign(succ.size(), 0.0);
    pi_.assign(n, 0.0);
    double lambda = perron_.eigenvalue;
    for (int u = 0; u < n; ++u) {
      double hu = perron_.right[u];
      pi_[u] = perron_.left[u] * hu;  // already normalized: sum = 1
      if (hu <= 0.0) continue;
      double w = std::exp(lw_[u]);
      double row = 0.0;
      for (int e = ptr[u]; e < ptr[u + 1]; ++e) {
        double p = w * perron_.right[succ[e]] / (lambda * hu);
        prob_[e] = p;
        row += p;
      }
      // Guard against drift; rows sum to 1 up to eigenvector residual.
      if (row > 0.0)
        for (int e = ptr[u]; e < ptr[u + 1]; ++e) prob_[e] /= row;
    }
  }

  const BlockSystem& blocks() const { return *blocks_; }
  std::shared_ptr<const BlockSystem> blocks_ptr() const { return blocks_; }
  const PerronData& perron_data() const { return perron_; }
  double pressure() const { return perron_.log_eigenvalue; }
  const std::vector<double>& stationary() const { return pi_; }
  const std::vector<double>& edge_probabilities() const { return prob_; }
  const std::vector<double>& log_weights() const { return lw_; }
  const std::vector<std::string>& warnings() const { return warnings_; }

  double transition_prob(int u, int v) const {
    const auto& ptr = blocks_->ptr();
    const auto& succ = blocks_->succ();
    for (int e = ptr[u]; e < ptr[u + 1]; ++e)
      if (succ[e] == v) return prob_[e];
    return 0.0;
  }

  /// Measure of the cylinder of a word (anchor-irrelevant by shift
  /// invariance).  Inadmissible words get 0.
  double cylinder_measure(const Word& w) const {
    const Sft& sft = blocks_->sft();
    if (!sft.is_admissible(w)) return 0.0;
    return measure_of_code(word_code(w.symbols, sft.alphabet_size()), w.length());
  }

  double measure_of_code(uint64_t code, int length) const {
    int k = blocks_->block_length();
    if (length <= k) {
      auto [lo, hi] = blocks_->prefix_range(code, length);
      double s = 0.0;
      for (int u = lo; u < hi; ++u) s += pi_[u];
      return s;
    }
    int n = blocks_->sft().alphabet_size();
    // Leading block state, then transition products while sliding.
    uint64_t div = pow_u64_checked(n, length - k);
    int u = blocks_->index_of(code / div);
    if (u < 0) return 0.0;
    double m = pi_[u];
    const auto& ptr = blocks_->ptr();
    const auto& succ = blocks_->succ();
    auto symbols = code_to_symbols(code, length, n);
    for (int j = k; j < length && m > 0.0; ++j) {
      int b = symbols[j];
      double p = 0.0;
      int v = -1;
      for (int e = ptr[u]; e < ptr[u + 1]; ++e) {
        if (blocks_->state_code(succ[e]) % n == static_cast<uint64_t>(b)) {
          p = prob_[e];
          v = succ[e];
          break;
        }
      }
      if (v < 0) return 0.0;
      m *= p;
      u = v;
    }
    return m;
  }

  /// mu(set) for a cylinder set with word length <= block length.
  double set_mass(const CylinderSet& set) const {
    if (set.is_empty()) return 0.0;
    if (set.length() <= blocks_->block_length()) {
      double s = 0.0;
      for (uint64_t c : set.codes()) {
        auto [lo, hi] = blocks_->prefix_range(c, set.length());
        for (int u = lo; u < hi; ++u) s += pi_[u];
      }
      return s;
    }
    double s = 0.0;
    for (uint64_t c : set.codes()) s += measure_of_code(c, set.length());
    return s;
  }

  /// Shannon entropy rate of the chain.
  double entropy() const {
    const auto& ptr = blocks_->ptr();
    double h = 0.0;
    for (int u = 0; u < blocks_->state_count(); ++u) {
      if (pi_[u] <= 0.0) continue;
      for (int e = ptr[u]; e < ptr[u + 1]; ++e)
        if (prob_[e] > 0.0) h -= pi_[u] * prob_[e] * std::log(prob_[e]);
    }
    return h;
  }

  /// Integral of the per-state function that built the chain's weights.
  double weight_integral() const {
    double s = 0.0;
    for (int u = 0; u < blocks_->state_count(); ++u) s += pi_[u] * lw_[u];
    return s;
  }

 private:
  std::shared_ptr<const BlockSystem> blocks_;
  std::vector<double> lw_;
  PerronData perron_;
  std::vector<double> prob_;
  std::vector<double> pi_;
  std::vector<std::string> warnings_;
};

namespace detail {

inline std::shared_ptr<const BlockSystem> make_blocks(const Sft& sft, const Potential& phi,
                                                      int min_block_len) {
  int k = std::max({1, phi.span(), min_block_len});
  return std::make_shared<const BlockSystem>(sft, k);
}

}  // namespace detail

/// Topological pressure: log spectral radius of the weighted transfer
/// matrix on the block presentation.
inline double pressure(const Sft& sft, const Potential& phi) {
  auto blocks = detail::make_blocks(sft, phi, 1);
  CsrMatrix m = blocks->weighted_matrix(blocks->vertex_potential(phi));
  return std::log(spectral_radius(m));
}

/// Equilibrium Gibbs chain of the potential.  `min_block_len` requests a
/// finer presentation (needed when sets of longer words will be measured).
inline GibbsChain equilibrium_chain(const Sft& sft, const Potential& phi,
                                    int min_block_len = 1) {
  auto blocks = detail::make_blocks(sft, phi, min_block_len);
  return GibbsChain(blocks, blocks->vertex_potential(phi));
}

inline double cylinder_measure(const GibbsChain& chain, const Word& w) {
  return chain.cylinder_measure(w);
}

struct SurvivorPressure {
  double value = kNegInf;     // -inf when no cycle survives
  bool whole_space = false;   // hole covered every block state
  bool no_cycle = false;
  operator double() const { return value; }
};

/// Pressure of the dotted system with the given hole: the weighted matrix
/// restricted to block states outside the hole.  No mixing assumption is
/// needed; the spectral radius ranges over all surviving components.
inline SurvivorPressure survivor_pressure(const Sft& sft, const Potential& phi,
                                          const CylinderSet& hole) {
  CylinderSet r = hole.reduce(sft);
  auto blocks = detail::make_blocks(sft, phi, r.length());
  auto mask = blocks->membership_mask(r);
  SurvivorPressure out;
  bool any_left = false;
  for (auto m : mask)
    if (!m) any_left = true;
  if (!any_left) {
    out.whole_space = true;
    return out;
  }
  CsrMatrix m = blocks->weighted_matrix(blocks->vertex_potential(phi), &mask);
  double rho = spectral_radius(m);
  if (rho <= 0.0) {
    out.no_cycle = true;
    return out;
  }
  out.value = std::log(rho);
  return out;
}

struct PenalizedPressure {
  double value = 0.0;      // F(t) = pressure of phi - t*1_R
  double hole_mass = 0.0;  // m_t(R); F'(t) = -hole_mass
  double derivative() const { return -hole_mass; }
};

/// Equilibrium chain of phi - t*1_hole on a presentation fine enough for
/// the hole.
inline GibbsChain penalized_chain(const Sft& sft, const Potential& phi,
                                  const CylinderSet& hole, double t,
                                  int min_block_len = 1) {
  CylinderSet r = hole.reduce(sft);
  auto blocks = detail::make_blocks(sft, phi, std::max(r.length(), min_block_len));
  auto lw = blocks->vertex_potential(phi);
  auto mask = blocks->membership_mask(r);
  for (size_t u = 0; u < lw.size(); ++u)
    if (mask[u]) lw[u] -= t;
  return GibbsChain(blocks, std::move(lw));
}

/// F(t) and F'(t) = -m_t(hole) in one evaluation.  F is strictly decreasing
/// and convex, F(0) = pressure(phi), F(t) -> survivor pressure as t -> +inf.
inline PenalizedPressure penalized_pressure(const Sft& sft, const Potential& phi,
                                            const CylinderSet& hole, double t) {
  GibbsChain chain = penalized_chain(sft, phi, hole, t);
  PenalizedPressure out;
  out.value = chain.pressure();
  out.hole_mass = chain.set_mass(hole.reduce(sft));
  return out;
}

// ---------------------------------------------------------------------------
// Empirical Gibbs constant.

struct GibbsReport {
  double b = 0.0;          // half-width of the log-ratio range
  double centering = 1.0;  // constant c normalizing the ratio to [e^-b, e^b]
  int argmax_depth = 0;
  Word argmax_word;
  std::vector<double> per_depth_halfwidth;  // index = depth n
};

/// Smallest b such that e^{-b} <= mu(Z_n^x) / (c * exp(S~_n phi(x) - 2nP))
/// <= e^{b} over all (-n,n)-cylinders with n <= max_depth and the reported
/// centering constant c.  S~_n phi sums the 2n terms k = -n..n-1; edge terms
/// not determined by the cylinder word are read off a fixed lexicographic
/// extension (the induced offset is absorbed into b).
inline GibbsReport gibbs_constant(const GibbsChain& chain, const Potential& phi,
                                  int max_depth) {
  const Sft& sft = chain.blocks().sft();
  double pres = chain.pressure();
  GibbsReport rep;
  double global_lo = kPosInf, global_hi = kNegInf;
  Word lo_word, hi_word;
  int lo_depth = 0, hi_depth = 0;
  for (int n = 0; n <= max_depth; ++n) {
    int len = 2 * n + 1;
    double depth_lo = kPosInf, depth_hi = kNegInf;
    for (uint64_t code : admissible_word_codes(sft, len)) {
      Word w{code_to_symbols(code, len, sft.alphabet_size()), -n};
      double mu = chain.cylinder_measure(w);
      if (mu <= 0.0) continue;
      // Extend to cover every Birkhoff term k in [-n, n-1].
      Word ext = w;
      while (ext.anchor > -n + phi.window_left()) {
        int first = ext.symbols.front();
        for (int a = 0; a < sft.alphabet_size(); ++a)
          if (sft.allows(a, first)) {
            ext.symbols.insert(ext.symbols.begin(), a);
            --ext.anchor;
            break;
          }
      }
      while (ext.last_coord() < n - 1 + phi.window_right()) {
        int last = ext.symbols.back();
        for (int b = 0; b < sft.alphabet_size(); ++b)
          if (sft.allows(last, b)) {
            ext.symbols.push_back(b);
            break;
          }
      }
      double sum = 0.0;
      for (int k = -n; k < n; ++k) sum += phi.eval_at(ext, k);
      double logratio = std::log(mu) - (sum - 2.0 * n * pres);
      depth_lo = std::min(depth_lo, logratio);
      depth_hi = std::max(depth_hi, logratio);
      if (logratio < global_lo) {
        global_lo = logratio;
        lo_word = w;
        lo_depth = n;
      }
      if (logratio > global_hi) {
        global_hi = logratio;
        hi_word = w;
        hi_depth = n;
      }
    }
    rep.per_depth_halfwidth.push_back(depth_hi >= depth_lo ? (depth_hi - depth_lo) / 2.0 : 0.0);
  }
  if (global_hi < global_lo) return rep;  // no admissible cylinders (cannot happen)
  double mid = (global_hi + global_lo) / 2.0;
  rep.b = (global_hi - global_lo) / 2.0;
  rep.centering = std::exp(mid);
  if (global_hi - mid >= mid - global_lo) {
    rep.argmax_word = hi_word;
    rep.argmax_depth = hi_depth;
  } else {
    rep.argmax_word = lo_word;
    rep.argmax_depth = lo_depth;
  }
  return rep;
}

// ---------------------------------------------------------------------------
// Truncated induced operator.

struct InducedEigenvalue {
  double value = 0.0;
  double truncation_bound = 0.0;  // estimated upper bound on the eigenvalue deficit
  bool no_return_within_length = false;
};

/// Leading eigenvalue of the induced (first-return) operator on the hole,
/// truncated at return length L: sum over n = 1..L of e^{-nS} M_H^{(n)}
/// where M_H^{(n)} collects the weighted first-return paths of length n.
/// Monotone non-decreasing in L; converges to e^{t(S)} with
/// penalized_pressure(t(S)) = S.  Requires S > survivor pressure.
inline InducedEigenvalue induced_eigenvalue(const Sft& sft, const Potential& phi,
                                            const CylinderSet& hole, double S,
                                            int max_return_length) {
  if (max_return_length < 1) throw std::invalid_argument("max return length must be >= 1");
  CylinderSet r = hole.reduce(sft);
  if (r.is_empty()) throw std::invalid_argument("hole is empty");
  auto blocks = detail::make_blocks(sft, phi, r.length());
  auto mask = blocks->membership_mask(r);
  SurvivorPressure sc = survivor_pressure(sft, phi, r);
  if (!sc.whole_space && !sc.no_cycle && S <= sc.value)
    throw std::domain_error("S <= survivor pressure: first-return series diverges");

  int n = blocks->state_count();
  std::vector<int> hole_states, comp_states;
  for (int u = 0; u < n; ++u) (mask[u] ? hole_states : comp_states).push_back(u);
  int nh = static_cast<int>(hole_states.size());
  int nc = static_cast<int>(comp_states.size());
  if (nh > 2048) throw std::runtime_error("hole too large for the induced operator");
  std::vector<int> hole_index(n, -1), comp_index(n, -1);
  for (int i = 0; i < nh; ++i) hole_index[hole_states[i]] = i;
  for (int i = 0; i < nc; ++i) comp_index[comp_states[i]] = i;

  auto lw = blocks->vertex_potential(phi);
  std::vector<double> wexp(n);
  for (int u = 0; u < n; ++u) wexp[u] = std::exp(lw[u]);
  const auto& ptr = blocks->ptr();
  const auto& succ = blocks->succ();
  double es = std::exp(-S);

  // One application of the truncated series to a hole-indexed vector.
  auto apply = [&](const std::vector<double>& x, std::vector<double>& out) {
    out.assign(nh, 0.0);
    std::vector<double> w(nc, 0.0);
    for (int i = 0; i < nc; ++i) {  // w = M_CH x
      int u = comp_states[i];
      double wu = wexp[u];
      double s = 0.0;
      for (int e = ptr[u]; e < ptr[u + 1]; ++e)
        if (mask[succ[e]]) s += x[hole_index[succ[e]]];
      w[i] = wu * s;
    }
    for (int i = 0; i < nh; ++i) {  // n = 1 term: M_HH
      int u = hole_states[i];
      double wu = wexp[u];
      double s = 0.0;
      for (int e = ptr[u]; e < ptr[u + 1]; ++e)
        if (mask[succ[e]]) s += x[hole_index[succ[e]]];
      out[i] = es * wu * s;
    }
    double coef = es;
    std::vector<double> wn(nc);
    for (int len = 2; len <= max_return_length; ++len) {
      coef *= es;
      for (int i = 0; i < nh; ++i) {  // out += coef * M_HC w
        int u = hole_states[i];
        double wu = wexp[u];
        double s = 0.0;
        for (int e = ptr[u]; e < ptr[u + 1]; ++e)
          if (!mask[succ[e]]) s += w[comp_index[succ[e]]];
        out[i] += coef * wu * s;
      }
      if (len == max_return_length) break;
      for (int i = 0; i < nc; ++i) {  // w = Q w
        int u = comp_states[i];
        double wu = wexp[u];
        double s = 0.0;
        for (int e = ptr[u]; e < ptr[u + 1]; ++e)
          if (!mask[succ[e]]) s += w[comp_index[succ[e]]];
        wn[i] = wu * s;
      }
      w.swap(wn);
    }
  };

  // Materialize the truncated operator and reuse the Perron machinery.
  CsrMatrix tmat;
  tmat.n = nh;
  tmat.ptr.assign(nh + 1, 0);
  {
    std::vector<double> basis(nh, 0.0), column(nh);
    std::vector<std::vector<double>> cols(nh);
    for (int j = 0; j < nh; ++j) {
      basis[j] = 1.0;
      apply(basis, column);
      basis[j] = 0.0;
      cols[j] = column;
    }
    for (int i = 0; i < nh; ++i) {
      tmat.ptr[i + 1] = tmat.ptr[i];
      for (int j = 0; j < nh; ++j) {
        if (cols[j][i] != 0.0) {
          tmat.col.push_back(j);
          tmat.val.push_back(cols[j][i]);
          ++tmat.ptr[i + 1];
        }
      }
    }
  }

  InducedEigenvalue out;
  if (tmat.val.empty()) {
    out.no_return_within_length = true;
    return out;
  }
  out.value = spectral_radius(tmat);
  if (out.value <= 0.0) out.no_return_within_length = true;

  // Tail estimate: row sums of the dropped terms, geometric extrapolation.
  {
    std::vector<double> w(nc, 0.0);
    for (int i = 0; i < nc; ++i) {
      int u = comp_states[i];
      double wu = wexp[u];
      double s = 0.0;
      for (int e = ptr[u]; e < ptr[u + 1]; ++e)
        if (mask[succ[e]]) s += 1.0;
      w[i] = wu * s;
    }
    // Advance to length max_return_length + 1.
    std::vector<double> wn(nc);
    for (int len = 2; len <= max_return_length; ++len) {
      for (int i = 0; i < nc; ++i) {
        int u = comp_states[i];
        double wu = wexp[u];
        double s = 0.0;
        for (int e = ptr[u]; e < ptr[u + 1]; ++e)
          if (!mask[succ[e]]) s += w[comp_index[succ[e]]];
        wn[i] = wu * s;
      }
      w.swap(wn);
    }
    double bound = 0.0, coef = std::pow(es, max_return_length + 1);
    double last = 0.0, prev = 0.0;
    for (int extra = 0; extra < 400; ++extra) {
      double rowmax = 0.0;
      for (int i = 0; i < nh; ++i) {
        int u = hole_states[i];
        double wu = wexp[u];
        double s = 0.0;
        for (int e = ptr[u]; e < ptr[u + 1]; ++e)
          if (!mask[succ[e]]) s += w[comp_index[succ[e]]];
        rowmax = std::max(rowmax, wu * s);
      }
      prev = last;
      last = coef * rowmax;
      bound += last;
      if (last < 1e-16 * std::max(out.value, 1.0)) break;
      for (int i = 0; i < nc; ++i) {
        int u = comp_states[i];
        double wu = wexp[u];
        double s = 0.0;
        for (int e = ptr[u]; e < ptr[u + 1]; ++e)
          if (!mask[succ[e]]) s += w[comp_index[succ[e]]];
        wn[i] = wu * s;
      }
      w.swap(wn);
      coef *= es;
    }
    if (last > 0.0 && prev > 0.0 && last < prev)
      bound += last * (last / prev) / (1.0 - last / prev);
    out.truncation_bound = bound;
  }
  return out;
}

}  // namespace rtldp
