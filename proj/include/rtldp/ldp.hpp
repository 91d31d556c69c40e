#pragma once

/// Large-deviation machinery for return times: cumulant generating
/// functions by penalized-pressure root-finding, their domain endpoints,
/// Legendre-transform rate functions, the complement transform, inner/outer
/// convergence for open sets, concentration thresholds, and the degenerate
/// rate criterion.
///
/// Psi_R(alpha) is the unique t with  pressure(phi - t*1_R) = pressure(phi)
/// - alpha, defined for alpha < alpha(R) = pressure - survivor pressure.
/// Its derivative is 1/m_t(R) with m_t the penalized equilibrium chain, so
/// Psi'(0) = 1/mu_phi(R) (Kac).  Phi(u) = inf_alpha { -alpha u +
/// Psi(alpha) } and Phi(u) = -inf exactly for u < 1/rho(R).

#include <cmath>
#include <functional>
#include <memory>
#include <stdexcept>
#include <string>
#include <vector>

#include "rtldp/openset.hpp"
#include "rtldp/thermo.hpp"

namespace rtldp {

class CgfDomainError : public std::domain_error {
 public:
  explicit CgfDomainError(double alpha, double alpha_max)
      : std::domain_error("alpha = " + std::to_string(alpha) +
                          " outside the CGF domain; alpha(R) = " + std::to_string(alpha_max)),
        alpha_max(alpha_max) {}
  double alpha_max;
};

struct CgfPoint {
  double alpha = 0.0;
  double psi = 0.0;   // Psi_R(alpha) = the penalized-pressure root t
  double dpsi = 0.0;  // Psi_R'(alpha) = 1 / m_t(R)
};

/// Root-finding engine bound to one (SFT, potential, target set) triple.
/// Brackets t by doubling, then Newton with bisection fallback; F and its
/// derivative F'(t) = -m_t(R) come from one Perron solve each.
class CgfEvaluator {
 public:
  CgfEvaluator(const Sft& sft, const Potential& phi, const CylinderSet& target)
      : sft_(sft), phi_(phi), hole_(target.reduce(sft)) {
    if (hole_.is_empty()) throw std::domain_error("CGF target set is empty");
    blocks_ = detail::make_blocks(sft, phi, hole_.length());
    base_lw_ = blocks_->vertex_potential(phi);
    mask_ = blocks_->membership_mask(hole_);
    auto p0 = evaluate_penalized(0.0);
    pressure_ = p0.value;
    mu_r_ = p0.hole_mass;
    SurvivorPressure sc = survivor_pressure(sft, phi, hole_);
    survivor_ = sc.value;
    alpha_max_ = pressure_ - survivor_;  // +inf when the hole meets every cycle
  }

  double pressure() const { return pressure_; }
  double survivor() const { return survivor_; }
  double alpha_max() const { return alpha_max_; }
  double target_measure() const { return mu_r_; }
  double mean_return() const { return 1.0 / mu_r_; }
  const CylinderSet& hole() const { return hole_; }
  const Sft& sft() const { return sft_; }
  const Potential& potential() const { return phi_; }

  /// sup over invariant measures of mu(R) (exact, via Karp).  Computed on
  /// demand; eval() and this are safe to call from concurrent workers.
  double rho() const { return max_invariant_mass(sft_, hole_); }

  PenalizedPressure penalized(double t) const { return evaluate_penalized(t); }

  CgfPoint eval(double alpha) const {
    if (!(alpha < alpha_max_)) throw CgfDomainError(alpha, alpha_max_);
    if (alpha == 0.0) return CgfPoint{0.0, 0.0, 1.0 / mu_r_};
    double target = pressure_ - alpha;
    // Bracket [lo, hi] with F(lo) > target > F(hi) (F strictly decreasing).
    double lo, hi;
    PenalizedPressure f_probe;
    if (alpha > 0.0) {
      lo = 0.0;
      hi = 1.0;
      while ((f_probe = evaluate_penalized(hi)).value > target) {
        lo = hi;
        hi *= 2.0;
        if (hi > kTCap) throw std::runtime_error("penalized-pressure root exceeds cap");
      }
    } else {
      hi = 0.0;
      lo = -1.0;
      while ((f_probe = evaluate_penalized(lo)).value < target) {
        hi = lo;
        lo *= 2.0;
        if (lo < -kTCap) throw std::runtime_error("penalized-pressure root exceeds cap");
      }
    }
    double t = 0.5 * (lo + hi);
    double best_t = t, best_mass = mu_r_;
    double best_err = kPosInf;
    for (int it = 0; it < 100; ++it) {
      PenalizedPressure f = evaluate_penalized(t);
      double err = f.value - target;
      if (std::abs(err) < best_err) {
        best_err = std::abs(err);
        best_t = t;
        best_mass = f.hole_mass;
      }
      if (std::abs(err) <= 5e-15 * std::max(1.0, std::abs(target))) break;
      if (err > 0.0)
        lo = t;
      else
        hi = t;
      double step = err / f.hole_mass;  // Newton: t' = t - (F - target)/F', F' = -mass
      double tn = t + step;
      t = (tn > lo && tn < hi) ? tn : 0.5 * (lo + hi);
      if (hi - lo <= 1e-16 * (1.0 + std::abs(t))) break;
    }
    return CgfPoint{alpha, best_t, 1.0 / best_mass};
  }

 private:
  static constexpr double kTCap = 500.0;

  PenalizedPressure evaluate_penalized(double t) const {
    std::vector<double> lw = base_lw_;
    if (t != 0.0)
      for (size_t u = 0; u < lw.size(); ++u)
        if (mask_[u]) lw[u] -= t;
    CsrMatrix m = blocks_->weighted_matrix(lw);
    PerronData pd = perron(m);
    if (pd.eigenvalue <= 0.0) throw std::runtime_error("penalized matrix has no cycle");
    PenalizedPressure out;
    out.value = pd.log_eigenvalue;
    double mass = 0.0;
    for (size_t u = 0; u < mask_.size(); ++u)
      if (mask_[u]) mass += pd.left[u] * pd.right[u];
    out.hole_mass = mass;
    return out;
  }

  Sft sft_;
  Potential phi_;
  CylinderSet hole_;
  std::shared_ptr<const BlockSystem> blocks_;
  std::vector<double> base_lw_;
  std::vector<uint8_t> mask_;
  double pressure_ = 0.0, survivor_ = 0.0, alpha_max_ = 0.0, mu_r_ = 0.0;
};

/// One-shot CGF evaluation.
inline CgfPoint cgf(const Sft& sft, const Potential& phi, const CylinderSet& target,
                    double alpha) {
  return CgfEvaluator(sft, phi, target).eval(alpha);
}

/// Domain endpoint alpha(R) = pressure - survivor pressure (+inf when the
/// survivor set is empty of cycles).
inline double cgf_domain(const Sft& sft, const Potential& phi, const CylinderSet& target) {
  return CgfEvaluator(sft, phi, target).alpha_max();
}

enum class CurveProvenance { ExactCylinder, Inner, Outer };

struct CgfGridOptions {
  int points = 64;
  double alpha_span = 4.0;       // lower end of the grid
  double domain_margin = 1e-3;   // stay this relative distance below alpha(R)
};

/// Sampled CGF with its evaluator for exact re-evaluation.
struct CgfCurve {
  std::string descriptor;
  CurveProvenance provenance = CurveProvenance::ExactCylinder;
  double alpha_max = 0.0;
  bool domain_unbounded = false;  // the target meets every cycle
  double mean_return = 0.0;
  std::vector<CgfPoint> samples;
  std::shared_ptr<const CgfEvaluator> evaluator;

  double rho() const { return evaluator->rho(); }
};

inline CgfCurve build_cgf_curve(const Sft& sft, const Potential& phi,
                                const CylinderSet& target, const CgfGridOptions& opts = {},
                                CurveProvenance provenance = CurveProvenance::ExactCylinder,
                                std::string descriptor = "") {
  auto ev = std::make_shared<CgfEvaluator>(sft, phi, target);
  CgfCurve curve;
  curve.descriptor = std::move(descriptor);
  curve.provenance = provenance;
  curve.domain_unbounded = !std::isfinite(ev->alpha_max());
  curve.alpha_max = ev->alpha_max();
  curve.mean_return = ev->mean_return();
  double lo = -opts.alpha_span;
  double hi = curve.domain_unbounded ? opts.alpha_span
                                     : ev->alpha_max() * (1.0 - opts.domain_margin);
  if (hi <= lo) throw std::invalid_argument("empty alpha grid: alpha(R) too small for span");
  std::vector<double> alphas = {0.0};
  for (int i = 0; i < opts.points; ++i) {
    // Chebyshev nodes on (lo, hi).
    double x = std::cos(M_PI * (2.0 * i + 1.0) / (2.0 * opts.points));
    alphas.push_back(0.5 * (lo + hi) + 0.5 * (hi - lo) * x);
  }
  std::sort(alphas.begin(), alphas.end());
  for (double a : alphas) curve.samples.push_back(ev->eval(a));
  curve.evaluator = std::move(ev);
  return curve;
}

struct LegendreResult {
  double phi = 0.0;
  double alpha_star = 0.0;
  bool minus_infinity = false;
  bool truncated = false;  // slope range exhausted; value is the boundary sample
  operator double() const { return minus_infinity ? kNegInf : phi; }
};

/// Phi(u) = inf_alpha { -alpha*u + Psi(alpha) }, computed by monotone
/// bisection on Psi' when u lies between observed slope limits.  Returns
/// -inf for u < 1/rho(R); beyond the largest computable slope the boundary
/// value is reported with a truncation flag instead of extrapolating.
inline LegendreResult legendre(const CgfCurve& curve, double u) {
  if (!(u > 0.0)) throw std::invalid_argument("legendre transform needs u > 0");
  const CgfEvaluator& ev = *curve.evaluator;
  LegendreResult out;
  double rho = curve.rho();
  double slope_floor = 1.0 / rho;  // Psi' decreases to this as alpha -> -inf
  if (u < slope_floor * (1.0 - 1e-12)) {
    out.minus_infinity = true;
    return out;
  }
  // Establish a slope bracket [a_lo, a_hi] with dpsi(a_lo) <= u <= dpsi(a_hi).
  double a_lo = curve.samples.front().alpha;
  double a_hi = curve.samples.back().alpha;
  CgfPoint p_lo = ev.eval(a_lo);
  CgfPoint p_hi = ev.eval(a_hi);
  if (u > p_hi.dpsi) {
    // u beyond the largest sampled slope: report the boundary sample.
    out.phi = -p_hi.alpha * u + p_hi.psi;
    out.alpha_star = p_hi.alpha;
    out.truncated = true;
    return out;
  }
  while (u < p_lo.dpsi) {
    double next = a_lo <= -1.0 ? a_lo * 2.0 : a_lo - 1.0;
    CgfPoint p;
    try {
      p = ev.eval(next);
    } catch (const std::runtime_error&) {
      // Root cap hit: slope floor not reachable numerically.
      out.phi = -p_lo.alpha * u + p_lo.psi;
      out.alpha_star = p_lo.alpha;
      out.truncated = true;
      return out;
    }
    a_lo = next;
    p_lo = p;
  }
  // Monotone root-finding on dpsi(alpha) = u: Illinois-modified false
  // position (plain false position stagnates when the bracket slopes are
  // wildly asymmetric, e.g. near the domain endpoint).
  CgfPoint best = p_lo;
  double d_lo = p_lo.dpsi - u, d_hi = p_hi.dpsi - u;
  int side = 0;
  for (int it = 0; it < 200; ++it) {
    double mid = (d_hi != d_lo)
                     ? (p_lo.alpha * d_hi - p_hi.alpha * d_lo) / (d_hi - d_lo)
                     : 0.5 * (p_lo.alpha + p_hi.alpha);
    if (!(mid > p_lo.alpha && mid < p_hi.alpha)) mid = 0.5 * (p_lo.alpha + p_hi.alpha);
    CgfPoint p = ev.eval(mid);
    best = p;
    if (std::abs(p.dpsi - u) <= 1e-11 * std::max(1.0, u)) break;
    if (p.dpsi < u) {
      p_lo = p;
      d_lo = p.dpsi - u;
      if (side == -1) d_hi *= 0.5;
      side = -1;
    } else {
      p_hi = p;
      d_hi = p.dpsi - u;
      if (side == 1) d_lo *= 0.5;
      side = 1;
    }
    if (p_hi.alpha - p_lo.alpha <= 1e-12 * (1.0 + std::abs(p_lo.alpha))) break;
  }
  out.phi = -best.alpha * u + best.psi;
  out.alpha_star = best.alpha;
  return out;
}

/// One point of the rate function.
struct RatePoint {
  double u = 0.0;
  double phi = 0.0;
  bool minus_infinity = false;
  bool truncated = false;
};

struct RateCurve {
  std::vector<RatePoint> samples;
  double mean_return = 0.0;
  double slope_floor = 0.0;  // 1/rho(R): Phi = -inf strictly below this
  double slope_ceiling = 0.0;
  std::shared_ptr<const CgfCurve> cgf;
};

inline RateCurve build_rate_curve(std::shared_ptr<const CgfCurve> curve,
                                  const std::vector<double>& u_values) {
  RateCurve rc;
  rc.cgf = curve;
  rc.mean_return = curve->mean_return;
  rc.slope_floor = 1.0 / curve->rho();
  rc.slope_ceiling = curve->samples.back().dpsi;
  for (double u : u_values) {
    LegendreResult r = legendre(*curve, u);
    rc.samples.push_back(RatePoint{u, r.phi, r.minus_infinity, r.truncated});
  }
  return rc;
}

/// Prop.-4.3 route: Phi_A(u) = (u-1) * Phi_{A^c}(u / (u-1)) for u > 1.
inline LegendreResult complement_rate(const RateCurve& rate_of_complement, double u) {
  if (!(u > 1.0))
    throw std::invalid_argument("complement transform needs u > 1");
  LegendreResult inner = legendre(*rate_of_complement.cgf, u / (u - 1.0));
  LegendreResult out = inner;
  if (!inner.minus_infinity) out.phi = (u - 1.0) * inner.phi;
  return out;
}

// ---------------------------------------------------------------------------
// Inner/outer CGF approximation for open sets.

struct InnerOuterDepth {
  int depth = 0;
  bool inner_available = false;
  CgfPoint inner;        // Psi_{B_m}
  double inner_alpha_max = 0.0;
  CgfPoint outer;        // Psi_{C_m}
  double outer_alpha_max = 0.0;
  // Induced-pressure diagnostics: masses of B_m and C_m under the penalized
  // chain used by the tighter branch.
  double mass_inner_set = 0.0;
  double mass_outer_set = 0.0;
};

struct InnerOuterRecord {
  double alpha = 0.0;
  std::vector<InnerOuterDepth> rows;
  double gap = kPosInf;    // |Psi_B - Psi_C| at the final depth with both branches
  bool converged = false;
  double reported = 0.0;   // midpoint at the final depth (when converged)
  bool has_reported = false;
};

/// Evaluate Psi_{B_m}(alpha) and Psi_{C_m}(alpha) over a depth range.  For
/// alpha >= 0 the inner branch dominates and decreases, the outer branch
/// increases; orders reverse for alpha < 0.  converged once the final gap
/// is <= tol; the midpoint is then the reported Psi_A(alpha).
inline InnerOuterRecord inner_outer(const Sft& sft, const Potential& phi,
                                    const OpenSetSpec& spec, double alpha,
                                    const std::vector<int>& depths, double tol) {
  if (depths.empty()) throw std::invalid_argument("depth range is empty");
  InnerOuterRecord rec;
  rec.alpha = alpha;
  for (int m : depths) {
    Approximation ap = approximations(sft, spec, m);
    InnerOuterDepth row;
    row.depth = m;
    // Outer branch: C_m contains A, never empty for a nonempty open set.
    if (ap.outer.is_empty())
      throw std::domain_error("outer approximation is empty: the open set is empty");
    CgfEvaluator outer_ev(sft, phi, ap.outer);
    row.outer_alpha_max = outer_ev.alpha_max();
    if (!(alpha < outer_ev.alpha_max()))
      throw CgfDomainError(alpha, outer_ev.alpha_max());
    row.outer = outer_ev.eval(alpha);
    if (!ap.inner.is_empty()) {
      CgfEvaluator inner_ev(sft, phi, ap.inner);
      row.inner_alpha_max = inner_ev.alpha_max();
      if (alpha < inner_ev.alpha_max()) {
        row.inner = inner_ev.eval(alpha);
        row.inner_available = true;
        // Masses for the Eq.-(8)/(13) induced-pressure diagnostics: the
        // penalized chain of the binding branch weighs both sets.
        const CylinderSet& pen_set = alpha >= 0.0 ? ap.inner : ap.outer;
        double t = alpha >= 0.0 ? row.inner.psi : row.outer.psi;
        GibbsChain pen = penalized_chain(sft, phi, pen_set, t,
                                         std::max(ap.inner.reduce(sft).length(),
                                                  ap.outer.reduce(sft).length()));
        row.mass_inner_set = pen.set_mass(ap.inner.reduce(sft));
        row.mass_outer_set = pen.set_mass(ap.outer.reduce(sft));
      }
    }
    rec.rows.push_back(row);
  }
  for (const auto& row : rec.rows) {
    if (!row.inner_available) continue;
    rec.gap = std::abs(row.inner.psi - row.outer.psi);
    rec.reported = 0.5 * (row.inner.psi + row.outer.psi);
  }
  if (std::isfinite(rec.gap) && rec.gap <= tol) {
    rec.converged = true;
    rec.has_reported = true;
  }
  return rec;
}

/// Concentration threshold of the truncated-integral identity: any tau
/// exceeding (Psi(alpha+delta) - Psi(alpha)) / delta works; `margin` keeps
/// the inequality strict with quantitative room.  (The printed source
/// formula differs; this follows the proof.)
inline double concentration_threshold(const CgfCurve& curve, double alpha, double delta,
                                      double margin = 1.0) {
  if (!(delta > 0.0)) throw std::invalid_argument("delta must be positive");
  if (!(alpha + delta < curve.alpha_max))
    throw CgfDomainError(alpha + delta, curve.alpha_max);
  CgfPoint hi = curve.evaluator->eval(alpha + delta);
  CgfPoint lo = curve.evaluator->eval(alpha);
  return (hi.psi - lo.psi) / delta + margin;
}

/// Degenerate-rate criterion: Phi_D(v) = -inf iff v < 1/rho(D) (the line of
/// slope v escapes below Psi_D).
inline bool degenerate_rate_check(const Sft& sft, const CylinderSet& d, double v) {
  if (!(v > 0.0)) throw std::invalid_argument("v must be positive");
  double rho = max_invariant_mass(sft, d);
  if (rho <= 0.0) return true;
  return v < 1.0 / rho;
}

}  // namespace rtldp
