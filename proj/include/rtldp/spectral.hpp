#pragma once

/// Perron machinery for nonnegative sparse matrices.
///
/// The dominant eigenvalue is computed per strongly connected component by
/// power iteration on the shifted matrix M + cI (the shift removes
/// periodicity without moving eigenvectors), with a two-sided Rayleigh
/// quotient on the unshifted matrix as the eigenvalue estimate.  Dense
/// storage is never required; everything runs on CSR adjacency.

#include <cmath>
#include <cstdint>
#include <limits>
#include <stdexcept>
#include <vector>

#include "rtldp/sft.hpp"

namespace rtldp {

/// Nonnegative square matrix in CSR form.
struct CsrMatrix {
  int n = 0;
  std::vector<int> ptr;  // size n+1
  std::vector<int> col;
  std::vector<double> val;

  // y = M x
  void mul_right(const std::vector<double>& x, std::vector<double>& y) const {
    y.assign(n, 0.0);
    for (int u = 0; u < n; ++u) {
      double s = 0.0;
      for (int e = ptr[u]; e < ptr[u + 1]; ++e) s += val[e] * x[col[e]];
      y[u] = s;
    }
  }

  // y = x^T M
  void mul_left(const std::vector<double>& x, std::vector<double>& y) const {
    y.assign(n, 0.0);
    for (int u = 0; u < n; ++u) {
      double xu = x[u];
      if (xu == 0.0) continue;
      for (int e = ptr[u]; e < ptr[u + 1]; ++e) y[col[e]] += xu * val[e];
    }
  }
};

struct PerronOptions {
  double rayleigh_tol = 1e-14;
  int max_iterations = 100000;
};

/// Dominant eigenvalue and positive left/right vectors of an irreducible
/// nonnegative matrix (or of the dominant irreducible component).  Vectors
/// are zero off the dominant component and normalized so sum_i left_i *
/// right_i = 1 over it.
struct PerronData {
  double eigenvalue = 0.0;
  double log_eigenvalue = -std::numeric_limits<double>::infinity();
  std::vector<double> right;
  std::vector<double> left;
  int dominant_component = -1;
  int component_count = 0;
  bool multiple_dominant = false;  // another component's eigenvalue ties within 1e-12
  int iterations = 0;
  double residual = 0.0;  // max of left/right relative residuals
};

namespace detail {

struct SccInfo {
  std::vector<int> comp;          // component id per vertex
  int ncomp = 0;
  std::vector<std::vector<int>> members;
};

inline SccInfo csr_sccs(const CsrMatrix& m) {
  SccInfo info;
  info.ncomp = strongly_connected_components(m.n, m.ptr, m.col, info.comp);
  info.members.resize(info.ncomp);
  for (int v = 0; v < m.n; ++v) info.members[info.comp[v]].push_back(v);
  return info;
}

// Power iteration restricted to one SCC.  Returns eigenvalue; fills right
// and left restricted vectors (indexed by position in verts).
struct SccPerron {
  double lambda = 0.0;
  std::vector<double> right, left;
  int iterations = 0;
  double residual = 0.0;
};

inline SccPerron scc_power_iteration(const CsrMatrix& m, const std::vector<int>& verts,
                                     const std::vector<int>& comp, const PerronOptions& opt) {
  int k = static_cast<int>(verts.size());
  SccPerron out;
  // Local CSR for the submatrix.
  std::vector<int> local(m.n, -1);
  for (int i = 0; i < k; ++i) local[verts[i]] = i;
  std::vector<int> ptr(k + 1, 0), colv;
  std::vector<double> valv;
  int cid = comp[verts[0]];
  for (int i = 0; i < k; ++i) {
    int u = verts[i];
    ptr[i + 1] = ptr[i];
    for (int e = m.ptr[u]; e < m.ptr[u + 1]; ++e) {
      if (comp[m.col[e]] != cid || m.val[e] == 0.0) continue;
      colv.push_back(local[m.col[e]]);
      valv.push_back(m.val[e]);
      ++ptr[i + 1];
    }
  }
  if (colv.empty()) return out;  // single vertex without self-loop
  if (k == 1) {
    // Self-loop: eigenvalue is the loop weight.
    out.lambda = valv[0];
    out.right = {1.0};
    out.left = {1.0};
    return out;
  }
  double shift = 0.0;
  for (int i = 0; i < k; ++i) {
    double row = 0.0;
    for (int e = ptr[i]; e < ptr[i + 1]; ++e) row += valv[e];
    shift = std::max(shift, row);
  }
  auto apply_right = [&](const std::vector<double>& x, std::vector<double>& y, bool shifted) {
    for (int i = 0; i < k; ++i) {
      double s = shifted ? shift * x[i] : 0.0;
      for (int e = ptr[i]; e < ptr[i + 1]; ++e) s += valv[e] * x[colv[e]];
      y[i] = s;
    }
  };
  auto apply_left = [&](const std::vector<double>& x, std::vector<double>& y, bool shifted) {
    for (int i = 0; i < k; ++i) y[i] = shifted ? shift * x[i] : 0.0;
    for (int i = 0; i < k; ++i) {
      double xi = x[i];
      if (xi == 0.0) continue;
      for (int e = ptr[i]; e < ptr[i + 1]; ++e) y[colv[e]] += xi * valv[e];
    }
  };
  std::vector<double> x(k, 1.0), y(k, 1.0), tx(k), ty(k);
  double lambda = 0.0, prev = std::numeric_limits<double>::quiet_NaN();
  double res = std::numeric_limits<double>::infinity();
  int stable = 0;
  int it = 0;
  for (; it < opt.max_iterations; ++it) {
    apply_right(x, tx, false);
    apply_left(y, ty, false);
    double num = 0.0, den = 0.0;
    for (int i = 0; i < k; ++i) {
      num += y[i] * tx[i];
      den += y[i] * x[i];
    }
    lambda = num / den;
    // Residuals against the unshifted matrix (||x||_inf = ||y||_inf = 1).
    double rr = 0.0, rl = 0.0;
    for (int i = 0; i < k; ++i) {
      rr = std::max(rr, std::abs(tx[i] - lambda * x[i]));
      rl = std::max(rl, std::abs(ty[i] - lambda * y[i]));
    }
    res = std::max(rr, rl) / std::max(lambda, std::numeric_limits<double>::min());
    bool lambda_stable =
        std::isfinite(prev) &&
        std::abs(lambda - prev) <= opt.rayleigh_tol * std::max(1.0, std::abs(lambda));
    stable = lambda_stable ? stable + 1 : 0;
    prev = lambda;
    if (stable >= 2 && res <= 100.0 * opt.rayleigh_tol) break;
    // Shifted step: tx + shift*x keeps periodic components converging.
    double mx = 0.0, my = 0.0;
    for (int i = 0; i < k; ++i) {
      tx[i] += shift * x[i];
      ty[i] += shift * y[i];
      mx = std::max(mx, tx[i]);
      my = std::max(my, ty[i]);
    }
    if (mx == 0.0 || my == 0.0) return out;  // numerically collapsed (all weights 0)
    for (int i = 0; i < k; ++i) {
      x[i] = tx[i] / mx;
      y[i] = ty[i] / my;
    }
  }
  out.iterations = it + 1;
  out.lambda = lambda;
  out.right = x;
  out.left = y;
  out.residual = res;
  return out;
}

}  // namespace detail

/// Spectral radius of a nonnegative CSR matrix: the maximum over strongly
/// connected components of the component's Perron value; 0 when the graph
/// has no cycle.
inline double spectral_radius(const CsrMatrix& m, const PerronOptions& opt = {}) {
  auto scc = detail::csr_sccs(m);
  double best = 0.0;
  for (const auto& verts : scc.members) {
    auto r = detail::scc_power_iteration(m, verts, scc.comp, opt);
    best = std::max(best, r.lambda);
  }
  return best;
}

/// Full Perron data for the dominant component.
inline PerronData perron(const CsrMatrix& m, const PerronOptions& opt = {}) {
  auto scc = detail::csr_sccs(m);
  PerronData out;
  out.component_count = scc.ncomp;
  std::vector<detail::SccPerron> results(scc.ncomp);
  int best = -1;
  for (int c = 0; c < scc.ncomp; ++c) {
    results[c] = detail::scc_power_iteration(m, scc.members[c], scc.comp, opt);
    if (best < 0 || results[c].lambda > results[best].lambda) best = c;
  }
  if (best < 0 || results[best].lambda <= 0.0) return out;  // acyclic
  for (int c = 0; c < scc.ncomp; ++c) {
    if (c == best) continue;
    if (results[c].lambda >= results[best].lambda * (1.0 - 1e-12))
      out.multiple_dominant = true;
  }
  const auto& r = results[best];
  const auto& verts = scc.members[best];
  out.eigenvalue = r.lambda;
  out.log_eigenvalue = std::log(r.lambda);
  out.dominant_component = best;
  out.iterations = r.iterations;
  out.residual = r.residual;
  out.right.assign(m.n, 0.0);
  out.left.assign(m.n, 0.0);
  double dot = 0.0;
  for (size_t i = 0; i < verts.size(); ++i) dot += r.left[i] * r.right[i];
  for (size_t i = 0; i < verts.size(); ++i) {
    out.right[verts[i]] = r.right[i];
    out.left[verts[i]] = r.left[i] / dot;  // now sum left*right = 1
  }
  return out;
}

}  // namespace rtldp
