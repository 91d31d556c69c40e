#pragma once

/// Monte Carlo and exact dynamic-programming ground truth for return-time
/// statistics: Gibbs-chain trajectory sampling, the return-time cocycle,
/// empirical CGFs and tail log-probabilities (direct and exponentially
/// tilted), and an exact forward DP over (state, completed returns) used as
/// the brute-force oracle.
///
/// All sampling uses the Philox4x32-10 counter-based generator with one
/// stream per trial index, so results are bit-reproducible and independent
/// of execution order.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

#include "rtldp/cylinder_set.hpp"
#include "rtldp/rng.hpp"
#include "rtldp/thermo.hpp"

namespace rtldp {

struct ReturnTimeSeries {
  std::vector<int64_t> times;  // r^1 < r^2 < ... (visit times into the set)
  int requested = 0;
  bool truncated = false;
  int64_t horizon = 0;
  std::string branch;
};

struct EstimateRecord {
  double value = 0.0;
  double std_error = 0.0;
  int64_t trials = 0;
  int batches = 0;
  int n = 0;
  uint64_t seed = 0;
  int64_t truncated_trials = 0;
  std::vector<std::string> warnings;
};

namespace detail {

/// Shared sampling tables for a Gibbs chain: cumulative initial and
/// per-state cumulative transition probabilities.
class ChainSampler {
 public:
  explicit ChainSampler(const GibbsChain& chain) : chain_(&chain) {
    const auto& pi = chain.stationary();
    cum_pi_.resize(pi.size());
    double acc = 0.0;
    for (size_t u = 0; u < pi.size(); ++u) {
      acc += pi[u];
      cum_pi_[u] = acc;
    }
    const auto& ptr = chain.blocks().ptr();
    const auto& prob = chain.edge_probabilities();
    cum_edge_.resize(prob.size());
    for (int u = 0; u < chain.blocks().state_count(); ++u) {
      double a = 0.0;
      for (int e = ptr[u]; e < ptr[u + 1]; ++e) {
        a += prob[e];
        cum_edge_[e] = a;
      }
    }
  }

  /// Initial state from a restricted (conditional) stationary law, or the
  /// full stationary law when mask is null.
  int initial_state(Philox& rng, const std::vector<uint8_t>* mask = nullptr) const {
    if (!mask) {
      double x = rng.next_double() * cum_pi_.back();
      return static_cast<int>(std::lower_bound(cum_pi_.begin(), cum_pi_.end(), x) -
                              cum_pi_.begin());
    }
    const auto& pi = chain_->stationary();
    double total = 0.0;
    for (size_t u = 0; u < pi.size(); ++u)
      if ((*mask)[u]) total += pi[u];
    double x = rng.next_double() * total;
    double acc = 0.0;
    for (size_t u = 0; u < pi.size(); ++u) {
      if (!(*mask)[u]) continue;
      acc += pi[u];
      if (x < acc) return static_cast<int>(u);
    }
    for (size_t u = pi.size(); u-- > 0;)
      if ((*mask)[u]) return static_cast<int>(u);
    throw std::runtime_error("conditional start set has zero mass");
  }

  /// One chain step; returns the edge index taken and updates the state.
  int step(int& u, Philox& rng) const {
    const auto& ptr = chain_->blocks().ptr();
    double x = rng.next_double();
    int e = ptr[u];
    const int end = ptr[u + 1];
    while (e + 1 < end && cum_edge_[e] <= x) ++e;
    u = chain_->blocks().succ()[e];
    return e;
  }

 private:
  const GibbsChain* chain_;
  std::vector<double> cum_pi_;
  std::vector<double> cum_edge_;
};

inline std::vector<uint8_t> set_mask_for_chain(const GibbsChain& chain,
                                               const CylinderSet& set) {
  CylinderSet r = set.reduce(chain.blocks().sft());
  if (r.length() > chain.blocks().block_length())
    throw std::invalid_argument(
        "set needs a finer chain: build the chain with min_block_len >= " +
        std::to_string(r.length()));
  return chain.blocks().membership_mask(r);
}

/// Running log-sum-exp with compensated summation of the scaled terms.
class LogSumExp {
 public:
  void add(double x) {
    if (count_ == 0 || x > max_) {
      double scale = count_ == 0 ? 0.0 : std::exp(max_ - x);
      sum_ = sum_ * scale + 1.0;
      comp_ *= scale;
      max_ = x;
    } else {
      // Kahan step on sum_ += exp(x - max_).
      double y = std::exp(x - max_) - comp_;
      double t = sum_ + y;
      comp_ = (t - sum_) - y;
      sum_ = t;
    }
    ++count_;
  }

  int64_t count() const { return count_; }

  /// log of the mean over `denom` terms (terms not added count as absent).
  double log_mean(int64_t denom) const {
    if (count_ == 0 || denom == 0) return kNegInf;
    return max_ + std::log(sum_) - std::log(static_cast<double>(denom));
  }

 private:
  double max_ = 0.0;
  double sum_ = 0.0;
  double comp_ = 0.0;
  int64_t count_ = 0;
};

}  // namespace detail

/// Sample one stationary trajectory and record the first n visit times into
/// the set (visits counted at steps >= 1).  The cocycle law r^{k+1} = r^k +
/// r(shifted trajectory) holds structurally: each entry is the previous one
/// plus the next first-return time.
inline ReturnTimeSeries sample_return_times(const GibbsChain& chain, const CylinderSet& set,
                                            int n, int64_t horizon, uint64_t seed,
                                            uint64_t trial = 0,
                                            const std::string& branch = "exact") {
  if (n < 1) throw std::invalid_argument("need n >= 1 returns");
  ReturnTimeSeries out;
  out.requested = n;
  out.horizon = horizon;
  out.branch = branch;
  if (set.is_empty()) {
    out.truncated = true;
    return out;
  }
  auto mask = detail::set_mask_for_chain(chain, set);
  detail::ChainSampler sampler(chain);
  Philox rng(seed, trial);
  int u = sampler.initial_state(rng);
  for (int64_t t = 1; t <= horizon; ++t) {
    sampler.step(u, rng);
    if (mask[u]) {
      out.times.push_back(t);
      if (static_cast<int>(out.times.size()) == n) return out;
    }
  }
  out.truncated = true;
  return out;
}

namespace detail {

template <typename PerTrial>
inline void run_batches(int64_t trials, int batches, int threads, PerTrial&& body) {
  auto run_range = [&](int b_lo, int b_hi) {
    for (int b = b_lo; b < b_hi; ++b) {
      int64_t lo = trials * b / batches;
      int64_t hi = trials * (b + 1) / batches;
      for (int64_t i = lo; i < hi; ++i) body(b, i);
    }
  };
  threads = std::max(1, threads);
  if (threads == 1) {
    run_range(0, batches);
    return;
  }
  std::vector<std::thread> pool;
  int per = (batches + threads - 1) / threads;
  for (int t = 0; t < threads; ++t) {
    int lo = t * per, hi = std::min(batches, (t + 1) * per);
    if (lo >= hi) break;
    pool.emplace_back(run_range, lo, hi);
  }
  for (auto& th : pool) th.join();
}

inline double batch_std_error(const std::vector<double>& est, double mean) {
  int m = 0;
  double ss = 0.0;
  for (double e : est) {
    if (!std::isfinite(e)) continue;
    ss += (e - mean) * (e - mean);
    ++m;
  }
  if (m < 2) return 0.0;
  return std::sqrt(ss / (m - 1) / m);
}

}  // namespace detail

/// Plug-in estimator of (1/n) log E[e^{alpha r^n}] with batch-mean standard
/// errors.  Truncated trajectories are excluded and counted.
inline EstimateRecord empirical_cgf(const GibbsChain& chain, const CylinderSet& set,
                                    double alpha, int n, int64_t trials, uint64_t seed,
                                    int64_t horizon = 1'000'000, int threads = 1,
                                    double domain_hint = kPosInf) {
  if (trials < 1) throw std::invalid_argument("need trials >= 1");
  auto mask = detail::set_mask_for_chain(chain, set);
  detail::ChainSampler sampler(chain);
  int batches = static_cast<int>(std::min<int64_t>(trials, 50));
  if (batches < 30) batches = static_cast<int>(std::min<int64_t>(trials, 30));
  std::vector<detail::LogSumExp> acc(batches);
  std::vector<int64_t> trunc(batches, 0), counts(batches, 0);
  detail::run_batches(trials, batches, threads, [&](int b, int64_t i) {
    Philox rng(seed, static_cast<uint64_t>(i));
    int u = sampler.initial_state(rng);
    int got = 0;
    int64_t t = 0;
    while (got < n && t < horizon) {
      ++t;
      sampler.step(u, rng);
      if (mask[u]) ++got;
    }
    ++counts[b];
    if (got < n) {
      ++trunc[b];
      return;
    }
    acc[b].add(alpha * static_cast<double>(t));
  });
  EstimateRecord rec;
  rec.trials = trials;
  rec.batches = batches;
  rec.n = n;
  rec.seed = seed;
  detail::LogSumExp total;
  int64_t kept = 0;
  std::vector<double> batch_est(batches, kNegInf);
  for (int b = 0; b < batches; ++b) {
    rec.truncated_trials += trunc[b];
    kept += counts[b] - trunc[b];
    batch_est[b] = acc[b].log_mean(counts[b] - trunc[b]) / n;
  }
  // Combined estimate from all kept trials (order-stable by batch index).
  double log_total = kNegInf;
  {
    double mx = kNegInf;
    for (int b = 0; b < batches; ++b) {
      double lm = acc[b].log_mean(1);  // log of batch sum
      if (lm > mx) mx = lm;
    }
    double s = 0.0;
    for (int b = 0; b < batches; ++b) {
      double lm = acc[b].log_mean(1);
      if (std::isfinite(lm)) s += std::exp(lm - mx);
    }
    log_total = kept > 0 ? mx + std::log(s) - std::log(static_cast<double>(kept)) : kNegInf;
  }
  rec.value = log_total / n;
  rec.std_error = detail::batch_std_error(batch_est, rec.value);
  if (rec.truncated_trials > 0)
    rec.warnings.push_back(std::to_string(rec.truncated_trials) +
                           " trials hit the horizon and were excluded (estimate biased low)");
  if (std::isfinite(domain_hint) && alpha > domain_hint - 0.05)
    rec.warnings.push_back("alpha is within 0.05 of the CGF domain endpoint; variance may "
                           "be unbounded");
  return rec;
}

/// Sandwich estimator for open sets: the same trajectories are measured
/// against the inner and outer approximations (B_m inside C_m), so the
/// per-sample ordering r_B^n >= r_C^n is checked structurally.
inline std::pair<EstimateRecord, EstimateRecord> empirical_cgf_sandwich(
    const GibbsChain& chain, const CylinderSet& inner_set, const CylinderSet& outer_set,
    double alpha, int n, int64_t trials, uint64_t seed, int64_t horizon = 1'000'000,
    int threads = 1) {
  auto mask_in = detail::set_mask_for_chain(chain, inner_set);
  auto mask_out = detail::set_mask_for_chain(chain, outer_set);
  for (size_t u = 0; u < mask_in.size(); ++u)
    if (mask_in[u] && !mask_out[u])
      throw std::invalid_argument("inner set is not contained in the outer set");
  detail::ChainSampler sampler(chain);
  int batches = static_cast<int>(std::min<int64_t>(trials, 50));
  std::vector<detail::LogSumExp> acc_in(batches), acc_out(batches);
  std::vector<int64_t> trunc(batches, 0), counts(batches, 0);
  detail::run_batches(trials, batches, threads, [&](int b, int64_t i) {
    Philox rng(seed, static_cast<uint64_t>(i));
    int u = sampler.initial_state(rng);
    int got_in = 0, got_out = 0;
    int64_t t = 0, r_in = 0, r_out = 0;
    while ((got_in < n || got_out < n) && t < horizon) {
      ++t;
      sampler.step(u, rng);
      if (mask_out[u] && got_out < n && ++got_out == n) r_out = t;
      if (mask_in[u] && got_in < n && ++got_in == n) r_in = t;
    }
    ++counts[b];
    if (got_in < n || got_out < n) {
      ++trunc[b];
      return;
    }
    if (r_in < r_out) throw std::logic_error("sample-wise sandwich violated");
    acc_in[b].add(alpha * static_cast<double>(r_in));
    acc_out[b].add(alpha * static_cast<double>(r_out));
  });
  auto finish = [&](std::vector<detail::LogSumExp>& acc) {
    EstimateRecord rec;
    rec.trials = trials;
    rec.batches = batches;
    rec.n = n;
    rec.seed = seed;
    int64_t kept = 0;
    std::vector<double> batch_est(batches, kNegInf);
    for (int b = 0; b < batches; ++b) {
      rec.truncated_trials += trunc[b];
      kept += counts[b] - trunc[b];
      batch_est[b] = acc[b].log_mean(counts[b] - trunc[b]) / n;
    }
    double mx = kNegInf;
    for (int b = 0; b < batches; ++b) mx = std::max(mx, acc[b].log_mean(1));
    double s = 0.0;
    for (int b = 0; b < batches; ++b) {
      double lm = acc[b].log_mean(1);
      if (std::isfinite(lm)) s += std::exp(lm - mx);
    }
    rec.value = (kept > 0 ? mx + std::log(s) - std::log(static_cast<double>(kept)) : kNegInf) / n;
    rec.std_error = detail::batch_std_error(batch_est, rec.value);
    return rec;
  };
  return {finish(acc_in), finish(acc_out)};
}

/// Tail estimator for (1/n) log P(r^n/n >= u) (or <= u for the lower
/// branch).  With a tilt chain the trajectories are sampled from it and
/// reweighted by the exact per-step likelihood ratio up to the stopping
/// time; the tilt chain must share the block presentation.
struct TailOptions {
  bool lower_branch = false;          // estimate P(r^n <= n u) instead
  const GibbsChain* tilt = nullptr;   // sampling chain for importance sampling
  int64_t horizon = 1'000'000;
  int threads = 1;
};

inline EstimateRecord empirical_tail(const GibbsChain& chain, const CylinderSet& set,
                                     double u, int n, int64_t trials, uint64_t seed,
                                     const TailOptions& opt = {}) {
  if (!(u > 0.0)) throw std::invalid_argument("u must be positive");
  auto mask = detail::set_mask_for_chain(chain, set);
  const GibbsChain* sample_chain = opt.tilt ? opt.tilt : &chain;
  if (opt.tilt) {
    if (!(opt.tilt->blocks().sft() == chain.blocks().sft()) ||
        opt.tilt->blocks().block_length() != chain.blocks().block_length())
      throw std::invalid_argument("tilt chain must share the block presentation");
  }
  detail::ChainSampler sampler(*sample_chain);
  const auto& pi_mu = chain.stationary();
  const auto& pi_q = sample_chain->stationary();
  const auto& prob_mu = chain.edge_probabilities();
  const auto& prob_q = sample_chain->edge_probabilities();
  double threshold = static_cast<double>(n) * u;
  int batches = static_cast<int>(std::min<int64_t>(trials, 50));
  std::vector<detail::LogSumExp> acc(batches);
  std::vector<int64_t> trunc(batches, 0), counts(batches, 0), hits(batches, 0);
  detail::run_batches(trials, batches, opt.threads, [&](int b, int64_t i) {
    Philox rng(seed, static_cast<uint64_t>(i));
    int u0 = sampler.initial_state(rng);
    double loglr = opt.tilt ? std::log(pi_mu[u0]) - std::log(pi_q[u0]) : 0.0;
    int state = u0;
    int got = 0;
    int64_t t = 0, rn = 0;
    while (got < n && t < opt.horizon) {
      ++t;
      int e = sampler.step(state, rng);
      if (opt.tilt) loglr += std::log(prob_mu[e]) - std::log(prob_q[e]);
      if (mask[state] && ++got == n) rn = t;
    }
    ++counts[b];
    if (got < n) {
      ++trunc[b];
      return;
    }
    bool hit = opt.lower_branch ? (static_cast<double>(rn) <= threshold + 1e-9)
                                : (static_cast<double>(rn) >= threshold - 1e-9);
    if (!hit) return;
    ++hits[b];
    acc[b].add(loglr);
  });
  EstimateRecord rec;
  rec.trials = trials;
  rec.batches = batches;
  rec.n = n;
  rec.seed = seed;
  int64_t kept = 0, total_hits = 0;
  std::vector<double> batch_est(batches, kNegInf);
  for (int b = 0; b < batches; ++b) {
    rec.truncated_trials += trunc[b];
    kept += counts[b] - trunc[b];
    total_hits += hits[b];
    batch_est[b] = acc[b].log_mean(counts[b] - trunc[b]) / n;
  }
  double mx = kNegInf;
  for (int b = 0; b < batches; ++b) mx = std::max(mx, acc[b].log_mean(1));
  double s = 0.0;
  for (int b = 0; b < batches; ++b) {
    double lm = acc[b].log_mean(1);
    if (std::isfinite(lm)) s += std::exp(lm - mx);
  }
  rec.value =
      (total_hits > 0 ? mx + std::log(s) - std::log(static_cast<double>(kept)) : kNegInf) / n;
  rec.std_error = detail::batch_std_error(batch_est, rec.value);
  if (total_hits == 0 && !opt.tilt)
    rec.warnings.push_back("no hits: the event is too rare for direct sampling; use tilting");
  if (rec.truncated_trials > 0)
    rec.warnings.push_back(std::to_string(rec.truncated_trials) + " trials hit the horizon");
  return rec;
}

// ---------------------------------------------------------------------------
// Exact dynamic programming over (block state, completed returns, time).

struct DpDistribution {
  std::vector<double> pmf;  // pmf[T] = P(r^n = T), T = 0..t_max
  double tail = 0.0;        // P(r^n > t_max)
  int64_t t_max = 0;
  int n = 0;
};

/// Exact law of r^n up to t_max (stationary start, or conditioned on a
/// start set).  Memory is (n+1) x states; time is t_max x edges x n.
inline DpDistribution dp_distribution(const GibbsChain& chain, const CylinderSet& set, int n,
                                      int64_t t_max, const CylinderSet* start = nullptr) {
  if (n < 1) throw std::invalid_argument("need n >= 1");
  auto mask = detail::set_mask_for_chain(chain, set);
  int V = chain.blocks().state_count();
  if (static_cast<int64_t>(n + 1) * V > 10'000'000)
    throw std::runtime_error("DP table exceeds the memory budget");
  const auto& ptr = chain.blocks().ptr();
  const auto& succ = chain.blocks().succ();
  const auto& prob = chain.edge_probabilities();
  std::vector<double> dp(static_cast<size_t>(n) * V, 0.0), nxt(static_cast<size_t>(n) * V);
  if (start) {
    auto smask = detail::set_mask_for_chain(chain, *start);
    double total = 0.0;
    for (int u = 0; u < V; ++u)
      if (smask[u]) total += chain.stationary()[u];
    if (total <= 0.0) throw std::invalid_argument("start set has zero measure");
    for (int u = 0; u < V; ++u)
      if (smask[u]) dp[u] = chain.stationary()[u] / total;
  } else {
    for (int u = 0; u < V; ++u) dp[u] = chain.stationary()[u];
  }
  DpDistribution out;
  out.n = n;
  out.t_max = t_max;
  out.pmf.assign(t_max + 1, 0.0);
  for (int64_t T = 1; T <= t_max; ++T) {
    std::fill(nxt.begin(), nxt.end(), 0.0);
    double finished = 0.0;
    for (int u = 0; u < V; ++u) {
      for (int e = ptr[u]; e < ptr[u + 1]; ++e) {
        int v = succ[e];
        double p = prob[e];
        if (p == 0.0) continue;
        if (mask[v]) {
          // A visit: counts j -> j+1; j = n-1 finishes at time T.
          for (int j = 0; j < n - 1; ++j) {
            double w = dp[static_cast<size_t>(j) * V + u];
            if (w != 0.0) nxt[static_cast<size_t>(j + 1) * V + v] += w * p;
          }
          finished += dp[static_cast<size_t>(n - 1) * V + u] * p;
        } else {
          for (int j = 0; j < n; ++j) {
            double w = dp[static_cast<size_t>(j) * V + u];
            if (w != 0.0) nxt[static_cast<size_t>(j) * V + v] += w * p;
          }
        }
      }
    }
    out.pmf[T] = finished;
    dp.swap(nxt);
  }
  // Unfinished mass summed directly (1 - sum(pmf) would cancel for small tails).
  double alive = 0.0;
  for (double w : dp) alive += w;
  out.tail = alive;
  return out;
}

struct DpCgf {
  double value = 0.0;        // (1/n) log E_trunc[e^{alpha r^n}]
  double tail_bound = 0.0;   // certified bound on the missing integral mass
  int64_t t_max = 0;
  bool certified = false;    // tail_bound <= tol * integral
};

/// Exact E[e^{alpha r^n}] by forward DP with a certified geometric tail
/// bound.  The bound combines the left-over joint mass at t_max with a
/// rigorous per-return MGF bound g(alpha) >= sup_u E_u[e^{alpha r^1}]
/// obtained from submultiplicative avoid-the-set norms.  Optional cutoff:
/// integrate only over { r^n <= cutoff } (then the tail bound is moot).
inline DpCgf dp_cgf(const GibbsChain& chain, const CylinderSet& set, double alpha, int n,
                    double tol = 1e-12, int64_t cutoff = 0,
                    const CylinderSet* start = nullptr) {
  auto mask = detail::set_mask_for_chain(chain, set);
  int V = chain.blocks().state_count();
  const auto& ptr = chain.blocks().ptr();
  const auto& succ = chain.blocks().succ();
  const auto& prob = chain.edge_probabilities();

  // Substochastic avoid-step: Q_{uv} = P_{uv} 1_{v not in set}.
  auto q_apply = [&](const std::vector<double>& x, std::vector<double>& y) {
    y.assign(V, 0.0);
    for (int u = 0; u < V; ++u) {
      double s = 0.0;
      for (int e = ptr[u]; e < ptr[u + 1]; ++e)
        if (!mask[succ[e]]) s += prob[e] * x[succ[e]];
      y[u] = s;
    }
  };
  // r_u = P_u(visit at the next step).
  std::vector<double> rvec(V, 0.0);
  for (int u = 0; u < V; ++u) {
    double s = 0.0;
    for (int e = ptr[u]; e < ptr[u + 1]; ++e)
      if (mask[succ[e]]) s += prob[e];
    rvec[u] = s;
  }

  double g_bound = kPosInf;  // certified sup_u E_u[e^{alpha r^1}]
  if (alpha > 0.0) {
    // Partial series sum_{L=1..K} e^{alpha L} Q^{L-1} r plus a block-geometric
    // remainder from s_j = ||Q^j 1||_inf (submultiplicative).
    const int K = 2048;
    std::vector<double> ones(V, 1.0), qpow, tmp, series(V, 0.0), term = rvec;
    std::vector<double> s_norm = {1.0};
    qpow = ones;
    double coef = std::exp(alpha);
    int L = 1;
    for (; L <= K; ++L) {
      for (int u = 0; u < V; ++u) series[u] += coef * term[u];
      q_apply(term, tmp);
      term.swap(tmp);
      q_apply(qpow, tmp);
      qpow.swap(tmp);
      double sn = 0.0;
      for (int u = 0; u < V; ++u) sn = std::max(sn, qpow[u]);
      s_norm.push_back(sn);
      coef *= std::exp(alpha);
      if (sn * coef < 1e-18) break;  // remainder negligible at any block size
    }
    int used = std::min(L, K);
    // Best block: minimize q_block = e^{alpha L0} s_{L0} over computed L0.
    double qb = kPosInf;
    int L0 = 0;
    for (int j = 1; j < static_cast<int>(s_norm.size()); ++j) {
      double cand = std::exp(alpha * j) * s_norm[j];
      if (cand < qb) {
        qb = cand;
        L0 = j;
      }
    }
    if (!(qb < 1.0))
      throw std::domain_error("alpha too large for a certified DP tail bound (the "
                              "first-return series diverges or converges too slowly)");
    // Remainder over L > used: one block of exact terms, then geometric.
    double blockA = 0.0;
    {
      std::vector<double> t2 = term;  // = Q^{used} r ... entrywise <= s_{used}
      double c2 = std::exp(alpha * (used + 1));
      for (int j = 0; j < L0; ++j) {
        double mx = 0.0;
        for (int u = 0; u < V; ++u) mx = std::max(mx, t2[u]);
        blockA += c2 * mx;
        q_apply(t2, tmp);
        t2.swap(tmp);
        c2 *= std::exp(alpha);
      }
    }
    double rem = blockA / (1.0 - qb);
    double mx_series = 0.0;
    for (int u = 0; u < V; ++u) mx_series = std::max(mx_series, series[u]);
    g_bound = mx_series + rem;
  }

  // Forward DP, accumulating the alpha-weighted integral as we go; stop when
  // the certified bound on the remainder is below tol (or at the cutoff).
  if (static_cast<int64_t>(n + 1) * V > 10'000'000)
    throw std::runtime_error("DP table exceeds the memory budget");
  std::vector<double> dp(static_cast<size_t>(n) * V, 0.0), nxt(static_cast<size_t>(n) * V);
  if (start) {
    auto smask = detail::set_mask_for_chain(chain, *start);
    double total = 0.0;
    for (int u = 0; u < V; ++u)
      if (smask[u]) total += chain.stationary()[u];
    if (total <= 0.0) throw std::invalid_argument("start set has zero measure");
    for (int u = 0; u < V; ++u)
      if (smask[u]) dp[u] = chain.stationary()[u] / total;
  } else {
    for (int u = 0; u < V; ++u) dp[u] = chain.stationary()[u];
  }
  double integral = 0.0;
  DpCgf out;
  const int64_t hard_cap = cutoff > 0 ? cutoff : 4'000'000;
  int64_t T = 0;
  for (T = 1; T <= hard_cap; ++T) {
    std::fill(nxt.begin(), nxt.end(), 0.0);
    double finished = 0.0;
    for (int u = 0; u < V; ++u) {
      for (int e = ptr[u]; e < ptr[u + 1]; ++e) {
        int v = succ[e];
        double p = prob[e];
        if (p == 0.0) continue;
        if (mask[v]) {
          for (int j = 0; j < n - 1; ++j) {
            double w = dp[static_cast<size_t>(j) * V + u];
            if (w != 0.0) nxt[static_cast<size_t>(j + 1) * V + v] += w * p;
          }
          finished += dp[static_cast<size_t>(n - 1) * V + u] * p;
        } else {
          for (int j = 0; j < n; ++j) {
            double w = dp[static_cast<size_t>(j) * V + u];
            if (w != 0.0) nxt[static_cast<size_t>(j) * V + v] += w * p;
          }
        }
      }
    }
    integral += finished * std::exp(alpha * static_cast<double>(T));
    dp.swap(nxt);
    if (cutoff > 0) continue;  // cutoff mode: run exactly to the cutoff
    if ((T & 31) == 0 || T == hard_cap) {
      // Certified remainder: each unfinished trajectory needs n - j more
      // returns; for alpha > 0 each contributes at most g_bound per return.
      double bound = 0.0;
      double ea_t = std::exp(alpha * static_cast<double>(T));
      for (int j = 0; j < n; ++j) {
        double massj = 0.0;
        for (int u = 0; u < V; ++u) massj += dp[static_cast<size_t>(j) * V + u];
        if (massj <= 0.0) continue;
        double per = alpha > 0.0 ? std::pow(g_bound, n - j) : 1.0;
        bound += massj * ea_t * per;
      }
      if (bound <= tol * std::max(integral, 1e-300)) {
        out.tail_bound = bound;
        out.certified = true;
        break;
      }
      if (T == hard_cap) out.tail_bound = bound;
    }
  }
  out.t_max = std::min(T, hard_cap);
  out.value = std::log(integral) / n;
  return out;
}

struct DpTail {
  double probability = 0.0;  // exact P of the requested event
  double log_rate = 0.0;     // (1/n) log P
  int64_t threshold = 0;
};

/// Exact tail probabilities: P(r^n >= n*u) for the upper branch (u above
/// the mean) or P(r^n <= n*u) for the lower branch.
inline DpTail dp_tail(const GibbsChain& chain, const CylinderSet& set, int n, double u,
                      bool lower_branch = false, const CylinderSet* start = nullptr) {
  DpTail out;
  if (lower_branch) {
    int64_t thr = static_cast<int64_t>(std::floor(n * u + 1e-9));
    out.threshold = thr;
    DpDistribution d = dp_distribution(chain, set, n, thr, start);
    double p = 0.0;
    for (int64_t T = 0; T <= thr; ++T) p += d.pmf[T];
    out.probability = p;
  } else {
    int64_t thr = static_cast<int64_t>(std::ceil(n * u - 1e-9));
    out.threshold = thr;
    DpDistribution d = dp_distribution(chain, set, n, thr - 1, start);
    out.probability = d.tail;  // alive mass at thr-1, summed without cancellation
  }
  out.log_rate = std::log(out.probability) / n;
  return out;
}

struct HittingVsReturnRow {
  int n = 0;
  double log_from_start_set = 0.0;  // (1/n) log integral over S of e^{alpha r^n}
  double log_from_space = 0.0;      // (1/n) log integral over the whole space
  double difference = 0.0;
};

/// Return-vs-entrance comparison: the (1/n)-log integrals started from a
/// positive-measure set S and from the whole space converge to the same
/// limit; the difference shrinks like O(1/n).
inline std::vector<HittingVsReturnRow> hitting_vs_return_check(
    const GibbsChain& chain, const CylinderSet& target, const CylinderSet& start,
    double alpha, const std::vector<int>& n_list, double tol = 1e-12) {
  std::vector<HittingVsReturnRow> rows;
  double mu_s = chain.set_mass(start.reduce(chain.blocks().sft()));
  if (mu_s <= 0.0) throw std::invalid_argument("start set has zero measure");
  for (int n : n_list) {
    HittingVsReturnRow row;
    row.n = n;
    DpCgf from_space = dp_cgf(chain, target, alpha, n, tol);
    DpCgf from_s = dp_cgf(chain, target, alpha, n, tol, 0, &start);
    row.log_from_space = from_space.value;
    row.log_from_start_set = from_s.value + std::log(mu_s) / n;
    row.difference = row.log_from_start_set - row.log_from_space;
    rows.push_back(row);
  }
  return rows;
}

}  // namespace rtldp
