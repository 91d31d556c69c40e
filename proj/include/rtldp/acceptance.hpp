#pragma once

/// Acceptance suite: ten end-to-end checks of the library against closed
/// forms, independent oracles, and property suites at desk scale.  Used by
/// the `verify` CLI command and the standalone acceptance binary.  Each
/// criterion prints one PASS/FAIL line; tolerances scale with
/// `tolerance_scale` (0 turns the suite into a designed-failure
/// sensitivity demo).

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "rtldp/ldp.hpp"
#include "rtldp/openset.hpp"
#include "rtldp/rng.hpp"
#include "rtldp/simulate.hpp"
#include "rtldp/thermo.hpp"

namespace rtldp {

struct CriterionResult {
  int id = 0;
  std::string name;
  bool pass = false;
  std::string details;
  double seconds = 0.0;
};

namespace detail {

class Checker {
 public:
  explicit Checker(double scale) : scale_(scale) {}

  void close(const std::string& what, double got, double want, double tol) {
    double err = std::abs(got - want);
    bool ok = err <= tol * scale_;
    note(ok, what + ": got " + fmt(got) + ", want " + fmt(want) + " (|err| " + fmt(err) +
                 (ok ? " <= " : " > ") + fmt(tol * scale_) + ")");
  }

  void holds(const std::string& what, bool ok) { note(ok, what); }

  void le(const std::string& what, double lhs, double rhs, double slack) {
    bool ok = lhs <= rhs + slack * scale_;
    note(ok, what + ": " + fmt(lhs) + (ok ? " <= " : " > ") + fmt(rhs) + " (+slack " +
                 fmt(slack * scale_) + ")");
  }

  void in_interval(const std::string& what, double got, double lo, double hi) {
    double c = 0.5 * (lo + hi), h = 0.5 * (hi - lo) * scale_;
    bool ok = got >= c - h && got <= c + h;
    note(ok, what + ": " + fmt(got) + (ok ? " in " : " outside ") + "[" + fmt(c - h) + ", " +
                 fmt(c + h) + "]");
  }

  bool pass() const { return pass_; }
  std::string details() const { return details_; }
  double scale() const { return scale_; }

  void info(const std::string& line) { details_ += "    . " + line + "\n"; }

 private:
  static std::string fmt(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.6g", v);
    return std::string(buf);
  }

  void note(bool ok, const std::string& line) {
    pass_ = pass_ && ok;
    details_ += std::string("    ") + (ok ? "ok" : "XX") + " " + line + "\n";
  }

  double scale_;
  bool pass_ = true;
  std::string details_;
};

// Brute-force maximum mean cycle over simple cycles (oracle for Karp).
inline bool brute_max_mean_cycle(int n, const std::vector<int>& ptr,
                                 const std::vector<int>& adj,
                                 const std::vector<int>& weight, long long& num,
                                 long long& den) {
  bool found = false;
  num = 0;
  den = 1;
  std::vector<int> path;
  std::vector<uint8_t> on_path(n, 0);
  // Enumerate simple cycles whose minimal vertex is the start.
  std::function<void(int, int, long long)> dfs = [&](int start, int v, long long wsum) {
    for (int e = ptr[v]; e < ptr[v + 1]; ++e) {
      int w = adj[e];
      if (w == start) {
        long long cnum = wsum + weight[v];
        long long cden = static_cast<long long>(path.size());
        if (!found || cnum * den > num * cden) {
          num = cnum;
          den = cden;
          found = true;
        }
        continue;
      }
      if (w < start || on_path[w]) continue;
      on_path[w] = 1;
      path.push_back(w);
      dfs(start, w, wsum + weight[v]);
      path.pop_back();
      on_path[w] = 0;
    }
  };
  for (int s = 0; s < n; ++s) {
    on_path.assign(n, 0);
    on_path[s] = 1;
    path.assign(1, s);
    dfs(s, s, 0);
  }
  if (found) {
    long long g = std::gcd(num < 0 ? -num : num, den);
    if (g > 1) {
      num /= g;
      den /= g;
    }
  }
  return found;
}

/// Deterministic random fixture: irreducible aperiodic SFT with N <= 5,
/// potential of memory <= 2, target of depth <= 1.  Targets with measure
/// below 2% are resampled: mean returns beyond ~50 push the fifth
/// derivative of Psi past what the finite-difference Kac check can resolve
/// at the required 1e-8.
struct RandomFixture {
  Sft sft;
  Potential potential;
  CylinderSet target;
};

inline RandomFixture random_fixture(uint64_t seed, uint64_t index) {
  Philox rng(seed, index);
  for (int attempt = 0; attempt < 1000; ++attempt) {
    int n = 2 + static_cast<int>(rng.next_u32() % 4);
    std::vector<uint8_t> a(static_cast<size_t>(n) * n);
    for (auto& x : a) x = rng.next_double() < 0.6 ? 1 : 0;
    Sft sft;
    try {
      sft = Sft::make(n, a);
    } catch (const std::invalid_argument&) {
      continue;
    }
    if (!sft.diagnostics().irreducible || !sft.diagnostics().aperiodic) continue;
    int memory = 1 + static_cast<int>(rng.next_u32() % 2);
    std::map<std::string, double> table;
    for (const auto& w : admissible_words(sft, memory))
      table[word_to_string(w.symbols, n)] = 2.0 * rng.next_double() - 1.0;
    Potential phi = Potential::from_table(sft, 0, memory - 1, table);
    int depth = static_cast<int>(rng.next_u32() % 2);
    auto codes = admissible_word_codes(sft, 2 * depth + 1);
    std::vector<uint64_t> chosen;
    for (uint64_t c : codes)
      if (rng.next_double() < 0.45) chosen.push_back(c);
    if (chosen.empty() || chosen.size() == codes.size()) continue;
    CylinderSet target = CylinderSet::from_codes(sft, -depth, 2 * depth + 1, chosen);
    GibbsChain chain = equilibrium_chain(sft, phi, target.reduce(sft).length());
    if (chain.set_mass(target.reduce(sft)) < 0.02) continue;
    return RandomFixture{sft, phi, target};
  }
  throw std::runtime_error("random fixture generation failed");
}

inline double kl_bernoulli(double p, double q) {
  return p * std::log(p / q) + (1.0 - p) * std::log((1.0 - p) / (1.0 - q));
}

}  // namespace detail

inline std::vector<CriterionResult> run_acceptance(double tolerance_scale = 1.0,
                                                   uint64_t seed = 20250809,
                                                   std::ostream* progress = nullptr) {
  using clock = std::chrono::steady_clock;
  std::vector<CriterionResult> results;
  auto run = [&](int id, const std::string& name, auto&& body) {
    detail::Checker ck(tolerance_scale);
    auto t0 = clock::now();
    try {
      body(ck);
    } catch (const std::exception& e) {
      ck.holds(std::string("unexpected exception: ") + e.what(), false);
    }
    double secs = std::chrono::duration<double>(clock::now() - t0).count();
    results.push_back(CriterionResult{id, name, ck.pass(), ck.details(), secs});
    if (progress) {
      char timing[32];
      std::snprintf(timing, sizeof timing, "%.2fs", secs);
      (*progress) << (ck.pass() ? "PASS" : "FAIL") << "  criterion " << id << ": " << name
                  << "  (" << timing << ")\n"
                  << ck.details();
      progress->flush();
    }
  };

  const Sft full2 = Sft::full2();
  const Sft gold = Sft::golden_mean();
  const Potential zero2 = Potential::zero(full2);
  const double log2 = std::log(2.0);
  const double gamma = (1.0 + std::sqrt(5.0)) / 2.0;

  run(1, "closed-form CGF on FULL2 / R=[0]", [&](detail::Checker& ck) {
    auto t0 = clock::now();
    auto r0 = CylinderSet::from_depth_words(full2, 0, {"0"});
    CgfEvaluator ev(full2, zero2, r0);
    for (double a : {-2.0, -1.0, -0.25, 0.0, 0.3, 0.6}) {
      double expect = -std::log(2.0 * std::exp(-a) - 1.0);
      ck.close("Psi(" + std::to_string(a) + ")", ev.eval(a).psi, expect, 1e-9);
    }
    ck.close("alpha(R)", ev.alpha_max(), log2, 1e-12);
    double secs = std::chrono::duration<double>(clock::now() - t0).count();
    ck.holds("runtime " + std::to_string(secs) + "s < 1s", secs < 1.0);
  });

  run(2, "Kac derivative on 20 randomized fixtures", [&](detail::Checker& ck) {
    auto t0 = clock::now();
    const double eps = 1e-4;  // keeps the 5-point truncation term ~ eps^4 Psi^(5) tiny
    for (uint64_t i = 0; i < 20; ++i) {
      auto fx = detail::random_fixture(seed, 1000 + i);
      CgfEvaluator ev(fx.sft, fx.potential, fx.target);
      auto psi = [&](double a) { return ev.eval(a).psi; };
      double fd = (8.0 * (psi(eps) - psi(-eps)) - (psi(2 * eps) - psi(-2 * eps))) / (12.0 * eps);
      ck.close("fixture " + std::to_string(i) + ": FD Psi'(0) vs 1/mu(R)", fd,
               ev.mean_return(), 1e-8);
    }
    double secs = std::chrono::duration<double>(clock::now() - t0).count();
    ck.holds("runtime " + std::to_string(secs) + "s < 10s", secs < 10.0);
  });

  run(3, "Legendre values and zero at the mean", [&](detail::Checker& ck) {
    auto r0 = CylinderSet::from_depth_words(full2, 0, {"0"});
    auto curve = std::make_shared<CgfCurve>(build_cgf_curve(full2, zero2, r0));
    double phi3 = legendre(*curve, 3.0).phi;
    double closed = -3.0 * std::log(4.0 / 3.0) + log2;
    double binom = -3.0 * detail::kl_bernoulli(1.0 / 3.0, 0.5);
    ck.close("Phi(3) vs -3log(4/3)+log2", phi3, closed, 1e-6);
    ck.close("Phi(3) vs binomial tail -u D(1/u||1/2)", phi3, binom, 1e-6);
    struct Fx {
      const Sft* sft;
      Potential phi;
      CylinderSet set;
      std::string label;
    };
    std::vector<Fx> fixtures;
    fixtures.push_back({&full2, zero2, r0, "FULL2/[0]"});
    fixtures.push_back({&full2, zero2, CylinderSet::from_words(full2, {Word{{0, 0}, 0}}),
                        "FULL2/[00]"});
    fixtures.push_back({&full2, Potential::bernoulli(full2, {0.3, 0.7}), r0,
                        "FULL2 bern(0.3)/[0]"});
    fixtures.push_back({&gold, Potential::zero(gold),
                        CylinderSet::from_depth_words(gold, 0, {"0"}), "GOLD/[0]"});
    fixtures.push_back({&gold, Potential::zero(gold),
                        CylinderSet::from_depth_words(gold, 0, {"1"}), "GOLD/[1]"});
    fixtures.push_back({&full2, zero2, CylinderSet::from_words(full2, {Word{{0, 1}, 0}}),
                        "FULL2/[01]"});
    for (const auto& fx : fixtures) {
      auto c = std::make_shared<CgfCurve>(build_cgf_curve(*fx.sft, fx.phi, fx.set));
      ck.close("Phi(1/mu(R)) on " + fx.label, legendre(*c, c->mean_return).phi, 0.0, 1e-8);
    }
  });

  run(4, "complement transform (u-1)Phi_{A^c}(u/(u-1))", [&](detail::Checker& ck) {
    auto r0 = CylinderSet::from_depth_words(full2, 0, {"0"});
    auto r1 = CylinderSet::from_depth_words(full2, 0, {"1"});
    auto c0 = std::make_shared<CgfCurve>(build_cgf_curve(full2, zero2, r0));
    auto c1 = std::make_shared<CgfCurve>(build_cgf_curve(full2, zero2, r1));
    RateCurve rc1 = build_rate_curve(c1, {1.5, 2.0, 3.0});
    for (double u : {2.0, 3.0, 4.0}) {
      double via_complement = complement_rate(rc1, u).phi;
      double direct = legendre(*c0, u).phi;
      ck.close("u=" + std::to_string(u), via_complement, direct, 1e-6);
    }
  });

  run(5, "DP oracle: CGF convergence and exact small-n laws", [&](detail::Checker& ck) {
    auto r0 = CylinderSet::from_depth_words(full2, 0, {"0"});
    auto chain = equilibrium_chain(full2, zero2);
    double psi02 = cgf(full2, zero2, r0, 0.2).psi;
    double prev = kPosInf;
    bool monotone = true;
    double final_diff = 0.0;
    for (int n = 1; n <= 50; ++n) {
      double diff = std::abs(dp_cgf(chain, r0, 0.2, n).value - psi02);
      if (diff > prev + 1e-10) monotone = false;
      prev = diff;
      final_diff = diff;
    }
    ck.holds("|dp - Psi(0.2)| non-increasing in n", monotone);
    ck.close("|dp(n=50) - Psi(0.2)|", final_diff, 0.0, 0.02);
    ck.close("E[e^{log(6/5) r}] at n=1", std::exp(dp_cgf(chain, r0, std::log(1.2), 1).value),
             1.5, 1e-12);
    ck.close("P(r^2 >= 6)", dp_tail(chain, r0, 2, 3.0).probability, 6.0 / 32.0, 1e-14);
  });

  run(6, "Monte Carlo agreement (CGF, tilted tail, determinism)", [&](detail::Checker& ck) {
    auto t0 = clock::now();
    auto r0 = CylinderSet::from_depth_words(full2, 0, {"0"});
    auto chain = equilibrium_chain(full2, zero2);
    for (double a : {-0.5, 0.2}) {
      double analytic = cgf(full2, zero2, r0, a).psi;
      auto rec = empirical_cgf(chain, r0, a, 100, 100000, seed);
      ck.close("empirical_cgf(alpha=" + std::to_string(a) + ", n=100, 1e5 trials)", rec.value,
               analytic, 0.02);
    }
    auto curve = std::make_shared<CgfCurve>(build_cgf_curve(full2, zero2, r0));
    LegendreResult leg = legendre(*curve, 3.0);
    GibbsChain tilt =
        penalized_chain(full2, zero2, r0, curve->evaluator->eval(leg.alpha_star).psi);
    TailOptions topt;
    topt.tilt = &tilt;
    auto tail = empirical_tail(chain, r0, 3.0, 60, 100000, seed + 1, topt);
    double exact_finite_n = dp_tail(chain, r0, 60, 3.0).log_rate;
    ck.info("tilted estimate " + std::to_string(tail.value) + " +- " +
            std::to_string(tail.std_error) + "; exact finite-n (DP oracle) " +
            std::to_string(exact_finite_n) + "; asymptotic Phi(3) " + std::to_string(leg.phi));
    ck.close("estimator vs exact finite-n value (3 SE)", tail.value, exact_finite_n,
             3.0 * std::max(tail.std_error, 1e-4));
    // Required window: within 0.03 of Phi(3).  The exact finite-n value sits
    // 0.042 away (the LDP log-prefactor at n = 60), so an unbiased estimator
    // cannot land inside; kept as required and expected red.
    ck.close("tilted empirical_tail(u=3, n=60) vs Phi(3) [required window]", tail.value,
             leg.phi, 0.03);
    auto rec_a = empirical_cgf(chain, r0, 0.2, 100, 20000, seed + 2);
    auto rec_b = empirical_cgf(chain, r0, 0.2, 100, 20000, seed + 2);
    ck.holds("bit-identical repeat under fixed seed",
             rec_a.value == rec_b.value && rec_a.std_error == rec_b.std_error);
    double secs = std::chrono::duration<double>(clock::now() - t0).count();
    ck.holds("runtime " + std::to_string(secs) + "s < 120s", secs < 120.0);
  });

  run(7, "survivor pressure of the golden-mean hole", [&](detail::Checker& ck) {
    auto r00 = CylinderSet::from_words(full2, {Word{{0, 0}, 0}});
    double sp = survivor_pressure(full2, zero2, r00).value;
    ck.close("P(Sigma_[00])", sp, std::log(gamma), 1e-9);
    ck.close("alpha([00])", cgf_domain(full2, zero2, r00), log2 - std::log(gamma), 1e-9);
  });

  run(8, "inner/outer machinery on FUTURE11", [&](detail::Checker& ck) {
    auto fut = make_future11(full2);
    std::vector<int> depths;
    for (int m = 1; m <= 10; ++m) depths.push_back(m);
    auto r0 = CylinderSet::from_depth_words(full2, 0, {"0"});
    double psi_cyl = cgf(full2, zero2, r0, 0.1).psi;
    InnerOuterRecord pos = inner_outer(full2, zero2, *fut, 0.1, depths, 1e-4);
    bool outer_exact = true, inner_strict = true, sandwich_pos = true, eq8 = true;
    double gap2 = 0.0, gap10 = 0.0, prev_inner = kPosInf;
    for (const auto& row : pos.rows) {
      if (std::abs(row.outer.psi - psi_cyl) > 1e-14) outer_exact = false;
      if (!row.inner_available) continue;
      if (row.inner.psi >= prev_inner - 1e-12) inner_strict = false;
      prev_inner = row.inner.psi;
      if (row.inner.psi < row.outer.psi - 1e-12) sandwich_pos = false;  // Eq. (7)
      double lhs = (row.mass_inner_set / row.mass_outer_set) * row.inner.psi;
      if (lhs > row.outer.psi + 1e-12) eq8 = false;  // Eq. (8)
      if (row.depth == 2) gap2 = row.inner.psi - row.outer.psi;
      if (row.depth == 10) gap10 = row.inner.psi - row.outer.psi;
    }
    ck.holds("outer branch equals Psi_[0](0.1) exactly at every depth", outer_exact);
    ck.holds("inner branch strictly decreasing in depth", inner_strict);
    ck.le("final gap vs 25% of depth-2 gap", gap10, 0.25 * gap2, 1e-12);
    ck.holds("Eq. (7) ordering Psi_C <= Psi_B at alpha = 0.1 on every pair", sandwich_pos);
    ck.holds("Eq. (8) induced-pressure inequality at alpha = 0.1 on every depth", eq8);
    InnerOuterRecord neg = inner_outer(full2, zero2, *fut, -0.5, depths, 1e-4);
    bool sandwich_neg = true, eq13 = true;
    for (const auto& row : neg.rows) {
      if (!row.inner_available) continue;
      if (row.inner.psi > row.outer.psi + 1e-12) sandwich_neg = false;  // Eq. (6)
      double lhs = (row.mass_outer_set / row.mass_inner_set) * row.outer.psi;
      if (lhs > row.inner.psi + 1e-12) eq13 = false;  // Eq. (13)
    }
    ck.holds("Eq. (6) ordering Psi_B <= Psi_C at alpha = -0.5 on every pair", sandwich_neg);
    ck.holds("Eq. (13) induced-pressure inequality at alpha = -0.5 on every depth", eq13);
  });

  run(9, "rho(D): Karp vs exhaustive cycles; degenerate-rate probes", [&](detail::Checker& ck) {
    // Full sweep: every valid transition matrix on N <= 3 symbols (block
    // graphs with <= 3 states at block length 1; N = 2 also at block length
    // 2, giving 4-state graphs; N = 3 at block length 2 when <= 6 states)
    // against every vertex-weight subset.
    int graphs = 0, checks = 0;
    bool all_match = true;
    for (int n = 1; n <= 3; ++n) {
      int cells = n * n;
      for (int bits = 0; bits < (1 << cells); ++bits) {
        std::vector<uint8_t> a(cells);
        for (int i = 0; i < cells; ++i) a[i] = (bits >> i) & 1;
        Sft sft;
        try {
          sft = Sft::make(n, a);
        } catch (const std::invalid_argument&) {
          continue;
        }
        for (int k = 1; k <= 2; ++k) {
          BlockSystem blocks(sft, k);
          int v = blocks.state_count();
          if (v > 6) continue;
          ++graphs;
          for (int wbits = 0; wbits < (1 << v); ++wbits) {
            std::vector<int> weight(v);
            for (int i = 0; i < v; ++i) weight[i] = (wbits >> i) & 1;
            MeanCycle karp =
                karp_max_mean_cycle(v, blocks.ptr(), blocks.succ(), weight);
            long long bn = 0, bd = 1;
            detail::brute_max_mean_cycle(v, blocks.ptr(), blocks.succ(), weight, bn, bd);
            ++checks;
            if (karp.num * bd != bn * karp.den) all_match = false;
          }
        }
      }
    }
    ck.holds("Karp == brute force on " + std::to_string(checks) + " (graph, weight) pairs (" +
                 std::to_string(graphs) + " graphs)",
             all_match);
    auto rho01 = max_invariant_mass_exact(full2, CylinderSet::from_words(full2, {Word{{0, 1}, 0}}));
    auto rho0 = max_invariant_mass_exact(full2, CylinderSet::from_depth_words(full2, 0, {"0"}));
    ck.holds("rho([01]) = 1/2 exactly", rho01.num == 1 && rho01.den == 2);
    ck.holds("rho([0]) = 1 exactly", rho0.num == 1 && rho0.den == 1);
    int agreements = 0;
    for (uint64_t i = 0; i < 10; ++i) {
      Philox rng(seed, 500 + i);
      auto fx = detail::random_fixture(seed, 2000 + i);
      double rho = max_invariant_mass(fx.sft, fx.target);
      double v = 0.0;
      do {
        v = 0.2 + 2.8 * rng.next_double();
      } while (rho > 0.0 && std::abs(v - 1.0 / rho) < 0.05);
      bool degenerate = degenerate_rate_check(fx.sft, fx.target, v);
      auto curve = std::make_shared<CgfCurve>(
          build_cgf_curve(fx.sft, fx.potential, fx.target));
      bool leg_minus_inf = legendre(*curve, v).minus_infinity;
      if (degenerate == leg_minus_inf) ++agreements;
    }
    ck.holds("degenerate_rate_check agrees with legendre -inf on " +
                 std::to_string(agreements) + "/10 probes",
             agreements == 10);
  });

  run(10, "boundary-pressure pipeline on FUTURE11", [&](detail::Checker& ck) {
    auto t0 = clock::now();
    auto fut = make_future11(full2);
    auto chain = equilibrium_chain(full2, zero2);
    std::vector<int> depths;
    for (int m = 2; m <= 12; ++m) depths.push_back(m);
    auto bb = boundary_pressure_bound(chain, *fut, zero2, depths);
    ck.in_interval("fitted theta (true log2 - log gamma = 0.2119)", bb.theta, 0.19, 0.23);
    ck.le("golden-mean pressure <= bound = pressure - theta/2", std::log(gamma), bb.bound,
          1e-12);
    double secs = std::chrono::duration<double>(clock::now() - t0).count();
    ck.holds("runtime " + std::to_string(secs) + "s < 10s", secs < 10.0);
  });

  return results;
}

/// The one criterion expected red: its 0.03 window around the asymptote at
/// n = 60 excludes the exact finite-n value (see the check's inline note).
/// Everything else must pass.
inline bool acceptance_matches_expected(const std::vector<CriterionResult>& results) {
  for (const auto& r : results) {
    if (r.id == 6) {
      if (r.pass) return false;  // would mean the estimator drifted from the exact value
      bool tail_line_failed =
          r.details.find("XX tilted empirical_tail(u=3, n=60) vs Phi(3) [required window]") !=
          std::string::npos;
      bool estimator_ok =
          r.details.find("ok estimator vs exact finite-n value") != std::string::npos;
      bool cgf_ok = r.details.find("XX empirical_cgf") == std::string::npos;
      bool det_ok = r.details.find("ok bit-identical repeat") != std::string::npos;
      if (!(tail_line_failed && estimator_ok && cgf_ok && det_ok)) return false;
    } else if (!r.pass) {
      return false;
    }
  }
  return true;
}

}  // namespace rtldp
