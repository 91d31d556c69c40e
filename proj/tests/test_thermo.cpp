#include <catch2/catch_amalgamated.hpp>

#include <random>

#include "rtldp/thermo.hpp"
#include "test_util.hpp"

using namespace rtldp;
using testutil::kGamma;
using testutil::kLog2;

TEST_CASE("pressure on the named fixtures") {
  auto full2 = Sft::full2();
  auto gold = Sft::golden_mean();
  CHECK_THAT(pressure(full2, Potential::zero(full2)),
             Catch::Matchers::WithinAbs(kLog2, 1e-13));
  CHECK_THAT(pressure(gold, Potential::zero(gold)),
             Catch::Matchers::WithinAbs(std::log(kGamma), 1e-12));
  for (double p : {0.1, 0.35, 0.5, 0.8, 0.99})
    CHECK_THAT(pressure(full2, Potential::bernoulli(full2, {p, 1 - p})),
               Catch::Matchers::WithinAbs(0.0, 1e-12));
}

TEST_CASE("equilibrium chains") {
  auto full2 = Sft::full2();

  SECTION("measure of maximal entropy on FULL2 is Bernoulli(1/2)") {
    auto chain = equilibrium_chain(full2, Potential::zero(full2));
    CHECK_THAT(chain.stationary()[0], Catch::Matchers::WithinAbs(0.5, 1e-13));
    CHECK_THAT(chain.transition_prob(0, 1), Catch::Matchers::WithinAbs(0.5, 1e-13));
    CHECK_THAT(chain.transition_prob(1, 1), Catch::Matchers::WithinAbs(0.5, 1e-13));
  }

  SECTION("bernoulli potential reproduces the product measure") {
    auto chain = equilibrium_chain(full2, Potential::bernoulli(full2, {0.3, 0.7}));
    CHECK_THAT(chain.stationary()[0], Catch::Matchers::WithinAbs(0.3, 1e-12));
    CHECK_THAT(chain.transition_prob(1, 0), Catch::Matchers::WithinAbs(0.3, 1e-12));
    CHECK_THAT(chain.cylinder_measure(Word{{0, 1, 1}, 0}),
               Catch::Matchers::WithinAbs(0.3 * 0.7 * 0.7, 1e-12));
  }

  SECTION("Parry chain on the golden-mean shift") {
    auto gold = Sft::golden_mean();
    auto chain = equilibrium_chain(gold, Potential::zero(gold));
    CHECK_THAT(chain.transition_prob(0, 0), Catch::Matchers::WithinAbs(1.0 / kGamma, 1e-12));
    CHECK_THAT(chain.transition_prob(0, 1),
               Catch::Matchers::WithinAbs(1.0 / (kGamma * kGamma), 1e-12));
    CHECK_THAT(chain.transition_prob(1, 0), Catch::Matchers::WithinAbs(1.0, 1e-12));
    double pi0 = kGamma * kGamma / (1.0 + kGamma * kGamma);
    CHECK_THAT(chain.stationary()[0], Catch::Matchers::WithinAbs(pi0, 1e-12));
    CHECK_THAT(chain.cylinder_measure(Word{{0, 0}, 0}),
               Catch::Matchers::WithinAbs(pi0 / kGamma, 1e-12));
  }

  SECTION("stochasticity and stationarity within 1e-12") {
    std::mt19937_64 gen(3);
    for (int trial = 0; trial < 10; ++trial) {
      Sft s = testutil::random_sft(gen);
      auto chain = equilibrium_chain(s, testutil::random_potential(gen, s));
      const auto& ptr = chain.blocks().ptr();
      const auto& succ = chain.blocks().succ();
      const auto& prob = chain.edge_probabilities();
      const auto& pi = chain.stationary();
      int V = chain.blocks().state_count();
      std::vector<double> pi_next(V, 0.0);
      double pi_sum = 0.0;
      for (int u = 0; u < V; ++u) {
        pi_sum += pi[u];
        double row = 0.0;
        for (int e = ptr[u]; e < ptr[u + 1]; ++e) {
          row += prob[e];
          pi_next[succ[e]] += pi[u] * prob[e];
        }
        CHECK_THAT(row, Catch::Matchers::WithinAbs(1.0, 1e-12));
      }
      CHECK_THAT(pi_sum, Catch::Matchers::WithinAbs(1.0, 1e-12));
      for (int u = 0; u < V; ++u)
        CHECK_THAT(pi_next[u], Catch::Matchers::WithinAbs(pi[u], 1e-12));
      // Perron residuals.
      CHECK(chain.perron_data().residual <= 1e-12);
    }
  }
}

TEST_CASE("variational principle") {
  std::mt19937_64 gen(17);
  auto full2 = Sft::full2();
  Potential phi = Potential::from_table(full2, 0, 1,
                                        {{"00", 0.4}, {"01", -0.3}, {"10", 0.25}, {"11", 0.0}});
  double p = pressure(full2, phi);
  auto chain = equilibrium_chain(full2, phi);
  CHECK_THAT(chain.entropy() + chain.weight_integral(), Catch::Matchers::WithinAbs(p, 1e-10));

  // Any other stochastic matrix on the same digraph scores strictly lower.
  const auto& blocks = chain.blocks();
  const auto& ptr = blocks.ptr();
  const auto& succ = blocks.succ();
  auto psi = blocks.vertex_potential(phi);
  int V = blocks.state_count();
  std::uniform_real_distribution<double> ud(0.05, 1.0);
  for (int trial = 0; trial < 100; ++trial) {
    std::vector<double> q(succ.size());
    for (int u = 0; u < V; ++u) {
      double row = 0.0;
      for (int e = ptr[u]; e < ptr[u + 1]; ++e) row += (q[e] = ud(gen));
      for (int e = ptr[u]; e < ptr[u + 1]; ++e) q[e] /= row;
    }
    std::vector<double> pi(V, 1.0 / V), nxt(V);
    for (int it = 0; it < 3000; ++it) {
      std::fill(nxt.begin(), nxt.end(), 0.0);
      for (int u = 0; u < V; ++u)
        for (int e = ptr[u]; e < ptr[u + 1]; ++e) nxt[succ[e]] += pi[u] * q[e];
      pi.swap(nxt);
    }
    double value = 0.0;
    for (int u = 0; u < V; ++u) {
      value += pi[u] * psi[u];
      for (int e = ptr[u]; e < ptr[u + 1]; ++e)
        if (q[e] > 0.0) value -= pi[u] * q[e] * std::log(q[e]);
    }
    CHECK(value < p - 1e-12);
  }
}

TEST_CASE("cylinder measures") {
  auto full2 = Sft::full2();
  auto chain = equilibrium_chain(full2, Potential::zero(full2));
  CHECK_THAT(chain.cylinder_measure(Word{{0}, 0}), Catch::Matchers::WithinAbs(0.5, 1e-13));
  for (const Word& w : admissible_words(full2, 5))
    CHECK_THAT(chain.cylinder_measure(w), Catch::Matchers::WithinAbs(std::pow(2.0, -5), 1e-13));
  // Anchor independence.
  CHECK(chain.cylinder_measure(Word{{0, 1}, -4}) == chain.cylinder_measure(Word{{0, 1}, 3}));
  // Inadmissible word has measure zero.
  auto gold = Sft::golden_mean();
  auto gchain = equilibrium_chain(gold, Potential::zero(gold));
  CHECK(gchain.cylinder_measure(Word{{1, 1}, 0}) == 0.0);
}

TEST_CASE("survivor pressure") {
  auto full2 = Sft::full2();
  auto zero = Potential::zero(full2);
  CHECK_THAT(survivor_pressure(full2, zero, CylinderSet::from_depth_words(full2, 0, {"0"})).value,
             Catch::Matchers::WithinAbs(0.0, 1e-13));
  CHECK_THAT(survivor_pressure(full2, zero, CylinderSet::from_words(full2, {Word{{0, 0}, 0}})).value,
             Catch::Matchers::WithinAbs(std::log(kGamma), 1e-12));
  auto whole = survivor_pressure(full2, zero, CylinderSet::whole_space(full2));
  CHECK(whole.whole_space);
  CHECK(std::isinf(whole.value));

  SECTION("monotone non-increasing in the hole") {
    std::mt19937_64 gen(29);
    for (int trial = 0; trial < 10; ++trial) {
      Sft s = testutil::random_sft(gen, 3);
      auto codes = admissible_word_codes(s, 2);
      std::vector<uint64_t> small, big;
      for (uint64_t c : codes) {
        bool in_small = gen() % 3 == 0;
        if (in_small) small.push_back(c);
        if (in_small || gen() % 2 == 0) big.push_back(c);
      }
      if (small.empty() || big.size() == codes.size()) continue;
      Potential phi = testutil::random_potential(gen, s, 1);
      double p = pressure(s, phi);
      double sp_small = survivor_pressure(s, phi, CylinderSet::from_codes(s, 0, 2, small)).value;
      double sp_big = survivor_pressure(s, phi, CylinderSet::from_codes(s, 0, 2, big)).value;
      CHECK(sp_big <= sp_small + 1e-12);
      CHECK(sp_small <= p + 1e-12);
    }
  }
}

TEST_CASE("penalized pressure") {
  auto full2 = Sft::full2();
  auto zero = Potential::zero(full2);
  auto r0 = CylinderSet::from_depth_words(full2, 0, {"0"});

  SECTION("t = 0 recovers the pressure; closed form on the 2x2 fixture") {
    CHECK_THAT(penalized_pressure(full2, zero, r0, 0.0).value,
               Catch::Matchers::WithinAbs(kLog2, 1e-13));
    for (double t : {-2.0, -0.5, 0.3, 1.0, 3.0, 8.0})
      CHECK_THAT(penalized_pressure(full2, zero, r0, t).value,
                 Catch::Matchers::WithinAbs(std::log1p(std::exp(-t)), 1e-12));
    auto at_log2 = penalized_pressure(full2, zero, r0, kLog2);
    CHECK_THAT(at_log2.value, Catch::Matchers::WithinAbs(std::log(1.5), 1e-12));
    CHECK_THAT(at_log2.hole_mass, Catch::Matchers::WithinAbs(1.0 / 3.0, 1e-10));
  }

  SECTION("monotone decreasing, convex, with F' = -m_t(R)") {
    auto gold = Sft::golden_mean();
    Potential phi = Potential::from_table(gold, 0, 1,
                                          {{"00", -0.2}, {"01", 0.1}, {"10", 0.35}});
    auto hole = CylinderSet::from_words(gold, {Word{{0, 1}, 0}});
    std::vector<double> ts, fs;
    for (double t = -2.0; t <= 6.0; t += 0.25) {
      ts.push_back(t);
      fs.push_back(penalized_pressure(gold, phi, hole, t).value);
    }
    for (size_t i = 0; i + 1 < fs.size(); ++i) CHECK(fs[i + 1] < fs[i]);
    for (size_t i = 0; i + 2 < fs.size(); ++i)
      CHECK(fs[i + 2] - 2 * fs[i + 1] + fs[i] >= -1e-9);
    // Analytic derivative vs central differences.
    const double h = 1e-5;
    for (double t : {-1.0, 0.0, 0.8, 2.5}) {
      double analytic = penalized_pressure(gold, phi, hole, t).derivative();
      double fd = (penalized_pressure(gold, phi, hole, t + h).value -
                   penalized_pressure(gold, phi, hole, t - h).value) /
                  (2 * h);
      CHECK_THAT(analytic, Catch::Matchers::WithinAbs(fd, 1e-6));
    }
    // F(t) -> survivor pressure as t -> +inf.
    double sc = survivor_pressure(gold, phi, hole).value;
    CHECK_THAT(penalized_pressure(gold, phi, hole, 30.0).value,
               Catch::Matchers::WithinAbs(sc, 1e-10));
  }
}

TEST_CASE("gibbs constant envelope") {
  auto full2 = Sft::full2();

  SECTION("FULL2 with zero potential: exact ratio, b = 0") {
    auto chain = equilibrium_chain(full2, Potential::zero(full2));
    auto rep = gibbs_constant(chain, Potential::zero(full2), 3);
    CHECK_THAT(rep.b, Catch::Matchers::WithinAbs(0.0, 1e-12));
    CHECK_THAT(rep.centering, Catch::Matchers::WithinAbs(0.5, 1e-12));
    CHECK(rep.b <= kLog2);
  }

  SECTION("bernoulli: b bounded by the log-probability spread") {
    for (double p : {0.3, 0.45}) {
      auto phi = Potential::bernoulli(full2, {p, 1 - p});
      auto chain = equilibrium_chain(full2, phi);
      auto rep = gibbs_constant(chain, phi, 3);
      CHECK(rep.b <= std::max(std::abs(std::log(p)), std::abs(std::log(1 - p))) + 1e-12);
    }
  }

  SECTION("GOLD: finite and stable under depth growth") {
    auto gold = Sft::golden_mean();
    auto chain = equilibrium_chain(gold, Potential::zero(gold));
    auto rep = gibbs_constant(chain, Potential::zero(gold), 4);
    CHECK(std::isfinite(rep.b));
    REQUIRE(rep.per_depth_halfwidth.size() == 5);
    for (size_t n = 2; n < rep.per_depth_halfwidth.size(); ++n)
      CHECK(rep.per_depth_halfwidth[n] <= rep.per_depth_halfwidth[n - 1] + 1e-12);
  }
}

TEST_CASE("induced eigenvalue of the first-return operator") {
  auto full2 = Sft::full2();
  auto zero = Potential::zero(full2);
  auto r0 = CylinderSet::from_depth_words(full2, 0, {"0"});

  SECTION("S at the full pressure gives lambda = 1") {
    auto r = induced_eigenvalue(full2, zero, r0, kLog2, 40);
    CHECK_THAT(r.value, Catch::Matchers::WithinAbs(1.0, 1e-10));
  }

  SECTION("geometric series fixture: truncated value and bound") {
    auto r = induced_eigenvalue(full2, zero, r0, std::log(1.5), 20);
    double expected = 2.0 * (1.0 - std::pow(2.0 / 3.0, 20));
    CHECK_THAT(r.value, Catch::Matchers::WithinAbs(expected, 1e-12));
    CHECK(2.0 - r.value <= r.truncation_bound + 1e-12);
    // Matches e^{t(S)} where F(t) = S, within the reported bound.
    CHECK(std::abs(r.value - 2.0) <= r.truncation_bound + 1e-12);
  }

  SECTION("whole space: every return has length 1, exact at L = 1") {
    auto whole = CylinderSet::whole_space(full2);
    auto r = induced_eigenvalue(full2, zero, whole, 0.3, 1);
    CHECK_THAT(r.value, Catch::Matchers::WithinAbs(2.0 * std::exp(-0.3), 1e-12));
  }

  SECTION("gap at least halves from L to 2L") {
    double target = 2.0;
    double prev_gap = -1.0;
    for (int L : {4, 8, 16}) {
      double gap = target - induced_eigenvalue(full2, zero, r0, std::log(1.5), L).value;
      if (prev_gap > 0) CHECK(gap <= 0.5 * prev_gap);
      prev_gap = gap;
    }
  }

  SECTION("S at or below the survivor pressure is rejected") {
    auto r00 = CylinderSet::from_words(full2, {Word{{0, 0}, 0}});
    CHECK_THROWS_AS(induced_eigenvalue(full2, zero, r00, std::log(kGamma) - 0.01, 10),
                    std::domain_error);
  }

  SECTION("no first-return word within the length budget flags zero") {
    // [01] cannot return to itself in one step (01 -> 1x only).
    auto r01 = CylinderSet::from_words(full2, {Word{{0, 1}, 0}});
    auto r = induced_eigenvalue(full2, zero, r01, 0.5, 1);
    CHECK(r.no_return_within_length);
    CHECK(r.value == 0.0);
    CHECK_FALSE(induced_eigenvalue(full2, zero, r01, 0.5, 2).no_return_within_length);
  }
}

TEST_CASE("non-mixing inputs are accepted with warnings") {
  auto swap = Sft::make(2, {0, 1, 1, 0});
  auto zero = Potential::zero(swap);
  CHECK_THAT(pressure(swap, zero), Catch::Matchers::WithinAbs(0.0, 1e-12));
  auto chain = equilibrium_chain(swap, zero);  // periodic but irreducible
  CHECK_THAT(chain.stationary()[0], Catch::Matchers::WithinAbs(0.5, 1e-10));

  // Reducible with two tied components: not a unique equilibrium state.
  auto reducible = Sft::make(2, {1, 1, 0, 1});
  CHECK_THROWS_AS(equilibrium_chain(reducible, Potential::zero(reducible)), std::runtime_error);
}
