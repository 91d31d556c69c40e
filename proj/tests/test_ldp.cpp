#include <catch2/catch_amalgamated.hpp>

#include <random>

#include "rtldp/ldp.hpp"
#include "test_util.hpp"

using namespace rtldp;
using testutil::kGamma;
using testutil::kLog2;

namespace {
const Sft kFull2 = Sft::full2();
const Potential kZero = Potential::zero(kFull2);
CylinderSet r0() { return CylinderSet::from_depth_words(kFull2, 0, {"0"}); }
}  // namespace

TEST_CASE("cgf on the closed-form fixture") {
  for (double a : {-3.0, -1.0, -0.25, 0.3, 0.5, 0.69}) {
    auto p = cgf(kFull2, kZero, r0(), a);
    CHECK_THAT(p.psi, Catch::Matchers::WithinAbs(-std::log(2 * std::exp(-a) - 1), 1e-11));
    double dpsi_expect = 2 * std::exp(-a) / (2 * std::exp(-a) - 1);
    CHECK_THAT(p.dpsi, Catch::Matchers::WithinRel(dpsi_expect, 1e-9));
  }
  auto at_zero = cgf(kFull2, kZero, r0(), 0.0);
  CHECK(at_zero.psi == 0.0);
  CHECK_THAT(at_zero.dpsi, Catch::Matchers::WithinAbs(2.0, 1e-12));
  CHECK_THAT(cgf(kFull2, kZero, r0(), -1.0).psi,
             Catch::Matchers::WithinAbs(-std::log(2 * std::exp(1.0) - 1), 1e-11));
}

TEST_CASE("cgf domain endpoints") {
  CHECK_THAT(cgf_domain(kFull2, kZero, r0()), Catch::Matchers::WithinAbs(kLog2, 1e-13));
  CHECK_THAT(cgf_domain(kFull2, kZero, CylinderSet::from_words(kFull2, {Word{{0, 0}, 0}})),
             Catch::Matchers::WithinAbs(kLog2 - std::log(kGamma), 1e-12));
  CHECK(std::isinf(cgf_domain(kFull2, kZero, CylinderSet::whole_space(kFull2))));

  SECTION("domain errors carry alpha(R)") {
    try {
      cgf(kFull2, kZero, r0(), kLog2 + 0.01);
      FAIL("expected CgfDomainError");
    } catch (const CgfDomainError& e) {
      CHECK_THAT(e.alpha_max, Catch::Matchers::WithinAbs(kLog2, 1e-13));
    }
    CHECK_THROWS_AS(cgf(kFull2, kZero, CylinderSet::empty(kFull2), 0.1), std::domain_error);
  }
}

TEST_CASE("root-finder exactness and curve invariants") {
  auto curve = build_cgf_curve(kFull2, kZero, r0());
  double p = curve.evaluator->pressure();
  REQUIRE(curve.samples.size() >= 3);
  for (const auto& s : curve.samples) {
    CHECK(s.alpha < curve.alpha_max);
    // penalized_pressure(t(alpha)) = pressure - alpha within 1e-11.
    CHECK_THAT(curve.evaluator->penalized(s.psi).value,
               Catch::Matchers::WithinAbs(p - s.alpha, 1e-11));
  }
  // Psi(0) = 0 present in the grid; convexity and slope monotonicity.
  bool has_zero = false;
  for (size_t i = 0; i < curve.samples.size(); ++i) {
    if (curve.samples[i].alpha == 0.0) {
      has_zero = true;
      CHECK(curve.samples[i].psi == 0.0);
    }
    if (i > 0) CHECK(curve.samples[i].dpsi > curve.samples[i - 1].dpsi);
  }
  CHECK(has_zero);
  for (size_t i = 2; i < curve.samples.size(); ++i) {
    const auto &a = curve.samples[i - 2], &b = curve.samples[i - 1], &c = curve.samples[i];
    double slope_ab = (b.psi - a.psi) / (b.alpha - a.alpha);
    double slope_bc = (c.psi - b.psi) / (c.alpha - b.alpha);
    CHECK(slope_bc - slope_ab >= -1e-8);
  }
  // Implicit derivative matches finite differences.
  for (double a : {-1.0, 0.2, 0.5}) {
    const double h = 1e-5;
    double fd = (curve.evaluator->eval(a + h).psi - curve.evaluator->eval(a - h).psi) / (2 * h);
    CHECK_THAT(curve.evaluator->eval(a).dpsi, Catch::Matchers::WithinAbs(fd, 1e-6));
  }
}

TEST_CASE("Kac slope on randomized fixtures") {
  std::mt19937_64 gen(2024);
  int done = 0;
  while (done < 20) {
    Sft s = testutil::random_sft(gen, 5);
    Potential phi = testutil::random_potential(gen, s, 2);
    int depth = static_cast<int>(gen() % 2);
    auto codes = admissible_word_codes(s, 2 * depth + 1);
    std::vector<uint64_t> chosen;
    for (uint64_t c : codes)
      if (gen() % 2 == 0) chosen.push_back(c);
    if (chosen.empty() || chosen.size() == codes.size()) continue;
    CgfEvaluator ev(s, phi, CylinderSet::from_codes(s, -depth, 2 * depth + 1, chosen));
    const double eps = 1e-4;
    auto psi = [&](double a) { return ev.eval(a).psi; };
    double fd = (8 * (psi(eps) - psi(-eps)) - (psi(2 * eps) - psi(-2 * eps))) / (12 * eps);
    CHECK_THAT(fd, Catch::Matchers::WithinAbs(ev.mean_return(), 1e-8));
    ++done;
  }
}

TEST_CASE("legendre transform") {
  auto curve = std::make_shared<CgfCurve>(build_cgf_curve(kFull2, kZero, r0()));

  SECTION("values") {
    CHECK_THAT(legendre(*curve, 2.0).phi, Catch::Matchers::WithinAbs(0.0, 1e-10));
    CHECK_THAT(legendre(*curve, 3.0).phi,
               Catch::Matchers::WithinAbs(-3 * std::log(4.0 / 3.0) + kLog2, 1e-8));
    auto below = legendre(*curve, 0.9);
    CHECK(below.minus_infinity);  // 0.9 < 1/rho([0]) = 1
    CHECK_THROWS_AS(legendre(*curve, 0.0), std::invalid_argument);
    CHECK_THROWS_AS(legendre(*curve, -1.0), std::invalid_argument);
  }

  SECTION("rate curve: nonpositive, zero at the mean, concave") {
    std::vector<double> us;
    for (double u = 1.05; u <= 8.0; u += 0.35) us.push_back(u);
    us.push_back(2.0);
    std::sort(us.begin(), us.end());
    RateCurve rc = build_rate_curve(curve, us);
    CHECK(rc.slope_floor == 1.0);
    for (size_t i = 0; i < rc.samples.size(); ++i) {
      CHECK(rc.samples[i].phi <= 1e-12);
      if (i >= 2 && !rc.samples[i].truncated) {
        double du1 = rc.samples[i - 1].u - rc.samples[i - 2].u;
        double du2 = rc.samples[i].u - rc.samples[i - 1].u;
        double s1 = (rc.samples[i - 1].phi - rc.samples[i - 2].phi) / du1;
        double s2 = (rc.samples[i].phi - rc.samples[i - 1].phi) / du2;
        CHECK(s2 - s1 <= 1e-8);
      }
    }
  }

  SECTION("duality: the inverse transform recovers Psi on interior slopes") {
    for (double a : {-0.5, -0.1, 0.1, 0.3}) {
      // Psi(alpha) = sup_u { alpha u + Phi(u) }: ternary search on the
      // concave objective with Phi from the forward transform.
      auto objective = [&](double u) { return a * u + legendre(*curve, u).phi; };
      double lo = 1.01, hi = 12.0;
      for (int it = 0; it < 80; ++it) {
        double m1 = lo + (hi - lo) / 3.0, m2 = hi - (hi - lo) / 3.0;
        if (objective(m1) < objective(m2))
          lo = m1;
        else
          hi = m2;
      }
      CHECK_THAT(objective(0.5 * (lo + hi)),
                 Catch::Matchers::WithinAbs(curve->evaluator->eval(a).psi, 1e-6));
    }
  }

  SECTION("blow-up at the domain endpoint") {
    double prev = 0.0;
    for (int k = 1; k <= 10; ++k) {
      double a = curve->alpha_max - std::pow(10.0, -k);
      double psi = curve->evaluator->eval(a).psi;
      CHECK(psi > prev);
      prev = psi;
    }
    CHECK(prev > 20.0);  // ~ -log(1e-10)
  }
}

TEST_CASE("two-sided potential windows feed the whole pipeline") {
  // A window [-1, 0] table and its shift to [0, 1] describe cohomologous
  // potentials, so every CGF value (and hence every rate value) coincides.
  auto two_sided = Potential::from_table(
      kFull2, -1, 0, {{"00", 0.15}, {"01", -0.2}, {"10", 0.05}, {"11", 0.3}});
  auto one_sided = Potential::from_table(
      kFull2, 0, 1, {{"00", 0.15}, {"01", -0.2}, {"10", 0.05}, {"11", 0.3}});
  auto hole = CylinderSet::from_words(kFull2, {Word{{0, 1}, 0}});
  CgfEvaluator ev2(kFull2, two_sided, hole);
  CgfEvaluator ev1(kFull2, one_sided, hole);
  CHECK_THAT(ev2.alpha_max(), Catch::Matchers::WithinAbs(ev1.alpha_max(), 1e-12));
  CHECK_THAT(ev2.target_measure(), Catch::Matchers::WithinAbs(ev1.target_measure(), 1e-12));
  for (double a : {-1.5, -0.3, 0.05, 0.15}) {
    CHECK_THAT(ev2.eval(a).psi, Catch::Matchers::WithinAbs(ev1.eval(a).psi, 1e-11));
    CHECK_THAT(ev2.eval(a).dpsi, Catch::Matchers::WithinRel(ev1.eval(a).dpsi, 1e-9));
  }
}

TEST_CASE("past and future pattern specs give the same CGFs on FULL2") {
  // Bernoulli(1/2) is reversible, and reversing a word set transposes the
  // penalized transfer matrix, so the inner/outer CGF branches of the
  // past-direction spec must match the future-direction ones exactly.
  PatternSpec past(kFull2, {0}, {1, 1}, PatternSpec::Direction::Past);
  PatternSpec future(kFull2, {0}, {1, 1}, PatternSpec::Direction::Future);
  for (double a : {-0.5, 0.1}) {
    auto rec_p = inner_outer(kFull2, kZero, past, a, {2, 4, 6}, 1e-9);
    auto rec_f = inner_outer(kFull2, kZero, future, a, {2, 4, 6}, 1e-9);
    for (size_t i = 0; i < rec_p.rows.size(); ++i) {
      REQUIRE(rec_p.rows[i].inner_available == rec_f.rows[i].inner_available);
      CHECK_THAT(rec_p.rows[i].outer.psi,
                 Catch::Matchers::WithinAbs(rec_f.rows[i].outer.psi, 1e-11));
      if (rec_p.rows[i].inner_available)
        CHECK_THAT(rec_p.rows[i].inner.psi,
                   Catch::Matchers::WithinAbs(rec_f.rows[i].inner.psi, 1e-11));
    }
  }
}

TEST_CASE("whole-space target: the CGF is the identity line") {
  // r^n = n exactly when every state is in the target, so Psi(alpha) = alpha
  // on all of R and Phi is degenerate off u = 1.
  auto whole = CylinderSet::whole_space(kFull2);
  CgfEvaluator ev(kFull2, kZero, whole);
  CHECK(std::isinf(ev.alpha_max()));
  for (double a : {-3.0, -0.5, 1.0, 3.5}) {
    auto p = ev.eval(a);
    CHECK_THAT(p.psi, Catch::Matchers::WithinAbs(a, 1e-11));
    CHECK_THAT(p.dpsi, Catch::Matchers::WithinAbs(1.0, 1e-9));
  }
  auto curve = std::make_shared<CgfCurve>(build_cgf_curve(kFull2, kZero, whole));
  CHECK_THAT(legendre(*curve, 1.0).phi, Catch::Matchers::WithinAbs(0.0, 1e-9));
  // Above the only achievable slope: boundary value with the truncation flag.
  auto above = legendre(*curve, 2.0);
  CHECK(above.truncated);
  // Below 1/rho = 1: degenerate.
  CHECK(legendre(*curve, 0.5).minus_infinity);
}

TEST_CASE("complement transform") {
  auto rone = CylinderSet::from_depth_words(kFull2, 0, {"1"});
  auto c0 = std::make_shared<CgfCurve>(build_cgf_curve(kFull2, kZero, r0()));
  auto c1 = std::make_shared<CgfCurve>(build_cgf_curve(kFull2, kZero, rone));
  RateCurve rc1 = build_rate_curve(c1, {2.0});
  CHECK_THAT(complement_rate(rc1, 2.0).phi, Catch::Matchers::WithinAbs(0.0, 1e-10));
  for (double u : {2.5, 3.0, 4.0})
    CHECK_THAT(complement_rate(rc1, u).phi,
               Catch::Matchers::WithinAbs(legendre(*c0, u).phi, 1e-8));
  CHECK_THROWS_AS(complement_rate(rc1, 1.0), std::invalid_argument);
}

TEST_CASE("inner/outer record on open sets") {
  auto fut = make_future11(kFull2);
  std::vector<int> depths = {1, 2, 3, 4, 5, 6};

  SECTION("clopen target: zero gap at every depth") {
    ExplicitUnionSpec clopen(kFull2, CylinderSet::from_depth_words(kFull2, 0, {"0"}));
    auto rec = inner_outer(kFull2, kZero, clopen, 0.1, depths, 1e-12);
    CHECK(rec.converged);
    for (const auto& row : rec.rows) {
      CHECK(row.inner_available);
      CHECK(row.inner.psi == row.outer.psi);
    }
  }

  SECTION("FUTURE11 at positive alpha") {
    auto rec = inner_outer(kFull2, kZero, *fut, 0.1, depths, 1e-4);
    double psi_cyl = cgf(kFull2, kZero, r0(), 0.1).psi;
    CHECK_FALSE(rec.rows[0].inner_available);  // B_1 is empty
    for (const auto& row : rec.rows) {
      CHECK(row.outer.psi == psi_cyl);
      if (row.inner_available) {
        CHECK(row.inner.psi >= row.outer.psi);
        // alpha(B_m) = log 2 - log gamma for every m >= 2 on this fixture.
        CHECK_THAT(row.inner_alpha_max,
                   Catch::Matchers::WithinAbs(kLog2 - std::log(kGamma), 1e-10));
      }
    }
    CHECK_FALSE(rec.converged);  // gap ~ 0.09 at depth 6 with tol 1e-4
  }

  SECTION("NEXT0 at negative alpha: both branches converge to the cylinder answer") {
    // The annulus is the single word 0 1^m of mass 2^{-(m+1)}, so the gap
    // between the branches halves per depth: ~1e-4 at depth 6, below 1e-6
    // from depth 14 on.
    auto rec = inner_outer(kFull2, kZero, *make_next0(kFull2), -0.5,
                           {2, 4, 6, 10, 14}, 1e-6);
    double target = cgf(kFull2, kZero, r0(), -0.5).psi;
    CHECK(rec.converged);
    CHECK_THAT(rec.reported, Catch::Matchers::WithinAbs(target, 1e-6));
    double prev_gap = kPosInf;
    for (const auto& row : rec.rows) {
      if (!row.inner_available) continue;
      CHECK(row.inner.psi <= row.outer.psi + 1e-12);
      double gap = std::abs(row.inner.psi - row.outer.psi);
      CHECK(gap < prev_gap);
      if (row.depth == 6) CHECK(gap <= 1e-3);
      prev_gap = gap;
    }
  }
}

TEST_CASE("concentration threshold") {
  auto curve = std::make_shared<CgfCurve>(build_cgf_curve(kFull2, kZero, r0()));

  SECTION("difference quotient plus margin") {
    double psi_04 = curve->evaluator->eval(0.4).psi;
    double psi_02 = curve->evaluator->eval(0.2).psi;
    CHECK_THAT(concentration_threshold(*curve, 0.2, 0.2, 0.0),
               Catch::Matchers::WithinAbs((psi_04 - psi_02) / 0.2, 1e-10));
    CHECK_THAT(concentration_threshold(*curve, 0.2, 0.2),
               Catch::Matchers::WithinAbs((psi_04 - psi_02) / 0.2 + 1.0, 1e-10));
  }

  SECTION("delta -> 0 recovers the slope; at alpha = 0 the Kac mean") {
    CHECK_THAT(concentration_threshold(*curve, 0.3, 1e-6, 0.0),
               Catch::Matchers::WithinAbs(curve->evaluator->eval(0.3).dpsi, 1e-4));
    CHECK_THAT(concentration_threshold(*curve, 0.0, 1e-6, 0.0),
               Catch::Matchers::WithinAbs(2.0, 1e-4));
  }

  SECTION("domain guard") {
    CHECK_THROWS_AS(concentration_threshold(*curve, 0.5, 0.3), CgfDomainError);
    CHECK_THROWS_AS(concentration_threshold(*curve, 0.1, 0.0), std::invalid_argument);
  }
}

TEST_CASE("degenerate rate criterion") {
  CHECK(degenerate_rate_check(kFull2, CylinderSet::from_words(kFull2, {Word{{0, 1}, 0}}), 1.5));
  CHECK_FALSE(degenerate_rate_check(kFull2, r0(), 1.5));
  CHECK_FALSE(degenerate_rate_check(kFull2, CylinderSet::whole_space(kFull2), 1.5));
  CHECK_THROWS_AS(degenerate_rate_check(kFull2, r0(), 0.0), std::invalid_argument);
}
