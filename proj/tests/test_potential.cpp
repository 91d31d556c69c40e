#include <catch2/catch_amalgamated.hpp>

#include "rtldp/potential.hpp"
#include "rtldp/thermo.hpp"
#include "test_util.hpp"

using namespace rtldp;

TEST_CASE("birkhoff sums") {
  auto full2 = Sft::full2();

  SECTION("n = 0 and constants") {
    auto c = Potential::from_table(full2, 0, 0, {{"0", -testutil::kLog2}, {"1", -testutil::kLog2}});
    Word w{{0, 1, 0, 1}, 0};
    CHECK(birkhoff_sum(c, w, 0) == 0.0);
    CHECK_THAT(birkhoff_sum(c, w, 3), Catch::Matchers::WithinAbs(-3 * testutil::kLog2, 1e-15));
  }

  SECTION("table lookup on one coordinate") {
    auto phi = Potential::bernoulli(full2, {1.0 / 3.0, 2.0 / 3.0});
    Word w{{0, 0, 1}, 0};
    CHECK_THAT(birkhoff_sum(phi, w, 3),
               Catch::Matchers::WithinAbs(2 * std::log(1.0 / 3.0) + std::log(2.0 / 3.0), 1e-14));
  }

  SECTION("word too short is an error") {
    auto phi = Potential::bernoulli(full2, {0.5, 0.5});
    Word w{{0, 1}, 0};
    CHECK_THROWS_AS(birkhoff_sum(phi, w, 3), std::invalid_argument);
    auto two_sided = Potential::from_table(
        full2, -1, 0, {{"00", 0.1}, {"01", 0.2}, {"10", 0.3}, {"11", 0.4}});
    // phi(x) depends on x_{-1} x_0: a word anchored at 0 cannot evaluate j=0.
    CHECK_THROWS_AS(birkhoff_sum(two_sided, w, 1), std::invalid_argument);
    Word anchored{{0, 1, 1}, -1};
    CHECK_THAT(birkhoff_sum(two_sided, anchored, 2),
               Catch::Matchers::WithinAbs(0.2 + 0.4, 1e-15));
  }

  SECTION("cocycle additivity on random fixtures") {
    std::mt19937_64 gen(5);
    for (int trial = 0; trial < 20; ++trial) {
      Sft s = testutil::random_sft(gen, 3);
      Potential phi = testutil::random_potential(gen, s);
      auto words = admissible_words(s, 8);
      const Word& w = words[gen() % words.size()];
      int m = static_cast<int>(gen() % 3), n = static_cast<int>(gen() % 4);
      if (!phi.determines(w, m + n - 1) || !phi.determines(w, m + n)) continue;
      Word shifted{std::vector<int>(w.symbols.begin() + m, w.symbols.end()), 0};
      CHECK_THAT(birkhoff_sum(phi, w, m + n),
                 Catch::Matchers::WithinAbs(
                     birkhoff_sum(phi, w, m) + birkhoff_sum(phi, shifted, n), 1e-12));
    }
  }
}

TEST_CASE("recode to a block presentation") {
  auto full2 = Sft::full2();

  SECTION("identity coding leaves one-coordinate potentials unchanged") {
    auto phi = Potential::bernoulli(full2, {0.3, 0.7});
    auto bc = higher_block(full2, 1);
    auto rec = recode(phi, bc);
    CHECK(rec.span() == 1);
    CHECK(rec.value_by_code(0) == phi.value_by_code(0));
    CHECK(rec.value_by_code(1) == phi.value_by_code(1));
  }

  SECTION("block length below the window span is rejected") {
    auto phi = Potential::from_table(full2, 0, 1,
                                     {{"00", 0.1}, {"01", 0.2}, {"10", 0.3}, {"11", 0.4}});
    CHECK_THROWS_AS(recode(phi, higher_block(full2, 1)), std::invalid_argument);
  }

  SECTION("pressure is invariant under recode") {
    std::mt19937_64 gen(11);
    for (int trial = 0; trial < 10; ++trial) {
      Sft s = testutil::random_sft(gen, 3);
      Potential phi = testutil::random_potential(gen, s, 2);
      auto bc = higher_block(s, phi.span());
      auto rec = recode(phi, bc);
      CHECK_THAT(pressure(bc.target, rec), Catch::Matchers::WithinAbs(pressure(s, phi), 1e-12));
    }
  }

  SECTION("birkhoff sums agree under encode") {
    auto phi = Potential::from_table(full2, 0, 1,
                                     {{"00", 0.1}, {"01", 0.2}, {"10", 0.3}, {"11", 0.4}});
    auto bc = higher_block(full2, 2);
    auto rec = recode(phi, bc);
    for (const Word& w : admissible_words(full2, 6)) {
      Word enc = bc.encode(w);
      for (int n = 0; n <= 4; ++n)
        CHECK_THAT(birkhoff_sum(rec, enc, n),
                   Catch::Matchers::WithinAbs(birkhoff_sum(phi, w, n), 1e-13));
    }
  }

  SECTION("two-sided windows shift to pressure-equal one-sided form") {
    auto two_sided = Potential::from_table(
        full2, -1, 0, {{"00", 0.1}, {"01", 0.2}, {"10", 0.3}, {"11", 0.4}});
    auto one_sided = Potential::from_table(
        full2, 0, 1, {{"00", 0.1}, {"01", 0.2}, {"10", 0.3}, {"11", 0.4}});
    CHECK_THAT(pressure(full2, two_sided),
               Catch::Matchers::WithinAbs(pressure(full2, one_sided), 1e-13));
  }
}

TEST_CASE("potential table validation") {
  auto gold = Sft::golden_mean();
  CHECK_THROWS_AS(Potential::from_table(gold, 0, 1, {{"00", 0.1}, {"01", 0.2}}),
                  std::invalid_argument);  // not total
  CHECK_THROWS_AS(
      Potential::from_table(gold, 0, 1,
                            {{"00", 0.1}, {"01", 0.2}, {"10", 0.3}, {"11", 0.4}}),
      std::invalid_argument);  // 11 inadmissible
  CHECK_THROWS_AS(Potential::bernoulli(gold, {0.5, 0.0}), std::invalid_argument);
  CHECK_THROWS_AS(Potential::from_table(gold, 1, 2, {}), std::invalid_argument);  // l > 0
}
