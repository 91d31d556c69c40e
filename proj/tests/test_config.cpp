#include <catch2/catch_amalgamated.hpp>

#include "rtldp/config.hpp"
#include "rtldp/thermo.hpp"
#include "test_util.hpp"

using namespace rtldp;

TEST_CASE("config parsing") {
  SECTION("named fixtures") {
    json j = {{"sft", {{"name", "FULL2"}}}, {"potential", {{"name", "zero"}}}};
    auto c = parse_config(j);
    CHECK(c.sft.alphabet_size() == 2);
    CHECK(c.seed == 20250809);  // default
    CHECK_FALSE(c.hash.empty());
  }

  SECTION("unknown keys are rejected, everywhere") {
    CHECK_THROWS_AS(parse_config({{"sft", {{"name", "FULL2"}}}, {"typo", 1}}), ConfigError);
    CHECK_THROWS_AS(parse_config({{"sft", {{"name", "FULL2"}, {"bogus", 1}}}}), ConfigError);
    CHECK_THROWS_AS(
        parse_config({{"sft", {{"name", "FULL2"}}}, {"alpha_grid", {{"stray", 2}}}}),
        ConfigError);
  }

  SECTION("missing sft is an error") {
    CHECK_THROWS_AS(parse_config(json::object()), ConfigError);
  }

  SECTION("explicit transitions and bernoulli") {
    json j = {{"sft", {{"alphabet_size", 2}, {"transitions", {{1, 1}, {1, 0}}}}},
              {"potential", {{"name", "bernoulli"}, {"probabilities", {0.3, 0.7}}}}};
    auto c = parse_config(j);
    CHECK(c.sft == Sft::golden_mean());
  }

  SECTION("forbidden words compile to the golden-mean shift") {
    json j = {{"sft", {{"alphabet_size", 2}, {"forbidden_words", {"11"}}}}};
    auto c = parse_config(j);
    CHECK(c.sft == Sft::golden_mean());
    CHECK_THAT(pressure(c.sft, Potential::zero(c.sft)),
               Catch::Matchers::WithinAbs(std::log(testutil::kGamma), 1e-12));
  }

  SECTION("longer forbidden words build a block presentation") {
    json j = {{"sft", {{"alphabet_size", 2}, {"forbidden_words", {"11", "000"}}}}};
    auto c = parse_config(j);
    // States are 2-words avoiding 11; 000 kills the 00 self-loop.
    CHECK(c.sft.alphabet_size() == 3);
    double p = pressure(c.sft, Potential::zero(c.sft));
    CHECK(p > 0.0);
    CHECK(p < std::log(testutil::kGamma));
  }

  SECTION("targets") {
    json j = {{"sft", {{"name", "FULL2"}}},
              {"target", {{"kind", "cylinder"}, {"words", {"01", "10"}}}}};
    auto c = parse_config(j);
    REQUIRE(c.target.has_value());
    CHECK_FALSE(c.target->is_open());
    CHECK(c.target->cylinder->size() == 2);

    json j2 = {{"sft", {{"name", "FULL2"}}},
               {"target", {{"kind", "open_set"}, {"name", "FUTURE11"}}}};
    auto c2 = parse_config(j2);
    CHECK(c2.target->is_open());
    CHECK(c2.target->open_set->name() == "FUTURE11");

    json j3 = {{"sft", {{"name", "FULL2"}}},
               {"target",
                {{"kind", "open_set"},
                 {"pattern",
                  {{"prefix", "0"}, {"pattern", "0"}, {"direction", "future"}}}}}};
    CHECK(parse_config(j3).target->is_open());

    json bad = {{"sft", {{"name", "FULL2"}}}, {"target", {{"kind", "nonsense"}}}};
    CHECK_THROWS_AS(parse_config(bad), ConfigError);
  }

  SECTION("depth-form cylinder words must have odd length 2m+1") {
    json j = {{"sft", {{"name", "FULL2"}}},
              {"target", {{"kind", "cylinder"}, {"depth", 1}, {"words", {"01"}}}}};
    CHECK_THROWS_AS(parse_config(j), std::invalid_argument);
  }
}

TEST_CASE("config hash") {
  json j = {{"sft", {{"name", "FULL2"}}}, {"seed", 1}};
  auto h1 = config_hash(j);
  CHECK(h1 == config_hash(j));  // stable
  json j2 = j;
  j2["seed"] = 2;
  CHECK(h1 != config_hash(j2));  // seed participates
  json j3 = j;
  j3["out_dir"] = "elsewhere";
  j3["threads"] = 8;
  CHECK(h1 == config_hash(j3));  // execution details do not
}
