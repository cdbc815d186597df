#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <vector>

#include "bdrl/features.hpp"
#include "bdrl/rng.hpp"

using bdrl::FeatureBlock;
using bdrl::FeatureConfig;
using bdrl::FeatureVector;
using bdrl::SeededRng;

namespace {

std::vector<double> random_scan(SeededRng& rng, std::size_t n,
                                bool with_sentinels = true) {
  std::vector<double> scan(n);
  for (double& v : scan) {
    if (with_sentinels && rng.uniform() < 0.1) {
      v = -200.0;
    } else {
      v = rng.uniform(-100.0, 0.0);
    }
  }
  return scan;
}

}  // namespace

TEST_CASE("default configuration emits 169 features") {
  FeatureConfig config;
  CHECK(bdrl::feature_dim(config) == 169);
  std::vector<double> scan(13, -50.0);
  CHECK(bdrl::featurize(config, scan).size() == 169);
}

TEST_CASE("feature dimensionality follows the block formula") {
  FeatureConfig config;
  config.use_s2 = false;
  CHECK(bdrl::feature_dim(config) == 13);  // raw only

  config.use_s1 = true;
  config.use_s2 = true;
  CHECK(bdrl::feature_dim(config) == 13 + 78 + 156);  // 247

  config.ordered_s1_pairs = true;
  CHECK(bdrl::feature_dim(config) == 13 + 156 + 156);

  config.ordered_s1_pairs = false;
  config.use_s1 = false;
  config.range_count = 20;
  CHECK(bdrl::feature_dim(config) == 13 + 260);  // 273
}

TEST_CASE("feature_dim matches featurize length for every block choice") {
  SeededRng rng(31);
  for (int mask = 1; mask < 8; ++mask) {
    for (const std::size_t ranges : {1u, 5u, 12u, 20u}) {
      FeatureConfig config;
      config.use_raw = (mask & 1) != 0;
      config.use_s1 = (mask & 2) != 0;
      config.use_s2 = (mask & 4) != 0;
      config.range_count = ranges;
      config.beacon_count = 7;
      const auto scan = random_scan(rng, 7);
      CHECK(bdrl::featurize(config, scan).size() == bdrl::feature_dim(config));
    }
  }
}

TEST_CASE("raw features rescale clamped readings into [0, 1]") {
  FeatureConfig config;
  config.beacon_count = 4;
  config.use_s2 = false;
  const std::vector<double> scan{-100.0, -50.0, 0.0, -200.0};
  const FeatureVector fv = bdrl::featurize(config, scan);
  REQUIRE(fv.size() == 4);
  CHECK(fv.values[0] == 0.0);
  CHECK(fv.values[1] == 0.5);
  CHECK(fv.values[2] == 1.0);
  CHECK(fv.values[3] == 0.0);  // sentinel clamps to -100
}

TEST_CASE("S1 features are scaled pairwise differences") {
  FeatureConfig config;
  config.beacon_count = 3;
  config.use_raw = false;
  config.use_s2 = false;
  config.use_s1 = true;
  const std::vector<double> scan{-40.0, -60.0, -90.0};
  const FeatureVector fv = bdrl::featurize(config, scan);
  REQUIRE(fv.size() == 3);
  CHECK(fv.values[0] == doctest::Approx(0.2));   // (-40) - (-60)
  CHECK(fv.values[1] == doctest::Approx(0.5));   // (-40) - (-90)
  CHECK(fv.values[2] == doctest::Approx(0.3));   // (-60) - (-90)
}

TEST_CASE("ordered S1 pairs add the negated mirror differences") {
  FeatureConfig config;
  config.beacon_count = 3;
  config.use_raw = false;
  config.use_s2 = false;
  config.use_s1 = true;
  config.ordered_s1_pairs = true;
  const std::vector<double> scan{-40.0, -60.0, -90.0};
  const FeatureVector fv = bdrl::featurize(config, scan);
  REQUIRE(fv.size() == 6);
  // Each (i, j) difference is immediately followed by its (j, i) mirror.
  CHECK(fv.values[0] == doctest::Approx(0.2));
  CHECK(fv.values[2] == doctest::Approx(0.5));
  CHECK(fv.values[4] == doctest::Approx(0.3));
  for (std::size_t k = 0; k < 3; ++k) {
    CHECK(fv.values[2 * k + 1] == doctest::Approx(-fv.values[2 * k]));
  }
}

TEST_CASE("equal readings zero every S1 feature") {
  FeatureConfig config;
  config.use_s1 = true;
  const std::vector<double> scan(13, -42.0);
  const FeatureVector fv = bdrl::featurize(config, scan);
  const auto* s1 = fv.layout->find(FeatureBlock::s1, 0);
  REQUIRE(s1 != nullptr);
  for (std::size_t i = 0; i < s1->length; ++i) {
    CHECK(fv.values[s1->offset + i] == 0.0);
  }
}

TEST_CASE("a reading of -5 lands in the top S2 bucket") {
  FeatureConfig config;
  std::vector<double> scan(13, -50.0);
  scan[0] = -5.0;
  const FeatureVector fv = bdrl::featurize(config, scan);
  const auto* block = fv.layout->find(FeatureBlock::s2, 0);
  REQUIRE(block != nullptr);
  REQUIRE(block->length == 12);
  for (std::size_t i = 0; i < 11; ++i) CHECK(fv.values[block->offset + i] == 0.0);
  CHECK(fv.values[block->offset + 11] == 1.0);
}

TEST_CASE("sentinels and floor readings land in the bottom S2 bucket") {
  FeatureConfig config;
  std::vector<double> scan(13, -50.0);
  scan[2] = -200.0;
  scan[3] = -100.0;
  const FeatureVector fv = bdrl::featurize(config, scan);
  for (const std::size_t beacon : {2u, 3u}) {
    const auto* block = fv.layout->find(FeatureBlock::s2, beacon);
    REQUIRE(block != nullptr);
    CHECK(fv.values[block->offset] == 1.0);
    for (std::size_t i = 1; i < block->length; ++i) {
      CHECK(fv.values[block->offset + i] == 0.0);
    }
  }
}

TEST_CASE("every S2 block is one-hot for random scans") {
  FeatureConfig config;
  SeededRng rng(77);
  for (int trial = 0; trial < 500; ++trial) {
    const auto scan = random_scan(rng, 13);
    const FeatureVector fv = bdrl::featurize(config, scan);
    for (std::size_t beacon = 0; beacon < 13; ++beacon) {
      const auto* block = fv.layout->find(FeatureBlock::s2, beacon);
      REQUIRE(block != nullptr);
      double sum = 0.0;
      for (std::size_t i = 0; i < block->length; ++i) {
        const double v = fv.values[block->offset + i];
        CHECK((v == 0.0 || v == 1.0));
        sum += v;
      }
      CHECK(sum == 1.0);
    }
  }
}

TEST_CASE("all emitted features lie in [-1, 1]") {
  FeatureConfig config;
  config.use_s1 = true;
  SeededRng rng(78);
  for (int trial = 0; trial < 500; ++trial) {
    const auto scan = random_scan(rng, 13);
    for (const double v : bdrl::featurize(config, scan).values) {
      CHECK(v >= -1.0);
      CHECK(v <= 1.0);
    }
  }
}

TEST_CASE("permuting beacons permutes blocks consistently") {
  FeatureConfig config;
  config.beacon_count = 3;
  config.use_s1 = true;
  const std::vector<double> scan{-30.0, -70.0, -55.0};
  const std::vector<double> swapped{-70.0, -30.0, -55.0};  // swap beacons 0, 1
  const FeatureVector a = bdrl::featurize(config, scan);
  const FeatureVector b = bdrl::featurize(config, swapped);

  auto block_values = [](const FeatureVector& fv, FeatureBlock kind,
                         std::size_t beacon) {
    const auto* block = fv.layout->find(kind, beacon);
    REQUIRE(block != nullptr);
    return std::vector<double>(fv.values.begin() + block->offset,
                               fv.values.begin() + block->offset +
                                   block->length);
  };

  CHECK(block_values(a, FeatureBlock::raw, 0) ==
        block_values(b, FeatureBlock::raw, 1));
  CHECK(block_values(a, FeatureBlock::raw, 1) ==
        block_values(b, FeatureBlock::raw, 0));
  CHECK(block_values(a, FeatureBlock::raw, 2) ==
        block_values(b, FeatureBlock::raw, 2));
  CHECK(block_values(a, FeatureBlock::s2, 0) ==
        block_values(b, FeatureBlock::s2, 1));
  CHECK(block_values(a, FeatureBlock::s2, 2) ==
        block_values(b, FeatureBlock::s2, 2));

  // Pairs (0,1), (0,2), (1,2): the swap negates the first and exchanges
  // the other two.
  const auto s1a = block_values(a, FeatureBlock::s1, 0);
  const auto s1b = block_values(b, FeatureBlock::s1, 0);
  REQUIRE(s1a.size() == 3);
  CHECK(s1b[0] == doctest::Approx(-s1a[0]));
  CHECK(s1b[1] == doctest::Approx(s1a[2]));
  CHECK(s1b[2] == doctest::Approx(s1a[1]));
}

TEST_CASE("configuration validation rejects degenerate setups") {
  FeatureConfig config;
  config.use_raw = false;
  config.use_s2 = false;
  CHECK_THROWS_AS(config.validate(), std::invalid_argument);

  FeatureConfig zero_ranges;
  zero_ranges.range_count = 0;
  CHECK_THROWS_AS(zero_ranges.validate(), std::invalid_argument);

  FeatureConfig no_beacons;
  no_beacons.beacon_count = 0;
  CHECK_THROWS_AS(no_beacons.validate(), std::invalid_argument);
}

TEST_CASE("featurize rejects the wrong number of readings") {
  FeatureConfig config;
  std::vector<double> scan(12, -50.0);
  CHECK_THROWS_AS(bdrl::featurize(config, scan), std::invalid_argument);
}

TEST_CASE("feature_mean averages bundles elementwise") {
  FeatureConfig config;
  config.beacon_count = 2;
  config.use_s2 = false;
  const FeatureVector a = bdrl::featurize(config, std::vector<double>{-100.0, 0.0});
  const FeatureVector b = bdrl::featurize(config, std::vector<double>{0.0, 0.0});
  const FeatureVector c = bdrl::featurize(config, std::vector<double>{-50.0, -100.0});
  const std::vector<FeatureVector> bundle{a, b, c};
  const std::vector<double> mean = bdrl::feature_mean(bundle);
  REQUIRE(mean.size() == 2);
  CHECK(mean[0] == doctest::Approx((0.0 + 1.0 + 0.5) / 3.0));
  CHECK(mean[1] == doctest::Approx((1.0 + 1.0 + 0.0) / 3.0));
}
