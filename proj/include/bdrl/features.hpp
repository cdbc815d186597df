#pragma once

#include <cstddef>
#include <memory>
#include <span>
#include <vector>

namespace bdrl {

// Feature engineering configuration for RSSI scans.
//
// A scan is one RSSI reading per beacon, in dBm.  Readings are clamped to
// [-100, 0] before any transformation; the sentinel -200 ("beacon out of
// range") therefore lands on -100.
struct FeatureConfig {
  bool use_raw = true;    // clamped readings rescaled into [0, 1]
  bool use_s1 = false;    // pairwise reading differences scaled by 1/100
  bool use_s2 = true;     // per-beacon one-hot over equal-width dBm ranges
  std::size_t range_count = 12;    // number of S2 buckets per beacon
  bool ordered_s1_pairs = false;   // emit both (i,j) and (j,i) differences
  std::size_t beacon_count = 13;

  // Throws std::invalid_argument when no block is enabled or a count is
  // zero.
  void validate() const;
};

enum class FeatureBlock { raw, s1, s2 };

// Location of one block inside the flat feature vector.  raw and s2
// blocks belong to a single beacon; an s1 block covers all pairs.
struct FeatureBlockSpan {
  FeatureBlock kind;
  std::size_t beacon = 0;  // owning beacon for raw/s2; unused for s1
  std::size_t offset = 0;
  std::size_t length = 0;
};

// Block map for a given configuration: raw blocks first (one per beacon),
// then the s1 block, then s2 blocks (one per beacon).
struct FeatureLayout {
  std::vector<FeatureBlockSpan> blocks;
  std::size_t dim = 0;

  const FeatureBlockSpan* find(FeatureBlock kind, std::size_t beacon) const;
};

// Total feature dimensionality for the configuration.
std::size_t feature_dim(const FeatureConfig& config);

// Layout shared by every FeatureVector produced from this configuration.
std::shared_ptr<const FeatureLayout> make_layout(const FeatureConfig& config);

// One featurized scan.  The layout is shared between vectors from the
// same configuration, so copies are cheap.
struct FeatureVector {
  std::vector<double> values;
  std::shared_ptr<const FeatureLayout> layout;

  std::size_t size() const { return values.size(); }
};

// Featurizes one scan.  rssi must hold config.beacon_count readings;
// throws std::invalid_argument otherwise.  Out-of-range readings are
// clamped, so any real input is accepted.
FeatureVector featurize(const FeatureConfig& config,
                        std::span<const double> rssi);

// Reuses a previously built layout (avoids re-deriving it per scan).
FeatureVector featurize(const FeatureConfig& config,
                        std::span<const double> rssi,
                        std::shared_ptr<const FeatureLayout> layout);

// Elementwise mean of feature vectors (all must share a size).  Used to
// condense an observation bundle into a single vector.
std::vector<double> feature_mean(std::span<const FeatureVector> vectors);

}  // namespace bdrl
