#include "bdrl/features.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace bdrl {
namespace {

constexpr double kRssiFloor = -100.0;
constexpr double kRssiCeil = 0.0;

double clamp_rssi(double v) { return std::clamp(v, kRssiFloor, kRssiCeil); }

}  // namespace

void FeatureConfig::validate() const {
  if (!use_raw && !use_s1 && !use_s2) {
    throw std::invalid_argument("FeatureConfig: at least one block must be enabled");
  }
  if (beacon_count == 0) {
    throw std::invalid_argument("FeatureConfig: beacon_count must be positive");
  }
  if (use_s2 && range_count == 0) {
    throw std::invalid_argument("FeatureConfig: range_count must be positive");
  }
}

const FeatureBlockSpan* FeatureLayout::find(FeatureBlock kind,
                                            std::size_t beacon) const {
  for (const FeatureBlockSpan& block : blocks) {
    if (block.kind == kind && (kind == FeatureBlock::s1 || block.beacon == beacon)) {
      return &block;
    }
  }
  return nullptr;
}

std::size_t feature_dim(const FeatureConfig& config) {
  config.validate();
  const std::size_t b = config.beacon_count;
  std::size_t dim = 0;
  if (config.use_raw) dim += b;
  if (config.use_s1) {
    const std::size_t unordered = b * (b - 1) / 2;
    dim += config.ordered_s1_pairs ? 2 * unordered : unordered;
  }
  if (config.use_s2) dim += b * config.range_count;
  return dim;
}

std::shared_ptr<const FeatureLayout> make_layout(const FeatureConfig& config) {
  config.validate();
  auto layout = std::make_shared<FeatureLayout>();
  std::size_t offset = 0;
  if (config.use_raw) {
    for (std::size_t b = 0; b < config.beacon_count; ++b) {
      layout->blocks.push_back({FeatureBlock::raw, b, offset, 1});
      offset += 1;
    }
  }
  if (config.use_s1) {
    const std::size_t unordered = config.beacon_count * (config.beacon_count - 1) / 2;
    const std::size_t length =
        config.ordered_s1_pairs ? 2 * unordered : unordered;
    layout->blocks.push_back({FeatureBlock::s1, 0, offset, length});
    offset += length;
  }
  if (config.use_s2) {
    for (std::size_t b = 0; b < config.beacon_count; ++b) {
      layout->blocks.push_back({FeatureBlock::s2, b, offset, config.range_count});
      offset += config.range_count;
    }
  }
  layout->dim = offset;
  return layout;
}

FeatureVector featurize(const FeatureConfig& config,
                        std::span<const double> rssi) {
  return featurize(config, rssi, make_layout(config));
}

FeatureVector featurize(const FeatureConfig& config,
                        std::span<const double> rssi,
                        std::shared_ptr<const FeatureLayout> layout) {
  config.validate();
  if (rssi.size() != config.beacon_count) {
    throw std::invalid_argument("featurize: expected " +
                                std::to_string(config.beacon_count) +
                                " readings, got " + std::to_string(rssi.size()));
  }
  if (!layout || layout->dim != feature_dim(config)) {
    throw std::invalid_argument("featurize: layout does not match config");
  }

  std::vector<double> clamped(rssi.size());
  for (std::size_t i = 0; i < rssi.size(); ++i) clamped[i] = clamp_rssi(rssi[i]);

  FeatureVector fv;
  fv.values.assign(layout->dim, 0.0);
  fv.layout = layout;

  std::size_t offset = 0;
  if (config.use_raw) {
    // [-100, 0] -> [0, 1]
    for (std::size_t b = 0; b < config.beacon_count; ++b) {
      fv.values[offset++] = (clamped[b] - kRssiFloor) / (kRssiCeil - kRssiFloor);
    }
  }
  if (config.use_s1) {
    for (std::size_t i = 0; i < config.beacon_count; ++i) {
      for (std::size_t j = i + 1; j < config.beacon_count; ++j) {
        fv.values[offset++] = (clamped[i] - clamped[j]) / 100.0;
        if (config.ordered_s1_pairs) {
          fv.values[offset++] = (clamped[j] - clamped[i]) / 100.0;
        }
      }
    }
  }
  if (config.use_s2) {
    const double width = (kRssiCeil - kRssiFloor) / static_cast<double>(config.range_count);
    for (std::size_t b = 0; b < config.beacon_count; ++b) {
      auto bucket = static_cast<std::size_t>((clamped[b] - kRssiFloor) / width);
      bucket = std::min(bucket, config.range_count - 1);
      fv.values[offset + bucket] = 1.0;
      offset += config.range_count;
    }
  }
  return fv;
}

std::vector<double> feature_mean(std::span<const FeatureVector> vectors) {
  if (vectors.empty()) {
    throw std::invalid_argument("feature_mean: empty input");
  }
  const std::size_t dim = vectors.front().size();
  std::vector<double> mean(dim, 0.0);
  for (const FeatureVector& fv : vectors) {
    if (fv.size() != dim) {
      throw std::invalid_argument("feature_mean: dimension mismatch");
    }
    for (std::size_t i = 0; i < dim; ++i) mean[i] += fv.values[i];
  }
  const double inv = 1.0 / static_cast<double>(vectors.size());
  for (double& v : mean) v *= inv;
  return mean;
}

}  // namespace bdrl
