#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "bdrl/environment.hpp"
#include "bdrl/rng.hpp"

namespace bdrl {

// Fingerprint dataset CSV:
//
//   row,col,rssi_1,...,rssi_N
//
// One scan per line; row/col are the labelled grid cell or both empty for
// unlabeled scans.  RSSI values must lie in [-100, 0] or equal the
// out-of-range sentinel -200.  Three consecutive lines with the same
// label (or consecutively unlabeled) form one bundle; leftover lines that
// do not complete a bundle are dropped.
//
// load_dataset throws std::runtime_error naming the offending line for
// any malformed content.
std::vector<FingerprintSample> load_dataset(const std::string& path);

// Writes samples in the same format (three lines per bundle).
// beacon_count fixes the header width; every scan must match it.
void save_dataset(const std::string& path,
                  std::span<const FingerprintSample> samples,
                  std::size_t beacon_count);

// Synthetic dataset for a world: `labeled_per_cell` bundles scanned at
// each cell centre (cells in row-major order), then `unlabeled_total`
// bundles at uniform random floor positions.  All scans share the world's
// noise model and draw from rng in this fixed order.
std::vector<FingerprintSample> generate_dataset(const GridWorld& world,
                                                std::size_t labeled_per_cell,
                                                std::size_t unlabeled_total,
                                                SeededRng& rng);

// Order-sensitive 64-bit digest of a sample list (FNV-1a over a canonical
// byte serialisation).  Used to record train/test splits in manifests.
std::uint64_t dataset_hash(std::span<const FingerprintSample> samples);

}  // namespace bdrl
