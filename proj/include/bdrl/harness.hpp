#pragma once

#include <cstdint>
#include <fstream>
#include <optional>
#include <string>
#include <vector>

#include "bdrl/agent.hpp"
#include "bdrl/config.hpp"
#include "bdrl/dataset.hpp"
#include "bdrl/environment.hpp"

namespace bdrl {

// Full description of an experiment, loadable from a flat key=value
// config file.  Every field has a benchmark default, so an empty config
// is valid.
struct ExperimentConfig {
  // World geometry and radio model.  Beacons come from the default
  // jittered-lattice layout unless beacon_file names an `x,y`-per-line
  // layout file.
  int grid_rows = 8;
  int grid_cols = 8;
  double cell_size = 3.048;
  std::string beacon_file;
  double pathloss_n = 2.0;
  double offset_a = -60.0;
  double noise_sigma = 2.0;
  double hearing_radius = 25.0;
  double delta = 3.0;

  // Data source: synthetic by default; alternatively a dataset CSV whose
  // first labeled bundle per cell is held out as the test split.
  std::string dataset_file;
  std::size_t labeled_per_cell = 2;
  std::size_t unlabeled_total = 1000;
  std::size_t test_per_cell = 1;

  TrainConfig train;

  std::vector<std::uint64_t> seeds = {1, 2, 3, 4, 5};
  std::vector<std::uint64_t> checkpoints = {25, 50, 100, 150, 200};
  std::size_t workers = 1;

  // Parses a config, rejecting unknown keys (naming them).  to_kv()
  // emits every tunable with its final value, which is exactly what run
  // manifests record.
  static ExperimentConfig from_kv(const KvFile& kv);
  KvFile to_kv() const;

  GridWorld make_world() const;
  void validate() const;
};

// One line of a comparison report: evaluation of a (mode, seed) run at a
// training checkpoint, on the held-out test split.
struct ReportRow {
  AgentMode mode = AgentMode::supervised;
  std::uint64_t seed = 0;
  std::size_t checkpoint_epoch = 0;
  double mean_reward = 0.0;
  double mean_distance_m = 0.0;
  double start_distance_m = 0.0;  // mean distance at episode start (fixed)
  double end_distance_m = 0.0;    // mean distance at the final checkpoint
};

struct ComparisonReport {
  std::vector<ReportRow> rows;
};

// Streams per-epoch training metrics to a CSV, flushing after every row.
class MetricsWriter {
 public:
  explicit MetricsWriter(const std::string& path);
  void append(const EpochMetrics& metrics);

 private:
  std::ofstream out_;
};

void write_metrics_csv(const std::string& path,
                       std::span<const EpochMetrics> metrics);

// Report CSV I/O (header pinned to the ReportRow fields).
void write_report_csv(const std::string& path, const ComparisonReport& report);
ComparisonReport load_report_csv(const std::string& path);

// Runs the full supervised vs semi-supervised comparison: for every seed
// and both modes, trains on a shared per-seed dataset, evaluates greedy
// episodes on the held-out split at every checkpoint (identical start
// cells across modes and checkpoints), and writes report.csv, per-run
// metrics CSVs, model snapshots, and manifest.txt under out_dir.
//
// out_dir may be empty to skip all file output.  A failed (mode, seed)
// cell is reported on stderr and its rows omitted; remaining cells
// proceed.  Cells run on config.workers threads; results are assembled
// in a fixed order so output is identical for any worker count.
ComparisonReport run_comparison(const ExperimentConfig& config,
                                const std::string& out_dir);

// Trains a single agent (config.train.mode, first seed) and writes
// metrics.csv, snapshots, and manifest.txt under out_dir.
void run_training(const ExperimentConfig& config, const std::string& out_dir);

// Per-mode aggregation of a comparison report across seeds.  The
// semi-supervised row additionally carries its final-checkpoint reward
// as a ratio over the supervised row's; the ratio is absent whenever
// either mode is missing or the supervised reward is zero.
struct SummaryRow {
  AgentMode mode = AgentMode::supervised;
  std::size_t seed_count = 0;
  double start_distance_m = 0.0;
  double end_distance_m = 0.0;
  double improvement_m = 0.0;  // start - end
  double final_mean_reward = 0.0;
  std::optional<double> reward_ratio_vs_supervised;
};

struct Summary {
  std::vector<SummaryRow> rows;
};

Summary summarize(const ComparisonReport& report);
std::string render_summary(const Summary& summary);
void write_summary_csv(const std::string& path, const Summary& summary);

}  // namespace bdrl
