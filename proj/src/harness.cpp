#include "bdrl/harness.hpp"

#include <algorithm>
#include <atomic>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <map>
#include <set>
#include <sstream>
#include <stdexcept>
#include <thread>

namespace bdrl {
namespace {

const std::set<std::string>& known_keys() {
  static const std::set<std::string> keys = {
      "grid.rows", "grid.cols", "grid.cell_size", "beacons.file",
      "radio.pathloss_n", "radio.offset_a", "radio.noise_sigma",
      "radio.hearing_radius", "reward.delta",
      "data.file", "data.labeled_per_cell", "data.unlabeled_total",
      "data.test_per_cell",
      "features.use_raw", "features.use_s1", "features.use_s2",
      "features.range_count", "features.ordered_s1_pairs",
      "train.mode", "train.gamma", "train.learning_rate", "train.batch_size",
      "train.epochs", "train.horizon", "train.replay_capacity", "train.warmup",
      "train.epsilon_start", "train.epsilon_end",
      "train.epsilon_decay_fraction", "train.q_hidden1", "train.q_hidden2",
      "train.freeze_encoder",
      "vae.pretrain_epochs", "vae.batch_size", "vae.learning_rate",
      "vae.alpha", "vae.latent_dim", "vae.class_hidden", "vae.z_hidden",
      "run.seeds", "run.checkpoints", "run.workers",
  };
  return keys;
}

std::string hex64(std::uint64_t v) {
  char buf[20];
  std::snprintf(buf, sizeof(buf), "%016llx",
                static_cast<unsigned long long>(v));
  return buf;
}

std::size_t get_size(const KvFile& kv, const std::string& key,
                     std::size_t fallback) {
  const std::int64_t v = kv.get_int(key, static_cast<std::int64_t>(fallback));
  if (v < 0) {
    throw std::invalid_argument("config key '" + key + "': must be >= 0");
  }
  return static_cast<std::size_t>(v);
}

}  // namespace

ExperimentConfig ExperimentConfig::from_kv(const KvFile& kv) {
  for (const std::string& key : kv.keys()) {
    if (!known_keys().count(key)) {
      throw std::invalid_argument("unknown config key '" + key + "'");
    }
  }

  ExperimentConfig c;
  c.grid_rows = static_cast<int>(kv.get_int("grid.rows", c.grid_rows));
  c.grid_cols = static_cast<int>(kv.get_int("grid.cols", c.grid_cols));
  c.cell_size = kv.get_double("grid.cell_size", c.cell_size);
  c.beacon_file = kv.get_string("beacons.file", c.beacon_file);
  c.pathloss_n = kv.get_double("radio.pathloss_n", c.pathloss_n);
  c.offset_a = kv.get_double("radio.offset_a", c.offset_a);
  c.noise_sigma = kv.get_double("radio.noise_sigma", c.noise_sigma);
  c.hearing_radius = kv.get_double("radio.hearing_radius", c.hearing_radius);
  c.delta = kv.get_double("reward.delta", c.delta);

  c.dataset_file = kv.get_string("data.file", c.dataset_file);
  c.labeled_per_cell = get_size(kv, "data.labeled_per_cell", c.labeled_per_cell);
  c.unlabeled_total = get_size(kv, "data.unlabeled_total", c.unlabeled_total);
  c.test_per_cell = get_size(kv, "data.test_per_cell", c.test_per_cell);

  c.train.features.use_raw = kv.get_bool("features.use_raw", c.train.features.use_raw);
  c.train.features.use_s1 = kv.get_bool("features.use_s1", c.train.features.use_s1);
  c.train.features.use_s2 = kv.get_bool("features.use_s2", c.train.features.use_s2);
  c.train.features.range_count =
      get_size(kv, "features.range_count", c.train.features.range_count);
  c.train.features.ordered_s1_pairs =
      kv.get_bool("features.ordered_s1_pairs", c.train.features.ordered_s1_pairs);

  c.train.mode = agent_mode_from_string(
      kv.get_string("train.mode", to_string(c.train.mode)));
  c.train.gamma = kv.get_double("train.gamma", c.train.gamma);
  c.train.learning_rate = kv.get_double("train.learning_rate", c.train.learning_rate);
  c.train.batch_size = get_size(kv, "train.batch_size", c.train.batch_size);
  c.train.episodes = get_size(kv, "train.epochs", c.train.episodes);
  c.train.horizon = static_cast<int>(kv.get_int("train.horizon", c.train.horizon));
  c.train.replay_capacity =
      get_size(kv, "train.replay_capacity", c.train.replay_capacity);
  c.train.warmup = get_size(kv, "train.warmup", c.train.warmup);
  c.train.epsilon_start = kv.get_double("train.epsilon_start", c.train.epsilon_start);
  c.train.epsilon_end = kv.get_double("train.epsilon_end", c.train.epsilon_end);
  c.train.epsilon_decay_fraction =
      kv.get_double("train.epsilon_decay_fraction", c.train.epsilon_decay_fraction);
  c.train.q_hidden1 = get_size(kv, "train.q_hidden1", c.train.q_hidden1);
  c.train.q_hidden2 = get_size(kv, "train.q_hidden2", c.train.q_hidden2);
  c.train.freeze_encoder =
      kv.get_bool("train.freeze_encoder", c.train.freeze_encoder);

  c.train.vae_pretrain_epochs =
      get_size(kv, "vae.pretrain_epochs", c.train.vae_pretrain_epochs);
  c.train.vae_batch_size = get_size(kv, "vae.batch_size", c.train.vae_batch_size);
  c.train.vae_learning_rate =
      kv.get_double("vae.learning_rate", c.train.vae_learning_rate);
  c.train.vae_alpha = kv.get_double("vae.alpha", c.train.vae_alpha);
  c.train.vae_latent_dim = get_size(kv, "vae.latent_dim", c.train.vae_latent_dim);
  c.train.vae_class_hidden =
      get_size(kv, "vae.class_hidden", c.train.vae_class_hidden);
  c.train.vae_z_hidden = get_size(kv, "vae.z_hidden", c.train.vae_z_hidden);

  c.seeds = kv.get_int_list("run.seeds", c.seeds);
  c.checkpoints = kv.get_int_list("run.checkpoints", c.checkpoints);
  c.workers = get_size(kv, "run.workers", c.workers);

  c.validate();
  return c;
}

KvFile ExperimentConfig::to_kv() const {
  KvFile kv;
  kv.set_int("grid.rows", grid_rows);
  kv.set_int("grid.cols", grid_cols);
  kv.set_double("grid.cell_size", cell_size);
  kv.set("beacons.file", beacon_file);
  kv.set_double("radio.pathloss_n", pathloss_n);
  kv.set_double("radio.offset_a", offset_a);
  kv.set_double("radio.noise_sigma", noise_sigma);
  kv.set_double("radio.hearing_radius", hearing_radius);
  kv.set_double("reward.delta", delta);
  kv.set("data.file", dataset_file);
  kv.set_int("data.labeled_per_cell", static_cast<std::int64_t>(labeled_per_cell));
  kv.set_int("data.unlabeled_total", static_cast<std::int64_t>(unlabeled_total));
  kv.set_int("data.test_per_cell", static_cast<std::int64_t>(test_per_cell));
  kv.set_bool("features.use_raw", train.features.use_raw);
  kv.set_bool("features.use_s1", train.features.use_s1);
  kv.set_bool("features.use_s2", train.features.use_s2);
  kv.set_int("features.range_count",
             static_cast<std::int64_t>(train.features.range_count));
  kv.set_bool("features.ordered_s1_pairs", train.features.ordered_s1_pairs);
  kv.set("train.mode", to_string(train.mode));
  kv.set_double("train.gamma", train.gamma);
  kv.set_double("train.learning_rate", train.learning_rate);
  kv.set_int("train.batch_size", static_cast<std::int64_t>(train.batch_size));
  kv.set_int("train.epochs", static_cast<std::int64_t>(train.episodes));
  kv.set_int("train.horizon", train.horizon);
  kv.set_int("train.replay_capacity",
             static_cast<std::int64_t>(train.replay_capacity));
  kv.set_int("train.warmup", static_cast<std::int64_t>(train.warmup));
  kv.set_double("train.epsilon_start", train.epsilon_start);
  kv.set_double("train.epsilon_end", train.epsilon_end);
  kv.set_double("train.epsilon_decay_fraction", train.epsilon_decay_fraction);
  kv.set_int("train.q_hidden1", static_cast<std::int64_t>(train.q_hidden1));
  kv.set_int("train.q_hidden2", static_cast<std::int64_t>(train.q_hidden2));
  kv.set_bool("train.freeze_encoder", train.freeze_encoder);
  kv.set_int("vae.pretrain_epochs",
             static_cast<std::int64_t>(train.vae_pretrain_epochs));
  kv.set_int("vae.batch_size", static_cast<std::int64_t>(train.vae_batch_size));
  kv.set_double("vae.learning_rate", train.vae_learning_rate);
  kv.set_double("vae.alpha", train.vae_alpha);
  kv.set_int("vae.latent_dim", static_cast<std::int64_t>(train.vae_latent_dim));
  kv.set_int("vae.class_hidden",
             static_cast<std::int64_t>(train.vae_class_hidden));
  kv.set_int("vae.z_hidden", static_cast<std::int64_t>(train.vae_z_hidden));
  kv.set_int_list("run.seeds", seeds);
  kv.set_int_list("run.checkpoints", checkpoints);
  kv.set_int("run.workers", static_cast<std::int64_t>(workers));
  return kv;
}

GridWorld ExperimentConfig::make_world() const {
  GridWorld world;
  world.rows = grid_rows;
  world.cols = grid_cols;
  world.cell_size = cell_size;
  world.pathloss_n = pathloss_n;
  world.offset_a = offset_a;
  world.noise_sigma = noise_sigma;
  world.hearing_radius = hearing_radius;
  world.delta = delta;
  world.beacons = beacon_file.empty()
                      ? default_beacon_layout(world.width(), world.height())
                      : load_beacon_layout(beacon_file);
  world.validate();
  return world;
}

void ExperimentConfig::validate() const {
  if (grid_rows <= 0 || grid_cols <= 0) {
    throw std::invalid_argument("ExperimentConfig: grid dimensions must be positive");
  }
  if (!(cell_size > 0.0)) {
    throw std::invalid_argument("ExperimentConfig: cell_size must be positive");
  }
  if (dataset_file.empty() && labeled_per_cell == 0) {
    throw std::invalid_argument(
        "ExperimentConfig: synthetic data needs labeled_per_cell >= 1");
  }
  if (dataset_file.empty() && test_per_cell == 0) {
    throw std::invalid_argument(
        "ExperimentConfig: synthetic data needs test_per_cell >= 1");
  }
  if (seeds.empty()) {
    throw std::invalid_argument("ExperimentConfig: run.seeds must be non-empty");
  }
  if (checkpoints.empty()) {
    throw std::invalid_argument("ExperimentConfig: run.checkpoints must be non-empty");
  }
  for (std::size_t i = 0; i < checkpoints.size(); ++i) {
    if (checkpoints[i] == 0) {
      throw std::invalid_argument("ExperimentConfig: checkpoints must be >= 1");
    }
    if (i > 0 && checkpoints[i] <= checkpoints[i - 1]) {
      throw std::invalid_argument(
          "ExperimentConfig: checkpoints must be strictly ascending");
    }
  }
  if (workers == 0) {
    throw std::invalid_argument("ExperimentConfig: run.workers must be >= 1");
  }
  train.validate();
}

MetricsWriter::MetricsWriter(const std::string& path) : out_(path, std::ios::trunc) {
  if (!out_) throw std::runtime_error("MetricsWriter: cannot open " + path);
  out_ << "epoch,mode,mean_reward,mean_distance_m,epsilon,labeled_fraction\n";
  out_.flush();
}

void MetricsWriter::append(const EpochMetrics& m) {
  out_ << m.epoch << ',' << to_string(m.mode) << ','
       << format_double(m.mean_reward) << ',' << format_double(m.mean_distance_m)
       << ',' << format_double(m.epsilon) << ','
       << format_double(m.labeled_fraction) << '\n';
  out_.flush();
  if (!out_) throw std::runtime_error("MetricsWriter: write failed");
}

void write_metrics_csv(const std::string& path,
                       std::span<const EpochMetrics> metrics) {
  MetricsWriter writer(path);
  for (const EpochMetrics& m : metrics) writer.append(m);
}

void write_report_csv(const std::string& path, const ComparisonReport& report) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw std::runtime_error("write_report_csv: cannot open " + path);
  out << "mode,seed,checkpoint_epoch,mean_reward,mean_distance_m,"
         "start_distance_m,end_distance_m\n";
  for (const ReportRow& row : report.rows) {
    out << to_string(row.mode) << ',' << row.seed << ',' << row.checkpoint_epoch
        << ',' << format_double(row.mean_reward) << ','
        << format_double(row.mean_distance_m) << ','
        << format_double(row.start_distance_m) << ','
        << format_double(row.end_distance_m) << '\n';
  }
  if (!out) throw std::runtime_error("write_report_csv: write failed: " + path);
}

ComparisonReport load_report_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("load_report_csv: cannot open " + path);
  std::string line;
  if (!std::getline(in, line)) {
    throw std::runtime_error("load_report_csv: empty file: " + path);
  }
  if (line != "mode,seed,checkpoint_epoch,mean_reward,mean_distance_m,"
              "start_distance_m,end_distance_m") {
    throw std::runtime_error("load_report_csv: unexpected header in " + path);
  }
  ComparisonReport report;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    std::stringstream ss(line);
    std::string field;
    std::vector<std::string> fields;
    while (std::getline(ss, field, ',')) fields.push_back(field);
    if (fields.size() != 7) {
      throw std::runtime_error("load_report_csv: " + path + ":" +
                               std::to_string(line_no) + ": expected 7 fields");
    }
    ReportRow row;
    try {
      row.mode = agent_mode_from_string(fields[0]);
      row.seed = std::stoull(fields[1]);
      row.checkpoint_epoch = std::stoull(fields[2]);
      row.mean_reward = std::stod(fields[3]);
      row.mean_distance_m = std::stod(fields[4]);
      row.start_distance_m = std::stod(fields[5]);
      row.end_distance_m = std::stod(fields[6]);
    } catch (const std::exception& e) {
      throw std::runtime_error("load_report_csv: " + path + ":" +
                               std::to_string(line_no) + ": " + e.what());
    }
    report.rows.push_back(row);
  }
  return report;
}

namespace {

struct EvalSummary {
  double mean_reward = 0.0;
  double mean_distance = 0.0;
  double mean_start = 0.0;
};

EvalSummary evaluate(const GridWorld& world, QFunction& q,
                     const std::vector<FingerprintSample>& test,
                     const FeatureConfig& features, int horizon,
                     std::span<const GridCell> starts) {
  EvalSummary summary;
  if (test.empty()) return summary;
  for (std::size_t i = 0; i < test.size(); ++i) {
    const EvalEpisode ep =
        run_greedy_episode(world, test[i], q, features, horizon, starts[i]);
    summary.mean_reward += ep.total_reward;
    summary.mean_distance += ep.final_distance_m;
    summary.mean_start += ep.start_distance_m;
  }
  const auto n = static_cast<double>(test.size());
  summary.mean_reward /= n;
  summary.mean_distance /= n;
  summary.mean_start /= n;
  return summary;
}

// Splits a file-backed dataset: the first labeled bundle of each cell
// becomes the held-out test split.
void split_file_dataset(std::vector<FingerprintSample> all,
                        std::vector<FingerprintSample>& train_out,
                        std::vector<FingerprintSample>& test_out) {
  std::set<std::pair<int, int>> held_out;
  for (FingerprintSample& sample : all) {
    if (sample.labeled()) {
      const std::pair<int, int> key{sample.label->row, sample.label->col};
      if (!held_out.count(key)) {
        held_out.insert(key);
        test_out.push_back(std::move(sample));
        continue;
      }
    }
    train_out.push_back(std::move(sample));
  }
}

struct CellResult {
  std::vector<ReportRow> rows;
  std::uint64_t train_hash = 0;
  std::uint64_t test_hash = 0;
  std::string error;
};

CellResult run_cell(const ExperimentConfig& config, const GridWorld& world,
                    AgentMode mode, std::uint64_t seed,
                    const std::string& out_dir) {
  CellResult result;

  TrainConfig tc = config.train;
  tc.mode = mode;
  tc.features.beacon_count = world.beacons.size();
  tc.episodes = config.checkpoints.back();

  std::vector<FingerprintSample> train_data;
  std::vector<FingerprintSample> test_data;
  if (config.dataset_file.empty()) {
    SeededRng data_rng = SeededRng(seed).derive("dataset");
    train_data = generate_dataset(world, config.labeled_per_cell,
                                  config.unlabeled_total, data_rng);
    SeededRng test_rng = SeededRng(seed).derive("test-data");
    test_data = generate_dataset(world, config.test_per_cell, 0, test_rng);
  } else {
    split_file_dataset(load_dataset(config.dataset_file), train_data, test_data);
  }
  result.train_hash = dataset_hash(train_data);
  result.test_hash = dataset_hash(test_data);

  // Evaluation start cells: derived from the seed alone, so every mode
  // and checkpoint of this seed sees identical starts.
  SeededRng start_rng = SeededRng(seed).derive("eval-starts");
  std::vector<GridCell> starts;
  starts.reserve(test_data.size());
  for (std::size_t i = 0; i < test_data.size(); ++i) {
    starts.push_back(world.class_to_cell(static_cast<int>(
        start_rng.uniform_int(static_cast<std::uint64_t>(world.cell_count())))));
  }

  Trainer trainer(world, std::move(train_data), tc, seed);

  std::optional<MetricsWriter> writer;
  if (!out_dir.empty()) {
    writer.emplace(out_dir + "/metrics_" + to_string(mode) + "_seed" +
                   std::to_string(seed) + ".csv");
  }

  for (const std::uint64_t checkpoint : config.checkpoints) {
    while (trainer.epochs_run() < checkpoint) {
      const EpochMetrics m = trainer.run_epoch();
      if (writer) writer->append(m);
    }
    const EvalSummary eval = evaluate(world, trainer.q(), test_data,
                                      tc.features, tc.horizon, starts);
    ReportRow row;
    row.mode = mode;
    row.seed = seed;
    row.checkpoint_epoch = checkpoint;
    row.mean_reward = eval.mean_reward;
    row.mean_distance_m = eval.mean_distance;
    row.start_distance_m = eval.mean_start;
    result.rows.push_back(row);
  }
  const double end_distance = result.rows.back().mean_distance_m;
  for (ReportRow& row : result.rows) row.end_distance_m = end_distance;

  if (!out_dir.empty()) {
    trainer.q().save(out_dir + "/q_" + to_string(mode) + "_seed" +
                     std::to_string(seed));
    if (VaeModel* vae = trainer.vae()) {
      vae->save(out_dir + "/vae_seed" + std::to_string(seed));
    }
  }
  return result;
}

void write_manifest(const ExperimentConfig& config, const GridWorld& world,
                    const std::string& kind,
                    std::span<const std::uint64_t> seeds,
                    const std::map<std::uint64_t, std::pair<std::uint64_t, std::uint64_t>>& hashes,
                    std::size_t failed_cells, const std::string& path) {
  KvFile mf = config.to_kv();
  mf.set("artifact.kind", kind);
  mf.set_int("artifact.format_version", 1);
  mf.set("artifact.code_version", "bdrl 1.0.0");
  mf.set_int("derived.beacon_count",
             static_cast<std::int64_t>(world.beacons.size()));
  FeatureConfig features = config.train.features;
  features.beacon_count = world.beacons.size();
  mf.set_int("derived.feature_dim",
             static_cast<std::int64_t>(feature_dim(features)));
  mf.set_int("derived.state_dim",
             static_cast<std::int64_t>(state_dim(world, features)));
  mf.set("notes.epoch_definition", "one pass over the episode schedule");
  for (const std::uint64_t seed : seeds) {
    const auto it = hashes.find(seed);
    if (it == hashes.end()) continue;
    mf.set("data.train_hash_seed" + std::to_string(seed), hex64(it->second.first));
    mf.set("data.test_hash_seed" + std::to_string(seed), hex64(it->second.second));
  }
  mf.set_int("result.failed_cells", static_cast<std::int64_t>(failed_cells));
  mf.write_file(path);
}

}  // namespace

ComparisonReport run_comparison(const ExperimentConfig& config,
                                const std::string& out_dir) {
  config.validate();
  const GridWorld world = config.make_world();
  if (!out_dir.empty()) {
    std::error_code ec;
    std::filesystem::create_directories(out_dir, ec);
    if (ec) throw std::runtime_error("run_comparison: cannot create " + out_dir);
  }

  struct Cell {
    AgentMode mode;
    std::uint64_t seed;
  };
  std::vector<Cell> cells;
  for (const AgentMode mode :
       {AgentMode::supervised, AgentMode::semi_supervised}) {
    for (const std::uint64_t seed : config.seeds) cells.push_back({mode, seed});
  }

  std::vector<CellResult> results(cells.size());
  std::atomic<std::size_t> next{0};
  auto work = [&] {
    while (true) {
      const std::size_t i = next.fetch_add(1);
      if (i >= cells.size()) break;
      try {
        results[i] = run_cell(config, world, cells[i].mode, cells[i].seed,
                              out_dir);
      } catch (const std::exception& e) {
        results[i].error = e.what();
      }
    }
  };
  const std::size_t thread_count = std::min(config.workers, cells.size());
  if (thread_count <= 1) {
    work();
  } else {
    std::vector<std::thread> pool;
    pool.reserve(thread_count);
    for (std::size_t t = 0; t < thread_count; ++t) pool.emplace_back(work);
    for (std::thread& t : pool) t.join();
  }

  ComparisonReport report;
  std::map<std::uint64_t, std::pair<std::uint64_t, std::uint64_t>> hashes;
  std::size_t failed = 0;
  for (std::size_t i = 0; i < cells.size(); ++i) {
    if (!results[i].error.empty()) {
      ++failed;
      std::cerr << "run_comparison: cell (" << to_string(cells[i].mode)
                << ", seed " << cells[i].seed << ") failed: " << results[i].error
                << '\n';
      continue;
    }
    hashes[cells[i].seed] = {results[i].train_hash, results[i].test_hash};
    report.rows.insert(report.rows.end(), results[i].rows.begin(),
                       results[i].rows.end());
  }

  if (!out_dir.empty()) {
    write_report_csv(out_dir + "/report.csv", report);
    write_manifest(config, world, "comparison", config.seeds, hashes, failed,
                   out_dir + "/manifest.txt");
  }
  return report;
}

void run_training(const ExperimentConfig& config, const std::string& out_dir) {
  config.validate();
  const GridWorld world = config.make_world();
  if (out_dir.empty()) {
    throw std::invalid_argument("run_training: output directory required");
  }
  std::error_code ec;
  std::filesystem::create_directories(out_dir, ec);
  if (ec) throw std::runtime_error("run_training: cannot create " + out_dir);

  const std::uint64_t seed = config.seeds.front();
  TrainConfig tc = config.train;
  tc.features.beacon_count = world.beacons.size();

  std::vector<FingerprintSample> train_data;
  if (config.dataset_file.empty()) {
    SeededRng data_rng = SeededRng(seed).derive("dataset");
    train_data = generate_dataset(world, config.labeled_per_cell,
                                  config.unlabeled_total, data_rng);
  } else {
    train_data = load_dataset(config.dataset_file);
  }
  const std::uint64_t train_hash = dataset_hash(train_data);

  Trainer trainer(world, std::move(train_data), tc, seed);
  MetricsWriter writer(out_dir + "/metrics.csv");
  for (std::size_t epoch = 0; epoch < tc.episodes; ++epoch) {
    writer.append(trainer.run_epoch());
  }
  trainer.q().save(out_dir + "/q");
  if (VaeModel* vae = trainer.vae()) vae->save(out_dir + "/vae");

  std::map<std::uint64_t, std::pair<std::uint64_t, std::uint64_t>> hashes;
  hashes[seed] = {train_hash, 0};
  write_manifest(config, world, "train", {&seed, 1}, hashes, 0,
                 out_dir + "/manifest.txt");
}

Summary summarize(const ComparisonReport& report) {
  Summary summary;
  for (const AgentMode mode :
       {AgentMode::supervised, AgentMode::semi_supervised}) {
    // Final-checkpoint row per seed.
    std::map<std::uint64_t, const ReportRow*> final_rows;
    for (const ReportRow& row : report.rows) {
      if (row.mode != mode) continue;
      const ReportRow*& slot = final_rows[row.seed];
      if (slot == nullptr || row.checkpoint_epoch > slot->checkpoint_epoch) {
        slot = &row;
      }
    }
    if (final_rows.empty()) continue;
    SummaryRow out;
    out.mode = mode;
    out.seed_count = final_rows.size();
    for (const auto& [seed, row] : final_rows) {
      out.start_distance_m += row->start_distance_m;
      out.end_distance_m += row->end_distance_m;
      out.final_mean_reward += row->mean_reward;
    }
    const auto n = static_cast<double>(final_rows.size());
    out.start_distance_m /= n;
    out.end_distance_m /= n;
    out.final_mean_reward /= n;
    out.improvement_m = out.start_distance_m - out.end_distance_m;
    summary.rows.push_back(out);
  }

  const SummaryRow* supervised = nullptr;
  SummaryRow* semi = nullptr;
  for (SummaryRow& row : summary.rows) {
    if (row.mode == AgentMode::supervised) supervised = &row;
    if (row.mode == AgentMode::semi_supervised) semi = &row;
  }
  if (supervised != nullptr && semi != nullptr &&
      supervised->final_mean_reward != 0.0) {
    semi->reward_ratio_vs_supervised =
        semi->final_mean_reward / supervised->final_mean_reward;
  }
  return summary;
}

std::string render_summary(const Summary& summary) {
  char buf[176];
  std::string out =
      "mode             seeds  start_m    end_m      improvement_m  "
      "final_reward  reward_ratio\n";
  for (const SummaryRow& row : summary.rows) {
    std::string ratio = "-";
    if (row.reward_ratio_vs_supervised) {
      std::snprintf(buf, sizeof(buf), "%.3f", *row.reward_ratio_vs_supervised);
      ratio = buf;
    }
    std::snprintf(buf, sizeof(buf),
                  "%-16s %5zu  %-9.3f  %-9.3f  %-13.3f  %-12.3f  %s\n",
                  to_string(row.mode).c_str(), row.seed_count,
                  row.start_distance_m, row.end_distance_m, row.improvement_m,
                  row.final_mean_reward, ratio.c_str());
    out += buf;
  }
  return out;
}

void write_summary_csv(const std::string& path, const Summary& summary) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw std::runtime_error("write_summary_csv: cannot open " + path);
  out << "mode,seed_count,start_distance_m,end_distance_m,improvement_m,"
         "final_mean_reward,reward_ratio_vs_supervised\n";
  for (const SummaryRow& row : summary.rows) {
    out << to_string(row.mode) << ',' << row.seed_count << ','
        << format_double(row.start_distance_m) << ','
        << format_double(row.end_distance_m) << ','
        << format_double(row.improvement_m) << ','
        << format_double(row.final_mean_reward) << ',';
    if (row.reward_ratio_vs_supervised) {
      out << format_double(*row.reward_ratio_vs_supervised);
    }
    out << '\n';
  }
  if (!out) throw std::runtime_error("write_summary_csv: write failed: " + path);
}

}  // namespace bdrl
