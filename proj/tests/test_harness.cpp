#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "bdrl/dataset.hpp"
#include "bdrl/harness.hpp"
#include "bdrl/rng.hpp"
#include "test_util.hpp"

using bdrl::AgentMode;
using bdrl::ComparisonReport;
using bdrl::ExperimentConfig;
using bdrl::KvFile;
using bdrl::ReportRow;
using bdrl::SeededRng;
using bdrl::Summary;

namespace {

std::string slurp(const std::string& path) {
  std::ifstream in(path);
  REQUIRE(in.good());
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

// Small, fast experiment used by the end-to-end harness tests.
ExperimentConfig tiny_config() {
  ExperimentConfig c;
  c.grid_rows = 2;
  c.grid_cols = 2;
  c.labeled_per_cell = 1;
  c.unlabeled_total = 2;
  c.test_per_cell = 1;
  c.seeds = {4};
  c.checkpoints = {1, 2};
  c.train.horizon = 3;
  c.train.batch_size = 4;
  c.train.warmup = 4;
  c.train.q_hidden1 = 8;
  c.train.q_hidden2 = 6;
  c.train.vae_pretrain_epochs = 2;
  c.train.vae_batch_size = 4;
  c.train.vae_latent_dim = 2;
  c.train.vae_class_hidden = 8;
  c.train.vae_z_hidden = 6;
  return c;
}

ReportRow make_row(AgentMode mode, std::uint64_t seed, std::size_t checkpoint,
                   double reward, double dist, double start, double end) {
  ReportRow row;
  row.mode = mode;
  row.seed = seed;
  row.checkpoint_epoch = checkpoint;
  row.mean_reward = reward;
  row.mean_distance_m = dist;
  row.start_distance_m = start;
  row.end_distance_m = end;
  return row;
}

}  // namespace

TEST_CASE("experiment config round trips through key=value form") {
  ExperimentConfig base;
  base.grid_rows = 5;
  base.noise_sigma = 1.25;
  base.train.mode = AgentMode::semi_supervised;
  base.train.features.use_s1 = true;
  base.train.vae_alpha = 0.5;
  base.seeds = {7, 9};
  base.checkpoints = {10, 20};
  base.workers = 3;

  const ExperimentConfig back = ExperimentConfig::from_kv(base.to_kv());
  CHECK(back.grid_rows == 5);
  CHECK(back.grid_cols == 8);
  CHECK(back.noise_sigma == 1.25);
  CHECK(back.train.mode == AgentMode::semi_supervised);
  CHECK(back.train.features.use_s1);
  CHECK(back.train.vae_alpha == 0.5);
  CHECK(back.seeds == std::vector<std::uint64_t>{7, 9});
  CHECK(back.checkpoints == std::vector<std::uint64_t>{10, 20});
  CHECK(back.workers == 3);
  // The serialised forms agree key for key.
  CHECK(base.to_kv().serialize() == back.to_kv().serialize());

  const ExperimentConfig defaults = ExperimentConfig::from_kv(KvFile{});
  CHECK(defaults.grid_rows == 8);
  CHECK(defaults.labeled_per_cell == 2);
  CHECK(defaults.unlabeled_total == 1000);
  CHECK(defaults.seeds == std::vector<std::uint64_t>{1, 2, 3, 4, 5});
  CHECK(defaults.checkpoints ==
        std::vector<std::uint64_t>{25, 50, 100, 150, 200});
}

TEST_CASE("unknown and malformed config keys are rejected by name") {
  CHECK_THROWS_WITH_AS(
      ExperimentConfig::from_kv(KvFile::parse_text("bogus.key = 1\n")),
      doctest::Contains("bogus.key"), std::invalid_argument);
  CHECK_THROWS_WITH_AS(
      ExperimentConfig::from_kv(
          KvFile::parse_text("data.labeled_per_cell = -1\n")),
      doctest::Contains("data.labeled_per_cell"), std::invalid_argument);
  CHECK_THROWS_AS(
      ExperimentConfig::from_kv(KvFile::parse_text("train.mode = sideways\n")),
      std::invalid_argument);
  CHECK_THROWS_AS(
      ExperimentConfig::from_kv(KvFile::parse_text("grid.rows = many\n")),
      std::invalid_argument);
}

TEST_CASE("experiment validation rejects degenerate run plans") {
  const auto expect_invalid = [](auto mutate) {
    ExperimentConfig c = tiny_config();
    mutate(c);
    CHECK_THROWS_AS(c.validate(), std::invalid_argument);
  };
  expect_invalid([](ExperimentConfig& c) { c.grid_rows = 0; });
  expect_invalid([](ExperimentConfig& c) { c.cell_size = 0.0; });
  expect_invalid([](ExperimentConfig& c) { c.labeled_per_cell = 0; });
  expect_invalid([](ExperimentConfig& c) { c.test_per_cell = 0; });
  expect_invalid([](ExperimentConfig& c) { c.seeds.clear(); });
  expect_invalid([](ExperimentConfig& c) { c.checkpoints.clear(); });
  expect_invalid([](ExperimentConfig& c) { c.checkpoints = {0}; });
  expect_invalid([](ExperimentConfig& c) { c.checkpoints = {5, 5}; });
  expect_invalid([](ExperimentConfig& c) { c.checkpoints = {5, 3}; });
  expect_invalid([](ExperimentConfig& c) { c.workers = 0; });
  expect_invalid([](ExperimentConfig& c) { c.train.gamma = 1.0; });
  CHECK_NOTHROW(tiny_config().validate());

  // A file-backed dataset lifts the synthetic-count requirements.
  ExperimentConfig file_backed = tiny_config();
  file_backed.dataset_file = "whatever.csv";
  file_backed.labeled_per_cell = 0;
  file_backed.test_per_cell = 0;
  CHECK_NOTHROW(file_backed.validate());
}

TEST_CASE("make_world applies the radio and geometry settings") {
  ExperimentConfig c = tiny_config();
  c.pathloss_n = 3.0;
  c.offset_a = -55.0;
  c.noise_sigma = 0.25;
  c.hearing_radius = 40.0;
  c.delta = 6.0;
  const auto world = c.make_world();
  CHECK(world.rows == 2);
  CHECK(world.cols == 2);
  CHECK(world.pathloss_n == 3.0);
  CHECK(world.offset_a == -55.0);
  CHECK(world.noise_sigma == 0.25);
  CHECK(world.hearing_radius == 40.0);
  CHECK(world.delta == 6.0);
  CHECK(world.beacons.size() == 13);  // default jittered lattice
}

TEST_CASE("beacon layout files override the default lattice") {
  bdrl_test::TempDir dir;
  const std::string path = dir.file("beacons.txt");
  {
    std::ofstream out(path);
    out << "# corner beacons\n"
        << "\n"
        << "1.5, 2.25\n"
        << "0,0\n";
  }
  const auto layout = bdrl::load_beacon_layout(path);
  REQUIRE(layout.size() == 2);
  CHECK(layout[0][0] == 1.5);
  CHECK(layout[0][1] == 2.25);
  CHECK(layout[1][0] == 0.0);

  ExperimentConfig c = tiny_config();
  c.beacon_file = path;
  CHECK(c.make_world().beacons.size() == 2);

  const std::string bad = dir.file("bad.txt");
  {
    std::ofstream out(bad);
    out << "0,0\n1,1\nnot a beacon\n";
  }
  CHECK_THROWS_WITH_AS(bdrl::load_beacon_layout(bad), doctest::Contains(":3"),
                       std::runtime_error);

  const std::string empty = dir.file("empty.txt");
  {
    std::ofstream out(empty);
    out << "# nothing\n";
  }
  CHECK_THROWS_AS(bdrl::load_beacon_layout(empty), std::runtime_error);

  CHECK_THROWS_WITH_AS(bdrl::load_beacon_layout(dir.file("missing.txt")),
                       doctest::Contains("missing.txt"), std::runtime_error);
}

TEST_CASE("report CSVs round trip exactly") {
  bdrl_test::TempDir dir;
  ComparisonReport report;
  report.rows.push_back(make_row(AgentMode::supervised, 1, 25, 1.0 / 3.0, 7.5,
                                 9.25, 7.0));
  report.rows.push_back(make_row(AgentMode::semi_supervised, 2, 200, -0.125,
                                 4.3, 12.8, 4.3));

  const std::string path = dir.file("report.csv");
  bdrl::write_report_csv(path, report);
  const ComparisonReport back = bdrl::load_report_csv(path);
  REQUIRE(back.rows.size() == 2);
  for (std::size_t i = 0; i < 2; ++i) {
    CHECK(back.rows[i].mode == report.rows[i].mode);
    CHECK(back.rows[i].seed == report.rows[i].seed);
    CHECK(back.rows[i].checkpoint_epoch == report.rows[i].checkpoint_epoch);
    CHECK(back.rows[i].mean_reward == report.rows[i].mean_reward);
    CHECK(back.rows[i].mean_distance_m == report.rows[i].mean_distance_m);
    CHECK(back.rows[i].start_distance_m == report.rows[i].start_distance_m);
    CHECK(back.rows[i].end_distance_m == report.rows[i].end_distance_m);
  }

  CHECK_THROWS_AS(bdrl::load_report_csv(dir.file("absent.csv")),
                  std::runtime_error);

  const std::string bad_header = dir.file("h.csv");
  {
    std::ofstream out(bad_header);
    out << "who,what\n";
  }
  CHECK_THROWS_WITH_AS(bdrl::load_report_csv(bad_header),
                       doctest::Contains("header"), std::runtime_error);

  const std::string short_row = dir.file("s.csv");
  {
    std::ofstream out(short_row);
    out << "mode,seed,checkpoint_epoch,mean_reward,mean_distance_m,"
           "start_distance_m,end_distance_m\n"
        << "supervised,1,25\n";
  }
  CHECK_THROWS_WITH_AS(bdrl::load_report_csv(short_row), doctest::Contains(":2"),
                       std::runtime_error);

  const std::string bad_value = dir.file("v.csv");
  {
    std::ofstream out(bad_value);
    out << "mode,seed,checkpoint_epoch,mean_reward,mean_distance_m,"
           "start_distance_m,end_distance_m\n"
        << "supervised,1,25,abc,1,2,3\n";
  }
  CHECK_THROWS_AS(bdrl::load_report_csv(bad_value), std::runtime_error);
}

TEST_CASE("metrics CSVs pin their header and row shape") {
  bdrl_test::TempDir dir;
  std::vector<bdrl::EpochMetrics> metrics(2);
  metrics[0].epoch = 1;
  metrics[0].mode = AgentMode::supervised;
  metrics[0].mean_reward = 0.5;
  metrics[0].mean_distance_m = 3.25;
  metrics[0].epsilon = 1.0;
  metrics[0].labeled_fraction = 1.0;
  metrics[1].epoch = 2;
  metrics[1].mode = AgentMode::supervised;
  metrics[1].mean_reward = -0.25;
  metrics[1].mean_distance_m = 2.5;
  metrics[1].epsilon = 0.9;
  metrics[1].labeled_fraction = 1.0;

  const std::string path = dir.file("metrics.csv");
  bdrl::write_metrics_csv(path, metrics);
  const std::string text = slurp(path);
  CHECK(text ==
        "epoch,mode,mean_reward,mean_distance_m,epsilon,labeled_fraction\n"
        "1,supervised,0.5,3.25,1,1\n"
        "2,supervised,-0.25,2.5,0.90000000000000002,1\n");
}

TEST_CASE("summaries aggregate the final checkpoint across seeds") {
  ComparisonReport report;
  report.rows.push_back(
      make_row(AgentMode::supervised, 1, 1, 0.1, 8.0, 9.4, 7.4));
  report.rows.push_back(
      make_row(AgentMode::supervised, 1, 2, 0.5, 7.4, 9.4, 7.4));
  report.rows.push_back(
      make_row(AgentMode::supervised, 2, 2, 0.7, 7.4, 9.4, 7.4));
  report.rows.push_back(
      make_row(AgentMode::semi_supervised, 1, 2, 1.2, 4.3, 12.8, 4.3));

  const Summary summary = bdrl::summarize(report);
  REQUIRE(summary.rows.size() == 2);

  const auto& sup = summary.rows[0];
  CHECK(sup.mode == AgentMode::supervised);
  CHECK(sup.seed_count == 2);
  CHECK(sup.start_distance_m == doctest::Approx(9.4).epsilon(1e-12));
  CHECK(sup.end_distance_m == doctest::Approx(7.4).epsilon(1e-12));
  CHECK(sup.improvement_m == doctest::Approx(2.0).epsilon(1e-12));
  CHECK(sup.final_mean_reward == doctest::Approx(0.6).epsilon(1e-12));
  CHECK_FALSE(sup.reward_ratio_vs_supervised.has_value());

  const auto& semi = summary.rows[1];
  CHECK(semi.mode == AgentMode::semi_supervised);
  CHECK(semi.seed_count == 1);
  CHECK(semi.improvement_m == doctest::Approx(8.5).epsilon(1e-12));
  REQUIRE(semi.reward_ratio_vs_supervised.has_value());
  CHECK(*semi.reward_ratio_vs_supervised == doctest::Approx(2.0).epsilon(1e-12));

  const std::string table = bdrl::render_summary(summary);
  CHECK(table.find("supervised") != std::string::npos);
  CHECK(table.find("semi_supervised") != std::string::npos);
  CHECK(table.find("2.000") != std::string::npos);
  CHECK(table.find("reward_ratio") != std::string::npos);
}

TEST_CASE("the reward ratio disappears without a usable baseline") {
  ComparisonReport sup_only;
  sup_only.rows.push_back(
      make_row(AgentMode::supervised, 1, 2, 0.5, 7.4, 9.4, 7.4));
  const Summary s1 = bdrl::summarize(sup_only);
  REQUIRE(s1.rows.size() == 1);
  CHECK_FALSE(s1.rows[0].reward_ratio_vs_supervised.has_value());
  CHECK(bdrl::render_summary(s1).find('-') != std::string::npos);

  ComparisonReport semi_only;
  semi_only.rows.push_back(
      make_row(AgentMode::semi_supervised, 1, 2, 1.2, 4.3, 12.8, 4.3));
  const Summary s2 = bdrl::summarize(semi_only);
  REQUIRE(s2.rows.size() == 1);
  CHECK_FALSE(s2.rows[0].reward_ratio_vs_supervised.has_value());

  ComparisonReport zero_baseline;
  zero_baseline.rows.push_back(
      make_row(AgentMode::supervised, 1, 2, 0.0, 7.4, 9.4, 7.4));
  zero_baseline.rows.push_back(
      make_row(AgentMode::semi_supervised, 1, 2, 1.2, 4.3, 12.8, 4.3));
  const Summary s3 = bdrl::summarize(zero_baseline);
  REQUIRE(s3.rows.size() == 2);
  CHECK_FALSE(s3.rows[1].reward_ratio_vs_supervised.has_value());
}

TEST_CASE("summary CSVs leave the ratio field empty when absent") {
  bdrl_test::TempDir dir;
  ComparisonReport report;
  report.rows.push_back(
      make_row(AgentMode::supervised, 1, 2, 0.5, 7.4, 9.4, 7.4));
  report.rows.push_back(
      make_row(AgentMode::semi_supervised, 1, 2, 1.0, 4.3, 12.8, 4.3));

  const std::string path = dir.file("summary.csv");
  bdrl::write_summary_csv(path, bdrl::summarize(report));
  const std::string text = slurp(path);
  CHECK(text ==
        "mode,seed_count,start_distance_m,end_distance_m,improvement_m,"
        "final_mean_reward,reward_ratio_vs_supervised\n"
        "supervised,1,9.4000000000000004,7.4000000000000004,2,0.5,\n"
        "semi_supervised,1,12.800000000000001,4.2999999999999998,8.5,1,2\n");
}

TEST_CASE("a comparison writes a deterministic bundle of artifacts") {
  bdrl_test::TempDir dir;
  const ExperimentConfig config = tiny_config();

  const std::string out_a = dir.file("run_a");
  const ComparisonReport report = bdrl::run_comparison(config, out_a);
  REQUIRE(report.rows.size() == 4);  // 2 modes x 2 checkpoints

  CHECK(report.rows[0].mode == AgentMode::supervised);
  CHECK(report.rows[0].checkpoint_epoch == 1);
  CHECK(report.rows[1].mode == AgentMode::supervised);
  CHECK(report.rows[1].checkpoint_epoch == 2);
  CHECK(report.rows[2].mode == AgentMode::semi_supervised);
  CHECK(report.rows[3].mode == AgentMode::semi_supervised);
  for (const ReportRow& row : report.rows) {
    CHECK(row.seed == 4);
    CHECK(std::isfinite(row.mean_reward));
    CHECK(row.mean_distance_m >= 0.0);
    CHECK(row.start_distance_m >= 0.0);
  }
  // end_distance_m repeats the final checkpoint's distance on every row.
  CHECK(report.rows[0].end_distance_m == report.rows[1].mean_distance_m);
  CHECK(report.rows[2].end_distance_m == report.rows[3].mean_distance_m);
  // Start distances are pinned per seed, identical across modes.
  CHECK(report.rows[0].start_distance_m == report.rows[2].start_distance_m);

  for (const char* name :
       {"report.csv", "manifest.txt", "metrics_supervised_seed4.csv",
        "metrics_semi_supervised_seed4.csv"}) {
    CHECK(std::filesystem::exists(out_a + "/" + name));
  }
  CHECK(std::filesystem::exists(out_a + "/q_supervised_seed4/q_head.net"));
  CHECK(std::filesystem::exists(out_a + "/q_semi_supervised_seed4/q_head.net"));
  CHECK(std::filesystem::exists(out_a + "/q_semi_supervised_seed4/q_trunk.net"));
  CHECK(std::filesystem::exists(out_a + "/vae_seed4/vae.txt"));

  // Training metrics cover exactly the epochs up to the last checkpoint.
  const std::string metrics = slurp(out_a + "/metrics_supervised_seed4.csv");
  CHECK(std::count(metrics.begin(), metrics.end(), '\n') == 3);  // header + 2

  // A second identical run reproduces the report byte for byte.
  const std::string out_b = dir.file("run_b");
  bdrl::run_comparison(config, out_b);
  CHECK(slurp(out_a + "/report.csv") == slurp(out_b + "/report.csv"));

  // More workers must not change the assembled output.
  ExperimentConfig wide = config;
  wide.workers = 3;
  const std::string out_c = dir.file("run_c");
  bdrl::run_comparison(wide, out_c);
  CHECK(slurp(out_a + "/report.csv") == slurp(out_c + "/report.csv"));

  // The in-memory report matches what was persisted.
  const ComparisonReport reloaded = bdrl::load_report_csv(out_a + "/report.csv");
  REQUIRE(reloaded.rows.size() == 4);
  CHECK(reloaded.rows[0].mean_reward == report.rows[0].mean_reward);
}

TEST_CASE("the manifest records the config, derived shapes and hashes") {
  bdrl_test::TempDir dir;
  const ExperimentConfig config = tiny_config();
  const std::string out = dir.file("run");
  bdrl::run_comparison(config, out);

  const KvFile manifest = KvFile::parse_file(out + "/manifest.txt");
  const KvFile expected = config.to_kv();
  for (const std::string& key : expected.keys()) {
    CHECK(manifest.has(key));
    CHECK(manifest.get_string(key, "<missing>") ==
          expected.get_string(key, "<expected>"));
  }
  CHECK(manifest.get_string("artifact.kind", "") == "comparison");
  CHECK(manifest.get_int("artifact.format_version", 0) == 1);
  CHECK(manifest.get_string("artifact.code_version", "") == "bdrl 1.0.0");
  CHECK(manifest.get_int("derived.beacon_count", 0) == 13);

  bdrl::FeatureConfig features = config.train.features;
  features.beacon_count = 13;
  CHECK(manifest.get_int("derived.feature_dim", 0) ==
        static_cast<std::int64_t>(bdrl::feature_dim(features)));
  CHECK(manifest.get_int("derived.state_dim", 0) ==
        static_cast<std::int64_t>(3 * bdrl::feature_dim(features) + 2));

  const std::string train_hash =
      manifest.get_string("data.train_hash_seed4", "");
  const std::string test_hash = manifest.get_string("data.test_hash_seed4", "");
  CHECK(train_hash.size() == 16);
  CHECK(test_hash.size() == 16);
  CHECK(train_hash != test_hash);
  CHECK(manifest.get_int("result.failed_cells", -1) == 0);
}

TEST_CASE("run_training writes metrics, snapshots and a manifest") {
  bdrl_test::TempDir dir;
  ExperimentConfig config = tiny_config();
  config.train.episodes = 2;

  const std::string out = dir.file("sup");
  bdrl::run_training(config, out);
  CHECK(std::filesystem::exists(out + "/metrics.csv"));
  CHECK(std::filesystem::exists(out + "/q/q_head.net"));
  CHECK_FALSE(std::filesystem::exists(out + "/vae"));
  const std::string metrics = slurp(out + "/metrics.csv");
  CHECK(std::count(metrics.begin(), metrics.end(), '\n') == 3);
  const KvFile manifest = KvFile::parse_file(out + "/manifest.txt");
  CHECK(manifest.get_string("artifact.kind", "") == "train");
  CHECK(manifest.get_string("data.train_hash_seed4", "").size() == 16);

  ExperimentConfig semi = config;
  semi.train.mode = AgentMode::semi_supervised;
  const std::string out_semi = dir.file("semi");
  bdrl::run_training(semi, out_semi);
  CHECK(std::filesystem::exists(out_semi + "/vae/vae.txt"));
  CHECK(std::filesystem::exists(out_semi + "/q/q_trunk.net"));

  CHECK_THROWS_AS(bdrl::run_training(config, ""), std::invalid_argument);
}

TEST_CASE("file-backed runs hold out the first labeled bundle per cell") {
  bdrl_test::TempDir dir;

  // Two labeled bundles per cell: one goes to training, one to the test
  // split, so the comparison runs end to end.
  ExperimentConfig config = tiny_config();
  const auto world = config.make_world();
  SeededRng data_rng(31);
  const auto samples = bdrl::generate_dataset(world, 2, 2, data_rng);
  const std::string data_path = dir.file("data.csv");
  bdrl::save_dataset(data_path, samples, world.beacons.size());

  config.dataset_file = data_path;
  const std::string out = dir.file("run");
  const ComparisonReport report = bdrl::run_comparison(config, out);
  REQUIRE(report.rows.size() == 4);
  for (const ReportRow& row : report.rows) {
    CHECK(std::isfinite(row.mean_reward));
    CHECK(row.start_distance_m >= 0.0);
  }

  // With only one labeled bundle per cell the training split is empty, so
  // every cell fails and the report stays empty (failures are counted).
  ExperimentConfig starved = tiny_config();
  const auto lone = bdrl::generate_dataset(world, 1, 0, data_rng);
  const std::string lone_path = dir.file("lone.csv");
  bdrl::save_dataset(lone_path, lone, world.beacons.size());
  starved.dataset_file = lone_path;

  const std::string out_starved = dir.file("starved");
  const ComparisonReport empty = bdrl::run_comparison(starved, out_starved);
  CHECK(empty.rows.empty());
  const KvFile manifest = KvFile::parse_file(out_starved + "/manifest.txt");
  CHECK(manifest.get_int("result.failed_cells", 0) == 2);
}
