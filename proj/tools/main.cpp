// Command-line front end: dataset generation, single-agent training, the
// supervised vs semi-supervised comparison, and report summarisation.

#include <cstdint>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "bdrl/harness.hpp"

namespace {

std::string trim(const std::string& s) {
  const auto begin = s.find_first_not_of(" \t");
  if (begin == std::string::npos) return "";
  const auto end = s.find_last_not_of(" \t");
  return s.substr(begin, end - begin + 1);
}

// Loads the experiment config: file (if given), then --set overrides,
// then an optional run.seeds override from --seed.
bdrl::ExperimentConfig load_config(const std::string& config_path,
                                   const std::vector<std::string>& sets,
                                   const std::optional<std::uint64_t>& seed) {
  bdrl::KvFile kv;
  if (!config_path.empty()) kv = bdrl::KvFile::parse_file(config_path);
  for (const std::string& item : sets) {
    const auto eq = item.find('=');
    if (eq == std::string::npos) {
      throw std::invalid_argument("--set expects key=value, got '" + item + "'");
    }
    const std::string key = trim(item.substr(0, eq));
    const std::string value = trim(item.substr(eq + 1));
    if (key.empty()) {
      throw std::invalid_argument("--set expects key=value, got '" + item + "'");
    }
    kv.set(key, value);
  }
  bdrl::ExperimentConfig config = bdrl::ExperimentConfig::from_kv(kv);
  if (seed) {
    config.seeds = {*seed};
    config.validate();
  }
  return config;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Grid-based RSSI localization benchmark"};
  app.require_subcommand(1);

  std::string config_path;
  std::vector<std::string> sets;
  std::optional<std::uint64_t> seed;

  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--config", config_path, "key = value config file");
    sub->add_option("--set", sets, "override a config key (key=value)")
        ->take_all();
  };

  CLI::App* gen = app.add_subcommand("gen-data", "generate a synthetic dataset");
  std::string gen_out;
  std::optional<int> gen_rows, gen_cols;
  std::optional<std::size_t> gen_labeled, gen_unlabeled;
  gen->add_option("--out", gen_out, "output CSV path")->required();
  gen->add_option("--seed", seed, "dataset seed");
  gen->add_option("--rows", gen_rows, "grid rows");
  gen->add_option("--cols", gen_cols, "grid columns");
  gen->add_option("--labeled-per-cell", gen_labeled, "labeled bundles per cell");
  gen->add_option("--unlabeled", gen_unlabeled, "unlabeled bundle count");
  add_common(gen);

  CLI::App* train = app.add_subcommand("train", "train a single agent");
  std::string train_out;
  train->add_option("--out", train_out, "output directory")->required();
  train->add_option("--seed", seed, "training seed");
  add_common(train);

  CLI::App* compare =
      app.add_subcommand("compare", "run the supervised vs semi-supervised comparison");
  std::string compare_out;
  compare->add_option("--out", compare_out, "output directory");
  add_common(compare);

  CLI::App* summ = app.add_subcommand("summarize", "summarise a report.csv");
  std::string report_path;
  std::string summary_out;
  summ->add_option("--report", report_path, "report.csv path")->required();
  summ->add_option("--out", summary_out, "summary CSV path");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*gen) {
      bdrl::ExperimentConfig config = load_config(config_path, sets, seed);
      if (gen_rows) config.grid_rows = *gen_rows;
      if (gen_cols) config.grid_cols = *gen_cols;
      if (gen_labeled) config.labeled_per_cell = *gen_labeled;
      if (gen_unlabeled) config.unlabeled_total = *gen_unlabeled;
      config.validate();
      const bdrl::GridWorld world = config.make_world();
      const std::uint64_t s = config.seeds.front();
      bdrl::SeededRng rng = bdrl::SeededRng(s).derive("dataset");
      const std::vector<bdrl::FingerprintSample> samples = bdrl::generate_dataset(
          world, config.labeled_per_cell, config.unlabeled_total, rng);
      bdrl::save_dataset(gen_out, samples, world.beacons.size());
      std::cout << "wrote " << samples.size() << " bundles ("
                << config.labeled_per_cell << " labeled per cell, "
                << config.unlabeled_total << " unlabeled) to " << gen_out << '\n';
    } else if (*train) {
      const bdrl::ExperimentConfig config = load_config(config_path, sets, seed);
      bdrl::run_training(config, train_out);
      std::cout << "trained " << to_string(config.train.mode) << " agent (seed "
                << config.seeds.front() << "); artifacts in " << train_out << '\n';
    } else if (*compare) {
      const bdrl::ExperimentConfig config = load_config(config_path, sets, seed);
      const bdrl::ComparisonReport report = bdrl::run_comparison(config, compare_out);
      if (report.rows.empty()) {
        std::cerr << "error: every comparison cell failed\n";
        return 1;
      }
      const bdrl::Summary summary = bdrl::summarize(report);
      std::cout << bdrl::render_summary(summary);
      if (!compare_out.empty()) {
        bdrl::write_summary_csv(compare_out + "/summary.csv", summary);
        std::cout << "report written to " << compare_out << "/report.csv\n";
      }
    } else if (*summ) {
      const bdrl::ComparisonReport report = bdrl::load_report_csv(report_path);
      const bdrl::Summary summary = bdrl::summarize(report);
      std::cout << bdrl::render_summary(summary);
      if (!summary_out.empty()) bdrl::write_summary_csv(summary_out, summary);
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
