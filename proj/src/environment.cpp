#include "bdrl/environment.hpp"

#include <cmath>
#include <cstddef>
#include <fstream>
#include <stdexcept>
#include <string>

namespace bdrl {
namespace {

// Seed for beacon-layout jitter.  Fixed on purpose: the floor geometry is
// part of the environment definition, not of any experiment's randomness.
constexpr std::uint64_t kLayoutSeed = 0xb5a4c0ffee13ull;

constexpr double kMinPathDistance = 0.1;
constexpr double kSentinel = -200.0;

}  // namespace

void GridWorld::validate() const {
  if (rows <= 0 || cols <= 0) {
    throw std::invalid_argument("GridWorld: rows and cols must be positive");
  }
  if (!(cell_size > 0.0)) {
    throw std::invalid_argument("GridWorld: cell_size must be positive");
  }
  if (beacons.empty()) {
    throw std::invalid_argument("GridWorld: at least one beacon required");
  }
  if (!(pathloss_n > 0.0)) {
    throw std::invalid_argument("GridWorld: pathloss exponent must be positive");
  }
  if (noise_sigma < 0.0) {
    throw std::invalid_argument("GridWorld: noise_sigma must be >= 0");
  }
  if (!(hearing_radius > 0.0)) {
    throw std::invalid_argument("GridWorld: hearing_radius must be positive");
  }
  if (!(delta > 0.0)) {
    throw std::invalid_argument("GridWorld: delta must be positive");
  }
}

int GridWorld::cell_to_class(GridCell c) const {
  if (!in_grid(c)) {
    throw std::invalid_argument("cell_to_class: cell outside grid");
  }
  return c.row * cols + c.col;
}

GridCell GridWorld::class_to_cell(int k) const {
  if (k < 0 || k >= cell_count()) {
    throw std::invalid_argument("class_to_cell: class index out of range");
  }
  return GridCell{k / cols, k % cols};
}

std::array<double, 2> GridWorld::cell_center(GridCell c) const {
  if (!in_grid(c)) {
    throw std::invalid_argument("cell_center: cell outside grid");
  }
  return {(c.col + 0.5) * cell_size, (c.row + 0.5) * cell_size};
}

double GridWorld::cell_distance(GridCell a, GridCell b) const {
  const auto pa = cell_center(a);
  const auto pb = cell_center(b);
  return std::hypot(pa[0] - pb[0], pa[1] - pb[1]);
}

std::vector<std::array<double, 2>> default_beacon_layout(double width,
                                                         double height) {
  if (!(width > 0.0) || !(height > 0.0)) {
    throw std::invalid_argument("default_beacon_layout: floor must be non-empty");
  }
  SeededRng rng(kLayoutSeed);
  const double pitch_x = width / 4.0;
  const double pitch_y = height / 4.0;
  std::vector<std::array<double, 2>> beacons;
  for (int j = 0; j < 4; ++j) {
    for (int i = 0; i < 4; ++i) {
      // Drop three lattice corners to land on 13 beacons.
      const bool corner = (i == 0 && j == 0) || (i == 3 && j == 0) ||
                          (i == 0 && j == 3);
      // Jitter is drawn unconditionally so the remaining beacons keep
      // their positions regardless of which corners are dropped.
      const double jx = rng.uniform(-0.15, 0.15) * pitch_x;
      const double jy = rng.uniform(-0.15, 0.15) * pitch_y;
      if (corner) continue;
      beacons.push_back({(i + 0.5) * pitch_x + jx, (j + 0.5) * pitch_y + jy});
    }
  }
  return beacons;
}

GridWorld make_default_world(int rows, int cols) {
  GridWorld world;
  world.rows = rows;
  world.cols = cols;
  world.beacons = default_beacon_layout(world.width(), world.height());
  world.validate();
  return world;
}

std::vector<std::array<double, 2>> load_beacon_layout(const std::string& path) {
  std::ifstream in(path);
  if (!in) {
    throw std::runtime_error("beacon layout file not found: " + path);
  }
  std::vector<std::array<double, 2>> beacons;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (const auto hash = line.find('#'); hash != std::string::npos) {
      line.erase(hash);
    }
    const auto begin = line.find_first_not_of(" \t\r");
    if (begin == std::string::npos) continue;
    const auto end = line.find_last_not_of(" \t\r");
    const std::string body = line.substr(begin, end - begin + 1);
    const auto comma = body.find(',');
    const std::string where = path + ":" + std::to_string(line_no);
    if (comma == std::string::npos) {
      throw std::runtime_error(where + ": expected 'x,y'");
    }
    try {
      std::size_t used = 0;
      const std::string xs = body.substr(0, comma);
      const std::string ys = body.substr(comma + 1);
      const double x = std::stod(xs, &used);
      if (used != xs.size()) throw std::invalid_argument("trailing characters");
      const double y = std::stod(ys, &used);
      if (used != ys.size()) throw std::invalid_argument("trailing characters");
      if (!std::isfinite(x) || !std::isfinite(y)) {
        throw std::invalid_argument("non-finite coordinate");
      }
      beacons.push_back({x, y});
    } catch (const std::exception& e) {
      throw std::runtime_error(where + ": invalid beacon position: " + e.what());
    }
  }
  if (beacons.empty()) {
    throw std::runtime_error("beacon layout file has no beacons: " + path);
  }
  return beacons;
}

std::vector<double> synth_rssi(const GridWorld& world,
                               std::array<double, 2> pos, SeededRng& rng) {
  world.validate();
  if (pos[0] < 0.0 || pos[0] > world.width() || pos[1] < 0.0 ||
      pos[1] > world.height()) {
    throw std::invalid_argument("synth_rssi: position outside the floor");
  }
  std::vector<double> scan;
  scan.reserve(world.beacons.size());
  for (const auto& beacon : world.beacons) {
    const double d = std::hypot(pos[0] - beacon[0], pos[1] - beacon[1]);
    if (d > world.hearing_radius) {
      scan.push_back(kSentinel);
      continue;
    }
    const double clamped_d = std::max(d, kMinPathDistance);
    double rssi = -10.0 * world.pathloss_n * std::log10(clamped_d) +
                  world.offset_a;
    rssi += rng.normal(0.0, world.noise_sigma);
    scan.push_back(std::clamp(rssi, -100.0, 0.0));
  }
  return scan;
}

GridCell apply_action(const GridWorld& world, GridCell from, int action) {
  if (!world.in_grid(from)) {
    throw std::invalid_argument("apply_action: cell outside grid");
  }
  if (action < 0 || action >= kActionCount) {
    throw std::invalid_argument("apply_action: invalid action " +
                                std::to_string(action));
  }
  static constexpr int kRowDelta[kActionCount] = {0, 0, -1, 1, -1, -1, 1, 1};
  static constexpr int kColDelta[kActionCount] = {-1, 1, 0, 0, -1, 1, -1, 1};
  GridCell to{from.row + kRowDelta[action], from.col + kColDelta[action]};
  to.row = std::clamp(to.row, 0, world.rows - 1);
  to.col = std::clamp(to.col, 0, world.cols - 1);
  return to;
}

double reward(const GridWorld& world, GridCell observed, GridCell target) {
  const double dist = world.cell_distance(observed, target);
  if (dist == 0.0) {
    return 1.0 / (world.cell_size / 2.0);
  }
  if (dist <= world.delta) {
    return 1.0 / dist;
  }
  return -dist;
}

AgentState reset(const GridWorld& world, const FingerprintSample& sample,
                 const FeatureConfig& features, SeededRng& rng) {
  world.validate();
  const int start = static_cast<int>(rng.uniform_int(
      static_cast<std::uint64_t>(world.cell_count())));
  return reset(world, sample, features, world.class_to_cell(start));
}

AgentState reset(const GridWorld& world, const FingerprintSample& sample,
                 const FeatureConfig& features, GridCell start) {
  world.validate();
  if (!world.in_grid(start)) {
    throw std::invalid_argument("reset: start cell outside grid");
  }
  if (sample.readings.size() != 3) {
    throw std::invalid_argument("reset: sample must hold exactly 3 scans");
  }
  if (features.beacon_count != world.beacons.size()) {
    throw std::invalid_argument("reset: feature config beacon count mismatch");
  }
  for (const auto& scan : sample.readings) {
    if (scan.size() != world.beacons.size()) {
      throw std::invalid_argument("reset: scan width does not match beacon count");
    }
  }
  if (sample.labeled() && !world.in_grid(*sample.label)) {
    throw std::invalid_argument("reset: sample label outside grid");
  }

  AgentState state;
  state.position = start;
  const auto layout = make_layout(features);
  state.observations.reserve(3);
  for (const auto& scan : sample.readings) {
    state.observations.push_back(featurize(features, scan, layout));
  }
  if (sample.labeled()) {
    state.target = *sample.label;
  }
  return state;
}

StepResult step(const GridWorld& world, const AgentState& state, int action,
                int horizon) {
  if (state.terminal) {
    throw std::logic_error("step: episode already terminal");
  }
  if (!state.target.has_value()) {
    throw std::logic_error("step: no target resolved for this episode");
  }
  if (horizon <= 0) {
    throw std::invalid_argument("step: horizon must be positive");
  }

  StepResult result;
  result.next_state = state;
  result.next_state.position = apply_action(world, state.position, action);
  result.next_state.step_index = state.step_index + 1;
  result.reward = reward(world, result.next_state.position, *state.target);
  const bool reached = result.next_state.position == *state.target;
  const bool exhausted = result.next_state.step_index >= horizon;
  result.terminal = reached || exhausted;
  result.next_state.terminal = result.terminal;
  return result;
}

}  // namespace bdrl
