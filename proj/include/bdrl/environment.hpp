#pragma once

#include <array>
#include <cstddef>
#include <optional>
#include <vector>

#include "bdrl/features.hpp"
#include "bdrl/rng.hpp"

namespace bdrl {

// Grid coordinates.  Row 0 is the north edge and rows increase southward;
// column 0 is the west edge and columns increase eastward.
struct GridCell {
  int row = 0;
  int col = 0;

  bool operator==(const GridCell&) const = default;
};

// The eight movement actions, indexed 0..7.
enum : int {
  kActionWest = 0,
  kActionEast = 1,
  kActionNorth = 2,
  kActionSouth = 3,
  kActionNorthWest = 4,
  kActionNorthEast = 5,
  kActionSouthWest = 6,
  kActionSouthEast = 7,
};
constexpr int kActionCount = 8;

// Rectangular indoor floor divided into square cells, with BLE beacons at
// fixed positions.  Distances are in metres; positions are (x, y) with x
// growing eastward and y growing southward, origin at the north-west
// corner of the floor.
struct GridWorld {
  int rows = 8;
  int cols = 8;
  double cell_size = 3.048;  // 10 ft
  std::vector<std::array<double, 2>> beacons;

  // Log-distance path-loss parameters: rssi = -10*n*log10(d) + a.
  double pathloss_n = 2.0;
  double offset_a = -60.0;       // dBm at 1 m
  double noise_sigma = 2.0;      // shadowing std dev, dBm; 0 disables noise
  double hearing_radius = 25.0;  // beacons farther than this read -200

  // Reward threshold: within delta metres of the target the reward is
  // 1/distance, beyond it -distance.
  double delta = 3.0;

  // Throws std::invalid_argument when dimensions or parameters are
  // invalid (empty grid, no beacons, negative noise, ...).
  void validate() const;

  double width() const { return cols * cell_size; }
  double height() const { return rows * cell_size; }
  int cell_count() const { return rows * cols; }

  bool in_grid(GridCell c) const {
    return c.row >= 0 && c.row < rows && c.col >= 0 && c.col < cols;
  }

  // Class index <-> cell, row-major: class = row * cols + col.
  int cell_to_class(GridCell c) const;
  GridCell class_to_cell(int k) const;

  // Centre of a cell in floor coordinates.
  std::array<double, 2> cell_center(GridCell c) const;

  // Euclidean distance between cell centres, in metres.
  double cell_distance(GridCell a, GridCell b) const;
};

// The 13-beacon default layout: a 4x4 lattice over the floor with three
// corners removed, each position jittered by a fixed internal seed so the
// geometry is identical across runs and independent of experiment seeds.
std::vector<std::array<double, 2>> default_beacon_layout(double width,
                                                         double height);

// Convenience constructor: rows x cols world with the default beacon
// layout and default radio parameters.
GridWorld make_default_world(int rows, int cols);

// Beacon layout file: one `x,y` position (meters) per line; '#' comments
// and blank lines are ignored.  Throws std::runtime_error naming the
// offending line for malformed content.
std::vector<std::array<double, 2>> load_beacon_layout(const std::string& path);

// One synthetic scan at a floor position: per beacon, the log-distance
// path-loss value plus Gaussian shadowing noise, clamped to [-100, 0];
// beacons beyond the hearing radius yield the sentinel -200.  Distances
// below 0.1 m are floored at 0.1 m to keep the model bounded.  Throws
// std::invalid_argument when pos lies outside the floor rectangle.
std::vector<double> synth_rssi(const GridWorld& world,
                               std::array<double, 2> pos, SeededRng& rng);

// Moves one cell in the given direction, clamping each axis at the grid
// boundary independently.  Throws std::invalid_argument for an invalid
// action or a cell outside the grid.
GridCell apply_action(const GridWorld& world, GridCell from, int action);

// Localization reward for observing (believing to be at) `observed` when
// the target cell is `target`:
//   distance == 0      ->  1 / (cell_size / 2)   (capped hit reward)
//   0 < distance <= delta ->  1 / distance
//   distance > delta      -> -distance
double reward(const GridWorld& world, GridCell observed, GridCell target);

// A fingerprint sample: one bundle of three consecutive scans taken at
// the same (possibly unknown) location.
struct FingerprintSample {
  std::vector<std::vector<double>> readings;  // exactly 3 scans
  std::optional<GridCell> label;              // nullopt -> unlabeled

  bool labeled() const { return label.has_value(); }
};

// Episode state for the localization MDP.  The observation bundle is
// fixed for the whole episode; only the position evolves.
struct AgentState {
  GridCell position;
  std::vector<FeatureVector> observations;  // 3 featurized scans
  std::optional<GridCell> target;           // label or inferred cell
  bool target_inferred = false;
  int step_index = 0;
  bool terminal = false;
};

struct StepResult {
  AgentState next_state;
  double reward = 0.0;
  bool terminal = false;
};

// Starts an episode: uniform random start cell, featurized observations,
// target set from the sample's label when present (unlabeled samples
// leave the target unresolved for the caller to infer).  Throws
// std::invalid_argument when the sample is malformed (reading count != 3
// or a scan width != beacon count).
AgentState reset(const GridWorld& world, const FingerprintSample& sample,
                 const FeatureConfig& features, SeededRng& rng);

// Deterministic variant with a caller-chosen start cell (used by
// evaluation, which pins identical starts across runs).
AgentState reset(const GridWorld& world, const FingerprintSample& sample,
                 const FeatureConfig& features, GridCell start);

// One transition.  The episode terminates when the new position equals
// the target or when the step budget `horizon` is exhausted.  Throws
// std::logic_error when called on a terminal state or one without a
// resolved target, std::invalid_argument for a bad action.
StepResult step(const GridWorld& world, const AgentState& state, int action,
                int horizon);

}  // namespace bdrl
