#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

namespace pcaprl {

// Malformed or inconsistent datasets / on-disk artifacts.
struct DataError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// An episode or training run left its operating envelope (step budget,
// non-finite numerics, ...).
struct RuntimeAbort : std::runtime_error {
  using std::runtime_error::runtime_error;
};

inline constexpr int kStateDim = 5;

// Observation vector of the control problem.
struct NodeState {
  double progress = 0.0;  // heartbeat rate, Hz, >= 0
  double power = 0.0;     // package power, W, >= 0
  double ipc = 0.0;       // instructions per cycle, >= 0
  double stl = 0.0;       // stalled-cycle fraction, in [0, 1]
  double cmr = 0.0;       // LLC miss rate, in [0, 1]

  std::array<double, kStateDim> features() const { return {progress, power, ipc, stl, cmr}; }
  void validate() const;  // throws std::invalid_argument
};

inline constexpr double kDefaultMinCapWatts = 78.0;
inline constexpr double kDefaultMaxCapWatts = 165.0;
inline constexpr int kDefaultGridCount = 16;
inline constexpr double kGridToleranceWatts = 1e-9;

// Uniformly spaced power caps; endpoints are exact grid members.
struct ActionGrid {
  double min_watts = 0.0;
  double max_watts = 0.0;
  int count = 0;
  std::vector<double> values;

  void validate() const;  // throws std::invalid_argument
};

ActionGrid make_action_grid(double min_watts, double max_watts, int count);
ActionGrid default_action_grid();  // 16 caps over 78..165 W

// Nearest grid index; ties within 1e-9 W break toward the lower cap, and
// out-of-range inputs clamp to the end caps.
int snap_to_grid(double watts, const ActionGrid& grid);

struct RewardBounds {
  double r_min = 0.0;
  double r_max = 0.0;
};

struct Transition {
  std::string benchmark;
  long t = 0;  // control-step index within the episode
  NodeState state;
  int action_index = 0;
  double action_watts = 0.0;
  double reward_raw = 0.0;
  double reward_norm = 0.0;
  NodeState next_state;
  bool terminal = false;
};

struct Dataset {
  std::vector<Transition> transitions;
  ActionGrid grid;
  std::map<std::string, RewardBounds> reward_bounds;  // per benchmark
  double reward_lo = -5.0;                            // normalization range applied
  double reward_hi = 5.0;
};

// Structural validation incl. the coverage requirement that every grid action
// occurs at least once. Throws DataError.
void validate_dataset(const Dataset& ds);

struct Hyperparams {
  double gamma = 0.9;
  double alpha = 0.1;
  int batch = 128;
  int iterations = 10000;
  double learning_rate = 1e-3;
  std::uint64_t seed = 0;
};

// Serializable record of a trained Q-network plus everything needed to deploy
// or reproduce it.
struct Checkpoint {
  std::vector<int> layer_dims;               // first = kStateDim, last = grid.count
  std::vector<std::vector<double>> weights;  // per layer, row-major out x in
  std::vector<std::vector<double>> biases;   // per layer
  std::vector<double> feature_mean;          // kStateDim entries
  std::vector<double> feature_std;           // kStateDim entries, all > 0
  ActionGrid grid;
  Hyperparams hyperparams;
  std::string activation = "relu";

  void validate() const;  // throws DataError
};

}  // namespace pcaprl
