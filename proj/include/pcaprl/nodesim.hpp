#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "pcaprl/rng.hpp"
#include "pcaprl/types.hpp"

namespace pcaprl {

// Per-phase overrides; a phase begins once the given fraction of
// total_iterations has completed.
struct PhaseSpec {
  double start_fraction = 0.0;  // in [0, 1)
  std::optional<double> progress_max;
  std::optional<double> response_exp;
  std::optional<double> ipc_base;
  std::optional<double> stl_base;
  std::optional<double> cmr_base;
};

// Power-to-progress model of one workload. Progress saturates at/above p_knee
// and falls off as ((P - p_idle) / (p_knee - p_idle))^response_exp below it.
struct BenchmarkProfile {
  std::string name;
  bool train_split = true;  // collection uses train-tagged profiles only
  double p_idle = 60.0;     // W, power floor
  double p_max_draw = 165.0;  // W, natural draw when uncapped
  double p_knee = 120.0;      // W, saturation point; p_idle < p_knee <= p_max_draw
  double progress_max = 100.0;  // Hz at/above the knee
  double response_exp = 1.0;
  double ipc_base = 0.5;
  double stl_base = 0.5;
  double cmr_base = 0.5;
  double noise_rel = 0.02;  // relative std of the per-step multiplicative noise
  long total_iterations = 1000;
  std::vector<PhaseSpec> phases;  // optional; first phase must start at 0

  void validate() const;  // throws std::invalid_argument
  // Seconds to completion when never power-limited (phase-aware, noise-free).
  double uncapped_et_estimate() const;
};

struct SimStepResult {
  NodeState state;
  long heartbeats_emitted = 0;
  double energy_joules = 0.0;
  bool done = false;
};

class NodeSimulator {
 public:
  NodeSimulator(BenchmarkProfile profile, std::uint64_t seed);

  // Advance one control interval under the given cap. Throws
  // std::logic_error once the workload has completed.
  SimStepResult step(double cap_watts, double dt);

  // Observation before any interval has run (rate 0, idle power).
  NodeState rest_state() const;

  bool done() const { return done_; }
  long emitted() const { return emitted_; }
  double sim_time() const { return t_; }
  const BenchmarkProfile& profile() const { return profile_; }

  // Process-wide step counter; lets tests prove that training never touches
  // the simulator.
  static std::uint64_t total_steps();

 private:
  struct PhaseView {
    double progress_max, response_exp, ipc_base, stl_base, cmr_base;
  };
  PhaseView current_phase() const;

  BenchmarkProfile profile_;
  Rng rng_;
  double hb_accum_ = 0.0;  // fractional heartbeats not yet emitted
  long emitted_ = 0;
  double t_ = 0.0;
  bool done_ = false;
};

struct EpisodeStep {
  double t = 0.0;  // end-of-interval time, s
  NodeState state;
  double cap_watts = 0.0;
  long heartbeats = 0;
  double energy_j = 0.0;
};

struct EpisodeLog {
  std::string benchmark;
  std::string policy_label;
  std::vector<EpisodeStep> steps;
  double execution_time_s = 0.0;
  double energy_j = 0.0;
};

using PolicyFn = std::function<double(const NodeState&)>;  // state -> cap watts

// Runs the workload to completion under the policy; aborts with RuntimeAbort
// once past step_budget_factor x the uncapped execution-time estimate.
EpisodeLog run_to_completion(const BenchmarkProfile& profile, const PolicyFn& policy, double dt,
                             std::uint64_t seed, double step_budget_factor = 10.0);

// Twelve calibrated workload profiles (6 train / 6 holdout).
std::vector<BenchmarkProfile> builtin_profiles();

}  // namespace pcaprl
