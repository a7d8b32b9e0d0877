#include "pcaprl/control.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace pcaprl {

SimActuatorSensor::SimActuatorSensor(const BenchmarkProfile& profile, ActionGrid grid,
                                     std::uint64_t seed)
    : sim_(profile, seed), grid_(std::move(grid)) {
  grid_.validate();
  last_state_ = sim_.rest_state();
  cap_ = grid_.max_watts;
}

NodeState SimActuatorSensor::read_state() const { return last_state_; }

void SimActuatorSensor::apply_cap(double watts) {
  if (!std::isfinite(watts)) throw std::invalid_argument("actuator: non-finite cap");
  const int idx = snap_to_grid(watts, grid_);
  const double grid_watts = grid_.values[static_cast<std::size_t>(idx)];
  if (std::abs(grid_watts - watts) > kGridToleranceWatts)
    throw std::invalid_argument("actuator: cap " + std::to_string(watts) +
                                " W is not on the action grid");
  cap_ = grid_watts;
  ++actuations_;
}

std::pair<double, double> SimActuatorSensor::capabilities() const {
  return {grid_.min_watts, grid_.max_watts};
}

IntervalSample SimActuatorSensor::advance(double dt) {
  const SimStepResult r = sim_.step(cap_, dt);
  last_state_ = r.state;
  IntervalSample sample;
  sample.state = r.state;
  sample.heartbeats = r.heartbeats_emitted;
  sample.energy_j = r.energy_joules;
  sample.done = r.done;
  return sample;
}

std::pair<int, double> greedy_action(const QNetwork& net, const NodeState& state,
                                     const ActionGrid& grid) {
  grid.validate();
  if (net.output_dim() != grid.count)
    throw std::invalid_argument("greedy: network output size does not match the grid");
  const std::vector<double> q = forward(net, state);
  int best = 0;
  for (int a = 1; a < grid.count; ++a)
    if (q[static_cast<std::size_t>(a)] > q[static_cast<std::size_t>(best)]) best = a;
  return {best, grid.values[static_cast<std::size_t>(best)]};
}

EpisodeLog control_episode(const QNetwork& net, const ActionGrid& grid, ActuatorSensor& node,
                           double dt, long step_budget) {
  net.validate();
  grid.validate();
  if (!std::isfinite(dt) || dt <= 0.0)
    throw std::invalid_argument("control: dt must be positive and finite");
  if (step_budget < 1) throw std::invalid_argument("control: step budget must be >= 1");
  const auto [cap_min, cap_max] = node.capabilities();
  if (grid.min_watts < cap_min - kGridToleranceWatts ||
      grid.max_watts > cap_max + kGridToleranceWatts)
    throw std::invalid_argument("control: grid exceeds actuator capabilities");

  EpisodeLog log;
  log.policy_label = "rl";
  double cap = grid.max_watts;  // boot interval: no state observed yet
  node.apply_cap(cap);
  int consecutive_read_failures = 0;
  for (long step = 0;; ++step) {
    if (step >= step_budget)
      throw RuntimeAbort("control: step budget exhausted after " + std::to_string(step) +
                         " intervals");
    const IntervalSample sample = node.advance(dt);
    EpisodeStep es;
    es.t = dt * static_cast<double>(step + 1);
    es.state = sample.state;
    es.cap_watts = cap;
    es.heartbeats = sample.heartbeats;
    es.energy_j = sample.energy_j;
    log.steps.push_back(es);
    log.energy_j += sample.energy_j;
    log.execution_time_s = es.t;
    if (sample.done) break;  // stop actuating as soon as the workload completes

    // Sense -> decide -> actuate for the next interval. A failed read holds
    // the current cap; three consecutive failures abort the episode.
    try {
      const NodeState state = node.read_state();
      consecutive_read_failures = 0;
      cap = greedy_action(net, state, grid).second;
    } catch (const DataError&) {
      if (++consecutive_read_failures >= 3)
        throw RuntimeAbort("control: 3 consecutive sensor read failures at step " +
                           std::to_string(step));
    }
    node.apply_cap(cap);
  }
  return log;
}

EpisodeLog control_episode(const QNetwork& net, const ActionGrid& grid,
                           const BenchmarkProfile& profile, double dt, std::uint64_t seed,
                           double step_budget_factor) {
  profile.validate();
  if (!(step_budget_factor > 0.0))
    throw std::invalid_argument("control: step budget factor must be positive");
  const long budget = std::max<long>(
      16, std::lround(step_budget_factor * profile.uncapped_et_estimate() / dt) + 16);
  SimActuatorSensor node(profile, grid, seed);
  EpisodeLog log = control_episode(net, grid, node, dt, budget);
  log.benchmark = profile.name;
  return log;
}

}  // namespace pcaprl
