#pragma once

#include <utility>

#include "pcaprl/nodesim.hpp"
#include "pcaprl/qnet.hpp"
#include "pcaprl/types.hpp"

namespace pcaprl {

struct IntervalSample {
  NodeState state;
  long heartbeats = 0;
  double energy_j = 0.0;
  bool done = false;
};

// Node abstraction the controller drives. A hardware backend (RAPL caps,
// PAPI counters, heartbeat stream) implements the same surface; the
// simulator-backed one ships below. advance() is the time driver: it runs one
// control interval under the most recently applied cap.
class ActuatorSensor {
 public:
  virtual ~ActuatorSensor() = default;
  virtual NodeState read_state() const = 0;
  virtual void apply_cap(double watts) = 0;
  virtual std::pair<double, double> capabilities() const = 0;  // {min, max} watts
  virtual IntervalSample advance(double dt) = 0;
};

class SimActuatorSensor final : public ActuatorSensor {
 public:
  SimActuatorSensor(const BenchmarkProfile& profile, ActionGrid grid, std::uint64_t seed);

  NodeState read_state() const override;
  // Accepts only grid-representable caps (within 1e-9 W).
  void apply_cap(double watts) override;
  std::pair<double, double> capabilities() const override;
  IntervalSample advance(double dt) override;

  long actuation_count() const { return actuations_; }
  bool done() const { return sim_.done(); }

 private:
  NodeSimulator sim_;
  ActionGrid grid_;
  NodeState last_state_;
  double cap_ = 0.0;
  long actuations_ = 0;
};

// Argmax over Q(state, .); ties break toward the lower cap index. Returns
// {index, grid watts}. The grid size must match the network's output size.
std::pair<int, double> greedy_action(const QNetwork& net, const NodeState& state,
                                     const ActionGrid& grid);

// Greedy 1-actuation-per-interval control loop. The first interval runs at the
// max cap (no state has been observed yet); every later interval applies the
// greedy cap for the latest state. Sensor read failures hold the previous cap;
// three consecutive failures abort. Aborts past step_budget intervals.
EpisodeLog control_episode(const QNetwork& net, const ActionGrid& grid, ActuatorSensor& node,
                           double dt, long step_budget);

// Simulator-backed convenience wrapper.
EpisodeLog control_episode(const QNetwork& net, const ActionGrid& grid,
                           const BenchmarkProfile& profile, double dt, std::uint64_t seed,
                           double step_budget_factor = 10.0);

}  // namespace pcaprl
