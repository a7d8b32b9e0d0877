#include "pcaprl/types.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace pcaprl {

namespace {

bool finite(double v) { return std::isfinite(v); }

}  // namespace

void NodeState::validate() const {
  if (!finite(progress) || !finite(power) || !finite(ipc) || !finite(stl) || !finite(cmr))
    throw std::invalid_argument("NodeState: non-finite field");
  if (progress < 0.0 || power < 0.0 || ipc < 0.0)
    throw std::invalid_argument("NodeState: negative progress/power/ipc");
  if (stl < 0.0 || stl > 1.0 || cmr < 0.0 || cmr > 1.0)
    throw std::invalid_argument("NodeState: stl/cmr outside [0, 1]");
}

void ActionGrid::validate() const {
  if (count < 1 || static_cast<int>(values.size()) != count)
    throw std::invalid_argument("ActionGrid: count/values mismatch");
  if (!finite(min_watts) || !finite(max_watts) || min_watts <= 0.0)
    throw std::invalid_argument("ActionGrid: bad range");
  if (max_watts < min_watts) throw std::invalid_argument("ActionGrid: max below min");
  if (values.front() != min_watts || values.back() != max_watts)
    throw std::invalid_argument("ActionGrid: endpoints not exact");
  if (count > 1) {
    const double step = (max_watts - min_watts) / (count - 1);
    for (int i = 0; i + 1 < count; ++i) {
      if (values[i + 1] <= values[i])
        throw std::invalid_argument("ActionGrid: values not strictly increasing");
      if (std::abs((values[i + 1] - values[i]) - step) > kGridToleranceWatts)
        throw std::invalid_argument("ActionGrid: spacing not uniform");
    }
  }
}

ActionGrid make_action_grid(double min_watts, double max_watts, int count) {
  if (!finite(min_watts) || !finite(max_watts))
    throw std::invalid_argument("make_action_grid: non-finite bounds");
  if (count < 2) throw std::invalid_argument("make_action_grid: count must be >= 2");
  if (!(max_watts > min_watts)) throw std::invalid_argument("make_action_grid: max must exceed min");
  if (min_watts <= 0.0) throw std::invalid_argument("make_action_grid: caps must be positive");
  ActionGrid g;
  g.min_watts = min_watts;
  g.max_watts = max_watts;
  g.count = count;
  g.values.resize(count);
  const double step = (max_watts - min_watts) / (count - 1);
  for (int i = 0; i < count; ++i) g.values[i] = min_watts + step * i;
  g.values.front() = min_watts;  // endpoints exact regardless of rounding
  g.values.back() = max_watts;
  g.validate();
  return g;
}

ActionGrid default_action_grid() {
  return make_action_grid(kDefaultMinCapWatts, kDefaultMaxCapWatts, kDefaultGridCount);
}

int snap_to_grid(double watts, const ActionGrid& grid) {
  grid.validate();
  if (!finite(watts)) throw std::invalid_argument("snap_to_grid: non-finite watts");
  if (watts <= grid.values.front()) return 0;
  if (watts >= grid.values.back()) return grid.count - 1;
  const auto it = std::lower_bound(grid.values.begin(), grid.values.end(), watts);
  const int hi = static_cast<int>(it - grid.values.begin());
  const int lo = hi - 1;
  const double d_lo = watts - grid.values[lo];
  const double d_hi = grid.values[hi] - watts;
  // Ties (within the grid tolerance) go to the lower, energy-conservative cap.
  return (d_lo <= d_hi + kGridToleranceWatts) ? lo : hi;
}

void validate_dataset(const Dataset& ds) {
  try {
    ds.grid.validate();
  } catch (const std::invalid_argument& e) {
    throw DataError(std::string("dataset: bad grid: ") + e.what());
  }
  if (ds.transitions.empty()) throw DataError("dataset: no transitions");
  if (!(ds.reward_hi > ds.reward_lo)) throw DataError("dataset: bad reward range");
  std::vector<long> coverage(ds.grid.count, 0);
  const double norm_slack = 1e-9 * (ds.reward_hi - ds.reward_lo);
  for (std::size_t i = 0; i < ds.transitions.size(); ++i) {
    const Transition& tr = ds.transitions[i];
    const auto fail = [&](const std::string& what) {
      std::ostringstream os;
      os << "dataset: transition " << i << " (" << tr.benchmark << "): " << what;
      throw DataError(os.str());
    };
    if (tr.benchmark.empty()) fail("empty benchmark name");
    if (tr.t < 0) fail("negative step index");
    try {
      tr.state.validate();
      tr.next_state.validate();
    } catch (const std::invalid_argument& e) {
      fail(e.what());
    }
    if (tr.action_index < 0 || tr.action_index >= ds.grid.count) fail("action index out of range");
    if (tr.action_watts != ds.grid.values[tr.action_index]) fail("action watts off-grid");
    if (!finite(tr.reward_raw) || !finite(tr.reward_norm)) fail("non-finite reward");
    if (tr.reward_norm < ds.reward_lo - norm_slack || tr.reward_norm > ds.reward_hi + norm_slack)
      fail("normalized reward outside range");
    if (!ds.reward_bounds.count(tr.benchmark)) fail("missing reward bounds for benchmark");
    ++coverage[tr.action_index];
  }
  for (int a = 0; a < ds.grid.count; ++a) {
    if (coverage[a] == 0) {
      std::ostringstream os;
      os << "dataset: action " << a << " (" << ds.grid.values[a] << " W) never taken";
      throw DataError(os.str());
    }
  }
}

void Checkpoint::validate() const {
  if (layer_dims.size() < 2) throw DataError("checkpoint: needs at least input and output dims");
  if (layer_dims.front() != kStateDim) throw DataError("checkpoint: input dim must match state");
  try {
    grid.validate();
  } catch (const std::invalid_argument& e) {
    throw DataError(std::string("checkpoint: bad grid: ") + e.what());
  }
  if (layer_dims.back() != grid.count) throw DataError("checkpoint: output dim != grid count");
  const std::size_t layers = layer_dims.size() - 1;
  if (weights.size() != layers || biases.size() != layers)
    throw DataError("checkpoint: layer count mismatch");
  for (std::size_t l = 0; l < layers; ++l) {
    const std::size_t in = static_cast<std::size_t>(layer_dims[l]);
    const std::size_t out = static_cast<std::size_t>(layer_dims[l + 1]);
    if (weights[l].size() != in * out || biases[l].size() != out)
      throw DataError("checkpoint: parameter shape mismatch");
    for (double v : weights[l])
      if (!finite(v)) throw DataError("checkpoint: non-finite weight");
    for (double v : biases[l])
      if (!finite(v)) throw DataError("checkpoint: non-finite bias");
  }
  if (feature_mean.size() != kStateDim || feature_std.size() != kStateDim)
    throw DataError("checkpoint: feature stats must have one entry per state field");
  for (double v : feature_mean)
    if (!finite(v)) throw DataError("checkpoint: non-finite feature mean");
  for (double v : feature_std)
    if (!finite(v) || v <= 0.0) throw DataError("checkpoint: feature std must be positive");
  if (activation != "relu") throw DataError("checkpoint: unsupported activation " + activation);
  if (hyperparams.gamma < 0.0 || hyperparams.gamma > 1.0)
    throw DataError("checkpoint: gamma outside [0, 1]");
  if (hyperparams.alpha < 0.0) throw DataError("checkpoint: negative alpha");
}

}  // namespace pcaprl
