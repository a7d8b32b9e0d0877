#include "pcaprl/reward.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace pcaprl {

double raw_reward(double next_progress_hz, double next_power_w) {
  if (!std::isfinite(next_progress_hz) || !std::isfinite(next_power_w))
    throw std::invalid_argument("raw_reward: non-finite input");
  if (next_progress_hz < 0.0 || next_power_w < 0.0)
    throw std::invalid_argument("raw_reward: negative input");
  return next_progress_hz * next_progress_hz * next_progress_hz /
         (next_power_w + kRewardPowerOffset);
}

std::map<std::string, RewardBounds> fit_bounds(const Dataset& ds) {
  if (ds.transitions.empty()) throw DataError("fit_bounds: empty dataset");
  std::map<std::string, RewardBounds> bounds;
  for (const Transition& tr : ds.transitions) {
    if (!std::isfinite(tr.reward_raw)) throw DataError("fit_bounds: non-finite raw reward");
    auto [it, fresh] = bounds.try_emplace(tr.benchmark, RewardBounds{tr.reward_raw, tr.reward_raw});
    if (!fresh) {
      it->second.r_min = std::min(it->second.r_min, tr.reward_raw);
      it->second.r_max = std::max(it->second.r_max, tr.reward_raw);
    }
  }
  return bounds;
}

double normalize_reward(double r_raw, const RewardBounds& bounds, double lo, double hi) {
  if (!std::isfinite(r_raw)) throw std::invalid_argument("normalize_reward: non-finite reward");
  if (!(hi > lo)) throw std::invalid_argument("normalize_reward: bad target range");
  if (!(bounds.r_max >= bounds.r_min))
    throw std::invalid_argument("normalize_reward: inverted bounds");
  const double span = bounds.r_max - bounds.r_min;
  if (span == 0.0) return 0.0;
  const double clipped = std::clamp(r_raw, bounds.r_min, bounds.r_max);
  // Dividing before scaling keeps t in [0, 1] exactly (x/x == 1), so the
  // result can never leave [lo, hi] by a rounding ulp.
  const double t = (clipped - bounds.r_min) / span;
  return lo + t * (hi - lo);
}

}  // namespace pcaprl
