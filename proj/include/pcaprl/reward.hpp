#pragma once

#include <map>
#include <string>

#include "pcaprl/types.hpp"

namespace pcaprl {

inline constexpr double kRewardPowerOffset = 1e-3;  // keeps the denominator nonzero
inline constexpr double kDefaultRewardLo = -5.0;
inline constexpr double kDefaultRewardHi = 5.0;

// progress^3 / (power + 1e-3), evaluated on the post-transition observation.
double raw_reward(double next_progress_hz, double next_power_w);

// Exact per-benchmark min/max of raw rewards. Throws DataError if the dataset
// holds no transitions.
std::map<std::string, RewardBounds> fit_bounds(const Dataset& ds);

// Affine map r_min -> lo, r_max -> hi; degenerate bounds collapse to 0.
double normalize_reward(double r_raw, const RewardBounds& bounds,
                        double lo = kDefaultRewardLo, double hi = kDefaultRewardHi);

}  // namespace pcaprl
