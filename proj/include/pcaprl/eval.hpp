#pragma once

#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "pcaprl/nodesim.hpp"
#include "pcaprl/types.hpp"

namespace pcaprl {

// Aggregate over the repeats of one (benchmark, policy) cell. Energy is in
// kJ, time in s, so ed2p is in kJ*s^2. ed2p_mean is energy_mean * et_mean^2
// (the means convention); ed2p_std describes the spread of the per-repeat
// products.
struct RunSummary {
  std::string benchmark;
  std::string policy;      // "static" or "rl"
  double cap_watts = 0.0;  // NaN for policies without a fixed cap
  int repeats = 0;
  double et_mean_s = 0.0;
  double et_std_s = 0.0;
  double energy_mean_kj = 0.0;
  double energy_std_kj = 0.0;
  double ed2p_mean = 0.0;
  double ed2p_std = 0.0;
};

// Energy-delay-squared product, kJ*s^2.
double ed2p(double energy_kj, double et_s);

// Progress-per-watt figure, progress^2 / power. Power must be > 0.
double ppw(double progress_hz, double power_w);

// Collapse repeat episodes into one summary row.
RunSummary summarize_episodes(const std::string& benchmark, const std::string& policy,
                              double cap_watts, std::span<const EpisodeLog> episodes);

// One constant-cap summary per grid value, `repeats` episodes each. Episode
// seeds derive from (seed, profile, repeat) only, so different caps (and the
// RL policy) see paired noise streams.
std::vector<RunSummary> static_sweep(const BenchmarkProfile& profile, const ActionGrid& grid,
                                     int repeats, double dt, std::uint64_t seed);

struct Comparison {
  double energy_saved_pct = 0.0;     // 100 * (base_E - rl_E) / base_E
  double et_degradation_pct = 0.0;   // 100 * (rl_ET - base_ET) / base_ET
};

// Percent deltas of the candidate run against a baseline (both mean values).
Comparison compare(const RunSummary& candidate, const RunSummary& baseline);

// Emits pareto.csv, comparison.csv, ed2p.csv (with trailing Average row) and
// digest.txt under out_dir. Comparison/ed2p rows require per-benchmark static
// min-cap, static max-cap, and rl summaries; benchmarks missing one are
// listed in the digest and skipped.
void write_reports(std::span<const RunSummary> summaries, const std::filesystem::path& out_dir);

}  // namespace pcaprl
