#include "pcaprl/collect.hpp"

#include <cmath>
#include <exception>
#include <set>
#include <stdexcept>
#include <string>

namespace pcaprl {

void CollectConfig::validate() const {
  if (episodes_per_profile < 1)
    throw std::invalid_argument("collect: episodes_per_profile must be >= 1");
  if (!std::isfinite(dt) || dt <= 0.0)
    throw std::invalid_argument("collect: dt must be positive and finite");
  if (!std::isfinite(reward_lo) || !std::isfinite(reward_hi) || !(reward_lo < reward_hi))
    throw std::invalid_argument("collect: reward range must be finite with lo < hi");
  if (coverage_retry_episodes < 0)
    throw std::invalid_argument("collect: coverage retry budget must be >= 0");
}

namespace {

// One exploration episode: one boot interval at the max cap (not recorded as a
// transition), then a uniformly random grid cap per interval.
EpisodeLog explore_episode(const BenchmarkProfile& profile, const ActionGrid& grid,
                           const CollectConfig& cfg, int episode) {
  Rng action_rng =
      derive_rng(cfg.seed, hash_name(profile.name) ^ hash_name("collect-actions"), episode);
  long call = 0;
  const PolicyFn policy = [&](const NodeState&) {
    if (call++ == 0) return grid.max_watts;
    return grid.values[action_rng.uniform_index(static_cast<std::uint64_t>(grid.count))];
  };
  const std::uint64_t sim_seed = derive_seed(cfg.seed, hash_name(profile.name), episode);
  EpisodeLog log = run_to_completion(profile, policy, cfg.dt, sim_seed);
  log.policy_label = "random";
  return log;
}

void append_transitions(const EpisodeLog& log, const ActionGrid& grid, Dataset& ds) {
  // steps[0] is the boot interval; each later step closes one transition.
  for (std::size_t i = 1; i < log.steps.size(); ++i) {
    const EpisodeStep& prev = log.steps[i - 1];
    const EpisodeStep& cur = log.steps[i];
    Transition tr;
    tr.benchmark = log.benchmark;
    tr.t = static_cast<long>(i) - 1;
    tr.state = prev.state;
    tr.action_index = snap_to_grid(cur.cap_watts, grid);
    tr.action_watts = grid.values[static_cast<std::size_t>(tr.action_index)];
    tr.next_state = cur.state;
    tr.reward_raw = raw_reward(cur.state.progress, cur.state.power);
    tr.reward_norm = 0.0;  // filled after bounds are fitted
    tr.terminal = i + 1 == log.steps.size();
    ds.transitions.push_back(std::move(tr));
  }
}

std::set<int> missing_actions(const Dataset& ds) {
  std::set<int> missing;
  for (int a = 0; a < ds.grid.count; ++a) missing.insert(a);
  for (const Transition& tr : ds.transitions) missing.erase(tr.action_index);
  return missing;
}

}  // namespace

Dataset collect(std::span<const BenchmarkProfile> profiles, const ActionGrid& grid,
                const CollectConfig& cfg) {
  cfg.validate();
  grid.validate();
  if (profiles.empty()) throw std::invalid_argument("collect: no profiles given");
  {
    std::set<std::string> names;
    for (const BenchmarkProfile& p : profiles) {
      p.validate();
      if (!names.insert(p.name).second)
        throw std::invalid_argument("collect: duplicate profile name " + p.name);
    }
  }

  const int per = cfg.episodes_per_profile;
  const int jobs = static_cast<int>(profiles.size()) * per;
  std::vector<EpisodeLog> episodes(static_cast<std::size_t>(jobs));
  // Exceptions must not unwind out of the parallel region; capture the first
  // one and rethrow after the join.
  std::exception_ptr failure = nullptr;
#pragma omp parallel for schedule(dynamic)
  for (int j = 0; j < jobs; ++j) {
    try {
      episodes[static_cast<std::size_t>(j)] =
          explore_episode(profiles[j / per], grid, cfg, j % per);
    } catch (...) {
#pragma omp critical(pcaprl_collect_failure)
      if (!failure) failure = std::current_exception();
    }
  }
  if (failure) std::rethrow_exception(failure);

  Dataset ds;
  ds.grid = grid;
  ds.reward_lo = cfg.reward_lo;
  ds.reward_hi = cfg.reward_hi;
  for (const EpisodeLog& log : episodes) append_transitions(log, grid, ds);

  // Every grid action must appear somewhere in the dataset; top up with extra
  // exploration episodes if the base pass left holes.
  std::set<int> missing = missing_actions(ds);
  for (int r = 0; r < cfg.coverage_retry_episodes && !missing.empty(); ++r) {
    const BenchmarkProfile& p = profiles[static_cast<std::size_t>(r) % profiles.size()];
    append_transitions(explore_episode(p, grid, cfg, per + r), grid, ds);
    missing = missing_actions(ds);
  }
  if (!missing.empty()) {
    std::string list;
    for (int a : missing) list += (list.empty() ? "" : ", ") + std::to_string(a);
    throw DataError("collect: dataset never exercised action indices " + list);
  }

  const auto bounds = fit_bounds(ds);
  for (Transition& tr : ds.transitions)
    tr.reward_norm =
        normalize_reward(tr.reward_raw, bounds.at(tr.benchmark), cfg.reward_lo, cfg.reward_hi);
  ds.reward_bounds = bounds;
  validate_dataset(ds);
  return ds;
}

ProfileSplit split_train_profiles(std::span<const BenchmarkProfile> profiles) {
  ProfileSplit split;
  for (const BenchmarkProfile& p : profiles)
    (p.train_split ? split.train : split.holdout).push_back(p);
  if (split.train.empty()) throw DataError("profiles: no train-tagged profiles");
  if (split.holdout.empty()) throw DataError("profiles: no holdout-tagged profiles");
  return split;
}

}  // namespace pcaprl
