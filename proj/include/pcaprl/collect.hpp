#pragma once

#include <span>

#include "pcaprl/nodesim.hpp"
#include "pcaprl/reward.hpp"
#include "pcaprl/types.hpp"

namespace pcaprl {

struct CollectConfig {
  int episodes_per_profile = 3;
  double dt = 1.0;
  std::uint64_t seed = 0;
  double reward_lo = kDefaultRewardLo;
  double reward_hi = kDefaultRewardHi;
  // Extra episodes per profile allowed to close an action-coverage gap before
  // collection fails.
  int coverage_retry_episodes = 8;

  void validate() const;
};

// Offline data collection: each episode boots one interval at the max cap,
// then applies uniformly random caps per interval until completion. Rewards
// are fitted and normalized per benchmark; the last transition of each
// episode is terminal. The returned dataset always passes validate_dataset.
Dataset collect(std::span<const BenchmarkProfile> profiles, const ActionGrid& grid,
                const CollectConfig& cfg);

struct ProfileSplit {
  std::vector<BenchmarkProfile> train;
  std::vector<BenchmarkProfile> holdout;
};

// Partition by the profiles' train/holdout tag; throws DataError if either
// side ends up empty.
ProfileSplit split_train_profiles(std::span<const BenchmarkProfile> profiles);

}  // namespace pcaprl
