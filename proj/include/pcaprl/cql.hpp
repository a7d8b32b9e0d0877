#pragma once

#include <optional>
#include <span>
#include <vector>

#include "pcaprl/qnet.hpp"
#include "pcaprl/types.hpp"

namespace pcaprl {

struct TrainConfig {
  double gamma = 0.9;  // in [0, 1]
  double alpha = 0.1;  // conservatism weight, >= 0 (0 = plain Q-learning)
  int batch = 128;
  int iterations = 10000;
  double lr = 1e-3;
  std::uint64_t seed = 0;
  std::vector<int> hidden_dims = {10, 10};
  // Iterations between target-network syncs; absent = bootstrap from the live
  // network (single-network mode).
  std::optional<int> target_sync;
  // Optional plateau early stop: stop once the trailing-window mean loss
  // improves by less than early_stop_rel_tol relative to the previous window.
  std::optional<int> early_stop_window;
  double early_stop_rel_tol = 1e-4;

  void validate() const;  // throws std::invalid_argument
};

struct LossTerms {
  double total = 0.0;
  double bellman = 0.0;
  double conservative = 0.0;
};

struct TrainReport {
  std::vector<LossTerms> loss_log;  // one entry per completed iteration
  int iterations_run = 0;
  Checkpoint checkpoint;
};

// Conservative Q-learning objective on one batch:
//   conservative = mean_i [ logsumexp_a Q(s_i,a) - Q(s_i,a_i) ]
//   bellman      = mean_i [ (Q(s_i,a_i) - y_i)^2 ]
//   total        = alpha * conservative + 0.5 * bellman
// with y_i = r_i + gamma * max_a' Q_target(s_i',a') (no gradient through the
// target; terminals use y_i = r_i). Rewards are the stored normalized ones.
LossTerms cql_loss(const QNetwork& net, const QNetwork& target, std::span<const Transition> batch,
                   const TrainConfig& cfg);
LossTerms cql_loss(const QNetwork& net, std::span<const Transition> batch, const TrainConfig& cfg);

// Loss plus analytic parameter gradients (the training step's core).
LossTerms cql_loss_grad(const QNetwork& net, const QNetwork& target,
                        std::span<const Transition> batch, const TrainConfig& cfg,
                        BatchWorkspace& main_ws, BatchWorkspace& next_ws, Gradients& grads);

// Offline training on uniformly resampled batches. Touches only the dataset.
TrainReport train(const Dataset& ds, const TrainConfig& cfg);

struct ProbeRow {
  double alpha = 0.0;
  double mean_ood_q = 0.0;
};

// Trains one agent per alpha from a shared seed and reports the mean Q-value
// assigned to actions never taken at each dataset state. Higher conservatism
// must not raise it.
std::vector<ProbeRow> q_penalty_monotonicity_probe(const Dataset& ds,
                                                   std::span<const double> alphas,
                                                   const TrainConfig& base_cfg);

}  // namespace pcaprl
