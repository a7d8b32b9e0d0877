#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "pcaprl/rng.hpp"
#include "pcaprl/types.hpp"

namespace pcaprl {

// Fully connected Q-network: ReLU hidden layers, identity output, inputs
// standardized with the stored feature statistics.
struct QNetwork {
  std::vector<int> layer_dims;               // {kStateDim, hidden..., actions}
  std::vector<std::vector<double>> weights;  // per layer, row-major out x in
  std::vector<std::vector<double>> biases;   // per layer
  std::vector<double> feature_mean = std::vector<double>(kStateDim, 0.0);
  std::vector<double> feature_std = std::vector<double>(kStateDim, 1.0);

  int input_dim() const { return layer_dims.front(); }
  int output_dim() const { return layer_dims.back(); }
  int layer_count() const { return static_cast<int>(weights.size()); }
  std::size_t parameter_count() const;
  void validate() const;  // throws std::invalid_argument

  static QNetwork zeros(const std::vector<int>& dims);
  // Weights ~ U(-1/sqrt(fan_in), 1/sqrt(fan_in)), biases zero.
  static QNetwork random_init(const std::vector<int>& dims, Rng& rng);

  Checkpoint to_checkpoint(const ActionGrid& grid, const Hyperparams& hp) const;
  static QNetwork from_checkpoint(const Checkpoint& ckpt);
};

// Parameter-shaped accumulator.
struct Gradients {
  std::vector<std::vector<double>> weights;
  std::vector<std::vector<double>> biases;

  static Gradients zeros_like(const QNetwork& net);
  void zero();
  void accumulate(const Gradients& other);
  bool all_finite() const;
};

// Single-state inference; rejects non-finite inputs.
std::vector<double> forward(const QNetwork& net, const NodeState& state);
std::vector<double> forward_features(const QNetwork& net, std::span<const double> x);

// Reusable scratch for the batch kernels. Per-sample gradients live in their
// own slots and are reduced in fixed sample order, so results are
// bit-identical for any thread count.
struct BatchWorkspace {
  int batch = 0;
  std::vector<std::vector<double>> act;  // act[0] standardized input ... act[L] = Q
  std::vector<double> delta_front;       // batch x max_dim scratch
  std::vector<double> delta_back;
  std::vector<double> per_sample_grads;  // batch x parameter_count
  std::vector<double> flat_grads;        // parameter_count

  void resize(const QNetwork& net, int batch_size);
};

// X is batch x input_dim, row-major raw (unstandardized) features.
void forward_batch(const QNetwork& net, std::span<const double> x, int batch, BatchWorkspace& ws);
void forward_batch_serial(const QNetwork& net, std::span<const double> x, int batch,
                          BatchWorkspace& ws);

// dloss_dq is batch x output_dim; activations must be in `ws` from a forward
// pass of the same batch through the same network.
void backward_batch(const QNetwork& net, BatchWorkspace& ws, std::span<const double> dloss_dq,
                    Gradients& out);
void backward_batch_serial(const QNetwork& net, BatchWorkspace& ws,
                           std::span<const double> dloss_dq, Gradients& out);

struct AdamConfig {
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

class AdamOptimizer {
 public:
  explicit AdamOptimizer(const QNetwork& shape, AdamConfig cfg = {});

  // Bias-corrected Adam update; throws RuntimeAbort if any parameter is
  // non-finite afterwards.
  void step(QNetwork& net, const Gradients& grads, double lr);

 private:
  AdamConfig cfg_;
  Gradients m_;
  Gradients v_;
  long t_ = 0;
};

}  // namespace pcaprl
