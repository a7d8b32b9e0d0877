#include "pcaprl/qnet.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace pcaprl {

namespace {

// Per-layer flat offsets into a parameter-shaped buffer: weights of layer l,
// then its biases, in layer order.
struct FlatLayout {
  std::vector<std::size_t> w_off;
  std::vector<std::size_t> b_off;
  std::size_t total = 0;

  explicit FlatLayout(const QNetwork& net) {
    const int layers = net.layer_count();
    w_off.resize(layers);
    b_off.resize(layers);
    std::size_t off = 0;
    for (int l = 0; l < layers; ++l) {
      w_off[l] = off;
      off += net.weights[l].size();
      b_off[l] = off;
      off += net.biases[l].size();
    }
    total = off;
  }
};

// One sample through the network; rows point into the workspace activations.
void forward_one(const QNetwork& net, const double* x, std::vector<std::vector<double>>& act,
                 int row) {
  const int in_dim = net.input_dim();
  double* a0 = act[0].data() + static_cast<std::size_t>(row) * in_dim;
  for (int j = 0; j < in_dim; ++j) a0[j] = (x[j] - net.feature_mean[j]) / net.feature_std[j];
  const int layers = net.layer_count();
  for (int l = 0; l < layers; ++l) {
    const int in = net.layer_dims[l];
    const int out = net.layer_dims[l + 1];
    const double* src = act[l].data() + static_cast<std::size_t>(row) * in;
    double* dst = act[l + 1].data() + static_cast<std::size_t>(row) * out;
    const double* w = net.weights[l].data();
    const double* b = net.biases[l].data();
    const bool hidden = l + 1 < layers;
    for (int o = 0; o < out; ++o) {
      double acc = b[o];
      const double* wrow = w + static_cast<std::size_t>(o) * in;
      for (int i = 0; i < in; ++i) acc += wrow[i] * src[i];
      dst[o] = hidden ? (acc > 0.0 ? acc : 0.0) : acc;
    }
  }
}

// Gradient of one sample, written into its private flat slot.
void backward_one(const QNetwork& net, const FlatLayout& lay, BatchWorkspace& ws,
                  const double* dq, int row, int max_dim) {
  double* slot = ws.per_sample_grads.data() + static_cast<std::size_t>(row) * lay.total;
  double* delta = ws.delta_front.data() + static_cast<std::size_t>(row) * max_dim;
  double* delta_next = ws.delta_back.data() + static_cast<std::size_t>(row) * max_dim;
  const int layers = net.layer_count();
  const int out_dim = net.output_dim();
  std::copy(dq, dq + out_dim, delta);
  for (int l = layers - 1; l >= 0; --l) {
    const int in = net.layer_dims[l];
    const int out = net.layer_dims[l + 1];
    const double* src = ws.act[l].data() + static_cast<std::size_t>(row) * in;
    double* gw = slot + lay.w_off[l];
    double* gb = slot + lay.b_off[l];
    for (int o = 0; o < out; ++o) {
      const double d = delta[o];
      double* grow = gw + static_cast<std::size_t>(o) * in;
      for (int i = 0; i < in; ++i) grow[i] = d * src[i];
      gb[o] = d;
    }
    if (l > 0) {
      const double* w = net.weights[l].data();
      // ReLU mask: the hidden activation is positive iff its preactivation was.
      for (int i = 0; i < in; ++i) {
        double acc = 0.0;
        for (int o = 0; o < out; ++o) acc += w[static_cast<std::size_t>(o) * in + i] * delta[o];
        delta_next[i] = src[i] > 0.0 ? acc : 0.0;
      }
      std::swap(delta, delta_next);
    }
  }
}

// Fixed-order reduction over samples: bit-identical for any thread count.
void reduce_and_unflatten(const QNetwork& net, const FlatLayout& lay, BatchWorkspace& ws,
                          int batch, Gradients& out, bool parallel) {
  const std::size_t total = lay.total;
  double* flat = ws.flat_grads.data();
  const double* psg = ws.per_sample_grads.data();
  const auto sum_param = [&](std::size_t p) {
    double acc = 0.0;
    for (int i = 0; i < batch; ++i) acc += psg[static_cast<std::size_t>(i) * total + p];
    flat[p] = acc;
  };
  if (parallel) {
#pragma omp parallel for schedule(static)
    for (std::int64_t p = 0; p < static_cast<std::int64_t>(total); ++p)
      sum_param(static_cast<std::size_t>(p));
  } else {
    for (std::size_t p = 0; p < total; ++p) sum_param(p);
  }
  for (int l = 0; l < net.layer_count(); ++l) {
    std::copy(flat + lay.w_off[l], flat + lay.w_off[l] + net.weights[l].size(),
              out.weights[l].data());
    std::copy(flat + lay.b_off[l], flat + lay.b_off[l] + net.biases[l].size(),
              out.biases[l].data());
  }
}

int max_layer_dim(const QNetwork& net) {
  return *std::max_element(net.layer_dims.begin(), net.layer_dims.end());
}

void check_batch_args(const QNetwork& net, std::span<const double> x, int batch) {
  net.validate();
  if (batch <= 0) throw std::invalid_argument("batch kernels: batch must be positive");
  if (x.size() != static_cast<std::size_t>(batch) * net.input_dim())
    throw std::invalid_argument("batch kernels: input size mismatch");
  for (double v : x)
    if (!std::isfinite(v)) throw std::invalid_argument("batch kernels: non-finite input");
}

}  // namespace

std::size_t QNetwork::parameter_count() const {
  std::size_t n = 0;
  for (int l = 0; l < layer_count(); ++l) n += weights[l].size() + biases[l].size();
  return n;
}

void QNetwork::validate() const {
  if (layer_dims.size() < 2) throw std::invalid_argument("QNetwork: needs >= 2 layer dims");
  for (int d : layer_dims)
    if (d <= 0) throw std::invalid_argument("QNetwork: non-positive layer dim");
  const std::size_t layers = layer_dims.size() - 1;
  if (weights.size() != layers || biases.size() != layers)
    throw std::invalid_argument("QNetwork: layer count mismatch");
  for (std::size_t l = 0; l < layers; ++l) {
    if (weights[l].size() !=
        static_cast<std::size_t>(layer_dims[l]) * static_cast<std::size_t>(layer_dims[l + 1]))
      throw std::invalid_argument("QNetwork: weight shape mismatch");
    if (biases[l].size() != static_cast<std::size_t>(layer_dims[l + 1]))
      throw std::invalid_argument("QNetwork: bias shape mismatch");
  }
  if (feature_mean.size() != static_cast<std::size_t>(layer_dims.front()) ||
      feature_std.size() != static_cast<std::size_t>(layer_dims.front()))
    throw std::invalid_argument("QNetwork: feature stats size mismatch");
  for (double v : feature_std)
    if (!(v > 0.0)) throw std::invalid_argument("QNetwork: feature std must be positive");
}

QNetwork QNetwork::zeros(const std::vector<int>& dims) {
  QNetwork net;
  net.layer_dims = dims;
  const std::size_t layers = dims.size() < 2 ? 0 : dims.size() - 1;
  net.weights.resize(layers);
  net.biases.resize(layers);
  for (std::size_t l = 0; l < layers; ++l) {
    net.weights[l].assign(static_cast<std::size_t>(dims[l]) * dims[l + 1], 0.0);
    net.biases[l].assign(dims[l + 1], 0.0);
  }
  net.feature_mean.assign(dims.empty() ? 0 : dims.front(), 0.0);
  net.feature_std.assign(dims.empty() ? 0 : dims.front(), 1.0);
  net.validate();
  return net;
}

QNetwork QNetwork::random_init(const std::vector<int>& dims, Rng& rng) {
  QNetwork net = zeros(dims);
  for (int l = 0; l < net.layer_count(); ++l) {
    const double bound = 1.0 / std::sqrt(static_cast<double>(dims[l]));
    for (double& w : net.weights[l]) w = rng.uniform(-bound, bound);
  }
  return net;
}

Checkpoint QNetwork::to_checkpoint(const ActionGrid& grid, const Hyperparams& hp) const {
  validate();
  Checkpoint ckpt;
  ckpt.layer_dims = layer_dims;
  ckpt.weights = weights;
  ckpt.biases = biases;
  ckpt.feature_mean = feature_mean;
  ckpt.feature_std = feature_std;
  ckpt.grid = grid;
  ckpt.hyperparams = hp;
  ckpt.activation = "relu";
  ckpt.validate();
  return ckpt;
}

QNetwork QNetwork::from_checkpoint(const Checkpoint& ckpt) {
  ckpt.validate();
  QNetwork net;
  net.layer_dims = ckpt.layer_dims;
  net.weights = ckpt.weights;
  net.biases = ckpt.biases;
  net.feature_mean = ckpt.feature_mean;
  net.feature_std = ckpt.feature_std;
  net.validate();
  return net;
}

Gradients Gradients::zeros_like(const QNetwork& net) {
  Gradients g;
  g.weights.resize(net.layer_count());
  g.biases.resize(net.layer_count());
  for (int l = 0; l < net.layer_count(); ++l) {
    g.weights[l].assign(net.weights[l].size(), 0.0);
    g.biases[l].assign(net.biases[l].size(), 0.0);
  }
  return g;
}

void Gradients::zero() {
  for (auto& w : weights) std::fill(w.begin(), w.end(), 0.0);
  for (auto& b : biases) std::fill(b.begin(), b.end(), 0.0);
}

void Gradients::accumulate(const Gradients& other) {
  for (std::size_t l = 0; l < weights.size(); ++l) {
    for (std::size_t i = 0; i < weights[l].size(); ++i) weights[l][i] += other.weights[l][i];
    for (std::size_t i = 0; i < biases[l].size(); ++i) biases[l][i] += other.biases[l][i];
  }
}

bool Gradients::all_finite() const {
  for (const auto& w : weights)
    for (double v : w)
      if (!std::isfinite(v)) return false;
  for (const auto& b : biases)
    for (double v : b)
      if (!std::isfinite(v)) return false;
  return true;
}

std::vector<double> forward_features(const QNetwork& net, std::span<const double> x) {
  check_batch_args(net, x, 1);
  BatchWorkspace ws;
  ws.resize(net, 1);
  forward_one(net, x.data(), ws.act, 0);
  return ws.act.back();
}

std::vector<double> forward(const QNetwork& net, const NodeState& state) {
  state.validate();
  const auto f = state.features();
  return forward_features(net, std::span<const double>(f.data(), f.size()));
}

void BatchWorkspace::resize(const QNetwork& net, int batch_size) {
  batch = batch_size;
  const std::size_t b = static_cast<std::size_t>(batch_size);
  act.resize(net.layer_dims.size());
  for (std::size_t l = 0; l < net.layer_dims.size(); ++l)
    act[l].assign(b * static_cast<std::size_t>(net.layer_dims[l]), 0.0);
  const std::size_t md = static_cast<std::size_t>(max_layer_dim(net));
  delta_front.assign(b * md, 0.0);
  delta_back.assign(b * md, 0.0);
  per_sample_grads.assign(b * net.parameter_count(), 0.0);
  flat_grads.assign(net.parameter_count(), 0.0);
}

void forward_batch_serial(const QNetwork& net, std::span<const double> x, int batch,
                          BatchWorkspace& ws) {
  check_batch_args(net, x, batch);
  ws.resize(net, batch);
  const int in = net.input_dim();
  for (int r = 0; r < batch; ++r)
    forward_one(net, x.data() + static_cast<std::size_t>(r) * in, ws.act, r);
}

void forward_batch(const QNetwork& net, std::span<const double> x, int batch, BatchWorkspace& ws) {
  check_batch_args(net, x, batch);
  ws.resize(net, batch);
  const int in = net.input_dim();
  const double* data = x.data();
#pragma omp parallel for schedule(static)
  for (int r = 0; r < batch; ++r)
    forward_one(net, data + static_cast<std::size_t>(r) * in, ws.act, r);
}

namespace {

void backward_batch_impl(const QNetwork& net, BatchWorkspace& ws, std::span<const double> dloss_dq,
                         Gradients& out, bool parallel) {
  net.validate();
  const int batch = ws.batch;
  if (batch <= 0) throw std::invalid_argument("backward: run a forward pass first");
  const int out_dim = net.output_dim();
  if (dloss_dq.size() != static_cast<std::size_t>(batch) * out_dim)
    throw std::invalid_argument("backward: dloss size mismatch");
  const FlatLayout lay(net);
  const int md = max_layer_dim(net);
  const double* dq = dloss_dq.data();
  if (parallel) {
#pragma omp parallel for schedule(static)
    for (int r = 0; r < batch; ++r)
      backward_one(net, lay, ws, dq + static_cast<std::size_t>(r) * out_dim, r, md);
  } else {
    for (int r = 0; r < batch; ++r)
      backward_one(net, lay, ws, dq + static_cast<std::size_t>(r) * out_dim, r, md);
  }
  reduce_and_unflatten(net, lay, ws, batch, out, parallel);
}

}  // namespace

void backward_batch(const QNetwork& net, BatchWorkspace& ws, std::span<const double> dloss_dq,
                    Gradients& out) {
  backward_batch_impl(net, ws, dloss_dq, out, true);
}

void backward_batch_serial(const QNetwork& net, BatchWorkspace& ws,
                           std::span<const double> dloss_dq, Gradients& out) {
  backward_batch_impl(net, ws, dloss_dq, out, false);
}

AdamOptimizer::AdamOptimizer(const QNetwork& shape, AdamConfig cfg)
    : cfg_(cfg), m_(Gradients::zeros_like(shape)), v_(Gradients::zeros_like(shape)) {}

void AdamOptimizer::step(QNetwork& net, const Gradients& grads, double lr) {
  if (!(lr > 0.0) || !std::isfinite(lr)) throw std::invalid_argument("adam: bad learning rate");
  ++t_;
  const double bc1 = 1.0 - std::pow(cfg_.beta1, static_cast<double>(t_));
  const double bc2 = 1.0 - std::pow(cfg_.beta2, static_cast<double>(t_));
  const auto update = [&](std::vector<double>& p, std::vector<double>& m, std::vector<double>& v,
                          const std::vector<double>& g) {
    if (p.size() != g.size()) throw std::invalid_argument("adam: gradient shape mismatch");
    for (std::size_t i = 0; i < p.size(); ++i) {
      m[i] = cfg_.beta1 * m[i] + (1.0 - cfg_.beta1) * g[i];
      v[i] = cfg_.beta2 * v[i] + (1.0 - cfg_.beta2) * g[i] * g[i];
      const double mhat = m[i] / bc1;
      const double vhat = v[i] / bc2;
      p[i] -= lr * mhat / (std::sqrt(vhat) + cfg_.epsilon);
      if (!std::isfinite(p[i])) throw RuntimeAbort("adam: non-finite parameter after update");
    }
  };
  for (int l = 0; l < net.layer_count(); ++l) {
    update(net.weights[l], m_.weights[l], v_.weights[l], grads.weights[l]);
    update(net.biases[l], m_.biases[l], v_.biases[l], grads.biases[l]);
  }
}

}  // namespace pcaprl
