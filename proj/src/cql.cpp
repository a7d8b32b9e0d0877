#include "pcaprl/cql.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <set>
#include <stdexcept>

#include "pcaprl/rng.hpp"

namespace pcaprl {

void TrainConfig::validate() const {
  if (!(gamma >= 0.0 && gamma <= 1.0)) throw std::invalid_argument("train: gamma must be in [0,1]");
  if (!(alpha >= 0.0) || !std::isfinite(alpha))
    throw std::invalid_argument("train: alpha must be >= 0");
  if (batch <= 0) throw std::invalid_argument("train: batch must be positive");
  if (iterations <= 0) throw std::invalid_argument("train: iterations must be positive");
  if (!(lr > 0.0) || !std::isfinite(lr)) throw std::invalid_argument("train: lr must be positive");
  for (int d : hidden_dims)
    if (d <= 0) throw std::invalid_argument("train: hidden dims must be positive");
  if (target_sync && *target_sync <= 0)
    throw std::invalid_argument("train: target sync period must be positive");
  if (early_stop_window && *early_stop_window <= 0)
    throw std::invalid_argument("train: early stop window must be positive");
  if (!(early_stop_rel_tol >= 0.0)) throw std::invalid_argument("train: early stop tol must be >= 0");
}

namespace {

void fill_features(std::span<const Transition> batch, std::vector<double>& x,
                   std::vector<double>& xn) {
  const std::size_t b = batch.size();
  x.resize(b * kStateDim);
  xn.resize(b * kStateDim);
  for (std::size_t i = 0; i < b; ++i) {
    const auto f = batch[i].state.features();
    const auto fn = batch[i].next_state.features();
    std::copy(f.begin(), f.end(), x.begin() + i * kStateDim);
    std::copy(fn.begin(), fn.end(), xn.begin() + i * kStateDim);
  }
}

// Forward both networks, compute the loss terms, and (if dq != nullptr) the
// per-output derivative dTotal/dQ[i][a] ready for backprop.
LossTerms cql_terms(const QNetwork& net, const QNetwork& target, std::span<const Transition> batch,
                    const TrainConfig& cfg, BatchWorkspace& main_ws, BatchWorkspace& next_ws,
                    std::vector<double>* dq) {
  cfg.validate();
  if (batch.empty()) throw std::invalid_argument("cql: empty batch");
  const int out_dim = net.output_dim();
  if (target.output_dim() != out_dim || target.input_dim() != net.input_dim())
    throw std::invalid_argument("cql: live/target shape mismatch");
  const int b = static_cast<int>(batch.size());
  for (const Transition& tr : batch) {
    if (tr.action_index < 0 || tr.action_index >= out_dim)
      throw std::invalid_argument("cql: action index out of range for network");
    if (!std::isfinite(tr.reward_norm)) throw std::invalid_argument("cql: non-finite reward");
  }

  static thread_local std::vector<double> x, xn;
  fill_features(batch, x, xn);
  forward_batch(target, xn, b, next_ws);
  forward_batch(net, x, b, main_ws);
  const std::vector<double>& q_next = next_ws.act.back();
  const std::vector<double>& q = main_ws.act.back();

  if (dq) dq->assign(static_cast<std::size_t>(b) * out_dim, 0.0);
  double sum_cons = 0.0;
  double sum_bell = 0.0;
  const double inv_b = 1.0 / static_cast<double>(b);
  for (int i = 0; i < b; ++i) {
    const double* qi = q.data() + static_cast<std::size_t>(i) * out_dim;
    const int ai = batch[i].action_index;

    // Bellman target from the frozen network; no gradient flows through it.
    double y = batch[i].reward_norm;
    if (!batch[i].terminal) {
      const double* qn = q_next.data() + static_cast<std::size_t>(i) * out_dim;
      y += cfg.gamma * *std::max_element(qn, qn + out_dim);
    }

    const double qmax = *std::max_element(qi, qi + out_dim);
    double expsum = 0.0;
    for (int a = 0; a < out_dim; ++a) expsum += std::exp(qi[a] - qmax);
    const double lse = qmax + std::log(expsum);
    const double td = qi[ai] - y;
    sum_cons += lse - qi[ai];
    sum_bell += td * td;

    if (dq) {
      double* di = dq->data() + static_cast<std::size_t>(i) * out_dim;
      for (int a = 0; a < out_dim; ++a) {
        const double softmax_a = std::exp(qi[a] - qmax) / expsum;
        double g = cfg.alpha * softmax_a;
        if (a == ai) g += -cfg.alpha + td;
        di[a] = g * inv_b;
      }
    }
  }

  LossTerms terms;
  terms.conservative = sum_cons * inv_b;
  terms.bellman = sum_bell * inv_b;
  terms.total = cfg.alpha * terms.conservative + 0.5 * terms.bellman;
  if (!std::isfinite(terms.total)) throw RuntimeAbort("cql: non-finite loss");
  return terms;
}

}  // namespace

LossTerms cql_loss(const QNetwork& net, const QNetwork& target, std::span<const Transition> batch,
                   const TrainConfig& cfg) {
  BatchWorkspace main_ws, next_ws;
  return cql_terms(net, target, batch, cfg, main_ws, next_ws, nullptr);
}

LossTerms cql_loss(const QNetwork& net, std::span<const Transition> batch,
                   const TrainConfig& cfg) {
  return cql_loss(net, net, batch, cfg);
}

LossTerms cql_loss_grad(const QNetwork& net, const QNetwork& target,
                        std::span<const Transition> batch, const TrainConfig& cfg,
                        BatchWorkspace& main_ws, BatchWorkspace& next_ws, Gradients& grads) {
  static thread_local std::vector<double> dq;
  const LossTerms terms = cql_terms(net, target, batch, cfg, main_ws, next_ws, &dq);
  backward_batch(net, main_ws, dq, grads);
  if (!grads.all_finite()) throw RuntimeAbort("cql: non-finite gradient");
  return terms;
}

namespace {

// Per-feature mean and population std over the dataset's visited states.
void feature_stats(const Dataset& ds, std::vector<double>& mean, std::vector<double>& stddev) {
  mean.assign(kStateDim, 0.0);
  stddev.assign(kStateDim, 0.0);
  const double n = static_cast<double>(ds.transitions.size());
  for (const Transition& tr : ds.transitions) {
    const auto f = tr.state.features();
    for (int j = 0; j < kStateDim; ++j) mean[j] += f[j];
  }
  for (int j = 0; j < kStateDim; ++j) mean[j] /= n;
  for (const Transition& tr : ds.transitions) {
    const auto f = tr.state.features();
    for (int j = 0; j < kStateDim; ++j) {
      const double d = f[j] - mean[j];
      stddev[j] += d * d;
    }
  }
  for (int j = 0; j < kStateDim; ++j) {
    stddev[j] = std::sqrt(stddev[j] / n);
    if (stddev[j] < 1e-9) stddev[j] = 1.0;  // constant feature: leave it centered only
  }
}

}  // namespace

TrainReport train(const Dataset& ds, const TrainConfig& cfg) {
  cfg.validate();
  validate_dataset(ds);

  std::vector<int> dims;
  dims.push_back(kStateDim);
  for (int d : cfg.hidden_dims) dims.push_back(d);
  dims.push_back(ds.grid.count);

  Rng init_rng = derive_rng(cfg.seed, hash_name("init"));
  QNetwork net = QNetwork::random_init(dims, init_rng);
  feature_stats(ds, net.feature_mean, net.feature_std);
  QNetwork target = net;

  Rng batch_rng = derive_rng(cfg.seed, hash_name("batch"));
  AdamOptimizer opt(net, AdamConfig{});
  BatchWorkspace main_ws, next_ws;
  Gradients grads = Gradients::zeros_like(net);
  std::vector<Transition> batch(static_cast<std::size_t>(cfg.batch));
  const std::size_t n = ds.transitions.size();

  TrainReport report;
  report.loss_log.reserve(static_cast<std::size_t>(cfg.iterations));
  for (int it = 0; it < cfg.iterations; ++it) {
    if (cfg.target_sync && it % *cfg.target_sync == 0) target = net;
    for (int i = 0; i < cfg.batch; ++i) batch[i] = ds.transitions[batch_rng.uniform_index(n)];
    // Single-network mode bootstraps from the live network (still no gradient
    // through the target values).
    const QNetwork& tgt = cfg.target_sync ? target : net;
    const LossTerms terms = cql_loss_grad(net, tgt, batch, cfg, main_ws, next_ws, grads);
    opt.step(net, grads, cfg.lr);
    report.loss_log.push_back(terms);
    report.iterations_run = it + 1;

    if (cfg.early_stop_window) {
      const std::size_t w = static_cast<std::size_t>(*cfg.early_stop_window);
      if (report.loss_log.size() >= 2 * w) {
        double prev = 0.0, cur = 0.0;
        const std::size_t end = report.loss_log.size();
        for (std::size_t k = end - 2 * w; k < end - w; ++k) prev += report.loss_log[k].total;
        for (std::size_t k = end - w; k < end; ++k) cur += report.loss_log[k].total;
        prev /= static_cast<double>(w);
        cur /= static_cast<double>(w);
        if (prev - cur < cfg.early_stop_rel_tol * std::max(std::abs(prev), 1e-12)) break;
      }
    }
  }

  Hyperparams hp;
  hp.gamma = cfg.gamma;
  hp.alpha = cfg.alpha;
  hp.batch = cfg.batch;
  hp.iterations = cfg.iterations;
  hp.learning_rate = cfg.lr;
  hp.seed = cfg.seed;
  report.checkpoint = net.to_checkpoint(ds.grid, hp);
  return report;
}

std::vector<ProbeRow> q_penalty_monotonicity_probe(const Dataset& ds,
                                                   std::span<const double> alphas,
                                                   const TrainConfig& base_cfg) {
  validate_dataset(ds);
  // Actions observed at each distinct visited state; everything else at that
  // state is out-of-distribution for the probe.
  std::map<std::array<double, kStateDim>, std::set<int>> taken;
  for (const Transition& tr : ds.transitions) taken[tr.state.features()].insert(tr.action_index);

  std::vector<ProbeRow> rows;
  rows.reserve(alphas.size());
  for (double alpha : alphas) {
    TrainConfig cfg = base_cfg;
    cfg.alpha = alpha;
    const TrainReport report = train(ds, cfg);
    const QNetwork net = QNetwork::from_checkpoint(report.checkpoint);
    double sum = 0.0;
    std::size_t count = 0;
    for (const auto& [features, actions] : taken) {
      const std::vector<double> q =
          forward_features(net, std::span<const double>(features.data(), features.size()));
      for (int a = 0; a < ds.grid.count; ++a) {
        if (actions.count(a)) continue;
        sum += q[static_cast<std::size_t>(a)];
        ++count;
      }
    }
    ProbeRow row;
    row.alpha = alpha;
    row.mean_ood_q = count == 0 ? 0.0 : sum / static_cast<double>(count);
    rows.push_back(row);
  }
  return rows;
}

}  // namespace pcaprl
