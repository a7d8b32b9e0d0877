// Throughput comparison of the OpenMP batch kernels against their serial
// reference implementations, plus a bitwise agreement check.
#include <algorithm>
#include <chrono>
#include <cstdio>
#include <string>
#include <vector>

#include <omp.h>

#include "pcaprl/qnet.hpp"
#include "pcaprl/rng.hpp"

using namespace pcaprl;

namespace {

using Clock = std::chrono::steady_clock;

template <typename Fn>
double best_seconds(Fn&& fn, int reps) {
  double best = 1e300;
  for (int r = 0; r < reps; ++r) {
    const auto t0 = Clock::now();
    fn();
    const auto t1 = Clock::now();
    best = std::min(best, std::chrono::duration<double>(t1 - t0).count());
  }
  return best;
}

bool same_bits(const std::vector<double>& a, const std::vector<double>& b) {
  if (a.size() != b.size()) return false;
  for (std::size_t i = 0; i < a.size(); ++i)
    if (a[i] != b[i]) return false;
  return true;
}

bool same_grads(const Gradients& a, const Gradients& b) {
  for (std::size_t l = 0; l < a.weights.size(); ++l)
    if (!same_bits(a.weights[l], b.weights[l]) || !same_bits(a.biases[l], b.biases[l]))
      return false;
  return true;
}

void bench_net(const std::vector<int>& dims, const std::vector<int>& batches) {
  Rng rng(12345);
  const QNetwork net = QNetwork::random_init(dims, rng);
  std::string shape;
  for (std::size_t i = 0; i < dims.size(); ++i)
    shape += (i ? "x" : "") + std::to_string(dims[i]);
  std::printf("\nnetwork %s\n", shape.c_str());
  std::printf("%-9s %7s %12s %12s %9s %10s\n", "kernel", "batch", "serial_ms", "openmp_ms",
              "speedup", "bit-equal");

  for (int batch : batches) {
    std::vector<double> x(static_cast<std::size_t>(batch) * net.input_dim());
    std::vector<double> dq(static_cast<std::size_t>(batch) * net.output_dim());
    for (double& v : x) v = rng.uniform(0.0, 2.0);
    for (double& v : dq) v = rng.uniform(-1.0, 1.0);

    const int reps = std::clamp(20000 / batch, 5, 400);
    BatchWorkspace ws_serial, ws_omp;
    Gradients g_serial = Gradients::zeros_like(net);
    Gradients g_omp = Gradients::zeros_like(net);

    const double fwd_serial =
        best_seconds([&] { forward_batch_serial(net, x, batch, ws_serial); }, reps);
    const double fwd_omp = best_seconds([&] { forward_batch(net, x, batch, ws_omp); }, reps);
    const bool fwd_equal = same_bits(ws_serial.act.back(), ws_omp.act.back());
    std::printf("%-9s %7d %12.4f %12.4f %8.2fx %10s\n", "forward", batch, fwd_serial * 1e3,
                fwd_omp * 1e3, fwd_serial / fwd_omp, fwd_equal ? "yes" : "NO");

    const double bwd_serial =
        best_seconds([&] { backward_batch_serial(net, ws_serial, dq, g_serial); }, reps);
    const double bwd_omp = best_seconds([&] { backward_batch(net, ws_omp, dq, g_omp); }, reps);
    const bool bwd_equal = same_grads(g_serial, g_omp);
    std::printf("%-9s %7d %12.4f %12.4f %8.2fx %10s\n", "backward", batch, bwd_serial * 1e3,
                bwd_omp * 1e3, bwd_serial / bwd_omp, bwd_equal ? "yes" : "NO");
  }
}

}  // namespace

int main() {
  std::printf("OpenMP max threads: %d\n", omp_get_max_threads());
  const std::vector<int> batches{32, 128, 512, 2048};
  bench_net({5, 10, 10, 16}, batches);
  bench_net({5, 64, 64, 16}, batches);
  return 0;
}
