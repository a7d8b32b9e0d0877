#include "pcaprl/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace pcaprl {

void RawCounters::validate() const {
  const double fields[] = {tot_ins, tot_cyc, l3_tca, l3_tcm, res_stl};
  for (double v : fields) {
    if (!std::isfinite(v)) throw std::invalid_argument("RawCounters: non-finite counter");
    if (v < 0.0) throw std::invalid_argument("RawCounters: negative counter");
  }
  if (l3_tcm > l3_tca) throw std::invalid_argument("RawCounters: l3_tcm exceeds l3_tca");
  if (res_stl > tot_cyc) throw std::invalid_argument("RawCounters: res_stl exceeds tot_cyc");
}

DerivedMetrics derived_metrics(const RawCounters& c) {
  c.validate();
  const auto ratio = [](double num, double den) { return den == 0.0 ? 0.0 : num / den; };
  DerivedMetrics m;
  m.ipc = ratio(c.tot_ins, c.tot_cyc);
  m.stl = ratio(c.res_stl, c.tot_cyc);
  m.cmr = ratio(c.l3_tcm, c.l3_tca);
  return m;
}

void HeartbeatBatch::validate() const {
  if (!std::isfinite(t_start)) throw std::invalid_argument("HeartbeatBatch: non-finite t_start");
  double prev = t_start;
  for (const Report& r : reports) {
    if (!std::isfinite(r.t) || !std::isfinite(r.n))
      throw std::invalid_argument("HeartbeatBatch: non-finite report");
    if (r.n < 0.0) throw std::invalid_argument("HeartbeatBatch: negative heartbeat count");
    if (r.t <= prev) throw std::invalid_argument("HeartbeatBatch: non-increasing report times");
    prev = r.t;
  }
}

double progress(const HeartbeatBatch& batch, double window_lo, double window_hi) {
  batch.validate();
  if (!std::isfinite(window_lo) || !std::isfinite(window_hi) || !(window_hi > window_lo))
    throw std::invalid_argument("progress: degenerate window");
  // Each report's rate spans (previous report, this report] regardless of the
  // window; the window only selects which rates enter the median.
  std::vector<double> rates;
  double prev = batch.t_start;
  for (const auto& r : batch.reports) {
    if (r.t > window_lo && r.t <= window_hi) rates.push_back(r.n / (r.t - prev));
    prev = r.t;
  }
  if (rates.empty()) return 0.0;
  std::sort(rates.begin(), rates.end());
  const std::size_t n = rates.size();
  if (n % 2 == 1) return rates[n / 2];
  return 0.5 * (rates[n / 2 - 1] + rates[n / 2]);
}

}  // namespace pcaprl
