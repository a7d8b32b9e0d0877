#pragma once

#include <vector>

namespace pcaprl {

// One sampling interval of hardware counter readings.
struct RawCounters {
  double tot_ins = 0.0;
  double tot_cyc = 0.0;
  double l3_tca = 0.0;
  double l3_tcm = 0.0;
  double res_stl = 0.0;

  // finite, non-negative, l3_tcm <= l3_tca, res_stl <= tot_cyc
  void validate() const;
};

struct DerivedMetrics {
  double ipc = 0.0;
  double stl = 0.0;
  double cmr = 0.0;
};

// IPC, stalled-cycle fraction, LLC miss rate. A zero denominator yields 0.
DerivedMetrics derived_metrics(const RawCounters& c);

// Heartbeat reports: `n` beats arrived in (previous report time, t]. The
// stream starts at t_start (the instant before the first report's interval).
struct HeartbeatBatch {
  struct Report {
    double t = 0.0;
    double n = 0.0;
  };
  double t_start = 0.0;
  std::vector<Report> reports;

  void validate() const;  // strictly increasing times, n >= 0
};

// Median heartbeat rate over reports with t in (window_lo, window_hi]. Each
// report's rate is n / (t - previous report time), with the predecessor taken
// from the full stream. Even selections average the two central rates; an
// empty window reads 0 Hz.
double progress(const HeartbeatBatch& batch, double window_lo, double window_hi);

}  // namespace pcaprl
