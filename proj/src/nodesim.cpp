#include "pcaprl/nodesim.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <stdexcept>

namespace pcaprl {

namespace {

std::atomic<std::uint64_t> g_total_steps{0};

void check_fraction(double v, const char* what) {
  if (!std::isfinite(v) || v < 0.0 || v > 1.0)
    throw std::invalid_argument(std::string("profile: ") + what + " must be in [0,1]");
}

}  // namespace

void BenchmarkProfile::validate() const {
  if (name.empty()) throw std::invalid_argument("profile: empty name");
  for (double v : {p_idle, p_max_draw, p_knee, progress_max, response_exp, ipc_base, stl_base,
                   cmr_base, noise_rel})
    if (!std::isfinite(v)) throw std::invalid_argument("profile: non-finite parameter");
  if (!(p_idle > 0.0)) throw std::invalid_argument("profile: p_idle must be positive");
  if (!(p_idle < p_knee && p_knee <= p_max_draw))
    throw std::invalid_argument("profile: requires p_idle < p_knee <= p_max_draw");
  if (!(progress_max > 0.0)) throw std::invalid_argument("profile: progress_max must be positive");
  if (!(response_exp > 0.0)) throw std::invalid_argument("profile: response_exp must be positive");
  if (ipc_base < 0.0) throw std::invalid_argument("profile: ipc_base must be non-negative");
  check_fraction(stl_base, "stl_base");
  check_fraction(cmr_base, "cmr_base");
  if (noise_rel < 0.0 || noise_rel >= 1.0)
    throw std::invalid_argument("profile: noise_rel must be in [0,1)");
  if (total_iterations <= 0) throw std::invalid_argument("profile: total_iterations must be positive");
  if (!phases.empty()) {
    if (phases.front().start_fraction != 0.0)
      throw std::invalid_argument("profile: first phase must start at fraction 0");
    double prev = -1.0;
    for (const PhaseSpec& ph : phases) {
      if (!std::isfinite(ph.start_fraction) || ph.start_fraction < 0.0 || ph.start_fraction >= 1.0)
        throw std::invalid_argument("profile: phase start fraction must be in [0,1)");
      if (ph.start_fraction <= prev)
        throw std::invalid_argument("profile: phase starts must be strictly increasing");
      prev = ph.start_fraction;
      if (ph.progress_max && !(*ph.progress_max > 0.0))
        throw std::invalid_argument("profile: phase progress_max must be positive");
      if (ph.response_exp && !(*ph.response_exp > 0.0))
        throw std::invalid_argument("profile: phase response_exp must be positive");
      if (ph.ipc_base && *ph.ipc_base < 0.0)
        throw std::invalid_argument("profile: phase ipc_base must be non-negative");
      if (ph.stl_base) check_fraction(*ph.stl_base, "phase stl_base");
      if (ph.cmr_base) check_fraction(*ph.cmr_base, "phase cmr_base");
    }
  }
}

double BenchmarkProfile::uncapped_et_estimate() const {
  validate();
  const double n = static_cast<double>(total_iterations);
  if (phases.empty()) return n / progress_max;
  double t = 0.0;
  for (std::size_t k = 0; k < phases.size(); ++k) {
    const double f0 = phases[k].start_fraction;
    const double f1 = k + 1 < phases.size() ? phases[k + 1].start_fraction : 1.0;
    const double pm = phases[k].progress_max.value_or(progress_max);
    t += (f1 - f0) * n / pm;
  }
  return t;
}

NodeSimulator::NodeSimulator(BenchmarkProfile profile, std::uint64_t seed)
    : profile_(std::move(profile)), rng_(seed) {
  profile_.validate();
}

NodeSimulator::PhaseView NodeSimulator::current_phase() const {
  PhaseView view{profile_.progress_max, profile_.response_exp, profile_.ipc_base,
                 profile_.stl_base, profile_.cmr_base};
  if (profile_.phases.empty()) return view;
  const double frac =
      (static_cast<double>(emitted_) + hb_accum_) / static_cast<double>(profile_.total_iterations);
  const PhaseSpec* active = &profile_.phases.front();
  for (const PhaseSpec& ph : profile_.phases)
    if (ph.start_fraction <= frac) active = &ph;
  if (active->progress_max) view.progress_max = *active->progress_max;
  if (active->response_exp) view.response_exp = *active->response_exp;
  if (active->ipc_base) view.ipc_base = *active->ipc_base;
  if (active->stl_base) view.stl_base = *active->stl_base;
  if (active->cmr_base) view.cmr_base = *active->cmr_base;
  return view;
}

NodeState NodeSimulator::rest_state() const {
  const PhaseView ph = current_phase();
  NodeState s;
  s.progress = 0.0;
  s.power = profile_.p_idle;
  s.ipc = ph.ipc_base * 0.5;
  s.stl = std::clamp(ph.stl_base * 1.5, 0.0, 1.0);
  s.cmr = ph.cmr_base;
  s.validate();
  return s;
}

SimStepResult NodeSimulator::step(double cap_watts, double dt) {
  if (done_) throw std::logic_error("simulator: workload already complete");
  if (!std::isfinite(cap_watts) || cap_watts <= 0.0)
    throw std::invalid_argument("simulator: cap must be positive and finite");
  if (!std::isfinite(dt) || dt <= 0.0)
    throw std::invalid_argument("simulator: dt must be positive and finite");
  g_total_steps.fetch_add(1, std::memory_order_relaxed);

  // Fixed draw order (power, progress, cmr) keeps episode streams aligned
  // across policies, so paired comparisons share their noise.
  const double n_power = rng_.normal();
  const double n_rate = rng_.normal();
  const double n_cmr = rng_.normal();

  const PhaseView ph = current_phase();
  const double demand = std::clamp(cap_watts, profile_.p_idle, profile_.p_max_draw);
  const double power =
      std::max(profile_.p_idle, demand * (1.0 + profile_.noise_rel * n_power));

  const double headroom = (power - profile_.p_idle) / (profile_.p_knee - profile_.p_idle);
  const double response = std::min(1.0, std::pow(std::max(0.0, headroom), ph.response_exp));
  const double rate =
      std::max(0.0, ph.progress_max * response * (1.0 + profile_.noise_rel * n_rate));
  const double rho = rate / ph.progress_max;

  SimStepResult result;
  result.state.progress = rate;
  result.state.power = power;
  result.state.ipc = ph.ipc_base * (0.5 + 0.5 * rho);
  result.state.stl = std::clamp(ph.stl_base * (1.5 - 0.5 * rho), 0.0, 1.0);
  result.state.cmr = std::clamp(ph.cmr_base * (1.0 + profile_.noise_rel * n_cmr), 0.0, 1.0);
  result.state.validate();

  hb_accum_ += rate * dt;
  const double whole = std::floor(hb_accum_);
  hb_accum_ -= whole;
  result.heartbeats_emitted =
      std::min(static_cast<long>(whole), profile_.total_iterations - emitted_);
  emitted_ += result.heartbeats_emitted;
  if (emitted_ >= profile_.total_iterations) done_ = true;

  result.energy_joules = power * dt;
  result.done = done_;
  t_ += dt;
  return result;
}

std::uint64_t NodeSimulator::total_steps() { return g_total_steps.load(std::memory_order_relaxed); }

EpisodeLog run_to_completion(const BenchmarkProfile& profile, const PolicyFn& policy, double dt,
                             std::uint64_t seed, double step_budget_factor) {
  profile.validate();
  if (!std::isfinite(dt) || dt <= 0.0)
    throw std::invalid_argument("episode: dt must be positive and finite");
  if (!(step_budget_factor > 0.0))
    throw std::invalid_argument("episode: step budget factor must be positive");
  const long budget = std::max<long>(
      16, std::lround(step_budget_factor * profile.uncapped_et_estimate() / dt) + 16);

  NodeSimulator sim(profile, seed);
  EpisodeLog log;
  log.benchmark = profile.name;
  NodeState state = sim.rest_state();
  long steps = 0;
  while (!sim.done()) {
    if (steps >= budget)
      throw RuntimeAbort("episode: step budget exhausted on " + profile.name +
                         " after " + std::to_string(steps) + " steps");
    const double cap = policy(state);
    const SimStepResult r = sim.step(cap, dt);
    EpisodeStep es;
    es.t = sim.sim_time();
    es.state = r.state;
    es.cap_watts = cap;
    es.heartbeats = r.heartbeats_emitted;
    es.energy_j = r.energy_joules;
    log.steps.push_back(es);
    log.energy_j += r.energy_joules;
    state = r.state;
    ++steps;
  }
  log.execution_time_s = sim.sim_time();
  return log;
}

namespace {

// Knee placement: workloads whose progress saturates below their natural draw
// (high cache-miss rate) get a knee at min(0.55 x cap-range sum, 0.75 x draw)
// with a sublinear response; the rest scale to their full draw linearly.
BenchmarkProfile make_profile(std::string name, bool train, long iters, double pm, double ipc,
                              double cmr, double stl, double draw_watts, bool memory_bound) {
  BenchmarkProfile p;
  p.name = std::move(name);
  p.train_split = train;
  p.total_iterations = iters;
  p.progress_max = pm;
  p.ipc_base = ipc;
  p.cmr_base = cmr;
  p.stl_base = stl;
  p.p_max_draw = draw_watts;
  if (memory_bound) {
    p.p_knee = std::min(0.55 * (kDefaultMinCapWatts + kDefaultMaxCapWatts), 0.75 * draw_watts);
    p.response_exp = 0.55;
  } else {
    p.p_knee = draw_watts;
    p.response_exp = 1.0;
  }
  p.validate();
  return p;
}

double draw_from(double energy_kj, double et_s) { return 1000.0 * energy_kj / et_s; }

PhaseSpec phase_like(double start, double pm, double ipc, double stl, double cmr) {
  PhaseSpec ph;
  ph.start_fraction = start;
  ph.progress_max = pm;
  ph.ipc_base = ipc;
  ph.stl_base = stl;
  ph.cmr_base = cmr;
  return ph;
}

}  // namespace

std::vector<BenchmarkProfile> builtin_profiles() {
  std::vector<BenchmarkProfile> out;
  out.reserve(12);

  out.push_back(make_profile("STREAM-SCALE", true, 10000, 285.20, 0.20, 0.89, 0.84,
                             draw_from(5.59, 34.40), true));
  out.push_back(make_profile("STREAM-TRIAD", true, 10000, 200.03, 0.18, 0.94, 0.83,
                             draw_from(7.93, 50.80), true));
  out.push_back(
      make_profile("NPB-EP", true, 1000, 13.61, 0.57, 0.13, 0.48, draw_from(10.33, 73.80), false));
  out.push_back(
      make_profile("NPB-IS", true, 1000, 8.44, 0.50, 0.86, 0.68, draw_from(18.99, 117.33), true));
  out.push_back(
      make_profile("NPB-MG", true, 896, 40.30, 0.47, 0.809, 0.54, draw_from(3.18, 19.80), true));
  out.push_back(
      make_profile("NPB-FT", true, 464, 13.23, 0.82, 0.43, 0.296, draw_from(5.05, 30.60), false));

  out.push_back(make_profile("STREAM-ADD", false, 10000, 201.06, 0.15, 0.94, 0.85,
                             draw_from(7.84, 50.40), true));
  out.push_back(make_profile("STREAM-COPY", false, 10000, 282.43, 0.17, 0.89, 0.84,
                             draw_from(5.66, 35.50), true));
  out.push_back(make_profile("STREAM-FULL", false, 10966, 49.31, 0.16, 0.93, 0.70,
                             draw_from(34.99, 222.40), true));

  BenchmarkProfile phase = make_profile("STREAM-PHASE", false, 10000, 240.16, 0.17, 0.91, 0.88,
                                        draw_from(13.48, 83.00), true);
  phase.phases.push_back(phase_like(0.0, 285.20, 0.20, 0.84, 0.89));
  phase.phases.push_back(phase_like(0.3575, 49.31, 0.16, 0.70, 0.93));
  phase.phases.push_back(phase_like(0.50, 282.43, 0.17, 0.84, 0.89));
  phase.phases.push_back(phase_like(0.8575, 49.31, 0.16, 0.70, 0.93));
  phase.validate();
  out.push_back(std::move(phase));

  out.push_back(
      make_profile("NPB-CG", false, 1137, 9.97, 0.49, 0.37, 0.62, draw_from(14.74, 114.00), false));
  out.push_back(
      make_profile("NPB-BT", false, 1000, 6.22, 0.97, 0.87, 0.30, draw_from(22.99, 140.00), true));

  return out;
}

}  // namespace pcaprl
