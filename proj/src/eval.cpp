#include "pcaprl/eval.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <exception>
#include <fstream>
#include <map>
#include <stdexcept>

#include "pcaprl/io.hpp"
#include "pcaprl/rng.hpp"

namespace pcaprl {

double ed2p(double energy_kj, double et_s) {
  if (!std::isfinite(energy_kj) || !std::isfinite(et_s) || energy_kj < 0.0 || et_s < 0.0)
    throw std::invalid_argument("ed2p: inputs must be finite and non-negative");
  return energy_kj * et_s * et_s;
}

double ppw(double progress_hz, double power_w) {
  if (!std::isfinite(progress_hz) || progress_hz < 0.0)
    throw std::invalid_argument("ppw: progress must be finite and non-negative");
  if (!std::isfinite(power_w) || power_w <= 0.0)
    throw std::invalid_argument("ppw: power must be positive");
  return progress_hz * progress_hz / power_w;
}

namespace {

struct MeanStd {
  double mean = 0.0;
  double std = 0.0;
};

MeanStd mean_std(const std::vector<double>& xs) {
  MeanStd ms;
  const double n = static_cast<double>(xs.size());
  for (double x : xs) ms.mean += x;
  ms.mean /= n;
  for (double x : xs) ms.std += (x - ms.mean) * (x - ms.mean);
  ms.std = std::sqrt(ms.std / n);
  return ms;
}

}  // namespace

RunSummary summarize_episodes(const std::string& benchmark, const std::string& policy,
                              double cap_watts, std::span<const EpisodeLog> episodes) {
  if (episodes.empty()) throw std::invalid_argument("summarize: no episodes");
  std::vector<double> et, energy_kj, products;
  et.reserve(episodes.size());
  energy_kj.reserve(episodes.size());
  products.reserve(episodes.size());
  for (const EpisodeLog& log : episodes) {
    et.push_back(log.execution_time_s);
    energy_kj.push_back(log.energy_j / 1000.0);
    products.push_back(ed2p(energy_kj.back(), et.back()));
  }
  const MeanStd et_ms = mean_std(et);
  const MeanStd en_ms = mean_std(energy_kj);
  const MeanStd prod_ms = mean_std(products);

  RunSummary s;
  s.benchmark = benchmark;
  s.policy = policy;
  s.cap_watts = cap_watts;
  s.repeats = static_cast<int>(episodes.size());
  s.et_mean_s = et_ms.mean;
  s.et_std_s = et_ms.std;
  s.energy_mean_kj = en_ms.mean;
  s.energy_std_kj = en_ms.std;
  s.ed2p_mean = ed2p(en_ms.mean, et_ms.mean);
  s.ed2p_std = prod_ms.std;
  return s;
}

std::vector<RunSummary> static_sweep(const BenchmarkProfile& profile, const ActionGrid& grid,
                                     int repeats, double dt, std::uint64_t seed) {
  profile.validate();
  grid.validate();
  if (repeats < 1) throw std::invalid_argument("sweep: repeats must be >= 1");
  if (!std::isfinite(dt) || dt <= 0.0)
    throw std::invalid_argument("sweep: dt must be positive and finite");

  const int jobs = grid.count * repeats;
  std::vector<EpisodeLog> episodes(static_cast<std::size_t>(jobs));
  // Exceptions must not unwind out of the parallel region; capture the first
  // one and rethrow after the join.
  std::exception_ptr failure = nullptr;
#pragma omp parallel for schedule(dynamic)
  for (int j = 0; j < jobs; ++j) {
    try {
      const int cap_idx = j / repeats;
      const int repeat = j % repeats;
      const double cap = grid.values[static_cast<std::size_t>(cap_idx)];
      // Seeds depend on (seed, benchmark, repeat) only: every cap (and the RL
      // policy) replays the same noise stream, making comparisons paired.
      const std::uint64_t ep_seed =
          derive_seed(seed, hash_name(profile.name), static_cast<std::uint64_t>(repeat));
      EpisodeLog log =
          run_to_completion(profile, [cap](const NodeState&) { return cap; }, dt, ep_seed);
      log.policy_label = "static";
      episodes[static_cast<std::size_t>(j)] = std::move(log);
    } catch (...) {
#pragma omp critical(pcaprl_sweep_failure)
      if (!failure) failure = std::current_exception();
    }
  }
  if (failure) std::rethrow_exception(failure);

  std::vector<RunSummary> out;
  out.reserve(static_cast<std::size_t>(grid.count));
  for (int c = 0; c < grid.count; ++c) {
    const std::span<const EpisodeLog> slice(episodes.data() + static_cast<std::size_t>(c) * repeats,
                                            static_cast<std::size_t>(repeats));
    out.push_back(summarize_episodes(profile.name, "static",
                                     grid.values[static_cast<std::size_t>(c)], slice));
  }
  return out;
}

Comparison compare(const RunSummary& candidate, const RunSummary& baseline) {
  if (!(baseline.energy_mean_kj > 0.0) || !(baseline.et_mean_s > 0.0))
    throw std::invalid_argument("compare: baseline energy and time must be positive");
  Comparison c;
  c.energy_saved_pct =
      100.0 * (baseline.energy_mean_kj - candidate.energy_mean_kj) / baseline.energy_mean_kj;
  c.et_degradation_pct = 100.0 * (candidate.et_mean_s - baseline.et_mean_s) / baseline.et_mean_s;
  return c;
}

namespace {

struct BenchmarkCell {
  const RunSummary* static_min = nullptr;   // lowest-cap static row
  const RunSummary* static_max = nullptr;   // highest-cap static row
  const RunSummary* static_best = nullptr;  // lowest-ed2p static row
  const RunSummary* rl = nullptr;
};

std::string pct(double v) { return format_double(v); }

}  // namespace

void write_reports(std::span<const RunSummary> summaries, const std::filesystem::path& out_dir) {
  if (summaries.empty()) throw std::invalid_argument("report: no summaries");
  std::filesystem::create_directories(out_dir);

  save_summaries(summaries, out_dir / "pareto.csv");

  std::vector<std::string> order;
  std::map<std::string, BenchmarkCell> cells;
  for (const RunSummary& s : summaries) {
    if (!cells.count(s.benchmark)) order.push_back(s.benchmark);
    BenchmarkCell& cell = cells[s.benchmark];
    if (s.policy == "static") {
      if (!cell.static_min || s.cap_watts < cell.static_min->cap_watts) cell.static_min = &s;
      if (!cell.static_max || s.cap_watts > cell.static_max->cap_watts) cell.static_max = &s;
      if (!cell.static_best || s.ed2p_mean < cell.static_best->ed2p_mean) cell.static_best = &s;
    } else if (s.policy == "rl" && !cell.rl) {
      cell.rl = &s;
    }
  }

  std::ofstream cmp(out_dir / "comparison.csv");
  std::ofstream edp(out_dir / "ed2p.csv");
  if (!cmp || !edp) throw DataError("report: cannot write under " + out_dir.string());
  cmp << "benchmark,min_cap_watts,min_et_s,min_et_std,min_energy_kj,min_energy_std,"
         "max_cap_watts,max_et_s,max_et_std,max_energy_kj,max_energy_std,"
         "rl_et_s,rl_et_std,rl_energy_kj,rl_energy_std,et_degradation_pct,energy_saved_pct\n";
  edp << "benchmark,min_cap_ed2p,max_cap_ed2p,best_static_ed2p,best_static_cap_watts,rl_ed2p,"
         "rl_vs_max_pct,rl_vs_best_pct\n";

  std::vector<std::string> skipped;
  std::vector<std::array<double, 7>> edp_rows;
  std::vector<Comparison> comparisons;
  for (const std::string& name : order) {
    const BenchmarkCell& cell = cells[name];
    if (!cell.static_min || !cell.static_max || !cell.rl) {
      skipped.push_back(name);
      continue;
    }
    const Comparison c = compare(*cell.rl, *cell.static_max);
    comparisons.push_back(c);
    cmp << name << ',' << format_double(cell.static_min->cap_watts) << ','
        << format_double(cell.static_min->et_mean_s) << ','
        << format_double(cell.static_min->et_std_s) << ','
        << format_double(cell.static_min->energy_mean_kj) << ','
        << format_double(cell.static_min->energy_std_kj) << ','
        << format_double(cell.static_max->cap_watts) << ','
        << format_double(cell.static_max->et_mean_s) << ','
        << format_double(cell.static_max->et_std_s) << ','
        << format_double(cell.static_max->energy_mean_kj) << ','
        << format_double(cell.static_max->energy_std_kj) << ','
        << format_double(cell.rl->et_mean_s) << ',' << format_double(cell.rl->et_std_s) << ','
        << format_double(cell.rl->energy_mean_kj) << ',' << format_double(cell.rl->energy_std_kj)
        << ',' << pct(c.et_degradation_pct) << ',' << pct(c.energy_saved_pct) << '\n';

    const double vs_max =
        100.0 * (cell.rl->ed2p_mean - cell.static_max->ed2p_mean) / cell.static_max->ed2p_mean;
    const double vs_best =
        100.0 * (cell.rl->ed2p_mean - cell.static_best->ed2p_mean) / cell.static_best->ed2p_mean;
    edp << name << ',' << format_double(cell.static_min->ed2p_mean) << ','
        << format_double(cell.static_max->ed2p_mean) << ','
        << format_double(cell.static_best->ed2p_mean) << ','
        << format_double(cell.static_best->cap_watts) << ',' << format_double(cell.rl->ed2p_mean)
        << ',' << pct(vs_max) << ',' << pct(vs_best) << '\n';
    edp_rows.push_back({cell.static_min->ed2p_mean, cell.static_max->ed2p_mean,
                        cell.static_best->ed2p_mean, cell.static_best->cap_watts,
                        cell.rl->ed2p_mean, vs_max, vs_best});
  }

  if (!edp_rows.empty()) {
    std::array<double, 7> avg{};
    for (const auto& row : edp_rows)
      for (std::size_t k = 0; k < avg.size(); ++k) avg[k] += row[k];
    edp << "Average";
    for (double v : avg) edp << ',' << format_double(v / static_cast<double>(edp_rows.size()));
    edp << '\n';
  }

  std::ofstream digest(out_dir / "digest.txt");
  if (!digest) throw DataError("report: cannot write under " + out_dir.string());
  digest << "benchmarks reported: " << edp_rows.size() << ", skipped: " << skipped.size() << "\n";
  std::size_t row = 0;
  for (const std::string& name : order) {
    const BenchmarkCell& cell = cells[name];
    if (!cell.static_min || !cell.static_max || !cell.rl) {
      digest << name << ": skipped (needs static min/max and rl summaries)\n";
      continue;
    }
    const Comparison& c = comparisons[row];
    digest << name << ": energy saved " << pct(c.energy_saved_pct) << "% vs max cap, et degradation "
           << pct(c.et_degradation_pct) << "%, rl ed2p " << format_double(cell.rl->ed2p_mean)
           << " vs best static " << format_double(cell.static_best->ed2p_mean) << " ("
           << pct(edp_rows[row][6]) << "% at " << format_double(cell.static_best->cap_watts)
           << " W)\n";
    ++row;
  }
  if (!edp_rows.empty()) {
    double saved = 0.0, degr = 0.0;
    for (const Comparison& c : comparisons) {
      saved += c.energy_saved_pct;
      degr += c.et_degradation_pct;
    }
    digest << "average: energy saved " << pct(saved / static_cast<double>(comparisons.size()))
           << "%, et degradation " << pct(degr / static_cast<double>(comparisons.size())) << "%\n";
  }
}

}  // namespace pcaprl
