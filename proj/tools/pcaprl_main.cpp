#include <cstdlib>
#include <iostream>
#include <limits>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "pcaprl/collect.hpp"
#include "pcaprl/control.hpp"
#include "pcaprl/cql.hpp"
#include "pcaprl/eval.hpp"
#include "pcaprl/io.hpp"
#include "pcaprl/nodesim.hpp"
#include "pcaprl/rng.hpp"
#include "pcaprl/types.hpp"

namespace fs = std::filesystem;
using namespace pcaprl;

namespace {

// --out wins; otherwise fall back to PCAPRL_OUT_DIR (joined with default_name
// unless the command wants the directory itself).
fs::path resolve_out(const std::string& flag, const char* default_name) {
  if (!flag.empty()) return flag;
  if (const char* env = std::getenv("PCAPRL_OUT_DIR")) {
    if (default_name == nullptr) return env;
    return fs::path(env) / default_name;
  }
  throw std::invalid_argument("no output path given: pass --out or set PCAPRL_OUT_DIR");
}

std::vector<BenchmarkProfile> load_profile_source(const std::string& path) {
  if (path.empty()) return builtin_profiles();
  return load_profiles(path);
}

const BenchmarkProfile& find_profile(const std::vector<BenchmarkProfile>& profiles,
                                     const std::string& name) {
  for (const BenchmarkProfile& p : profiles)
    if (p.name == name) return p;
  std::string names;
  for (const BenchmarkProfile& p : profiles) names += (names.empty() ? "" : ", ") + p.name;
  throw std::invalid_argument("unknown profile \"" + name + "\"; available: " + names);
}

struct GridFlags {
  double min_watts = kDefaultMinCapWatts;
  double max_watts = kDefaultMaxCapWatts;
  int count = kDefaultGridCount;

  void attach(CLI::App* cmd) {
    cmd->add_option("--grid-min", min_watts, "Lowest cap in watts");
    cmd->add_option("--grid-max", max_watts, "Highest cap in watts");
    cmd->add_option("--grid-count", count, "Number of uniformly spaced caps");
  }
  ActionGrid make() const { return make_action_grid(min_watts, max_watts, count); }
};

void add_profiles_export(CLI::App& app) {
  CLI::App* profiles_cmd = app.add_subcommand("profiles", "Workload profile utilities");
  profiles_cmd->require_subcommand(1);
  CLI::App* cmd = profiles_cmd->add_subcommand("export", "Write the builtin profiles to a file");
  auto out = std::make_shared<std::string>();
  auto only = std::make_shared<std::vector<std::string>>();
  cmd->add_option("--out", *out, "Output profile file (.json)");
  cmd->add_option("--only", *only, "Export only the named profiles");
  cmd->callback([out, only] {
    const fs::path path = resolve_out(*out, "profiles.json");
    std::vector<BenchmarkProfile> all = builtin_profiles();
    std::vector<BenchmarkProfile> selected;
    if (only->empty()) {
      selected = std::move(all);
    } else {
      for (const std::string& name : *only) selected.push_back(find_profile(all, name));
    }
    save_profiles(selected, path);
    std::cout << "wrote " << selected.size() << " profiles to " << path.string() << "\n";
  });
}

void add_collect(CLI::App& app) {
  CLI::App* cmd = app.add_subcommand("collect", "Gather random-policy transitions into a dataset");
  struct Opts {
    std::string profiles, out, split = "train";
    int episodes = 3;
    std::uint64_t seed = 0;
    double dt = 1.0;
    GridFlags grid;
  };
  auto o = std::make_shared<Opts>();
  cmd->add_option("--profiles", o->profiles, "Profile file (defaults to the builtin set)");
  cmd->add_option("--split", o->split, "Profile subset: train, holdout, or all")
      ->check(CLI::IsMember({"train", "holdout", "all"}));
  cmd->add_option("--episodes", o->episodes, "Episodes per profile");
  cmd->add_option("--seed", o->seed, "Collection seed");
  cmd->add_option("--dt", o->dt, "Control interval in seconds");
  cmd->add_option("--out", o->out, "Output dataset file (.jsonl)");
  o->grid.attach(cmd);
  cmd->callback([o] {
    const fs::path path = resolve_out(o->out, "dataset.jsonl");
    std::vector<BenchmarkProfile> profiles = load_profile_source(o->profiles);
    if (o->split != "all") {
      ProfileSplit split = split_train_profiles(profiles);
      profiles = o->split == "train" ? std::move(split.train) : std::move(split.holdout);
    }
    CollectConfig cfg;
    cfg.episodes_per_profile = o->episodes;
    cfg.seed = o->seed;
    cfg.dt = o->dt;
    const Dataset ds = collect(profiles, o->grid.make(), cfg);
    save_dataset(ds, path);
    std::cout << "wrote " << ds.transitions.size() << " transitions from " << profiles.size()
              << " profiles to " << path.string() << "\n";
  });
}

void add_train(CLI::App& app) {
  CLI::App* cmd = app.add_subcommand("train", "Train a Q-network on a collected dataset");
  struct Opts {
    std::string data, out, loss_log;
    TrainConfig cfg;
    int target_sync = 0;
    int early_stop_window = 0;
  };
  auto o = std::make_shared<Opts>();
  cmd->add_option("--data", o->data, "Dataset file")->required();
  cmd->add_option("--gamma", o->cfg.gamma, "Discount factor");
  cmd->add_option("--alpha", o->cfg.alpha, "Conservatism weight");
  cmd->add_option("--batch", o->cfg.batch, "Batch size");
  cmd->add_option("--iters", o->cfg.iterations, "Training iterations");
  cmd->add_option("--lr", o->cfg.lr, "Learning rate");
  cmd->add_option("--seed", o->cfg.seed, "Training seed");
  cmd->add_option("--hidden", o->cfg.hidden_dims, "Hidden layer sizes");
  cmd->add_option("--target-sync", o->target_sync,
                  "Iterations between target-network syncs (0 = single-network)");
  cmd->add_option("--early-stop-window", o->early_stop_window,
                  "Loss-plateau window in iterations (0 = run all iterations)");
  cmd->add_option("--early-stop-tol", o->cfg.early_stop_rel_tol,
                  "Relative improvement below which training stops");
  cmd->add_option("--out", o->out, "Output checkpoint file (.json)");
  cmd->add_option("--loss-log", o->loss_log, "Optional per-iteration loss CSV");
  cmd->callback([o] {
    const fs::path path = resolve_out(o->out, "checkpoint.json");
    if (o->target_sync > 0) o->cfg.target_sync = o->target_sync;
    if (o->early_stop_window > 0) o->cfg.early_stop_window = o->early_stop_window;
    const Dataset ds = load_dataset(o->data);
    const TrainReport report = train(ds, o->cfg);
    save_checkpoint(report.checkpoint, path);
    if (!o->loss_log.empty()) save_loss_log(report, o->loss_log);
    std::cout << "trained " << report.iterations_run << " iterations; final loss "
              << format_double(report.loss_log.back().total) << "; checkpoint " << path.string()
              << "\n";
  });
}

void add_run(CLI::App& app) {
  CLI::App* cmd = app.add_subcommand("run", "Deploy a checkpoint's greedy policy on one workload");
  struct Opts {
    std::string ckpt, profile, profiles, out;
    int repeats = 5;
    std::uint64_t seed = 0;
    double dt = 1.0;
  };
  auto o = std::make_shared<Opts>();
  cmd->add_option("--ckpt", o->ckpt, "Checkpoint file")->required();
  cmd->add_option("--profile", o->profile, "Workload profile name")->required();
  cmd->add_option("--profiles", o->profiles, "Profile file (defaults to the builtin set)");
  cmd->add_option("--repeats", o->repeats, "Independent episodes to run");
  cmd->add_option("--seed", o->seed, "Evaluation seed");
  cmd->add_option("--dt", o->dt, "Control interval in seconds");
  cmd->add_option("--out", o->out, "Output directory");
  cmd->callback([o] {
    if (o->repeats < 1) throw std::invalid_argument("--repeats must be >= 1");
    const fs::path out_dir = resolve_out(o->out, nullptr);
    const Checkpoint ckpt = load_checkpoint(o->ckpt);
    const QNetwork net = QNetwork::from_checkpoint(ckpt);
    const std::vector<BenchmarkProfile> profiles = load_profile_source(o->profiles);
    const BenchmarkProfile& profile = find_profile(profiles, o->profile);

    std::vector<EpisodeLog> episodes;
    for (int r = 0; r < o->repeats; ++r) {
      const std::uint64_t ep_seed =
          derive_seed(o->seed, hash_name(profile.name), static_cast<std::uint64_t>(r));
      episodes.push_back(control_episode(net, ckpt.grid, profile, o->dt, ep_seed));
      save_episode_log(episodes.back(), out_dir / "episodes" /
                                            (profile.name + "-rl-r" + std::to_string(r) + ".csv"));
    }
    const RunSummary summary = summarize_episodes(
        profile.name, "rl", std::numeric_limits<double>::quiet_NaN(), episodes);
    const fs::path summary_path = out_dir / ("rl_" + profile.name + ".csv");
    save_summaries(std::span<const RunSummary>(&summary, 1), summary_path);
    std::cout << "ran " << o->repeats << " episodes of " << profile.name << ": mean et "
              << format_double(summary.et_mean_s) << " s, mean energy "
              << format_double(summary.energy_mean_kj) << " kJ; summary " << summary_path.string()
              << "\n";
  });
}

void add_sweep(CLI::App& app) {
  CLI::App* cmd =
      app.add_subcommand("sweep", "Run every static cap on one workload and summarize");
  struct Opts {
    std::string profile, profiles, out;
    int repeats = 5;
    std::uint64_t seed = 0;
    double dt = 1.0;
    GridFlags grid;
  };
  auto o = std::make_shared<Opts>();
  cmd->add_option("--profile", o->profile, "Workload profile name")->required();
  cmd->add_option("--profiles", o->profiles, "Profile file (defaults to the builtin set)");
  cmd->add_option("--repeats", o->repeats, "Episodes per cap");
  cmd->add_option("--seed", o->seed, "Evaluation seed");
  cmd->add_option("--dt", o->dt, "Control interval in seconds");
  cmd->add_option("--out", o->out, "Output directory");
  o->grid.attach(cmd);
  cmd->callback([o] {
    const fs::path out_dir = resolve_out(o->out, nullptr);
    const std::vector<BenchmarkProfile> profiles = load_profile_source(o->profiles);
    const BenchmarkProfile& profile = find_profile(profiles, o->profile);
    const ActionGrid grid = o->grid.make();

    // Episode logs replay the exact runs the summaries aggregate: same seed
    // derivation, same constant-cap policy.
    for (int c = 0; c < grid.count; ++c) {
      const double cap = grid.values[static_cast<std::size_t>(c)];
      for (int r = 0; r < o->repeats; ++r) {
        const std::uint64_t ep_seed =
            derive_seed(o->seed, hash_name(profile.name), static_cast<std::uint64_t>(r));
        EpisodeLog log = run_to_completion(
            profile, [cap](const NodeState&) { return cap; }, o->dt, ep_seed);
        log.policy_label = "static";
        save_episode_log(log, out_dir / "episodes" /
                                  (profile.name + "-cap" + format_double(cap) + "-r" +
                                   std::to_string(r) + ".csv"));
      }
    }
    const std::vector<RunSummary> summaries =
        static_sweep(profile, grid, o->repeats, o->dt, o->seed);
    const fs::path summary_path = out_dir / ("sweep_" + profile.name + ".csv");
    save_summaries(summaries, summary_path);
    std::cout << "swept " << grid.count << " caps x " << o->repeats << " repeats on "
              << profile.name << "; summaries " << summary_path.string() << "\n";
  });
}

void add_report(CLI::App& app) {
  CLI::App* cmd = app.add_subcommand("report", "Build comparison reports from summary files");
  struct Opts {
    std::vector<std::string> inputs;
    std::string out, format = "csv";
  };
  auto o = std::make_shared<Opts>();
  cmd->add_option("--in", o->inputs, "Summary CSV files (from run/sweep)")->required();
  cmd->add_option("--out", o->out, "Output directory");
  cmd->add_option("--format", o->format, "Report format (csv only)");
  cmd->callback([o] {
    if (o->format != "csv") throw std::invalid_argument("unsupported --format " + o->format);
    const fs::path out_dir = resolve_out(o->out, nullptr);
    std::vector<RunSummary> all;
    for (const std::string& path : o->inputs) {
      std::vector<RunSummary> part = load_summaries(path);
      all.insert(all.end(), part.begin(), part.end());
    }
    write_reports(all, out_dir);
    std::cout << "report over " << all.size() << " summary rows written under "
              << out_dir.string() << "\n";
  });
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Offline-RL power-capping pipeline: collect, train, deploy, evaluate"};
  app.require_subcommand(1);
  add_profiles_export(app);
  add_collect(app);
  add_train(app);
  add_run(app);
  add_sweep(app);
  add_report(app);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;  // --help and friends exit cleanly
  } catch (const std::invalid_argument& e) {
    std::cerr << "usage error: " << e.what() << "\n";
    return 2;
  } catch (const DataError& e) {
    std::cerr << "data error: " << e.what() << "\n";
    return 3;
  } catch (const RuntimeAbort& e) {
    std::cerr << "runtime abort: " << e.what() << "\n";
    return 4;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 4;
  }
  return 0;
}
