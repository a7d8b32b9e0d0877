#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "pcaprl/collect.hpp"
#include "pcaprl/eval.hpp"
#include "pcaprl/io.hpp"
#include "pcaprl/nodesim.hpp"
#include "pcaprl/qnet.hpp"
#include "pcaprl/reward.hpp"
#include "pcaprl/types.hpp"

using namespace pcaprl;
namespace fs = std::filesystem;

namespace {

fs::path fresh_dir(const std::string& tag) {
  const fs::path dir = fs::temp_directory_path() / ("pcaprl_io_" + tag);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  REQUIRE(in.good());
  std::ostringstream out;
  out << in.rdbuf();
  return out.str();
}

void spit(const fs::path& p, const std::string& text) {
  std::ofstream out(p, std::ios::binary);
  out << text;
}

Dataset sample_dataset() {
  Dataset ds;
  ds.grid = make_action_grid(1.0, 4.0, 4);
  const NodeState states[3] = {
      NodeState{10.0, 80.0, 0.5, 0.5, 0.5},
      NodeState{20.5, 100.25, 0.6, 0.4, 0.4},
      NodeState{30.0, 153.39999999999998, 0.7, 0.3, 0.3},  // awkward decimal
  };
  int k = 0;
  for (int i = 0; i < 3; ++i) {
    for (int j = 0; j < 4; ++j) {
      Transition tr;
      tr.benchmark = i == 2 ? "other" : "bench";
      tr.t = k++;
      tr.state = states[i];
      tr.action_index = j;
      tr.action_watts = ds.grid.values[j];
      tr.reward_raw = 0.1 * k + 1.0 / 3.0;
      tr.next_state = states[(i + j) % 3];
      tr.terminal = j == 3;
      ds.transitions.push_back(tr);
    }
  }
  ds.reward_bounds = fit_bounds(ds);
  for (auto& tr : ds.transitions) {
    tr.reward_norm = normalize_reward(tr.reward_raw, ds.reward_bounds.at(tr.benchmark));
  }
  validate_dataset(ds);
  return ds;
}

}  // namespace

TEST_CASE("format_double emits the shortest exact decimal form") {
  CHECK(format_double(0.1) == "0.1");
  CHECK(format_double(1.0) == "1");
  CHECK(format_double(-2.5) == "-2.5");
  // Round-trip is bit-exact even for awkward binary fractions.
  for (double v : {1.0 / 3.0, 153.39999999999998, 5.8 * 13 + 78.0, 1e-300, 3.14e17}) {
    CHECK(std::stod(format_double(v)) == v);
  }
  CHECK(format_double(153.39999999999998) == "153.39999999999998");
}

TEST_CASE("dataset save/load round-trips byte for byte") {
  const fs::path dir = fresh_dir("dataset");
  const Dataset ds = sample_dataset();
  save_dataset(ds, dir / "a.jsonl");
  const Dataset back = load_dataset(dir / "a.jsonl");
  save_dataset(back, dir / "b.jsonl");
  CHECK(slurp(dir / "a.jsonl") == slurp(dir / "b.jsonl"));

  REQUIRE(back.transitions.size() == ds.transitions.size());
  for (std::size_t i = 0; i < ds.transitions.size(); ++i) {
    CHECK(back.transitions[i].benchmark == ds.transitions[i].benchmark);
    CHECK(back.transitions[i].t == ds.transitions[i].t);
    CHECK(back.transitions[i].state.power == ds.transitions[i].state.power);
    CHECK(back.transitions[i].reward_raw == ds.transitions[i].reward_raw);
    CHECK(back.transitions[i].reward_norm == ds.transitions[i].reward_norm);
    CHECK(back.transitions[i].terminal == ds.transitions[i].terminal);
  }
  CHECK(back.grid.values == ds.grid.values);
  CHECK(back.reward_bounds.at("bench").r_min == ds.reward_bounds.at("bench").r_min);
  fs::remove_all(dir);
}

TEST_CASE("checkpoint save/load preserves parameters bit-exactly") {
  const fs::path dir = fresh_dir("ckpt");
  Rng rng(13);
  QNetwork net = QNetwork::random_init({5, 10, 10, 16}, rng);
  net.feature_mean = {1.5, 100.0, 0.5, 1.0 / 3.0, 0.25};
  net.feature_std = {2.0, 30.0, 0.1, 0.2, 0.125};
  Hyperparams hp;
  hp.gamma = 0.9;
  hp.alpha = 0.1;
  hp.seed = 3;
  const Checkpoint ckpt = net.to_checkpoint(default_action_grid(), hp);

  save_checkpoint(ckpt, dir / "a.json");
  const Checkpoint back = load_checkpoint(dir / "a.json");
  save_checkpoint(back, dir / "b.json");
  CHECK(slurp(dir / "a.json") == slurp(dir / "b.json"));

  CHECK(back.layer_dims == ckpt.layer_dims);
  CHECK(back.weights == ckpt.weights);
  CHECK(back.biases == ckpt.biases);
  CHECK(back.feature_mean == ckpt.feature_mean);
  CHECK(back.feature_std == ckpt.feature_std);
  CHECK(back.grid.values == ckpt.grid.values);
  CHECK(back.hyperparams.gamma == ckpt.hyperparams.gamma);
  CHECK(back.hyperparams.seed == ckpt.hyperparams.seed);
  CHECK(back.activation == "relu");
  fs::remove_all(dir);
}

TEST_CASE("profiles save/load round-trips the full builtin set") {
  const fs::path dir = fresh_dir("profiles");
  const auto profiles = builtin_profiles();
  save_profiles(profiles, dir / "a.json");
  const auto back = load_profiles(dir / "a.json");
  save_profiles(back, dir / "b.json");
  CHECK(slurp(dir / "a.json") == slurp(dir / "b.json"));

  REQUIRE(back.size() == profiles.size());
  for (std::size_t i = 0; i < profiles.size(); ++i) {
    CHECK(back[i].name == profiles[i].name);
    CHECK(back[i].train_split == profiles[i].train_split);
    CHECK(back[i].p_knee == profiles[i].p_knee);
    CHECK(back[i].p_max_draw == profiles[i].p_max_draw);
    CHECK(back[i].progress_max == profiles[i].progress_max);
    CHECK(back[i].total_iterations == profiles[i].total_iterations);
    REQUIRE(back[i].phases.size() == profiles[i].phases.size());
    for (std::size_t k = 0; k < profiles[i].phases.size(); ++k) {
      CHECK(back[i].phases[k].start_fraction == profiles[i].phases[k].start_fraction);
      CHECK(back[i].phases[k].progress_max == profiles[i].phases[k].progress_max);
      CHECK(back[i].phases[k].cmr_base == profiles[i].phases[k].cmr_base);
    }
  }
  fs::remove_all(dir);
}

TEST_CASE("summaries round-trip including the capless rl row") {
  const fs::path dir = fresh_dir("summaries");
  std::vector<RunSummary> rows(2);
  rows[0].benchmark = "bench";
  rows[0].policy = "static";
  rows[0].cap_watts = 124.4;
  rows[0].repeats = 5;
  rows[0].et_mean_s = 34.4;
  rows[0].et_std_s = 0.25;
  rows[0].energy_mean_kj = 4.3;
  rows[0].energy_std_kj = 1.0 / 3.0;
  rows[0].ed2p_mean = ed2p(4.3, 34.4);
  rows[0].ed2p_std = 12.5;
  rows[1] = rows[0];
  rows[1].policy = "rl";
  rows[1].cap_watts = std::nan("");

  save_summaries(rows, dir / "a.csv");
  const auto back = load_summaries(dir / "a.csv");
  save_summaries(back, dir / "b.csv");
  CHECK(slurp(dir / "a.csv") == slurp(dir / "b.csv"));

  REQUIRE(back.size() == 2);
  CHECK(back[0].cap_watts == 124.4);
  CHECK(back[0].energy_std_kj == rows[0].energy_std_kj);
  CHECK(std::isnan(back[1].cap_watts));
  CHECK(back[1].policy == "rl");
  fs::remove_all(dir);
}

TEST_CASE("episode and loss logs use the documented CSV headers") {
  const fs::path dir = fresh_dir("logs");
  BenchmarkProfile p;
  p.name = "short";
  p.p_idle = 60.0;
  p.p_max_draw = 160.0;
  p.p_knee = 110.0;
  p.progress_max = 100.0;
  p.total_iterations = 300;
  const EpisodeLog log = run_to_completion(p, [](const NodeState&) { return 165.0; }, 1.0, 3);
  save_episode_log(log, dir / "ep.csv");
  std::istringstream ep(slurp(dir / "ep.csv"));
  std::string header;
  std::getline(ep, header);
  CHECK(header == "t,progress,power,ipc,stl,cmr,cap_watts,heartbeats,energy_j");
  int lines = 0;
  for (std::string line; std::getline(ep, line);) ++lines;
  CHECK(lines == static_cast<int>(log.steps.size()));

  TrainReport report;
  report.loss_log = {LossTerms{1.0, 0.5, 0.25}, LossTerms{0.9, 0.4, 0.2}};
  report.iterations_run = 2;
  save_loss_log(report, dir / "loss.csv");
  std::istringstream loss(slurp(dir / "loss.csv"));
  std::getline(loss, header);
  CHECK(header == "iter,total,bellman,conservative");
  lines = 0;
  for (std::string line; std::getline(loss, line);) ++lines;
  CHECK(lines == 2);
  fs::remove_all(dir);
}

TEST_CASE("malformed artifacts raise data errors, not crashes") {
  const fs::path dir = fresh_dir("malformed");

  SUBCASE("missing files") {
    CHECK_THROWS_AS((void)load_dataset(dir / "nope.jsonl"), DataError);
    CHECK_THROWS_AS((void)load_checkpoint(dir / "nope.json"), DataError);
    CHECK_THROWS_AS((void)load_profiles(dir / "nope.json"), DataError);
    CHECK_THROWS_AS((void)load_summaries(dir / "nope.csv"), DataError);
  }

  SUBCASE("garbage json") {
    spit(dir / "x.jsonl", "{not json\n");
    CHECK_THROWS_AS((void)load_dataset(dir / "x.jsonl"), DataError);
    spit(dir / "x.json", "[1, 2,");
    CHECK_THROWS_AS((void)load_checkpoint(dir / "x.json"), DataError);
    CHECK_THROWS_AS((void)load_profiles(dir / "x.json"), DataError);
  }

  SUBCASE("wrong format tag or version") {
    const Dataset ds = sample_dataset();
    save_dataset(ds, dir / "ok.jsonl");
    std::string text = slurp(dir / "ok.jsonl");
    std::string wrong = text;
    const auto pos = wrong.find("pcaprl.dataset");
    REQUIRE(pos != std::string::npos);
    wrong.replace(pos, 14, "pcaprl.ddddset");
    spit(dir / "wrong.jsonl", wrong);
    CHECK_THROWS_AS((void)load_dataset(dir / "wrong.jsonl"), DataError);

    wrong = text;
    const auto vpos = wrong.find("\"version\":1");
    if (vpos != std::string::npos) wrong.replace(vpos, 11, "\"version\":9");
    spit(dir / "v9.jsonl", wrong);
    CHECK_THROWS_AS((void)load_dataset(dir / "v9.jsonl"), DataError);
  }

  SUBCASE("dataset with a truncated record") {
    const Dataset ds = sample_dataset();
    save_dataset(ds, dir / "ok.jsonl");
    std::string text = slurp(dir / "ok.jsonl");
    text.resize(text.size() * 2 / 3);
    spit(dir / "trunc.jsonl", text);
    CHECK_THROWS_AS((void)load_dataset(dir / "trunc.jsonl"), DataError);
  }

  SUBCASE("empty dataset body fails validation") {
    const Dataset ds = sample_dataset();
    save_dataset(ds, dir / "ok.jsonl");
    std::istringstream all(slurp(dir / "ok.jsonl"));
    std::string header;
    std::getline(all, header);
    spit(dir / "empty.jsonl", header + "\n");
    CHECK_THROWS_AS((void)load_dataset(dir / "empty.jsonl"), DataError);
  }

  SUBCASE("checkpoint with a missing field") {
    Rng rng(1);
    const QNetwork net = QNetwork::random_init({5, 4, 16}, rng);
    save_checkpoint(net.to_checkpoint(default_action_grid(), Hyperparams{}), dir / "ok.json");
    std::string text = slurp(dir / "ok.json");
    const auto pos = text.find("\"feature_mean\"");
    REQUIRE(pos != std::string::npos);
    text.replace(pos, 14, "\"feature_mAAn\"");
    spit(dir / "missing.json", text);
    CHECK_THROWS_AS((void)load_checkpoint(dir / "missing.json"), DataError);
  }

  SUBCASE("summary csv with a broken header or cell") {
    spit(dir / "h.csv", "benchmark,policy,WRONG\nx,static,1\n");
    CHECK_THROWS_AS((void)load_summaries(dir / "h.csv"), DataError);

    std::vector<RunSummary> rows(1);
    rows[0].benchmark = "x";
    rows[0].policy = "static";
    rows[0].repeats = 1;
    rows[0].et_mean_s = 1;
    rows[0].energy_mean_kj = 1;
    rows[0].ed2p_mean = 1;
    save_summaries(rows, dir / "ok.csv");
    std::string text = slurp(dir / "ok.csv");
    // Corrupt the last numeric cell of the data row.
    const auto nl = text.find_last_not_of("\n");
    const auto comma = text.rfind(',', nl);
    REQUIRE(comma != std::string::npos);
    text = text.substr(0, comma + 1) + "zap\n";
    spit(dir / "cell.csv", text);
    CHECK_THROWS_AS((void)load_summaries(dir / "cell.csv"), DataError);
  }

  SUBCASE("names with separators are rejected at save time") {
    std::vector<RunSummary> rows(1);
    rows[0].benchmark = "bad,name";
    rows[0].policy = "static";
    CHECK_THROWS_AS(save_summaries(rows, dir / "bad.csv"), DataError);
  }

  fs::remove_all(dir);
}
