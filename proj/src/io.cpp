#include "pcaprl/io.hpp"

#include <charconv>
#include <fstream>
#include <sstream>
#include <system_error>

#include <json.hpp>

namespace pcaprl {

using nlohmann::json;

std::string format_double(double v) {
  char buf[32];
  const std::to_chars_result res = std::to_chars(buf, buf + sizeof(buf), v);
  if (res.ec != std::errc()) throw std::invalid_argument("format_double: conversion failed");
  return std::string(buf, res.ptr);
}

namespace {

std::ofstream open_for_write(const std::filesystem::path& path) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path);
  if (!out) throw DataError("cannot write " + path.string());
  return out;
}

std::ifstream open_for_read(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open " + path.string());
  return in;
}

void finish_write(std::ofstream& out, const std::filesystem::path& path) {
  out.flush();
  if (!out) throw DataError("write failed for " + path.string());
}

json parse_json(const std::string& text, const std::filesystem::path& path) {
  json j = json::parse(text, nullptr, false);
  if (j.is_discarded()) throw DataError("malformed JSON in " + path.string());
  return j;
}

void expect_header(const json& j, const std::string& format, const std::filesystem::path& path) {
  if (!j.is_object() || j.value("format", "") != format)
    throw DataError(path.string() + ": expected format \"" + format + "\"");
  if (j.value("version", 0) != 1)
    throw DataError(path.string() + ": unsupported version");
}

// Field accessors that turn missing/mistyped keys into DataError.
template <typename T>
T field(const json& j, const char* key, const std::filesystem::path& path) {
  const auto it = j.find(key);
  if (it == j.end()) throw DataError(path.string() + ": missing field " + key);
  try {
    return it->get<T>();
  } catch (const json::exception&) {
    throw DataError(path.string() + ": bad value for field " + std::string(key));
  }
}

json grid_to_json(const ActionGrid& grid) {
  return json{{"min_watts", grid.min_watts},
              {"max_watts", grid.max_watts},
              {"count", grid.count},
              {"values", grid.values}};
}

ActionGrid grid_from_json(const json& j, const std::filesystem::path& path) {
  ActionGrid grid;
  grid.min_watts = field<double>(j, "min_watts", path);
  grid.max_watts = field<double>(j, "max_watts", path);
  grid.count = field<int>(j, "count", path);
  grid.values = field<std::vector<double>>(j, "values", path);
  try {
    grid.validate();
  } catch (const std::invalid_argument& e) {
    throw DataError(path.string() + ": bad action grid: " + e.what());
  }
  return grid;
}

json state_to_json(const NodeState& s) {
  return json{{"progress", s.progress},
              {"power", s.power},
              {"ipc", s.ipc},
              {"stl", s.stl},
              {"cmr", s.cmr}};
}

NodeState state_from_json(const json& j, const std::filesystem::path& path) {
  NodeState s;
  s.progress = field<double>(j, "progress", path);
  s.power = field<double>(j, "power", path);
  s.ipc = field<double>(j, "ipc", path);
  s.stl = field<double>(j, "stl", path);
  s.cmr = field<double>(j, "cmr", path);
  return s;
}

}  // namespace

void save_dataset(const Dataset& ds, const std::filesystem::path& path) {
  std::ofstream out = open_for_write(path);

  json bounds = json::object();
  for (const auto& [name, b] : ds.reward_bounds)
    bounds[name] = json{{"r_min", b.r_min}, {"r_max", b.r_max}};
  const json header{{"format", "pcaprl.dataset"},
                    {"version", 1},
                    {"grid", grid_to_json(ds.grid)},
                    {"reward_lo", ds.reward_lo},
                    {"reward_hi", ds.reward_hi},
                    {"reward_bounds", bounds}};
  out << header.dump() << '\n';

  for (const Transition& tr : ds.transitions) {
    const json rec{{"benchmark", tr.benchmark},
                   {"t", tr.t},
                   {"state", state_to_json(tr.state)},
                   {"action_index", tr.action_index},
                   {"action_watts", tr.action_watts},
                   {"reward_raw", tr.reward_raw},
                   {"reward_norm", tr.reward_norm},
                   {"next_state", state_to_json(tr.next_state)},
                   {"terminal", tr.terminal}};
    out << rec.dump() << '\n';
  }
  finish_write(out, path);
}

Dataset load_dataset(const std::filesystem::path& path) {
  std::ifstream in = open_for_read(path);
  std::string line;
  if (!std::getline(in, line)) throw DataError(path.string() + ": empty dataset file");
  const json header = parse_json(line, path);
  expect_header(header, "pcaprl.dataset", path);

  Dataset ds;
  ds.grid = grid_from_json(field<json>(header, "grid", path), path);
  ds.reward_lo = field<double>(header, "reward_lo", path);
  ds.reward_hi = field<double>(header, "reward_hi", path);
  const json bounds = field<json>(header, "reward_bounds", path);
  if (!bounds.is_object()) throw DataError(path.string() + ": reward_bounds must be an object");
  for (const auto& [name, b] : bounds.items()) {
    RewardBounds rb;
    rb.r_min = field<double>(b, "r_min", path);
    rb.r_max = field<double>(b, "r_max", path);
    ds.reward_bounds.emplace(name, rb);
  }

  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const json rec = parse_json(line, path);
    Transition tr;
    tr.benchmark = field<std::string>(rec, "benchmark", path);
    tr.t = field<long>(rec, "t", path);
    tr.state = state_from_json(field<json>(rec, "state", path), path);
    tr.action_index = field<int>(rec, "action_index", path);
    tr.action_watts = field<double>(rec, "action_watts", path);
    tr.reward_raw = field<double>(rec, "reward_raw", path);
    tr.reward_norm = field<double>(rec, "reward_norm", path);
    tr.next_state = state_from_json(field<json>(rec, "next_state", path), path);
    tr.terminal = field<bool>(rec, "terminal", path);
    ds.transitions.push_back(std::move(tr));
  }
  validate_dataset(ds);
  return ds;
}

void save_checkpoint(const Checkpoint& ckpt, const std::filesystem::path& path) {
  ckpt.validate();
  json layers = json::array();
  for (std::size_t l = 0; l + 1 < ckpt.layer_dims.size(); ++l)
    layers.push_back(json{{"in_dim", ckpt.layer_dims[l]},
                          {"out_dim", ckpt.layer_dims[l + 1]},
                          {"weights", ckpt.weights[l]},
                          {"bias", ckpt.biases[l]}});
  const json doc{{"format", "pcaprl.checkpoint"},
                 {"version", 1},
                 {"activation", ckpt.activation},
                 {"layer_dims", ckpt.layer_dims},
                 {"layers", layers},
                 {"feature_mean", ckpt.feature_mean},
                 {"feature_std", ckpt.feature_std},
                 {"grid", grid_to_json(ckpt.grid)},
                 {"hyperparams",
                  {{"gamma", ckpt.hyperparams.gamma},
                   {"alpha", ckpt.hyperparams.alpha},
                   {"batch", ckpt.hyperparams.batch},
                   {"iterations", ckpt.hyperparams.iterations},
                   {"learning_rate", ckpt.hyperparams.learning_rate},
                   {"seed", ckpt.hyperparams.seed}}}};
  std::ofstream out = open_for_write(path);
  out << doc.dump(2) << '\n';
  finish_write(out, path);
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in = open_for_read(path);
  std::ostringstream buf;
  buf << in.rdbuf();
  const json doc = parse_json(buf.str(), path);
  expect_header(doc, "pcaprl.checkpoint", path);

  Checkpoint ckpt;
  ckpt.activation = field<std::string>(doc, "activation", path);
  ckpt.layer_dims = field<std::vector<int>>(doc, "layer_dims", path);
  const json layers = field<json>(doc, "layers", path);
  if (!layers.is_array()) throw DataError(path.string() + ": layers must be an array");
  for (const json& layer : layers) {
    ckpt.weights.push_back(field<std::vector<double>>(layer, "weights", path));
    ckpt.biases.push_back(field<std::vector<double>>(layer, "bias", path));
  }
  ckpt.feature_mean = field<std::vector<double>>(doc, "feature_mean", path);
  ckpt.feature_std = field<std::vector<double>>(doc, "feature_std", path);
  ckpt.grid = grid_from_json(field<json>(doc, "grid", path), path);
  const json hp = field<json>(doc, "hyperparams", path);
  ckpt.hyperparams.gamma = field<double>(hp, "gamma", path);
  ckpt.hyperparams.alpha = field<double>(hp, "alpha", path);
  ckpt.hyperparams.batch = field<int>(hp, "batch", path);
  ckpt.hyperparams.iterations = field<int>(hp, "iterations", path);
  ckpt.hyperparams.learning_rate = field<double>(hp, "learning_rate", path);
  ckpt.hyperparams.seed = field<std::uint64_t>(hp, "seed", path);
  ckpt.validate();
  return ckpt;
}

void save_profiles(std::span<const BenchmarkProfile> profiles,
                   const std::filesystem::path& path) {
  json list = json::array();
  for (const BenchmarkProfile& p : profiles) {
    p.validate();
    json phases = json::array();
    for (const PhaseSpec& ph : p.phases) {
      json jp{{"start_fraction", ph.start_fraction}};
      if (ph.progress_max) jp["progress_max"] = *ph.progress_max;
      if (ph.response_exp) jp["response_exp"] = *ph.response_exp;
      if (ph.ipc_base) jp["ipc_base"] = *ph.ipc_base;
      if (ph.stl_base) jp["stl_base"] = *ph.stl_base;
      if (ph.cmr_base) jp["cmr_base"] = *ph.cmr_base;
      phases.push_back(std::move(jp));
    }
    list.push_back(json{{"name", p.name},
                        {"train_split", p.train_split},
                        {"p_idle", p.p_idle},
                        {"p_max_draw", p.p_max_draw},
                        {"p_knee", p.p_knee},
                        {"progress_max", p.progress_max},
                        {"response_exp", p.response_exp},
                        {"ipc_base", p.ipc_base},
                        {"stl_base", p.stl_base},
                        {"cmr_base", p.cmr_base},
                        {"noise_rel", p.noise_rel},
                        {"total_iterations", p.total_iterations},
                        {"phases", phases}});
  }
  const json doc{{"format", "pcaprl.profiles"}, {"version", 1}, {"profiles", list}};
  std::ofstream out = open_for_write(path);
  out << doc.dump(2) << '\n';
  finish_write(out, path);
}

std::vector<BenchmarkProfile> load_profiles(const std::filesystem::path& path) {
  std::ifstream in = open_for_read(path);
  std::ostringstream buf;
  buf << in.rdbuf();
  const json doc = parse_json(buf.str(), path);
  expect_header(doc, "pcaprl.profiles", path);

  const json list = field<json>(doc, "profiles", path);
  if (!list.is_array()) throw DataError(path.string() + ": profiles must be an array");
  std::vector<BenchmarkProfile> out;
  for (const json& jp : list) {
    BenchmarkProfile p;
    p.name = field<std::string>(jp, "name", path);
    p.train_split = field<bool>(jp, "train_split", path);
    p.p_idle = field<double>(jp, "p_idle", path);
    p.p_max_draw = field<double>(jp, "p_max_draw", path);
    p.p_knee = field<double>(jp, "p_knee", path);
    p.progress_max = field<double>(jp, "progress_max", path);
    p.response_exp = field<double>(jp, "response_exp", path);
    p.ipc_base = field<double>(jp, "ipc_base", path);
    p.stl_base = field<double>(jp, "stl_base", path);
    p.cmr_base = field<double>(jp, "cmr_base", path);
    p.noise_rel = field<double>(jp, "noise_rel", path);
    p.total_iterations = field<long>(jp, "total_iterations", path);
    if (jp.contains("phases")) {
      const json& phases = jp["phases"];
      if (!phases.is_array()) throw DataError(path.string() + ": phases must be an array");
      for (const json& jph : phases) {
        PhaseSpec ph;
        ph.start_fraction = field<double>(jph, "start_fraction", path);
        if (jph.contains("progress_max")) ph.progress_max = field<double>(jph, "progress_max", path);
        if (jph.contains("response_exp")) ph.response_exp = field<double>(jph, "response_exp", path);
        if (jph.contains("ipc_base")) ph.ipc_base = field<double>(jph, "ipc_base", path);
        if (jph.contains("stl_base")) ph.stl_base = field<double>(jph, "stl_base", path);
        if (jph.contains("cmr_base")) ph.cmr_base = field<double>(jph, "cmr_base", path);
        p.phases.push_back(ph);
      }
    }
    try {
      p.validate();
    } catch (const std::invalid_argument& e) {
      throw DataError(path.string() + ": invalid profile " + p.name + ": " + e.what());
    }
    out.push_back(std::move(p));
  }
  return out;
}

void save_episode_log(const EpisodeLog& log, const std::filesystem::path& path) {
  std::ofstream out = open_for_write(path);
  out << "t,progress,power,ipc,stl,cmr,cap_watts,heartbeats,energy_j\n";
  for (const EpisodeStep& s : log.steps)
    out << format_double(s.t) << ',' << format_double(s.state.progress) << ','
        << format_double(s.state.power) << ',' << format_double(s.state.ipc) << ','
        << format_double(s.state.stl) << ',' << format_double(s.state.cmr) << ','
        << format_double(s.cap_watts) << ',' << s.heartbeats << ','
        << format_double(s.energy_j) << '\n';
  finish_write(out, path);
}

void save_loss_log(const TrainReport& report, const std::filesystem::path& path) {
  std::ofstream out = open_for_write(path);
  out << "iter,total,bellman,conservative\n";
  for (std::size_t i = 0; i < report.loss_log.size(); ++i) {
    const LossTerms& t = report.loss_log[i];
    out << i << ',' << format_double(t.total) << ',' << format_double(t.bellman) << ','
        << format_double(t.conservative) << '\n';
  }
  finish_write(out, path);
}

namespace {

constexpr const char* kSummaryHeader =
    "benchmark,policy,cap_watts,repeats,et_mean_s,et_std_s,energy_mean_kj,energy_std_kj,"
    "ed2p_mean,ed2p_std";

std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> fields;
  std::string cur;
  for (char c : line) {
    if (c == ',') {
      fields.push_back(cur);
      cur.clear();
    } else {
      cur += c;
    }
  }
  fields.push_back(cur);
  return fields;
}

double parse_double(const std::string& s, const std::filesystem::path& path) {
  try {
    std::size_t used = 0;
    const double v = std::stod(s, &used);
    if (used != s.size()) throw std::invalid_argument(s);
    return v;
  } catch (const std::exception&) {
    throw DataError(path.string() + ": bad numeric field \"" + s + "\"");
  }
}

}  // namespace

void save_summaries(std::span<const RunSummary> summaries, const std::filesystem::path& path) {
  std::ofstream out = open_for_write(path);
  out << kSummaryHeader << '\n';
  for (const RunSummary& s : summaries) {
    if (s.benchmark.find_first_of(",\n") != std::string::npos ||
        s.policy.find_first_of(",\n") != std::string::npos)
      throw DataError("summary names must not contain commas or newlines");
    out << s.benchmark << ',' << s.policy << ',' << format_double(s.cap_watts) << ',' << s.repeats
        << ',' << format_double(s.et_mean_s) << ',' << format_double(s.et_std_s) << ','
        << format_double(s.energy_mean_kj) << ',' << format_double(s.energy_std_kj) << ','
        << format_double(s.ed2p_mean) << ',' << format_double(s.ed2p_std) << '\n';
  }
  finish_write(out, path);
}

std::vector<RunSummary> load_summaries(const std::filesystem::path& path) {
  std::ifstream in = open_for_read(path);
  std::string line;
  if (!std::getline(in, line) || line != kSummaryHeader)
    throw DataError(path.string() + ": missing summary header");
  std::vector<RunSummary> out;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const std::vector<std::string> f = split_csv(line);
    if (f.size() != 10) throw DataError(path.string() + ": summary row needs 10 fields");
    RunSummary s;
    s.benchmark = f[0];
    s.policy = f[1];
    s.cap_watts = parse_double(f[2], path);
    s.repeats = static_cast<int>(parse_double(f[3], path));
    s.et_mean_s = parse_double(f[4], path);
    s.et_std_s = parse_double(f[5], path);
    s.energy_mean_kj = parse_double(f[6], path);
    s.energy_std_kj = parse_double(f[7], path);
    s.ed2p_mean = parse_double(f[8], path);
    s.ed2p_std = parse_double(f[9], path);
    out.push_back(std::move(s));
  }
  return out;
}

}  // namespace pcaprl
