#pragma once

#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "pcaprl/cql.hpp"
#include "pcaprl/eval.hpp"
#include "pcaprl/nodesim.hpp"
#include "pcaprl/types.hpp"

namespace pcaprl {

// Shortest round-trip decimal form (deterministic, bit-exact reload).
std::string format_double(double v);

// Dataset: one JSON header line (format, version, grid, reward bounds), then
// one JSON transition per line.
void save_dataset(const Dataset& ds, const std::filesystem::path& path);
Dataset load_dataset(const std::filesystem::path& path);

// Checkpoint: one JSON document; weights row-major with explicit dims.
// Parameters reload bit-exactly.
void save_checkpoint(const Checkpoint& ckpt, const std::filesystem::path& path);
Checkpoint load_checkpoint(const std::filesystem::path& path);

// Benchmark profiles: one JSON document with every profile field by name.
void save_profiles(std::span<const BenchmarkProfile> profiles, const std::filesystem::path& path);
std::vector<BenchmarkProfile> load_profiles(const std::filesystem::path& path);

// Per-interval CSV: t,progress,power,ipc,stl,cmr,cap_watts,heartbeats,energy_j
void save_episode_log(const EpisodeLog& log, const std::filesystem::path& path);

// Per-iteration CSV: iter,total,bellman,conservative
void save_loss_log(const TrainReport& report, const std::filesystem::path& path);

// Summary CSV used by the report stage.
void save_summaries(std::span<const RunSummary> summaries, const std::filesystem::path& path);
std::vector<RunSummary> load_summaries(const std::filesystem::path& path);

}  // namespace pcaprl
