#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include <nlohmann/json.hpp>

#include "relcomp/capacity_bench.hpp"
#include "relcomp/studies.hpp"

namespace relcomp {

using ordered_json = nlohmann::ordered_json;

enum class ExperimentTag { gen, bind, learn, echo, steer, bench, probe, diffs };

std::string to_string(ExperimentTag tag);
// Throws schema-violation for unknown tags.
ExperimentTag experiment_from_string(const std::string& s);
const std::vector<ExperimentTag>& all_experiments();

struct ExperimentConfig {
  ExperimentTag experiment = ExperimentTag::gen;
  std::uint64_t seed = 0;
  std::filesystem::path output_dir;
  int threads = 1;
  // Effective parameter block: every documented key, defaults filled in.
  ordered_json params;
};

// Parameter block with every key at its default value.
ordered_json default_params(ExperimentTag tag);

// Parses a JSON configuration, fills defaults and validates it. Unknown keys,
// wrong types and out-of-range values raise schema-violation naming the key
// path (for example "params.detector.trials"); malformed JSON raises
// parse-error. Relative file references resolve against `base_dir`.
ExperimentConfig parse_config(std::string_view text, const std::filesystem::path& base_dir = {});
ExperimentConfig load_config(const std::filesystem::path& path);

// Full effective configuration; parse_config(serialize_config(c)) == c.
std::string serialize_config(const ExperimentConfig& config);

// Typed views of a validated parameter block.
EchoStudyParams echo_params(const ExperimentConfig& config);
SteerStudyParams steer_params(const ExperimentConfig& config);
ProbeStudyParams probe_params(const ExperimentConfig& config);
DiffsStudyParams diffs_params(const ExperimentConfig& config);
std::vector<BenchGrid> bench_grids(const ExperimentConfig& config);

struct RunOptions {
  // Adds wall_time_seconds to the manifest. Off by default so that repeated
  // runs produce identical manifests.
  bool record_timing = false;
};

struct RunResult {
  std::filesystem::path output_dir;
  std::vector<std::string> artifacts;  // relative paths, sorted, manifest excluded
  ordered_json headline;
};

// Runs the experiment and writes config.json, its result files and
// manifest.json under config.output_dir. File contents depend only on the
// configuration and seed, not on the thread count (which is recorded in the
// manifest).
RunResult run(const ExperimentConfig& config, const RunOptions& options = {});

// Re-reads manifest.json in `dir` and lists every inconsistency found
// (missing fields, unknown experiment, hash or size mismatches). Empty means
// the manifest is valid.
std::vector<std::string> validate_manifest(const std::filesystem::path& dir);

// 0 success, 2 configuration or input error, 3 numerical failure or failed
// write.
int exit_code_for(ErrorCode code);

enum class PlotKind { capacity_curve, recovery_phase, discrepancy_heatmap };

std::string to_string(PlotKind kind);

struct CurvePoint {
  double x = 0.0;
  std::string series;
  double mean = 0.0;
  double std = 0.0;
};

struct HeatCell {
  double c1_hat = 0.0;
  double c2_hat = 0.0;
  double value = 0.0;
};

using PlotTable = std::variant<std::vector<CurvePoint>, std::vector<HeatCell>>;

// Long-format CSV. capacity-curve and recovery-phase: "x_param,series,mean,std";
// discrepancy-heatmap: "c1_hat,c2_hat,value" in the table's (row-major) order.
// Throws invalid-argument for an empty table or a kind/table mismatch.
std::string plot_csv(const PlotTable& table, PlotKind kind);
void emit_plot_data(const PlotTable& table, PlotKind kind, const std::filesystem::path& path);

}  // namespace relcomp
