#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "grcl/datagen.hpp"
#include "grcl/harness.hpp"

namespace grcl {

enum class DiagnosticsLevel { none, iterations, full };

/// Everything needed to reproduce one adaptation run (or, with several
/// seeds, one row of a comparison).
struct RunConfig {
  AdaptationPlan plan;
  std::string preset;        // exactly one of preset / dataset_path is set
  std::string dataset_path;
  std::string label;         // row name in comparisons; defaults to the strategy
  std::string output_dir = "grcl-run";
  DiagnosticsLevel diagnostics = DiagnosticsLevel::iterations;
  std::vector<std::uint64_t> seeds;  // comparison seeds; defaults to {plan.seed}
};

/// Parses and validates a JSON config; unknown keys and missing required
/// fields raise Errc::invalid_config naming the key.
RunConfig parse_run_config(const std::string& json_text);
RunConfig load_run_config(const std::string& path);
/// Fully resolved config, every default spelled out.
std::string run_config_to_json(const RunConfig& cfg);

/// Dataset for a config and seed: the preset regenerated from the seed, or the CSV file.
DomainSequence load_dataset(const RunConfig& cfg, std::uint64_t seed);

/// Runs `cfg` with seed `cfg.plan.seed`.
RunResult execute_run(const RunConfig& cfg);

/// Writes accuracy_matrix.csv, metrics.json, manifest.json, model.ckpt,
/// memory.csv and, depending on the diagnostics level, diagnostics.csv and bank.csv.
void write_run_artifacts(const RunConfig& cfg, const RunResult& result, const std::string& dir);
std::string metrics_json(const RunConfig& cfg, const RunResult& result);

/// Output directory after the GRCL_OUTPUT_DIR environment override.
std::string resolve_output_dir(const RunConfig& cfg);

struct CompareRow {
  std::string label;
  std::string strategy;
  double lambda_source = 0.0;
  double lambda_memory = 0.0;
  std::string dataset;
  std::size_t runs = 0;
  double acc = 0.0, acc_std = 0.0;
  double acc_over_domains = 0.0, acc_over_domains_std = 0.0;
  std::optional<double> bwt, bwt_std;
};

double mean_of(std::span<const double> values);
/// Sample standard deviation (divisor n - 1); zero for fewer than two values.
double sample_std(std::span<const double> values);

/// One row per config, aggregated over that config's seeds.
std::vector<CompareRow> compare(const std::vector<RunConfig>& configs);
void write_compare_csv(std::ostream& out, std::span<const CompareRow> rows);

const char* library_version();

}  // namespace grcl
