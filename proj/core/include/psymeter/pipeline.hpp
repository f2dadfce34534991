#pragma once

#include "psymeter/config.hpp"
#include "psymeter/factor_analysis.hpp"
#include "psymeter/report.hpp"

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace psymeter {

enum class Analysis { items, efa, standardize, reliability, validity, dif };

struct PipelineInputs {
  ResponseMatrix data;
  /// Second administration or parallel form, for test-retest.
  std::optional<ResponseMatrix> second;
};

struct PipelineResult {
  EvaluationReport report;
  /// Filled when EFA ran.
  std::vector<ScreeRow> scree;
};

/// Runs the requested analyses in the fixed order items, EFA,
/// standardization, reliability, validity, DIF. With `lenient`, analyses whose
/// inputs are not configured (no group column, no validity columns, Likert
/// items without a dichotomization threshold) are skipped with an advisory
/// instead of raising a usage error.
PipelineResult run_pipeline(const Config& config, const PipelineInputs& inputs,
                            const std::vector<Analysis>& analyses, std::string command,
                            bool lenient = false);

struct SimulationResult {
  ResponseMatrix data;
  /// Second administration for the retest model.
  std::optional<ResponseMatrix> retest;
  /// Generating parameters as JSON.
  std::string parameters_json;
};

SimulationResult simulate(const SimulateConfig& config);

inline constexpr std::string_view kSubcommands[] = {
    "item-analysis", "efa", "standardize", "reliability", "validity", "dif", "simulate", "report"};

enum class OutputFormat { json, text };

struct RunRequest {
  std::string command;
  std::optional<std::filesystem::path> config;
  std::optional<std::filesystem::path> input;
  std::optional<std::filesystem::path> input2;
  std::filesystem::path out_dir = ".";
  std::optional<std::uint64_t> seed;
  OutputFormat format = OutputFormat::json;
  /// Read PSYMETER_<SECTION>__<KEY> overrides from the process environment.
  bool use_environment = true;
};

/// Executes one subcommand, writing report.json and report.txt (plus
/// scree.csv and scree.svg after EFA) into `out_dir` and the report in the
/// requested format to `out`. `simulate` writes simulated.csv and
/// simulated.json instead. Returns 0, or 1 / 2 / 3 for usage, data and
/// numerical errors, with the message on `err`.
int run(const RunRequest& request, std::ostream& out, std::ostream& err);

}  // namespace psymeter
