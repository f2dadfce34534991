#pragma once

#include "psymeter/config.hpp"

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace psymeter {

inline constexpr int kReportSchemaVersion = 1;

std::string_view tool_version();

struct DatasetSummary {
  std::size_t participants = 0;
  std::size_t items = 0;
  std::size_t dropped_rows = 0;
  std::string test_type;
  std::vector<std::string> item_ids;
  bool operator==(const DatasetSummary&) const = default;
};

struct ItemRow {
  std::string item;
  double facility = 0.0;
  double variance = 0.0;
  double discrimination = 0.0;
  double discrimination_uncorrected = 0.0;
  std::vector<std::string> flags;
  bool operator==(const ItemRow&) const = default;
};

struct ItemSection {
  std::vector<ItemRow> items;
  std::vector<std::string> flagged_items;
  bool operator==(const ItemSection&) const = default;
};

struct ScreeEntry {
  std::size_t index = 0;
  double eigenvalue = 0.0;
  std::optional<double> random_mean;
  std::optional<double> random_p95;
  bool operator==(const ScreeEntry&) const = default;
};

struct VssEntry {
  std::size_t k = 0;
  double criterion = 0.0;
  bool operator==(const VssEntry&) const = default;
};

struct EfaSection {
  std::string correlation;
  std::size_t k1_count = 0;
  std::size_t parallel_count = 0;
  std::string parallel_criterion;
  std::size_t replicates = 0;
  std::uint64_t seed = 0;
  std::size_t chosen_count = 0;
  std::string chosen_by;
  std::vector<ScreeEntry> scree;
  std::vector<VssEntry> vss;
  // Fitted solution; empty when no factor was retained.
  std::string method;
  std::string rotation;
  std::size_t n_factors = 0;
  int iterations = 0;
  std::vector<std::vector<double>> loadings;  // one row per item
  std::vector<double> communalities;
  std::vector<double> uniquenesses;
  std::vector<double> explained_variance;
  std::vector<std::vector<double>> factor_correlations;
  std::vector<std::string> heywood_items;
  std::vector<std::vector<std::string>> loading_flags;  // one row per item
  std::vector<std::size_t> salient_counts;               // one per factor
  std::vector<std::string> notices;
  bool operator==(const EfaSection&) const = default;
};

struct ScoreRow {
  std::string participant;
  double raw = 0.0;
  std::optional<double> normalized;
  double z = 0.0;
  double t = 0.0;
  int stanine = 0;
  int sten = 0;
  bool operator==(const ScoreRow&) const = default;
};

struct StandardizationSection {
  std::string norm_source;  // "sample" or "config"
  double norm_mean = 0.0;
  double norm_sd = 1.0;
  std::string transform;  // "none", "log", "sqrt"
  std::vector<ScoreRow> scores;
  bool operator==(const StandardizationSection&) const = default;
};

struct CoefficientRow {
  std::string kind;
  double value = 0.0;
  double raw_value = 0.0;
  std::size_t n = 0;
  std::optional<double> half_correlation;
  bool operator==(const CoefficientRow&) const = default;
};

struct SemEntry {
  std::string form;
  std::string based_on;
  double reliability = 0.0;
  double sem = 0.0;
  double ci95_half_width = 0.0;
  bool operator==(const SemEntry&) const = default;
};

struct ReliabilitySection {
  std::vector<CoefficientRow> coefficients;
  std::map<std::string, double> alpha_if_deleted;
  std::optional<SemEntry> sem;
  std::vector<std::string> notices;
  bool operator==(const ReliabilitySection&) const = default;
};

struct ValidityRow {
  std::string kind;
  std::string measure;
  double correlation = 0.0;
  std::size_t n = 0;
  std::optional<bool> meets_threshold;
  bool operator==(const ValidityRow&) const = default;
};

struct DifferentialEntry {
  double discrepancy = 0.0;
  double margin = 0.0;
  bool concern = false;
  bool operator==(const DifferentialEntry&) const = default;
};

struct ValiditySection {
  std::vector<ValidityRow> results;
  std::optional<DifferentialEntry> differential;
  bool operator==(const ValiditySection&) const = default;
};

struct GroupFacilityRow {
  std::string item;
  std::vector<double> facility;  // aligned with FairnessSection::levels
  double max_difference = 0.0;
  bool operator==(const GroupFacilityRow&) const = default;
};

struct DifRow {
  std::string item;
  std::string method;
  double statistic = 0.0;
  double p_value = 1.0;
  double effect = 0.0;
  bool flagged = false;
  std::optional<std::size_t> strata_used;
  std::optional<std::size_t> strata_dropped;
  bool operator==(const DifRow&) const = default;
};

struct DtfRow {
  std::string method;
  std::size_t tested = 0;
  std::size_t flagged = 0;
  double proportion = 0.0;
  bool operator==(const DtfRow&) const = default;
};

struct FairnessSection {
  std::string group_column;
  std::string reference;
  std::string focal;
  std::vector<std::string> levels;
  std::vector<GroupFacilityRow> facility;
  std::optional<double> dichotomize_threshold;
  std::vector<DifRow> dif;
  std::vector<DtfRow> dtf;
  bool dtf_warning = false;
  std::vector<std::string> skipped;  // "<item>: <method>: <reason>"
  bool operator==(const FairnessSection&) const = default;
};

struct SimulationSummary {
  std::string model;
  std::uint64_t seed = 0;
  std::size_t n = 0;
  std::vector<std::string> files;
  bool operator==(const SimulationSummary&) const = default;
};

/// Everything one CLI run produced. Sections not requested stay empty.
struct EvaluationReport {
  int schema_version = kReportSchemaVersion;
  std::string tool_version;
  std::string command;
  RawConfig config;
  std::optional<DatasetSummary> dataset;
  std::vector<std::string> advisories;
  std::optional<ItemSection> item_analysis;
  std::optional<EfaSection> efa;
  std::optional<StandardizationSection> standardization;
  std::optional<ReliabilitySection> reliability;
  std::optional<ValiditySection> validity;
  std::optional<FairnessSection> fairness;
  std::optional<SimulationSummary> simulation;
  bool operator==(const EvaluationReport&) const = default;
};

/// Pretty-printed JSON with sorted keys and a trailing newline. Doubles are
/// written with enough digits to read back bit-for-bit.
std::string to_json(const EvaluationReport& report);
/// Throws DataError on malformed input or a schema_version other than 1.
EvaluationReport report_from_json(std::string_view text);

/// Human-readable rendering; numbers use 6 significant digits.
std::string to_text(const EvaluationReport& report);

struct SampleContext {
  std::size_t items = 0;
  bool efa = false;
  /// Salient indicators per retained factor, when a solution exists.
  std::vector<std::size_t> indicators_per_factor;
};

inline constexpr std::size_t kPilotMinimum = 30;
inline constexpr std::size_t kObservationsPerItem = 5;
inline constexpr std::size_t kMinIndicators = 3;

/// Sample-size advisories. Never throws and never blocks an analysis.
std::vector<std::string> warn_small_sample(std::size_t n, const SampleContext& context);

}  // namespace psymeter
