#pragma once

#include "psymeter/data.hpp"
#include "psymeter/factor_analysis.hpp"
#include "psymeter/item_analysis.hpp"
#include "psymeter/reliability.hpp"
#include "psymeter/simulator.hpp"
#include "psymeter/standardization.hpp"
#include "psymeter/stats.hpp"

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

namespace psymeter {

/// section -> key -> raw value, exactly as written (after overrides).
using RawConfig = std::map<std::string, std::map<std::string, std::string>>;

/// INI grammar: `[section]` headers, `key = value` lines, `;` or `#` comments
/// on their own line. Keys outside a section are rejected.
RawConfig parse_config(std::istream& in);
RawConfig load_config(const std::filesystem::path& path);

inline constexpr std::string_view kEnvPrefix = "PSYMETER_";

/// Applies PSYMETER_<SECTION>__<KEY>=value pairs (names case-insensitive).
/// Variables with the prefix but without the `__` separator are a usage error.
void apply_env_overrides(RawConfig& raw, const std::map<std::string, std::string>& env);
/// The process environment restricted to names starting with the prefix.
std::map<std::string, std::string> prefixed_environment();

struct EfaConfig {
  CorrelationMethod correlation = CorrelationMethod::pearson;
  ExtractionMethod method = ExtractionMethod::paf;
  Rotation rotation = Rotation::promax;
  int promax_power = 4;
  double salient_loading = kSalientLoading;
  ExtractionOptions extraction;
};

struct StandardizeConfig {
  std::optional<NormReference> norm;  // sample norms when unset
  std::optional<NormalizeTransform> transform;
};

struct ReliabilityConfig {
  SemForm sem_form = SemForm::conventional;
  CorrelationMethod retest_correlation = CorrelationMethod::pearson;
  std::vector<std::string> rater_columns;
  MeasurementLevel rating_level = MeasurementLevel::nominal;
};

struct ValidityConfig {
  CorrelationMethod correlation = CorrelationMethod::pearson;
  std::optional<std::string> criterion_column;
  std::optional<std::string> concurrent_column;
  std::optional<std::string> convergent_column;
  std::optional<std::string> discriminant_column;
  double margin = 0.1;
};

struct DifConfig {
  std::optional<std::string> reference;
  std::size_t strata = 5;
  double alpha = 0.05;
  double dtf_threshold = 0.25;
  std::optional<double> dichotomize_threshold;
  std::vector<std::string> items;  // empty = every item
  bool mantel_haenszel = true;
  bool logistic = true;
};

enum class SimulationModel { factor, retest, dif };

std::string_view to_string(SimulationModel m);

struct SimulateConfig {
  SimulationModel model = SimulationModel::factor;
  std::size_t n = 300;
  std::size_t factors = 3;
  std::size_t items_per_factor = 4;
  double loading = 0.7;
  double factor_correlation = 0.0;
  std::optional<LikertBounds> likert = LikertBounds{1, 5};
  double true_variance = 4.0;
  double error_variance = 1.0;
  std::vector<std::string> dif_items{"item01"};
  DifKind dif_kind = DifKind::uniform;
  double dif_magnitude = 0.5;
  double group_split = 0.5;
  std::uint64_t seed = 1;

  FactorModelSpec factor_model() const;
};

/// Typed view of a validated RawConfig.
struct Config {
  ScaleSpec scale;
  ItemAnalysisOptions items;
  EfaConfig efa;
  StandardizeConfig standardize;
  ReliabilityConfig reliability;
  ValidityConfig validity;
  DifConfig dif;
  SimulateConfig simulate;
  RawConfig raw;

  /// Throws UsageError listing every unknown section/key, or naming the first
  /// key whose value does not parse.
  static Config from_raw(const RawConfig& raw);

  /// Non-item CSV columns the configuration refers to.
  std::set<std::string> auxiliary_columns() const;
};

/// Every known key per section.
const std::map<std::string, std::set<std::string>>& config_schema();

}  // namespace psymeter
