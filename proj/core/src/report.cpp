#include "psymeter/report.hpp"

#include "psymeter/error.hpp"

#include <json.hpp>

#include <cstdio>
#include <sstream>

NLOHMANN_JSON_NAMESPACE_BEGIN
template <class T>
struct adl_serializer<std::optional<T>> {
  static void to_json(json& j, const std::optional<T>& v) {
    if (v) {
      j = *v;
    } else {
      j = nullptr;
    }
  }
  static void from_json(const json& j, std::optional<T>& v) {
    if (j.is_null()) {
      v.reset();
    } else {
      v = j.get<T>();
    }
  }
};
NLOHMANN_JSON_NAMESPACE_END

namespace psymeter {

NLOHMANN_DEFINE_TYPE_NON_INTRUSIVE(DatasetSummary, participants, items, dropped_rows, test_type,
                                   item_ids)
NLOHMANN_DEFINE_TYPE_NON_INTRUSIVE(ItemRow, item, facility, variance, discrimination,
                                   discrimination_uncorrected, flags)
NLOHMANN_DEFINE_TYPE_NON_INTRUSIVE(ItemSection, items, flagged_items)
NLOHMANN_DEFINE_TYPE_NON_INTRUSIVE(ScreeEntry, index, eigenvalue, random_mean, random_p95)
NLOHMANN_DEFINE_TYPE_NON_INTRUSIVE(VssEntry, k, criterion)
NLOHMANN_DEFINE_TYPE_NON_INTRUSIVE(EfaSection, correlation, k1_count, parallel_count,
                                   parallel_criterion, replicates, seed, chosen_count, chosen_by,
                                   scree, vss, method, rotation, n_factors, iterations, loadings,
                                   communalities, uniquenesses, explained_variance,
                                   factor_correlations, heywood_items, loading_flags,
                                   salient_counts, notices)
NLOHMANN_DEFINE_TYPE_NON_INTRUSIVE(ScoreRow, participant, raw, normalized, z, t, stanine, sten)
NLOHMANN_DEFINE_TYPE_NON_INTRUSIVE(StandardizationSection, norm_source, norm_mean, norm_sd,
                                   transform, scores)
NLOHMANN_DEFINE_TYPE_NON_INTRUSIVE(CoefficientRow, kind, value, raw_value, n, half_correlation)
NLOHMANN_DEFINE_TYPE_NON_INTRUSIVE(SemEntry, form, based_on, reliability, sem, ci95_half_width)
NLOHMANN_DEFINE_TYPE_NON_INTRUSIVE(ReliabilitySection, coefficients, alpha_if_deleted, sem,
                                   notices)
NLOHMANN_DEFINE_TYPE_NON_INTRUSIVE(ValidityRow, kind, measure, correlation, n, meets_threshold)
NLOHMANN_DEFINE_TYPE_NON_INTRUSIVE(DifferentialEntry, discrepancy, margin, concern)
NLOHMANN_DEFINE_TYPE_NON_INTRUSIVE(ValiditySection, results, differential)
NLOHMANN_DEFINE_TYPE_NON_INTRUSIVE(GroupFacilityRow, item, facility, max_difference)
NLOHMANN_DEFINE_TYPE_NON_INTRUSIVE(DifRow, item, method, statistic, p_value, effect, flagged,
                                   strata_used, strata_dropped)
NLOHMANN_DEFINE_TYPE_NON_INTRUSIVE(DtfRow, method, tested, flagged, proportion)
NLOHMANN_DEFINE_TYPE_NON_INTRUSIVE(FairnessSection, group_column, reference, focal, levels,
                                   facility, dichotomize_threshold, dif, dtf, dtf_warning, skipped)
NLOHMANN_DEFINE_TYPE_NON_INTRUSIVE(SimulationSummary, model, seed, n, files)
NLOHMANN_DEFINE_TYPE_NON_INTRUSIVE(EvaluationReport, schema_version, tool_version, command,
                                   config, dataset, advisories, item_analysis, efa,
                                   standardization, reliability, validity, fairness, simulation)

std::string_view tool_version() { return PSYMETER_VERSION; }

std::string to_json(const EvaluationReport& report) {
  return nlohmann::json(report).dump(2) + "\n";
}

EvaluationReport report_from_json(std::string_view text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw DataError(std::string("report: ") + e.what());
  }
  if (!j.is_object() || !j.contains("schema_version") || j["schema_version"] != kReportSchemaVersion) {
    throw DataError("report: unsupported schema_version (expected " +
                    std::to_string(kReportSchemaVersion) + ")");
  }
  try {
    return j.get<EvaluationReport>();
  } catch (const nlohmann::json::exception& e) {
    throw DataError(std::string("report: ") + e.what());
  }
}

namespace {

std::string num(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.6g", x);
  return buf;
}

std::string opt(const std::optional<double>& x) { return x ? num(*x) : "-"; }

std::string join(const std::vector<std::string>& v, std::string_view sep = ", ") {
  std::string out;
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (i) out += sep;
    out += v[i];
  }
  return out;
}

void heading(std::ostringstream& out, std::string_view title) {
  out << '\n' << title << '\n' << std::string(title.size(), '-') << '\n';
}

void render_items(std::ostringstream& out, const ItemSection& s) {
  heading(out, "Item analysis");
  out << "item\tfacility\tvariance\tdiscrimination\tuncorrected\tflags\n";
  for (const auto& r : s.items) {
    out << r.item << '\t' << num(r.facility) << '\t' << num(r.variance) << '\t'
        << num(r.discrimination) << '\t' << num(r.discrimination_uncorrected) << '\t'
        << (r.flags.empty() ? "-" : join(r.flags, ",")) << '\n';
  }
  out << "review candidates: " << (s.flagged_items.empty() ? "none" : join(s.flagged_items)) << '\n';
}

void render_efa(std::ostringstream& out, const EfaSection& s, const std::vector<std::string>& items) {
  heading(out, "Exploratory factor analysis");
  out << "correlation: " << s.correlation << '\n';
  out << "factors by eigenvalue > 1: " << s.k1_count << '\n';
  out << "factors by parallel analysis (" << s.parallel_criterion << ", " << s.replicates
      << " replicates): " << s.parallel_count << '\n';
  out << "chosen: " << s.chosen_count << " (" << s.chosen_by << ")\n";
  out << "scree:\n";
  for (const auto& r : s.scree) {
    out << "  " << r.index << '\t' << num(r.eigenvalue) << '\t' << opt(r.random_mean) << '\t'
        << opt(r.random_p95) << '\n';
  }
  out << "very simple structure:\n";
  for (const auto& r : s.vss) out << "  k=" << r.k << '\t' << num(r.criterion) << '\n';
  if (s.n_factors == 0) {
    for (const auto& n : s.notices) out << "note: " << n << '\n';
    return;
  }
  out << "solution: " << s.method << ", rotation " << s.rotation << ", " << s.n_factors
      << " factors, " << s.iterations << " iterations\n";
  out << "item";
  for (std::size_t f = 0; f < s.n_factors; ++f) out << "\tF" << f + 1;
  out << "\th2\tu2\tflags\n";
  for (std::size_t i = 0; i < s.loadings.size(); ++i) {
    out << (i < items.size() ? items[i] : std::to_string(i + 1));
    for (double l : s.loadings[i]) out << '\t' << num(l);
    out << '\t' << num(s.communalities[i]) << '\t' << num(s.uniquenesses[i]) << '\t'
        << (s.loading_flags[i].empty() ? "-" : join(s.loading_flags[i], ",")) << '\n';
  }
  out << "explained variance:";
  for (double v : s.explained_variance) out << ' ' << num(v);
  out << '\n';
  if (s.rotation == "promax") {
    out << "factor correlations:\n";
    for (const auto& row : s.factor_correlations) {
      out << ' ';
      for (double v : row) out << ' ' << num(v);
      out << '\n';
    }
  }
  if (!s.heywood_items.empty()) out << "heywood items: " << join(s.heywood_items) << '\n';
  for (const auto& n : s.notices) out << "note: " << n << '\n';
}

void render_standardization(std::ostringstream& out, const StandardizationSection& s) {
  heading(out, "Standardization");
  out << "norms (" << s.norm_source << "): mean " << num(s.norm_mean) << ", sd " << num(s.norm_sd)
      << ", transform " << s.transform << '\n';
  out << "participant\traw\tz\tT\tstanine\tsten\n";
  for (const auto& r : s.scores) {
    out << r.participant << '\t' << num(r.raw) << '\t' << num(r.z) << '\t' << num(r.t) << '\t'
        << r.stanine << '\t' << r.sten << '\n';
  }
}

void render_reliability(std::ostringstream& out, const ReliabilitySection& s) {
  heading(out, "Reliability");
  for (const auto& c : s.coefficients) {
    out << c.kind << ": " << num(c.value);
    if (c.raw_value != c.value) out << " (raw " << num(c.raw_value) << ")";
    if (c.half_correlation) out << " (half correlation " << num(*c.half_correlation) << ")";
    out << ", n=" << c.n << '\n';
  }
  if (!s.alpha_if_deleted.empty()) {
    out << "alpha if item deleted:\n";
    for (const auto& [item, a] : s.alpha_if_deleted) out << "  " << item << '\t' << num(a) << '\n';
  }
  if (s.sem) {
    out << "standard error of measurement (" << s.sem->form << ", from " << s.sem->based_on
        << " " << num(s.sem->reliability) << "): " << num(s.sem->sem) << ", 95% half-width "
        << num(s.sem->ci95_half_width) << '\n';
  }
  for (const auto& n : s.notices) out << "note: " << n << '\n';
}

void render_validity(std::ostringstream& out, const ValiditySection& s) {
  heading(out, "Validity");
  for (const auto& r : s.results) {
    out << r.kind << " (" << r.measure << "): r=" << num(r.correlation) << ", n=" << r.n;
    if (r.meets_threshold) out << (*r.meets_threshold ? ", above 0.5" : ", not above 0.5");
    out << '\n';
  }
  if (s.differential) {
    out << "convergent minus discriminant: " << num(s.differential->discrepancy)
        << (s.differential->concern ? " (concern: not above margin " : " (margin ")
        << num(s.differential->margin) << ")\n";
  }
}

void render_fairness(std::ostringstream& out, const FairnessSection& s) {
  heading(out, "Fairness");
  out << "groups (" << s.group_column << "): reference " << s.reference << ", focal " << s.focal
      << '\n';
  out << "item";
  for (const auto& l : s.levels) out << '\t' << l;
  out << "\tmax gap\n";
  for (const auto& r : s.facility) {
    out << r.item;
    for (double f : r.facility) out << '\t' << num(f);
    out << '\t' << num(r.max_difference) << '\n';
  }
  if (s.dichotomize_threshold) out << "dichotomized at " << num(*s.dichotomize_threshold) << '\n';
  out << "item\tmethod\tstatistic\tp\teffect\tflagged\n";
  for (const auto& r : s.dif) {
    out << r.item << '\t' << r.method << '\t' << num(r.statistic) << '\t' << num(r.p_value) << '\t'
        << num(r.effect) << '\t' << (r.flagged ? "yes" : "no") << '\n';
  }
  for (const auto& d : s.dtf) {
    out << d.method << ": " << d.flagged << " of " << d.tested << " items flagged ("
        << num(d.proportion) << ")\n";
  }
  if (s.dtf_warning) out << "warning: flagged share suggests test-level functioning differences\n";
  for (const auto& k : s.skipped) out << "skipped: " << k << '\n';
}

}  // namespace

std::string to_text(const EvaluationReport& r) {
  std::ostringstream out;
  out << "psymeter " << r.tool_version << " - " << r.command << '\n';
  if (r.dataset) {
    out << "participants: " << r.dataset->participants << " (" << r.dataset->dropped_rows
        << " dropped for missing cells), items: " << r.dataset->items << ", "
        << r.dataset->test_type << " test\n";
  }
  if (r.simulation) {
    out << "simulated " << r.simulation->model << " data, n=" << r.simulation->n << ", seed "
        << r.simulation->seed << ": " << join(r.simulation->files) << '\n';
  }
  for (const auto& a : r.advisories) out << "advisory: " << a << '\n';
  if (r.item_analysis) render_items(out, *r.item_analysis);
  if (r.efa) render_efa(out, *r.efa, r.dataset ? r.dataset->item_ids : std::vector<std::string>{});
  if (r.standardization) render_standardization(out, *r.standardization);
  if (r.reliability) render_reliability(out, *r.reliability);
  if (r.validity) render_validity(out, *r.validity);
  if (r.fairness) render_fairness(out, *r.fairness);
  return out.str();
}

std::vector<std::string> warn_small_sample(std::size_t n, const SampleContext& context) {
  std::vector<std::string> out;
  if (n < kPilotMinimum) {
    out.push_back("n=" + std::to_string(n) + " is below the pilot minimum of " +
                  std::to_string(kPilotMinimum) + " participants");
  }
  if (context.efa && n < kObservationsPerItem * context.items) {
    out.push_back("n=" + std::to_string(n) + " gives fewer than " +
                  std::to_string(kObservationsPerItem) + " observations per item for " +
                  std::to_string(context.items) + " items in factor analysis");
  }
  for (std::size_t f = 0; f < context.indicators_per_factor.size(); ++f) {
    if (context.indicators_per_factor[f] < kMinIndicators) {
      out.push_back("factor " + std::to_string(f + 1) + " has " +
                    std::to_string(context.indicators_per_factor[f]) +
                    " salient items; at least " + std::to_string(kMinIndicators) +
                    " are recommended");
    }
  }
  return out;
}

}  // namespace psymeter
