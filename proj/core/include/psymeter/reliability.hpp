#pragma once

#include "psymeter/data.hpp"
#include "psymeter/stats.hpp"

#include <map>
#include <optional>
#include <string>
#include <vector>

namespace psymeter {

enum class ReliabilityKind {
  test_retest,
  split_half,
  cronbach_alpha,
  cohen_kappa,
  fleiss_kappa,
  krippendorff_alpha
};

std::string_view to_string(ReliabilityKind k);

struct ReliabilityReport {
  ReliabilityKind kind = ReliabilityKind::cronbach_alpha;
  /// Reported coefficient. Equals `raw_value` except for test-retest, where a
  /// negative correlation is reported as 0.
  double value = 0.0;
  double raw_value = 0.0;
  std::size_t n = 0;
  /// split_half: correlation of the half totals.
  std::optional<double> half_correlation;
  /// split_half: per-participant totals of the odd- and even-numbered items.
  std::vector<double> odd_half;
  std::vector<double> even_half;
  /// cronbach_alpha: alpha recomputed with each item left out (needs >= 3 items).
  std::map<std::string, double> alpha_if_deleted;
};

/// Correlation of paired totals, matched by participant ID. Also serves
/// parallel forms: pass the two forms' scored tests.
ReliabilityReport test_retest(const ScoredTest& t1, const ScoredTest& t2,
                              CorrelationMethod method = CorrelationMethod::pearson);

double spearman_brown(double r_half);

/// Odd/even split (1st, 3rd, ... items vs 2nd, 4th, ...), stepped up with
/// Spearman-Brown.
ReliabilityReport split_half(const ScoredTest& scored);

ReliabilityReport cronbach_alpha(const ScoredTest& scored);

// Categorical ratings are integer category codes.
double cohen_kappa(std::span<const int> rater1, std::span<const int> rater2);

/// `ratings[subject][rater]`, every subject rated by the same number of raters.
double fleiss_kappa(const std::vector<std::vector<int>>& ratings);

enum class MeasurementLevel { nominal, interval };

/// `ratings[unit][coder]`; nullopt marks a missing rating.
double krippendorff_alpha(const std::vector<std::vector<std::optional<double>>>& ratings,
                          MeasurementLevel level);

enum class SemForm { conventional, variance_scaled };

SemForm parse_sem_form(std::string_view s);
std::string_view to_string(SemForm f);

struct SemResult {
  double sem = 0.0;
  /// 1.96 * sem: a 95% interval is observed +/- this.
  double ci95_half_width = 0.0;
  SemForm form = SemForm::conventional;
};

/// conventional: sd * sqrt(1 - r). variance_scaled: var * (1 - r).
/// `test_sd` is the standard deviation of the total scores.
SemResult sem_from_sd(double test_sd, double reliability, SemForm form = SemForm::conventional);
SemResult sem(const ScoredTest& scored, double reliability, SemForm form = SemForm::conventional);

}  // namespace psymeter
