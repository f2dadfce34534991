#pragma once

#include "psymeter/data.hpp"

#include <Eigen/Dense>

#include <optional>
#include <span>
#include <string>
#include <vector>

namespace psymeter {

struct GroupFacilities {
  std::vector<std::string> levels;  // sorted
  std::vector<std::string> items;
  Eigen::MatrixXd facility;         // items x levels
  Eigen::VectorXd max_difference;   // per item, largest pairwise gap
};

/// Per-group item facility (mean item score) for every item.
GroupFacilities facility_by_group(const ScoredTest& scored, std::span<const std::string> groups);

/// Two-level grouping: 0 = reference, 1 = focal.
struct BinaryGroups {
  std::vector<int> membership;
  std::string reference = "reference";
  std::string focal = "focal";

  /// `reference` defaults to the label of the first participant. Throws
  /// DataError unless exactly two levels occur.
  static BinaryGroups from_labels(std::span<const std::string> labels,
                                  std::optional<std::string> reference = std::nullopt);
  BinaryGroups swapped() const;
};

enum class DifMethod { mh, logistic_uniform, logistic_nonuniform };

std::string_view to_string(DifMethod m);

struct DifResult {
  std::string item;
  DifMethod method = DifMethod::mh;
  /// Chi-square statistic (1 df).
  double statistic = 0.0;
  double p_value = 1.0;
  /// MH common odds ratio (reference vs focal), or the logistic coefficient
  /// of the group / group x total term.
  double effect = 0.0;
  bool flagged = false;
  // Mantel-Haenszel only: OR = numerator / denominator, and strata bookkeeping.
  double or_numerator = 0.0;
  double or_denominator = 0.0;
  std::size_t strata_used = 0;
  std::size_t strata_dropped = 0;
};

struct MhOptions {
  std::size_t n_strata = 5;
  double alpha = 0.05;
};

/// Upper-tail probability of a chi-square with one degree of freedom.
double chi_square_1df_p(double statistic);

/// Mantel-Haenszel DIF for a 0/1 item, stratifying on the rest score
/// (total minus the studied item) cut at its quantiles. The chi-square uses
/// the 0.5 continuity correction.
DifResult mantel_haenszel_dif(const ScoredTest& scored, const BinaryGroups& groups,
                              std::string_view item, const MhOptions& options = {});

struct LogisticDifResult {
  DifResult uniform;
  DifResult nonuniform;
};

/// Nested logistic models of the item on the standardized total score, then
/// + group, then + group x total; likelihood-ratio tests with 1 df each.
LogisticDifResult logistic_dif(const ScoredTest& scored, const BinaryGroups& groups,
                               std::string_view item, double alpha = 0.05);

struct DtfMethodSummary {
  DifMethod method = DifMethod::mh;
  std::size_t tested = 0;
  std::size_t flagged = 0;
  double proportion = 0.0;
};

struct DtfSummary {
  std::vector<DtfMethodSummary> methods;
  bool warning = false;
};

inline constexpr double kDtfThreshold = 0.25;

/// Items count as flagged when p < alpha. Warns when any method's flagged
/// proportion exceeds `threshold`.
DtfSummary dtf_summary(std::span<const DifResult> results, double alpha = 0.05,
                       double threshold = kDtfThreshold);

/// 0/1 recoding of a Likert column: 1 when score >= threshold.
ScoredTest dichotomize(const ScoredTest& scored, double threshold);

}  // namespace psymeter
