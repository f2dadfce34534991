#pragma once

#include "psymeter/stats.hpp"

#include <optional>
#include <span>

namespace psymeter {

enum class ValidityKind { predictive, concurrent, convergent, discriminant };

std::string_view to_string(ValidityKind k);

inline constexpr double kPredictiveThreshold = 0.5;

struct ValidityReport {
  ValidityKind kind = ValidityKind::predictive;
  double correlation = 0.0;
  std::size_t n = 0;
  /// Predictive only: correlation > 0.5. Advisory.
  std::optional<bool> meets_threshold;
};

ValidityReport predictive_validity(std::span<const double> test_scores,
                                   std::span<const double> criterion_scores,
                                   CorrelationMethod method = CorrelationMethod::pearson);

ValidityReport concurrent_validity(std::span<const double> new_test,
                                   std::span<const double> existing_test,
                                   CorrelationMethod method = CorrelationMethod::pearson);

struct DifferentialValidityReport {
  ValidityReport convergent;
  ValidityReport discriminant;
  /// r_convergent - r_discriminant.
  double discrepancy = 0.0;
  /// Raised when the discrepancy does not exceed the margin.
  bool concern = false;
};

inline constexpr double kDiscrepancyMargin = 0.1;

DifferentialValidityReport differential_validity(
    std::span<const double> test, std::span<const double> convergent_measure,
    std::span<const double> discriminant_measure,
    CorrelationMethod method = CorrelationMethod::pearson, double margin = kDiscrepancyMargin);

}  // namespace psymeter
