#pragma once

#include <span>
#include <string_view>
#include <vector>

namespace psymeter {

/// Mean and standard deviation of a norm group.
struct NormReference {
  double mean = 0.0;
  double sd = 1.0;

  /// Sample mean and n - 1 standard deviation.
  static NormReference from_sample(std::span<const double> scores);
};

double z_score(double raw, const NormReference& norm);
std::vector<double> z_scores(std::span<const double> raw, const NormReference& norm);

inline double t_score(double z) { return z * 10.0 + 50.0; }

// Stanine 1..9 and sten 1..10. Bins are half-open and lower-inclusive, e.g.
// stanine 3 is [-1.25, -0.75) and sten 10 is [2.0, inf).
int stanine(double z);
int sten(double z);

enum class NormalizeTransform { log, sqrt };

NormalizeTransform parse_normalize_transform(std::string_view s);

/// Element-wise log (inputs > 0) or square root (inputs >= 0).
std::vector<double> normalize(std::span<const double> values, NormalizeTransform transform);

}  // namespace psymeter
