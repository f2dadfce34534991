#pragma once

#include "psymeter/data.hpp"

#include <Eigen/Dense>

#include <span>
#include <string>
#include <vector>

namespace psymeter {

enum class CorrelationMethod { pearson, spearman };

std::string_view to_string(CorrelationMethod m);
CorrelationMethod parse_correlation_method(std::string_view s);

// Sample statistics use n - 1 denominators.
double mean(std::span<const double> x);
double sample_variance(std::span<const double> x);
double sample_sd(std::span<const double> x);
/// Sample skewness g1 = m3 / m2^(3/2) (population moments).
double skewness(std::span<const double> x);
/// Linear-interpolation quantile (R type 7). `p` in [0, 1]; x need not be sorted.
double quantile(std::span<const double> x, double p);

inline std::span<const double> as_span(const Eigen::VectorXd& v) {
  return {v.data(), static_cast<std::size_t>(v.size())};
}

/// Mid-ranks (1-based); ties share the average of the ranks they span.
std::vector<double> average_ranks(std::span<const double> x);

/// Throws DegenerateInputError when either vector is constant, UsageError when
/// sizes differ or fewer than three observations are given.
double pearson(std::span<const double> x, std::span<const double> y);
double spearman(std::span<const double> x, std::span<const double> y);
double correlate(std::span<const double> x, std::span<const double> y, CorrelationMethod method);

/// Item intercorrelations. `values` is symmetric; the diagonal is 1 in the
/// plain form and holds communality estimates in the reduced form.
struct CorrelationMatrix {
  std::vector<std::string> items;
  Eigen::MatrixXd values;

  std::size_t size() const noexcept { return items.size(); }
  std::size_t index_of(std::string_view item) const;
};

CorrelationMatrix correlation_matrix(const ScoredTest& scored,
                                     CorrelationMethod method = CorrelationMethod::pearson);

/// Lower triangle with the diagonal, one row per item, fixed `decimals`.
std::string render_lower_triangle(const CorrelationMatrix& c, int decimals = 2);

struct SmcResult {
  Eigen::VectorXd values;
  bool ridge_applied = false;
};

inline constexpr double kSmcRidge = 1e-8;

/// Squared multiple correlation of each item with the rest: 1 - 1/(C^-1)_ii,
/// clamped to [0, 1]. A singular matrix throws SingularMatrixError unless
/// `allow_ridge` is set, in which case kSmcRidge is added to the diagonal and
/// `ridge_applied` reports it.
SmcResult smc_all(const CorrelationMatrix& c, bool allow_ridge = false);
double smc(const CorrelationMatrix& c, std::string_view item);

}  // namespace psymeter
