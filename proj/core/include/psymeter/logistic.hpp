#pragma once

#include "psymeter/error.hpp"

#include <Eigen/Dense>

#include <vector>

namespace psymeter {

struct LogisticFit {
  Eigen::VectorXd coefficients;
  Eigen::VectorXd standard_errors;
  double log_likelihood = 0.0;
  int iterations = 0;
  /// Log-likelihood after each accepted IRLS step, starting at beta = 0.
  std::vector<double> log_likelihood_trace;
};

using LogisticIterationLimit = IterationLimitError<LogisticFit>;

struct LogisticOptions {
  double tolerance = 1e-8;  // on max |delta beta|
  int max_iterations = 25;
};

/// Binomial-logit maximum likelihood by IRLS (Newton-Raphson) with step
/// halving, so the log-likelihood never decreases between iterations.
///
/// `design` must contain its own intercept column. Throws SeparationError when
/// fitted probabilities get pinned at 0 or 1 (|eta| > 30), and
/// LogisticIterationLimit carrying the last iterate otherwise.
LogisticFit logistic_fit(const Eigen::MatrixXd& design, const Eigen::VectorXd& response,
                         const LogisticOptions& options = {});

}  // namespace psymeter
