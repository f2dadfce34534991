#include "psymeter/logistic.hpp"

#include <cmath>

namespace psymeter {

namespace {

constexpr double kPinnedEta = 30.0;

// log(1 + exp(x)) without overflow.
double log1pexp(double x) { return x > 0.0 ? x + std::log1p(std::exp(-x)) : std::log1p(std::exp(x)); }

double log_likelihood(const Eigen::VectorXd& eta, const Eigen::VectorXd& y) {
  double ll = 0.0;
  for (Eigen::Index i = 0; i < eta.size(); ++i) ll += y(i) * eta(i) - log1pexp(eta(i));
  return ll;
}

}  // namespace

LogisticFit logistic_fit(const Eigen::MatrixXd& design, const Eigen::VectorXd& response,
                         const LogisticOptions& options) {
  const auto n = design.rows();
  const auto p = design.cols();
  if (response.size() != n) throw UsageError("logistic_fit: design and response sizes differ");
  if (n <= p) throw InsufficientDataError("logistic_fit: more parameters than observations");
  for (Eigen::Index i = 0; i < n; ++i) {
    if (response(i) != 0.0 && response(i) != 1.0) {
      throw UsageError("logistic_fit: response must be 0/1");
    }
  }

  LogisticFit fit;
  Eigen::VectorXd beta = Eigen::VectorXd::Zero(p);
  Eigen::VectorXd eta = design * beta;
  double ll = log_likelihood(eta, response);
  fit.log_likelihood_trace.push_back(ll);

  auto finish = [&](int iterations) {
    fit.coefficients = beta;
    fit.log_likelihood = ll;
    fit.iterations = iterations;
    Eigen::VectorXd w(n);
    for (Eigen::Index i = 0; i < n; ++i) {
      const double mu = 1.0 / (1.0 + std::exp(-eta(i)));
      w(i) = mu * (1.0 - mu);
    }
    Eigen::MatrixXd info = design.transpose() * w.asDiagonal() * design;
    Eigen::MatrixXd cov = info.ldlt().solve(Eigen::MatrixXd::Identity(p, p));
    fit.standard_errors = cov.diagonal().cwiseMax(0.0).cwiseSqrt();
  };

  for (int iter = 1; iter <= options.max_iterations; ++iter) {
    Eigen::VectorXd mu(n), w(n);
    for (Eigen::Index i = 0; i < n; ++i) {
      mu(i) = 1.0 / (1.0 + std::exp(-eta(i)));
      w(i) = mu(i) * (1.0 - mu(i));
    }
    Eigen::MatrixXd info = design.transpose() * w.asDiagonal() * design;
    Eigen::VectorXd score = design.transpose() * (response - mu);
    auto ldlt = info.ldlt();
    if (ldlt.info() != Eigen::Success || ldlt.rcond() < 1e-14) {
      throw SeparationError("logistic_fit: information matrix is singular (separated or "
                            "collinear design)");
    }
    Eigen::VectorXd step = ldlt.solve(score);

    // Halve the Newton step until the likelihood does not drop.
    double scale = 1.0;
    Eigen::VectorXd next = beta + step;
    Eigen::VectorXd next_eta = design * next;
    double next_ll = log_likelihood(next_eta, response);
    for (int h = 0; h < 30 && next_ll < ll; ++h) {
      scale /= 2.0;
      next = beta + scale * step;
      next_eta = design * next;
      next_ll = log_likelihood(next_eta, response);
    }
    if (next_ll < ll) {
      next = beta;
      next_eta = eta;
      next_ll = ll;
    }
    const double change = (next - beta).cwiseAbs().maxCoeff();
    beta = next;
    eta = next_eta;
    ll = next_ll;
    fit.log_likelihood_trace.push_back(ll);

    // A likelihood approaching 1 means every observation is fitted perfectly.
    if (eta.cwiseAbs().maxCoeff() > kPinnedEta || ll > -1e-6) {
      throw SeparationError("logistic_fit: fitted probabilities pinned at 0 or 1 "
                            "(perfect or quasi-complete separation)");
    }
    if (change < options.tolerance) {
      finish(iter);
      return fit;
    }
  }
  finish(options.max_iterations);
  throw LogisticIterationLimit("logistic_fit: no convergence within " +
                                   std::to_string(options.max_iterations) + " iterations",
                               fit);
}

}  // namespace psymeter
