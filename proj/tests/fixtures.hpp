#pragma once

#include <psymeter/data.hpp>
#include <psymeter/simulator.hpp>

#include <Eigen/Dense>

#include <initializer_list>
#include <string>
#include <vector>

namespace psymeter::fixtures {

inline ScoredTest scored_from(const Eigen::MatrixXd& x, TestType type = TestType::person,
                              double lo = -1e9, double hi = 1e9) {
  return ScoredTest(participant_names(static_cast<std::size_t>(x.rows())),
                    item_names(static_cast<std::size_t>(x.cols())), x, type, lo, hi);
}

inline Eigen::MatrixXd columns(std::initializer_list<std::vector<double>> cols) {
  const auto n = static_cast<Eigen::Index>(cols.begin()->size());
  Eigen::MatrixXd m(n, static_cast<Eigen::Index>(cols.size()));
  Eigen::Index j = 0;
  for (const auto& c : cols) {
    for (Eigen::Index i = 0; i < n; ++i) m(i, j) = c[static_cast<std::size_t>(i)];
    ++j;
  }
  return m;
}

// Continuous simulator output packaged as a person-type scored test.
inline ScoredTest simulated(const FactorModelSpec& spec) {
  return scored_from(generate_factor_scores(spec));
}

inline FactorModelSpec three_factor_design(std::uint64_t seed, std::size_t n = 300) {
  FactorModelSpec s;
  s.loadings = simple_structure(3, 4, 0.7);
  s.factor_correlations = Eigen::MatrixXd::Identity(3, 3);
  s.n = n;
  s.seed = seed;
  return s;
}

inline FactorModelSpec noise_design(std::size_t items, std::size_t n, std::uint64_t seed) {
  FactorModelSpec s;
  s.loadings = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(items), 1);
  s.factor_correlations = Eigen::MatrixXd::Identity(1, 1);
  s.n = n;
  s.seed = seed;
  return s;
}

}  // namespace psymeter::fixtures
