#pragma once

#include <Eigen/Dense>

namespace psymeter {

/// Eigenvalues in descending order; eigenvectors as orthonormal columns, each
/// signed so that its largest-magnitude component is positive.
struct EigenSystem {
  Eigen::VectorXd values;
  Eigen::MatrixXd vectors;
  int sweeps = 0;
};

/// Cyclic Jacobi eigen-decomposition of a real symmetric matrix.
///
/// Throws ContractViolation when |a_ij - a_ji| exceeds 1e-12 (scaled by the
/// largest entry when that exceeds 1). Sweeps run until the off-diagonal
/// Frobenius norm drops below 1e-14 of the total norm, or 100 sweeps.
EigenSystem eigen_symmetric(const Eigen::MatrixXd& a);

}  // namespace psymeter
