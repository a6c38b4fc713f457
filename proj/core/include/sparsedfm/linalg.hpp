#pragma once

#include <Eigen/Dense>

namespace sdfm {

using Eigen::MatrixXd;
using Eigen::VectorXd;

namespace linalg {

/// (M + M^T) / 2.
MatrixXd symmetrize(const MatrixXd& m);

/// Symmetrizes and clamps eigenvalues from below at `floor`.
MatrixXd floor_eigenvalues(const MatrixXd& m, double floor);

/// Largest singular value.
double spectral_norm(const MatrixXd& m);

/// Moore-Penrose pseudo-inverse; singular values below rel_tol * sigma_max
/// are treated as zero.
MatrixXd pseudo_inverse(const MatrixXd& m, double rel_tol = 1e-12);

/// Inverse of a symmetric positive (semi)definite matrix. Uses Cholesky and
/// falls back to the pseudo-inverse when the factorization fails.
MatrixXd spd_inverse(const MatrixXd& m);

/// Solves P = A P A^T + Q through the vectorized system
/// (I - A (x) A) vec(P) = vec(Q). Throws NumericalError when the system is
/// singular (A not stable).
MatrixXd solve_discrete_lyapunov(const MatrixXd& a, const MatrixXd& q);

/// Returns `a` rescaled so that its spectral norm is at most `max_norm`.
MatrixXd stabilize(const MatrixXd& a, double max_norm = 0.99);

bool all_finite(const MatrixXd& m);

}  // namespace linalg
}  // namespace sdfm
