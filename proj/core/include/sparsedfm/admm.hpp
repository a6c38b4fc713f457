#pragma once

#include <utility>
#include <vector>

#include "sparsedfm/linalg.hpp"
#include "sparsedfm/panel.hpp"

namespace sdfm {

struct SmoothedMoments;

/// The loadings block of the expected complete-data likelihood, decomposed by
/// variable. For row i:
///   Q_i(lambda) = weight_i * (lambda^T gram_i lambda / 2 - rhs_i^T lambda)
/// where gram_i = sum over observed t of S_{t|n} and weight_i is the inverse
/// measurement variance.
struct LoadingsProblem {
  std::vector<MatrixXd> gram;  // p of r x r
  MatrixXd rhs;                // p x r
  VectorXd weight;             // p
  Eigen::VectorXi observed;    // p, observed cell counts

  Eigen::Index p() const { return rhs.rows(); }
  Eigen::Index r() const { return rhs.cols(); }

  /// IID-error problem: rhs_i = sum over observed t of X_{t,i} a_{t|n}.
  static LoadingsProblem build(const MatrixXd& X, const MaskMatrix& mask,
                               const SmoothedMoments& moments, const VectorXd& sigma_eps);

  /// Sum over i of Q_i evaluated at the rows of `Lambda`.
  double objective(const MatrixXd& Lambda) const;
};

/// Row-wise unpenalized minimizer (gram_i lambda_i = rhs_i). Throws DataError
/// if some variable is never observed.
MatrixXd solve_dense_loadings(const LoadingsProblem& problem);

/// sign(m) * max(|m| - t, 0), elementwise.
MatrixXd soft_threshold(const MatrixXd& m, double t);

struct AdmmOptions {
  double nu = 1.0;
  double eps_abs = 1e-6;
  double eps_rel = 1e-6;
  int max_iter = 200;
};

struct AdmmState {
  MatrixXd Lambda;  // primal
  MatrixXd Z;       // auxiliary (sparse)
  MatrixXd U;       // scaled multipliers
  double nu = 1.0;
  Eigen::Index q = 0;  // leading rows exempt from the penalty
  std::vector<double> primal_residuals;
  std::vector<double> dual_residuals;
  int iterations = 0;
  bool converged = false;
};

/// Per-row primal update: (w_i gram_i + nu I) lambda_i = w_i rhs_i + nu (Z_i - U_i).
MatrixXd admm_lambda_primal(const LoadingsProblem& problem, const MatrixXd& Z, const MatrixXd& U,
                            double nu);
MatrixXd admm_lambda_primal(const MatrixXd& X, const MaskMatrix& mask,
                            const SmoothedMoments& moments, const VectorXd& sigma_eps,
                            const MatrixXd& Z, const MatrixXd& U, double nu);

/// Z-update: soft(Lambda + U, alpha / nu) on rows >= q, Lambda + U on rows < q.
MatrixXd admm_z_update(const MatrixXd& Lambda, const MatrixXd& U, double alpha, double nu,
                       Eigen::Index q);

/// Augmented Lagrangian sum_i Q_i + alpha ||Z||_1 + nu/2 ||Lambda - Z + U||_F^2
/// (constants dropped; rows < q carry no L1 term).
double admm_lagrangian(const LoadingsProblem& problem, const MatrixXd& Lambda, const MatrixXd& Z,
                       const MatrixXd& U, double alpha, double nu, Eigen::Index q);

/// L1-penalized loadings update. Without a warm state, Z starts at the
/// unpenalized solution and U at zero. Returns the final Z, which holds exact
/// zeros, together with the solver state.
std::pair<MatrixXd, AdmmState> admm_solve(const LoadingsProblem& problem, double alpha,
                                          Eigen::Index q, const AdmmState* warm = nullptr,
                                          const AdmmOptions& options = {});

}  // namespace sdfm
