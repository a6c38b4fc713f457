#pragma once

#include <optional>
#include <string_view>
#include <utility>
#include <vector>

#include "sparsedfm/admm.hpp"
#include "sparsedfm/kalman.hpp"
#include "sparsedfm/linalg.hpp"
#include "sparsedfm/panel.hpp"
#include "sparsedfm/statespace.hpp"

namespace sdfm {

enum class ErrorModel { kIID, kAR1 };

ErrorModel error_model_from_string(std::string_view name);
std::string_view to_string(ErrorModel err);

/// Complete second moments of the smoothed state. S[t] holds S_{t|n} for
/// t = 0..n (S[0] from the smoothed initial state); S_lag[t-1] holds
/// S_{t,t-1|n} for t = 1..n; row t-1 of `a` is a_{t|n}.
struct SmoothedMoments {
  std::vector<MatrixXd> S;
  std::vector<MatrixXd> S_lag;
  MatrixXd a;
  VectorXd a0;

  Eigen::Index n() const { return a.rows(); }
};

/// Moments of the state block [offset, offset + dim).
SmoothedMoments smoothed_moments(const KfsOutput& kfs, Eigen::Index offset, Eigen::Index dim);
SmoothedMoments smoothed_moments(const KfsOutput& kfs);

struct PcaResult {
  MatrixXd Lambda;       // p x r, Lambda^T Lambda / p = I
  MatrixXd F;            // n x r
  VectorXd eigenvalues;  // all eigenvalues of X^T X / n, descending
};

/// Principal components of a complete, centered panel. Each loading column
/// is signed so its largest-magnitude entry is positive.
PcaResult pca_estimate(const MatrixXd& X, Eigen::Index r);

/// Least-squares VAR(1) on the rows of F: returns (A, residual covariance).
std::pair<MatrixXd, MatrixXd> fit_var1(const MatrixXd& F);

/// PCA starting values for a standardized panel. Missing cells are imputed
/// with fill_na before the eigendecomposition.
struct InitialEstimate {
  DfmParams params;
  MatrixXd balanced;   // filled panel used for PCA
  MatrixXd factors;    // PCA factors
};
InitialEstimate initialize(const TimePanel& panel, Eigen::Index r);
DfmParams init_params(const TimePanel& panel, Eigen::Index r);

/// AR(1) starting values from the lag-1 autocorrelation of PCA residuals,
/// phi clipped to (-0.99, 0.99) and sigma_e = var * (1 - phi^2).
Ar1Params init_ar1(const InitialEstimate& init);

/// Â = (sum S_{t,t-1|n})(sum S_{t-1|n})^{-1}, Sigma_u = n^{-1} sum (S_{t|n} - Â S_{t,t-1|n}^T),
/// symmetrized with eigenvalues floored at 1e-10.
std::pair<MatrixXd, MatrixXd> m_step_transition(const SmoothedMoments& moments);

MatrixXd m_step_lambda_dense(const MatrixXd& X, const MaskMatrix& mask, const SmoothedMoments& moments);

/// Per variable: n^{-1} [sum over observed t of E(X_it - Lambda_i F_t)^2 + #missing * prev_i],
/// floored at 1e-8.
VectorXd m_step_sigma_eps(const MatrixXd& X, const MaskMatrix& mask, const SmoothedMoments& moments,
                          const MatrixXd& Lambda, const VectorXd& sigma_eps_prev);

struct ConvergenceCheck {
  double M = 0.0;
  bool converged = false;
};
ConvergenceCheck em_converged(double loglik_j, double loglik_jm1, double threshold);

struct EmLog {
  std::vector<double> logliks;
  std::vector<double> M;
  int iterations = 0;
  bool converged = false;
};

struct EmOptions {
  ErrorModel err = ErrorModel::kIID;
  KalmanEngine engine = KalmanEngine::kUnivariate;
  int max_iter = 100;
  double threshold = 1e-4;
};

struct SparsePenalty {
  double alpha = 0.0;
  Eigen::Index q = 0;
};

/// Everything EM carries between iterations, and between grid points of an
/// alpha sweep. For AR(1) errors the initial state covers the augmented
/// (r + p) system; `params.sigma_eps` then reports the implied marginal
/// idiosyncratic variance sigma_e / (1 - phi^2).
struct EmState {
  DfmParams params;
  std::optional<Ar1Params> ar1;
  VectorXd alpha0_state;
  MatrixXd P0_state;
  std::optional<AdmmState> admm;

  KfsInput kfs_input(const TimePanel& panel) const;
};

EmState initial_em_state(const TimePanel& panel, Eigen::Index r, ErrorModel err);

struct Estimate {
  EmState state;
  KfsOutput kfs;
  EmLog log;
};

/// Parameters from init_params, factors from one smoother pass.
Estimate two_stage(const TimePanel& panel, Eigen::Index r, KalmanEngine engine,
                   ErrorModel err = ErrorModel::kIID);

/// EM iterations until |M_j| < threshold or max_iter. With a penalty the
/// loadings update runs ADMM, warm-started from the previous iteration. The
/// returned smoother output belongs to the returned parameters.
Estimate em_fit(const TimePanel& panel, Eigen::Index r, const EmOptions& options,
                const std::optional<SparsePenalty>& penalty = std::nullopt,
                const EmState* warm = nullptr);

/// Observed-data log-likelihood of a fixed state under `state`.
double loglik_of(const TimePanel& panel, const EmState& state, KalmanEngine engine);

}  // namespace sdfm
