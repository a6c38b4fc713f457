#pragma once

#include <string_view>
#include <vector>

#include "sparsedfm/linalg.hpp"
#include "sparsedfm/panel.hpp"
#include "sparsedfm/statespace.hpp"

namespace sdfm {

enum class KalmanEngine { kMultivariate, kUnivariate };

KalmanEngine kalman_engine_from_string(std::string_view name);
std::string_view to_string(KalmanEngine engine);

/// Inputs for a filter/smoother pass over a linear Gaussian state space with
/// diagonal measurement covariance. m is the state dimension (r for IID
/// errors, r + p for the AR(1) augmentation).
struct KfsInput {
  MatrixXd X;          // n x p, NaN where missing
  MaskMatrix mask;     // n x p, true = observed
  MatrixXd Lambda;     // p x m
  MatrixXd A;          // m x m
  MatrixXd Sigma_u;    // m x m
  VectorXd sigma_eps;  // p measurement variances
  VectorXd alpha0;     // m
  MatrixXd P0;         // m x m

  static KfsInput from_params(const TimePanel& panel, const DfmParams& params);
  static KfsInput from_augmented(const TimePanel& panel, const AugmentedSystem& sys);

  void validate() const;
};

/// Row t of each n x m matrix and element t of each covariance list refer to
/// time t + 1; the time-0 smoothed state is kept separately.
struct KfsOutput {
  MatrixXd a_pred;                    // a_{t|t-1}
  std::vector<MatrixXd> P_pred;       // P_{t|t-1}
  MatrixXd a_filt;                    // a_{t|t}
  std::vector<MatrixXd> P_filt;       // P_{t|t}
  MatrixXd a_smooth;                  // a_{t|n}
  std::vector<MatrixXd> P_smooth;     // P_{t|n}
  std::vector<MatrixXd> P_lag_smooth; // P_{t,t-1|n}
  VectorXd a0_smooth;                 // a_{0|n}
  MatrixXd P0_smooth;                 // P_{0|n}
  double loglik = 0.0;
};

/// Classic multivariate filter and smoother. Missing rows are deleted before
/// forming the innovation; C_t^{-1} goes through the Woodbury identity when
/// the state is smaller than the observed count, and the lagged smoothed
/// covariance uses the backward recursion started at (I - K_n Lambda) A P_{n-1|n-1}.
KfsOutput kalman_multivariate(const KfsInput& input);

/// Sequential (one observation at a time) filter and smoother. Requires the
/// diagonal measurement covariance already implied by `sigma_eps`. The lagged
/// smoothed covariance comes from P_{t|n} P_{t|t-1}^{-1} A P_{t-1|t-1}, with a
/// pseudo-inverse (singular values below 1e-12 sigma_max dropped) if
/// P_{t|t-1} is singular.
KfsOutput kalman_univariate(const KfsInput& input);

KfsOutput run_kalman(const KfsInput& input, KalmanEngine engine);

/// C^{-1} for C = Lambda P Lambda^T + diag(sigma_eps), via Woodbury:
/// S^{-1} - S^{-1} Lambda (P^{-1} + Lambda^T S^{-1} Lambda)^{-1} Lambda^T S^{-1}.
MatrixXd woodbury_inverse(const MatrixXd& Lambda, const VectorXd& sigma_eps, const MatrixXd& P);

/// log|C| = log|diag(sigma_eps)| + log|P| + log|P^{-1} + Lambda^T S^{-1} Lambda|.
double innovation_log_det(const MatrixXd& Lambda, const VectorXd& sigma_eps, const MatrixXd& P);

}  // namespace sdfm
