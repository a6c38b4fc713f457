#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "sparsedfm/estimators.hpp"
#include "sparsedfm/kalman.hpp"
#include "sparsedfm/panel.hpp"
#include "sparsedfm/tuning.hpp"

namespace sdfm {

enum class Algorithm { kPCA, kTwoStage, kEM, kEMSparse };

Algorithm algorithm_from_string(std::string_view name);
std::string_view to_string(Algorithm alg);

struct FitConfig {
  Eigen::Index r = 0;  // required
  Eigen::Index q = 0;
  std::vector<double> alphas = logspace(-2.0, 3.0, 100);
  Algorithm alg = Algorithm::kEMSparse;
  ErrorModel err = ErrorModel::kIID;
  // Unset means univariate for IID errors and multivariate for AR(1).
  std::optional<KalmanEngine> engine;
  bool store_all_alphas = false;
  bool standardize = true;
  int max_iter = 100;
  double threshold = 1e-4;

  KalmanEngine effective_engine() const;
  void validate(Eigen::Index n, Eigen::Index p) const;
};

struct StoredAlphaFit {
  double alpha = 0.0;
  DfmParams params;
  std::optional<Ar1Params> ar1;
  MatrixXd factors;
  EmLog em_log;
};

struct FitResult {
  FitConfig config;
  DfmParams params;  // A, Sigma_u, alpha0, P0 are empty for PCA
  std::optional<Ar1Params> ar1;
  MatrixXd factors;                    // n x r smoothed means (PCA: principal components)
  std::vector<MatrixXd> factor_cov;    // P_{t|n}, factor block; empty for PCA
  VectorXd state_last;                 // a_{n|n}, full state
  MatrixXd state_last_cov;             // P_{n|n}, full state
  double loglik = 0.0;
  TimePanel data;                      // the panel the model was fitted to (standardized scale)
  Standardizer scaler;
  MatrixXd fitted_scaled;              // Lambda a_{t|n}
  MatrixXd fitted_unscaled;
  MatrixXd residuals;                  // standardized scale, NaN where missing
  EmLog em_log;
  std::optional<AlphaPath> alpha_path;
  std::vector<StoredAlphaFit> alpha_fits;
  std::optional<EmState> state;        // parameters for refiltering; unset for PCA
  std::vector<std::string> warnings;

  bool dynamic() const { return state.has_value(); }
};

FitResult sparse_dfm_fit(const TimePanel& X, const FitConfig& config);

/// Runs the smoother on `X` with parameters held fixed. The panel is scaled
/// with `scaler` when given, otherwise as `config.standardize` says.
FitResult filter_with(const TimePanel& X, const FitConfig& config, const EmState& state,
                      const std::optional<Standardizer>& scaler = std::nullopt);

struct Forecast {
  MatrixXd factors;                 // h x r
  std::vector<MatrixXd> factor_cov; // h of r x r
  MatrixXd series_scaled;           // h x p
  MatrixXd series;                  // h x p, original units
};

/// a_{n+k|n} = A^k a_{n|n} with Riccati covariances. For AR(1) fits the
/// idiosyncratic state is propagated as phi^k eps_{n|n} and included in the
/// series forecasts.
Forecast predict_h(const FitResult& fit, int h);

const MatrixXd& residuals(const FitResult& fit);
const MatrixXd& fitted(const FitResult& fit);

}  // namespace sdfm
