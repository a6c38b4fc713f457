#include "sparsedfm/model.hpp"

#include <cmath>
#include <limits>
#include <string>

#include "sparsedfm/error.hpp"

namespace sdfm {

Algorithm algorithm_from_string(std::string_view name) {
  if (name == "PCA") return Algorithm::kPCA;
  if (name == "2Stage") return Algorithm::kTwoStage;
  if (name == "EM") return Algorithm::kEM;
  if (name == "EM-sparse") return Algorithm::kEMSparse;
  throw UsageError("unknown algorithm '" + std::string(name) + "' (PCA|2Stage|EM|EM-sparse)");
}

std::string_view to_string(Algorithm alg) {
  switch (alg) {
    case Algorithm::kPCA: return "PCA";
    case Algorithm::kTwoStage: return "2Stage";
    case Algorithm::kEM: return "EM";
    case Algorithm::kEMSparse: return "EM-sparse";
  }
  return "?";
}

KalmanEngine FitConfig::effective_engine() const {
  if (engine) return *engine;
  return err == ErrorModel::kAR1 ? KalmanEngine::kMultivariate : KalmanEngine::kUnivariate;
}

void FitConfig::validate(Eigen::Index n, Eigen::Index p) const {
  if (r < 1) throw UsageError("r must be >= 1");
  if (r >= std::min(n, p)) {
    throw UsageError("r must be < min(n, p) = " + std::to_string(std::min(n, p)));
  }
  if (q < 0 || q > p) throw UsageError("q must lie in [0, p]");
  if (max_iter < 1) throw UsageError("max_iter must be >= 1");
  if (!(threshold > 0.0)) throw UsageError("threshold must be positive");
  if (alg == Algorithm::kEMSparse) {
    if (alphas.empty()) throw UsageError("EM-sparse needs at least one alpha");
    for (double a : alphas) {
      if (!(a >= 0.0) || !std::isfinite(a)) throw UsageError("alphas must be finite and nonnegative");
    }
  }
  if (alg == Algorithm::kPCA && err == ErrorModel::kAR1) {
    throw UsageError("AR1 errors need a dynamic algorithm (2Stage, EM or EM-sparse)");
  }
}

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

void fill_outputs(FitResult& res) {
  const Eigen::Index n = res.data.n();
  const Eigen::Index p = res.data.p();
  res.fitted_scaled = res.factors * res.params.Lambda.transpose();
  res.fitted_unscaled = res.scaler.unscale(res.fitted_scaled);
  res.residuals = MatrixXd::Constant(n, p, kNaN);
  for (Eigen::Index i = 0; i < p; ++i) {
    for (Eigen::Index t = 0; t < n; ++t) {
      if (res.data.mask(t, i)) res.residuals(t, i) = res.data.values(t, i) - res.fitted_scaled(t, i);
    }
  }
}

void from_estimate(FitResult& res, const Estimate& est) {
  const Eigen::Index r = est.state.params.r();
  const Eigen::Index n = est.kfs.a_smooth.rows();
  res.params = est.state.params;
  res.ar1 = est.state.ar1;
  res.factors = est.kfs.a_smooth.leftCols(r);
  res.factor_cov.clear();
  res.factor_cov.reserve(static_cast<std::size_t>(n));
  for (const MatrixXd& P : est.kfs.P_smooth) res.factor_cov.push_back(P.topLeftCorner(r, r));
  res.state_last = est.kfs.a_filt.row(n - 1).transpose();
  res.state_last_cov = est.kfs.P_filt.back();
  res.loglik = est.kfs.loglik;
  res.em_log = est.log;
  res.state = est.state;
  res.state->admm.reset();
}

std::pair<TimePanel, Standardizer> prepare(const TimePanel& X, bool scale) {
  if (scale) return standardize(X);
  return {X, Standardizer::identity(X.p())};
}

}  // namespace

FitResult sparse_dfm_fit(const TimePanel& X, const FitConfig& config) {
  X.validate();
  config.validate(X.n(), X.p());

  FitResult res;
  res.config = config;
  auto [data, scaler] = prepare(X, config.standardize);
  res.data = std::move(data);
  res.scaler = std::move(scaler);

  const KalmanEngine engine = config.effective_engine();
  if (config.err == ErrorModel::kAR1 && engine == KalmanEngine::kUnivariate) {
    res.warnings.emplace_back("AR1 errors with the univariate engine are slow; consider --kalman multivariate");
  }

  switch (config.alg) {
    case Algorithm::kPCA: {
      const InitialEstimate init = initialize(res.data, config.r);
      res.params.Lambda = init.params.Lambda;
      res.params.sigma_eps = init.params.sigma_eps;
      res.factors = init.factors;
      break;
    }
    case Algorithm::kTwoStage:
      from_estimate(res, two_stage(res.data, config.r, engine, config.err));
      break;
    case Algorithm::kEM: {
      const EmOptions opts{config.err, engine, config.max_iter, config.threshold};
      from_estimate(res, em_fit(res.data, config.r, opts));
      break;
    }
    case Algorithm::kEMSparse: {
      const EmOptions opts{config.err, engine, config.max_iter, config.threshold};
      AlphaSearch search =
          alpha_grid_search(res.data, config.r, config.alphas, config.q, opts, config.store_all_alphas);
      from_estimate(res, search.best);
      res.alpha_path = std::move(search.path);
      for (std::size_t k = 0; k < search.stored.size(); ++k) {
        const Estimate& e = search.stored[k];
        res.alpha_fits.push_back(StoredAlphaFit{res.alpha_path->points[k].alpha, e.state.params, e.state.ar1,
                                                e.kfs.a_smooth.leftCols(config.r), e.log});
      }
      break;
    }
  }
  fill_outputs(res);
  return res;
}

FitResult filter_with(const TimePanel& X, const FitConfig& config, const EmState& state,
                      const std::optional<Standardizer>& scaler) {
  X.validate();
  if (state.params.p() != X.p()) throw DataError("filter_with: parameter and panel widths differ");
  FitResult res;
  res.config = config;
  if (scaler) {
    res.scaler = *scaler;
    res.data = X;
    const MatrixXd scaled = scaler->scale(X.values);
    for (Eigen::Index i = 0; i < X.p(); ++i) {
      for (Eigen::Index t = 0; t < X.n(); ++t) res.data.values(t, i) = X.mask(t, i) ? scaled(t, i) : kNaN;
    }
  } else {
    auto [data, sc] = prepare(X, config.standardize);
    res.data = std::move(data);
    res.scaler = std::move(sc);
  }
  Estimate est;
  est.state = state;
  est.kfs = run_kalman(state.kfs_input(res.data), config.effective_engine());
  est.log.logliks.push_back(est.kfs.loglik);
  from_estimate(res, est);
  fill_outputs(res);
  return res;
}

Forecast predict_h(const FitResult& fit, int h) {
  if (h < 1) throw UsageError("forecast horizon must be >= 1");
  if (!fit.dynamic()) throw UsageError("PCA fits have no transition matrix; refit with --alg 2Stage, EM or EM-sparse");
  const EmState& st = *fit.state;
  const KfsInput sys = st.kfs_input(fit.data);
  const Eigen::Index r = st.params.r();
  const Eigen::Index p = st.params.p();

  Forecast fc;
  fc.factors.resize(h, r);
  fc.series_scaled.resize(h, p);
  VectorXd a = fit.state_last;
  MatrixXd P = fit.state_last_cov;
  for (int k = 0; k < h; ++k) {
    a = sys.A * a;
    P = linalg::symmetrize(sys.A * P * sys.A.transpose() + sys.Sigma_u);
    fc.factors.row(k) = a.head(r).transpose();
    fc.factor_cov.push_back(P.topLeftCorner(r, r));
    fc.series_scaled.row(k) = (sys.Lambda * a).transpose();
  }
  fc.series = fit.scaler.unscale(fc.series_scaled);
  return fc;
}

const MatrixXd& residuals(const FitResult& fit) { return fit.residuals; }
const MatrixXd& fitted(const FitResult& fit) { return fit.fitted_unscaled; }

}  // namespace sdfm
