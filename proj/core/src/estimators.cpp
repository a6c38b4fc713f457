#include "sparsedfm/estimators.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "sparsedfm/error.hpp"

namespace sdfm {

namespace {

constexpr double kSigmaEpsFloor = 1e-8;
constexpr double kSigmaUFloor = 1e-10;
constexpr double kPhiClip = 0.99;

MatrixXd outer_plus(const VectorXd& a, const VectorXd& b, const MatrixXd& P) {
  return a * b.transpose() + P;
}

}  // namespace

ErrorModel error_model_from_string(std::string_view name) {
  if (name == "IID" || name == "iid") return ErrorModel::kIID;
  if (name == "AR1" || name == "ar1") return ErrorModel::kAR1;
  throw UsageError("unknown error model '" + std::string(name) + "' (IID|AR1)");
}

std::string_view to_string(ErrorModel err) { return err == ErrorModel::kIID ? "IID" : "AR1"; }

SmoothedMoments smoothed_moments(const KfsOutput& kfs, Eigen::Index offset, Eigen::Index dim) {
  const Eigen::Index n = kfs.a_smooth.rows();
  if (offset < 0 || dim < 1 || offset + dim > kfs.a_smooth.cols()) {
    throw UsageError("smoothed_moments: state block out of range");
  }
  SmoothedMoments mom;
  mom.a = kfs.a_smooth.middleCols(offset, dim);
  mom.a0 = kfs.a0_smooth.segment(offset, dim);
  mom.S.reserve(static_cast<std::size_t>(n + 1));
  mom.S_lag.reserve(static_cast<std::size_t>(n));
  mom.S.push_back(linalg::symmetrize(outer_plus(mom.a0, mom.a0, kfs.P0_smooth.block(offset, offset, dim, dim))));
  for (Eigen::Index t = 0; t < n; ++t) {
    const auto k = static_cast<std::size_t>(t);
    const VectorXd at = mom.a.row(t).transpose();
    const VectorXd prev = t == 0 ? mom.a0 : VectorXd(mom.a.row(t - 1).transpose());
    mom.S.push_back(linalg::symmetrize(outer_plus(at, at, kfs.P_smooth[k].block(offset, offset, dim, dim))));
    mom.S_lag.push_back(outer_plus(at, prev, kfs.P_lag_smooth[k].block(offset, offset, dim, dim)));
  }
  return mom;
}

SmoothedMoments smoothed_moments(const KfsOutput& kfs) {
  return smoothed_moments(kfs, 0, kfs.a_smooth.cols());
}

PcaResult pca_estimate(const MatrixXd& X, Eigen::Index r) {
  const Eigen::Index n = X.rows();
  const Eigen::Index p = X.cols();
  if (r < 1 || r >= std::min(n, p)) {
    throw UsageError("PCA: r must satisfy 1 <= r < min(n, p) (got r=" + std::to_string(r) + ")");
  }
  if (!X.allFinite()) throw DataError("PCA: panel must be complete");

  const MatrixXd cov = (X.transpose() * X) / static_cast<double>(n);
  const Eigen::SelfAdjointEigenSolver<MatrixXd> eig(cov);
  if (eig.info() != Eigen::Success) throw NumericalError("PCA: eigendecomposition failed");

  PcaResult out;
  out.eigenvalues = eig.eigenvalues().reverse();
  const MatrixXd vecs = eig.eigenvectors().rowwise().reverse();
  out.Lambda = std::sqrt(static_cast<double>(p)) * vecs.leftCols(r);
  for (Eigen::Index j = 0; j < r; ++j) {
    Eigen::Index arg = 0;
    out.Lambda.col(j).cwiseAbs().maxCoeff(&arg);
    if (out.Lambda(arg, j) < 0.0) out.Lambda.col(j) *= -1.0;
  }
  out.F = X * out.Lambda / static_cast<double>(p);
  return out;
}

std::pair<MatrixXd, MatrixXd> fit_var1(const MatrixXd& F) {
  const Eigen::Index n = F.rows();
  if (n < 3) throw DataError("VAR(1) needs at least 3 time points");
  const MatrixXd cur = F.bottomRows(n - 1);
  const MatrixXd lag = F.topRows(n - 1);
  const MatrixXd sxx = lag.transpose() * lag;
  const MatrixXd syx = cur.transpose() * lag;
  const MatrixXd A = syx * linalg::pseudo_inverse(sxx);
  const MatrixXd resid = cur - lag * A.transpose();
  const MatrixXd cov = resid.transpose() * resid / static_cast<double>(n - 1);
  return {A, linalg::symmetrize(cov)};
}

InitialEstimate initialize(const TimePanel& panel, Eigen::Index r) {
  panel.validate();
  const Eigen::Index p = panel.p();
  const BalancedPanel filled = fill_na(panel);
  PcaResult pca = pca_estimate(filled.values, r);

  InitialEstimate init;
  init.balanced = filled.values;
  init.factors = pca.F;

  DfmParams& par = init.params;
  par.Lambda = pca.Lambda;
  const MatrixXd resid = filled.values - pca.F * pca.Lambda.transpose();
  par.sigma_eps.resize(p);
  for (Eigen::Index i = 0; i < p; ++i) {
    double sum = 0.0;
    double sq = 0.0;
    Eigen::Index cnt = 0;
    for (Eigen::Index t = 0; t < panel.n(); ++t) {
      if (!panel.mask(t, i)) continue;
      sum += resid(t, i);
      sq += resid(t, i) * resid(t, i);
      ++cnt;
    }
    double var = 0.0;
    if (cnt > 1) {
      const double mean = sum / static_cast<double>(cnt);
      var = (sq - static_cast<double>(cnt) * mean * mean) / static_cast<double>(cnt - 1);
    }
    par.sigma_eps(i) = std::max(var, kSigmaEpsFloor);
  }

  auto [A, Su] = fit_var1(pca.F);
  par.A = linalg::stabilize(A);
  par.Sigma_u = linalg::floor_eigenvalues(Su, kSigmaUFloor);
  par.alpha0 = VectorXd::Zero(r);
  par.P0 = linalg::symmetrize(linalg::solve_discrete_lyapunov(par.A, par.Sigma_u));
  return init;
}

DfmParams init_params(const TimePanel& panel, Eigen::Index r) { return initialize(panel, r).params; }

Ar1Params init_ar1(const InitialEstimate& init) {
  const MatrixXd resid = init.balanced - init.factors * init.params.Lambda.transpose();
  const Eigen::Index n = resid.rows();
  const Eigen::Index p = resid.cols();
  Ar1Params ar1;
  ar1.phi.resize(p);
  ar1.sigma_e.resize(p);
  for (Eigen::Index i = 0; i < p; ++i) {
    const VectorXd e = resid.col(i).array() - resid.col(i).mean();
    const double denom = e.squaredNorm();
    double phi = 0.0;
    if (denom > 0.0) phi = e.tail(n - 1).dot(e.head(n - 1)) / denom;
    phi = std::clamp(phi, -kPhiClip, kPhiClip);
    const double var = denom / static_cast<double>(n);
    ar1.phi(i) = phi;
    ar1.sigma_e(i) = std::max(var * (1.0 - phi * phi), kSigmaEpsFloor);
  }
  return ar1;
}

std::pair<MatrixXd, MatrixXd> m_step_transition(const SmoothedMoments& mom) {
  const Eigen::Index n = mom.n();
  const Eigen::Index r = mom.a.cols();
  if (static_cast<Eigen::Index>(mom.S.size()) != n + 1 || static_cast<Eigen::Index>(mom.S_lag.size()) != n) {
    throw DataError("m_step_transition: moment list lengths do not match n");
  }
  MatrixXd s_lag = MatrixXd::Zero(r, r);
  MatrixXd s_prev = MatrixXd::Zero(r, r);
  MatrixXd s_cur = MatrixXd::Zero(r, r);
  for (Eigen::Index t = 1; t <= n; ++t) {
    const auto k = static_cast<std::size_t>(t);
    s_lag += mom.S_lag[k - 1];
    s_prev += mom.S[k - 1];
    s_cur += mom.S[k];
  }
  const Eigen::LDLT<MatrixXd> ldlt(s_prev);
  if (ldlt.info() != Eigen::Success || !ldlt.isPositive() ||
      ldlt.vectorD().minCoeff() <= 1e-14 * std::max(1.0, ldlt.vectorD().maxCoeff())) {
    throw NumericalError("m_step_transition: sum of lagged second moments is singular");
  }
  const MatrixXd A = ldlt.solve(s_lag.transpose()).transpose();
  MatrixXd Su = (s_cur - A * s_lag.transpose()) / static_cast<double>(n);
  return {A, linalg::floor_eigenvalues(Su, kSigmaUFloor)};
}

MatrixXd m_step_lambda_dense(const MatrixXd& X, const MaskMatrix& mask, const SmoothedMoments& moments) {
  return solve_dense_loadings(LoadingsProblem::build(X, mask, moments, VectorXd::Ones(X.cols())));
}

VectorXd m_step_sigma_eps(const MatrixXd& X, const MaskMatrix& mask, const SmoothedMoments& mom,
                          const MatrixXd& Lambda, const VectorXd& prev) {
  const Eigen::Index n = X.rows();
  const Eigen::Index p = X.cols();
  if (Lambda.rows() != p || prev.size() != p || mom.n() != n) throw DataError("m_step_sigma_eps: shape mismatch");
  VectorXd out(p);
  for (Eigen::Index i = 0; i < p; ++i) {
    const VectorXd l = Lambda.row(i).transpose();
    double acc = 0.0;
    for (Eigen::Index t = 0; t < n; ++t) {
      if (mask(t, i)) {
        const double x = X(t, i);
        acc += x * x - 2.0 * x * mom.a.row(t).dot(l) + l.dot(mom.S[static_cast<std::size_t>(t + 1)] * l);
      } else {
        acc += prev(i);
      }
    }
    out(i) = std::max(acc / static_cast<double>(n), kSigmaEpsFloor);
  }
  return out;
}

ConvergenceCheck em_converged(double ll_j, double ll_jm1, double threshold) {
  if (!std::isfinite(ll_j) || !std::isfinite(ll_jm1)) throw NumericalError("em_converged: non-finite log-likelihood");
  const double denom = 0.5 * (ll_j + ll_jm1);
  if (denom == 0.0) return {0.0, true};
  const double M = (ll_j - ll_jm1) / denom;
  return {M, std::abs(M) < threshold};
}

KfsInput EmState::kfs_input(const TimePanel& panel) const {
  if (!ar1) {
    return KfsInput{panel.values, panel.mask, params.Lambda, params.A,
                    params.Sigma_u, params.sigma_eps, alpha0_state, P0_state};
  }
  AugmentedSystem sys = build_ar1_augmented(params, *ar1);
  sys.alpha0_aug = alpha0_state;
  sys.P0_aug = P0_state;
  return KfsInput::from_augmented(panel, sys);
}

EmState initial_em_state(const TimePanel& panel, Eigen::Index r, ErrorModel err) {
  InitialEstimate init = initialize(panel, r);
  EmState st;
  st.params = init.params;
  if (err == ErrorModel::kIID) {
    st.alpha0_state = st.params.alpha0;
    st.P0_state = st.params.P0;
    return st;
  }
  st.ar1 = init_ar1(init);
  st.params.sigma_eps = (st.ar1->sigma_e.array() / (1.0 - st.ar1->phi.array().square())).matrix();
  const AugmentedSystem sys = build_ar1_augmented(st.params, *st.ar1);
  st.alpha0_state = sys.alpha0_aug;
  st.P0_state = sys.P0_aug;
  return st;
}

namespace {

// Loadings problem for the augmented model: the observation is
// X_t = Lambda F_t + eps_t + N(0, kappa), so the regression target for row i
// is X_it - E[eps_it | all data] with the cross moment E[eps_it F_t].
LoadingsProblem ar1_loadings_problem(const TimePanel& panel, const KfsOutput& kfs,
                                     const SmoothedMoments& fmom, double kappa) {
  const Eigen::Index n = panel.n();
  const Eigen::Index p = panel.p();
  const Eigen::Index r = fmom.a.cols();
  LoadingsProblem prob = LoadingsProblem::build(panel.values, panel.mask, fmom, VectorXd::Constant(p, kappa));
  for (Eigen::Index i = 0; i < p; ++i) {
    for (Eigen::Index t = 0; t < n; ++t) {
      if (!panel.mask(t, i)) continue;
      const double e = kfs.a_smooth(t, r + i);
      prob.rhs.row(i) -= e * fmom.a.row(t) + kfs.P_smooth[static_cast<std::size_t>(t)].block(0, r + i, r, 1).transpose();
    }
  }
  return prob;
}

void m_step_ar1_block(const KfsOutput& kfs, Eigen::Index r, Ar1Params& ar1) {
  const Eigen::Index n = kfs.a_smooth.rows();
  const Eigen::Index p = ar1.phi.size();
  for (Eigen::Index i = 0; i < p; ++i) {
    const Eigen::Index k = r + i;
    double s11 = 0.0;
    double s00 = kfs.a0_smooth(k) * kfs.a0_smooth(k) + kfs.P0_smooth(k, k);
    double s10 = 0.0;
    for (Eigen::Index t = 0; t < n; ++t) {
      const auto u = static_cast<std::size_t>(t);
      const double at = kfs.a_smooth(t, k);
      const double prev = t == 0 ? kfs.a0_smooth(k) : kfs.a_smooth(t - 1, k);
      const double s_t = at * at + kfs.P_smooth[u](k, k);
      s11 += s_t;
      if (t + 1 < n) s00 += s_t;
      s10 += at * prev + kfs.P_lag_smooth[u](k, k);
    }
    const double phi = s00 > 0.0 ? std::clamp(s10 / s00, -kPhiClip, kPhiClip) : 0.0;
    const double se = (s11 - 2.0 * phi * s10 + phi * phi * s00) / static_cast<double>(n);
    ar1.phi(i) = phi;
    ar1.sigma_e(i) = std::max(se, kSigmaEpsFloor);
  }
}

MatrixXd update_loadings(const LoadingsProblem& problem, EmState& state,
                         const std::optional<SparsePenalty>& penalty) {
  if (!penalty) return solve_dense_loadings(problem);
  const AdmmState* warm = state.admm ? &*state.admm : nullptr;
  auto [Lambda, admm] = admm_solve(problem, penalty->alpha, penalty->q, warm);
  state.admm = std::move(admm);
  return Lambda;
}

EmState m_step(const TimePanel& panel, const EmState& prev, const KfsOutput& kfs,
               const std::optional<SparsePenalty>& penalty) {
  const Eigen::Index r = prev.params.r();
  EmState next = prev;
  const SmoothedMoments fmom = smoothed_moments(kfs, 0, r);

  auto [A, Su] = m_step_transition(fmom);
  if (linalg::spectral_norm(A) >= 1.0) {
    // Shrunk A is no longer the argmin; use the general residual covariance.
    A = linalg::stabilize(A);
    MatrixXd acc = MatrixXd::Zero(r, r);
    for (Eigen::Index t = 1; t <= fmom.n(); ++t) {
      const auto k = static_cast<std::size_t>(t);
      acc += fmom.S[k] - A * fmom.S_lag[k - 1].transpose() - fmom.S_lag[k - 1] * A.transpose() +
             A * fmom.S[k - 1] * A.transpose();
    }
    Su = linalg::floor_eigenvalues(acc / static_cast<double>(fmom.n()), kSigmaUFloor);
  }
  next.params.A = A;
  next.params.Sigma_u = Su;

  if (!prev.ar1) {
    const LoadingsProblem problem =
        LoadingsProblem::build(panel.values, panel.mask, fmom, prev.params.sigma_eps);
    next.params.Lambda = update_loadings(problem, next, penalty);
    next.params.sigma_eps =
        m_step_sigma_eps(panel.values, panel.mask, fmom, next.params.Lambda, prev.params.sigma_eps);
  } else {
    const LoadingsProblem problem = ar1_loadings_problem(panel, kfs, fmom, prev.ar1->kappa);
    next.params.Lambda = update_loadings(problem, next, penalty);
    m_step_ar1_block(kfs, r, *next.ar1);
    next.params.sigma_eps = (next.ar1->sigma_e.array() / (1.0 - next.ar1->phi.array().square())).matrix();
  }

  next.alpha0_state = kfs.a0_smooth;
  next.P0_state = linalg::floor_eigenvalues(kfs.P0_smooth, 0.0);
  next.params.alpha0 = next.alpha0_state.head(r);
  next.params.P0 = next.P0_state.topLeftCorner(r, r);
  return next;
}

}  // namespace

double loglik_of(const TimePanel& panel, const EmState& state, KalmanEngine engine) {
  return run_kalman(state.kfs_input(panel), engine).loglik;
}

Estimate two_stage(const TimePanel& panel, Eigen::Index r, KalmanEngine engine, ErrorModel err) {
  Estimate est;
  est.state = initial_em_state(panel, r, err);
  est.kfs = run_kalman(est.state.kfs_input(panel), engine);
  est.log.logliks.push_back(est.kfs.loglik);
  return est;
}

Estimate em_fit(const TimePanel& panel, Eigen::Index r, const EmOptions& options,
                const std::optional<SparsePenalty>& penalty, const EmState* warm) {
  if (options.max_iter < 1) throw UsageError("max_iter must be >= 1");
  if (!(options.threshold > 0.0)) throw UsageError("threshold must be positive");
  if (penalty && !(penalty->alpha >= 0.0)) throw UsageError("alpha must be nonnegative");

  Estimate est;
  if (warm != nullptr) {
    if (warm->params.r() != r || warm->params.p() != panel.p()) throw UsageError("em_fit: warm state has wrong shape");
    if (static_cast<bool>(warm->ar1) != (options.err == ErrorModel::kAR1)) {
      throw UsageError("em_fit: warm state has a different error model");
    }
    est.state = *warm;
  } else {
    est.state = initial_em_state(panel, r, options.err);
  }

  est.kfs = run_kalman(est.state.kfs_input(panel), options.engine);
  if (!std::isfinite(est.kfs.loglik)) throw NumericalError("non-finite log-likelihood at EM iteration 0");
  est.log.logliks.push_back(est.kfs.loglik);

  for (int it = 1; it <= options.max_iter; ++it) {
    EmState next = m_step(panel, est.state, est.kfs, penalty);
    KfsOutput kfs = run_kalman(next.kfs_input(panel), options.engine);
    if (!std::isfinite(kfs.loglik)) {
      throw NumericalError("non-finite log-likelihood at EM iteration " + std::to_string(it));
    }
    const ConvergenceCheck check = em_converged(kfs.loglik, est.log.logliks.back(), options.threshold);
    est.state = std::move(next);
    est.kfs = std::move(kfs);
    est.log.logliks.push_back(est.kfs.loglik);
    est.log.M.push_back(check.M);
    est.log.iterations = it;
    if (check.converged) {
      est.log.converged = true;
      break;
    }
  }
  return est;
}

}  // namespace sdfm
