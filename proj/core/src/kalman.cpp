#include "sparsedfm/kalman.hpp"

#include <cmath>
#include <numbers>
#include <string>

#include "sparsedfm/error.hpp"

namespace sdfm {

namespace {

const double kLog2Pi = std::log(2.0 * std::numbers::pi);

double log_det_spd(const Eigen::LLT<MatrixXd>& llt) {
  return 2.0 * llt.matrixL().toDenseMatrix().diagonal().array().log().sum();
}

// Solves P X = B for symmetric PSD P; pseudo-inverse fallback when P is
// singular or the Cholesky factorization fails.
MatrixXd spd_solve(const MatrixXd& P, const MatrixXd& B) {
  Eigen::LLT<MatrixXd> llt(P);
  if (llt.info() == Eigen::Success) {
    MatrixXd x = llt.solve(B);
    if (x.allFinite()) return x;
  }
  return linalg::pseudo_inverse(P, 1e-12) * B;
}

void check_finite(double loglik, const VectorXd& a, Eigen::Index t) {
  if (!std::isfinite(loglik) || !a.allFinite()) {
    throw NumericalError("non-finite Kalman filter state at t = " + std::to_string(t + 1) +
                         " (predicted covariance numerically singular?)");
  }
}

std::vector<Eigen::Index> observed_rows(const MaskMatrix& mask, Eigen::Index t) {
  std::vector<Eigen::Index> idx;
  for (Eigen::Index i = 0; i < mask.cols(); ++i) {
    if (mask(t, i)) idx.push_back(i);
  }
  return idx;
}

KfsOutput allocate(Eigen::Index n, Eigen::Index m) {
  KfsOutput out;
  out.a_pred.resize(n, m);
  out.a_filt.resize(n, m);
  out.a_smooth.resize(n, m);
  out.P_pred.resize(static_cast<std::size_t>(n));
  out.P_filt.resize(static_cast<std::size_t>(n));
  out.P_smooth.resize(static_cast<std::size_t>(n));
  out.P_lag_smooth.resize(static_cast<std::size_t>(n));
  return out;
}

}  // namespace

KalmanEngine kalman_engine_from_string(std::string_view name) {
  if (name == "multivariate") return KalmanEngine::kMultivariate;
  if (name == "univariate") return KalmanEngine::kUnivariate;
  throw UsageError("unknown Kalman engine '" + std::string(name) + "' (multivariate|univariate)");
}

std::string_view to_string(KalmanEngine engine) {
  return engine == KalmanEngine::kMultivariate ? "multivariate" : "univariate";
}

KfsInput KfsInput::from_params(const TimePanel& panel, const DfmParams& params) {
  return KfsInput{panel.values, panel.mask, params.Lambda,  params.A,
                  params.Sigma_u, params.sigma_eps, params.alpha0, params.P0};
}

KfsInput KfsInput::from_augmented(const TimePanel& panel, const AugmentedSystem& sys) {
  return KfsInput{panel.values, panel.mask, sys.Lambda_aug, sys.A_aug,
                  sys.Sigma_u_aug, sys.sigma_meas, sys.alpha0_aug, sys.P0_aug};
}

void KfsInput::validate() const {
  const Eigen::Index p = X.cols();
  const Eigen::Index m = A.rows();
  if (mask.rows() != X.rows() || mask.cols() != p) throw DataError("KfsInput: mask shape mismatch");
  if (Lambda.rows() != p || Lambda.cols() != m) throw DataError("KfsInput: Lambda must be p x m");
  if (A.cols() != m || Sigma_u.rows() != m || Sigma_u.cols() != m) throw DataError("KfsInput: A/Sigma_u must be m x m");
  if (P0.rows() != m || P0.cols() != m || alpha0.size() != m) throw DataError("KfsInput: initial state shape mismatch");
  if (sigma_eps.size() != p) throw DataError("KfsInput: sigma_eps must have length p");
  if (!(sigma_eps.array() > 0.0).all()) throw UsageError("KfsInput: sigma_eps must be positive");
}

MatrixXd woodbury_inverse(const MatrixXd& Lambda, const VectorXd& sigma_eps, const MatrixXd& P) {
  const VectorXd s_inv = sigma_eps.cwiseInverse();
  const MatrixXd sl = s_inv.asDiagonal() * Lambda;  // S^{-1} Lambda
  const MatrixXd inner = linalg::spd_inverse(P) + Lambda.transpose() * sl;
  const Eigen::LLT<MatrixXd> llt(inner);
  MatrixXd c_inv = -sl * llt.solve(sl.transpose());
  c_inv.diagonal() += s_inv;
  return linalg::symmetrize(c_inv);
}

double innovation_log_det(const MatrixXd& Lambda, const VectorXd& sigma_eps, const MatrixXd& P) {
  const Eigen::LLT<MatrixXd> p_llt(P);
  const MatrixXd inner =
      linalg::spd_inverse(P) + Lambda.transpose() * sigma_eps.cwiseInverse().asDiagonal() * Lambda;
  const Eigen::LLT<MatrixXd> inner_llt(inner);
  return sigma_eps.array().log().sum() + log_det_spd(p_llt) + log_det_spd(inner_llt);
}

// ---------------------------------------------------------------------------

KfsOutput kalman_multivariate(const KfsInput& in) {
  in.validate();
  const Eigen::Index n = in.X.rows();
  const Eigen::Index m = in.A.rows();
  const MatrixXd I = MatrixXd::Identity(m, m);

  KfsOutput out = allocate(n, m);
  MatrixXd last_KL = MatrixXd::Zero(m, m);

  VectorXd a_prev = in.alpha0;
  MatrixXd P_prev = in.P0;
  double loglik = 0.0;

  for (Eigen::Index t = 0; t < n; ++t) {
    const VectorXd a_pred = in.A * a_prev;
    const MatrixXd P_pred = linalg::symmetrize(in.A * P_prev * in.A.transpose() + in.Sigma_u);
    out.a_pred.row(t) = a_pred.transpose();
    out.P_pred[static_cast<std::size_t>(t)] = P_pred;

    const auto obs = observed_rows(in.mask, t);
    const auto pt = static_cast<Eigen::Index>(obs.size());
    VectorXd a_filt = a_pred;
    MatrixXd P_filt = P_pred;
    MatrixXd KL = MatrixXd::Zero(m, m);

    if (pt > 0) {
      MatrixXd lam(pt, m);
      VectorXd x(pt), s(pt);
      for (Eigen::Index k = 0; k < pt; ++k) {
        const Eigen::Index i = obs[static_cast<std::size_t>(k)];
        lam.row(k) = in.Lambda.row(i);
        x(k) = in.X(t, i);
        s(k) = in.sigma_eps(i);
      }
      const VectorXd v = x - lam * a_pred;
      const MatrixXd lp = lam * P_pred;  // pt x m

      MatrixXd c_inv;
      double log_det = 0.0;
      bool done = false;
      if (m < pt) {
        const Eigen::LLT<MatrixXd> p_llt(P_pred);
        if (p_llt.info() == Eigen::Success) {
          const VectorXd s_inv = s.cwiseInverse();
          const MatrixXd sl = s_inv.asDiagonal() * lam;
          const MatrixXd inner = p_llt.solve(I) + lam.transpose() * sl;
          const Eigen::LLT<MatrixXd> inner_llt(inner);
          if (inner_llt.info() == Eigen::Success) {
            c_inv = -sl * inner_llt.solve(sl.transpose());
            c_inv.diagonal() += s_inv;
            log_det = s.array().log().sum() + log_det_spd(p_llt) + log_det_spd(inner_llt);
            done = true;
          }
        }
      }
      if (!done) {
        MatrixXd C = lp * lam.transpose();
        C.diagonal() += s;
        const Eigen::LLT<MatrixXd> c_llt(linalg::symmetrize(C));
        if (c_llt.info() != Eigen::Success) {
          throw NumericalError("innovation covariance not positive definite at t = " + std::to_string(t + 1));
        }
        c_inv = c_llt.solve(MatrixXd::Identity(pt, pt));
        log_det = log_det_spd(c_llt);
      }

      const MatrixXd K = lp.transpose() * c_inv;  // m x pt
      a_filt = a_pred + K * v;
      P_filt = linalg::symmetrize(P_pred - K * lp);
      KL = K * lam;
      loglik -= 0.5 * (static_cast<double>(pt) * kLog2Pi + log_det + v.dot(c_inv * v));
    }
    check_finite(loglik, a_filt, t);
    out.a_filt.row(t) = a_filt.transpose();
    out.P_filt[static_cast<std::size_t>(t)] = P_filt;
    if (t == n - 1) last_KL = KL;
    a_prev = a_filt;
    P_prev = P_filt;
  }
  out.loglik = loglik;

  // Backward pass. J[t] is the smoother gain J_t for t = 0..n-1 (time index).
  std::vector<MatrixXd> J(static_cast<std::size_t>(n));
  auto filt_cov = [&](Eigen::Index time) -> const MatrixXd& {
    return time == 0 ? in.P0 : out.P_filt[static_cast<std::size_t>(time - 1)];
  };
  auto filt_mean = [&](Eigen::Index time) -> VectorXd {
    return time == 0 ? in.alpha0 : VectorXd(out.a_filt.row(time - 1).transpose());
  };

  out.a_smooth.row(n - 1) = out.a_filt.row(n - 1);
  out.P_smooth[static_cast<std::size_t>(n - 1)] = out.P_filt[static_cast<std::size_t>(n - 1)];
  for (Eigen::Index time = n; time >= 1; --time) {
    const MatrixXd& Pf = filt_cov(time - 1);
    const MatrixXd& Pp = out.P_pred[static_cast<std::size_t>(time - 1)];
    const MatrixXd Jt = spd_solve(Pp, in.A * Pf).transpose();
    J[static_cast<std::size_t>(time - 1)] = Jt;

    const VectorXd as = out.a_smooth.row(time - 1).transpose();
    const VectorXd ap = out.a_pred.row(time - 1).transpose();
    const VectorXd a_s = filt_mean(time - 1) + Jt * (as - ap);
    const MatrixXd P_s = linalg::symmetrize(
        Pf + Jt * (out.P_smooth[static_cast<std::size_t>(time - 1)] - Pp) * Jt.transpose());
    if (time - 1 == 0) {
      out.a0_smooth = a_s;
      out.P0_smooth = P_s;
    } else {
      out.a_smooth.row(time - 2) = a_s.transpose();
      out.P_smooth[static_cast<std::size_t>(time - 2)] = P_s;
    }
  }

  // Lagged covariances, P_lag_smooth[t-1] = P_{t,t-1|n}.
  out.P_lag_smooth[static_cast<std::size_t>(n - 1)] = (I - last_KL) * in.A * filt_cov(n - 1);
  for (Eigen::Index time = n; time >= 2; --time) {
    const MatrixXd& Pf = filt_cov(time - 1);
    const MatrixXd& J1 = J[static_cast<std::size_t>(time - 1)];
    const MatrixXd& J2 = J[static_cast<std::size_t>(time - 2)];
    out.P_lag_smooth[static_cast<std::size_t>(time - 2)] =
        Pf * J2.transpose() +
        J1 * (out.P_lag_smooth[static_cast<std::size_t>(time - 1)] - in.A * Pf) * J2.transpose();
  }
  return out;
}

// ---------------------------------------------------------------------------

KfsOutput kalman_univariate(const KfsInput& in) {
  in.validate();
  const Eigen::Index n = in.X.rows();
  const Eigen::Index p = in.X.cols();
  const Eigen::Index m = in.A.rows();

  KfsOutput out = allocate(n, m);

  // Per-time storage of the scalar updates needed by the backward pass.
  std::vector<MatrixXd> gains(static_cast<std::size_t>(n));      // m x p, column i = K_{t,i}
  MatrixXd innov = MatrixXd::Zero(n, p);                          // v_{t,i}
  MatrixXd innov_var = MatrixXd::Zero(n, p);                      // C_{t,i}
  MaskMatrix used = MaskMatrix::Constant(n, p, false);            // iota_{t,i}

  VectorXd a = in.alpha0;
  MatrixXd P = in.P0;
  double loglik = 0.0;

  for (Eigen::Index t = 0; t < n; ++t) {
    a = in.A * a;
    P = linalg::symmetrize(in.A * P * in.A.transpose() + in.Sigma_u);
    out.a_pred.row(t) = a.transpose();
    out.P_pred[static_cast<std::size_t>(t)] = P;

    MatrixXd& K = gains[static_cast<std::size_t>(t)];
    K.setZero(m, p);
    for (Eigen::Index i = 0; i < p; ++i) {
      if (!in.mask(t, i)) continue;
      const auto lam = in.Lambda.row(i);
      const VectorXd pl = P * lam.transpose();
      const double c = lam.dot(pl) + in.sigma_eps(i);
      if (!(c > 0.0)) continue;
      const double v = in.X(t, i) - lam.dot(a);
      K.col(i) = pl / c;
      a.noalias() += K.col(i) * v;
      P.noalias() -= K.col(i) * pl.transpose();
      innov(t, i) = v;
      innov_var(t, i) = c;
      used(t, i) = true;
      loglik -= 0.5 * (kLog2Pi + std::log(c) + v * v / c);
    }
    P = linalg::symmetrize(P);
    check_finite(loglik, a, t);
    out.a_filt.row(t) = a.transpose();
    out.P_filt[static_cast<std::size_t>(t)] = P;
  }
  out.loglik = loglik;

  VectorXd r = VectorXd::Zero(m);
  MatrixXd N = MatrixXd::Zero(m, m);
  for (Eigen::Index t = n - 1; t >= 0; --t) {
    const MatrixXd& K = gains[static_cast<std::size_t>(t)];
    for (Eigen::Index i = p - 1; i >= 0; --i) {
      if (!used(t, i)) continue;
      const VectorXd lam = in.Lambda.row(i).transpose();
      const auto k = K.col(i);
      const double c = innov_var(t, i);
      // r <- lam v / C + L^T r and N <- lam lam^T / C + L^T N L, L = I - k lam^T
      r += lam * (innov(t, i) / c - k.dot(r));
      const VectorXd w = N * k;
      const double s = k.dot(w);
      N.noalias() -= lam * w.transpose();
      N.noalias() -= w * lam.transpose();
      N.noalias() += (s + 1.0 / c) * lam * lam.transpose();
    }
    N = linalg::symmetrize(N);
    const MatrixXd& Pp = out.P_pred[static_cast<std::size_t>(t)];
    out.a_smooth.row(t) = (out.a_pred.row(t).transpose() + Pp * r).transpose();
    out.P_smooth[static_cast<std::size_t>(t)] = linalg::symmetrize(Pp - Pp * N * Pp);
    r = in.A.transpose() * r;
    N = in.A.transpose() * N * in.A;
  }
  out.a0_smooth = in.alpha0 + in.P0 * r;
  out.P0_smooth = linalg::symmetrize(in.P0 - in.P0 * N * in.P0);

  for (Eigen::Index t = 0; t < n; ++t) {
    const MatrixXd& Pf_prev = t == 0 ? in.P0 : out.P_filt[static_cast<std::size_t>(t - 1)];
    const MatrixXd& Pp = out.P_pred[static_cast<std::size_t>(t)];
    out.P_lag_smooth[static_cast<std::size_t>(t)] =
        out.P_smooth[static_cast<std::size_t>(t)] * spd_solve(Pp, in.A * Pf_prev);
  }
  return out;
}

KfsOutput run_kalman(const KfsInput& input, KalmanEngine engine) {
  return engine == KalmanEngine::kMultivariate ? kalman_multivariate(input) : kalman_univariate(input);
}

}  // namespace sdfm
