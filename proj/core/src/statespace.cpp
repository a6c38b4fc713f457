#include "sparsedfm/statespace.hpp"

#include <cmath>
#include <limits>
#include <numeric>
#include <string>
#include <vector>

#include "sparsedfm/error.hpp"
#include "sparsedfm/random.hpp"

namespace sdfm {

namespace {

bool is_symmetric(const MatrixXd& m, double tol = 1e-8) {
  return (m - m.transpose()).cwiseAbs().maxCoeff() <= tol * std::max(1.0, m.cwiseAbs().maxCoeff());
}

bool is_psd(const MatrixXd& m) {
  Eigen::SelfAdjointEigenSolver<MatrixXd> eig(linalg::symmetrize(m), Eigen::EigenvaluesOnly);
  return eig.eigenvalues().minCoeff() >= -1e-10 * std::max(1.0, m.cwiseAbs().maxCoeff());
}

}  // namespace

void DfmParams::validate() const {
  const Eigen::Index r_ = r();
  const Eigen::Index p_ = p();
  if (r_ < 1 || p_ < 1) throw DataError("DfmParams: empty loadings");
  if (A.rows() != r_ || A.cols() != r_) throw DataError("DfmParams: A must be r x r");
  if (Sigma_u.rows() != r_ || Sigma_u.cols() != r_) throw DataError("DfmParams: Sigma_u must be r x r");
  if (P0.rows() != r_ || P0.cols() != r_) throw DataError("DfmParams: P0 must be r x r");
  if (alpha0.size() != r_) throw DataError("DfmParams: alpha0 must have length r");
  if (sigma_eps.size() != p_) throw DataError("DfmParams: sigma_eps must have length p");
  if (!(sigma_eps.array() > 0.0).all()) throw UsageError("DfmParams: sigma_eps must be positive");
  if (!is_symmetric(Sigma_u) || !is_psd(Sigma_u)) throw UsageError("DfmParams: Sigma_u must be symmetric PSD");
  if (!is_symmetric(P0) || !is_psd(P0)) throw UsageError("DfmParams: P0 must be symmetric PSD");
  if (linalg::spectral_norm(A) >= 1.0) throw UsageError("DfmParams: spectral norm of A must be < 1");
}

void Ar1Params::validate(Eigen::Index p) const {
  if (phi.size() != p || sigma_e.size() != p) throw DataError("Ar1Params: phi/sigma_e must have length p");
  if (!(phi.array().abs() < 1.0).all()) throw UsageError("Ar1Params: |phi| must be < 1");
  if (!(sigma_e.array() > 0.0).all()) throw UsageError("Ar1Params: sigma_e must be positive");
  if (!(kappa > 0.0)) throw UsageError("Ar1Params: kappa must be positive");
}

AugmentedSystem build_ar1_augmented(const DfmParams& params, const Ar1Params& ar1) {
  params.validate();
  ar1.validate(params.p());
  const Eigen::Index p = params.p();
  const Eigen::Index r = params.r();
  const Eigen::Index m = r + p;

  AugmentedSystem sys;
  sys.Lambda_aug = MatrixXd::Zero(p, m);
  sys.Lambda_aug.leftCols(r) = params.Lambda;
  sys.Lambda_aug.rightCols(p).setIdentity();

  sys.A_aug = MatrixXd::Zero(m, m);
  sys.A_aug.topLeftCorner(r, r) = params.A;
  sys.A_aug.bottomRightCorner(p, p) = ar1.phi.asDiagonal();

  sys.Sigma_u_aug = MatrixXd::Zero(m, m);
  sys.Sigma_u_aug.topLeftCorner(r, r) = params.Sigma_u;
  sys.Sigma_u_aug.bottomRightCorner(p, p) = ar1.sigma_e.asDiagonal();

  sys.sigma_meas = VectorXd::Constant(p, ar1.kappa);

  sys.alpha0_aug = VectorXd::Zero(m);
  sys.alpha0_aug.head(r) = params.alpha0;
  sys.P0_aug = MatrixXd::Zero(m, m);
  sys.P0_aug.topLeftCorner(r, r) = params.P0;
  sys.P0_aug.bottomRightCorner(p, p) =
      (ar1.sigma_e.array() / (1.0 - ar1.phi.array().square())).matrix().asDiagonal();
  return sys;
}

Simulation simulate_dfm(const SimulationConfig& cfg) {
  if (cfg.n < 10) throw UsageError("simulate_dfm: n must be >= 10");
  if (cfg.r < 1 || cfg.r >= cfg.p) throw UsageError("simulate_dfm: need 1 <= r < p");
  if (!(cfg.missing_frac >= 0.0 && cfg.missing_frac < 0.5)) {
    throw UsageError("simulate_dfm: missing_frac must lie in [0, 0.5)");
  }
  if (!(std::abs(cfg.a_diag) < 1.0)) throw UsageError("simulate_dfm: |a_diag| must be < 1");
  if (cfg.ar1_phi && !(std::abs(*cfg.ar1_phi) < 1.0)) throw UsageError("simulate_dfm: |phi| must be < 1");
  if (!cfg.block_sizes.empty()) {
    if (static_cast<Eigen::Index>(cfg.block_sizes.size()) != cfg.r) {
      throw UsageError("simulate_dfm: need one block size per factor");
    }
    const auto total = std::accumulate(cfg.block_sizes.begin(), cfg.block_sizes.end(), Eigen::Index{0});
    if (total != cfg.p) throw UsageError("simulate_dfm: block sizes must sum to p");
  }

  const Eigen::Index n = cfg.n, p = cfg.p, r = cfg.r;
  Rng rng(cfg.seed);

  DfmParams params;
  params.Lambda = MatrixXd::Zero(p, r);
  if (cfg.block_sizes.empty()) {
    for (Eigen::Index i = 0; i < p; ++i) {
      for (Eigen::Index k = 0; k < r; ++k) params.Lambda(i, k) = rng.normal();
    }
  } else {
    Eigen::Index row = 0;
    for (Eigen::Index k = 0; k < r; ++k) {
      for (Eigen::Index c = 0; c < cfg.block_sizes[static_cast<std::size_t>(k)]; ++c, ++row) {
        const double mag = cfg.block_low + (cfg.block_high - cfg.block_low) * rng.uniform();
        const double sign = rng.uniform() < 0.5 ? -1.0 : 1.0;
        params.Lambda(row, k) = sign * mag;
      }
    }
  }
  params.A = cfg.a_diag * MatrixXd::Identity(r, r);
  params.Sigma_u = (1.0 - cfg.a_diag * cfg.a_diag) * MatrixXd::Identity(r, r);
  params.sigma_eps = VectorXd::Constant(p, cfg.sigma_eps);
  params.alpha0 = VectorXd::Zero(r);
  params.P0 = linalg::solve_discrete_lyapunov(params.A, params.Sigma_u);

  std::optional<Ar1Params> ar1;
  if (cfg.ar1_phi) {
    const double phi = *cfg.ar1_phi;
    ar1 = Ar1Params{VectorXd::Constant(p, phi), VectorXd::Constant(p, cfg.sigma_eps * (1.0 - phi * phi)),
                    Ar1Params::kDefaultKappa};
  }

  const Eigen::LLT<MatrixXd> p0_chol(params.P0);
  const MatrixXd p0_l = p0_chol.matrixL();
  const Eigen::LLT<MatrixXd> su_chol(params.Sigma_u);
  const MatrixXd su_l = su_chol.matrixL();
  const VectorXd eps_sd = params.sigma_eps.cwiseSqrt();

  VectorXd z(r);
  for (Eigen::Index k = 0; k < r; ++k) z(k) = rng.normal();
  VectorXd f = params.alpha0 + p0_l * z;

  VectorXd eps_state(p);
  if (ar1) {
    // stationary start: unit marginal variance
    for (Eigen::Index i = 0; i < p; ++i) eps_state(i) = eps_sd(i) * rng.normal();
  }

  MatrixXd factors(n, r);
  MatrixXd x(n, p);
  for (Eigen::Index t = 0; t < n; ++t) {
    for (Eigen::Index k = 0; k < r; ++k) z(k) = rng.normal();
    f = params.A * f + su_l * z;
    factors.row(t) = f.transpose();
    for (Eigen::Index i = 0; i < p; ++i) {
      double e;
      if (ar1) {
        eps_state(i) = ar1->phi(i) * eps_state(i) + std::sqrt(ar1->sigma_e(i)) * rng.normal();
        e = eps_state(i);
      } else {
        e = eps_sd(i) * rng.normal();
      }
      x(t, i) = params.Lambda.row(i).dot(f) + e;
    }
  }

  const auto cells = static_cast<std::uint64_t>(n * p);
  const auto n_missing = static_cast<std::uint64_t>(std::llround(cfg.missing_frac * static_cast<double>(cells)));
  if (n_missing > 0) {
    std::vector<std::uint64_t> ids(cells);
    std::iota(ids.begin(), ids.end(), std::uint64_t{0});
    for (std::uint64_t k = 0; k < n_missing; ++k) {
      const std::uint64_t j = k + rng.uniform_index(cells - k);
      std::swap(ids[k], ids[j]);
      const auto t = static_cast<Eigen::Index>(ids[k] / static_cast<std::uint64_t>(p));
      const auto i = static_cast<Eigen::Index>(ids[k] % static_cast<std::uint64_t>(p));
      x(t, i) = std::numeric_limits<double>::quiet_NaN();
    }
  }

  Simulation sim{TimePanel::from_matrix(std::move(x)), std::move(params), std::move(factors), ar1};
  if (sim.ar1) {
    // the AR(1) simulation keeps Sigma_eps as the marginal error variance
    sim.params.sigma_eps = VectorXd::Constant(p, cfg.sigma_eps);
  }
  return sim;
}

Simulation simulate_dfm(Eigen::Index n, Eigen::Index p, Eigen::Index r, std::uint64_t seed,
                        double missing_frac) {
  SimulationConfig cfg;
  cfg.n = n;
  cfg.p = p;
  cfg.r = r;
  cfg.seed = seed;
  cfg.missing_frac = missing_frac;
  return simulate_dfm(cfg);
}

}  // namespace sdfm
