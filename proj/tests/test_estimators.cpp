#include <doctest.h>

#include <algorithm>

#include "oracles.hpp"
#include "sparsedfm/error.hpp"
#include "sparsedfm/estimators.hpp"
#include "sparsedfm/statespace.hpp"

using namespace sdfm;

TEST_CASE("pca on exact low rank data") {
  Rng rng(2);
  const VectorXd f = oracle::random_matrix(rng, 20, 1);
  const VectorXd l = oracle::random_matrix(rng, 6, 1);
  const MatrixXd X = f * l.transpose();
  const PcaResult pca = pca_estimate(X, 1);
  CHECK((pca.F * pca.Lambda.transpose() - X).cwiseAbs().maxCoeff() < 1e-10);
  CHECK(std::abs((pca.Lambda.transpose() * pca.Lambda)(0, 0) / 6.0 - 1.0) < 1e-10);
  Eigen::Index arg = 0;
  pca.Lambda.col(0).cwiseAbs().maxCoeff(&arg);
  CHECK(pca.Lambda(arg, 0) > 0.0);
  CHECK_THROWS_AS(pca_estimate(X, 6), UsageError);
  CHECK_THROWS_AS(pca_estimate(X, 0), UsageError);
}

TEST_CASE("pca recovers the loading space") {
  const Simulation s = simulate_dfm(500, 50, 2, 13, 0.0);
  const PcaResult pca = pca_estimate(s.panel.values, 2);
  const MatrixXd norm = pca.Lambda.transpose() * pca.Lambda / 50.0;
  CHECK((norm - MatrixXd::Identity(2, 2)).cwiseAbs().maxCoeff() < 1e-10);
  CHECK(oracle::subspace_angle_deg(pca.Lambda, s.params.Lambda) < 15.0);
}

TEST_CASE("init params solve the Lyapunov equation") {
  const Simulation s = simulate_dfm(120, 15, 2, 4, 0.1);
  const DfmParams p = init_params(s.panel, 2);
  CHECK_NOTHROW(p.validate());
  CHECK((p.P0 - (p.A * p.P0 * p.A.transpose() + p.Sigma_u)).cwiseAbs().maxCoeff() < 1e-10);
  CHECK(p.alpha0.isZero());
  CHECK((p.sigma_eps.array() >= 1e-8).all());
}

TEST_CASE("transition M-step") {
  const Eigen::Index n = 12;
  SmoothedMoments mom;
  mom.a = MatrixXd(n, 1);
  mom.a0 = VectorXd::Constant(1, 1.0);
  double prev = 1.0;
  mom.S.push_back(MatrixXd::Constant(1, 1, 1.0));
  for (Eigen::Index t = 0; t < n; ++t) {
    const double cur = 0.5 * prev;
    mom.a(t, 0) = cur;
    mom.S.push_back(MatrixXd::Constant(1, 1, cur * cur));
    mom.S_lag.push_back(MatrixXd::Constant(1, 1, cur * prev));
    prev = cur;
  }
  auto [A, Su] = m_step_transition(mom);
  CHECK(A(0, 0) == doctest::Approx(0.5).epsilon(1e-14));
  CHECK(Su(0, 0) == doctest::Approx(1e-10));

  for (auto& m : mom.S_lag) m.setZero();
  auto [A0, Su0] = m_step_transition(mom);
  CHECK(A0(0, 0) == 0.0);
  double mean_s = 0.0;
  for (Eigen::Index t = 1; t <= n; ++t) mean_s += mom.S[static_cast<std::size_t>(t)](0, 0);
  CHECK(Su0(0, 0) == doctest::Approx(std::max(mean_s / n, 1e-10)));
}

TEST_CASE("transition M-step equals OLS when factors are observed") {
  Rng rng(31);
  const Eigen::Index n = 40, r = 3;
  MatrixXd F(n + 1, r);
  F.row(0) = oracle::random_matrix(rng, 1, r);
  MatrixXd A(r, r);
  A << 0.5, 0.2, 0.0, -0.1, 0.4, 0.1, 0.0, 0.3, 0.6;
  for (Eigen::Index t = 1; t <= n; ++t) F.row(t) = (A * F.row(t - 1).transpose()).transpose() + 0.5 * oracle::random_matrix(rng, 1, r);
  SmoothedMoments mom;
  mom.a = F.bottomRows(n);
  mom.a0 = F.row(0).transpose();
  for (Eigen::Index t = 0; t <= n; ++t) mom.S.push_back(F.row(t).transpose() * F.row(t));
  for (Eigen::Index t = 1; t <= n; ++t) mom.S_lag.push_back(F.row(t).transpose() * F.row(t - 1));
  const MatrixXd ahat = m_step_transition(mom).first;
  CHECK((ahat - oracle::ols_var1(F)).cwiseAbs().maxCoeff() < 1e-10);
}

TEST_CASE("row-wise loadings solve equals the Kronecker system") {
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    Rng rng(seed);
    const Eigen::Index n = 8, p = 4, r = 2;
    const SmoothedMoments mom = oracle::random_moments(rng, n, r);
    const MaskMatrix mask = oracle::random_mask(rng, n, p, 0.3);
    MatrixXd X = oracle::random_matrix(rng, n, p);
    const MatrixXd dense = m_step_lambda_dense(X, mask, mom);
    const MatrixXd kron = oracle::kronecker_lambda(X, mask, mom, VectorXd::Ones(p), 0.0, MatrixXd::Zero(p, r),
                                                   MatrixXd::Zero(p, r));
    CHECK((dense - kron).cwiseAbs().maxCoeff() < 1e-10);
  }
}

TEST_CASE("loadings M-step is exact on noiseless data") {
  Rng rng(8);
  const Eigen::Index n = 60, p = 5, r = 2;
  const MatrixXd F = oracle::random_matrix(rng, n, r);
  const MatrixXd L = oracle::random_matrix(rng, p, r);
  SmoothedMoments mom;
  mom.a = F;
  mom.S.push_back(MatrixXd::Identity(r, r));
  for (Eigen::Index t = 0; t < n; ++t) mom.S.push_back(F.row(t).transpose() * F.row(t));
  const MaskMatrix all = MaskMatrix::Constant(n, p, true);
  const MatrixXd X = F * L.transpose();
  CHECK((m_step_lambda_dense(X, all, mom) - L).cwiseAbs().maxCoeff() < 1e-8);
  const VectorXd s = m_step_sigma_eps(X, all, mom, L, VectorXd::Ones(p));
  CHECK((s.array() == 1e-8).all());

  MaskMatrix none = all;
  none.col(3).setConstant(false);
  CHECK_THROWS_AS(m_step_lambda_dense(X, none, mom), DataError);
}

TEST_CASE("sigma_eps update against a direct expectation") {
  Rng rng(77);
  const Eigen::Index n = 10, p = 3, r = 2;
  const SmoothedMoments mom = oracle::random_moments(rng, n, r);
  const MatrixXd X = oracle::random_matrix(rng, n, p);
  const MatrixXd L = oracle::random_matrix(rng, p, r);
  const VectorXd prev = VectorXd::Constant(p, 0.7);
  const MaskMatrix all = MaskMatrix::Constant(n, p, true);
  const VectorXd got = m_step_sigma_eps(X, all, mom, L, prev);
  for (Eigen::Index i = 0; i < p; ++i) {
    double acc = 0.0;
    for (Eigen::Index t = 0; t < n; ++t) {
      const VectorXd a = mom.a.row(t).transpose();
      const MatrixXd P = mom.S[static_cast<std::size_t>(t + 1)] - a * a.transpose();
      const double resid = X(t, i) - L.row(i).dot(a);
      acc += resid * resid + L.row(i) * P * L.row(i).transpose();
    }
    CHECK(got(i) == doctest::Approx(acc / n).epsilon(1e-10));
  }

  MaskMatrix half = all;
  for (Eigen::Index t = 0; t < n; t += 2) half(t, 0) = false;
  const VectorXd split = m_step_sigma_eps(X, half, mom, L, prev);
  double acc = 0.0;
  for (Eigen::Index t = 1; t < n; t += 2) {
    const VectorXd a = mom.a.row(t).transpose();
    const double x = X(t, 0);
    acc += x * x - 2 * x * L.row(0).dot(a) + L.row(0) * mom.S[static_cast<std::size_t>(t + 1)] * L.row(0).transpose();
  }
  CHECK(split(0) == doctest::Approx((acc + 5 * 0.7) / n).epsilon(1e-12));
}

TEST_CASE("convergence statistic") {
  auto a = em_converged(-100.0, -100.0, 1e-4);
  CHECK(a.M == 0.0);
  CHECK(a.converged);
  auto b = em_converged(-99.0, -101.0, 1e-4);
  CHECK(b.M == doctest::Approx(-0.02));
  CHECK_FALSE(b.converged);
  auto c = em_converged(-100.000001, -100.0, 1e-4);
  CHECK(std::abs(c.M) == doctest::Approx(1e-8).epsilon(1e-6));
  CHECK(c.converged);
  CHECK(em_converged(0.0, 0.0, 1e-4).converged);
}

namespace {
bool monotone(const std::vector<double>& ll, double slack = 1e-6) {
  for (std::size_t k = 1; k < ll.size(); ++k)
    if (ll[k] < ll[k - 1] - slack) return false;
  return true;
}
}  // namespace

TEST_CASE("EM increases the likelihood and converges") {
  const Simulation full = simulate_dfm(100, 20, 2, 1, 0.0);
  const Simulation miss = simulate_dfm(100, 20, 2, 1, 0.1);
  const EmOptions opts;
  const Estimate a = em_fit(full.panel, 2, opts);
  const Estimate b = em_fit(miss.panel, 2, opts);
  CHECK(monotone(a.log.logliks));
  CHECK(monotone(b.log.logliks));
  CHECK(a.log.converged);
  CHECK(a.log.iterations < 100);
  CHECK(a.log.M.size() == static_cast<std::size_t>(a.log.iterations));
  CHECK(std::abs(a.log.M.back()) < opts.threshold);

  const Estimate again = em_fit(full.panel, 2, opts);
  CHECK(again.log.logliks == a.log.logliks);
}

TEST_CASE("EM with AR1 errors recovers phi") {
  SimulationConfig cfg;
  cfg.n = 300;
  cfg.p = 10;
  cfg.r = 2;
  cfg.seed = 3;
  cfg.ar1_phi = 0.5;
  const Simulation s = simulate_dfm(cfg);
  EmOptions opts;
  opts.err = ErrorModel::kAR1;
  opts.engine = KalmanEngine::kMultivariate;
  const Estimate est = em_fit(s.panel, 2, opts);
  CHECK(monotone(est.log.logliks));
  std::vector<double> phi(est.state.ar1->phi.data(), est.state.ar1->phi.data() + 10);
  std::nth_element(phi.begin(), phi.begin() + 5, phi.end());
  CHECK(std::abs(phi[5] - 0.5) < 0.15);
}

TEST_CASE("two-stage smoothing") {
  const Simulation s = simulate_dfm(150, 30, 2, 6, 0.0);
  const Estimate a = two_stage(s.panel, 2, KalmanEngine::kUnivariate);
  const Estimate b = two_stage(s.panel, 2, KalmanEngine::kMultivariate);
  CHECK((a.kfs.a_smooth - b.kfs.a_smooth).cwiseAbs().maxCoeff() < 1e-8);
  const PcaResult pca = pca_estimate(s.panel.values, 2);
  for (Eigen::Index j = 0; j < 2; ++j) {
    const VectorXd x = a.kfs.a_smooth.col(j).array() - a.kfs.a_smooth.col(j).mean();
    const VectorXd y = pca.F.col(j).array() - pca.F.col(j).mean();
    CHECK(std::abs(x.dot(y) / (x.norm() * y.norm())) > 0.9);
  }
  CHECK(a.state.params.Lambda == init_params(s.panel, 2).Lambda);
}
