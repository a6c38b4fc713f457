#include <doctest.h>

#include "oracles.hpp"
#include "sparsedfm/error.hpp"
#include "sparsedfm/statespace.hpp"

using namespace sdfm;

TEST_CASE("simulation is reproducible and masks the requested fraction") {
  const Simulation a = simulate_dfm(50, 10, 2, 5, 0.1);
  const Simulation b = simulate_dfm(50, 10, 2, 5, 0.1);
  CHECK(a.panel.mask == b.panel.mask);
  CHECK(a.factors == b.factors);
  CHECK(a.panel.n() * a.panel.p() - a.panel.observed_count() == 50);
  CHECK(a.params.A.isApprox(0.8 * MatrixXd::Identity(2, 2)));
  CHECK(a.params.Sigma_u.isApprox(0.36 * MatrixXd::Identity(2, 2)));
  const Simulation c = simulate_dfm(50, 10, 2, 6, 0.1);
  CHECK(c.factors != a.factors);
}

TEST_CASE("block-sparse loadings") {
  SimulationConfig cfg;
  cfg.n = 40;
  cfg.p = 10;
  cfg.r = 2;
  cfg.block_sizes = {6, 4};
  const Simulation s = simulate_dfm(cfg);
  for (Eigen::Index i = 0; i < 6; ++i) {
    CHECK(s.params.Lambda(i, 1) == 0.0);
    CHECK(std::abs(s.params.Lambda(i, 0)) >= 0.5);
  }
  for (Eigen::Index i = 6; i < 10; ++i) CHECK(s.params.Lambda(i, 0) == 0.0);
  cfg.block_sizes = {6, 3};
  CHECK_THROWS(simulate_dfm(cfg));
}

TEST_CASE("AR1 augmentation layout") {
  const Simulation s = simulate_dfm(30, 4, 2, 1, 0.0);
  Ar1Params ar;
  ar.phi = VectorXd::Constant(4, 0.5);
  ar.sigma_e = VectorXd::Constant(4, 0.75);
  const AugmentedSystem sys = build_ar1_augmented(s.params, ar);
  CHECK(sys.A_aug.rows() == 6);
  CHECK(sys.Lambda_aug.rightCols(4).isIdentity());
  CHECK(sys.A_aug(3, 3) == 0.5);
  CHECK(sys.P0_aug(5, 5) == doctest::Approx(1.0));
  CHECK(sys.sigma_meas(0) == Ar1Params::kDefaultKappa);
  ar.phi(0) = 1.0;
  CHECK_THROWS_AS(build_ar1_augmented(s.params, ar), UsageError);
}

TEST_CASE("parameter validation") {
  DfmParams p = simulate_dfm(20, 3, 1, 1, 0.0).params;
  CHECK_NOTHROW(p.validate());
  p.A(0, 0) = 1.0;
  CHECK_THROWS_AS(p.validate(), UsageError);
  p.A(0, 0) = 0.5;
  p.sigma_eps(1) = 0.0;
  CHECK_THROWS_AS(p.validate(), UsageError);
}
