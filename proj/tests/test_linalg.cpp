#include <doctest.h>

#include "oracles.hpp"
#include "sparsedfm/error.hpp"
#include "sparsedfm/linalg.hpp"
#include "sparsedfm/random.hpp"

using namespace sdfm;

TEST_CASE("rng sequence is reproducible and in range") {
  Rng a(42), b(42);
  for (int k = 0; k < 100; ++k) {
    const double u = a.uniform();
    CHECK(u == b.uniform());
    CHECK(u >= 0.0);
    CHECK(u < 1.0);
  }
  Rng c(7);
  double sum = 0.0, sq = 0.0;
  const int N = 20000;
  for (int k = 0; k < N; ++k) {
    const double z = c.normal();
    sum += z;
    sq += z * z;
  }
  CHECK(std::abs(sum / N) < 0.03);
  CHECK(std::abs(sq / N - 1.0) < 0.05);
}

TEST_CASE("lyapunov solve satisfies its defining equation") {
  Rng rng(3);
  MatrixXd A = oracle::random_matrix(rng, 3, 3);
  A = linalg::stabilize(A, 0.8);
  const MatrixXd Q = oracle::random_spd(rng, 3);
  const MatrixXd P = linalg::solve_discrete_lyapunov(A, Q);
  CHECK((P - (A * P * A.transpose() + Q)).cwiseAbs().maxCoeff() < 1e-10);

  const MatrixXd a1 = MatrixXd::Constant(1, 1, 0.8);
  const MatrixXd q1 = MatrixXd::Constant(1, 1, 0.36);
  CHECK(linalg::solve_discrete_lyapunov(a1, q1)(0, 0) == doctest::Approx(1.0).epsilon(1e-12));

  CHECK_THROWS_AS(linalg::solve_discrete_lyapunov(MatrixXd::Identity(2, 2), MatrixXd::Identity(2, 2)), NumericalError);
}

TEST_CASE("stabilize caps the spectral norm") {
  MatrixXd A(2, 2);
  A << 1.2, 0.3, 0.0, 0.9;
  const MatrixXd s = linalg::stabilize(A);
  CHECK(linalg::spectral_norm(s) == doctest::Approx(0.99).epsilon(1e-12));
  const MatrixXd small = 0.5 * MatrixXd::Identity(2, 2);
  CHECK(linalg::stabilize(small) == small);
}

TEST_CASE("pseudo inverse and eigenvalue floor") {
  MatrixXd m(2, 2);
  m << 1.0, 1.0, 1.0, 1.0;
  const MatrixXd pinv = linalg::pseudo_inverse(m);
  CHECK((m * pinv * m - m).cwiseAbs().maxCoeff() < 1e-12);
  MatrixXd ind(2, 2);
  ind << 1.0, 0.0, 0.0, -1.0;
  const MatrixXd fl = linalg::floor_eigenvalues(ind, 1e-10);
  CHECK(fl(1, 1) == doctest::Approx(1e-10));
}
