#include <doctest.h>

#include <cmath>
#include <limits>

#include "oracles.hpp"
#include "sparsedfm/error.hpp"
#include "sparsedfm/panel.hpp"

using namespace sdfm;

namespace {
const double NA = std::numeric_limits<double>::quiet_NaN();

TimePanel column_panel(const std::vector<double>& v) {
  MatrixXd m(static_cast<Eigen::Index>(v.size()), 1);
  for (std::size_t k = 0; k < v.size(); ++k) m(static_cast<Eigen::Index>(k), 0) = v[k];
  return TimePanel::from_matrix(m);
}
}  // namespace

TEST_CASE("panel validation") {
  TimePanel p = column_panel({1, 2, NA, 4});
  CHECK(p.observed_count() == 3);
  CHECK_FALSE(p.mask(2, 0));
  CHECK(p.names[0] == "V1");
  p.names = {"x", "x"};
  CHECK_THROWS_AS(p.validate(), DataError);
  TimePanel q = column_panel({1, 2, 3});
  q.mask(0, 0) = false;
  CHECK_THROWS_AS(q.validate(), DataError);
  TimePanel dup = column_panel({1, 2, 3});
  dup.index = {"a", "b", "a"};
  CHECK_THROWS_AS(dup.validate(), DataError);
}

TEST_CASE("transform codes") {
  const TimePanel p = column_panel({1, 3, 6, 10});
  auto diff = transform_data(p, {TransformCode::kDiff});
  CHECK(std::isnan(diff.values(0, 0)));
  CHECK_FALSE(diff.mask(0, 0));
  CHECK(diff.values(1, 0) == 2.0);
  CHECK(diff.values(3, 0) == 4.0);

  auto d2 = transform_data(p, {TransformCode::kDiff2});
  CHECK_FALSE(d2.mask(1, 0));
  CHECK(d2.values(2, 0) == 1.0);
  CHECK(d2.values(3, 0) == 1.0);

  auto g = transform_data(p, {TransformCode::kGrowth});
  CHECK(g.values(1, 0) == doctest::Approx(2.0));
  CHECK(g.values(2, 0) == doctest::Approx(1.0));

  auto ld = transform_data(p, {TransformCode::kLogDiff});
  CHECK(ld.values(1, 0) == doctest::Approx(std::log(3.0)));

  CHECK_THROWS_AS(transform_data(column_panel({1, -1, 2}), {TransformCode::kLogDiff}), DataError);
  CHECK_THROWS_AS(transform_data(column_panel({0, 1, 2}), {TransformCode::kGrowth}), DataError);
  CHECK_THROWS_AS(transform_data(p, {}), DataError);
  CHECK_THROWS_AS(transform_code_from_int(8), DataError);
}

TEST_CASE("undifference inverts a first difference exactly") {
  const std::vector<double> x = {5, 7, 4, 10, 12, 11};
  const TimePanel d = transform_data(column_panel(x), {TransformCode::kDiff});
  const VectorXd lv = undifference(x[0], d.values.col(0).tail(5));
  for (Eigen::Index k = 0; k < 5; ++k) CHECK(lv(k) == x[static_cast<std::size_t>(k + 1)]);
}

TEST_CASE("natural spline matches a dense tridiagonal oracle") {
  const std::vector<double> xs = {0, 1, 2.5, 4, 5};
  const std::vector<double> ys = {1, -1, 2, 0.5, 3};
  const NaturalCubicSpline s(xs, ys);
  for (std::size_t k = 0; k < xs.size(); ++k) CHECK(s(xs[k]) == doctest::Approx(ys[k]).epsilon(1e-12));

  // second derivatives from the full linear system with natural end conditions
  const Eigen::Index n = 5;
  MatrixXd M = MatrixXd::Zero(n, n);
  VectorXd rhs = VectorXd::Zero(n);
  M(0, 0) = 1;
  M(n - 1, n - 1) = 1;
  for (Eigen::Index i = 1; i < n - 1; ++i) {
    const auto u = static_cast<std::size_t>(i);
    const double h0 = xs[u] - xs[u - 1], h1 = xs[u + 1] - xs[u];
    M(i, i - 1) = h0 / 6.0;
    M(i, i) = (h0 + h1) / 3.0;
    M(i, i + 1) = h1 / 6.0;
    rhs(i) = (ys[u + 1] - ys[u]) / h1 - (ys[u] - ys[u - 1]) / h0;
  }
  const VectorXd m = M.fullPivLu().solve(rhs);
  for (Eigen::Index i = 0; i < n; ++i) CHECK(s.second_derivatives()[static_cast<std::size_t>(i)] == doctest::Approx(m(i)).epsilon(1e-12));
}

TEST_CASE("fill_na keeps observed cells and fills every gap") {
  const TimePanel p = column_panel({NA, 1, 2, NA, 4, 5, NA, NA});
  const BalancedPanel b = fill_na(p);
  CHECK(b.values.allFinite());
  CHECK(b.values(1, 0) == 1.0);
  CHECK(b.values(4, 0) == 4.0);
  // linear data: the spline is exact on the interior
  CHECK(b.values(3, 0) == doctest::Approx(3.0).epsilon(1e-12));
  CHECK_THROWS_AS(fill_na(column_panel({1, NA, 2, NA, 3})), DataError);
  const TimePanel full = column_panel({1, 2, 3, 4});
  CHECK(fill_na(full).values == full.values);
}

TEST_CASE("standardize round trip") {
  Rng rng(9);
  MatrixXd m = oracle::random_matrix(rng, 30, 4) * 3.0;
  m(4, 2) = NA;
  const TimePanel p = TimePanel::from_matrix(m);
  auto [s, sc] = standardize(p);
  CHECK_FALSE(s.mask(4, 2));
  const MatrixXd back = sc.unscale(s.values);
  for (Eigen::Index t = 0; t < 30; ++t)
    for (Eigen::Index i = 0; i < 4; ++i)
      if (p.mask(t, i)) CHECK(back(t, i) == doctest::Approx(m(t, i)).epsilon(1e-12));
  MatrixXd c = MatrixXd::Ones(5, 1);
  CHECK_THROWS_AS(standardize(TimePanel::from_matrix(c)), DataError);
}

TEST_CASE("ragged edge and missing summary") {
  MatrixXd m = MatrixXd::Ones(6, 2);
  const TimePanel p = TimePanel::from_matrix(m);
  const TimePanel r = ragged_edge(p, {0, 2});
  CHECK(r.mask(5, 0));
  CHECK_FALSE(r.mask(4, 1));
  CHECK_FALSE(r.mask(5, 1));
  CHECK(r.mask(3, 1));
  CHECK_THROWS_AS(ragged_edge(p, {0, 6}), DataError);
  const auto rows = missing_summary(r);
  CHECK(rows[1].missing_count == 2);
  REQUIRE(rows[1].runs.size() == 1);
  CHECK(rows[1].runs[0].first == 4);
  CHECK(rows[1].runs[0].second == 2);
}
