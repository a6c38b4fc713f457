#include <doctest.h>

#include <algorithm>

#include "oracles.hpp"
#include "sparsedfm/error.hpp"
#include "sparsedfm/statespace.hpp"
#include "sparsedfm/tuning.hpp"

using namespace sdfm;

TEST_CASE("logspace") {
  const auto g = logspace(-2, 3, 100);
  REQUIRE(g.size() == 100);
  CHECK(g.front() == doctest::Approx(0.01).epsilon(1e-14));
  CHECK(g.back() == 1000.0);
  CHECK(std::is_sorted(g.begin(), g.end()));
  const auto two = logspace(0, 1, 2);
  CHECK(two[0] == 1.0);
  CHECK(two[1] == 10.0);
  CHECK_THROWS_AS(logspace(0, 0, 2), UsageError);
  CHECK_THROWS_AS(logspace(0, 1, 1), UsageError);
}

TEST_CASE("bic formula") {
  CHECK(bic_alpha(1.0, 0, 10, 5) == 0.0);
  CHECK(bic_alpha(1.0, 50, 10, 5) == doctest::Approx(std::log(50.0)));
  CHECK(bic_alpha(2.0, 3, 10, 5) < bic_alpha(2.0, 4, 10, 5));
  CHECK_THROWS_AS(bic_alpha(0.0, 1, 10, 5), NumericalError);
}

TEST_CASE("information criteria") {
  SimulationConfig cfg;
  cfg.n = 200;
  cfg.p = 50;
  cfg.r = 2;
  cfg.seed = 1;
  const Simulation s = simulate_dfm(cfg);
  const IcTable tab = tune_factors(s.panel, 8, 2);
  for (std::size_t k = 1; k < tab.V.size(); ++k) CHECK(tab.V[k] <= tab.V[k - 1] + 1e-12);
  CHECK(tab.chosen_ic2 == 2);
  CHECK(tab.chosen() == 2);
  double share = 0.0;
  for (double v : tab.variance_share) {
    CHECK(v >= 0.0);
    share += v;
  }
  CHECK(share <= 1.0 + 1e-12);
  CHECK_THROWS_AS(tune_factors(s.panel, 50, 2), UsageError);
  CHECK(default_r_max(200, 50) == 15);
  CHECK(default_r_max(200, 6) == 5);
}

TEST_CASE("pure noise selects few factors") {
  int small = 0;
  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    Rng rng(seed);
    const TimePanel p = TimePanel::from_matrix(oracle::random_matrix(rng, 100, 100));
    if (tune_factors(p, 8, 2).chosen_ic2 <= 2) ++small;
  }
  CHECK(small >= 9);
}

namespace {
Simulation sparse_sim(std::uint64_t seed) {
  SimulationConfig cfg;
  cfg.n = 100;
  cfg.p = 20;
  cfg.r = 2;
  cfg.seed = seed;
  cfg.block_sizes = {12, 8};
  return simulate_dfm(cfg);
}
}  // namespace

TEST_CASE("alpha grid search bookkeeping") {
  const Simulation s = sparse_sim(2);
  EmOptions opts;
  const AlphaSearch one = alpha_grid_search(s.panel, 2, {0.5}, 0, opts);
  CHECK(one.path.alpha_opt == 0.5);
  CHECK(one.path.points.size() == 1);

  const AlphaSearch a = alpha_grid_search(s.panel, 2, {0.01, 0.1, 1.0, 1e6}, 0, opts, true);
  const AlphaSearch b = alpha_grid_search(s.panel, 2, {1e6, 1.0, 0.01, 0.1}, 0, opts);
  REQUIRE(a.path.stop_index.has_value());
  CHECK(a.path.points.back().degenerate);
  CHECK(a.path.points.back().alpha == 1e6);
  CHECK(a.path.alpha_opt == b.path.alpha_opt);
  CHECK(a.path.points.size() == b.path.points.size());
  for (std::size_t k = 0; k < a.path.points.size(); ++k) CHECK(a.path.points[k].bic == b.path.points[k].bic);
  CHECK(a.stored.size() == a.path.points.size());
  CHECK(a.path.alpha_opt < 1e6);
  int total = 0;
  for (const auto& pt : a.path.points) total += pt.em_iterations;
  CHECK(total == a.path.total_em_iterations);

  CHECK_THROWS_AS(alpha_grid_search(s.panel, 2, {1e6}, 0, opts), UsageError);
}
