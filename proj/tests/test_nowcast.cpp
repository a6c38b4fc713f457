#include <doctest.h>

#include "oracles.hpp"
#include "sparsedfm/error.hpp"
#include "sparsedfm/nowcast.hpp"
#include "sparsedfm/statespace.hpp"

using namespace sdfm;

TEST_CASE("mae quantiles") {
  const QuantileSummary s = mae_quantiles({4, 1, 3, 2});
  CHECK(s.mean == 2.5);
  CHECK(s.q50 == 2.5);
  CHECK(s.q0 == 1.0);
  CHECK(s.q100 == 4.0);
  const QuantileSummary c = mae_quantiles({3, 3, 3});
  CHECK(c.q25 == 3.0);
  CHECK(c.q75 == 3.0);
  CHECK_THROWS_AS(mae_quantiles({}), UsageError);

  Rng rng(4);
  std::vector<double> v;
  for (int k = 0; k < 37; ++k) v.push_back(std::abs(rng.normal()));
  const QuantileSummary q = mae_quantiles(v);
  CHECK(std::abs(q.q25 - oracle::quantile(v, 0.25)) < 1e-12);
  CHECK(std::abs(q.q50 - oracle::quantile(v, 0.5)) < 1e-12);
  CHECK(std::abs(q.q75 - oracle::quantile(v, 0.75)) < 1e-12);
}

TEST_CASE("undifferencing observed diffs returns observed levels") {
  const VectorXd lv = nowcast_levels(TransformCode::kDiff, 100.0, (VectorXd(2) << 3.0, -5.0).finished());
  CHECK(lv(0) == 103.0);
  CHECK(lv(1) == 98.0);
  const VectorXd same = nowcast_levels(TransformCode::kNone, 1.0, (VectorXd(1) << 7.0).finished());
  CHECK(same(0) == 7.0);
  const VectorXd lg = nowcast_levels(TransformCode::kLogDiff, 2.0, (VectorXd(1) << std::log(1.5)).finished());
  CHECK(lg(0) == doctest::Approx(3.0));
  CHECK_THROWS_AS(nowcast_levels(TransformCode::kDiff2, 1.0, VectorXd::Zero(1)), UsageError);
}

namespace {

TimePanel level_panel(const Simulation& s) {
  TimePanel lv = s.panel;
  for (Eigen::Index i = 0; i < lv.p(); ++i) {
    double acc = 100.0;
    for (Eigen::Index t = 0; t < lv.n(); ++t) {
      acc += s.panel.values(t, i);
      lv.values(t, i) = acc;
    }
  }
  return lv;
}

HarnessConfig basic_config(const TimePanel& lv) {
  HarnessConfig hc;
  hc.targets = {0, 1};
  hc.lags.assign(static_cast<std::size_t>(lv.p()), 0);
  hc.lags[0] = 2;
  hc.lags[1] = 2;
  hc.lags[2] = 1;
  hc.codes.assign(static_cast<std::size_t>(lv.p()), TransformCode::kDiff);
  FitConfig em;
  em.r = 2;
  em.alg = Algorithm::kEM;
  hc.models.push_back({"EM", em, std::nullopt});
  hc.start = 60;
  hc.end = 63;
  return hc;
}

}  // namespace

TEST_CASE("no look-ahead: poisoned future rows leave a window unchanged") {
  const Simulation s = simulate_dfm(80, 8, 2, 3, 0.0);
  const TimePanel lv = level_panel(s);
  const HarnessConfig hc = basic_config(lv);
  TimePanel poisoned = lv;
  for (Eigen::Index t = 62; t < 80; ++t)
    for (Eigen::Index i = 0; i < 8; ++i) poisoned.values(t, i) = 1e30;
  const WindowResult a = run_window(lv, hc, 61);
  const WindowResult b = run_window(poisoned, hc, 61);
  CHECK(a.failure[0].empty());
  CHECK(a.mae[0][0] == b.mae[0][0]);
  CHECK(a.mae[0][1] == b.mae[0][1]);
  CHECK(a.nowcasts[0] == b.nowcasts[0]);
}

TEST_CASE("harness report is a reduction of per-window errors") {
  const Simulation s = simulate_dfm(80, 8, 2, 5, 0.0);
  const TimePanel lv = level_panel(s);
  HarnessConfig hc = basic_config(lv);
  EmState oracle_state;
  oracle_state.params = s.params;
  oracle_state.alpha0_state = s.params.alpha0;
  oracle_state.P0_state = s.params.P0;
  FitConfig raw;
  raw.r = 2;
  raw.standardize = false;
  hc.models.push_back({"oracle", raw, oracle_state});
  const HarnessReport rep = run_harness(lv, hc);
  REQUIRE(rep.windows.size() == 4);
  for (std::size_t m = 0; m < 2; ++m) {
    std::vector<double> h1;
    for (const auto& w : rep.windows) {
      CHECK(w.failure[m].empty());
      h1.push_back(w.mae[m][0]);
    }
    CHECK(rep.summary[m][0].mean == doctest::Approx(mae_quantiles(h1).mean).epsilon(1e-15));
    CHECK(rep.summary[m][0].count == 4);
  }

  HarnessConfig reuse = hc;
  reuse.reuse_params = true;
  const HarnessReport rr = run_harness(lv, reuse);
  CHECK(rr.windows[0].mae[0][0] == rep.windows[0].mae[0][0]);

  HarnessConfig bad = hc;
  bad.lags[0] = 0;
  CHECK_THROWS_AS(run_harness(lv, bad), UsageError);
}
