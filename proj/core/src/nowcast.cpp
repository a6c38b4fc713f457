#include "sparsedfm/nowcast.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdlib>
#include <exception>
#include <limits>
#include <string>
#include <thread>

#include "sparsedfm/error.hpp"

namespace sdfm {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

bool supported_target_code(TransformCode c) {
  return c == TransformCode::kNone || c == TransformCode::kDiff || c == TransformCode::kLogDiff ||
         c == TransformCode::kLogGrowth;
}

double nan_mean(const std::vector<double>& v) {
  double acc = 0.0;
  std::size_t cnt = 0;
  for (double x : v) {
    if (std::isnan(x)) continue;
    acc += x;
    ++cnt;
  }
  return cnt == 0 ? kNaN : acc / static_cast<double>(cnt);
}

}  // namespace

void HarnessConfig::validate(const TimePanel& levels) const {
  const Eigen::Index p = levels.p();
  if (targets.empty()) throw UsageError("nowcast: no target columns");
  if (static_cast<Eigen::Index>(lags.size()) != p) throw UsageError("nowcast: need one lag per column");
  if (static_cast<Eigen::Index>(codes.size()) != p) throw UsageError("nowcast: need one transform code per column");
  if (models.empty()) throw UsageError("nowcast: no models to compare");
  for (Eigen::Index j : targets) {
    if (j < 0 || j >= p) throw UsageError("nowcast: target column " + std::to_string(j) + " out of range");
    if (lags[static_cast<std::size_t>(j)] < 1) throw UsageError("nowcast: target lags must be >= 1");
    if (!supported_target_code(codes[static_cast<std::size_t>(j)])) {
      throw UsageError("nowcast: targets must use transform code 1, 2, 4 or 7");
    }
  }
  if (start < 0 || end < start || end >= levels.n()) throw UsageError("nowcast: windows must satisfy 0 <= start <= end < n");
}

QuantileSummary mae_quantiles(std::vector<double> errors) {
  if (errors.empty()) throw UsageError("mae_quantiles: no errors");
  std::sort(errors.begin(), errors.end());
  auto q = [&errors](double prob) {
    const double h = static_cast<double>(errors.size() - 1) * prob;
    const auto lo = static_cast<std::size_t>(std::floor(h));
    const std::size_t hi = std::min(lo + 1, errors.size() - 1);
    return errors[lo] + (h - static_cast<double>(lo)) * (errors[hi] - errors[lo]);
  };
  QuantileSummary s;
  double acc = 0.0;
  for (double e : errors) acc += e;
  s.mean = acc / static_cast<double>(errors.size());
  s.q0 = errors.front();
  s.q25 = q(0.25);
  s.q50 = q(0.5);
  s.q75 = q(0.75);
  s.q100 = errors.back();
  s.count = errors.size();
  return s;
}

VectorXd nowcast_levels(TransformCode code, double last_level, const VectorXd& fitted) {
  switch (code) {
    case TransformCode::kNone:
      return fitted;
    case TransformCode::kDiff:
      return undifference(last_level, fitted);
    case TransformCode::kLogDiff:
    case TransformCode::kLogGrowth:
      if (!(last_level > 0.0)) throw DataError("log-differenced target needs a positive last level");
      return undifference(std::log(last_level), fitted).array().exp().matrix();
    default:
      throw UsageError("cannot undifference transform code " + std::to_string(static_cast<int>(code)));
  }
}

WindowResult run_window(const TimePanel& levels, const HarnessConfig& cfg, Eigen::Index end,
                        const std::vector<std::optional<EmState>>* reuse) {
  const std::size_t n_models = cfg.models.size();
  const std::size_t n_targets = cfg.targets.size();

  WindowResult w;
  w.end = end;
  w.label = levels.index[static_cast<std::size_t>(end)];
  w.mae.assign(n_models, {kNaN, kNaN});
  w.mae_std.assign(n_models, {kNaN, kNaN});
  w.nowcasts.assign(n_models, MatrixXd::Constant(static_cast<Eigen::Index>(n_targets), 2, kNaN));
  w.failure.assign(n_models, "");

  const TimePanel truncated = levels.head(end + 1);
  const TimePanel ragged = ragged_edge(truncated, cfg.lags);
  const TimePanel transformed = transform_data(ragged, cfg.codes);
  const Standardizer target_scale = Standardizer::fit(transformed.values, transformed.mask);

  for (std::size_t m = 0; m < n_models; ++m) {
    const HarnessModel& model = cfg.models[m];
    try {
      FitResult fit;
      if (model.fixed) {
        fit = filter_with(transformed, model.config, *model.fixed);
      } else if (reuse != nullptr && (*reuse)[m]) {
        fit = filter_with(transformed, model.config, *(*reuse)[m]);
      } else {
        fit = sparse_dfm_fit(transformed, model.config);
      }

      std::array<std::vector<double>, 2> errs;
      std::array<std::vector<double>, 2> errs_std;
      for (std::size_t k = 0; k < n_targets; ++k) {
        const Eigen::Index j = cfg.targets[k];
        const int lag = cfg.lags[static_cast<std::size_t>(j)];
        const Eigen::Index first = end + 1 - lag;
        const Eigen::Index horizons = std::min(lag, 2);
        const VectorXd diffs = fit.fitted_unscaled.col(j).segment(first, horizons);
        const double last = first >= 1 ? truncated.values(first - 1, j) : kNaN;
        const VectorXd lv = nowcast_levels(cfg.codes[static_cast<std::size_t>(j)], last, diffs);
        const double sd = target_scale.sds()(j);
        for (Eigen::Index h = 0; h < horizons; ++h) {
          w.nowcasts[m](static_cast<Eigen::Index>(k), h) = lv(h);
          const double err = std::abs(lv(h) - truncated.values(first + h, j));
          errs[static_cast<std::size_t>(h)].push_back(err);
          errs_std[static_cast<std::size_t>(h)].push_back(err / sd);
        }
      }
      for (std::size_t h = 0; h < 2; ++h) {
        w.mae[m][h] = nan_mean(errs[h]);
        w.mae_std[m][h] = nan_mean(errs_std[h]);
      }
    } catch (const std::exception& e) {
      w.failure[m] = e.what();
    }
  }
  return w;
}

unsigned worker_threads() {
  unsigned n = std::max(1u, std::thread::hardware_concurrency());
  if (const char* env = std::getenv("SPARSEDFM_THREADS")) {
    const long v = std::strtol(env, nullptr, 10);
    if (v >= 1) n = static_cast<unsigned>(v);
  }
  return n;
}

HarnessReport run_harness(const TimePanel& levels, const HarnessConfig& cfg) {
  levels.validate();
  cfg.validate(levels);

  HarnessReport rep;
  for (const auto& m : cfg.models) rep.model_names.push_back(m.name);
  const auto n_windows = static_cast<std::size_t>(cfg.end - cfg.start + 1);
  rep.windows.resize(n_windows);

  std::vector<std::optional<EmState>> reuse(cfg.models.size());
  std::size_t first_parallel = 0;
  if (cfg.reuse_params) {
    const TimePanel truncated = levels.head(cfg.start + 1);
    const TimePanel transformed = transform_data(ragged_edge(truncated, cfg.lags), cfg.codes);
    for (std::size_t m = 0; m < cfg.models.size(); ++m) {
      if (cfg.models[m].fixed || cfg.models[m].config.alg == Algorithm::kPCA) continue;
      try {
        reuse[m] = sparse_dfm_fit(transformed, cfg.models[m].config).state;
      } catch (const Error&) {
        // left unset; every window then refits and reports its own failure
      }
    }
    rep.windows[0] = run_window(levels, cfg, cfg.start, &reuse);
    first_parallel = 1;
  }

  std::atomic<std::size_t> next{first_parallel};
  auto worker = [&]() {
    for (std::size_t k = next.fetch_add(1); k < n_windows; k = next.fetch_add(1)) {
      const Eigen::Index end = cfg.start + static_cast<Eigen::Index>(k);
      try {
        rep.windows[k] = run_window(levels, cfg, end, cfg.reuse_params ? &reuse : nullptr);
      } catch (const std::exception& e) {
        WindowResult& w = rep.windows[k];
        w.end = end;
        w.label = levels.index[static_cast<std::size_t>(end)];
        w.mae.assign(cfg.models.size(), {kNaN, kNaN});
        w.mae_std.assign(cfg.models.size(), {kNaN, kNaN});
        w.failure.assign(cfg.models.size(), e.what());
      }
    }
  };
  const unsigned n_threads = std::min<unsigned>(worker_threads(), static_cast<unsigned>(n_windows));
  if (n_threads <= 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (unsigned k = 0; k < n_threads; ++k) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }

  for (std::size_t m = 0; m < cfg.models.size(); ++m) {
    std::array<QuantileSummary, 2> raw{};
    std::array<QuantileSummary, 2> stdz{};
    for (std::size_t h = 0; h < 2; ++h) {
      std::vector<double> e;
      std::vector<double> es;
      for (const auto& w : rep.windows) {
        if (!std::isnan(w.mae[m][h])) e.push_back(w.mae[m][h]);
        if (!std::isnan(w.mae_std[m][h])) es.push_back(w.mae_std[m][h]);
      }
      if (!e.empty()) raw[h] = mae_quantiles(e);
      if (!es.empty()) stdz[h] = mae_quantiles(es);
    }
    rep.summary.push_back(raw);
    rep.summary_std.push_back(stdz);
  }
  return rep;
}

}  // namespace sdfm
