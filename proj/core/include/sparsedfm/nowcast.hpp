#pragma once

#include <array>
#include <optional>
#include <string>
#include <vector>

#include "sparsedfm/model.hpp"
#include "sparsedfm/panel.hpp"

namespace sdfm {

struct HarnessModel {
  std::string name;
  FitConfig config;
  // When set, the window panel is smoothed with these parameters and nothing
  // is estimated (an oracle on simulated data).
  std::optional<EmState> fixed;
};

struct HarnessConfig {
  std::vector<Eigen::Index> targets;  // column indices
  std::vector<int> lags;              // ragged-edge lag per column
  Eigen::Index start = 0;             // first window end row (0-based, inclusive)
  Eigen::Index end = 0;               // last window end row
  std::vector<TransformCode> codes;   // per column; targets must use 1, 2, 4 or 7
  std::vector<HarnessModel> models;
  // Fit once at the first window and only rerun the smoother afterwards.
  bool reuse_params = false;

  void validate(const TimePanel& levels) const;
};

struct WindowResult {
  Eigen::Index end = 0;
  std::string label;
  // Indexed by model, then horizon (0 = first missing month). NaN when the
  // model failed or no target has that horizon.
  std::vector<std::array<double, 2>> mae;
  std::vector<std::array<double, 2>> mae_std;
  // Level nowcasts per model: targets x 2 (NaN where a target has lag 1).
  std::vector<MatrixXd> nowcasts;
  std::vector<std::string> failure;  // empty string = success
};

/// Mean and empirical quantiles with linear interpolation between order
/// statistics: q(p) = x[floor(h)] + (h - floor(h)) (x[floor(h)+1] - x[floor(h)]),
/// h = (count - 1) p on the sorted sample.
struct QuantileSummary {
  double mean = 0.0;
  double q0 = 0.0;
  double q25 = 0.0;
  double q50 = 0.0;
  double q75 = 0.0;
  double q100 = 0.0;
  std::size_t count = 0;
};

QuantileSummary mae_quantiles(std::vector<double> errors);

struct HarnessReport {
  std::vector<std::string> model_names;
  std::vector<WindowResult> windows;
  std::vector<std::array<QuantileSummary, 2>> summary;      // per model, per horizon
  std::vector<std::array<QuantileSummary, 2>> summary_std;  // per-target standardized errors
};

/// Undifferences a nowcast for one target. `fitted` holds the model's values
/// on the transformed scale at the consecutive missing months; `last_level`
/// is the last observed level before them.
VectorXd nowcast_levels(TransformCode code, double last_level, const VectorXd& fitted);

/// One expanding window ending at row `end`. Reads no level beyond `end`.
/// `reuse` (one entry per model) supplies parameters for the smoother-only mode.
WindowResult run_window(const TimePanel& levels, const HarnessConfig& config, Eigen::Index end,
                        const std::vector<std::optional<EmState>>* reuse = nullptr);

/// Windows run in parallel, capped by the SPARSEDFM_THREADS environment variable.
HarnessReport run_harness(const TimePanel& levels, const HarnessConfig& config);

/// Worker count from SPARSEDFM_THREADS (default: hardware concurrency).
unsigned worker_threads();

}  // namespace sdfm
