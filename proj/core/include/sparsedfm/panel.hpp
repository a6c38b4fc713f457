#pragma once

#include <cstddef>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "sparsedfm/linalg.hpp"

namespace sdfm {

using MaskMatrix = Eigen::Matrix<bool, Eigen::Dynamic, Eigen::Dynamic>;

/// An n x p panel of time series. `values` stores NaN in missing cells but the
/// mask is the source of truth (true = observed).
struct TimePanel {
  MatrixXd values;
  MaskMatrix mask;
  std::vector<std::string> names;
  std::vector<std::string> index;

  Eigen::Index n() const { return values.rows(); }
  Eigen::Index p() const { return values.cols(); }
  bool observed(Eigen::Index t, Eigen::Index i) const { return mask(t, i); }
  Eigen::Index observed_count() const;

  /// Throws DataError when an invariant is violated: shape, labels, or a
  /// mask that disagrees with the NaN sentinel.
  void validate() const;

  /// Builds a panel from a matrix with NaN for missing cells. Empty `names`
  /// become V1..Vp and an empty `index` becomes 1..n.
  static TimePanel from_matrix(MatrixXd values, std::vector<std::string> names = {},
                               std::vector<std::string> index = {});

  /// Rows [0, rows) as a new panel.
  TimePanel head(Eigen::Index rows) const;
};

/// Builds the observed-cell mask of a matrix (false where NaN).
MaskMatrix mask_of(const MatrixXd& values);

/// Stationarity transform codes: 1 none, 2 first difference, 3 second
/// difference, 4 log first difference, 5 log second difference, 6 growth
/// rate, 7 log growth rate.
enum class TransformCode : int {
  kNone = 1,
  kDiff = 2,
  kDiff2 = 3,
  kLogDiff = 4,
  kLogDiff2 = 5,
  kGrowth = 6,
  kLogGrowth = 7,
};

TransformCode transform_code_from_int(int code);

TimePanel transform_data(const TimePanel& panel, const std::vector<TransformCode>& codes);

/// Inverse of a first difference: level_0 + cumulative sums of `diffs`.
VectorXd undifference(double start_level, const VectorXd& diffs);

/// Natural cubic spline (zero second derivative at both boundary knots).
class NaturalCubicSpline {
 public:
  NaturalCubicSpline(std::vector<double> knots, std::vector<double> values);
  double operator()(double x) const;

  const std::vector<double>& second_derivatives() const { return m_; }

 private:
  std::vector<double> x_;
  std::vector<double> y_;
  std::vector<double> m_;
};

struct BalancedPanel {
  MatrixXd values;
  MaskMatrix mask;  // original observation mask; false marks imputed cells
};

/// Fills internal gaps with a natural cubic spline over each column's
/// observed points, and leading/trailing gaps with the column median followed
/// by a centred MA(3) pass over the filled stretch. Observed cells are never
/// modified. Each column needs at least 4 observations.
BalancedPanel fill_na(const TimePanel& panel);

class Standardizer {
 public:
  Standardizer() = default;
  Standardizer(VectorXd means, VectorXd sds);

  /// Column means and sds (n_obs - 1 denominator) over observed cells.
  static Standardizer fit(const MatrixXd& values, const MaskMatrix& mask);
  /// Identity transform for p columns.
  static Standardizer identity(Eigen::Index p);

  MatrixXd scale(const MatrixXd& values) const;
  MatrixXd unscale(const MatrixXd& values) const;
  /// Unscales a single row vector.
  VectorXd unscale_row(const VectorXd& row) const;

  const VectorXd& means() const { return means_; }
  const VectorXd& sds() const { return sds_; }

 private:
  VectorXd means_;
  VectorXd sds_;
};

std::pair<MatrixXd, Standardizer> standardize(const MatrixXd& values, const MaskMatrix& mask);

/// Standardized copy of a panel (missing cells stay missing).
std::pair<TimePanel, Standardizer> standardize(const TimePanel& panel);

/// Sets the final lags[i] rows of column i missing.
TimePanel ragged_edge(const TimePanel& panel, const std::vector<int>& lags);

struct MissingSummaryRow {
  std::string column;
  Eigen::Index missing_count = 0;
  // (first row, run length) for each maximal run of missing rows
  std::vector<std::pair<Eigen::Index, Eigen::Index>> runs;
};

std::vector<MissingSummaryRow> missing_summary(const TimePanel& panel);

}  // namespace sdfm
