#include "sparsedfm/panel.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <set>
#include <string>

#include "sparsedfm/error.hpp"

namespace sdfm {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

std::string cell_name(const TimePanel& panel, Eigen::Index t, Eigen::Index i) {
  return "row " + std::to_string(t + 1) + ", column '" + panel.names[static_cast<std::size_t>(i)] +
         "'";
}

}  // namespace

MaskMatrix mask_of(const MatrixXd& values) {
  MaskMatrix mask(values.rows(), values.cols());
  for (Eigen::Index j = 0; j < values.cols(); ++j) {
    for (Eigen::Index t = 0; t < values.rows(); ++t) mask(t, j) = !std::isnan(values(t, j));
  }
  return mask;
}

Eigen::Index TimePanel::observed_count() const { return mask.cast<Eigen::Index>().sum(); }

void TimePanel::validate() const {
  if (n() < 2) throw DataError("panel needs at least 2 rows, got " + std::to_string(n()));
  if (p() < 1) throw DataError("panel needs at least 1 column");
  if (mask.rows() != n() || mask.cols() != p()) throw DataError("mask shape differs from values");
  if (static_cast<Eigen::Index>(names.size()) != p()) {
    throw DataError("expected " + std::to_string(p()) + " column names, got " +
                    std::to_string(names.size()));
  }
  if (static_cast<Eigen::Index>(index.size()) != n()) {
    throw DataError("expected " + std::to_string(n()) + " index labels, got " +
                    std::to_string(index.size()));
  }
  std::set<std::string> seen_names(names.begin(), names.end());
  if (seen_names.size() != names.size()) throw DataError("duplicate column names");
  std::set<std::string> seen_index(index.begin(), index.end());
  if (seen_index.size() != index.size()) throw DataError("duplicate time index labels");
  for (Eigen::Index j = 0; j < p(); ++j) {
    for (Eigen::Index t = 0; t < n(); ++t) {
      const double v = values(t, j);
      if (mask(t, j) == std::isnan(v)) {
        throw DataError("mask disagrees with missing sentinel at " + cell_name(*this, t, j));
      }
      if (mask(t, j) && !std::isfinite(v)) {
        throw DataError("non-finite observed value at " + cell_name(*this, t, j));
      }
    }
  }
}

TimePanel TimePanel::from_matrix(MatrixXd values, std::vector<std::string> names,
                                 std::vector<std::string> index) {
  TimePanel panel;
  if (names.empty()) {
    for (Eigen::Index j = 0; j < values.cols(); ++j) names.push_back("V" + std::to_string(j + 1));
  }
  if (index.empty()) {
    for (Eigen::Index t = 0; t < values.rows(); ++t) index.push_back(std::to_string(t + 1));
  }
  panel.mask = mask_of(values);
  panel.values = std::move(values);
  panel.names = std::move(names);
  panel.index = std::move(index);
  panel.validate();
  return panel;
}

TimePanel TimePanel::head(Eigen::Index rows) const {
  if (rows < 2 || rows > n()) throw UsageError("head: row count out of range");
  TimePanel out;
  out.values = values.topRows(rows);
  out.mask = mask.topRows(rows);
  out.names = names;
  out.index.assign(index.begin(), index.begin() + rows);
  return out;
}

// ---------------------------------------------------------------------------
// transforms

TransformCode transform_code_from_int(int code) {
  if (code < 1 || code > 7) {
    throw DataError("unknown transform code " + std::to_string(code) + " (expected 1..7)");
  }
  return static_cast<TransformCode>(code);
}

TimePanel transform_data(const TimePanel& panel, const std::vector<TransformCode>& codes) {
  if (static_cast<Eigen::Index>(codes.size()) != panel.p()) {
    throw DataError("expected " + std::to_string(panel.p()) + " transform codes, got " +
                    std::to_string(codes.size()));
  }
  const Eigen::Index n = panel.n();
  MatrixXd out = MatrixXd::Constant(n, panel.p(), kNaN);

  for (Eigen::Index j = 0; j < panel.p(); ++j) {
    const auto code = codes[static_cast<std::size_t>(j)];
    const int raw = static_cast<int>(code);
    if (raw < 1 || raw > 7) throw DataError("unknown transform code " + std::to_string(raw));

    VectorXd x(n);
    for (Eigen::Index t = 0; t < n; ++t) x(t) = panel.mask(t, j) ? panel.values(t, j) : kNaN;

    const bool uses_log = code == TransformCode::kLogDiff || code == TransformCode::kLogDiff2 ||
                          code == TransformCode::kLogGrowth;
    if (uses_log) {
      for (Eigen::Index t = 0; t < n; ++t) {
        if (panel.mask(t, j) && x(t) <= 0.0) {
          throw DataError("log transform needs positive values; got " + std::to_string(x(t)) +
                          " at " + cell_name(panel, t, j));
        }
      }
      x = x.array().log().matrix();
    }

    auto diff = [n](const VectorXd& v) {
      VectorXd d = VectorXd::Constant(n, kNaN);
      for (Eigen::Index t = 1; t < n; ++t) d(t) = v(t) - v(t - 1);
      return d;
    };

    VectorXd col;
    switch (code) {
      case TransformCode::kNone:
        col = x;
        break;
      case TransformCode::kDiff:
      case TransformCode::kLogDiff:
      case TransformCode::kLogGrowth:
        col = diff(x);
        break;
      case TransformCode::kDiff2:
      case TransformCode::kLogDiff2:
        col = diff(diff(x));
        break;
      case TransformCode::kGrowth:
        col = VectorXd::Constant(n, kNaN);
        for (Eigen::Index t = 1; t < n; ++t) {
          if (panel.mask(t - 1, j) && x(t - 1) == 0.0) {
            throw DataError("growth rate divides by zero at " + cell_name(panel, t - 1, j));
          }
          col(t) = (x(t) - x(t - 1)) / x(t - 1);
        }
        break;
    }
    out.col(j) = col;
  }

  TimePanel result;
  result.mask = mask_of(out);
  result.values = std::move(out);
  result.names = panel.names;
  result.index = panel.index;
  return result;
}

VectorXd undifference(double start_level, const VectorXd& diffs) {
  VectorXd levels(diffs.size());
  double level = start_level;
  for (Eigen::Index k = 0; k < diffs.size(); ++k) {
    level += diffs(k);
    levels(k) = level;
  }
  return levels;
}

// ---------------------------------------------------------------------------
// spline

NaturalCubicSpline::NaturalCubicSpline(std::vector<double> knots, std::vector<double> values)
    : x_(std::move(knots)), y_(std::move(values)) {
  const std::size_t k = x_.size();
  if (k < 2 || y_.size() != k) throw DataError("spline needs at least 2 matching knots");
  for (std::size_t i = 1; i < k; ++i) {
    if (!(x_[i] > x_[i - 1])) throw DataError("spline knots must be strictly increasing");
  }
  m_.assign(k, 0.0);
  if (k == 2) return;

  // Thomas algorithm on the interior second derivatives.
  const std::size_t interior = k - 2;
  std::vector<double> sub(interior), diag(interior), sup(interior), rhs(interior);
  for (std::size_t i = 1; i + 1 < k; ++i) {
    const double h0 = x_[i] - x_[i - 1];
    const double h1 = x_[i + 1] - x_[i];
    sub[i - 1] = h0;
    diag[i - 1] = 2.0 * (h0 + h1);
    sup[i - 1] = h1;
    rhs[i - 1] = 6.0 * ((y_[i + 1] - y_[i]) / h1 - (y_[i] - y_[i - 1]) / h0);
  }
  for (std::size_t i = 1; i < interior; ++i) {
    const double w = sub[i] / diag[i - 1];
    diag[i] -= w * sup[i - 1];
    rhs[i] -= w * rhs[i - 1];
  }
  std::vector<double> sol(interior);
  sol[interior - 1] = rhs[interior - 1] / diag[interior - 1];
  for (std::size_t i = interior - 1; i-- > 0;) {
    sol[i] = (rhs[i] - sup[i] * sol[i + 1]) / diag[i];
  }
  for (std::size_t i = 0; i < interior; ++i) m_[i + 1] = sol[i];
}

double NaturalCubicSpline::operator()(double x) const {
  const auto upper = std::upper_bound(x_.begin(), x_.end(), x);
  std::size_t i = upper == x_.begin() ? 0 : static_cast<std::size_t>(upper - x_.begin()) - 1;
  if (i + 1 >= x_.size()) i = x_.size() - 2;
  const double h = x_[i + 1] - x_[i];
  const double a = x_[i + 1] - x;
  const double b = x - x_[i];
  return m_[i] * a * a * a / (6.0 * h) + m_[i + 1] * b * b * b / (6.0 * h) +
         (y_[i] / h - m_[i] * h / 6.0) * a + (y_[i + 1] / h - m_[i + 1] * h / 6.0) * b;
}

// ---------------------------------------------------------------------------
// fill_na

BalancedPanel fill_na(const TimePanel& panel) {
  const Eigen::Index n = panel.n();
  BalancedPanel out{panel.values, panel.mask};

  for (Eigen::Index j = 0; j < panel.p(); ++j) {
    std::vector<double> knots;
    std::vector<double> obs;
    for (Eigen::Index t = 0; t < n; ++t) {
      if (panel.mask(t, j)) {
        knots.push_back(static_cast<double>(t));
        obs.push_back(panel.values(t, j));
      }
    }
    if (knots.size() < 4) {
      throw DataError("column '" + panel.names[static_cast<std::size_t>(j)] + "' has " +
                      std::to_string(knots.size()) + " observations; fill_na needs at least 4");
    }
    if (static_cast<Eigen::Index>(knots.size()) == n) continue;

    const auto first = static_cast<Eigen::Index>(knots.front());
    const auto last = static_cast<Eigen::Index>(knots.back());

    const NaturalCubicSpline spline(knots, obs);
    for (Eigen::Index t = first + 1; t < last; ++t) {
      if (!panel.mask(t, j)) out.values(t, j) = spline(static_cast<double>(t));
    }

    if (first == 0 && last == n - 1) continue;

    std::vector<double> sorted = obs;
    std::sort(sorted.begin(), sorted.end());
    const std::size_t k = sorted.size();
    const double median = k % 2 == 1 ? sorted[k / 2] : 0.5 * (sorted[k / 2 - 1] + sorted[k / 2]);

    for (Eigen::Index t = 0; t < first; ++t) out.values(t, j) = median;
    for (Eigen::Index t = last + 1; t < n; ++t) out.values(t, j) = median;

    // Centred MA(3) over the boundary fills only; windows shrink at the ends.
    const VectorXd pre = out.values.col(j);
    auto smooth = [&](Eigen::Index t) {
      const Eigen::Index lo = std::max<Eigen::Index>(0, t - 1);
      const Eigen::Index hi = std::min<Eigen::Index>(n - 1, t + 1);
      out.values(t, j) = pre.segment(lo, hi - lo + 1).mean();
    };
    for (Eigen::Index t = 0; t < first; ++t) smooth(t);
    for (Eigen::Index t = last + 1; t < n; ++t) smooth(t);
  }
  return out;
}

// ---------------------------------------------------------------------------
// standardization

Standardizer::Standardizer(VectorXd means, VectorXd sds) : means_(std::move(means)), sds_(std::move(sds)) {
  if (means_.size() != sds_.size()) throw UsageError("standardizer means/sds length mismatch");
}

Standardizer Standardizer::fit(const MatrixXd& values, const MaskMatrix& mask) {
  const Eigen::Index p = values.cols();
  VectorXd means(p), sds(p);
  for (Eigen::Index j = 0; j < p; ++j) {
    double sum = 0.0;
    Eigen::Index count = 0;
    for (Eigen::Index t = 0; t < values.rows(); ++t) {
      if (mask(t, j)) {
        sum += values(t, j);
        ++count;
      }
    }
    if (count < 2) {
      throw DataError("column " + std::to_string(j + 1) + " has fewer than 2 observed cells");
    }
    const double mean = sum / static_cast<double>(count);
    double ss = 0.0;
    for (Eigen::Index t = 0; t < values.rows(); ++t) {
      if (mask(t, j)) ss += (values(t, j) - mean) * (values(t, j) - mean);
    }
    const double sd = std::sqrt(ss / static_cast<double>(count - 1));
    if (!(sd > 0.0)) {
      throw DataError("column " + std::to_string(j + 1) + " has zero variance");
    }
    means(j) = mean;
    sds(j) = sd;
  }
  return Standardizer(std::move(means), std::move(sds));
}

Standardizer Standardizer::identity(Eigen::Index p) {
  return Standardizer(VectorXd::Zero(p), VectorXd::Ones(p));
}

MatrixXd Standardizer::scale(const MatrixXd& values) const {
  return (values.rowwise() - means_.transpose()).array().rowwise() / sds_.transpose().array();
}

MatrixXd Standardizer::unscale(const MatrixXd& values) const {
  return (values.array().rowwise() * sds_.transpose().array()).matrix().rowwise() +
         means_.transpose();
}

VectorXd Standardizer::unscale_row(const VectorXd& row) const {
  return row.cwiseProduct(sds_) + means_;
}

std::pair<MatrixXd, Standardizer> standardize(const MatrixXd& values, const MaskMatrix& mask) {
  Standardizer st = Standardizer::fit(values, mask);
  MatrixXd scaled = st.scale(values);
  for (Eigen::Index j = 0; j < values.cols(); ++j) {
    for (Eigen::Index t = 0; t < values.rows(); ++t) {
      if (!mask(t, j)) scaled(t, j) = kNaN;
    }
  }
  return {std::move(scaled), std::move(st)};
}

std::pair<TimePanel, Standardizer> standardize(const TimePanel& panel) {
  auto [scaled, st] = standardize(panel.values, panel.mask);
  TimePanel out = panel;
  out.values = std::move(scaled);
  return {std::move(out), std::move(st)};
}

// ---------------------------------------------------------------------------

TimePanel ragged_edge(const TimePanel& panel, const std::vector<int>& lags) {
  if (static_cast<Eigen::Index>(lags.size()) != panel.p()) {
    throw DataError("expected " + std::to_string(panel.p()) + " ragged-edge lags, got " +
                    std::to_string(lags.size()));
  }
  TimePanel out = panel;
  for (Eigen::Index j = 0; j < panel.p(); ++j) {
    const int lag = lags[static_cast<std::size_t>(j)];
    if (lag < 0 || lag >= panel.n()) {
      throw DataError("ragged-edge lag " + std::to_string(lag) + " for column '" +
                      panel.names[static_cast<std::size_t>(j)] + "' must lie in [0, n)");
    }
    for (Eigen::Index t = panel.n() - lag; t < panel.n(); ++t) {
      out.values(t, j) = kNaN;
      out.mask(t, j) = false;
    }
  }
  return out;
}

std::vector<MissingSummaryRow> missing_summary(const TimePanel& panel) {
  std::vector<MissingSummaryRow> rows;
  rows.reserve(static_cast<std::size_t>(panel.p()));
  for (Eigen::Index j = 0; j < panel.p(); ++j) {
    MissingSummaryRow row;
    row.column = panel.names[static_cast<std::size_t>(j)];
    Eigen::Index t = 0;
    while (t < panel.n()) {
      if (panel.mask(t, j)) {
        ++t;
        continue;
      }
      const Eigen::Index start = t;
      while (t < panel.n() && !panel.mask(t, j)) ++t;
      row.runs.emplace_back(start, t - start);
      row.missing_count += t - start;
    }
    rows.push_back(std::move(row));
  }
  return rows;
}

}  // namespace sdfm
