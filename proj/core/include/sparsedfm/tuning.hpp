#pragma once

#include <optional>
#include <vector>

#include "sparsedfm/estimators.hpp"
#include "sparsedfm/panel.hpp"

namespace sdfm {

/// count values 10^x, x equally spaced on [lo_exp, hi_exp]. Requires
/// count >= 2 and lo_exp < hi_exp.
std::vector<double> logspace(double lo_exp, double hi_exp, int count);

/// Bai-Ng information criteria for r = 1..r_max.
struct IcTable {
  std::vector<Eigen::Index> r;
  std::vector<double> V;  // mean squared PCA residual
  std::vector<double> ic1;
  std::vector<double> ic2;
  std::vector<double> ic3;
  std::vector<double> variance_share;  // eigenvalue / trace, for the first r_max eigenvalues
  Eigen::Index chosen_ic1 = 0;
  Eigen::Index chosen_ic2 = 0;
  Eigen::Index chosen_ic3 = 0;
  int ic_type = 2;

  Eigen::Index chosen() const;
};

/// min(15, p - 1), further capped so that PCA stays defined.
Eigen::Index default_r_max(Eigen::Index n, Eigen::Index p);

/// Fills, standardizes, and runs PCA for each r. Ties go to the smaller r.
IcTable tune_factors(const TimePanel& panel, Eigen::Index r_max, int ic_type = 2);

/// log(V) + m log(np) / (np).
double bic_alpha(double V, Eigen::Index m, Eigen::Index n, Eigen::Index p);

/// Mean squared residual of Lambda a_{t|n} against the observed cells.
double observed_rss(const TimePanel& panel, const MatrixXd& Lambda, const MatrixXd& factors);

struct AlphaPoint {
  double alpha = 0.0;
  double bic = 0.0;
  double V = 0.0;
  Eigen::Index nonzero = 0;
  bool converged = false;
  int em_iterations = 0;
  bool degenerate = false;  // some loading column entirely zero
};

struct AlphaPath {
  std::vector<AlphaPoint> points;  // ascending alpha, completed grid points only
  double alpha_opt = 0.0;
  std::size_t opt_index = 0;
  std::optional<std::size_t> stop_index;  // index of the degenerate point, if the sweep stopped
  int total_em_iterations = 0;
};

struct AlphaSearch {
  AlphaPath path;
  Estimate best;
  std::vector<Estimate> stored;  // one per completed point when requested
};

/// Warm-started EM-sparse sweep over ascending alphas, stopping at the first
/// fit with an all-zero loading column. The selected fit minimizes BIC among
/// non-degenerate fits; ties go to the larger alpha.
AlphaSearch alpha_grid_search(const TimePanel& panel, Eigen::Index r, std::vector<double> alphas,
                              Eigen::Index q, const EmOptions& options, bool store_all = false);

}  // namespace sdfm
