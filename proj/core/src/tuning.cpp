#include "sparsedfm/tuning.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "sparsedfm/error.hpp"

namespace sdfm {

std::vector<double> logspace(double lo_exp, double hi_exp, int count) {
  if (count < 2) throw UsageError("logspace needs at least 2 points");
  if (!(lo_exp < hi_exp)) throw UsageError("logspace needs lo < hi");
  std::vector<double> out(static_cast<std::size_t>(count));
  const double step = (hi_exp - lo_exp) / static_cast<double>(count - 1);
  for (int k = 0; k < count; ++k) {
    const double x = k == count - 1 ? hi_exp : lo_exp + step * static_cast<double>(k);
    out[static_cast<std::size_t>(k)] = std::pow(10.0, x);
  }
  return out;
}

Eigen::Index IcTable::chosen() const {
  switch (ic_type) {
    case 1: return chosen_ic1;
    case 3: return chosen_ic3;
    default: return chosen_ic2;
  }
}

Eigen::Index default_r_max(Eigen::Index n, Eigen::Index p) {
  return std::max<Eigen::Index>(1, std::min<Eigen::Index>({15, p - 1, n - 1}));
}

namespace {

Eigen::Index argmin_first(const std::vector<double>& v, const std::vector<Eigen::Index>& r) {
  std::size_t best = 0;
  for (std::size_t k = 1; k < v.size(); ++k) {
    if (v[k] < v[best]) best = k;
  }
  return r[best];
}

}  // namespace

IcTable tune_factors(const TimePanel& panel, Eigen::Index r_max, int ic_type) {
  panel.validate();
  if (ic_type < 1 || ic_type > 3) throw UsageError("IC type must be 1, 2 or 3");
  const Eigen::Index n = panel.n();
  const Eigen::Index p = panel.p();
  if (r_max < 1 || r_max >= std::min(n, p)) {
    throw UsageError("r_max must satisfy 1 <= r_max < min(n, p) (got " + std::to_string(r_max) + ")");
  }

  const BalancedPanel filled = fill_na(panel);
  const MaskMatrix all = MaskMatrix::Constant(n, p, true);
  const MatrixXd X = standardize(filled.values, all).first;

  const double np = static_cast<double>(n * p);
  const double nplusp = static_cast<double>(n + p);
  const double c2 = static_cast<double>(std::min(n, p));

  IcTable tab;
  tab.ic_type = ic_type;
  VectorXd eigenvalues;
  for (Eigen::Index r = 1; r <= r_max; ++r) {
    const PcaResult pca = pca_estimate(X, r);
    if (r == 1) eigenvalues = pca.eigenvalues;
    const double V = (X - pca.F * pca.Lambda.transpose()).squaredNorm() / np;
    const double logV = std::log(std::max(V, 1e-300));
    const double rr = static_cast<double>(r);
    tab.r.push_back(r);
    tab.V.push_back(V);
    tab.ic1.push_back(logV + rr * (nplusp / np) * std::log(np / nplusp));
    tab.ic2.push_back(logV + rr * (nplusp / np) * std::log(c2));
    tab.ic3.push_back(logV + rr * std::log(c2) / c2);
  }
  const double trace = eigenvalues.sum();
  for (Eigen::Index k = 0; k < r_max; ++k) {
    tab.variance_share.push_back(trace > 0.0 ? std::clamp(eigenvalues(k) / trace, 0.0, 1.0) : 0.0);
  }
  tab.chosen_ic1 = argmin_first(tab.ic1, tab.r);
  tab.chosen_ic2 = argmin_first(tab.ic2, tab.r);
  tab.chosen_ic3 = argmin_first(tab.ic3, tab.r);
  return tab;
}

double bic_alpha(double V, Eigen::Index m, Eigen::Index n, Eigen::Index p) {
  if (!(V > 0.0)) throw NumericalError("BIC needs a positive residual variance");
  const double np = static_cast<double>(n * p);
  return std::log(V) + static_cast<double>(m) * std::log(np) / np;
}

double observed_rss(const TimePanel& panel, const MatrixXd& Lambda, const MatrixXd& factors) {
  const MatrixXd fit = factors * Lambda.transpose();
  double acc = 0.0;
  Eigen::Index cnt = 0;
  for (Eigen::Index i = 0; i < panel.p(); ++i) {
    for (Eigen::Index t = 0; t < panel.n(); ++t) {
      if (!panel.mask(t, i)) continue;
      const double e = panel.values(t, i) - fit(t, i);
      acc += e * e;
      ++cnt;
    }
  }
  if (cnt == 0) throw DataError("panel has no observed cells");
  return acc / static_cast<double>(cnt);
}

AlphaSearch alpha_grid_search(const TimePanel& panel, Eigen::Index r, std::vector<double> alphas,
                              Eigen::Index q, const EmOptions& options, bool store_all) {
  if (alphas.empty()) throw UsageError("alpha grid is empty");
  std::sort(alphas.begin(), alphas.end());
  alphas.erase(std::unique(alphas.begin(), alphas.end()), alphas.end());
  if (alphas.front() < 0.0) throw UsageError("alphas must be nonnegative");

  AlphaSearch out;
  std::optional<Estimate> prev;
  std::optional<std::size_t> best;
  double best_bic = 0.0;

  for (double alpha : alphas) {
    const EmState* warm = prev ? &prev->state : nullptr;
    Estimate est = em_fit(panel, r, options, SparsePenalty{alpha, q}, warm);

    const MatrixXd& L = est.state.params.Lambda;
    AlphaPoint pt;
    pt.alpha = alpha;
    pt.nonzero = (L.array() != 0.0).count();
    pt.converged = est.log.converged;
    pt.em_iterations = est.log.iterations;
    pt.degenerate = ((L.array() != 0.0).colwise().count() == 0).any();
    pt.V = observed_rss(panel, L, est.kfs.a_smooth.leftCols(r));
    pt.bic = bic_alpha(pt.V, pt.nonzero, panel.n(), panel.p());
    out.path.total_em_iterations += pt.em_iterations;

    const std::size_t idx = out.path.points.size();
    out.path.points.push_back(pt);
    if (store_all) out.stored.push_back(est);

    if (pt.degenerate) {
      if (idx == 0) {
        throw UsageError("the smallest alpha (" + std::to_string(alpha) +
                         ") already zeroes a loading column; start the grid lower");
      }
      out.path.stop_index = idx;
      break;
    }
    if (!best || pt.bic <= best_bic) {
      best = idx;
      best_bic = pt.bic;
      out.best = est;
    }
    prev = std::move(est);
  }
  out.path.opt_index = *best;
  out.path.alpha_opt = out.path.points[*best].alpha;
  return out;
}

}  // namespace sdfm
