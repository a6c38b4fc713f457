#include "sparsedfm/admm.hpp"

#include <cmath>
#include <string>

#include "sparsedfm/error.hpp"
#include "sparsedfm/estimators.hpp"

namespace sdfm {

LoadingsProblem LoadingsProblem::build(const MatrixXd& X, const MaskMatrix& mask,
                                       const SmoothedMoments& moments, const VectorXd& sigma_eps) {
  const Eigen::Index n = X.rows();
  const Eigen::Index p = X.cols();
  const Eigen::Index r = moments.a.cols();
  if (moments.a.rows() != n || sigma_eps.size() != p) throw DataError("LoadingsProblem: shape mismatch");

  LoadingsProblem prob;
  prob.gram.assign(static_cast<std::size_t>(p), MatrixXd::Zero(r, r));
  prob.rhs = MatrixXd::Zero(p, r);
  prob.weight = sigma_eps.cwiseInverse();
  prob.observed = Eigen::VectorXi::Zero(p);
  for (Eigen::Index i = 0; i < p; ++i) {
    MatrixXd& g = prob.gram[static_cast<std::size_t>(i)];
    for (Eigen::Index t = 0; t < n; ++t) {
      if (!mask(t, i)) continue;
      g += moments.S[static_cast<std::size_t>(t + 1)];
      prob.rhs.row(i) += X(t, i) * moments.a.row(t);
      ++prob.observed(i);
    }
  }
  return prob;
}

double LoadingsProblem::objective(const MatrixXd& Lambda) const {
  double total = 0.0;
  for (Eigen::Index i = 0; i < p(); ++i) {
    const VectorXd l = Lambda.row(i).transpose();
    total += weight(i) * (0.5 * l.dot(gram[static_cast<std::size_t>(i)] * l) - rhs.row(i).dot(l));
  }
  return total;
}

MatrixXd solve_dense_loadings(const LoadingsProblem& problem) {
  MatrixXd Lambda(problem.p(), problem.r());
  for (Eigen::Index i = 0; i < problem.p(); ++i) {
    const MatrixXd& g = problem.gram[static_cast<std::size_t>(i)];
    if (problem.observed(i) == 0) {
      throw DataError("variable " + std::to_string(i + 1) + " is never observed; its loadings are not identified");
    }
    const Eigen::LLT<MatrixXd> llt(g);
    VectorXd row;
    if (llt.info() == Eigen::Success) {
      row = llt.solve(problem.rhs.row(i).transpose());
    } else {
      row = linalg::pseudo_inverse(g) * problem.rhs.row(i).transpose();
    }
    Lambda.row(i) = row.transpose();
  }
  return Lambda;
}

MatrixXd soft_threshold(const MatrixXd& m, double t) {
  if (!(t >= 0.0)) throw UsageError("soft_threshold: threshold must be nonnegative");
  return m.unaryExpr([t](double v) {
    const double mag = std::abs(v) - t;
    return mag > 0.0 ? std::copysign(mag, v) : 0.0;
  });
}

namespace {

std::vector<Eigen::LLT<MatrixXd>> factor_rows(const LoadingsProblem& problem, double nu) {
  if (!(nu > 0.0)) throw UsageError("ADMM scaling nu must be positive");
  const Eigen::Index r = problem.r();
  std::vector<Eigen::LLT<MatrixXd>> chol;
  chol.reserve(static_cast<std::size_t>(problem.p()));
  for (Eigen::Index i = 0; i < problem.p(); ++i) {
    MatrixXd sys = problem.weight(i) * problem.gram[static_cast<std::size_t>(i)];
    sys.diagonal().array() += nu;
    chol.emplace_back(sys);
    if (chol.back().info() != Eigen::Success) {
      throw NumericalError("ADMM primal system for variable " + std::to_string(i + 1) + " is singular");
    }
  }
  (void)r;
  return chol;
}

MatrixXd primal_with(const LoadingsProblem& problem, const std::vector<Eigen::LLT<MatrixXd>>& chol,
                     const MatrixXd& Z, const MatrixXd& U, double nu) {
  MatrixXd Lambda(problem.p(), problem.r());
  for (Eigen::Index i = 0; i < problem.p(); ++i) {
    const VectorXd rhs =
        problem.weight(i) * problem.rhs.row(i).transpose() + nu * (Z.row(i) - U.row(i)).transpose();
    Lambda.row(i) = chol[static_cast<std::size_t>(i)].solve(rhs).transpose();
  }
  return Lambda;
}

}  // namespace

MatrixXd admm_lambda_primal(const LoadingsProblem& problem, const MatrixXd& Z, const MatrixXd& U,
                            double nu) {
  return primal_with(problem, factor_rows(problem, nu), Z, U, nu);
}

MatrixXd admm_lambda_primal(const MatrixXd& X, const MaskMatrix& mask,
                            const SmoothedMoments& moments, const VectorXd& sigma_eps,
                            const MatrixXd& Z, const MatrixXd& U, double nu) {
  return admm_lambda_primal(LoadingsProblem::build(X, mask, moments, sigma_eps), Z, U, nu);
}

MatrixXd admm_z_update(const MatrixXd& Lambda, const MatrixXd& U, double alpha, double nu,
                       Eigen::Index q) {
  const MatrixXd v = Lambda + U;
  MatrixXd Z = soft_threshold(v, alpha / nu);
  const Eigen::Index keep = std::min<Eigen::Index>(q, v.rows());
  if (keep > 0) Z.topRows(keep) = v.topRows(keep);
  return Z;
}

double admm_lagrangian(const LoadingsProblem& problem, const MatrixXd& Lambda, const MatrixXd& Z,
                       const MatrixXd& U, double alpha, double nu, Eigen::Index q) {
  const Eigen::Index keep = std::min<Eigen::Index>(q, Z.rows());
  const double l1 = Z.bottomRows(Z.rows() - keep).cwiseAbs().sum();
  return problem.objective(Lambda) + alpha * l1 + 0.5 * nu * (Lambda - Z + U).squaredNorm();
}

std::pair<MatrixXd, AdmmState> admm_solve(const LoadingsProblem& problem, double alpha,
                                          Eigen::Index q, const AdmmState* warm,
                                          const AdmmOptions& options) {
  if (!(alpha >= 0.0)) throw UsageError("ADMM penalty alpha must be nonnegative");
  if (q < 0 || q > problem.p()) throw UsageError("ADMM: q must lie in [0, p]");

  const Eigen::Index p = problem.p();
  const Eigen::Index r = problem.r();
  const double nu = options.nu;
  const auto chol = factor_rows(problem, nu);

  AdmmState st;
  st.nu = nu;
  st.q = q;
  if (warm != nullptr && warm->Z.rows() == p && warm->Z.cols() == r) {
    st.Z = warm->Z;
    st.U = warm->U;
  } else {
    st.Z = solve_dense_loadings(problem);
    st.U = MatrixXd::Zero(p, r);
  }

  const double sqrt_pr = std::sqrt(static_cast<double>(p * r));
  for (int k = 0; k < options.max_iter; ++k) {
    st.Lambda = primal_with(problem, chol, st.Z, st.U, nu);
    const MatrixXd Z_old = st.Z;
    st.Z = admm_z_update(st.Lambda, st.U, alpha, nu, q);
    st.U += st.Lambda - st.Z;
    ++st.iterations;

    const double primal = (st.Lambda - st.Z).norm();
    const double dual = nu * (st.Z - Z_old).norm();
    st.primal_residuals.push_back(primal);
    st.dual_residuals.push_back(dual);

    const double eps_pri = sqrt_pr * options.eps_abs + options.eps_rel * std::max(st.Lambda.norm(), st.Z.norm());
    const double eps_dual = sqrt_pr * options.eps_abs + options.eps_rel * nu * st.U.norm();
    if (primal <= eps_pri && dual <= eps_dual) {
      st.converged = true;
      break;
    }
  }
  if (!st.Lambda.allFinite() || !st.Z.allFinite()) throw NumericalError("ADMM produced non-finite loadings");
  MatrixXd result = st.Z;
  return {std::move(result), std::move(st)};
}

}  // namespace sdfm
