#include "sparsedfm/linalg.hpp"

#include <Eigen/SVD>
#include <unsupported/Eigen/KroneckerProduct>

#include "sparsedfm/error.hpp"

namespace sdfm::linalg {

MatrixXd symmetrize(const MatrixXd& m) { return 0.5 * (m + m.transpose()); }

MatrixXd floor_eigenvalues(const MatrixXd& m, double floor) {
  const MatrixXd s = symmetrize(m);
  Eigen::SelfAdjointEigenSolver<MatrixXd> eig(s);
  if (eig.info() != Eigen::Success) {
    throw NumericalError("eigendecomposition failed while flooring covariance");
  }
  if (eig.eigenvalues().minCoeff() >= floor) return s;
  const VectorXd vals = eig.eigenvalues().cwiseMax(floor);
  return symmetrize(eig.eigenvectors() * vals.asDiagonal() * eig.eigenvectors().transpose());
}

double spectral_norm(const MatrixXd& m) {
  if (m.size() == 0) return 0.0;
  Eigen::JacobiSVD<MatrixXd> svd(m);
  return svd.singularValues()(0);
}

MatrixXd pseudo_inverse(const MatrixXd& m, double rel_tol) {
  Eigen::JacobiSVD<MatrixXd> svd(m, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const VectorXd& s = svd.singularValues();
  const double cutoff = s.size() > 0 ? rel_tol * s(0) : 0.0;
  VectorXd inv = VectorXd::Zero(s.size());
  for (Eigen::Index i = 0; i < s.size(); ++i) {
    if (s(i) > cutoff) inv(i) = 1.0 / s(i);
  }
  return svd.matrixV() * inv.asDiagonal() * svd.matrixU().transpose();
}

MatrixXd spd_inverse(const MatrixXd& m) {
  Eigen::LLT<MatrixXd> llt(m);
  if (llt.info() == Eigen::Success) {
    MatrixXd inv = llt.solve(MatrixXd::Identity(m.rows(), m.cols()));
    if (all_finite(inv)) return symmetrize(inv);
  }
  return symmetrize(pseudo_inverse(m));
}

MatrixXd solve_discrete_lyapunov(const MatrixXd& a, const MatrixXd& q) {
  const Eigen::Index m = a.rows();
  const MatrixXd lhs =
      MatrixXd::Identity(m * m, m * m) - Eigen::kroneckerProduct(a, a).eval();
  const VectorXd rhs = Eigen::Map<const VectorXd>(q.data(), m * m);
  Eigen::FullPivLU<MatrixXd> lu(lhs);
  if (!lu.isInvertible()) {
    throw NumericalError("(I - A (x) A) is singular; transition matrix is not stable");
  }
  const VectorXd vec_p = lu.solve(rhs);
  MatrixXd p = Eigen::Map<const MatrixXd>(vec_p.data(), m, m);
  return symmetrize(p);
}

MatrixXd stabilize(const MatrixXd& a, double max_norm) {
  const double norm = spectral_norm(a);
  if (norm < 1.0) return a;
  return a * (max_norm / norm);
}

bool all_finite(const MatrixXd& m) { return m.allFinite(); }

}  // namespace sdfm::linalg
