#pragma once

#include <cstdint>
#include <optional>

#include "sparsedfm/linalg.hpp"
#include "sparsedfm/panel.hpp"

namespace sdfm {

/// Exact DFM parameters: X_t = Lambda F_t + eps_t, F_t = A F_{t-1} + u_t,
/// with Var(eps_t) = diag(sigma_eps) and F_0 ~ N(alpha0, P0).
struct DfmParams {
  MatrixXd Lambda;     // p x r
  MatrixXd A;          // r x r
  MatrixXd Sigma_u;    // r x r
  VectorXd sigma_eps;  // p idiosyncratic variances
  VectorXd alpha0;     // r
  MatrixXd P0;         // r x r

  Eigen::Index p() const { return Lambda.rows(); }
  Eigen::Index r() const { return Lambda.cols(); }

  /// Throws DataError on shape mismatches, UsageError on violated invariants
  /// (non-positive variances, asymmetric or indefinite covariances, ||A|| >= 1).
  void validate() const;
};

/// AR(1) idiosyncratic dynamics: eps_{i,t} = phi_i eps_{i,t-1} + e_{i,t} plus
/// N(0, kappa) measurement jitter.
struct Ar1Params {
  static constexpr double kDefaultKappa = 1e-8;

  VectorXd phi;      // p
  VectorXd sigma_e;  // p innovation variances
  double kappa = kDefaultKappa;

  void validate(Eigen::Index p) const;
};

/// State-space system with the AR(1) errors stacked under the factors.
struct AugmentedSystem {
  MatrixXd Lambda_aug;   // p x (r+p) = [Lambda | I]
  MatrixXd A_aug;        // blkdiag(A, diag(phi))
  MatrixXd Sigma_u_aug;  // blkdiag(Sigma_u, diag(sigma_e))
  VectorXd sigma_meas;   // p, all kappa
  VectorXd alpha0_aug;
  MatrixXd P0_aug;
};

/// The AR(1) block of the initial state uses its stationary distribution,
/// N(0, sigma_e / (1 - phi^2)).
AugmentedSystem build_ar1_augmented(const DfmParams& params, const Ar1Params& ar1);

struct SimulationConfig {
  Eigen::Index n = 100;
  Eigen::Index p = 20;
  Eigen::Index r = 2;
  std::uint64_t seed = 1;
  double missing_frac = 0.0;

  double a_diag = 0.8;  // A = a_diag * I_r, Sigma_u = (1 - a_diag^2) I_r
  double sigma_eps = 1.0;
  // When set, idiosyncratic errors follow AR(1) with this coefficient and
  // innovation variance sigma_eps * (1 - phi^2) (unit marginal variance).
  std::optional<double> ar1_phi;
  // Block-sparse loadings: variable i loads only on factor block(i), where
  // blocks are contiguous with sizes given by `block_sizes` (must sum to p).
  // Non-zero loadings are +-U(block_low, block_high). Empty = dense N(0, 1).
  std::vector<Eigen::Index> block_sizes;
  double block_low = 0.5;
  double block_high = 1.5;
};

struct Simulation {
  TimePanel panel;
  DfmParams params;
  MatrixXd factors;  // n x r
  std::optional<Ar1Params> ar1;
};

/// Draws a panel from a DFM with Lambda ~ N(0, 1), Sigma_eps = I,
/// A = 0.8 I_r, Sigma_u = (1 - 0.8^2) I_r. The initial factor is drawn from
/// the stationary distribution. Exactly round(missing_frac * n * p) cells are
/// masked, chosen uniformly at random.
///
/// Draw order (for reproduction): loadings row-major, F_0, then for each t
/// the factor innovations followed by the p idiosyncratic draws, then the
/// missing-cell selection by partial Fisher-Yates over row-major cell ids.
Simulation simulate_dfm(const SimulationConfig& config);
Simulation simulate_dfm(Eigen::Index n, Eigen::Index p, Eigen::Index r, std::uint64_t seed,
                        double missing_frac);

}  // namespace sdfm
