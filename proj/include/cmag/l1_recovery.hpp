// SPDX-License-Identifier: Apache-2.0
//
// l1 recovery: basis pursuit (min |x|_1 s.t. Ax = y), basis pursuit
// denoising (min |x|_1 s.t. |y - Ax|_2 <= eps), an exact dense-simplex LP
// oracle for small problems, and best S-term approximation.
//
// The default method follows the lasso homotopy path down to the requested
// residual, keeping an updatable Cholesky factor of the active Gram matrix.
// ADMM with soft-thresholding is the fallback when the path degenerates.
// Either way a returned solution is checked against an explicit dual point,
// so duality_gap_estimate is a bound, not a heuristic.

#pragma once

#include <cstddef>
#include <vector>

#include <Eigen/Dense>

#include "cmag/sensing_matrix.hpp"

namespace cmag {

enum class SolverMethod { homotopy, admm };

struct SolverOptions {
  SolverMethod method = SolverMethod::homotopy;
  int max_homotopy_steps = 0;     // 0 means 10 m + 100
  double feasibility_tol = 1e-9;  // relative: |y - Ax| <= tol * |y| (bp), eps * (1 + 1e-6) (bpdn)
  double optimality_tol = 1e-7;   // relative duality gap
  int max_iterations = 50000;     // ADMM
  double rho = 0.0;               // ADMM penalty; 0 picks one from the data scale
  bool polish = true;
  int polish_interval = 20;
  bool use_fast_transform = true;  // use the Walsh butterfly for subsampled Walsh matrices
};

struct RecoveryProblem {
  SensingMatrix A;
  Eigen::VectorXd y;
  double epsilon = 0.0;  // 0 selects the equality-constrained program
};

struct RecoveryResult {
  Eigen::VectorXd x_star;
  double l1_value = 0.0;
  double residual_norm = 0.0;
  int iterations = 0;  // homotopy path steps or ADMM iterations
  bool converged = false;
  bool polished = false;
  double duality_gap_estimate = 0.0;  // absolute, |x|_1 minus a dual lower bound
};

RecoveryResult basis_pursuit(const SensingMatrix& A, const Eigen::VectorXd& y, const SolverOptions& opts = {});

RecoveryResult bpdn(const SensingMatrix& A, const Eigen::VectorXd& y, double epsilon,
                    const SolverOptions& opts = {});

/// Dispatches on problem.epsilon.
RecoveryResult solve(const RecoveryProblem& problem, const SolverOptions& opts = {});

struct LpOracleResult {
  Eigen::VectorXd x;
  double objective = 0.0;
  int pivots = 0;
};

inline constexpr int kLpOracleMaxDim = 24;

/// min |x|_1 s.t. Ax = y as an LP in (x+, x-) >= 0, two-phase dense simplex
/// with Bland's rule. Throws infeasible error or oracle_failure.
LpOracleResult lp_oracle(const Eigen::MatrixXd& A, const Eigen::VectorXd& y);

/// Keeps the S largest-magnitude entries (lowest index wins ties).
Eigen::VectorXd compress(const Eigen::VectorXd& x, std::size_t S);

/// Packs measurements of sum_k x_k psi_k against phi_j, j in M, as
/// A = R Phi^T Psi with y = measured values.
RecoveryProblem synthesis_problem(const OrthonormalBasis& phi, const OrthonormalBasis& psi,
                                  const std::vector<std::size_t>& M, const Eigen::VectorXd& measured);

/// Right-hand side of the noisy recovery bound: C3 |x - x_S|_1 / sqrt(S) + eps.
double recovery_error_bound(const Eigen::VectorXd& x, std::size_t S, double C3, double epsilon);

}  // namespace cmag
