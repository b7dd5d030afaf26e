#pragma once

// Damped (Levenberg-Marquardt) nonlinear least squares on a real residual
// vector. Fitters in this library pre-scale their parameters so that each
// internal coordinate is of order one; step and finite-difference sizes are
// chosen with that in mind.

#include <Eigen/Dense>
#include <functional>

namespace scres {

struct LeastSquaresOptions {
  int max_iterations = 200;
  double step_tolerance = 1e-10;  // max |dx_i| / max(1, |x|_inf)
  double fd_step = 1e-6;          // central-difference step in internal units
  double initial_damping = 1e-3;
};

struct LeastSquaresResult {
  Eigen::VectorXd x;
  Eigen::VectorXd residuals;
  Eigen::MatrixXd jacobian;
  /// s^2 (J^T J)^+ with s^2 = |r|^2 / (m - n); rank-deficient directions get
  /// infinite variance on the affected diagonal entries.
  Eigen::MatrixXd covariance;
  double cost = 0.0;  // 0.5 |r|^2
  int iterations = 0;
  int rank = 0;
  bool converged = false;
};

/// Residual callback: fills r for the given parameters and returns false if
/// the parameters fall outside the model's domain (the step is then rejected).
using ResidualFunction = std::function<bool(const Eigen::VectorXd& x, Eigen::VectorXd& r)>;

/// Minimizes 0.5 |r(x)|^2 from x0. Throws Error(NonConvergence) if x0 is
/// outside the domain or max_iterations pass without meeting the step test.
LeastSquaresResult levenberg_marquardt(const ResidualFunction& residual, Eigen::VectorXd x0,
                                       const LeastSquaresOptions& options = {});

/// Central-difference Jacobian; returns false if any probe leaves the domain.
bool numeric_jacobian(const ResidualFunction& residual, const Eigen::VectorXd& x,
                      const Eigen::VectorXd& r0, double step, Eigen::MatrixXd& jacobian);

/// Covariance estimate from a Jacobian and residual at the optimum.
Eigen::MatrixXd covariance_from_jacobian(const Eigen::MatrixXd& jacobian, const Eigen::VectorXd& residuals,
                                         int* rank_out = nullptr);

}  // namespace scres
