#include "scres/least_squares.hpp"

#include <cmath>
#include <limits>

#include "scres/error.hpp"

namespace scres {

bool numeric_jacobian(const ResidualFunction& residual, const Eigen::VectorXd& x, const Eigen::VectorXd& r0,
                      double step, Eigen::MatrixXd& jacobian) {
  const auto n = x.size();
  jacobian.resize(r0.size(), n);
  Eigen::VectorXd xp = x;
  Eigen::VectorXd rp(r0.size());
  Eigen::VectorXd rm(r0.size());
  for (Eigen::Index j = 0; j < n; ++j) {
    const double h = step * std::max(1.0, std::abs(x[j]));
    xp[j] = x[j] + h;
    const bool up = residual(xp, rp);
    xp[j] = x[j] - h;
    const bool down = residual(xp, rm);
    xp[j] = x[j];
    if (up && down) {
      jacobian.col(j) = (rp - rm) / (2.0 * h);
    } else if (up) {
      jacobian.col(j) = (rp - r0) / h;
    } else if (down) {
      jacobian.col(j) = (r0 - rm) / h;
    } else {
      return false;
    }
  }
  return true;
}

Eigen::MatrixXd covariance_from_jacobian(const Eigen::MatrixXd& jacobian, const Eigen::VectorXd& residuals,
                                         int* rank_out) {
  const auto m = jacobian.rows();
  const auto n = jacobian.cols();
  const double dof = static_cast<double>(std::max<Eigen::Index>(1, m - n));
  const double s2 = residuals.squaredNorm() / dof;

  Eigen::JacobiSVD<Eigen::MatrixXd> svd(jacobian, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const Eigen::VectorXd& sv = svd.singularValues();
  const double cutoff = sv.size() > 0 ? sv[0] * 1e-12 : 0.0;
  Eigen::MatrixXd cov = Eigen::MatrixXd::Zero(n, n);
  int rank = 0;
  for (Eigen::Index k = 0; k < sv.size(); ++k) {
    if (sv[k] > cutoff && sv[k] > 0) {
      ++rank;
      const Eigen::VectorXd v = svd.matrixV().col(k);
      cov += (v * v.transpose()) / (sv[k] * sv[k]);
    }
  }
  cov *= s2;
  // Parameters touching the null space are not determined by the data.
  for (Eigen::Index k = rank; k < n; ++k) {
    const Eigen::VectorXd v = svd.matrixV().col(k);
    for (Eigen::Index j = 0; j < n; ++j) {
      if (std::abs(v[j]) > 1e-6) cov(j, j) = std::numeric_limits<double>::infinity();
    }
  }
  if (rank_out != nullptr) *rank_out = rank;
  return cov;
}

LeastSquaresResult levenberg_marquardt(const ResidualFunction& residual, Eigen::VectorXd x0,
                                       const LeastSquaresOptions& options) {
  require(options.max_iterations >= 1, ErrorCode::InvalidArgument, "max_iterations must be >= 1");

  LeastSquaresResult out;
  out.x = std::move(x0);
  Eigen::VectorXd r;
  require(residual(out.x, r), ErrorCode::NonConvergence, "initial parameters outside the model domain");
  require(r.allFinite(), ErrorCode::NonConvergence, "non-finite residuals at the initial point");
  double cost = 0.5 * r.squaredNorm();

  const auto n = out.x.size();
  Eigen::MatrixXd jac;
  require(numeric_jacobian(residual, out.x, r, options.fd_step, jac), ErrorCode::NonConvergence,
          "Jacobian probes left the model domain");

  double lambda = -1.0;
  Eigen::VectorXd trial_r;
  int it = 0;
  for (; it < options.max_iterations; ++it) {
    const Eigen::MatrixXd jtj = jac.transpose() * jac;
    const Eigen::VectorXd grad = jac.transpose() * r;
    Eigen::VectorXd scale = jtj.diagonal();
    const double max_diag = scale.maxCoeff();
    if (max_diag <= 0 || grad.norm() == 0.0) {
      out.converged = true;
      break;
    }
    for (Eigen::Index j = 0; j < n; ++j) scale[j] = std::max(scale[j], 1e-12 * max_diag);
    if (lambda < 0) lambda = options.initial_damping;

    bool accepted = false;
    bool step_small = false;
    while (!accepted) {
      Eigen::MatrixXd a = jtj;
      a.diagonal() += lambda * scale;
      const Eigen::VectorXd dx = a.ldlt().solve(-grad);
      const Eigen::VectorXd trial = out.x + dx;
      const double tol = options.step_tolerance * std::max(1.0, out.x.cwiseAbs().maxCoeff());
      step_small = dx.cwiseAbs().maxCoeff() <= tol;
      if (dx.allFinite() && residual(trial, trial_r) && trial_r.allFinite()) {
        const double trial_cost = 0.5 * trial_r.squaredNorm();
        if (trial_cost <= cost) {
          out.x = trial;
          r = trial_r;
          const double previous = cost;
          cost = trial_cost;
          lambda = std::max(lambda / 3.0, 1e-15);
          accepted = true;
          if (step_small || previous - cost <= 1e-30 * previous) step_small = true;
          break;
        }
      }
      if (step_small) break;
      lambda *= 4.0;
      if (lambda > 1e16) {
        // No downhill step exists at machine precision: a stationary point.
        step_small = true;
        break;
      }
    }
    if (step_small) {
      out.converged = true;
      ++it;
      break;
    }
    require(numeric_jacobian(residual, out.x, r, options.fd_step, jac), ErrorCode::NonConvergence,
            "Jacobian probes left the model domain");
  }
  if (!out.converged) {
    throw Error(ErrorCode::NonConvergence,
                "no convergence after " + std::to_string(options.max_iterations) + " iterations");
  }
  require(numeric_jacobian(residual, out.x, r, options.fd_step, jac), ErrorCode::NonConvergence,
          "Jacobian probes left the model domain at the optimum");
  out.residuals = r;
  out.jacobian = jac;
  out.cost = cost;
  out.iterations = it;
  out.covariance = covariance_from_jacobian(jac, r, &out.rank);
  return out;
}

}  // namespace scres
