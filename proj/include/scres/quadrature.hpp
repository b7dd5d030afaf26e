#pragma once

// Double-exponential (tanh-sinh) quadrature on a finite interval.
//
// The integrand receives the abscissa together with its distances to both
// endpoints, computed without cancellation. Integrands with inverse-square-root
// endpoint singularities should form the singular factors from those
// distances; the transformed integrand then decays double-exponentially and
// the trapezoidal sums converge quickly.

#include <cmath>
#include <numbers>

namespace scres {

struct QuadratureResult {
  double value = 0.0;
  double error_estimate = 0.0;
  int levels = 0;
  int evaluations = 0;
  bool converged = false;
};

struct QuadratureOptions {
  double rel_tol = 1e-11;  // between successive halvings of the step
  int max_levels = 12;
  double t_max = 4.5;      // truncation of the transformed axis
};

/// f(x, distance_from_a, distance_from_b) -> double.
template <typename F>
QuadratureResult tanh_sinh(F&& f, double a, double b, const QuadratureOptions& options = {}) {
  QuadratureResult out;
  const double half = 0.5 * (b - a);
  if (!(half > 0)) return out;

  // Contribution of the transformed node t (weight included).
  auto node = [&](double t) {
    const double u = 0.5 * std::numbers::pi * std::sinh(t);
    const double e = std::exp(-2.0 * std::abs(u));
    // 1 - tanh|u| = 2 e / (1 + e)
    const double near = (b - a) * e / (1.0 + e);
    const double da = u < 0 ? near : (b - a) - near;
    const double db = u < 0 ? (b - a) - near : near;
    const double x = u < 0 ? a + da : b - db;
    const double cu = std::cosh(u);
    const double w = half * 0.5 * std::numbers::pi * std::cosh(t) / (cu * cu);
    if (!(w > 0) || !std::isfinite(w)) return 0.0;
    ++out.evaluations;
    return w * f(x, da, db);
  };

  double h = 1.0;
  double sum = node(0.0);
  for (int k = 1; k * h <= options.t_max; ++k) sum += node(k * h) + node(-k * h);
  double estimate = h * sum;

  for (int level = 1; level <= options.max_levels; ++level) {
    h *= 0.5;
    // New nodes are the odd multiples of the halved step.
    for (int k = 1; k * h <= options.t_max; k += 2) sum += node(k * h) + node(-k * h);
    const double next = h * sum;
    out.error_estimate = std::abs(next - estimate);
    out.levels = level;
    estimate = next;
    if (level >= 3 && out.error_estimate <= options.rel_tol * std::abs(estimate)) {
      out.converged = true;
      break;
    }
    if (estimate == 0.0 && level >= 3) {
      out.converged = true;
      break;
    }
  }
  out.value = estimate;
  return out;
}

}  // namespace scres
