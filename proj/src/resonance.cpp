#include "scres/resonance.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "scres/constants.hpp"
#include "scres/error.hpp"
#include "scres/least_squares.hpp"
#include "scres/numeric.hpp"

namespace scres {
namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

double coupling_factor(Geometry g) { return g == Geometry::Notch ? 1.0 : 2.0; }

double wrap_angle(double a) { return std::remainder(a, kTwoPi); }

Complex background_factor(const Background& bg, double f) {
  return bg.amplitude * std::polar(1.0, bg.phase - kTwoPi * f * bg.delay_s);
}

// Outer 20% of the span: first and last 10% of the frequency range.
struct OuterMask {
  std::vector<std::size_t> low;
  std::vector<std::size_t> high;
};

OuterMask outer_regions(std::span<const double> f) {
  const double lo = f.front() + 0.1 * (f.back() - f.front());
  const double hi = f.back() - 0.1 * (f.back() - f.front());
  OuterMask m;
  for (std::size_t i = 0; i < f.size(); ++i) {
    if (f[i] <= lo) m.low.push_back(i);
    if (f[i] >= hi) m.high.push_back(i);
  }
  // Very short traces: guarantee at least two points per side.
  if (m.low.size() < 2) m.low = {0, 1};
  if (m.high.size() < 2) m.high = {f.size() - 2, f.size() - 1};
  return m;
}

// Shared-slope fit over two segments with independent intercepts.
double two_segment_slope(std::span<const double> x, std::span<const double> y, const OuterMask& m) {
  double sxx = 0.0;
  double sxy = 0.0;
  for (const auto* seg : {&m.low, &m.high}) {
    double mx = 0.0;
    double my = 0.0;
    for (auto i : *seg) {
      mx += x[i];
      my += y[i];
    }
    mx /= static_cast<double>(seg->size());
    my /= static_cast<double>(seg->size());
    for (auto i : *seg) {
      sxx += (x[i] - mx) * (x[i] - mx);
      sxy += (x[i] - mx) * (y[i] - my);
    }
  }
  return sxx > 0 ? sxy / sxx : 0.0;
}

double segment_scatter(std::span<const double> x, std::span<const double> y, const std::vector<std::size_t>& idx) {
  std::vector<double> xs;
  std::vector<double> ys;
  for (auto i : idx) {
    xs.push_back(x[i]);
    ys.push_back(y[i]);
  }
  const LineFit line = fit_line(xs, ys);
  double s = 0.0;
  for (std::size_t k = 0; k < xs.size(); ++k) {
    const double d = ys[k] - (line.slope * xs[k] + line.intercept);
    s += d * d;
  }
  return s / static_cast<double>(xs.size());
}

struct InitialGuess {
  ResonanceFit fit;
  double noise_floor = 0.0;
  double depth = 0.0;
};

InitialGuess initial_guess(const ComplexTrace& trace, const FitConfig& config) {
  const auto f = trace.frequencies();
  const auto s = trace.values();
  const std::size_t n = trace.size();
  const OuterMask outer = outer_regions(f);

  InitialGuess guess;
  guess.fit.geometry = config.geometry;
  const double tau = config.delay_estimation ? estimate_cable_delay(trace) : 0.0;

  std::vector<Complex> z(n);
  for (std::size_t i = 0; i < n; ++i) z[i] = s[i] * std::polar(1.0, kTwoPi * f[i] * tau);

  const std::size_t edge = std::max<std::size_t>(1, n / 20);
  Complex edge_sum{0.0, 0.0};
  for (std::size_t i = 0; i < edge; ++i) edge_sum += z[i] + z[n - 1 - i];
  const Complex baseline = edge_sum / static_cast<double>(2 * edge);
  require(std::abs(baseline) > 0, ErrorCode::NoDipFound, "zero off-resonance baseline");

  std::vector<Complex> w(n);
  std::vector<double> mag(n);
  for (std::size_t i = 0; i < n; ++i) {
    w[i] = z[i] / baseline;
    mag[i] = std::abs(w[i]);
  }

  // 5-point moving average suppresses single-sample noise minima.
  std::vector<double> smooth(n);
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t lo = i >= 2 ? i - 2 : 0;
    const std::size_t hi = std::min(n - 1, i + 2);
    double acc = 0.0;
    for (std::size_t k = lo; k <= hi; ++k) acc += mag[k];
    smooth[i] = acc / static_cast<double>(hi - lo + 1);
  }
  const auto imin = static_cast<std::size_t>(std::min_element(smooth.begin(), smooth.end()) - smooth.begin());

  const double var = 0.5 * (segment_scatter(f, mag, outer.low) + segment_scatter(f, mag, outer.high));
  guess.noise_floor = std::sqrt(var);
  const double off = 0.5 * (mean(std::span(smooth).first(edge)) + mean(std::span(smooth).last(edge)));
  guess.depth = off - smooth[imin];
  const bool interior = imin >= 2 && imin + 2 < n;
  if (!interior || guess.depth <= 3.0 * guess.noise_floor || guess.depth <= 1e-6) {
    throw Error(ErrorCode::NoDipFound, "no resonance dip above 3x the off-resonance noise floor (depth " +
                                           std::to_string(guess.depth) + ", noise " +
                                           std::to_string(guess.noise_floor) + ")");
  }

  const double f0 = f[imin];
  const double half = off - 0.5 * guess.depth;
  auto crossing = [&](bool left) -> double {
    std::size_t i = imin;
    while (true) {
      const std::size_t next = left ? i - 1 : i + 1;
      if (smooth[next] >= half) {
        const double t = (half - smooth[i]) / (smooth[next] - smooth[i]);
        return f[i] + t * (f[next] - f[i]);
      }
      i = next;
      if (i == 0 || i == n - 1) return f[i];
    }
  };
  double width = crossing(false) - crossing(true);
  if (!(width > 0)) width = 10.0 * (f[1] - f[0]);
  const double q_total = f0 / width;

  // At f = f0 the bracket is 1 - c (Q/|Qc|) e^{i phi}.
  const Complex lorentz = (1.0 - w[imin]) / coupling_factor(config.geometry);
  double k = std::abs(lorentz);
  double phi = std::arg(lorentz);
  if (!(k > 0)) k = guess.depth;
  double qc = q_total / k;
  double inv_qi = 1.0 / q_total - std::cos(phi) / qc;
  if (!(inv_qi > 0.05 / q_total)) {
    phi = 0.0;
    inv_qi = std::max(1.0 / q_total - 1.0 / qc, 0.05 / q_total);
    qc = 1.0 / (1.0 / q_total - inv_qi);
  }

  guess.fit.f0 = Hertz(f0);
  guess.fit.q_internal = 1.0 / inv_qi;
  guess.fit.q_coupling_mag = qc;
  guess.fit.phi = phi;
  guess.fit.q_total = 1.0 / (inv_qi + std::cos(phi) / qc);
  guess.fit.background = {std::abs(baseline), std::arg(baseline), tau};
  return guess;
}

// Maps internal coordinates around the initial guess to physical parameters.
struct Parameterization {
  ResonanceFit start;
  double span = 1.0;
  bool fit_delay = true;

  [[nodiscard]] Eigen::Index size() const { return fit_delay ? 7 : 6; }

  [[nodiscard]] ResonanceFit to_fit(const Eigen::VectorXd& u) const {
    ResonanceFit p;
    p.geometry = start.geometry;
    p.f0 = Hertz(start.f0.value() * (1.0 + u[0] / start.q_total));
    p.q_internal = start.q_internal * std::exp(u[1]);
    p.q_coupling_mag = start.q_coupling_mag * std::exp(u[2]);
    p.phi = start.phi + u[3];
    p.background.amplitude = start.background.amplitude * std::exp(u[4]);
    p.background.phase = start.background.phase + u[5];
    p.background.delay_s = start.background.delay_s + (fit_delay ? u[6] / (kTwoPi * span) : 0.0);
    p.q_total = 1.0 / (1.0 / p.q_internal + std::cos(p.phi) / p.q_coupling_mag);
    return p;
  }
};

}  // namespace

void validate(const FitConfig& config) {
  require(config.max_iterations >= 1, ErrorCode::InvalidArgument, "max_iterations must be >= 1");
  require(config.convergence_tol > 0 && config.convergence_tol <= 1e-2, ErrorCode::InvalidArgument,
          "convergence_tol must lie in (0, 1e-2]");
}

Complex model_s21(const ResonanceFit& p, Hertz f) {
  const double x = f.value() / p.f0.value() - 1.0;
  const Complex term = (p.q_total / p.q_coupling_mag) * std::polar(1.0, p.phi) /
                       Complex(1.0, 2.0 * p.q_total * x);
  return background_factor(p.background, f.value()) * (1.0 - coupling_factor(p.geometry) * term);
}

double estimate_cable_delay(const ComplexTrace& trace) {
  const auto f = trace.frequencies();
  std::vector<double> phase(trace.size());
  for (std::size_t i = 0; i < trace.size(); ++i) phase[i] = std::arg(trace.values()[i]);
  const auto unwrapped = unwrap_phase(phase);
  const double slope = two_segment_slope(f, unwrapped, outer_regions(f));
  return -slope / kTwoPi;
}

double durbin_watson(std::span<const double> r) {
  double num = 0.0;
  double den = 0.0;
  for (std::size_t i = 0; i < r.size(); ++i) {
    den += r[i] * r[i];
    if (i > 0) num += (r[i] - r[i - 1]) * (r[i] - r[i - 1]);
  }
  return den > 0 ? num / den : 2.0;
}

ResonanceFitReport fit_resonance_report(const ComplexTrace& trace, const FitConfig& config) {
  validate(config);
  const InitialGuess guess = initial_guess(trace, config);

  Parameterization param{guess.fit, trace.span_hz(), config.delay_estimation};
  const auto f = trace.frequencies();
  const auto s = trace.values();
  const auto n = static_cast<Eigen::Index>(trace.size());

  const ResidualFunction residual = [&](const Eigen::VectorXd& u, Eigen::VectorXd& r) {
    const ResonanceFit p = param.to_fit(u);
    if (!(p.q_total > 0) || !std::isfinite(p.q_total)) return false;
    r.resize(2 * n);
    for (Eigen::Index i = 0; i < n; ++i) {
      const Complex d = model_s21(p, Hertz(f[i])) - s[i];
      r[i] = d.real();
      r[n + i] = d.imag();
    }
    return true;
  };

  LeastSquaresOptions options;
  options.max_iterations = config.max_iterations;
  options.step_tolerance = config.convergence_tol;
  const LeastSquaresResult result = levenberg_marquardt(residual, Eigen::VectorXd::Zero(param.size()), options);

  ResonanceFitReport report;
  report.fit = param.to_fit(result.x);
  ResonanceFit& fit = report.fit;
  fit.phi = wrap_angle(fit.phi);
  fit.background.phase = wrap_angle(fit.background.phase);
  fit.q_total = 1.0 / (1.0 / fit.q_internal + std::cos(fit.phi) / fit.q_coupling_mag);
  if (!(fit.q_total > 0)) throw Error(ErrorCode::NonConvergence, "fit converged to a non-physical Q_total");
  if (fit.f0.value() < f.front() || fit.f0.value() > f[f.size() - 1]) {
    throw Error(ErrorCode::NonConvergence, "fitted f0 lies outside the trace span");
  }
  validate(fit);

  // Propagate the internal covariance to the physical parameters.
  const Eigen::Index m = param.size();
  const double ql = fit.q_total;
  Eigen::MatrixXd g = Eigen::MatrixXd::Zero(8, m);
  g(0, 0) = param.start.f0.value() / param.start.q_total;
  g(1, 1) = ql * ql / fit.q_internal;
  g(1, 2) = ql * ql * std::cos(fit.phi) / fit.q_coupling_mag;
  g(1, 3) = ql * ql * std::sin(fit.phi) / fit.q_coupling_mag;
  g(2, 1) = fit.q_internal;
  g(3, 2) = fit.q_coupling_mag;
  g(4, 3) = 1.0;
  g(5, 4) = fit.background.amplitude;
  g(6, 5) = 1.0;
  if (param.fit_delay) g(7, 6) = 1.0 / (kTwoPi * param.span);
  const Eigen::MatrixXd cov = g * result.covariance * g.transpose();
  auto sd = [&](int i) { return std::sqrt(std::max(0.0, cov(i, i))); };
  fit.sigma = {sd(0), sd(1), sd(2), sd(3), sd(4), sd(5), sd(6), sd(7)};

  report.iterations = result.iterations;
  report.residuals.resize(trace.size());
  std::vector<double> stacked(2 * trace.size());
  double ss = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) {
    report.residuals[i] = {result.residuals[i], result.residuals[n + i]};
    ss += std::norm(report.residuals[i]);
    stacked[i] = result.residuals[i];
    stacked[n + i] = result.residuals[n + i];
  }
  report.residual_rms = std::sqrt(ss / static_cast<double>(n));
  report.durbin_watson = durbin_watson(stacked);
  report.noise_floor = guess.noise_floor;
  report.dip_depth = guess.depth;
  return report;
}

ResonanceFit fit_resonance(const ComplexTrace& trace, const FitConfig& config) {
  return fit_resonance_report(trace, config).fit;
}

Watt dbm_to_watt(double dbm) { return Watt(1e-3 * std::pow(10.0, dbm / 10.0)); }

double photon_number(const ResonanceFit& fit, Watt applied_power) {
  validate(fit);
  require(applied_power.value() >= 0, ErrorCode::InvalidArgument, "applied power must be >= 0");
  const double w0 = to_angular(fit.f0).value();
  return 2.0 * fit.q_total * fit.q_total * applied_power.value() /
         (PhysicalConstants::hbar * w0 * w0 * fit.q_coupling_mag);
}

}  // namespace scres
