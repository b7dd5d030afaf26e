#include "scres/mattis_bardeen.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <sstream>

#include "scres/constants.hpp"
#include "scres/digamma.hpp"
#include "scres/error.hpp"
#include "scres/least_squares.hpp"
#include "scres/quadrature.hpp"

namespace scres {
namespace {

constexpr double kPi = std::numbers::pi;
constexpr double kCutoffThermalEnergies = 60.0;
constexpr double kQuadratureRelTol = 1e-10;  // successive-level agreement, well inside 1e-8

// f(x) - f(y) for occupancies 1/(1+e^x), y > x, without cancellation.
double fermi_difference(double x, double y) {
  const double d = -std::expm1(-(y - x));  // 1 - e^{-(y-x)}
  if (x >= 0) {
    const double ex = std::exp(-x);
    const double ey = std::exp(-y);
    return ex * d / ((1.0 + ex) * (1.0 + ey));
  }
  // x < 0: f(x) = 1/(1+e^x) close to 1, e^x small.
  const double ex = std::exp(x);
  if (y >= 0) {
    const double ey = std::exp(-y);
    // e^{y} - e^{x} over (1+e^x)(1+e^y), divided through by e^y
    return d / ((1.0 + ex) * (1.0 + ey));
  }
  const double ey = std::exp(y);
  return ey * d / ((1.0 + ex) * (1.0 + ey));
}

std::string describe_failure(const char* which, const QuadratureResult& q) {
  std::ostringstream os;
  os << which << " integral did not converge: value " << q.value << ", error estimate " << q.error_estimate
     << " after " << q.levels << " levels";
  return os.str();
}

}  // namespace

Joule gap(Kelvin t, Kelvin t_c, Joule delta0) {
  require(t.value() > 0, ErrorCode::InvalidArgument, "temperature must be > 0");
  require(t_c.value() > 0, ErrorCode::InvalidArgument, "Tc must be > 0");
  if (t > t_c) throw Error(ErrorCode::GapClosed, "temperature above Tc");
  if (t == t_c) return Joule(0.0);
  return delta0 * std::tanh(1.74 * std::sqrt((t_c.value() - t.value()) / t.value()));
}

double fermi(Joule e, Kelvin t) {
  require(t.value() > 0, ErrorCode::InvalidArgument, "temperature must be > 0");
  const double x = e.value() / (PhysicalConstants::kB * t.value());
  if (x > 700) return 0.0;
  if (x < -700) return 1.0;
  if (x >= 0) {
    const double ex = std::exp(-x);
    return ex / (1.0 + ex);
  }
  return 1.0 / (1.0 + std::exp(x));
}

ReducedConductivity sigma_ratios(RadPerSec omega, Kelvin t, Kelvin t_c, double gap_ratio,
                                 ConductivityDiagnostics* diagnostics) {
  require(omega.value() > 0, ErrorCode::InvalidArgument, "omega must be > 0");
  require(gap_ratio > 0, ErrorCode::InvalidArgument, "gap ratio must be > 0");
  const Joule delta0(gap_ratio * PhysicalConstants::kB * t_c.value() / 2.0);
  const Joule delta_t = gap(t, t_c, delta0);
  const double hw = PhysicalConstants::hbar * omega.value();
  if (!(hw < 2.0 * delta_t.value())) {
    throw Error(ErrorCode::PhotonAboveGap, "hbar*omega >= 2*Delta_T at T = " + std::to_string(t.value()) + " K");
  }

  // Energies in units of Delta_T.
  const double w = hw / delta_t.value();
  const double beta = delta_t.value() / (PhysicalConstants::kB * t.value());  // Delta_T / kB T

  QuadratureOptions qopt;
  qopt.rel_tol = kQuadratureRelTol;

  // sigma1: E in [1, 1 + 60/beta]; singular as 1/sqrt(E - 1) at the lower end.
  auto s1_integrand = [&](double e, double da, double) {
    const double x = beta * e;
    const double y = beta * (e + w);
    const double occupancy = fermi_difference(x, y);
    if (occupancy == 0.0) return 0.0;
    const double num = e * e + 1.0 + w * e;
    const double den = std::sqrt(da * (da + 2.0) * (da + w) * (da + w + 2.0));
    return occupancy * num / den;
  };
  const double upper = 1.0 + kCutoffThermalEnergies / beta;
  const QuadratureResult q1 = tanh_sinh(s1_integrand, 1.0, upper, qopt);
  // A vanishing integral (frozen quasiparticles) has no relative error to meet.
  if (!q1.converged && q1.error_estimate > 1e-8 * std::abs(q1.value) && q1.error_estimate > 1e-300) {
    throw Error(ErrorCode::QuadratureFailure, describe_failure("sigma1", q1));
  }

  // sigma2: E in [1 - w, 1]; singular at both ends.
  auto s2_integrand = [&](double e, double da, double db) {
    const double num = e * e + 1.0 + w * e;
    // 1 - E^2 = db (2 - db); (E + w)^2 - 1 = da (da + 2) with da = E + w - 1.
    const double den = std::sqrt(db * (2.0 - db) * da * (da + 2.0));
    return std::tanh(0.5 * beta * (e + w)) * num / den;
  };
  const QuadratureResult q2 = tanh_sinh(s2_integrand, 1.0 - w, 1.0, qopt);
  if (!q2.converged && q2.error_estimate > 1e-8 * std::abs(q2.value)) {
    throw Error(ErrorCode::QuadratureFailure, describe_failure("sigma2", q2));
  }

  if (diagnostics) {
    diagnostics->s1_error = 2.0 / w * q1.error_estimate;
    diagnostics->s2_error = 1.0 / w * q2.error_estimate;
    diagnostics->evaluations = q1.evaluations + q2.evaluations;
  }
  return {std::max(0.0, 2.0 / w * q1.value), 1.0 / w * q2.value};
}

ReducedSurfaceImpedance surface_impedance(RadPerSec omega, ReducedConductivity cond) {
  require(omega.value() > 0, ErrorCode::InvalidArgument, "omega must be > 0");
  require(std::isfinite(cond.s1) && std::isfinite(cond.s2) && cond.s1 >= 0, ErrorCode::InvalidArgument,
          "invalid conductivity");
  if (cond.s1 == 0.0 && cond.s2 == 0.0) {
    throw Error(ErrorCode::DegenerateConductivity, "s1 = s2 = 0");
  }
  const double m = std::hypot(cond.s1, cond.s2);
  const double m2 = m * m;
  const double s1sq = cond.s1 * cond.s1;
  // |s| - s2 and |s| + s2, each formed without cancellation.
  const double minus = cond.s2 > 0 ? s1sq / (m + cond.s2) : m - cond.s2;
  const double plus = cond.s2 < 0 ? s1sq / (m - cond.s2) : m + cond.s2;
  const double pref = PhysicalConstants::mu0 * omega.value() / 2.0;
  return {std::sqrt(pref * minus / m2), -std::sqrt(pref * plus / m2)};
}

double tls_shift_bracket(double x) {
  require(x > 0, ErrorCode::InvalidArgument, "digamma argument must be > 0");
  return digamma(Complex(0.5, x)).real() - std::log(x);
}

Hertz tls_frequency_shift(double delta_tls0, RadPerSec omega, Kelvin t, Hertz f_ref) {
  require(t.value() > 0, ErrorCode::InvalidArgument, "temperature must be > 0");
  if (delta_tls0 == 0.0) return Hertz(0.0);
  const double x = PhysicalConstants::hbar * omega.value() / (2.0 * kPi * PhysicalConstants::kB * t.value());
  return Hertz(f_ref.value() * delta_tls0 / kPi * tls_shift_bracket(x));
}

Complex model_complex_frequency(const MbTempFit& fit, Kelvin t) {
  require(t.value() > 0 && t < fit.t_c, ErrorCode::InvalidArgument, "temperature must lie in (0, Tc)");
  Complex out = fit.f_r;
  if (fit.g_reduced != 0.0) {
    const ReducedSurfaceImpedance z =
        surface_impedance(fit.omega, sigma_ratios(fit.omega, t, fit.t_c, fit.gap_ratio));
    out += Complex(0.0, -fit.g_reduced) * Complex(z.rs, z.xs);
  }
  out += tls_frequency_shift(fit.delta_tls0, fit.omega, t, fit.f_ref()).value();
  return out;
}

double model_qi(const MbTempFit& fit, Kelvin t) {
  const Complex f = model_complex_frequency(fit, t);
  return -f.real() / (2.0 * f.imag());
}

namespace {

struct ModelBasis {
  std::vector<double> rs;
  std::vector<double> xs;
  std::vector<double> tls;  // shift per unit delta_tls0, Hz
};

// Evaluates the temperature-dependent pieces; false if any point leaves the
// model's domain.
bool evaluate_basis(std::span<const TempSweepPoint> pts, RadPerSec omega, Kelvin t_c, double ratio,
                    ModelBasis& b) {
  const std::size_t n = pts.size();
  b.rs.resize(n);
  b.xs.resize(n);
  b.tls.resize(n);
  const Hertz f_ref = to_cyclic(omega);
  for (std::size_t i = 0; i < n; ++i) {
    const Kelvin t = pts[i].temperature;
    if (!(t < t_c)) return false;
    try {
      const auto z = surface_impedance(omega, sigma_ratios(omega, t, t_c, ratio));
      b.rs[i] = z.rs;
      b.xs[i] = z.xs;
    } catch (const Error& e) {
      if (e.code() == ErrorCode::PhotonAboveGap || e.code() == ErrorCode::QuadratureFailure) return false;
      throw;
    }
    b.tls[i] = tls_frequency_shift(1.0, omega, t, f_ref).value();
  }
  return true;
}

}  // namespace

MbTempFit fit_temperature_sweep(std::span<const TempSweepPoint> input, RadPerSec omega) {
  require(input.size() >= 8, ErrorCode::InsufficientData,
          "temperature sweep needs >= 8 points, got " + std::to_string(input.size()));
  require(omega.value() > 0, ErrorCode::InvalidArgument, "omega must be > 0");
  for (std::size_t i = 0; i < input.size(); ++i) {
    const auto& p = input[i];
    require(p.temperature.value() > 0 && p.f_hz > 0 && p.neg_f_over_2qi_hz <= 0 && std::isfinite(p.f_hz) &&
                std::isfinite(p.neg_f_over_2qi_hz),
            ErrorCode::InvalidArgument, "invalid sweep point at row " + std::to_string(i));
    if (i > 0) {
      require(p.temperature > input[i - 1].temperature, ErrorCode::InvalidArgument,
              "temperatures must be strictly increasing");
    }
  }

  MbTempFit fit;
  fit.omega = omega;

  std::vector<TempSweepPoint> pts;
  for (const auto& p : input) {
    if (p.temperature.value() >= kInitialTcK) {
      fit.warnings.push_back("point at " + std::to_string(p.temperature.value()) +
                             " K excluded: at or above the initial Tc estimate");
    } else {
      pts.push_back(p);
    }
  }
  if (pts.size() < 8) {
    throw Error(ErrorCode::TemperatureAboveTc, "fewer than 8 points remain below the Tc estimate");
  }
  const auto n = static_cast<Eigen::Index>(pts.size());
  const double t_max = pts.back().temperature.value();

  // Linear start: with Tc and the gap ratio at their initial values the
  // model is linear in (Re f_r, Im f_r, g, delta_tls0).
  ModelBasis basis;
  Kelvin tc0(kInitialTcK);
  double ratio0 = kInitialGapRatio;
  if (!evaluate_basis(pts, omega, tc0, ratio0, basis)) {
    throw Error(ErrorCode::TemperatureAboveTc, "sweep reaches the pair-breaking limit of the initial model");
  }
  Eigen::MatrixXd a = Eigen::MatrixXd::Zero(2 * n, 4);
  Eigen::VectorXd y(2 * n);
  for (Eigen::Index i = 0; i < n; ++i) {
    a(i, 0) = 1.0;
    a(i, 2) = basis.xs[i];
    a(i, 3) = basis.tls[i];
    y[i] = pts[i].f_hz;
    a(n + i, 1) = 1.0;
    a(n + i, 2) = -basis.rs[i];
    y[n + i] = pts[i].neg_f_over_2qi_hz;
  }
  // Column scaling keeps the solve well conditioned.
  Eigen::VectorXd colscale = a.colwise().norm().transpose();
  for (Eigen::Index j = 0; j < 4; ++j) {
    if (colscale[j] == 0) colscale[j] = 1;
  }
  const Eigen::MatrixXd as = a * colscale.cwiseInverse().asDiagonal();
  const Eigen::VectorXd lin = (as.completeOrthogonalDecomposition().solve(y)).cwiseQuotient(colscale);

  double span = 0.0;
  for (const auto& p : pts) {
    span = std::max({span, std::abs(p.f_hz - pts.front().f_hz),
                     std::abs(p.neg_f_over_2qi_hz - pts.front().neg_f_over_2qi_hz)});
  }
  const double fs = std::max(span, 1.0);
  const double xs_ref = basis.xs.front();
  const double f_offset = lin[0] + lin[2] * xs_ref;  // Re f_r + g xs(T_min)
  const double im_offset = lin[1];
  // Internal units: a unit change in g or delta_tls0 moves the model by
  // about the data span.
  auto range = [](const std::vector<double>& v) {
    const auto [lo, hi] = std::minmax_element(v.begin(), v.end());
    return *hi - *lo;
  };
  const double rs_range = range(basis.rs);
  const double tls_range = range(basis.tls);
  const double gs = rs_range > 0 ? fs / rs_range : 1.0;
  const double ds = tls_range > 0 ? fs / tls_range : 1.0;

  struct Physical {
    double re, im, g, d, tc, ratio;
  };
  auto to_physical = [&](const Eigen::VectorXd& u) {
    Physical p{};
    p.g = gs * u[2];
    p.re = f_offset + fs * u[0] - p.g * xs_ref;
    p.im = im_offset + fs * u[1];
    p.d = ds * u[3];
    p.tc = t_max + std::exp(u[4]);
    p.ratio = std::exp(u[5]);
    return p;
  };

  const ResidualFunction residual = [&](const Eigen::VectorXd& u, Eigen::VectorXd& r) {
    if (!u.allFinite() || std::abs(u[4]) > 50 || std::abs(u[5]) > 5) return false;
    const Physical p = to_physical(u);
    ModelBasis b;
    if (!evaluate_basis(pts, omega, Kelvin(p.tc), p.ratio, b)) return false;
    r.resize(2 * n);
    for (Eigen::Index i = 0; i < n; ++i) {
      r[i] = (p.re + p.g * b.xs[i] + p.d * b.tls[i] - pts[i].f_hz) / fs;
      r[n + i] = (p.im - p.g * b.rs[i] - pts[i].neg_f_over_2qi_hz) / fs;
    }
    return true;
  };

  Eigen::VectorXd u0(6);
  u0 << 0.0, 0.0, lin[2] / gs, lin[3] / ds, std::log(kInitialTcK - t_max), std::log(kInitialGapRatio);
  LeastSquaresOptions options;
  options.max_iterations = 400;
  options.step_tolerance = 1e-10;
  const LeastSquaresResult res = levenberg_marquardt(residual, u0, options);

  const Physical p = to_physical(res.x);
  fit.f_r = Complex(p.re, p.im);
  fit.g_reduced = p.g;
  fit.delta_tls0 = p.d;
  fit.t_c = Kelvin(p.tc);
  fit.gap_ratio = p.ratio;
  fit.residual_norm_hz = res.residuals.norm() * fs;

  // Covariance of the internal coordinates (independent of the residual
  // scale) pushed through the linear map to physical parameters.
  Eigen::MatrixXd d = Eigen::MatrixXd::Zero(6, 6);
  d(0, 0) = fs;
  d(0, 2) = -gs * xs_ref;
  d(1, 1) = fs;
  d(2, 2) = gs;
  d(3, 3) = ds;
  d(4, 4) = p.tc - t_max;
  d(5, 5) = p.ratio;
  const Eigen::MatrixXd& cov_u = res.covariance;
  Eigen::MatrixXd cov(6, 6);
  bool finite = cov_u.allFinite();
  if (finite) {
    cov = d * cov_u * d.transpose();
  }
  auto sd = [&](int i) {
    if (!finite) {
      // Propagate per-diagonal where possible.
      const double v = cov_u(i, i);
      if (!std::isfinite(v)) return std::numeric_limits<double>::infinity();
      double acc = 0.0;
      for (int k = 0; k < 6; ++k) {
        if (d(i, k) == 0) continue;
        const double vk = cov_u(k, k);
        if (!std::isfinite(vk)) return std::numeric_limits<double>::infinity();
        acc += d(i, k) * d(i, k) * vk;
      }
      return std::sqrt(acc);
    }
    return std::sqrt(std::max(0.0, cov(i, i)));
  };
  fit.sigma.f_r_re_hz = sd(0);
  fit.sigma.f_r_im_hz = sd(1);
  fit.sigma.g_reduced = sd(2);
  fit.sigma.delta_tls0 = sd(3);
  fit.sigma.t_c_k = sd(4);
  fit.sigma.gap_ratio = sd(5);

  const bool g_significant = std::abs(fit.g_reduced) > 3.0 * fit.sigma.g_reduced;
  const bool tc_resolved = std::isfinite(fit.sigma.t_c_k) && fit.sigma.t_c_k < 0.1 * fit.t_c.value();
  fit.tc_identifiable = res.rank == 6 && g_significant && tc_resolved;
  if (!fit.tc_identifiable) {
    fit.warnings.emplace_back("Tc and gap ratio not identifiable from this sweep");
  }
  validate(fit);
  return fit;
}

Kelvin half_qi_temperature(const MbTempFit& fit) {
  validate(fit);
  require(fit.g_reduced >= 0, ErrorCode::InvalidArgument, "g_reduced must be >= 0");
  const double tc = fit.t_c.value();
  constexpr int kGrid = 2000;
  const double t_lo = 0.02 * tc;
  const double t_hi = 0.99 * tc;

  std::vector<double> ts;
  std::vector<double> qs;
  for (int k = 0; k <= kGrid; ++k) {
    const double t = t_lo + (t_hi - t_lo) * k / kGrid;
    try {
      const double q = model_qi(fit, Kelvin(t));
      if (!std::isfinite(q) || q <= 0) break;
      ts.push_back(t);
      qs.push_back(q);
    } catch (const Error& e) {
      if (e.code() == ErrorCode::PhotonAboveGap) break;  // model ends here
      throw;
    }
  }
  if (qs.empty()) throw Error(ErrorCode::NoCrossing, "model undefined on the scan range");
  const auto imax = static_cast<std::size_t>(std::max_element(qs.begin(), qs.end()) - qs.begin());
  const double half = 0.5 * qs[imax];
  std::size_t k = imax + 1;
  while (k < qs.size() && qs[k] > half) ++k;
  if (k >= qs.size()) throw Error(ErrorCode::NoCrossing, "Qi never falls to half its maximum below 0.99 Tc");

  double lo = ts[k - 1];
  double hi = ts[k];
  while (hi - lo > 1e-6) {
    const double mid = 0.5 * (lo + hi);
    (model_qi(fit, Kelvin(mid)) > half ? lo : hi) = mid;
  }
  return Kelvin(0.5 * (lo + hi));
}

}  // namespace scres
