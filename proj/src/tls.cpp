#include "scres/tls.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "scres/constants.hpp"
#include "scres/error.hpp"
#include "scres/least_squares.hpp"
#include "scres/numeric.hpp"

namespace scres {
namespace {

double thermal_factor(Hertz f, Kelvin t) {
  return std::tanh(PhysicalConstants::h * f.value() / (2.0 * PhysicalConstants::kB * t.value()));
}

double logistic(double u) { return 1.0 / (1.0 + std::exp(-u)); }
double logit(double p) { return std::log(p / (1.0 - p)); }

}  // namespace

double eval_tls_loss(const TlsFit& fit, double n_bar, Kelvin temperature) {
  require(n_bar >= 0, ErrorCode::InvalidArgument, "n_bar must be >= 0");
  require(temperature.value() > 0, ErrorCode::InvalidArgument, "temperature must be > 0");
  const double saturation = std::sqrt(1.0 + std::pow(n_bar / fit.n_c, fit.beta));
  return fit.delta_tls0 * thermal_factor(fit.frequency, temperature) / saturation + fit.delta_other;
}

OutlierReport filter_outliers(std::span<const PowerSweepPoint> sweep) {
  for (std::size_t i = 1; i < sweep.size(); ++i) {
    require(sweep[i].n_bar > sweep[i - 1].n_bar, ErrorCode::InvalidArgument,
            "sweep must be sorted by strictly increasing n_bar");
  }
  OutlierReport report;
  std::vector<std::size_t> window;
  for (std::size_t i = 0; i < sweep.size(); ++i) {
    (sweep[i].n_bar < report.window_floor ? report.dropped_window : window).push_back(i);
  }

  const std::size_t m = window.size();
  std::vector<bool> drop(m, false);
  auto delta = [&](std::size_t k) { return sweep[window[k]].delta_i; };
  // Rule 1: upward from the lowest-power point.
  for (std::size_t k = 0; k + 1 < m; ++k) {
    if (delta(k) < (1.0 - kOutlierJump) * delta(k + 1)) {
      drop[k] = true;
      report.dropped_low.push_back(window[k]);
    } else {
      break;
    }
  }
  // Rule 2: downward from the highest-power point.
  for (std::size_t k = m; k-- > 1;) {
    if (drop[k]) break;
    if (delta(k) > (1.0 + kOutlierJump) * delta(k - 1)) {
      drop[k] = true;
      report.dropped_high.push_back(window[k]);
    } else {
      break;
    }
  }
  for (std::size_t k = 0; k < m; ++k) {
    if (!drop[k]) report.kept.push_back(window[k]);
  }
  require(report.kept.size() >= 4, ErrorCode::InsufficientData,
          "only " + std::to_string(report.kept.size()) + " points survive outlier filtering");
  return report;
}

std::vector<PowerSweepPoint> select(std::span<const PowerSweepPoint> sweep, const OutlierReport& report) {
  std::vector<PowerSweepPoint> out;
  out.reserve(report.kept.size());
  for (auto i : report.kept) out.push_back(sweep[i]);
  return out;
}

TlsFit fit_power_sweep(std::span<const PowerSweepPoint> sweep, Hertz frequency, Kelvin temperature) {
  require(sweep.size() >= 4, ErrorCode::InsufficientData, "power sweep needs >= 4 points");
  require(temperature.value() > 0 && frequency.value() > 0, ErrorCode::InvalidArgument,
          "frequency and temperature must be positive");
  double n_lo = std::numeric_limits<double>::infinity();
  double n_hi = 0.0;
  double d_lo = std::numeric_limits<double>::infinity();
  double d_hi = 0.0;
  for (const auto& p : sweep) {
    require(p.n_bar > 0 && p.delta_i > 0, ErrorCode::InvalidArgument, "n_bar and delta_i must be positive");
    n_lo = std::min(n_lo, p.n_bar);
    n_hi = std::max(n_hi, p.n_bar);
    d_lo = std::min(d_lo, p.delta_i);
    d_hi = std::max(d_hi, p.delta_i);
  }
  require(n_hi / n_lo >= 1e3 * (1.0 - 1e-12), ErrorCode::InsufficientData,
          "power sweep must span at least 3 decades of n_bar");
  if ((d_hi - d_lo) / d_lo < 0.05) {
    throw Error(ErrorCode::DegenerateSweep, "internal loss varies by less than 5%; TLS and other loss not separable");
  }

  const double tf = thermal_factor(frequency, temperature);
  const auto n = static_cast<Eigen::Index>(sweep.size());

  auto to_fit = [&](const Eigen::VectorXd& u) {
    TlsFit fit;
    fit.delta_tls0 = std::exp(u[0]);
    fit.n_c = std::exp(u[1]);
    fit.beta = logistic(u[2]);
    fit.delta_other = std::exp(u[3]);
    fit.frequency = frequency;
    fit.temperature = temperature;
    return fit;
  };
  const ResidualFunction residual = [&](const Eigen::VectorXd& u, Eigen::VectorXd& r) {
    if (!u.allFinite() || u.cwiseAbs().maxCoeff() > 700) return false;
    const TlsFit fit = to_fit(u);
    if (!(fit.beta > 0)) return false;
    r.resize(n);
    for (Eigen::Index i = 0; i < n; ++i) {
      r[i] = std::log(eval_tls_loss(fit, sweep[i].n_bar, temperature)) - std::log(sweep[i].delta_i);
    }
    return true;
  };

  // Data-driven start: saturation level from the high-power end, n_c where
  // the excess loss has fallen by 1/sqrt(2). Several beta starts.
  std::vector<PowerSweepPoint> sorted(sweep.begin(), sweep.end());
  std::sort(sorted.begin(), sorted.end(), [](auto& a, auto& b) { return a.n_bar < b.n_bar; });
  const double other0 = 0.9 * sorted.back().delta_i;
  const double excess0 = std::max(sorted.front().delta_i - other0, 1e-3 * other0);
  double nc0 = std::sqrt(n_lo * n_hi);
  for (std::size_t i = 1; i < sorted.size(); ++i) {
    const double e0 = sorted[i - 1].delta_i - other0;
    const double e1 = sorted[i].delta_i - other0;
    const double target = excess0 / std::sqrt(2.0);
    if (e0 >= target && e1 < target) {
      const double t = (e0 - target) / (e0 - e1);
      nc0 = std::exp(std::log(sorted[i - 1].n_bar) + t * (std::log(sorted[i].n_bar) - std::log(sorted[i - 1].n_bar)));
      break;
    }
  }

  LeastSquaresOptions options;
  options.max_iterations = 500;
  options.step_tolerance = 1e-10;
  std::optional<LeastSquaresResult> best;
  for (double beta0 : {0.3, 0.6, 0.9}) {
    Eigen::VectorXd u0(4);
    u0 << std::log(excess0 / tf), std::log(nc0), logit(beta0), std::log(other0);
    try {
      LeastSquaresResult r = levenberg_marquardt(residual, u0, options);
      if (!best || r.cost < best->cost) best = std::move(r);
    } catch (const Error& e) {
      if (e.code() != ErrorCode::NonConvergence) throw;
    }
  }
  if (!best) throw Error(ErrorCode::NonConvergence, "power-sweep fit did not converge from any start");

  TlsFit fit = to_fit(best->x);
  const auto& c = best->covariance;
  auto sd = [&](int i) { return std::sqrt(std::max(0.0, c(i, i))); };
  fit.sigma.delta_tls0 = fit.delta_tls0 * sd(0);
  fit.sigma.n_c = fit.n_c * sd(1);
  fit.sigma.beta = fit.beta * (1.0 - fit.beta) * sd(2);
  fit.sigma.delta_other = fit.delta_other * sd(3);
  validate(fit);
  return fit;
}

QiSummary summary_qi(const TlsFit& fit) {
  validate(fit);
  return {1.0 / eval_tls_loss(fit, 1.0, Kelvin(kSummaryTemperatureK)), 1.0 / fit.delta_other};
}

std::string_view to_string(Cohort c) { return c == Cohort::Membrane ? "membrane" : "substrate"; }

Cohort parse_cohort(std::string_view text) {
  if (text == "membrane" || text == "M") return Cohort::Membrane;
  if (text == "substrate" || text == "S") return Cohort::Substrate;
  throw Error(ErrorCode::InvalidArgument, "unknown cohort '" + std::string(text) + "'");
}

std::vector<CohortMedians> cohort_medians(std::span<const CohortFit> fits) {
  std::vector<CohortMedians> out;
  for (Cohort c : {Cohort::Membrane, Cohort::Substrate}) {
    std::vector<double> low;
    std::vector<double> high;
    for (const auto& f : fits) {
      if (f.cohort != c) continue;
      const QiSummary s = summary_qi(f.fit);
      low.push_back(s.qi_low);
      high.push_back(s.qi_high);
    }
    if (low.empty()) throw Error(ErrorCode::EmptyCohort, "no fits in cohort '" + std::string(to_string(c)) + "'");
    out.push_back({c, low.size(), median(low), median(high)});
  }
  return out;
}

}  // namespace scres
