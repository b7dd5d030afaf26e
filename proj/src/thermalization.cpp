#include "scres/thermalization.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

namespace scres {

double Calibration::frequency_at(Kelvin t) const {
  if (t < t_min() || t > t_max()) {
    std::ostringstream os;
    os << "temperature " << t.value() << " K outside calibrated range [" << t_min().value() << ", "
       << t_max().value() << "] K";
    throw Error(ErrorCode::OutOfRange, os.str());
  }
  return (*interpolant_)(t.value());
}

Calibration build_calibration(std::span<const CalibrationKnot> knots) {
  require(knots.size() >= 4, ErrorCode::InsufficientData, "calibration needs >= 4 points");
  for (std::size_t i = 0; i < knots.size(); ++i) {
    require(knots[i].temperature.value() > 0 && std::isfinite(knots[i].frequency_hz), ErrorCode::InvalidArgument,
            "invalid calibration point " + std::to_string(i));
    if (i == 0) continue;
    require(knots[i].temperature > knots[i - 1].temperature, ErrorCode::InvalidArgument,
            "calibration temperatures must be strictly increasing");
    if (!(knots[i].frequency_hz < knots[i - 1].frequency_hz)) {
      std::ostringstream os;
      os.precision(17);
      os << "frequency does not decrease between points " << i - 1 << " (" << knots[i - 1].temperature.value()
         << " K, " << knots[i - 1].frequency_hz << " Hz) and " << i << " (" << knots[i].temperature.value()
         << " K, " << knots[i].frequency_hz << " Hz)";
      throw Error(ErrorCode::NonMonotoneInput, os.str());
    }
  }
  Calibration cal;
  cal.knots_.assign(knots.begin(), knots.end());
  std::vector<double> x;
  std::vector<double> y;
  for (const auto& k : knots) {
    x.push_back(k.temperature.value());
    y.push_back(k.frequency_hz);
  }
  cal.interpolant_ = std::make_shared<const Calibration::Interpolant>(std::move(x), std::move(y));
  return cal;
}

Kelvin frequency_to_temperature(const Calibration& cal, double f_hz) {
  if (!(f_hz >= cal.f_min() && f_hz <= cal.f_max())) {
    std::ostringstream os;
    os.precision(17);
    os << "frequency " << f_hz << " Hz outside calibrated range [" << cal.f_min() << ", " << cal.f_max() << "] Hz";
    throw Error(ErrorCode::OutOfRange, os.str());
  }
  const auto knots = cal.knots();
  // Knots are sorted by falling frequency.
  const auto it = std::lower_bound(knots.begin(), knots.end(), f_hz,
                                   [](const CalibrationKnot& k, double f) { return k.frequency_hz > f; });
  if (it != knots.end() && it->frequency_hz == f_hz) return it->temperature;
  double lo = std::prev(it)->temperature.value();
  double hi = it->temperature.value();
  while (hi - lo > 1e-9) {
    const double mid = 0.5 * (lo + hi);
    (cal.frequency_at(Kelvin(mid)) > f_hz ? lo : hi) = mid;
  }
  return Kelvin(0.5 * (lo + hi));
}

TimeSeries to_temperature_series(const Calibration& cal, const TimeSeries& frequencies) {
  return frequencies.map_values([&](double f) { return frequency_to_temperature(cal, f).value(); }, "K");
}

std::int64_t detect_change_start(const TimeSeries& series, Direction direction, ChangeDetectOptions options) {
  const int w = options.window;
  require(w >= 1, ErrorCode::InvalidArgument, "window must be >= 1");
  const auto n = static_cast<std::ptrdiff_t>(series.size());
  require(n >= 3 * w, ErrorCode::InsufficientData,
          "change detection needs >= " + std::to_string(3 * w) + " points, got " + std::to_string(n));
  const double sign = direction == Direction::Decreasing ? -1.0 : 1.0;
  const auto v = series.values();

  // Differences between window k and window k-1, with the position of the
  // first point that enters window k.
  std::vector<double> d;
  std::vector<std::ptrdiff_t> entering;
  if (options.mode == WindowMode::Sliding) {
    for (std::ptrdiff_t k = 1; k + w <= n; ++k) {
      d.push_back((v[k + w - 1] - v[k - 1]) / w);
      entering.push_back(k + w - 1);
    }
  } else {
    for (std::ptrdiff_t k = 1; (k + 1) * w <= n; ++k) {
      double acc = 0.0;
      for (int i = 0; i < w; ++i) acc += v[k * w + i] - v[(k - 1) * w + i];
      d.push_back(acc / w);
      entering.push_back(k * w);
    }
  }
  std::ptrdiff_t start = static_cast<std::ptrdiff_t>(d.size());
  while (start > 0 && sign * d[start - 1] > 0) --start;
  if (start == static_cast<std::ptrdiff_t>(d.size())) {
    throw Error(ErrorCode::NoChangeDetected, std::string("final window difference is not ") +
                                                 (direction == Direction::Decreasing ? "negative" : "positive"));
  }
  return series[static_cast<std::size_t>(entering[start])].index;
}

namespace {

struct PieceFit {
  double c = 0.0;
  double a_left = 0.0;
  double a_right = 0.0;
  double rss = std::numeric_limits<double>::infinity();
};

// Best fit at fixed x0 with a_left, a_right >= 0 (active-set enumeration).
PieceFit fit_at(std::span<const double> x, std::span<const double> v, double x0) {
  const auto n = static_cast<Eigen::Index>(x.size());
  Eigen::MatrixXd a(n, 3);
  Eigen::VectorXd y(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const double dx = x[i] - x0;
    a(i, 0) = 1.0;
    a(i, 1) = x[i] < x0 ? dx * dx : 0.0;
    a(i, 2) = x[i] >= x0 ? dx * dx : 0.0;
    y[i] = v[i];
  }
  PieceFit best;
  for (int mask = 0; mask < 4; ++mask) {
    std::vector<Eigen::Index> cols{0};
    if (mask & 1) cols.push_back(1);
    if (mask & 2) cols.push_back(2);
    Eigen::MatrixXd sub(n, static_cast<Eigen::Index>(cols.size()));
    for (std::size_t j = 0; j < cols.size(); ++j) sub.col(static_cast<Eigen::Index>(j)) = a.col(cols[j]);
    // A piece with no samples on its side leaves an all-zero column.
    if (sub.colwise().norm().minCoeff() == 0.0) continue;
    const Eigen::VectorXd coef = sub.colPivHouseholderQr().solve(y);
    PieceFit f;
    f.c = coef[0];
    std::size_t j = 1;
    if (mask & 1) f.a_left = coef[static_cast<Eigen::Index>(j++)];
    if (mask & 2) f.a_right = coef[static_cast<Eigen::Index>(j++)];
    if (f.a_left < 0 || f.a_right < 0) continue;
    f.rss = (sub * coef - y).squaredNorm();
    if (f.rss < best.rss) best = f;
  }
  return best;
}

}  // namespace

ParabolaFit fit_asymmetric_parabola(const TimeSeries& series, ExtremumKind kind) {
  const std::size_t n = series.size();
  require(n >= 7, ErrorCode::InsufficientData, "parabola fit needs >= 7 points");
  // Work on a minimum; a maximum is the minimum of the negated values.
  const double s = kind == ExtremumKind::Minimum ? 1.0 : -1.0;
  std::vector<double> x(n);
  std::vector<double> v(n);
  for (std::size_t i = 0; i < n; ++i) {
    x[i] = static_cast<double>(series[i].index);
    v[i] = s * series[i].value;
  }
  const double interior = *std::min_element(v.begin() + 1, v.end() - 1);
  if (!(v.front() > interior && v.back() > interior)) {
    throw Error(ErrorCode::NoInteriorExtremum,
                std::string("no interior ") + (kind == ExtremumKind::Minimum ? "minimum" : "maximum"));
  }

  // Profile over the vertex: coarse scan, then golden-section refinement.
  const double lo = x.front();
  const double hi = x.back();
  const int steps = static_cast<int>(std::min<double>(4000, 10 * (hi - lo)));
  const double h = (hi - lo) / steps;
  int best_k = 0;
  double best_rss = std::numeric_limits<double>::infinity();
  for (int k = 0; k <= steps; ++k) {
    const double r = fit_at(x, v, lo + k * h).rss;
    if (r < best_rss) {
      best_rss = r;
      best_k = k;
    }
  }
  if (best_k == 0 || best_k == steps) {
    throw Error(ErrorCode::NoInteriorExtremum, "best vertex lies on the interval boundary");
  }
  double a = lo + (best_k - 1) * h;
  double b = lo + (best_k + 1) * h;
  const double g = (std::sqrt(5.0) - 1.0) / 2.0;
  double c1 = b - g * (b - a);
  double c2 = a + g * (b - a);
  double f1 = fit_at(x, v, c1).rss;
  double f2 = fit_at(x, v, c2).rss;
  int iterations = 0;
  while (b - a > 1e-10 * std::max(1.0, std::abs(a))) {
    if (++iterations > 200) throw Error(ErrorCode::NonConvergence, "vertex refinement did not converge");
    if (f1 < f2) {
      b = c2;
      c2 = c1;
      f2 = f1;
      c1 = b - g * (b - a);
      f1 = fit_at(x, v, c1).rss;
    } else {
      a = c1;
      c1 = c2;
      f1 = f2;
      c2 = a + g * (b - a);
      f2 = fit_at(x, v, c2).rss;
    }
  }
  const double x0 = 0.5 * (a + b);
  const PieceFit f = fit_at(x, v, x0);
  require(std::isfinite(f.rss), ErrorCode::NonConvergence, "no admissible parabola at the vertex");
  return {x0, s * f.c, s * f.a_left, s * f.a_right, f.rss};
}

std::string_view to_string(Region r) {
  switch (r) {
    case Region::I: return "I";
    case Region::II: return "II";
    case Region::III: return "III";
    case Region::IV: return "IV";
  }
  return "?";
}

PairwiseReport pairwise_report(const TimeSeries& a, const TimeSeries& b, const RegionBounds& bounds,
                               std::string label, ChangeDetectOptions options) {
  for (std::size_t r = 1; r < bounds.size(); ++r) {
    require(bounds[r].first >= bounds[r - 1].first, ErrorCode::InvalidArgument, "regions must be ordered I-IV");
  }
  PairwiseReport report;
  report.label = std::move(label);
  constexpr std::array<Region, 4> kRegions{Region::I, Region::II, Region::III, Region::IV};
  for (std::size_t r = 0; r < 4; ++r) {
    RegionOutcome& out = report.regions[r];
    out.region = kRegions[r];
    auto locate = [&](const TimeSeries& s) -> std::int64_t {
      const TimeSeries part = s.slice(bounds[r].first, bounds[r].last);
      switch (kRegions[r]) {
        case Region::I: return detect_change_start(part, Direction::Decreasing, options);
        case Region::III: return detect_change_start(part, Direction::Increasing, options);
        case Region::II: return std::llround(fit_asymmetric_parabola(part, ExtremumKind::Minimum).vertex_index);
        case Region::IV: return std::llround(fit_asymmetric_parabola(part, ExtremumKind::Maximum).vertex_index);
      }
      return 0;
    };
    try {
      RegionMarks m;
      m.region = kRegions[r];
      m.resonator_a_point = locate(a);
      m.resonator_b_point = locate(b);
      m.difference = m.resonator_a_point - m.resonator_b_point;
      out.marks = m;
    } catch (const Error& e) {
      out.error = e.code();
      out.message = e.detail();
    }
  }
  return report;
}

std::string render_table_row(const PairwiseReport& report) {
  std::ostringstream os;
  os << report.label << ":";
  for (std::size_t r = 0; r < 4; ++r) {
    os << (r == 0 ? " " : ", ");
    const auto& m = report.regions[r].marks;
    if (m) {
      os << m->difference;
    } else {
      os << "--";
    }
  }
  return os.str();
}

std::string render_table(std::span<const PairwiseReport> reports) {
  std::ostringstream os;
  os << "# point difference = first resonator - second resonator; negative means the first changed earlier\n";
  os << "Res. Pair  Reg. I  Reg. II  Reg. III  Reg. IV\n";
  for (const auto& rep : reports) {
    os << rep.label;
    for (std::size_t pad = rep.label.size(); pad < 9; ++pad) os << ' ';
    const std::array<int, 4> widths{8, 9, 10, 9};
    for (std::size_t r = 0; r < 4; ++r) {
      const auto& m = rep.regions[r].marks;
      const std::string cell = m ? std::to_string(m->difference) : "--";
      for (std::size_t pad = cell.size(); pad < static_cast<std::size_t>(widths[r]) - 1; ++pad) os << ' ';
      os << ' ' << cell;
    }
    os << '\n';
  }
  return os.str();
}

}  // namespace scres
