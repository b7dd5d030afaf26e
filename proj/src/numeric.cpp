#include "scres/numeric.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "scres/error.hpp"

namespace scres {

std::vector<double> unwrap_phase(std::span<const double> phase) {
  std::vector<double> out(phase.begin(), phase.end());
  double offset = 0.0;
  for (std::size_t i = 1; i < phase.size(); ++i) {
    const double jump = phase[i] - phase[i - 1];
    if (jump > std::numbers::pi) {
      offset -= 2.0 * std::numbers::pi * std::round(jump / (2.0 * std::numbers::pi));
    } else if (jump < -std::numbers::pi) {
      offset += 2.0 * std::numbers::pi * std::round(-jump / (2.0 * std::numbers::pi));
    }
    out[i] = phase[i] + offset;
  }
  return out;
}

LineFit fit_line(std::span<const double> x, std::span<const double> y) {
  require(x.size() == y.size() && x.size() >= 2, ErrorCode::InsufficientData, "line fit needs >= 2 points");
  const double mx = mean(x);
  const double my = mean(y);
  double sxx = 0.0;
  double sxy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxx += (x[i] - mx) * (x[i] - mx);
    sxy += (x[i] - mx) * (y[i] - my);
  }
  require(sxx > 0, ErrorCode::InsufficientData, "line fit needs distinct abscissae");
  LineFit fit;
  fit.slope = sxy / sxx;
  fit.intercept = my - fit.slope * mx;
  return fit;
}

double mean(std::span<const double> v) {
  require(!v.empty(), ErrorCode::InsufficientData, "mean of empty set");
  double s = 0.0;
  for (double x : v) s += x;
  return s / static_cast<double>(v.size());
}

double population_stddev(std::span<const double> v) {
  const double m = mean(v);
  double s = 0.0;
  for (double x : v) s += (x - m) * (x - m);
  return std::sqrt(s / static_cast<double>(v.size()));
}

double median(std::vector<double> v) {
  require(!v.empty(), ErrorCode::InsufficientData, "median of empty set");
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 == 1 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

}  // namespace scres
