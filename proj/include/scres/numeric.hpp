#pragma once

// Small statistics and signal helpers shared by the analysis modules.

#include <span>
#include <vector>

namespace scres {

/// Removes 2 pi jumps between consecutive samples (branch correction at +-pi).
std::vector<double> unwrap_phase(std::span<const double> phase);

struct LineFit {
  double slope = 0.0;
  double intercept = 0.0;
};

/// Ordinary least-squares line y = slope * x + intercept. Needs >= 2 distinct x.
LineFit fit_line(std::span<const double> x, std::span<const double> y);

double mean(std::span<const double> v);
/// Divide-by-N standard deviation.
double population_stddev(std::span<const double> v);
/// Median; even-length input averages the two central values.
double median(std::vector<double> v);

}  // namespace scres
