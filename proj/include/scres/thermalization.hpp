#pragma once

// Frequency-temperature calibration and the two-resonator thermalization
// comparison: change-point detection, asymmetric-parabola extremum fits and
// per-region integer point differences.

#include <array>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <math.h>  // Boost 1.74 pchip calls isnan unqualified

#include <boost/math/interpolators/pchip.hpp>

#include "scres/error.hpp"
#include "scres/types.hpp"

namespace scres {

struct CalibrationKnot {
  Kelvin temperature{};
  double frequency_hz = 0.0;
};

/// Monotone (shape-preserving) piecewise-cubic fit of f(T). Frequency falls
/// strictly with temperature over the valid range.
class Calibration {
 public:
  [[nodiscard]] std::span<const CalibrationKnot> knots() const { return knots_; }
  [[nodiscard]] Kelvin t_min() const { return knots_.front().temperature; }
  [[nodiscard]] Kelvin t_max() const { return knots_.back().temperature; }
  [[nodiscard]] double f_min() const { return knots_.back().frequency_hz; }
  [[nodiscard]] double f_max() const { return knots_.front().frequency_hz; }

  /// Interpolated frequency; OutOfRange outside [t_min, t_max].
  [[nodiscard]] double frequency_at(Kelvin t) const;

 private:
  friend Calibration build_calibration(std::span<const CalibrationKnot> knots);
  using Interpolant = boost::math::interpolators::pchip<std::vector<double>>;
  std::vector<CalibrationKnot> knots_;
  std::shared_ptr<const Interpolant> interpolant_;
};

/// Needs >= 4 knots with strictly increasing temperature. Throws
/// NonMonotoneInput naming the first pair whose frequency does not fall.
Calibration build_calibration(std::span<const CalibrationKnot> knots);

/// Inverse of the calibration by bisection (to 1e-9 K). Knot frequencies map
/// exactly to knot temperatures. Throws OutOfRange outside [f_min, f_max].
Kelvin frequency_to_temperature(const Calibration& cal, double f_hz);

/// Maps a series of Hz values to a series of K values.
TimeSeries to_temperature_series(const Calibration& cal, const TimeSeries& frequencies);

enum class Direction { Decreasing, Increasing };

enum class WindowMode {
  Sliding,         // windows advance by one point
  NonOverlapping,  // windows advance by a full window
};

struct ChangeDetectOptions {
  int window = 5;
  WindowMode mode = WindowMode::Sliding;
};

/// Window-mean differences d_k = mean(window k) - mean(window k-1). Returns
/// the series index of the first point entering the window at which d_k has
/// the requested sign and keeps it for every later window. Needs at least
/// 3 windows of points; throws NoChangeDetected when no such point exists.
std::int64_t detect_change_start(const TimeSeries& series, Direction direction, ChangeDetectOptions options = {});

enum class ExtremumKind { Minimum, Maximum };

struct ParabolaFit {
  double vertex_index = 0.0;  // continuous, in series index units
  double vertex_value = 0.0;
  double a_left = 0.0;
  double a_right = 0.0;
  double rss = 0.0;
};

/// v(x) = c + a_L (x - x0)^2 for x < x0, c + a_R (x - x0)^2 for x >= x0, with
/// both curvatures of the sign required by kind. Needs >= 7 points; throws
/// NoInteriorExtremum unless both end values lie beyond the interior extreme.
ParabolaFit fit_asymmetric_parabola(const TimeSeries& series, ExtremumKind kind);

enum class Region { I, II, III, IV };

std::string_view to_string(Region r);

struct IndexInterval {
  std::int64_t first = 0;
  std::int64_t last = 0;  // inclusive
};

/// Regions I-IV: decreasing onset, minimum, increasing onset, maximum.
using RegionBounds = std::array<IndexInterval, 4>;

/// difference = resonator_a_point - resonator_b_point.
struct RegionMarks {
  Region region{Region::I};
  std::int64_t resonator_a_point = 0;
  std::int64_t resonator_b_point = 0;
  std::int64_t difference = 0;
};

struct RegionOutcome {
  Region region{Region::I};
  std::optional<RegionMarks> marks;  // empty when a step failed
  std::optional<ErrorCode> error;
  std::string message;
};

struct PairwiseReport {
  std::string label;  // "a-b"
  std::array<RegionOutcome, 4> regions;
};

/// Per-region comparison of two series sharing an index clock. Failures
/// inside a region are recorded in that region and do not abort the others.
PairwiseReport pairwise_report(const TimeSeries& a, const TimeSeries& b, const RegionBounds& bounds,
                               std::string label = "a-b", ChangeDetectOptions options = {});

/// "label: d1, d2, d3, d4" with "--" for missing regions.
std::string render_table_row(const PairwiseReport& report);

/// Header plus one row per report, in the layout of the published table.
std::string render_table(std::span<const PairwiseReport> reports);

}  // namespace scres
