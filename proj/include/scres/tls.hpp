#pragma once

#include <span>
#include <string>
#include <vector>

#include "scres/types.hpp"

namespace scres {

struct PowerSweepPoint {
  double n_bar{0.0};
  double delta_i{0.0};
  double delta_i_sigma{0.0};
};

/// Internal loss versus photon number:
///   delta_i = delta_tls0 tanh(h f / 2 kB T) / sqrt(1 + (n/n_c)^beta) + delta_other.
double eval_tls_loss(const TlsFit& fit, double n_bar, Kelvin temperature);

/// Points admitted to TLS fits lie at or above this photon number.
inline constexpr double kPhotonWindowFloor = 1e-3;
/// Relative jump between neighbours that marks a point as an outlier.
inline constexpr double kOutlierJump = 0.10;

struct OutlierReport {
  std::vector<std::size_t> kept;
  std::vector<std::size_t> dropped_window;  // below the photon-number floor
  std::vector<std::size_t> dropped_low;     // low-power scan
  std::vector<std::size_t> dropped_high;    // high-power scan
  double window_floor = kPhotonWindowFloor;
};

/// Photon-number floor, then a single pass of each neighbour rule:
///  low end, scanning upward: drop while delta_i < 0.9 * next delta_i;
///  high end, scanning downward: drop while delta_i > 1.1 * previous delta_i.
/// Neighbours are the original (post-floor) values. Input must be sorted by
/// n_bar. Throws InsufficientData if fewer than 4 points survive.
OutlierReport filter_outliers(std::span<const PowerSweepPoint> sweep);

/// Convenience: the kept points, in order.
std::vector<PowerSweepPoint> select(std::span<const PowerSweepPoint> sweep, const OutlierReport& report);

/// Least-squares fit in log(delta) with beta squashed onto (0, 1). Needs >= 4
/// points spanning >= 3 decades of n_bar; throws DegenerateSweep when the loss
/// varies by less than 5% across the sweep.
TlsFit fit_power_sweep(std::span<const PowerSweepPoint> sweep, Hertz frequency, Kelvin temperature);

struct QiSummary {
  double qi_low = 0.0;   // 1 / delta_i(n = 1, T = 100 mK)
  double qi_high = 0.0;  // 1 / delta_other
};

inline constexpr double kSummaryTemperatureK = 0.1;

QiSummary summary_qi(const TlsFit& fit);

enum class Cohort { Membrane, Substrate };

std::string_view to_string(Cohort c);
Cohort parse_cohort(std::string_view text);

struct CohortFit {
  std::string resonator_id;
  Cohort cohort;
  TlsFit fit;
};

struct CohortMedians {
  Cohort cohort;
  std::size_t count = 0;
  double median_qi_low = 0.0;
  double median_qi_high = 0.0;
};

/// Per-cohort medians (membrane first). Throws EmptyCohort if either cohort
/// has no fits.
std::vector<CohortMedians> cohort_medians(std::span<const CohortFit> fits);

}  // namespace scres
