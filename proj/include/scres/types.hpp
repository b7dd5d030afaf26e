#pragma once

// Shared domain records. Every record is an immutable-by-convention value
// type; the validated ones (ComplexTrace, TimeSeries) can only be built
// through constructors that enforce their invariants.

#include <complex>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "scres/units.hpp"

namespace scres {

using Complex = std::complex<double>;

enum class Geometry { Notch, Reflection };

std::string_view to_string(Geometry g);
Geometry parse_geometry(std::string_view text);

/// A frequency sweep of complex scattering values plus acquisition metadata.
class ComplexTrace {
 public:
  static constexpr std::size_t kMinPoints = 8;

  /// Throws InvariantViolation unless frequencies are strictly increasing,
  /// both arrays have the same length >= kMinPoints, and every value is finite.
  ComplexTrace(std::vector<double> frequencies_hz, std::vector<Complex> values);

  [[nodiscard]] std::span<const double> frequencies() const { return frequencies_; }
  [[nodiscard]] std::span<const Complex> values() const { return values_; }
  [[nodiscard]] std::size_t size() const { return frequencies_.size(); }
  [[nodiscard]] double span_hz() const { return frequencies_.back() - frequencies_.front(); }

  std::optional<double> power_dbm;
  std::optional<double> photon_number;
  std::optional<double> temperature_k;
  std::string resonator_id;

 private:
  std::vector<double> frequencies_;
  std::vector<Complex> values_;
};

struct Background {
  double amplitude{1.0};  // |a|
  double phase{0.0};      // alpha, rad
  double delay_s{0.0};    // tau, cable delay
};

struct ResonanceUncertainty {
  double f0_hz{0.0};
  double q_total{0.0};
  double q_internal{0.0};
  double q_coupling_mag{0.0};
  double phi{0.0};
  double amplitude{0.0};
  double phase{0.0};
  double delay_s{0.0};
};

/// Fitted resonance. 1/q_total = 1/q_internal + cos(phi)/q_coupling_mag.
struct ResonanceFit {
  Hertz f0{};
  double q_total{0.0};
  double q_internal{0.0};
  double q_coupling_mag{0.0};
  double phi{0.0};
  Background background;
  ResonanceUncertainty sigma;
  Geometry geometry{Geometry::Notch};

  /// Builds a fit from (f0, Qi, |Qc|, phi), deriving Q_total.
  static ResonanceFit from_qi_qc(Hertz f0, double qi, double qc_mag, double phi = 0.0,
                                 Background bg = {}, Geometry geometry = Geometry::Notch);

  [[nodiscard]] double delta_internal() const { return 1.0 / q_internal; }
};

/// Throws InvariantViolation if any ResonanceFit invariant (positivity,
/// loaded-Q consistency) is broken.
void validate(const ResonanceFit& fit);

struct TlsUncertainty {
  double delta_tls0{0.0};
  double n_c{0.0};
  double beta{0.0};
  double delta_other{0.0};
};

/// Parameters of the TLS power-dependence model for internal loss.
struct TlsFit {
  double delta_tls0{0.0};
  double n_c{1.0};
  double beta{0.5};
  double delta_other{1e-6};
  Hertz frequency{};
  Kelvin temperature{0.1};
  TlsUncertainty sigma;
};

void validate(const TlsFit& fit);

struct MbUncertainty {
  double f_r_re_hz{0.0};
  double f_r_im_hz{0.0};
  double g_reduced{0.0};
  double delta_tls0{0.0};
  double t_c_k{0.0};
  double gap_ratio{0.0};
};

/// Parameters of the temperature-dependent complex-frequency model
/// (airbridge surface impedance plus TLS shift).
struct MbTempFit {
  Complex f_r{};           // Hz
  double g_reduced{0.0};   // Hz per reduced-impedance unit, g / sqrt(sigma_N)
  double delta_tls0{0.0};
  Kelvin t_c{1.2};
  double gap_ratio{3.5};   // 2 Delta0 / (kB Tc)
  RadPerSec omega{};
  MbUncertainty sigma;
  double residual_norm_hz{0.0};
  bool tc_identifiable{true};
  std::vector<std::string> warnings;

  [[nodiscard]] Joule delta0() const;
  /// Reference frequency for the TLS fractional shift, omega / 2 pi.
  [[nodiscard]] Hertz f_ref() const { return to_cyclic(omega); }
};

void validate(const MbTempFit& fit);

struct TimePoint {
  std::int64_t index{0};
  double time_s{0.0};
  double value{0.0};
};

/// Uniformly indexed sequence of samples. Indices strictly increase and
/// times never decrease.
class TimeSeries {
 public:
  TimeSeries() = default;
  TimeSeries(std::vector<TimePoint> points, std::string unit);

  [[nodiscard]] std::span<const TimePoint> points() const { return points_; }
  [[nodiscard]] std::size_t size() const { return points_.size(); }
  [[nodiscard]] bool empty() const { return points_.empty(); }
  [[nodiscard]] const std::string& unit() const { return unit_; }
  [[nodiscard]] const TimePoint& operator[](std::size_t i) const { return points_[i]; }
  [[nodiscard]] std::vector<double> values() const;

  /// Points whose index lies in [first_index, last_index].
  [[nodiscard]] TimeSeries slice(std::int64_t first_index, std::int64_t last_index) const;
  /// Same indices and times with every value mapped through fn.
  template <typename Fn>
  [[nodiscard]] TimeSeries map_values(Fn&& fn, std::string unit) const {
    std::vector<TimePoint> out(points_.begin(), points_.end());
    for (auto& p : out) p.value = fn(p.value);
    return TimeSeries(std::move(out), std::move(unit));
  }

 private:
  std::vector<TimePoint> points_;
  std::string unit_;
};

/// f - i f / (2 Qi).
Complex complex_resonant_frequency(Hertz f0, double qi);

}  // namespace scres
