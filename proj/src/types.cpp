#include "scres/types.hpp"

#include <cmath>

#include "scres/constants.hpp"
#include "scres/error.hpp"

namespace scres {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::InvalidArgument: return "InvalidArgument";
    case ErrorCode::InvariantViolation: return "InvariantViolation";
    case ErrorCode::ParseError: return "ParseError";
    case ErrorCode::IoError: return "IoError";
    case ErrorCode::NoDipFound: return "NoDipFound";
    case ErrorCode::NonConvergence: return "NonConvergence";
    case ErrorCode::InsufficientData: return "InsufficientData";
    case ErrorCode::DegenerateSweep: return "DegenerateSweep";
    case ErrorCode::EmptyCohort: return "EmptyCohort";
    case ErrorCode::GapClosed: return "GapClosed";
    case ErrorCode::PhotonAboveGap: return "PhotonAboveGap";
    case ErrorCode::QuadratureFailure: return "QuadratureFailure";
    case ErrorCode::DegenerateConductivity: return "DegenerateConductivity";
    case ErrorCode::TemperatureAboveTc: return "TemperatureAboveTc";
    case ErrorCode::NoCrossing: return "NoCrossing";
    case ErrorCode::NonMonotoneInput: return "NonMonotoneInput";
    case ErrorCode::OutOfRange: return "OutOfRange";
    case ErrorCode::NoChangeDetected: return "NoChangeDetected";
    case ErrorCode::NoInteriorExtremum: return "NoInteriorExtremum";
    case ErrorCode::WindowTooNarrow: return "WindowTooNarrow";
    case ErrorCode::OutOfLinearRange: return "OutOfLinearRange";
  }
  return "Unknown";
}

std::string_view to_string(Geometry g) { return g == Geometry::Notch ? "notch" : "reflection"; }

Geometry parse_geometry(std::string_view text) {
  if (text == "notch") return Geometry::Notch;
  if (text == "reflection") return Geometry::Reflection;
  throw Error(ErrorCode::InvalidArgument, "unknown geometry '" + std::string(text) + "'");
}

ComplexTrace::ComplexTrace(std::vector<double> frequencies_hz, std::vector<Complex> values)
    : frequencies_(std::move(frequencies_hz)), values_(std::move(values)) {
  require(frequencies_.size() == values_.size(), ErrorCode::InvariantViolation,
          "frequencies and values differ in length");
  require(frequencies_.size() >= kMinPoints, ErrorCode::InvariantViolation,
          "trace needs at least 8 points, got " + std::to_string(frequencies_.size()));
  for (std::size_t i = 0; i < frequencies_.size(); ++i) {
    require(std::isfinite(frequencies_[i]), ErrorCode::InvariantViolation,
            "non-finite frequency at row " + std::to_string(i));
    require(std::isfinite(values_[i].real()) && std::isfinite(values_[i].imag()),
            ErrorCode::InvariantViolation, "non-finite value at row " + std::to_string(i));
    if (i > 0) {
      require(frequencies_[i] > frequencies_[i - 1], ErrorCode::InvariantViolation,
              "frequencies not strictly increasing at row " + std::to_string(i));
    }
  }
}

ResonanceFit ResonanceFit::from_qi_qc(Hertz f0, double qi, double qc_mag, double phi, Background bg,
                                      Geometry geometry) {
  ResonanceFit fit;
  fit.f0 = f0;
  fit.q_internal = qi;
  fit.q_coupling_mag = qc_mag;
  fit.phi = phi;
  fit.q_total = 1.0 / (1.0 / qi + std::cos(phi) / qc_mag);
  fit.background = bg;
  fit.geometry = geometry;
  validate(fit);
  return fit;
}

void validate(const ResonanceFit& fit) {
  require(fit.f0.value() > 0, ErrorCode::InvariantViolation, "f0 must be positive");
  require(fit.q_total > 0 && fit.q_internal > 0 && fit.q_coupling_mag > 0,
          ErrorCode::InvariantViolation, "quality factors must be positive");
  const double lhs = 1.0 / fit.q_total;
  const double rhs = 1.0 / fit.q_internal + std::cos(fit.phi) / fit.q_coupling_mag;
  require(std::abs(lhs - rhs) <= 1e-9 * std::abs(lhs), ErrorCode::InvariantViolation,
          "1/Q_total != 1/Q_i + cos(phi)/|Q_c|");
}

void validate(const TlsFit& fit) {
  require(fit.delta_tls0 >= 0, ErrorCode::InvariantViolation, "delta_tls0 must be >= 0");
  require(fit.delta_other > 0, ErrorCode::InvariantViolation, "delta_other must be > 0");
  require(fit.n_c > 0, ErrorCode::InvariantViolation, "n_c must be > 0");
  require(fit.beta > 0 && fit.beta <= 1, ErrorCode::InvariantViolation, "beta must lie in (0, 1]");
}

Joule MbTempFit::delta0() const {
  return Joule(0.5 * gap_ratio * PhysicalConstants::kB * t_c.value());
}

void validate(const MbTempFit& fit) {
  require(fit.t_c.value() > 0, ErrorCode::InvariantViolation, "t_c must be > 0");
  require(fit.gap_ratio > 0, ErrorCode::InvariantViolation, "gap_ratio must be > 0");
  require(fit.omega.value() > 0, ErrorCode::InvariantViolation, "omega must be > 0");
}

TimeSeries::TimeSeries(std::vector<TimePoint> points, std::string unit)
    : points_(std::move(points)), unit_(std::move(unit)) {
  for (std::size_t i = 1; i < points_.size(); ++i) {
    require(points_[i].index > points_[i - 1].index, ErrorCode::InvariantViolation,
            "time-series indices not strictly increasing at position " + std::to_string(i));
    require(points_[i].time_s >= points_[i - 1].time_s, ErrorCode::InvariantViolation,
            "time-series times decrease at position " + std::to_string(i));
  }
}

std::vector<double> TimeSeries::values() const {
  std::vector<double> out;
  out.reserve(points_.size());
  for (const auto& p : points_) out.push_back(p.value);
  return out;
}

TimeSeries TimeSeries::slice(std::int64_t first_index, std::int64_t last_index) const {
  std::vector<TimePoint> out;
  for (const auto& p : points_) {
    if (p.index >= first_index && p.index <= last_index) out.push_back(p);
  }
  return TimeSeries(std::move(out), unit_);
}

Complex complex_resonant_frequency(Hertz f0, double qi) {
  require(f0.value() > 0 && qi > 0, ErrorCode::InvalidArgument, "f0 and Qi must be positive");
  return {f0.value(), -f0.value() / (2.0 * qi)};
}

}  // namespace scres
