#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace scres {

enum class ErrorCode {
  InvalidArgument,
  InvariantViolation,
  ParseError,
  IoError,
  NoDipFound,
  NonConvergence,
  InsufficientData,
  DegenerateSweep,
  EmptyCohort,
  GapClosed,
  PhotonAboveGap,
  QuadratureFailure,
  DegenerateConductivity,
  TemperatureAboveTc,
  NoCrossing,
  NonMonotoneInput,
  OutOfRange,
  NoChangeDetected,
  NoInteriorExtremum,
  WindowTooNarrow,
  OutOfLinearRange,
};

std::string_view to_string(ErrorCode code);

// All library failures are reported through this one exception type; the
// code is what callers (and the CLI error record) dispatch on.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(std::string(to_string(code)) + ": " + message), code_(code), detail_(message) {}

  [[nodiscard]] ErrorCode code() const noexcept { return code_; }
  [[nodiscard]] const std::string& detail() const noexcept { return detail_; }

 private:
  ErrorCode code_;
  std::string detail_;
};

inline void require(bool condition, ErrorCode code, const std::string& message) {
  if (!condition) throw Error(code, message);
}

}  // namespace scres
