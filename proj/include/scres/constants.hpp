#pragma once

#include <numbers>

namespace scres {

// CODATA 2018 (SI exact values where defined).
struct PhysicalConstants {
  static constexpr double h = 6.62607015e-34;                 // J s
  static constexpr double hbar = h / (2.0 * std::numbers::pi);  // J s
  static constexpr double kB = 1.380649e-23;                  // J / K
  static constexpr double mu0 = 1.25663706212e-6;             // H / m
};

static_assert(PhysicalConstants::h > 0 && PhysicalConstants::kB > 0 && PhysicalConstants::mu0 > 0);

// Euler-Mascheroni constant.
inline constexpr double kEulerGamma = std::numbers::egamma;

}  // namespace scres
