#pragma once

// Unit-carrying scalars. Each quantity is a distinct type, so passing a
// cyclic frequency where an angular one is expected does not compile.

#include <compare>
#include <numbers>

namespace scres {

template <typename Tag>
class Quantity {
 public:
  constexpr Quantity() = default;
  constexpr explicit Quantity(double v) : value_(v) {}

  [[nodiscard]] constexpr double value() const { return value_; }

  constexpr Quantity operator-() const { return Quantity(-value_); }
  constexpr Quantity& operator+=(Quantity o) { value_ += o.value_; return *this; }
  constexpr Quantity& operator-=(Quantity o) { value_ -= o.value_; return *this; }

  friend constexpr Quantity operator+(Quantity a, Quantity b) { return Quantity(a.value_ + b.value_); }
  friend constexpr Quantity operator-(Quantity a, Quantity b) { return Quantity(a.value_ - b.value_); }
  friend constexpr Quantity operator*(Quantity a, double s) { return Quantity(a.value_ * s); }
  friend constexpr Quantity operator*(double s, Quantity a) { return Quantity(a.value_ * s); }
  friend constexpr Quantity operator/(Quantity a, double s) { return Quantity(a.value_ / s); }
  friend constexpr double operator/(Quantity a, Quantity b) { return a.value_ / b.value_; }
  friend constexpr auto operator<=>(Quantity, Quantity) = default;

 private:
  double value_{0.0};
};

using Hertz = Quantity<struct HertzTag>;            // cyclic frequency
using RadPerSec = Quantity<struct RadPerSecTag>;    // angular frequency
using Kelvin = Quantity<struct KelvinTag>;
using Joule = Quantity<struct JouleTag>;
using Watt = Quantity<struct WattTag>;
using Seconds = Quantity<struct SecondsTag>;

constexpr RadPerSec to_angular(Hertz f) { return RadPerSec(2.0 * std::numbers::pi * f.value()); }
constexpr Hertz to_cyclic(RadPerSec w) { return Hertz(w.value() / (2.0 * std::numbers::pi)); }

namespace literals {
constexpr Hertz operator""_Hz(long double v) { return Hertz(static_cast<double>(v)); }
constexpr Hertz operator""_GHz(long double v) { return Hertz(static_cast<double>(v) * 1e9); }
constexpr Kelvin operator""_K(long double v) { return Kelvin(static_cast<double>(v)); }
constexpr Kelvin operator""_mK(long double v) { return Kelvin(static_cast<double>(v) * 1e-3); }
}  // namespace literals

}  // namespace scres
