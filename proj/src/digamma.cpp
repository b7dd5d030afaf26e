#include "scres/digamma.hpp"

#include <array>

#include "scres/error.hpp"

namespace scres {

std::complex<double> digamma(std::complex<double> z) {
  require(z.real() > 0, ErrorCode::InvalidArgument, "digamma implemented for Re(z) > 0");
  std::complex<double> shift{0.0, 0.0};
  while (z.real() <= 10.0) {
    shift -= 1.0 / z;
    z += 1.0;
  }
  // B_{2k} / (2k) for k = 1..7
  static constexpr std::array<double, 7> kCoeff = {
      1.0 / 12.0, -1.0 / 120.0, 1.0 / 252.0, -1.0 / 240.0, 1.0 / 132.0, -691.0 / 32760.0, 1.0 / 12.0};
  const std::complex<double> inv2 = 1.0 / (z * z);
  std::complex<double> series{0.0, 0.0};
  std::complex<double> power = inv2;
  for (double c : kCoeff) {
    series += c * power;
    power *= inv2;
  }
  return shift + std::log(z) - 0.5 / z - series;
}

}  // namespace scres
