#include <cmath>
#include <numbers>
#include <type_traits>

#include "doctest.h"
#include "scres/constants.hpp"
#include "scres/error.hpp"
#include "scres/numeric.hpp"
#include "scres/types.hpp"

using namespace scres;
using namespace scres::literals;

TEST_CASE("physical constants") {
  CHECK(PhysicalConstants::hbar == doctest::Approx(PhysicalConstants::h / (2 * std::numbers::pi)).epsilon(1e-15));
  CHECK(PhysicalConstants::h == 6.62607015e-34);
  CHECK(PhysicalConstants::kB == 1.380649e-23);
  CHECK(PhysicalConstants::mu0 > 0);
}

TEST_CASE("units do not mix") {
  static_assert(!std::is_convertible_v<Hertz, RadPerSec>);
  static_assert(!std::is_convertible_v<double, Kelvin>);
  static_assert(!std::is_constructible_v<Hertz, RadPerSec>);
  CHECK(to_angular(1.0_Hz).value() == doctest::Approx(2 * std::numbers::pi));
  CHECK(to_cyclic(to_angular(6.0_GHz)).value() == doctest::Approx(6e9));
  CHECK((300.0_mK).value() == doctest::Approx(0.3));
  CHECK(6.0_GHz / 3.0_GHz == doctest::Approx(2.0));
}

TEST_CASE("complex_resonant_frequency") {
  auto z = complex_resonant_frequency(6e9_Hz, 1e18);
  CHECK(std::abs(z.imag()) <= 3e-9);
  z = complex_resonant_frequency(6e9_Hz, 1e5);
  CHECK(z.real() == 6e9);
  CHECK(z.imag() == doctest::Approx(-30000.0).epsilon(1e-14));
  z = complex_resonant_frequency(5e9_Hz, 0.5e5);
  CHECK(z.imag() == doctest::Approx(-50000.0).epsilon(1e-14));
  CHECK_THROWS_AS(complex_resonant_frequency(Hertz(-1), 1e5), Error);
  CHECK_THROWS_AS(complex_resonant_frequency(6e9_Hz, 0), Error);
}

TEST_CASE("complex_resonant_frequency is linear in f0") {
  for (double qi : {1e3, 2e5, 7e6}) {
    const auto a = complex_resonant_frequency(Hertz(3e9), qi);
    const auto b = complex_resonant_frequency(Hertz(5e9), qi);
    const auto c = complex_resonant_frequency(Hertz(8e9), qi);
    CHECK(std::abs(c - (a + b)) <= 1e-6);
  }
}

TEST_CASE("ComplexTrace invariants") {
  std::vector<double> f{1, 2, 3, 4, 5, 6, 7, 8};
  std::vector<Complex> v(8, Complex(1, 0));
  CHECK_NOTHROW(ComplexTrace(f, v));
  CHECK_THROWS_AS(ComplexTrace({1, 2, 3}, {1, 1, 1}), Error);
  auto bad = f;
  bad[4] = bad[3];
  CHECK_THROWS_AS(ComplexTrace(bad, v), Error);
  auto nan = v;
  nan[2] = Complex(std::nan(""), 0);
  CHECK_THROWS_AS(ComplexTrace(f, nan), Error);
  v.pop_back();
  CHECK_THROWS_AS(ComplexTrace(f, v), Error);
}

TEST_CASE("ResonanceFit consistency") {
  const auto fit = ResonanceFit::from_qi_qc(6e9_Hz, 1e5, 5e4, 0.1);
  CHECK(1 / fit.q_total == doctest::Approx(1 / 1e5 + std::cos(0.1) / 5e4).epsilon(1e-12));
  auto broken = fit;
  broken.q_total *= 1.001;
  CHECK_THROWS_AS(validate(broken), Error);
  broken = fit;
  broken.q_internal = -1;
  CHECK_THROWS_AS(validate(broken), Error);
}

TEST_CASE("TlsFit and MbTempFit validation") {
  TlsFit t;
  t.frequency = 6.0_GHz;
  CHECK_NOTHROW(validate(t));
  t.beta = 1.2;
  CHECK_THROWS_AS(validate(t), Error);
  MbTempFit m;
  m.omega = to_angular(6.0_GHz);
  CHECK_NOTHROW(validate(m));
  m.gap_ratio = 0;
  CHECK_THROWS_AS(validate(m), Error);
}

TEST_CASE("TimeSeries invariants and slicing") {
  std::vector<TimePoint> pts;
  for (int i = 0; i < 10; ++i) pts.push_back({i, 1.0 * i, 0.1 * i});
  TimeSeries s(pts, "K");
  CHECK(s.size() == 10);
  auto sub = s.slice(3, 6);
  CHECK(sub.size() == 4);
  CHECK(sub[0].index == 3);
  auto doubled = s.map_values([](double v) { return 2 * v; }, "K");
  CHECK(doubled[5].value == doctest::Approx(1.0));
  pts[4].index = 3;
  CHECK_THROWS_AS(TimeSeries(pts, "K"), Error);
  pts[4].index = 4;
  pts[4].time_s = 2.0;
  CHECK_THROWS_AS(TimeSeries(pts, "K"), Error);
}

TEST_CASE("numeric helpers") {
  CHECK(median({3, 1, 2}) == 2);
  CHECK(median({1e5, 3e5}) == 2e5);
  CHECK(population_stddev(std::vector<double>{1, 3}) == doctest::Approx(1.0));
  std::vector<double> x{0, 1, 2, 3};
  std::vector<double> y{1, 3, 5, 7};
  auto l = fit_line(x, y);
  CHECK(l.slope == doctest::Approx(2));
  CHECK(l.intercept == doctest::Approx(1));
  std::vector<double> ph;
  for (int i = 0; i < 50; ++i) ph.push_back(std::remainder(0.3 * i, 2 * std::numbers::pi));
  auto u = unwrap_phase(ph);
  for (int i = 0; i < 50; ++i) CHECK(u[i] == doctest::Approx(0.3 * i));
}

TEST_CASE("geometry parsing") {
  CHECK(parse_geometry("notch") == Geometry::Notch);
  CHECK(parse_geometry("reflection") == Geometry::Reflection);
  CHECK_THROWS_AS(parse_geometry("transmission"), Error);
}
