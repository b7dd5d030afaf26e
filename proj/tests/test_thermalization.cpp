#include <cmath>

#include "doctest.h"
#include "scres/error.hpp"
#include "scres/rng.hpp"
#include "scres/synth.hpp"
#include "scres/thermalization.hpp"

using namespace scres;

namespace {

TimeSeries series_of(const std::vector<double>& v, std::int64_t first_index = 0) {
  std::vector<TimePoint> pts;
  for (std::size_t i = 0; i < v.size(); ++i) {
    const auto idx = first_index + static_cast<std::int64_t>(i);
    pts.push_back({idx, static_cast<double>(idx), v[i]});
  }
  return TimeSeries(pts, "K");
}

std::vector<double> flat_then_falling(int flat, int total, double noise = 0.0, std::uint64_t seed = 1) {
  Rng rng(seed);
  std::vector<double> v;
  for (int i = 0; i < total; ++i) {
    const double base = i <= flat ? 1.0 : 1.0 - 0.01 * (i - flat);
    v.push_back(base + noise * rng.normal());
  }
  return v;
}

}  // namespace

TEST_CASE("linear calibration is reproduced") {
  std::vector<CalibrationKnot> k;
  for (int i = 0; i < 12; ++i) k.push_back({Kelvin(0.3 + 0.01 * i), 6e9 - 8.5e4 * (0.3 + 0.01 * i)});
  const auto cal = build_calibration(k);
  for (int i = 0; i < 11; ++i) {
    const double t = 0.305 + 0.01 * i;
    CHECK(std::abs(cal.frequency_at(Kelvin(t)) - (6e9 - 8.5e4 * t)) <= 1e-12 * 6e9);
  }
}

TEST_CASE("calibration of the temperature model at 10 mK steps") {
  const auto truth = representative_device();
  const auto cal = build_calibration(gen_calibration_knots(truth, 0.25, 0.55, 0.01));
  double worst = 0;
  for (int i = 0; i < 300; ++i) {
    const double t = 0.2505 + 0.001 * i;
    if (t > 0.55) break;
    worst = std::max(worst, std::abs(cal.frequency_at(Kelvin(t)) - model_complex_frequency(truth.mb, Kelvin(t)).real()));
  }
  INFO("worst off-knot error " << worst << " Hz");
  CHECK(worst < 500.0);
  // monotone on a dense grid
  double prev = std::numeric_limits<double>::infinity();
  for (int i = 0; i <= 3000; ++i) {
    const double f = cal.frequency_at(Kelvin(0.25 + 0.3 * i / 3000));
    CHECK(f <= prev);
    prev = f;
  }
}

TEST_CASE("non-monotone calibration input") {
  std::vector<CalibrationKnot> k{{Kelvin(0.3), 10}, {Kelvin(0.31), 9}, {Kelvin(0.32), 9}, {Kelvin(0.33), 8}};
  CHECK_THROWS_WITH_AS(build_calibration(k), doctest::Contains("points 1"), Error);
  CHECK_THROWS_WITH_AS(build_calibration(k), doctest::Contains("NonMonotoneInput"), Error);
}

TEST_CASE("frequency to temperature") {
  const auto truth = representative_device();
  const auto knots = gen_calibration_knots(truth, 0.25, 0.55, 0.01);
  const auto cal = build_calibration(knots);
  for (const auto& k : knots) CHECK(frequency_to_temperature(cal, k.frequency_hz) == k.temperature);
  Rng rng(9);
  double worst = 0;
  for (int i = 0; i < 100; ++i) {
    const double t = 0.25 + 0.3 * rng.uniform();
    worst = std::max(worst, std::abs(frequency_to_temperature(cal, cal.frequency_at(Kelvin(t))).value() - t));
  }
  CHECK(worst < 2e-8);
  CHECK_THROWS_WITH_AS(frequency_to_temperature(cal, cal.f_max() + 1), doctest::Contains("OutOfRange"), Error);
  CHECK_THROWS_AS(frequency_to_temperature(cal, cal.f_min() - 1), Error);
}

TEST_CASE("change detection basics") {
  CHECK_THROWS_WITH_AS(detect_change_start(series_of(std::vector<double>(40, 1.0)), Direction::Decreasing),
                       doctest::Contains("NoChangeDetected"), Error);
  for (auto mode : {WindowMode::Sliding, WindowMode::NonOverlapping}) {
    ChangeDetectOptions o;
    o.mode = mode;
    const auto idx = detect_change_start(series_of(flat_then_falling(30, 80)), Direction::Decreasing, o);
    CAPTURE(static_cast<int>(mode));
    CHECK(std::abs(idx - 30) <= 5);
  }
  CHECK(detect_change_start(series_of(flat_then_falling(30, 80)), Direction::Decreasing) == 31);
  CHECK_THROWS_AS(detect_change_start(series_of(std::vector<double>(10, 1.0)), Direction::Decreasing), Error);
}

TEST_CASE("a transient spike does not move the detection") {
  auto v = flat_then_falling(30, 80);
  const auto clean = detect_change_start(series_of(v), Direction::Decreasing);
  v[12] += 0.5;
  CHECK(detect_change_start(series_of(v), Direction::Decreasing) == clean);
  v[12] -= 1.0;
  CHECK(detect_change_start(series_of(v), Direction::Decreasing) == clean);
}

TEST_CASE("change detection invariances") {
  for (std::uint64_t seed = 0; seed < 50; ++seed) {
    const auto v = flat_then_falling(40, 120, 0.003, seed);
    const auto base = detect_change_start(series_of(v), Direction::Decreasing);
    std::vector<double> shifted = v;
    for (auto& x : shifted) x += 0.25;
    std::vector<double> neg = v;
    for (auto& x : neg) x = -x;
    CHECK(detect_change_start(series_of(shifted), Direction::Decreasing) == base);
    CHECK(detect_change_start(series_of(neg), Direction::Increasing) == base);
    CHECK(detect_change_start(series_of(v, 1000), Direction::Decreasing) == base + 1000);
  }
}

TEST_CASE("symmetric parabola") {
  std::vector<double> v;
  for (int i = 0; i < 41; ++i) v.push_back(3.0 + 0.02 * (i - 20.0) * (i - 20.0));
  const auto p = fit_asymmetric_parabola(series_of(v), ExtremumKind::Minimum);
  CHECK(std::abs(p.vertex_index - 20.0) < 1e-6);
  CHECK(p.a_left == doctest::Approx(p.a_right).epsilon(1e-6));
  CHECK(p.vertex_value == doctest::Approx(3.0));
}

TEST_CASE("asymmetric parabola") {
  for (auto kind : {ExtremumKind::Minimum, ExtremumKind::Maximum}) {
    const double s = kind == ExtremumKind::Minimum ? 1 : -1;
    std::vector<double> v;
    for (int i = 0; i < 40; ++i) {
      const double dx = i - 17.3;
      v.push_back(1.0 + s * (dx < 0 ? 0.02 : 0.01) * dx * dx);
    }
    const auto p = fit_asymmetric_parabola(series_of(v), kind);
    CHECK(std::abs(p.vertex_index - 17.3) < 0.05);
    CHECK(p.a_left == doctest::Approx(2 * p.a_right).epsilon(1e-3));
  }
}

TEST_CASE("monotone series has no interior extremum") {
  std::vector<double> v;
  for (int i = 0; i < 30; ++i) v.push_back(0.1 * i);
  CHECK_THROWS_WITH_AS(fit_asymmetric_parabola(series_of(v), ExtremumKind::Minimum),
                       doctest::Contains("NoInteriorExtremum"), Error);
  CHECK_THROWS_AS(fit_asymmetric_parabola(series_of(v), ExtremumKind::Maximum), Error);
}

TEST_CASE("parabola vertex is invariant under affine value maps") {
  Rng rng(4);
  for (int trial = 0; trial < 20; ++trial) {
    std::vector<double> v;
    const double x0 = 20 + 10 * rng.uniform();
    for (int i = 0; i < 50; ++i) {
      const double dx = i - x0;
      v.push_back((dx < 0 ? 0.03 : 0.012) * dx * dx + 0.2 * rng.normal());
    }
    const auto base = fit_asymmetric_parabola(series_of(v), ExtremumKind::Minimum);
    for (double& x : v) x = 3.7 * x - 12.0;
    const auto mapped = fit_asymmetric_parabola(series_of(v), ExtremumKind::Minimum);
    CHECK(std::abs(mapped.vertex_index - base.vertex_index) < 1e-6);
  }
}

namespace {

const RegionBounds kBounds = adr_sweep_regions();

// Regions are read off the frequency: it falls as the bath warms.
TimeSeries thermal_series(double tau, std::uint64_t seed, const TimeSeries& bath) {
  DeviceTruth d = representative_device(seed);
  d.thermal_tau_s = tau;
  return gen_thermal_response(d, bath);
}

}  // namespace

TEST_CASE("self comparison and antisymmetry") {
  const auto bath = gen_bath_profile(adr_sweep_schedule(), 3);
  const auto a = thermal_series(20, 1, bath);
  const auto b = thermal_series(10, 2, bath);
  const auto self = pairwise_report(a, a, kBounds);
  for (const auto& r : self.regions) {
    REQUIRE(r.marks);
    CHECK(r.marks->difference == 0);
  }
  const auto ab = pairwise_report(a, b, kBounds);
  const auto ba = pairwise_report(b, a, kBounds);
  for (std::size_t r = 0; r < 4; ++r) {
    REQUIRE(ab.regions[r].marks);
    REQUIRE(ba.regions[r].marks);
    CHECK(ab.regions[r].marks->difference == -ba.regions[r].marks->difference);
    CHECK(ab.regions[r].marks->difference == ab.regions[r].marks->resonator_a_point - ab.regions[r].marks->resonator_b_point);
  }
}

TEST_CASE("equal time constants give no resolvable difference") {
  const auto bath = gen_bath_profile(adr_sweep_schedule(), 7);
  for (std::uint64_t s = 0; s < 5; ++s) {
    const auto rep = pairwise_report(thermal_series(10, 100 + s, bath), thermal_series(10, 200 + s, bath), kBounds);
    for (const auto& r : rep.regions) {
      REQUIRE(r.marks);
      CHECK(std::abs(r.marks->difference) <= 1);
    }
  }
}

TEST_CASE("region failures are recorded, not thrown") {
  std::vector<double> flat(800, 0.3);
  const auto a = series_of(flat);
  const auto rep = pairwise_report(a, a, kBounds);
  for (const auto& r : rep.regions) {
    CHECK_FALSE(r.marks);
    CHECK(r.error.has_value());
  }
  CHECK(render_table_row(rep) == "a-b: --, --, --, --");
}

TEST_CASE("table row rendering") {
  PairwiseReport rep;
  rep.label = "1-5";
  const std::array<std::int64_t, 4> d{0, 1, 0, 3};
  constexpr std::array<Region, 4> regions{Region::I, Region::II, Region::III, Region::IV};
  for (std::size_t r = 0; r < 4; ++r) {
    rep.regions[r].region = regions[r];
    rep.regions[r].marks = RegionMarks{regions[r], 100 + d[r], 100, d[r]};
  }
  CHECK(render_table_row(rep) == "1-5: 0, 1, 0, 3");
  const std::vector<PairwiseReport> reps{rep};
  CHECK(render_table(reps).find("1-5") != std::string::npos);
}

TEST_CASE("the slower resonator marks later in every region") {
  const auto bath = gen_bath_profile(adr_sweep_schedule(), 3);
  for (std::uint64_t s = 0; s < 5; ++s) {
    const auto rep = pairwise_report(thermal_series(20, 10 + s, bath), thermal_series(10, 20 + s, bath), kBounds);
    for (const auto& r : rep.regions) {
      REQUIRE(r.marks);
      CHECK(r.marks->difference > 0);
    }
  }
}
