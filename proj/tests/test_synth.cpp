#include <cmath>

#include "doctest.h"
#include "scres/error.hpp"
#include "scres/resonance.hpp"
#include "scres/synth.hpp"

using namespace scres;

namespace {

DeviceTruth noiseless(std::uint64_t seed = 0) {
  auto d = representative_device(seed);
  d.noise = NoiseLevels{};
  return d;
}

std::vector<double> sweep_temps() {
  std::vector<double> t;
  for (int i = 0; i <= 40; ++i) t.push_back(0.1 + 0.01 * i);
  return t;
}

TimeSeries step_bath(double before, double after, std::size_t step_at, std::size_t n) {
  std::vector<TimePoint> pts;
  for (std::size_t k = 0; k < n; ++k) pts.push_back({static_cast<std::int64_t>(k), static_cast<double>(k), k < step_at ? before : after});
  return TimeSeries(pts, "K");
}

}  // namespace

TEST_CASE("representative device is valid") {
  const auto d = representative_device(3);
  CHECK_NOTHROW(validate(d));
  CHECK(d.resonance.q_internal == doctest::Approx(1e5));
  auto bad = d;
  bad.thermal_tau_s = 0;
  CHECK_THROWS_AS(validate(bad), Error);
}

TEST_CASE("noiseless generators equal the forward models") {
  const auto d = noiseless();
  const auto grid = linewidth_grid(d.resonance, 301, 3.0);
  const auto trace = gen_trace(d, grid);
  for (std::size_t i = 0; i < grid.size(); ++i) CHECK(trace.values()[i] == model_s21(d.resonance, Hertz(grid[i])));

  const std::vector<double> n{0.1, 1, 10, 100, 1e4};
  const auto ps = gen_power_sweep(d, n);
  for (std::size_t i = 0; i < n.size(); ++i) CHECK(ps[i].delta_i == eval_tls_loss(d.tls, n[i], d.tls.temperature));

  const auto temps = sweep_temps();
  const auto ts = gen_temp_sweep(d, temps);
  for (std::size_t i = 0; i < temps.size(); ++i) {
    const Complex z = model_complex_frequency(d.mb, Kelvin(temps[i]));
    CHECK(ts[i].f_hz == z.real());
    CHECK(ts[i].neg_f_over_2qi_hz == z.imag());
  }
}

TEST_CASE("generators are deterministic per seed") {
  const auto a = representative_device(77);
  const auto b = representative_device(77);
  const auto c = representative_device(78);
  const auto grid = linewidth_grid(a.resonance, 101, 3.0);
  const auto ta = gen_trace(a, grid);
  const auto tb = gen_trace(b, grid);
  const auto tc = gen_trace(c, grid);
  bool differs = false;
  for (std::size_t i = 0; i < grid.size(); ++i) {
    CHECK(ta.values()[i] == tb.values()[i]);
    differs = differs || ta.values()[i] != tc.values()[i];
  }
  CHECK(differs);
  const auto bath = gen_bath_profile(adr_sweep_schedule(), 5);
  const auto ra = gen_thermal_response(a, bath);
  const auto rb = gen_thermal_response(b, bath);
  for (std::size_t i = 0; i < ra.size(); ++i) CHECK(ra[i].value == rb[i].value);
  const auto pa = gen_phase_series(a, 50, 1.0, 1e3, PhaseModel::Circle);
  const auto pb = gen_phase_series(b, 50, 1.0, 1e3, PhaseModel::Circle);
  for (std::size_t i = 0; i < pa.size(); ++i) CHECK(pa[i].value == pb[i].value);
}

TEST_CASE("trace noise statistics over 100 seeds") {
  const auto grid = linewidth_grid(representative_device().resonance, 64, 3.0);
  std::vector<double> sum(grid.size(), 0.0), sum2(grid.size(), 0.0);
  constexpr int kSeeds = 100;
  for (int s = 0; s < kSeeds; ++s) {
    const auto d = representative_device(static_cast<std::uint64_t>(s));
    const auto t = gen_trace(d, grid);
    for (std::size_t i = 0; i < grid.size(); ++i) {
      const double r = t.values()[i].real() - model_s21(d.resonance, Hertz(grid[i])).real();
      sum[i] += r;
      sum2[i] += r * r;
    }
  }
  int within = 0;
  double pooled = 0;
  for (std::size_t i = 0; i < grid.size(); ++i) {
    const double var = (sum2[i] - sum[i] * sum[i] / kSeeds) / (kSeeds - 1);
    pooled += var;
    if (std::abs(std::sqrt(var) - 0.005) < 0.1 * 0.005 * 2.5) ++within;
  }
  // per-point estimates scatter by ~7%; the pooled one must be within 10%
  CHECK(std::abs(std::sqrt(pooled / grid.size()) - 0.005) < 0.1 * 0.005);
  CHECK(within >= static_cast<int>(grid.size()) - 1);
}

TEST_CASE("fast thermalization tracks the bath") {
  auto d = noiseless();
  d.thermal_tau_s = 1e-6;
  const auto bath = gen_bath_profile(adr_sweep_schedule(), 1);
  const auto dev = gen_device_temperature(d, bath);
  double worst = 0;
  for (std::size_t i = 0; i < bath.size(); ++i) worst = std::max(worst, std::abs(dev[i].value - bath[i].value));
  CHECK(worst < 1e-6);
}

TEST_CASE("step response reaches 1 - 1/e after one time constant") {
  auto d = noiseless();
  d.thermal_tau_s = 10.0;
  // the bath is linear between samples, so the step is a 1 s ramp from t = 49 to 50
  const auto bath = step_bath(0.3, 0.4, 50, 120);
  const auto dev = gen_device_temperature(d, bath);
  const double target = 0.3 + 0.1 * (1 - std::exp(-1.0));
  std::size_t k = 0;
  while (dev[k].value < target) ++k;
  const double t_cross = dev[k - 1].time_s +
                         (target - dev[k - 1].value) / (dev[k].value - dev[k - 1].value) * (dev[k].time_s - dev[k - 1].time_s);
  CHECK(std::abs(t_cross - (49.5 + 10.0)) <= 0.5);
  // analytic exponential well after the ramp
  for (std::size_t i = 60; i < 120; ++i) {
    const double t = dev[i].time_s;
    const double exact = 0.4 - 0.1 * (10.0 / 1.0) * (std::exp(1.0 / 10.0) - 1.0) * std::exp(-(t - 49.0) / 10.0);
    CHECK(dev[i].value == doctest::Approx(exact).epsilon(1e-12));
  }
}

TEST_CASE("bath profile follows the schedule") {
  const auto bath = gen_bath_profile(adr_sweep_schedule(), 0);
  CHECK(bath.size() == 800);
  CHECK(std::abs(bath[45].value - 0.30) < 3e-3);
  CHECK(std::abs(bath[160].value - 0.40) < 2e-2);
  CHECK(std::abs(bath[310].value - 0.50) < 1e-2);
  CHECK(std::abs(bath[700].value - 0.30) < 2e-3);
  double lo = 1, hi = 0;
  for (std::size_t i = 0; i < bath.size(); ++i) {
    lo = std::min(lo, bath[i].value);
    hi = std::max(hi, bath[i].value);
  }
  // second-order loop overshoots a little on each ramp
  CHECK(lo < 0.30);
  CHECK(hi > 0.50);
  CHECK(lo > 0.25);
  CHECK(hi < 0.55);
}

TEST_CASE("longer time constant lags the bath more") {
  const auto bath = gen_bath_profile(adr_sweep_schedule(), 2);
  auto fast = noiseless();
  auto slow = noiseless();
  fast.thermal_tau_s = 5;
  slow.thermal_tau_s = 20;
  const auto a = gen_device_temperature(fast, bath);
  const auto b = gen_device_temperature(slow, bath);
  // during the up-ramp the slower device is colder
  for (std::size_t i = 290; i < 320; ++i) CHECK(b[i].value < a[i].value);
}

TEST_CASE("phase series models") {
  auto d = noiseless(4);
  std::vector<double> ex;
  const auto bark = gen_phase_series(d, 200, 0.5, 5e3, PhaseModel::Barkhausen, &ex);
  const auto circ = gen_phase_series(d, 200, 0.5, 5e3, PhaseModel::Circle);
  REQUIRE(ex.size() == 200);
  const double k = 2 * d.resonance.q_total / d.resonance.f0.value();
  for (std::size_t i = 0; i < 200; ++i) {
    CHECK(bark[i].value == doctest::Approx(k * ex[i]));
    CHECK(circ[i].value == doctest::Approx(std::atan(k * ex[i])));
    CHECK(bark[i].time_s == doctest::Approx(0.5 * static_cast<double>(i)));
  }
}

TEST_CASE("input checks") {
  const auto d = noiseless();
  const std::vector<double> bad_n{1, 1};
  CHECK_THROWS_AS(gen_power_sweep(d, bad_n), Error);
  const std::vector<double> bad_t{0.3, 0.2};
  CHECK_THROWS_AS(gen_temp_sweep(d, bad_t), Error);
  CHECK_THROWS_AS(gen_calibration_knots(d, 0.5, 0.3, 0.01), Error);
}
