#include <algorithm>
#include <cmath>

#include "doctest.h"
#include "scres/constants.hpp"
#include "scres/error.hpp"
#include "scres/numeric.hpp"
#include "scres/rng.hpp"
#include "scres/tls.hpp"

using namespace scres;
using namespace scres::literals;

namespace {

TlsFit reference_fit() {
  TlsFit f;
  f.delta_tls0 = 8e-6;
  f.n_c = 10;
  f.beta = 0.5;
  f.delta_other = 4e-6;
  f.frequency = 6.0_GHz;
  f.temperature = 0.1_K;
  return f;
}

std::vector<PowerSweepPoint> sweep_from(const TlsFit& f, double lo, double hi, int n, double rel_noise = 0,
                                         std::uint64_t seed = 0) {
  Rng rng(seed);
  std::vector<PowerSweepPoint> out;
  for (int i = 0; i < n; ++i) {
    const double nb = lo * std::pow(hi / lo, static_cast<double>(i) / (n - 1));
    const double d = eval_tls_loss(f, nb, f.temperature) * (1.0 + rel_noise * rng.normal());
    out.push_back({nb, d, rel_noise * d});
  }
  return out;
}

}  // namespace

TEST_CASE("eval_tls_loss closed form") {
  const auto f = reference_fit();
  // hand evaluation
  const double x = 6.62607015e-34 * 6e9 / (2 * 1.380649e-23 * 0.1);
  const double expected = 8e-6 * std::tanh(x) / std::sqrt(1 + std::pow(1000.0 / 10.0, 0.5)) + 4e-6;
  CHECK(eval_tls_loss(f, 1000, 0.1_K) == doctest::Approx(expected).epsilon(1e-14));
  CHECK(eval_tls_loss(f, 0, Kelvin(1e-4)) == doctest::Approx(12e-6).epsilon(1e-12));
  CHECK(eval_tls_loss(f, 1e12, 0.1_K) == doctest::Approx(4e-6).epsilon(1e-4));
}

TEST_CASE("eval_tls_loss monotonicity") {
  const auto f = reference_fit();
  double prev = 1.0;
  for (double nb = 1e-3; nb < 1e9; nb *= 1.7) {
    const double d = eval_tls_loss(f, nb, 0.1_K);
    CHECK(d <= prev);
    prev = d;
  }
  prev = 1.0;
  for (double t = 0.01; t < 1.0; t += 0.01) {
    const double d = eval_tls_loss(f, 5.0, Kelvin(t));
    CHECK(d <= prev);
    prev = d;
  }
}

TEST_CASE("outlier filtering") {
  auto sweep = sweep_from(reference_fit(), 1e-2, 1e6, 25);
  auto r = filter_outliers(sweep);
  CHECK(r.kept.size() == 25);
  CHECK(r.dropped_low.empty());
  CHECK(r.dropped_high.empty());

  auto with_floor = sweep;
  with_floor.insert(with_floor.begin(), {1e-4, 2e-5, 0});
  r = filter_outliers(with_floor);
  REQUIRE(r.dropped_window.size() == 1);
  CHECK(r.dropped_window[0] == 0);

  auto low = sweep;
  low[0].delta_i = 0.85 * low[1].delta_i;
  r = filter_outliers(low);
  REQUIRE(r.dropped_low.size() == 1);
  CHECK(r.dropped_low[0] == 0);

  auto high = sweep;
  high.back().delta_i = 1.2 * high[high.size() - 2].delta_i;
  r = filter_outliers(high);
  REQUIRE(r.dropped_high.size() == 1);
  CHECK(r.dropped_high[0] == high.size() - 1);

  std::vector<PowerSweepPoint> tiny(sweep.begin(), sweep.begin() + 3);
  CHECK_THROWS_AS(filter_outliers(tiny), Error);
}

TEST_CASE("outlier filtering is idempotent and partitions the input") {
  Rng rng(5);
  for (int trial = 0; trial < 200; ++trial) {
    auto sweep = sweep_from(reference_fit(), 1e-4, 1e6, 30, 0.08, trial);
    OutlierReport r;
    try {
      r = filter_outliers(sweep);
    } catch (const Error&) {
      continue;
    }
    const std::size_t total = r.kept.size() + r.dropped_window.size() + r.dropped_low.size() + r.dropped_high.size();
    CHECK(total == sweep.size());
    const auto kept = select(sweep, r);
    const auto again = filter_outliers(kept);
    CHECK(again.kept.size() == kept.size());
  }
}

TEST_CASE("noiseless power-sweep round trip") {
  const auto truth = reference_fit();
  const auto fit = fit_power_sweep(sweep_from(truth, 1e-2, 1e6, 40), truth.frequency, truth.temperature);
  CHECK(fit.delta_tls0 == doctest::Approx(truth.delta_tls0).epsilon(1e-3));
  CHECK(fit.n_c == doctest::Approx(truth.n_c).epsilon(1e-3));
  CHECK(fit.beta == doctest::Approx(truth.beta).epsilon(1e-3));
  CHECK(fit.delta_other == doctest::Approx(truth.delta_other).epsilon(1e-3));
}

TEST_CASE("round trip over random parameters") {
  Rng rng(17);
  for (int trial = 0; trial < 10; ++trial) {
    TlsFit truth = reference_fit();
    truth.delta_tls0 = std::pow(10.0, -6 + 1.5 * rng.uniform());
    truth.n_c = std::pow(10.0, 3 * rng.uniform());
    truth.beta = 0.25 + 0.7 * rng.uniform();
    truth.delta_other = std::pow(10.0, -6.5 + rng.uniform());
    const auto fit = fit_power_sweep(sweep_from(truth, 1e-2, 1e8, 50), truth.frequency, truth.temperature);
    CAPTURE(trial);
    CHECK(fit.delta_tls0 == doctest::Approx(truth.delta_tls0).epsilon(1e-3));
    CHECK(fit.delta_other == doctest::Approx(truth.delta_other).epsilon(1e-3));
    CHECK(fit.beta == doctest::Approx(truth.beta).epsilon(1e-3));
  }
}

TEST_CASE("noisy power sweeps: median within 10%") {
  const auto truth = reference_fit();
  std::vector<double> d0;
  std::vector<double> dother;
  for (std::uint64_t s = 0; s < 100; ++s) {
    const auto fit = fit_power_sweep(sweep_from(truth, 1e-2, 1e6, 40, 0.05, s), truth.frequency, truth.temperature);
    d0.push_back(fit.delta_tls0);
    dother.push_back(fit.delta_other);
  }
  CHECK(std::abs(median(d0) - truth.delta_tls0) / truth.delta_tls0 < 0.10);
  CHECK(std::abs(median(dother) - truth.delta_other) / truth.delta_other < 0.10);
}

TEST_CASE("degenerate and short sweeps") {
  std::vector<PowerSweepPoint> flat;
  for (int i = 0; i < 10; ++i) flat.push_back({std::pow(10.0, i - 2.0), 1e-5, 0});
  CHECK_THROWS_WITH_AS(fit_power_sweep(flat, 6.0_GHz, 0.1_K), doctest::Contains("DegenerateSweep"), Error);
  auto narrow = sweep_from(reference_fit(), 1, 100, 10);
  CHECK_THROWS_AS(fit_power_sweep(narrow, 6.0_GHz, 0.1_K), Error);
}

TEST_CASE("summary_qi") {
  TlsFit f = reference_fit();
  f.delta_tls0 = 0;
  f.delta_other = 4.35e-6;
  auto s = summary_qi(f);
  CHECK(s.qi_low == doctest::Approx(1 / 4.35e-6));
  CHECK(s.qi_low == doctest::Approx(2.3e5).epsilon(1e-3));
  CHECK(s.qi_high == s.qi_low);
  const auto g = reference_fit();
  s = summary_qi(g);
  const double x = 6.62607015e-34 * 6e9 / (2 * 1.380649e-23 * 0.1);
  CHECK(s.qi_low == doctest::Approx(1 / (8e-6 * std::tanh(x) / std::sqrt(1 + std::pow(0.1, 0.5)) + 4e-6)));
  CHECK(s.qi_high == doctest::Approx(2.5e5));
}

TEST_CASE("cohort medians") {
  auto make = [](double qi_high, Cohort c) {
    TlsFit f = reference_fit();
    f.delta_tls0 = 0;
    f.delta_other = 1 / qi_high;
    return CohortFit{"r", c, f};
  };
  std::vector<CohortFit> fits{make(1e5, Cohort::Membrane), make(3e5, Cohort::Membrane), make(2e5, Cohort::Substrate)};
  auto m = cohort_medians(fits);
  CHECK(m[0].median_qi_low == doctest::Approx(2e5));
  CHECK(m[1].median_qi_high == doctest::Approx(2e5));
  fits.pop_back();
  CHECK_THROWS_WITH_AS(cohort_medians(fits), doctest::Contains("EmptyCohort"), Error);
  CHECK(parse_cohort("M") == Cohort::Membrane);
  CHECK(parse_cohort("substrate") == Cohort::Substrate);
}
