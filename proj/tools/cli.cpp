#include "cli.hpp"

#include <openssl/evp.h>

#include <CLI11.hpp>
#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <json.hpp>
#include <numbers>
#include <sstream>

#include "scres/error.hpp"
#include "scres/io.hpp"
#include "scres/mattis_bardeen.hpp"
#include "scres/numeric.hpp"
#include "scres/resonance.hpp"
#include "scres/rng.hpp"
#include "scres/stability.hpp"
#include "scres/synth.hpp"
#include "scres/thermalization.hpp"
#include "scres/tls.hpp"
#include "scres/version.hpp"

namespace fs = std::filesystem;
using Json = nlohmann::ordered_json;

namespace scres::cli {
namespace {

const std::vector<std::string> kCommands{"fit-resonance", "fit-power", "fit-temperature", "thermalize",
                                         "stability",     "synth",     "report"};

Json num(double v) { return std::isfinite(v) ? Json(v) : Json(nullptr); }

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::IoError, "cannot write " + path.string());
  out << text;
  if (!out) throw Error(ErrorCode::IoError, "write failed: " + path.string());
}

void write_json(const fs::path& path, const Json& j) { write_text(path, j.dump(2) + "\n"); }

std::string utc_now() {
  const auto now = std::chrono::system_clock::now();
  const std::time_t t = std::chrono::system_clock::to_time_t(now);
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

struct Axis {
  std::string label;
  std::string unit;
  std::string scale = "linear";
};

// Two-column table plus a sidecar naming the axes.
void write_plot(const fs::path& dir, const std::string& name, const Axis& x, const Axis& y,
                std::span<const double> xs, std::span<const double> ys, const std::string& description) {
  std::ostringstream os;
  os << "# " << x.label << " [" << x.unit << "]\t" << y.label << " [" << y.unit << "]\n";
  for (std::size_t i = 0; i < xs.size(); ++i) os << format_number(xs[i]) << "\t" << format_number(ys[i]) << "\n";
  write_text(dir / (name + ".dat"), os.str());
  Json side;
  side["data"] = name + ".dat";
  side["description"] = description;
  side["x"] = {{"label", x.label}, {"unit", x.unit}, {"scale", x.scale}, {"column", 0}};
  side["y"] = {{"label", y.label}, {"unit", y.unit}, {"scale", y.scale}, {"column", 1}};
  write_json(dir / (name + ".axes.json"), side);
}

Json config_json(const RunConfig& c) {
  Json j;
  j["command"] = c.command;
  j["inputs"] = c.inputs;
  j["out_dir"] = c.out_dir;
  j["geometry"] = std::string(to_string(c.geometry));
  j["attenuation_db"] = c.attenuation_db;
  j["seed"] = c.seed;
  j["tolerance"] = c.tolerance ? Json(*c.tolerance) : Json(nullptr);
  j["resonator_id"] = c.resonator_id;
  j["cohort"] = c.cohort;
  j["frequency_hz"] = c.frequency_hz ? Json(*c.frequency_hz) : Json(nullptr);
  j["temperature_k"] = c.temperature_k ? Json(*c.temperature_k) : Json(nullptr);
  j["delay_estimation"] = c.delay_estimation;
  j["regions"] = c.regions;
  j["calibrations"] = c.calibrations;
  j["change_window"] = c.change_window;
  j["value_column"] = c.value_column;
  j["f0_hz"] = c.f0_hz ? Json(*c.f0_hz) : Json(nullptr);
  j["q_total"] = c.q_total ? Json(*c.q_total) : Json(nullptr);
  j["phase_trace"] = c.phase_trace;
  j["window_linewidths"] = c.window_linewidths;
  j["kind"] = c.kind;
  j["tau_a_s"] = c.tau_a_s;
  j["tau_b_s"] = c.tau_b_s;
  return j;
}

class Session {
 public:
  Session(const RunConfig& c, std::ostream& out) : config_(c), out_(out), dir_(c.out_dir) {
    fs::create_directories(dir_);
  }

  const RunConfig& config() const { return config_; }
  const fs::path& dir() const { return dir_; }
  std::ostream& out() { return out_; }

  // Every structured result shares this envelope.
  Json envelope(const std::vector<std::string>& inputs) const {
    Json j;
    j["schema_version"] = kSchemaVersion;
    j["command"] = config_.command;
    j["config"] = config_json(config_);
    Json prov;
    Json in = Json::array();
    for (const auto& p : inputs) in.push_back({{"path", p}, {"sha256", sha256_file(p)}});
    prov["inputs"] = in;
    prov["seed"] = config_.seed;
    prov["model_version"] = kModelVersion;
    prov["rng_algorithm"] = std::string(kRngAlgorithm);
    j["provenance"] = prov;
    return j;
  }

  void emit(const std::string& file, const Json& j) {
    write_json(dir_ / file, j);
    written_.push_back(file);
  }
  void emit_text(const std::string& file, const std::string& text) {
    write_text(dir_ / file, text);
    written_.push_back(file);
  }
  const std::vector<std::string>& written() const { return written_; }

 private:
  const RunConfig& config_;
  std::ostream& out_;
  fs::path dir_;
  std::vector<std::string> written_;
};

std::string stem_of(const std::string& path) { return fs::path(path).stem().string(); }

FitConfig fit_config(const RunConfig& c) {
  FitConfig f;
  f.geometry = c.geometry;
  f.delay_estimation = c.delay_estimation;
  if (c.tolerance) f.convergence_tol = *c.tolerance;
  validate(f);
  return f;
}

Json resonance_json(const ResonanceFit& f) {
  Json j;
  j["geometry"] = std::string(to_string(f.geometry));
  j["f0_hz"] = num(f.f0.value());
  j["q_total"] = num(f.q_total);
  j["q_internal"] = num(f.q_internal);
  j["q_coupling_mag"] = num(f.q_coupling_mag);
  j["phi_rad"] = num(f.phi);
  j["background"] = {{"amplitude", num(f.background.amplitude)},
                     {"phase_rad", num(f.background.phase)},
                     {"delay_s", num(f.background.delay_s)}};
  const auto& s = f.sigma;
  j["uncertainty"] = {{"f0_hz", num(s.f0_hz)},         {"q_total", num(s.q_total)},
                      {"q_internal", num(s.q_internal)}, {"q_coupling_mag", num(s.q_coupling_mag)},
                      {"phi_rad", num(s.phi)},          {"amplitude", num(s.amplitude)},
                      {"phase_rad", num(s.phase)},      {"delay_s", num(s.delay_s)}};
  return j;
}

Json tls_json(const TlsFit& f) {
  Json j;
  j["delta_tls0"] = num(f.delta_tls0);
  j["n_c"] = num(f.n_c);
  j["beta"] = num(f.beta);
  j["delta_other"] = num(f.delta_other);
  j["frequency_hz"] = num(f.frequency.value());
  j["temperature_k"] = num(f.temperature.value());
  j["uncertainty"] = {{"delta_tls0", num(f.sigma.delta_tls0)},
                      {"n_c", num(f.sigma.n_c)},
                      {"beta", num(f.sigma.beta)},
                      {"delta_other", num(f.sigma.delta_other)}};
  return j;
}

std::vector<double> log_grid(double lo, double hi, std::size_t n) {
  std::vector<double> g(n);
  for (std::size_t i = 0; i < n; ++i) {
    g[i] = lo * std::pow(hi / lo, static_cast<double>(i) / static_cast<double>(n - 1));
  }
  return g;
}

// ---------------------------------------------------------------- fit-resonance

int cmd_fit_resonance(Session& s) {
  const auto& c = s.config();
  const FitConfig fc = fit_config(c);
  std::vector<std::vector<std::string>> summary;
  for (std::size_t k = 0; k < c.inputs.size(); ++k) {
    const auto& path = c.inputs[k];
    const ComplexTrace trace = ingest_trace_csv(path);
    const ResonanceFitReport rep = fit_resonance_report(trace, fc);
    std::string id = !c.resonator_id.empty() && c.inputs.size() == 1 ? c.resonator_id
                     : !trace.resonator_id.empty()                  ? trace.resonator_id
                                                                    : stem_of(path);
    Json j = s.envelope({path});
    Json r;
    r["resonator_id"] = id;
    r["fit"] = resonance_json(rep.fit);
    r["diagnostics"] = {{"iterations", rep.iterations},
                        {"residual_rms", num(rep.residual_rms)},
                        {"durbin_watson", num(rep.durbin_watson)},
                        {"noise_floor", num(rep.noise_floor)},
                        {"dip_depth", num(rep.dip_depth)},
                        {"points", trace.size()}};
    double n_bar = std::nan("");
    if (trace.power_dbm) {
      const double applied = *trace.power_dbm - c.attenuation_db;
      n_bar = photon_number(rep.fit, dbm_to_watt(applied));
      r["power"] = {{"source_dbm", *trace.power_dbm}, {"applied_dbm", applied}, {"photon_number", num(n_bar)}};
    }
    j["results"] = r;
    s.emit(id + ".resonance.json", j);

    std::vector<double> f(trace.frequencies().begin(), trace.frequencies().end());
    std::vector<double> mag(f.size()), model(f.size());
    for (std::size_t i = 0; i < f.size(); ++i) {
      mag[i] = std::abs(trace.values()[i]);
      model[i] = std::abs(model_s21(rep.fit, Hertz(f[i])));
    }
    write_plot(s.dir(), id + ".s21_mag", {"frequency", "Hz"}, {"|S21|", "1"}, f, mag, "measured |S21|");
    write_plot(s.dir(), id + ".s21_mag.model", {"frequency", "Hz"}, {"|S21|", "1"}, f, model, "fitted |S21|");
    summary.push_back({id, format_number(rep.fit.f0.value()), format_number(rep.fit.q_internal),
                       format_number(rep.fit.q_coupling_mag), format_number(rep.fit.q_total), format_number(n_bar)});
    s.out() << id << ": f0 = " << std::setprecision(10) << rep.fit.f0.value() << " Hz, Qi = " << std::setprecision(4)
            << rep.fit.q_internal << ", |Qc| = " << rep.fit.q_coupling_mag << "\n";
  }
  write_csv(s.dir() / "resonance_summary.csv", {"resonator_id", "f0_hz", "q_internal", "q_coupling_mag", "q_total", "photon_number"},
            summary);
  return 0;
}

// ---------------------------------------------------------------- fit-power

struct SweepInput {
  std::vector<PowerSweepPoint> points;
  std::vector<std::string> sources;  // per point
  double frequency_hz = 0.0;
  double temperature_k = kSummaryTemperatureK;
  std::string id;
};

SweepInput power_sweep_input(const RunConfig& c) {
  SweepInput in;
  in.id = c.resonator_id;
  const bool table = c.inputs.size() == 1 && read_csv(c.inputs[0]).has("n_bar");
  if (table) {
    in.points = read_power_sweep_csv(c.inputs[0]);
    for (std::size_t i = 0; i < in.points.size(); ++i) in.sources.push_back(c.inputs[0]);
    require(c.frequency_hz.has_value(), ErrorCode::InvalidArgument, "--frequency-hz is required for n_bar tables");
    in.frequency_hz = *c.frequency_hz;
    in.temperature_k = c.temperature_k.value_or(kSummaryTemperatureK);
    if (in.id.empty()) in.id = stem_of(c.inputs[0]);
  } else {
    const FitConfig fc = fit_config(c);
    std::vector<double> f0s;
    std::optional<double> trace_temp;
    for (const auto& path : c.inputs) {
      const ComplexTrace trace = ingest_trace_csv(path);
      if (!trace.power_dbm) throw Error(ErrorCode::ParseError, path + ": power sweep traces need a power_dbm column");
      const ResonanceFit fit = fit_resonance(trace, fc);
      const double n = photon_number(fit, dbm_to_watt(*trace.power_dbm - c.attenuation_db));
      in.points.push_back({n, fit.delta_internal(), fit.sigma.q_internal / (fit.q_internal * fit.q_internal)});
      in.sources.push_back(path);
      f0s.push_back(fit.f0.value());
      if (trace.temperature_k && !trace_temp) trace_temp = trace.temperature_k;
      if (in.id.empty() && !trace.resonator_id.empty()) in.id = trace.resonator_id;
    }
    in.frequency_hz = c.frequency_hz.value_or(median(f0s));
    in.temperature_k = c.temperature_k.value_or(trace_temp.value_or(kSummaryTemperatureK));
    if (in.id.empty()) in.id = "resonator";
  }
  // Sort by photon number, carrying the source along.
  std::vector<std::size_t> order(in.points.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return in.points[a].n_bar < in.points[b].n_bar; });
  SweepInput sorted = in;
  for (std::size_t i = 0; i < order.size(); ++i) {
    sorted.points[i] = in.points[order[i]];
    sorted.sources[i] = in.sources[order[i]];
  }
  return sorted;
}

int cmd_fit_power(Session& s) {
  const auto& c = s.config();
  const SweepInput in = power_sweep_input(c);
  const OutlierReport outliers = filter_outliers(in.points);
  const auto kept = select(in.points, outliers);
  const TlsFit fit = fit_power_sweep(kept, Hertz(in.frequency_hz), Kelvin(in.temperature_k));
  const QiSummary q = summary_qi(fit);

  Json j = s.envelope(c.inputs);
  Json r;
  r["resonator_id"] = in.id;
  r["cohort"] = c.cohort.empty() ? Json(nullptr) : Json(std::string(to_string(parse_cohort(c.cohort))));
  r["fit"] = tls_json(fit);
  r["summary"] = {{"qi_low", num(q.qi_low)}, {"qi_high", num(q.qi_high)}};
  Json pts = Json::array();
  auto in_list = [](const std::vector<std::size_t>& v, std::size_t i) {
    return std::find(v.begin(), v.end(), i) != v.end();
  };
  for (std::size_t i = 0; i < in.points.size(); ++i) {
    const char* status = in_list(outliers.kept, i)           ? "kept"
                         : in_list(outliers.dropped_window, i) ? "below_photon_floor"
                         : in_list(outliers.dropped_low, i)    ? "low_power_outlier"
                                                               : "high_power_outlier";
    pts.push_back({{"source", in.sources[i]},
                   {"n_bar", num(in.points[i].n_bar)},
                   {"delta_i", num(in.points[i].delta_i)},
                   {"delta_i_sigma", num(in.points[i].delta_i_sigma)},
                   {"status", status}});
  }
  r["points"] = pts;
  j["results"] = r;
  s.emit(in.id + ".tls.json", j);
  write_power_sweep_csv(s.dir() / (in.id + ".power_sweep.csv"), in.points);

  std::vector<double> n, qi;
  for (const auto& p : in.points) {
    n.push_back(p.n_bar);
    qi.push_back(1.0 / p.delta_i);
  }
  const Axis nx{"mean photon number", "photons", "log"};
  const Axis qy{"Qi", "1", "log"};
  write_plot(s.dir(), in.id + ".qi_vs_nbar", nx, qy, n, qi, "internal Q per power level (all points)");
  const auto grid = log_grid(std::max(in.points.front().n_bar, 1e-3), in.points.back().n_bar, 200);
  std::vector<double> model;
  for (double x : grid) model.push_back(1.0 / eval_tls_loss(fit, x, fit.temperature));
  write_plot(s.dir(), in.id + ".qi_vs_nbar.model", nx, qy, grid, model, "TLS loss model");

  s.out() << in.id << ": delta_tls0 = " << std::setprecision(4) << fit.delta_tls0 << ", n_c = " << fit.n_c
          << ", beta = " << fit.beta << ", delta_other = " << fit.delta_other << "; Qi low/high = "
          << format_e5(q.qi_low) << " / " << format_e5(q.qi_high) << " (" << outliers.kept.size() << " of "
          << in.points.size() << " points kept)\n";
  return 0;
}

// ---------------------------------------------------------------- fit-temperature

int cmd_fit_temperature(Session& s) {
  const auto& c = s.config();
  require(c.inputs.size() == 1, ErrorCode::InvalidArgument, "fit-temperature takes one sweep file");
  const auto pts = read_temp_sweep_csv(c.inputs[0]);
  require(!pts.empty(), ErrorCode::InsufficientData, "empty temperature sweep");
  const double f_ref = c.frequency_hz.value_or(pts.front().f_hz);
  const RadPerSec omega = to_angular(Hertz(f_ref));
  const MbTempFit fit = fit_temperature_sweep(pts, omega);
  const std::string id = c.resonator_id.empty() ? stem_of(c.inputs[0]) : c.resonator_id;

  Json j = s.envelope(c.inputs);
  Json r;
  r["resonator_id"] = id;
  Json f;
  f["f_r_re_hz"] = num(fit.f_r.real());
  f["f_r_im_hz"] = num(fit.f_r.imag());
  f["g_reduced_hz"] = num(fit.g_reduced);
  f["delta_tls0"] = num(fit.delta_tls0);
  f["t_c_k"] = num(fit.t_c.value());
  f["gap_ratio"] = num(fit.gap_ratio);
  f["reference_frequency_hz"] = num(fit.f_ref().value());
  f["uncertainty"] = {{"f_r_re_hz", num(fit.sigma.f_r_re_hz)}, {"f_r_im_hz", num(fit.sigma.f_r_im_hz)},
                      {"g_reduced_hz", num(fit.sigma.g_reduced)}, {"delta_tls0", num(fit.sigma.delta_tls0)},
                      {"t_c_k", num(fit.sigma.t_c_k)},           {"gap_ratio", num(fit.sigma.gap_ratio)}};
  r["fit"] = f;
  r["tc_identifiable"] = fit.tc_identifiable;
  r["residual_norm_hz"] = num(fit.residual_norm_hz);
  r["warnings"] = fit.warnings;
  try {
    r["half_qi_temperature_k"] = num(half_qi_temperature(fit).value());
  } catch (const Error& e) {
    r["half_qi_temperature_k"] = nullptr;
    r["half_qi_error"] = {{"code", std::string(to_string(e.code()))}, {"message", e.detail()}};
  }
  j["results"] = r;
  s.emit(id + ".mb.json", j);

  std::vector<double> t, fr, fi;
  for (const auto& p : pts) {
    t.push_back(p.temperature.value());
    fr.push_back(p.f_hz);
    fi.push_back(p.neg_f_over_2qi_hz);
  }
  const Axis tx{"temperature", "K"};
  write_plot(s.dir(), id + ".f_vs_t", tx, {"f", "Hz"}, t, fr, "real part of the complex resonant frequency");
  write_plot(s.dir(), id + ".neg_f_over_2qi_vs_t", tx, {"-f/2Qi", "Hz"}, t, fi,
             "imaginary part of the complex resonant frequency");
  std::vector<double> mt, mr, mi;
  const double hi = std::min(t.back(), 0.99 * fit.t_c.value());
  for (int k = 0; k <= 200; ++k) {
    const double tk = t.front() + (hi - t.front()) * k / 200.0;
    try {
      const Complex z = model_complex_frequency(fit, Kelvin(tk));
      mt.push_back(tk);
      mr.push_back(z.real());
      mi.push_back(z.imag());
    } catch (const Error&) {
      break;
    }
  }
  write_plot(s.dir(), id + ".f_vs_t.model", tx, {"f", "Hz"}, mt, mr, "fitted model");
  write_plot(s.dir(), id + ".neg_f_over_2qi_vs_t.model", tx, {"-f/2Qi", "Hz"}, mt, mi, "fitted model");

  s.out() << id << ": Tc = " << std::setprecision(4) << fit.t_c.value() << " +- " << std::setprecision(2)
          << fit.sigma.t_c_k << " K, 2 Delta0 / kB Tc = " << std::setprecision(4) << fit.gap_ratio << " +- "
          << std::setprecision(2) << fit.sigma.gap_ratio << (fit.tc_identifiable ? "" : " (not identifiable)") << "\n";
  return 0;
}

// ---------------------------------------------------------------- thermalize

std::vector<NamedSeries> load_series(const RunConfig& c, const std::string& column, const std::string& unit) {
  std::vector<NamedSeries> out;
  if (c.inputs.size() == 1 && read_csv(c.inputs[0]).has("resonator_id")) return read_named_series_csv(c.inputs[0], column, unit);
  for (const auto& p : c.inputs) {
    if (read_csv(p).has("resonator_id")) {
      for (auto& s : read_named_series_csv(p, column, unit)) out.push_back(std::move(s));
    } else {
      out.push_back({stem_of(p), read_time_series_csv(p, column, unit)});
    }
  }
  return out;
}

RegionBounds parse_regions(const std::string& text) {
  if (text.empty()) return adr_sweep_regions();
  RegionBounds b{};
  std::stringstream ss(text);
  std::string part;
  std::size_t k = 0;
  while (std::getline(ss, part, ',')) {
    require(k < 4, ErrorCode::InvalidArgument, "--regions needs exactly four intervals");
    long long first = 0, last = 0;
    char colon = 0;
    std::istringstream ps(part);
    if (!(ps >> first >> colon >> last) || colon != ':' || !(ps >> std::ws).eof() || last < first) {
      throw Error(ErrorCode::InvalidArgument, "bad region interval '" + part + "' (want first:last)");
    }
    b[k++] = {first, last};
  }
  require(k == 4, ErrorCode::InvalidArgument, "--regions needs exactly four intervals");
  return b;
}

Json marks_json(const PairwiseReport& rep) {
  Json regions = Json::array();
  for (const auto& o : rep.regions) {
    Json r;
    r["region"] = std::string(to_string(o.region));
    if (o.marks) {
      r["resonator_a_point"] = o.marks->resonator_a_point;
      r["resonator_b_point"] = o.marks->resonator_b_point;
      r["difference"] = o.marks->difference;
    } else {
      r["difference"] = nullptr;
      r["error"] = {{"code", std::string(to_string(*o.error))}, {"message", o.message}};
    }
    regions.push_back(r);
  }
  return {{"pair", rep.label}, {"regions", regions}};
}

int cmd_thermalize(Session& s) {
  const auto& c = s.config();
  const auto series = load_series(c, "frequency_hz", "Hz");
  require(series.size() >= 2, ErrorCode::InsufficientData, "thermalize needs at least two series");
  const RegionBounds bounds = parse_regions(c.regions);
  ChangeDetectOptions opt;
  opt.window = c.change_window;
  std::vector<PairwiseReport> reports;
  for (std::size_t a = 0; a < series.size(); ++a) {
    for (std::size_t b = a + 1; b < series.size(); ++b) {
      reports.push_back(pairwise_report(series[a].series, series[b].series, bounds,
                                        series[a].resonator_id + "-" + series[b].resonator_id, opt));
    }
  }
  std::vector<std::string> inputs = c.inputs;
  inputs.insert(inputs.end(), c.calibrations.begin(), c.calibrations.end());
  Json j = s.envelope(inputs);
  Json r;
  Json jb = Json::array();
  for (std::size_t k = 0; k < 4; ++k) jb.push_back({{"first", bounds[k].first}, {"last", bounds[k].last}});
  r["region_bounds"] = jb;
  Json pairs = Json::array();
  for (const auto& rep : reports) pairs.push_back(marks_json(rep));
  r["pairs"] = pairs;
  const std::string table = render_table(reports);
  r["table"] = table;

  require(c.calibrations.empty() || c.calibrations.size() == 1 || c.calibrations.size() == series.size(),
          ErrorCode::InvalidArgument, "give one calibration, or one per series");
  for (std::size_t k = 0; k < series.size(); ++k) {
    const auto& ns = series[k];
    std::vector<double> t, v;
    for (const auto& p : ns.series.points()) t.push_back(p.time_s);
    if (c.calibrations.empty()) {
      for (const auto& p : ns.series.points()) v.push_back(p.value);
      write_plot(s.dir(), ns.resonator_id + ".frequency_vs_time", {"time", "s"}, {"frequency", "Hz"}, t, v,
                 "monitored resonator frequency");
    } else {
      const auto cal = build_calibration(read_calibration_csv(c.calibrations[c.calibrations.size() == 1 ? 0 : k]));
      const TimeSeries temp = to_temperature_series(cal, ns.series);
      for (const auto& p : temp.points()) v.push_back(p.value);
      write_plot(s.dir(), ns.resonator_id + ".temperature_vs_time", {"time", "s"}, {"temperature", "K"}, t, v,
                 "device temperature from the frequency calibration");
    }
  }
  j["results"] = r;
  s.emit("thermalization.json", j);
  s.emit_text("thermalization_table.txt", table);
  s.out() << table;
  return 0;
}

// ---------------------------------------------------------------- stability

std::string format_khz(double hz) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.3g", hz / 1e3);
  return buf;
}

int cmd_stability(Session& s) {
  const auto& c = s.config();
  const bool phase = c.value_column == "phase_rad";
  require(phase || c.value_column == "frequency_hz", ErrorCode::InvalidArgument,
          "--value-column must be frequency_hz or phase_rad");
  auto series = load_series(c, c.value_column, phase ? "rad" : "Hz");
  std::vector<std::string> inputs = c.inputs;
  std::optional<PhaseCalibration> cal;
  if (phase) {
    if (!c.phase_trace.empty()) {
      inputs.push_back(c.phase_trace);
      const ComplexTrace trace = ingest_trace_csv(c.phase_trace);
      cal = calibrate_phase(trace, fit_resonance(trace, fit_config(c)), c.window_linewidths);
    } else {
      require(c.f0_hz && c.q_total, ErrorCode::InvalidArgument, "phase input needs --phase-trace or --f0-hz and --q-total");
      cal = barkhausen_calibration(Hertz(*c.f0_hz), *c.q_total, c.window_linewidths);
    }
    for (auto& ns : series) {
      const double ref = mean(ns.series.values());
      ns.series = phase_series_to_frequency(*cal, ns.series, ref);
    }
  }
  Json j = s.envelope(inputs);
  Json r;
  if (cal) {
    r["phase_calibration"] = {{"slope_rad_per_hz", num(cal->slope)},
                              {"intercept_rad", num(cal->intercept)},
                              {"f0_hz", num(cal->f0.value())},
                              {"q_total", num(cal->q_total)},
                              {"window_hz", {num(cal->window_lo_hz), num(cal->window_hi_hz)}},
                              {"points", cal->points},
                              {"barkhausen_slope_rad_per_hz", num(cal->barkhausen_slope())},
                              {"slope_mismatch", num(cal->slope_mismatch())},
                              {"barkhausen_consistent", cal->barkhausen_consistent()}};
  }
  Json rows = Json::array();
  std::ostringstream head, vals;
  head << "resonator";
  vals << "sigma_khz";
  for (const auto& ns : series) {
    const double sigma = stability_sigma(ns.series);
    const auto v = ns.series.values();
    rows.push_back({{"resonator_id", ns.resonator_id},
                    {"points", ns.series.size()},
                    {"duration_s", num(ns.series[ns.series.size() - 1].time_s - ns.series[0].time_s)},
                    {"sigma_hz", num(sigma)}});
    const std::string k = format_khz(sigma);
    const std::size_t w = std::max(ns.resonator_id.size(), k.size()) + 2;
    head << std::setw(static_cast<int>(w)) << ns.resonator_id;
    vals << std::setw(static_cast<int>(w)) << k;
    const double m = mean(v);
    std::vector<double> t, df;
    for (const auto& p : ns.series.points()) {
      t.push_back(p.time_s);
      df.push_back(p.value - m);
    }
    write_plot(s.dir(), ns.resonator_id + ".df_vs_time", {"time", "s"}, {"frequency deviation", "Hz"}, t, df,
               "frequency about its mean over the monitoring window");
  }
  r["resonators"] = rows;
  const std::string table = head.str() + "\n" + vals.str() + "\n";
  r["table"] = table;
  j["results"] = r;
  s.emit("stability.json", j);
  s.emit_text("stability_table.txt", table);
  s.out() << table;
  return 0;
}

// ---------------------------------------------------------------- synth

Json truth_json(const DeviceTruth& d) {
  Json j;
  j["resonance"] = resonance_json(d.resonance);
  j["resonance"].erase("uncertainty");
  j["tls"] = tls_json(d.tls);
  j["tls"].erase("uncertainty");
  j["mb"] = {{"f_r_re_hz", d.mb.f_r.real()},     {"f_r_im_hz", d.mb.f_r.imag()},
             {"g_reduced_hz", d.mb.g_reduced},   {"delta_tls0", d.mb.delta_tls0},
             {"t_c_k", d.mb.t_c.value()},        {"gap_ratio", d.mb.gap_ratio},
             {"omega_rad_s", d.mb.omega.value()}};
  j["thermal_tau_s"] = d.thermal_tau_s;
  j["noise"] = {{"trace", d.noise.trace},
                {"loss_log", d.noise.loss_log},
                {"temp_sweep_hz", d.noise.temp_sweep_hz},
                {"thermal_hz", d.noise.thermal_hz},
                {"phase_rad", d.noise.phase_rad}};
  j["seed"] = d.seed;
  return j;
}

int cmd_synth(Session& s) {
  const auto& c = s.config();
  const std::string& k = c.kind;
  require(k == "all" || k == "trace" || k == "power" || k == "temperature" || k == "thermal" || k == "phase",
          ErrorCode::InvalidArgument, "--kind must be all, trace, power, temperature, thermal or phase");
  const auto want = [&](const char* x) { return k == "all" || k == x; };
  DeviceTruth truth = representative_device(c.seed);
  Json j = s.envelope({});
  Json r;
  r["truth"] = truth_json(truth);
  Json files = Json::array();

  if (want("trace")) {
    const auto trace = gen_trace(truth, linewidth_grid(truth.resonance, 801, 4.0));
    write_trace_csv(s.dir() / "trace.csv", trace);
    files.push_back("trace.csv");
  }
  if (want("power")) {
    std::vector<double> applied;
    for (int p = -160; p <= -80; p += 5) applied.push_back(p);
    const auto traces = gen_power_sweep_traces(truth, applied, c.attenuation_db);
    fs::create_directories(s.dir() / "power");
    Json levels = Json::array();
    for (std::size_t i = 0; i < traces.size(); ++i) {
      std::ostringstream name;
      name << "power/p" << std::setw(2) << std::setfill('0') << i << ".csv";
      write_trace_csv(s.dir() / name.str(), traces[i]);
      files.push_back(name.str());
      levels.push_back({{"file", name.str()},
                        {"applied_dbm", applied[i]},
                        {"q_internal", self_consistent_qi(truth, dbm_to_watt(applied[i]))}});
    }
    r["power_levels"] = levels;
  }
  if (want("temperature")) {
    std::vector<double> temps;
    for (int i = 0; i <= 40; ++i) temps.push_back(0.1 + 0.01 * i);
    write_temp_sweep_csv(s.dir() / "temp_sweep.csv", gen_temp_sweep(truth, temps));
    files.push_back("temp_sweep.csv");
  }
  if (want("thermal")) {
    const auto bath = gen_bath_profile(adr_sweep_schedule(), c.seed);
    DeviceTruth a = truth, b = truth;
    a.thermal_tau_s = c.tau_a_s;
    b.thermal_tau_s = c.tau_b_s;
    a.seed = splitmix64(c.seed ^ 0xA);
    b.seed = splitmix64(c.seed ^ 0xB);
    const std::vector<NamedSeries> pair{{"A", gen_thermal_response(a, bath)}, {"B", gen_thermal_response(b, bath)}};
    write_named_series_csv(s.dir() / "thermal.csv", pair, "frequency_hz");
    write_time_series_csv(s.dir() / "bath.csv", bath, "temperature_k");
    write_calibration_csv(s.dir() / "calibration.csv", gen_calibration_knots(truth, 0.25, 0.55, 0.01));
    files.push_back("thermal.csv");
    files.push_back("bath.csv");
    files.push_back("calibration.csv");
    r["thermal"] = {{"tau_a_s", c.tau_a_s}, {"tau_b_s", c.tau_b_s}, {"series", {"A", "B"}}};
  }
  if (want("phase")) {
    constexpr double kSigmaHz = 2e3;
    const auto ph = gen_phase_series(truth, 5000, 1.0, kSigmaHz, PhaseModel::Barkhausen);
    const std::vector<NamedSeries> one{{"A", ph}};
    write_named_series_csv(s.dir() / "phase.csv", one, "phase_rad");
    files.push_back("phase.csv");
    r["phase"] = {{"sigma_hz", kSigmaHz}, {"samples", 5000}, {"sample_period_s", 1.0}, {"model", "barkhausen"}};
  }
  r["files"] = files;
  j["results"] = r;
  s.emit("truth.json", j);
  s.out() << "wrote " << files.size() << " data files to " << s.dir().string() << "\n";
  return 0;
}

// ---------------------------------------------------------------- report

std::vector<CohortFit> read_tls_results(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::IoError, "cannot open " + path);
  Json j;
  try {
    j = Json::parse(in);
    const auto& r = j.at("results");
    CohortFit c;
    c.resonator_id = r.at("resonator_id").get<std::string>();
    if (r.at("cohort").is_null()) throw Error(ErrorCode::ParseError, path + ": result has no cohort (use --cohort)");
    c.cohort = parse_cohort(r.at("cohort").get<std::string>());
    const auto& f = r.at("fit");
    c.fit.delta_tls0 = f.at("delta_tls0").get<double>();
    c.fit.n_c = f.at("n_c").get<double>();
    c.fit.beta = f.at("beta").get<double>();
    c.fit.delta_other = f.at("delta_other").get<double>();
    c.fit.frequency = Hertz(f.at("frequency_hz").get<double>());
    c.fit.temperature = Kelvin(f.at("temperature_k").get<double>());
    return {c};
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::ParseError, path + ": " + e.what());
  }
}

int cmd_report(Session& s) {
  const auto& c = s.config();
  std::vector<CohortFit> fits;
  for (const auto& p : c.inputs) {
    auto more = fs::path(p).extension() == ".json" ? read_tls_results(p) : read_cohort_csv(p);
    fits.insert(fits.end(), more.begin(), more.end());
  }
  const auto medians = cohort_medians(fits);
  Json j = s.envelope(c.inputs);
  Json r;
  Json per = Json::array();
  for (const auto& f : fits) {
    const QiSummary q = summary_qi(f.fit);
    per.push_back({{"resonator_id", f.resonator_id},
                   {"cohort", std::string(to_string(f.cohort))},
                   {"qi_low", num(q.qi_low)},
                   {"qi_high", num(q.qi_high)}});
  }
  r["resonators"] = per;
  Json cm = Json::array();
  std::ostringstream table;
  table << "cohort     n  median Qi (low / high power)\n";
  for (const auto& m : medians) {
    cm.push_back({{"cohort", std::string(to_string(m.cohort))},
                  {"count", m.count},
                  {"median_qi_low", num(m.median_qi_low)},
                  {"median_qi_high", num(m.median_qi_high)}});
    table << std::left << std::setw(9) << to_string(m.cohort) << std::right << std::setw(3) << m.count << "  "
          << format_e5(m.median_qi_low) << " / " << format_e5(m.median_qi_high) << "\n";
  }
  r["cohorts"] = cm;
  r["table"] = table.str();
  j["results"] = r;
  s.emit("cohort_summary.json", j);
  s.emit_text("cohort_summary.txt", table.str());
  s.out() << table.str();
  return 0;
}

// ----------------------------------------------------------------

Json error_record(const std::string& command, const std::string& code, const std::string& message,
                  const std::string& path = {}) {
  Json j;
  j["schema_version"] = kSchemaVersion;
  j["command"] = command;
  Json e{{"code", code}, {"message", message}};
  if (!path.empty()) e["path"] = path;
  j["error"] = e;
  return j;
}

int fail(const RunConfig& c, std::ostream& err, const Json& record) {
  err << record.dump() << "\n";
  std::error_code ec;
  fs::create_directories(c.out_dir, ec);
  if (!ec) {
    std::ofstream out(fs::path(c.out_dir) / "error.json", std::ios::binary);
    if (out) out << record.dump(2) << "\n";
  }
  return 1;
}

}  // namespace

void validate(const RunConfig& c) {
  require(std::find(kCommands.begin(), kCommands.end(), c.command) != kCommands.end(), ErrorCode::InvalidArgument,
          "unknown command '" + c.command + "'");
  require(std::isfinite(c.attenuation_db), ErrorCode::InvalidArgument, "attenuation_db must be finite");
  require(!c.out_dir.empty(), ErrorCode::InvalidArgument, "output directory must be given");
  if (c.command != "synth") require(!c.inputs.empty(), ErrorCode::InvalidArgument, c.command + " needs input files");
  require(c.window_linewidths > 0 && std::isfinite(c.window_linewidths), ErrorCode::InvalidArgument,
          "window_linewidths must be > 0");
  require(c.tau_a_s > 0 && c.tau_b_s > 0, ErrorCode::InvalidArgument, "time constants must be > 0");
}

std::string sha256_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::IoError, "cannot open " + path);
  std::unique_ptr<EVP_MD_CTX, decltype(&EVP_MD_CTX_free)> ctx(EVP_MD_CTX_new(), &EVP_MD_CTX_free);
  if (!ctx || EVP_DigestInit_ex(ctx.get(), EVP_sha256(), nullptr) != 1) {
    throw Error(ErrorCode::IoError, "SHA-256 unavailable");
  }
  std::vector<char> buf(1 << 16);
  while (in) {
    in.read(buf.data(), static_cast<std::streamsize>(buf.size()));
    const auto got = in.gcount();
    if (got > 0) EVP_DigestUpdate(ctx.get(), buf.data(), static_cast<std::size_t>(got));
  }
  unsigned char md[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  EVP_DigestFinal_ex(ctx.get(), md, &len);
  std::ostringstream os;
  for (unsigned int i = 0; i < len; ++i) os << std::hex << std::setw(2) << std::setfill('0') << static_cast<int>(md[i]);
  return os.str();
}

std::string format_e5(double v) {
  std::ostringstream os;
  os << std::fixed << std::setprecision(1) << v / 1e5 << "e5";
  return os.str();
}

int run(const RunConfig& c, std::ostream& out, std::ostream& err) {
  const std::string started = utc_now();
  const auto t0 = std::chrono::steady_clock::now();
  try {
    validate(c);
    for (const auto& p : c.inputs) {
      if (!fs::exists(p)) return fail(c, err, error_record(c.command, "IoError", "input not found: " + p, p));
    }
    for (const auto& p : c.calibrations) {
      if (!fs::exists(p)) return fail(c, err, error_record(c.command, "IoError", "input not found: " + p, p));
    }
    if (!c.phase_trace.empty() && !fs::exists(c.phase_trace)) {
      return fail(c, err, error_record(c.command, "IoError", "input not found: " + c.phase_trace, c.phase_trace));
    }
    Session s(c, out);
    int status = 0;
    if (c.command == "fit-resonance") status = cmd_fit_resonance(s);
    if (c.command == "fit-power") status = cmd_fit_power(s);
    if (c.command == "fit-temperature") status = cmd_fit_temperature(s);
    if (c.command == "thermalize") status = cmd_thermalize(s);
    if (c.command == "stability") status = cmd_stability(s);
    if (c.command == "synth") status = cmd_synth(s);
    if (c.command == "report") status = cmd_report(s);
    const double elapsed = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    Json meta;
    meta["command"] = c.command;
    meta["started_utc"] = started;
    meta["finished_utc"] = utc_now();
    meta["elapsed_s"] = elapsed;
    meta["outputs"] = s.written();
    write_json(s.dir() / "run_metadata.json", meta);
    return status;
  } catch (const Error& e) {
    return fail(c, err, error_record(c.command, std::string(to_string(e.code())), e.detail()));
  } catch (const fs::filesystem_error& e) {
    return fail(c, err, error_record(c.command, "IoError", e.what(), e.path1().string()));
  } catch (const std::exception& e) {
    return fail(c, err, error_record(c.command, "InternalError", e.what()));
  }
}

int main(int argc, char** argv) {
  CLI::App app{"Superconducting resonator characterization"};
  app.require_subcommand(1);
  RunConfig c;
  std::string geometry = "notch";
  std::optional<double> tolerance, frequency, temperature, f0, q;

  auto common = [&](CLI::App* sub, bool inputs_required) {
    auto* opt = sub->add_option("inputs", c.inputs, "input files");
    if (inputs_required) opt->required();
    sub->add_option("--out", c.out_dir, "output directory")->capture_default_str();
    sub->add_option("--geometry", geometry, "notch | reflection")->capture_default_str();
    sub->add_option("--attenuation-db", c.attenuation_db, "line attenuation to the device (dB)")->capture_default_str();
    sub->add_option("--seed", c.seed, "random seed")->capture_default_str();
    sub->add_option("--tolerance", tolerance, "resonance-fit convergence tolerance");
  };
  auto* fr = app.add_subcommand("fit-resonance", "fit quality factors of S21 traces");
  common(fr, true);
  fr->add_option("--id", c.resonator_id, "resonator label");
  fr->add_flag("!--no-delay", c.delay_estimation, "do not estimate the cable delay");

  auto* fp = app.add_subcommand("fit-power", "fit the TLS loss model to a power sweep");
  common(fp, true);
  fp->add_option("--id", c.resonator_id, "resonator label");
  fp->add_option("--cohort", c.cohort, "membrane | substrate");
  fp->add_option("--frequency-hz", frequency, "resonance frequency (required for n_bar tables)");
  fp->add_option("--temperature-k", temperature, "sweep temperature");
  fp->add_flag("!--no-delay", c.delay_estimation, "do not estimate the cable delay");

  auto* ft = app.add_subcommand("fit-temperature", "fit the temperature model to a complex-frequency sweep");
  common(ft, true);
  ft->add_option("--id", c.resonator_id, "resonator label");
  ft->add_option("--frequency-hz", frequency, "reference frequency (default: first point)");

  auto* th = app.add_subcommand("thermalize", "pairwise thermalization comparison");
  common(th, true);
  th->add_option("--regions", c.regions, "four index intervals first:last,...");
  th->add_option("--calibration", c.calibrations, "frequency-temperature knots (one, or one per series)");
  th->add_option("--window", c.change_window, "change-detection window")->capture_default_str();

  auto* st = app.add_subcommand("stability", "frequency stability from monitored frequency or phase");
  common(st, true);
  st->add_option("--value-column", c.value_column, "frequency_hz | phase_rad")->capture_default_str();
  st->add_option("--phase-trace", c.phase_trace, "S21 trace for the phase calibration");
  st->add_option("--f0-hz", f0, "resonance frequency for the Barkhausen slope");
  st->add_option("--q-total", q, "loaded Q for the Barkhausen slope");
  st->add_option("--window-linewidths", c.window_linewidths, "calibration window")->capture_default_str();

  auto* sy = app.add_subcommand("synth", "write synthetic measurement files");
  common(sy, false);
  sy->add_option("--kind", c.kind, "all | trace | power | temperature | thermal | phase")->capture_default_str();
  sy->add_option("--tau-a", c.tau_a_s, "thermal time constant of resonator A (s)")->capture_default_str();
  sy->add_option("--tau-b", c.tau_b_s, "thermal time constant of resonator B (s)")->capture_default_str();

  auto* rp = app.add_subcommand("report", "cohort medians of TLS fits");
  common(rp, true);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) return app.exit(e);
    const std::string cmd = app.get_subcommands().empty() ? "" : app.get_subcommands().front()->get_name();
    std::cerr << error_record(cmd, "UsageError", e.what()).dump() << "\n";
    return 2;
  }
  c.command = app.get_subcommands().front()->get_name();
  c.tolerance = tolerance;
  c.frequency_hz = frequency;
  c.temperature_k = temperature;
  c.f0_hz = f0;
  c.q_total = q;
  try {
    c.geometry = parse_geometry(geometry);
  } catch (const Error& e) {
    std::cerr << error_record(c.command, std::string(to_string(e.code())), e.detail()).dump() << "\n";
    return 2;
  }
  return run(c, std::cout, std::cerr);
}

}  // namespace scres::cli
