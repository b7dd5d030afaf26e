#include <filesystem>
#include <fstream>
#include <iterator>
#include <json.hpp>
#include <sstream>

#include "cli.hpp"
#include "doctest.h"

namespace fs = std::filesystem;
using scres::cli::RunConfig;
using Json = nlohmann::json;

namespace {

const fs::path kData = SCRES_DATA_DIR;

fs::path scratch(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / "scres_test_cli" / name;
  fs::remove_all(dir);
  return dir;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), {}};
}

int run(RunConfig c, std::string* out_text = nullptr, std::string* err_text = nullptr) {
  std::ostringstream out, err;
  const int status = scres::cli::run(c, out, err);
  if (out_text) *out_text = out.str();
  if (err_text) *err_text = err.str();
  return status;
}

RunConfig config(const std::string& command, std::vector<std::string> inputs, const fs::path& out) {
  RunConfig c;
  c.command = command;
  c.inputs = std::move(inputs);
  c.out_dir = out.string();
  return c;
}

std::vector<std::string> power_files(const fs::path& dir) {
  std::vector<std::string> files;
  for (const auto& e : fs::directory_iterator(dir / "power")) files.push_back(e.path().string());
  std::sort(files.begin(), files.end());
  return files;
}

std::vector<fs::path> regular_files(const fs::path& dir) {
  std::vector<fs::path> v;
  for (const auto& e : fs::recursive_directory_iterator(dir)) {
    if (e.is_regular_file()) v.push_back(fs::relative(e.path(), dir));
  }
  std::sort(v.begin(), v.end());
  return v;
}

}  // namespace

TEST_CASE("synth then fit-power recovers the loss model") {
  const auto syn = scratch("syn");
  auto c = config("synth", {}, syn);
  c.seed = 4;
  c.attenuation_db = 60;
  REQUIRE(run(c) == 0);
  auto f = config("fit-power", power_files(syn), scratch("pw"));
  f.attenuation_db = 60;
  f.cohort = "substrate";
  REQUIRE(run(f) == 0);
  const Json j = Json::parse(slurp(fs::path(f.out_dir) / "resonator.tls.json"));
  const auto& fit = j["results"]["fit"];
  CHECK(fit["delta_tls0"].get<double>() == doctest::Approx(8e-6).epsilon(0.1));
  CHECK(fit["delta_other"].get<double>() == doctest::Approx(4e-6).epsilon(0.1));
  CHECK(j["results"]["cohort"] == "substrate");
  CHECK(j["schema_version"] == 1);
  CHECK(j["config"]["attenuation_db"] == 60.0);
  CHECK(j["provenance"]["inputs"].size() == 17);
  CHECK(j["provenance"]["inputs"][0]["sha256"] == scres::cli::sha256_file(power_files(syn)[0]));
  CHECK(j.contains("provenance"));
  CHECK_FALSE(slurp(fs::path(f.out_dir) / "resonator.tls.json").find("utc") != std::string::npos);
  CHECK(fs::exists(fs::path(f.out_dir) / "run_metadata.json"));
}

TEST_CASE("wrong attenuation shifts photon numbers, not Qi") {
  const auto syn = scratch("syn_att");
  auto c = config("synth", {}, syn);
  c.kind = "power";
  c.attenuation_db = 50;
  REQUIRE(run(c) == 0);
  auto a = config("fit-power", power_files(syn), scratch("att_ok"));
  a.attenuation_db = 50;
  auto b = a;
  b.out_dir = scratch("att_off").string();
  b.attenuation_db = 40;
  REQUIRE(run(a) == 0);
  REQUIRE(run(b) == 0);
  const Json ja = Json::parse(slurp(fs::path(a.out_dir) / "resonator.tls.json"));
  const Json jb = Json::parse(slurp(fs::path(b.out_dir) / "resonator.tls.json"));
  const double na = ja["results"]["points"][3]["n_bar"].get<double>();
  const double nb = jb["results"]["points"][3]["n_bar"].get<double>();
  CHECK(nb / na == doctest::Approx(10.0).epsilon(1e-9));
  CHECK(ja["results"]["points"][3]["delta_i"] == jb["results"]["points"][3]["delta_i"]);
}

TEST_CASE("repeated runs are byte-identical") {
  const auto a = scratch("det_a");
  auto c = config("synth", {}, a);
  c.seed = 99;
  REQUIRE(run(c) == 0);
  std::vector<std::string> first;
  const auto files = regular_files(a);
  for (const auto& p : files) first.push_back(slurp(a / p));
  REQUIRE(run(c) == 0);
  for (std::size_t i = 0; i < files.size(); ++i) {
    CAPTURE(files[i].string());
    if (files[i] == "run_metadata.json") continue;
    CHECK(slurp(a / files[i]) == first[i]);
  }
  const auto syn = scratch("det_syn");
  auto s = config("synth", {}, syn);
  s.seed = 5;
  REQUIRE(run(s) == 0);
  const auto out = scratch("det_fit");
  auto f = config("fit-temperature", {(syn / "temp_sweep.csv").string()}, out);
  REQUIRE(run(f) == 0);
  const std::string mb = slurp(out / "temp_sweep.mb.json");
  const std::string plot = slurp(out / "temp_sweep.f_vs_t.model.dat");
  REQUIRE(run(f) == 0);
  CHECK(slurp(out / "temp_sweep.mb.json") == mb);
  CHECK(slurp(out / "temp_sweep.f_vs_t.model.dat") == plot);
}

TEST_CASE("different seeds give different data") {
  auto a = config("synth", {}, scratch("seed_a"));
  a.kind = "trace";
  a.seed = 1;
  auto b = a;
  b.out_dir = scratch("seed_b").string();
  b.seed = 2;
  REQUIRE(run(a) == 0);
  REQUIRE(run(b) == 0);
  CHECK(slurp(fs::path(a.out_dir) / "trace.csv") != slurp(fs::path(b.out_dir) / "trace.csv"));
}

TEST_CASE("bundled cohort file renders the expected medians") {
  std::string text;
  REQUIRE(run(config("report", {(kData / "cohort_fits.csv").string()}, scratch("report")), &text) == 0);
  CHECK(text.find("membrane") != std::string::npos);
  CHECK(text.find("0.8e5 / 3.8e5") != std::string::npos);
  CHECK(text.find("1.2e5 / 2.3e5") != std::string::npos);
}

TEST_CASE("bundled stability file reproduces the table") {
  std::string text;
  const auto out = scratch("stab");
  REQUIRE(run(config("stability", {(kData / "stability_r2_r6.csv").string()}, out), &text) == 0);
  CHECK(text.find("R2  R3  R4  R5  R6") != std::string::npos);
  CHECK(text.find("21  24  10  17  15") != std::string::npos);
  const Json j = Json::parse(slurp(out / "stability.json"));
  const double expected[] = {21e3, 24e3, 10e3, 17e3, 15e3};
  for (int i = 0; i < 5; ++i) {
    CHECK(j["results"]["resonators"][i]["sigma_hz"].get<double>() == doctest::Approx(expected[i]).epsilon(1e-9));
  }
}

TEST_CASE("phase monitoring through the CLI") {
  const auto syn = scratch("ph_syn");
  auto s = config("synth", {}, syn);
  s.kind = "phase";
  s.seed = 8;
  REQUIRE(run(s) == 0);
  auto c = config("stability", {(syn / "phase.csv").string()}, scratch("ph"));
  c.value_column = "phase_rad";
  c.f0_hz = 6e9;
  c.q_total = 1.0 / (1.0 / 1e5 + 1.0 / 5e4);
  REQUIRE(run(c) == 0);
  const Json j = Json::parse(slurp(fs::path(c.out_dir) / "stability.json"));
  CHECK(j["results"]["resonators"][0]["sigma_hz"].get<double>() == doctest::Approx(2e3).epsilon(0.03));
}

TEST_CASE("thermalize on synthetic pairs") {
  const auto syn = scratch("th_syn");
  auto s = config("synth", {}, syn);
  s.kind = "thermal";
  s.tau_a_s = 20;
  s.tau_b_s = 10;
  REQUIRE(run(s) == 0);
  auto c = config("thermalize", {(syn / "thermal.csv").string()}, scratch("th"));
  c.calibrations = {(syn / "calibration.csv").string()};
  std::string text;
  REQUIRE(run(c, &text) == 0);
  const Json j = Json::parse(slurp(fs::path(c.out_dir) / "thermalization.json"));
  for (const auto& r : j["results"]["pairs"][0]["regions"]) CHECK(r["difference"].get<int>() > 0);
  CHECK(fs::exists(fs::path(c.out_dir) / "A.temperature_vs_time.dat"));
  CHECK(text.find("A-B") != std::string::npos);

  c.regions = "10:159,230:379,x";
  std::string err;
  CHECK(run(c, nullptr, &err) != 0);
  CHECK(err.find("InvalidArgument") != std::string::npos);
}

TEST_CASE("every plot file has an axes sidecar") {
  const auto syn = scratch("plots_syn");
  REQUIRE(run(config("synth", {}, syn)) == 0);
  const auto out = scratch("plots");
  auto fr = config("fit-resonance", {(syn / "trace.csv").string()}, out);
  REQUIRE(run(fr) == 0);
  auto ft = config("fit-temperature", {(syn / "temp_sweep.csv").string()}, out);
  REQUIRE(run(ft) == 0);
  int plots = 0;
  for (const auto& p : regular_files(out)) {
    if (p.extension() != ".dat") continue;
    ++plots;
    auto side = out / p;
    side.replace_extension(".axes.json");
    REQUIRE(fs::exists(side));
    const Json j = Json::parse(slurp(side));
    CHECK(j["data"] == p.filename().string());
    CHECK(j["x"].contains("unit"));
  }
  CHECK(plots >= 6);
}

TEST_CASE("missing input path") {
  const auto out = scratch("missing");
  std::string err;
  CHECK(run(config("fit-power", {"does/not/exist.csv"}, out), nullptr, &err) != 0);
  const Json rec = Json::parse(err);
  CHECK(rec["error"]["code"] == "IoError");
  CHECK(rec["error"]["path"] == "does/not/exist.csv");
  CHECK(fs::exists(out / "error.json"));
}

TEST_CASE("invalid configuration") {
  std::string err;
  CHECK(run(config("fly", {"x"}, scratch("bad")), nullptr, &err) != 0);
  CHECK(err.find("unknown command") != std::string::npos);
  auto c = config("fit-resonance", {}, scratch("bad2"));
  CHECK(run(c, nullptr, &err) != 0);
  c = config("synth", {}, scratch("bad3"));
  c.attenuation_db = std::nan("");
  CHECK(run(c, nullptr, &err) != 0);
  CHECK(err.find("attenuation") != std::string::npos);
}

TEST_CASE("library failures become error records") {
  const auto out = scratch("fail");
  fs::create_directories(out);
  const auto p = out / "flat.csv";
  {
    std::ofstream f(p);
    f.precision(17);
    f << "frequency_hz,re,im\n";
    for (int i = 0; i < 50; ++i) f << 6e9 + 1e3 * i << ",1,0\n";
  }
  std::string err;
  CHECK(run(config("fit-resonance", {p.string()}, out / "res"), nullptr, &err) == 1);
  CHECK(Json::parse(err)["error"]["code"] == "NoDipFound");
}

TEST_CASE("argument parsing") {
  const auto out = scratch("argv");
  const std::string o = out.string();
  std::vector<std::string> args{"scres-cli", "synth", "--kind", "trace", "--seed", "3", "--out", o};
  std::vector<char*> argv;
  for (auto& a : args) argv.push_back(a.data());
  CHECK(scres::cli::main(static_cast<int>(argv.size()), argv.data()) == 0);
  CHECK(fs::exists(out / "trace.csv"));
  const Json j = Json::parse(slurp(out / "truth.json"));
  CHECK(j["config"]["seed"] == 3);
  std::vector<std::string> bad{"scres-cli", "fit-resonance", "--geometry", "circle", "x.csv"};
  argv.clear();
  for (auto& a : bad) argv.push_back(a.data());
  CHECK(scres::cli::main(static_cast<int>(argv.size()), argv.data()) == 2);
  CHECK(scres::cli::format_e5(80000.0) == "0.8e5");
  CHECK(scres::cli::format_e5(383000.0) == "3.8e5");
}
