#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "scres/types.hpp"

namespace scres::cli {

struct RunConfig {
  std::string command;  // fit-resonance | fit-power | fit-temperature | thermalize | stability | synth | report
  std::vector<std::string> inputs;
  std::string out_dir = "out";
  Geometry geometry = Geometry::Notch;
  double attenuation_db = 0.0;
  std::uint64_t seed = 0;
  std::optional<double> tolerance;  // resonance-fit convergence tolerance

  std::string resonator_id;            // label for single-resonator outputs
  std::string cohort;                  // fit-power: membrane | substrate
  std::optional<double> frequency_hz;  // fit-power on n_bar tables; fit-temperature reference
  std::optional<double> temperature_k;
  bool delay_estimation = true;

  std::string regions;                    // thermalize: "a:b,a:b,a:b,a:b"
  std::vector<std::string> calibrations;  // thermalize: knots per series (or one shared)
  int change_window = 5;

  std::string value_column = "frequency_hz";  // stability: frequency_hz or phase_rad
  std::optional<double> f0_hz;                // stability: Barkhausen slope for phase input
  std::optional<double> q_total;
  std::string phase_trace;                    // stability: trace to calibrate phase against
  double window_linewidths = 0.5;

  std::string kind = "all";  // synth: all | trace | power | temperature | thermal | phase
  double tau_a_s = 20.0;
  double tau_b_s = 10.0;
};

/// Throws scres::Error on an invalid configuration (unknown command, missing
/// inputs, non-finite attenuation).
void validate(const RunConfig& config);

/// Runs one command. Returns the process exit status; on failure an error
/// record is written to stderr and to <out>/error.json.
int run(const RunConfig& config, std::ostream& out, std::ostream& err);

/// Parses argv into a RunConfig and runs it.
int main(int argc, char** argv);

std::string sha256_file(const std::string& path);

/// "0.8e5": value / 1e5 with one decimal.
std::string format_e5(double v);

}  // namespace scres::cli
