#pragma once

// Comma-separated text tables: a header line of column names, then one
// record per line. Blank lines and lines starting with '#' are skipped.
// Numbers are written with 17 significant digits so a write-read cycle is
// exact.

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "scres/mattis_bardeen.hpp"
#include "scres/thermalization.hpp"
#include "scres/tls.hpp"
#include "scres/types.hpp"

namespace scres {

class CsvTable {
 public:
  CsvTable() = default;
  CsvTable(std::vector<std::string> header, std::string source);

  [[nodiscard]] const std::vector<std::string>& header() const { return header_; }
  [[nodiscard]] std::size_t rows() const { return cells_.size(); }
  [[nodiscard]] const std::string& source() const { return source_; }

  [[nodiscard]] std::optional<std::size_t> find(std::string_view column) const;
  /// Throws ParseError naming the missing column.
  [[nodiscard]] std::size_t column(std::string_view name) const;
  [[nodiscard]] bool has(std::string_view name) const { return find(name).has_value(); }

  [[nodiscard]] const std::string& text(std::size_t row, std::size_t col) const { return cells_[row][col]; }
  /// Throws ParseError with the source line number on malformed numbers.
  [[nodiscard]] double number(std::size_t row, std::size_t col) const;
  [[nodiscard]] std::size_t line_of(std::size_t row) const { return lines_[row]; }

  void add_row(std::vector<std::string> cells, std::size_t line);

 private:
  std::vector<std::string> header_;
  std::vector<std::vector<std::string>> cells_;
  std::vector<std::size_t> lines_;
  std::string source_;
};

CsvTable parse_csv(std::istream& in, const std::string& source);
/// Throws IoError if the file cannot be opened.
CsvTable read_csv(const std::filesystem::path& path);

/// Shortest text that reads back to the same double (at most 17 digits).
std::string format_number(double v);

void write_csv(const std::filesystem::path& path, const std::vector<std::string>& header,
               const std::vector<std::vector<std::string>>& rows);
void write_csv(const std::filesystem::path& path, const std::vector<std::string>& header,
               const std::vector<std::vector<double>>& rows);

/// Columns frequency_hz, re, im; optional power_dbm and temperature_k (taken
/// from the first row; they must be constant within a trace).
ComplexTrace ingest_trace_csv(const std::filesystem::path& path);
void write_trace_csv(const std::filesystem::path& path, const ComplexTrace& trace);

/// Columns temperature_k, f_hz, neg_f_over_2qi_hz.
std::vector<TempSweepPoint> read_temp_sweep_csv(const std::filesystem::path& path);
void write_temp_sweep_csv(const std::filesystem::path& path, std::span<const TempSweepPoint> points);

/// Columns n_bar, delta_i and optionally delta_i_sigma.
std::vector<PowerSweepPoint> read_power_sweep_csv(const std::filesystem::path& path);
void write_power_sweep_csv(const std::filesystem::path& path, std::span<const PowerSweepPoint> points);

/// Columns temperature_k, frequency_hz.
std::vector<CalibrationKnot> read_calibration_csv(const std::filesystem::path& path);
void write_calibration_csv(const std::filesystem::path& path, std::span<const CalibrationKnot> knots);

/// Columns index, time_s and the named value column.
TimeSeries read_time_series_csv(const std::filesystem::path& path, const std::string& value_column,
                                const std::string& unit);
void write_time_series_csv(const std::filesystem::path& path, const TimeSeries& series,
                           const std::string& value_column);

/// One long table holding several series: resonator_id, index, time_s and a
/// value column. Series keep the order of first appearance.
struct NamedSeries {
  std::string resonator_id;
  TimeSeries series;
};
std::vector<NamedSeries> read_named_series_csv(const std::filesystem::path& path, const std::string& value_column,
                                               const std::string& unit);
void write_named_series_csv(const std::filesystem::path& path, std::span<const NamedSeries> series,
                            const std::string& value_column);

/// Columns resonator_id, cohort, delta_tls0, n_c, beta, delta_other,
/// frequency_hz and optionally temperature_k (default 0.1 K).
std::vector<CohortFit> read_cohort_csv(const std::filesystem::path& path);
void write_cohort_csv(const std::filesystem::path& path, std::span<const CohortFit> fits);

}  // namespace scres
