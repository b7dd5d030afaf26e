#include "scres/io.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <sstream>

#include "scres/error.hpp"

namespace scres {
namespace {

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

std::vector<std::string> split(const std::string& line) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (true) {
    const auto pos = line.find(',', start);
    out.push_back(trim(std::string_view(line).substr(start, pos == std::string::npos ? std::string::npos : pos - start)));
    if (pos == std::string::npos) break;
    start = pos + 1;
  }
  return out;
}

[[noreturn]] void parse_fail(const std::string& source, std::size_t line, const std::string& what) {
  std::ostringstream os;
  os << source << ":" << line << ": " << what;
  throw Error(ErrorCode::ParseError, os.str());
}

std::ofstream open_out(const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::IoError, "cannot write " + path.string());
  return out;
}

std::vector<std::string> format_row(const std::vector<double>& row) {
  std::vector<std::string> cells;
  cells.reserve(row.size());
  for (double v : row) cells.push_back(format_number(v));
  return cells;
}

}  // namespace

CsvTable::CsvTable(std::vector<std::string> header, std::string source)
    : header_(std::move(header)), source_(std::move(source)) {}

std::optional<std::size_t> CsvTable::find(std::string_view column) const {
  for (std::size_t i = 0; i < header_.size(); ++i) {
    if (header_[i] == column) return i;
  }
  return std::nullopt;
}

std::size_t CsvTable::column(std::string_view name) const {
  const auto c = find(name);
  if (!c) throw Error(ErrorCode::ParseError, source_ + ": missing column '" + std::string(name) + "'");
  return *c;
}

double CsvTable::number(std::size_t row, std::size_t col) const {
  const std::string& s = cells_[row][col];
  double v = 0.0;
  const char* first = s.data();
  const char* last = s.data() + s.size();
  if (!s.empty() && *first == '+') ++first;
  const auto [ptr, ec] = std::from_chars(first, last, v);
  if (s.empty() || ec != std::errc() || ptr != last) {
    parse_fail(source_, lines_[row], "column '" + header_[col] + "': not a number: '" + s + "'");
  }
  return v;
}

void CsvTable::add_row(std::vector<std::string> cells, std::size_t line) {
  cells_.push_back(std::move(cells));
  lines_.push_back(line);
}

CsvTable parse_csv(std::istream& in, const std::string& source) {
  std::string line;
  std::size_t line_no = 0;
  std::optional<CsvTable> table;
  while (std::getline(in, line)) {
    ++line_no;
    const std::string t = trim(line);
    if (t.empty() || t.front() == '#') continue;
    auto cells = split(t);
    if (!table) {
      for (const auto& c : cells) {
        if (c.empty()) parse_fail(source, line_no, "empty column name in header");
      }
      table.emplace(std::move(cells), source);
      continue;
    }
    if (cells.size() != table->header().size()) {
      std::ostringstream os;
      os << "expected " << table->header().size() << " fields, found " << cells.size();
      parse_fail(source, line_no, os.str());
    }
    table->add_row(std::move(cells), line_no);
  }
  if (!table) throw Error(ErrorCode::ParseError, source + ": no header line");
  return *table;
}

CsvTable read_csv(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::IoError, "cannot open " + path.string());
  return parse_csv(in, path.string());
}

std::string format_number(double v) {
  char buf[64];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
  if (ec != std::errc()) throw Error(ErrorCode::InvalidArgument, "cannot format number");
  return std::string(buf, ptr);
}

void write_csv(const std::filesystem::path& path, const std::vector<std::string>& header,
               const std::vector<std::vector<std::string>>& rows) {
  auto out = open_out(path);
  for (std::size_t i = 0; i < header.size(); ++i) out << (i ? "," : "") << header[i];
  out << "\n";
  for (const auto& r : rows) {
    require(r.size() == header.size(), ErrorCode::InvalidArgument, "row width differs from header");
    for (std::size_t i = 0; i < r.size(); ++i) out << (i ? "," : "") << r[i];
    out << "\n";
  }
  if (!out) throw Error(ErrorCode::IoError, "write failed: " + path.string());
}

void write_csv(const std::filesystem::path& path, const std::vector<std::string>& header,
               const std::vector<std::vector<double>>& rows) {
  std::vector<std::vector<std::string>> text;
  text.reserve(rows.size());
  for (const auto& r : rows) text.push_back(format_row(r));
  write_csv(path, header, text);
}

ComplexTrace ingest_trace_csv(const std::filesystem::path& path) {
  const CsvTable t = read_csv(path);
  const auto cf = t.column("frequency_hz");
  const auto cr = t.column("re");
  const auto ci = t.column("im");
  const auto cp = t.find("power_dbm");
  const auto ct = t.find("temperature_k");
  const auto cid = t.find("resonator_id");
  std::vector<double> f;
  std::vector<Complex> v;
  for (std::size_t r = 0; r < t.rows(); ++r) {
    f.push_back(t.number(r, cf));
    v.emplace_back(t.number(r, cr), t.number(r, ci));
    if (r > 0 && !(f[r] > f[r - 1])) {
      std::ostringstream os;
      os << path.string() << ":" << t.line_of(r) << ": frequencies must be strictly increasing";
      throw Error(ErrorCode::InvariantViolation, os.str());
    }
  }
  ComplexTrace trace(std::move(f), std::move(v));
  auto constant = [&](std::size_t col) {
    const double first = t.number(0, col);
    for (std::size_t r = 1; r < t.rows(); ++r) {
      if (t.number(r, col) != first) {
        std::ostringstream os;
        os << path.string() << ":" << t.line_of(r) << ": column '" << t.header()[col] << "' must be constant";
        throw Error(ErrorCode::InvariantViolation, os.str());
      }
    }
    return first;
  };
  if (cp) trace.power_dbm = constant(*cp);
  if (ct) trace.temperature_k = constant(*ct);
  if (cid && t.rows() > 0) trace.resonator_id = t.text(0, *cid);
  return trace;
}

void write_trace_csv(const std::filesystem::path& path, const ComplexTrace& trace) {
  std::vector<std::string> header{"frequency_hz", "re", "im"};
  if (trace.power_dbm) header.emplace_back("power_dbm");
  if (trace.temperature_k) header.emplace_back("temperature_k");
  std::vector<std::vector<double>> rows;
  rows.reserve(trace.size());
  for (std::size_t i = 0; i < trace.size(); ++i) {
    std::vector<double> r{trace.frequencies()[i], trace.values()[i].real(), trace.values()[i].imag()};
    if (trace.power_dbm) r.push_back(*trace.power_dbm);
    if (trace.temperature_k) r.push_back(*trace.temperature_k);
    rows.push_back(std::move(r));
  }
  write_csv(path, header, rows);
}

std::vector<TempSweepPoint> read_temp_sweep_csv(const std::filesystem::path& path) {
  const CsvTable t = read_csv(path);
  const auto ct = t.column("temperature_k");
  const auto cf = t.column("f_hz");
  const auto cq = t.column("neg_f_over_2qi_hz");
  std::vector<TempSweepPoint> out;
  for (std::size_t r = 0; r < t.rows(); ++r) {
    out.push_back({Kelvin(t.number(r, ct)), t.number(r, cf), t.number(r, cq)});
  }
  return out;
}

void write_temp_sweep_csv(const std::filesystem::path& path, std::span<const TempSweepPoint> points) {
  std::vector<std::vector<double>> rows;
  for (const auto& p : points) rows.push_back({p.temperature.value(), p.f_hz, p.neg_f_over_2qi_hz});
  write_csv(path, {"temperature_k", "f_hz", "neg_f_over_2qi_hz"}, rows);
}

std::vector<PowerSweepPoint> read_power_sweep_csv(const std::filesystem::path& path) {
  const CsvTable t = read_csv(path);
  const auto cn = t.column("n_bar");
  const auto cd = t.column("delta_i");
  const auto cs = t.find("delta_i_sigma");
  std::vector<PowerSweepPoint> out;
  for (std::size_t r = 0; r < t.rows(); ++r) {
    out.push_back({t.number(r, cn), t.number(r, cd), cs ? t.number(r, *cs) : 0.0});
  }
  return out;
}

void write_power_sweep_csv(const std::filesystem::path& path, std::span<const PowerSweepPoint> points) {
  std::vector<std::vector<double>> rows;
  for (const auto& p : points) rows.push_back({p.n_bar, p.delta_i, p.delta_i_sigma});
  write_csv(path, {"n_bar", "delta_i", "delta_i_sigma"}, rows);
}

std::vector<CalibrationKnot> read_calibration_csv(const std::filesystem::path& path) {
  const CsvTable t = read_csv(path);
  const auto ct = t.column("temperature_k");
  const auto cf = t.column("frequency_hz");
  std::vector<CalibrationKnot> out;
  for (std::size_t r = 0; r < t.rows(); ++r) out.push_back({Kelvin(t.number(r, ct)), t.number(r, cf)});
  return out;
}

void write_calibration_csv(const std::filesystem::path& path, std::span<const CalibrationKnot> knots) {
  std::vector<std::vector<double>> rows;
  for (const auto& k : knots) rows.push_back({k.temperature.value(), k.frequency_hz});
  write_csv(path, {"temperature_k", "frequency_hz"}, rows);
}

namespace {

std::int64_t index_at(const CsvTable& t, std::size_t r, std::size_t col) {
  const double v = t.number(r, col);
  if (!(std::floor(v) == v) || std::abs(v) > 9e15) {
    parse_fail(t.source(), t.line_of(r), "index must be an integer");
  }
  return static_cast<std::int64_t>(v);
}

}  // namespace

TimeSeries read_time_series_csv(const std::filesystem::path& path, const std::string& value_column,
                                const std::string& unit) {
  const CsvTable t = read_csv(path);
  const auto ci = t.column("index");
  const auto ct = t.column("time_s");
  const auto cv = t.column(value_column);
  std::vector<TimePoint> pts;
  for (std::size_t r = 0; r < t.rows(); ++r) pts.push_back({index_at(t, r, ci), t.number(r, ct), t.number(r, cv)});
  return TimeSeries(std::move(pts), unit);
}

void write_time_series_csv(const std::filesystem::path& path, const TimeSeries& series,
                           const std::string& value_column) {
  std::vector<std::vector<std::string>> rows;
  for (const auto& p : series.points()) {
    rows.push_back({std::to_string(p.index), format_number(p.time_s), format_number(p.value)});
  }
  write_csv(path, {"index", "time_s", value_column}, rows);
}

std::vector<NamedSeries> read_named_series_csv(const std::filesystem::path& path, const std::string& value_column,
                                               const std::string& unit) {
  const CsvTable t = read_csv(path);
  const auto cid = t.column("resonator_id");
  const auto ci = t.column("index");
  const auto ct = t.column("time_s");
  const auto cv = t.column(value_column);
  std::vector<std::string> order;
  std::map<std::string, std::vector<TimePoint>> by_id;
  for (std::size_t r = 0; r < t.rows(); ++r) {
    const std::string& id = t.text(r, cid);
    if (id.empty()) parse_fail(t.source(), t.line_of(r), "empty resonator_id");
    auto [it, fresh] = by_id.try_emplace(id);
    if (fresh) order.push_back(id);
    it->second.push_back({index_at(t, r, ci), t.number(r, ct), t.number(r, cv)});
  }
  std::vector<NamedSeries> out;
  for (const auto& id : order) out.push_back({id, TimeSeries(std::move(by_id[id]), unit)});
  return out;
}

void write_named_series_csv(const std::filesystem::path& path, std::span<const NamedSeries> series,
                            const std::string& value_column) {
  std::vector<std::vector<std::string>> rows;
  for (const auto& s : series) {
    for (const auto& p : s.series.points()) {
      rows.push_back({s.resonator_id, std::to_string(p.index), format_number(p.time_s), format_number(p.value)});
    }
  }
  write_csv(path, {"resonator_id", "index", "time_s", value_column}, rows);
}

std::vector<CohortFit> read_cohort_csv(const std::filesystem::path& path) {
  const CsvTable t = read_csv(path);
  const auto cid = t.column("resonator_id");
  const auto cc = t.column("cohort");
  const auto cd0 = t.column("delta_tls0");
  const auto cnc = t.column("n_c");
  const auto cb = t.column("beta");
  const auto cdo = t.column("delta_other");
  const auto cf = t.column("frequency_hz");
  const auto ct = t.find("temperature_k");
  std::vector<CohortFit> out;
  for (std::size_t r = 0; r < t.rows(); ++r) {
    CohortFit c;
    c.resonator_id = t.text(r, cid);
    try {
      c.cohort = parse_cohort(t.text(r, cc));
    } catch (const Error& e) {
      parse_fail(t.source(), t.line_of(r), e.detail());
    }
    c.fit.delta_tls0 = t.number(r, cd0);
    c.fit.n_c = t.number(r, cnc);
    c.fit.beta = t.number(r, cb);
    c.fit.delta_other = t.number(r, cdo);
    c.fit.frequency = Hertz(t.number(r, cf));
    c.fit.temperature = Kelvin(ct ? t.number(r, *ct) : kSummaryTemperatureK);
    try {
      validate(c.fit);
    } catch (const Error& e) {
      std::ostringstream os;
      os << t.source() << ":" << t.line_of(r) << ": " << e.detail();
      throw Error(ErrorCode::InvariantViolation, os.str());
    }
    out.push_back(std::move(c));
  }
  return out;
}

void write_cohort_csv(const std::filesystem::path& path, std::span<const CohortFit> fits) {
  std::vector<std::vector<std::string>> rows;
  for (const auto& c : fits) {
    rows.push_back({c.resonator_id, std::string(to_string(c.cohort)), format_number(c.fit.delta_tls0),
                    format_number(c.fit.n_c), format_number(c.fit.beta), format_number(c.fit.delta_other),
                    format_number(c.fit.frequency.value()), format_number(c.fit.temperature.value())});
  }
  write_csv(path, {"resonator_id", "cohort", "delta_tls0", "n_c", "beta", "delta_other", "frequency_hz", "temperature_k"},
            rows);
}

}  // namespace scres
