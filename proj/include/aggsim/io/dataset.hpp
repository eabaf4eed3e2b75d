#pragma once

// CSV interchange for unit and price histories.
//
// Unit files:  timestamp,pv_kw,demand_kw
// Price files: timestamp,da_price,rt_price
// Timestamps are whole UTC hours, "YYYY-MM-DDTHH:00:00Z", strictly consecutive.

#include <charconv>
#include <filesystem>
#include <fstream>
#include <ostream>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "aggsim/core.hpp"
#include "aggsim/sim.hpp"

namespace aggsim::io {

/// Shortest decimal text that parses back to the same double; never locale dependent.
inline std::string format_number(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

inline double parse_number(std::string_view text, const std::string& where) {
  while (!text.empty() && (text.front() == ' ' || text.front() == '\t')) text.remove_prefix(1);
  while (!text.empty() && (text.back() == ' ' || text.back() == '\t' || text.back() == '\r')) text.remove_suffix(1);
  double v = 0.0;
  const auto res = std::from_chars(text.data(), text.data() + text.size(), v);
  if (text.empty() || res.ec != std::errc{} || res.ptr != text.data() + text.size() || !std::isfinite(v)) {
    throw ValidationError(where + ": cannot parse number '" + std::string(text) + "'");
  }
  return v;
}

inline std::vector<std::string_view> split_csv(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t pos = 0;
  while (true) {
    const auto comma = line.find(',', pos);
    out.push_back(line.substr(pos, comma == std::string_view::npos ? std::string_view::npos : comma - pos));
    if (comma == std::string_view::npos) break;
    pos = comma + 1;
  }
  return out;
}

/// Timestamp column plus two numeric columns.
struct TwoColumnTable {
  CalendarHour start;
  std::vector<double> first;
  std::vector<double> second;
};

/// Parses a three-column CSV with the given header. `name` prefixes error messages.
inline TwoColumnTable parse_two_column(std::istream& in, const std::string& name,
                                       const std::array<std::string_view, 3>& header) {
  TwoColumnTable table;
  std::string line;
  std::size_t line_no = 0;
  bool have_header = false;
  CalendarHour expected{};
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const std::string where = name + " line " + std::to_string(line_no);
    const auto cells = split_csv(line);
    if (!have_header) {
      if (cells.size() != 3 || cells[0] != header[0] || cells[1] != header[1] || cells[2] != header[2]) {
        throw ValidationError(where + ": expected header '" + std::string(header[0]) + "," + std::string(header[1]) +
                              "," + std::string(header[2]) + "'");
      }
      have_header = true;
      continue;
    }
    if (cells.size() != 3) {
      throw ValidationError(where + ": expected 3 columns, found " + std::to_string(cells.size()));
    }
    CalendarHour ts;
    try {
      ts = CalendarHour::parse_iso(cells[0]);
    } catch (const InvalidArgument& e) {
      throw ValidationError(where + ": " + e.what());
    }
    if (table.first.empty()) {
      table.start = ts;
    } else if (ts != expected) {
      if (ts > expected) {
        throw ValidationError(where + ": missing hour " + expected.to_iso() + " (next row is " + ts.to_iso() + ")");
      }
      throw ValidationError(where + ": timestamp " + ts.to_iso() + " is out of order or duplicated");
    }
    expected = ts + 1;
    table.first.push_back(parse_number(cells[1], where + " column " + std::string(header[1])));
    table.second.push_back(parse_number(cells[2], where + " column " + std::string(header[2])));
  }
  if (!have_header) throw ValidationError(name + ": empty file");
  if (table.first.empty()) throw ValidationError(name + ": no data rows");
  return table;
}

inline std::ifstream open_input(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open '" + path.string() + "' for reading");
  return in;
}

inline std::ofstream open_output(const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot open '" + path.string() + "' for writing");
  return out;
}

/// Reads one unit file. Rows are numbered from the first data row (1-based) in
/// negativity errors; line numbers count the header.
inline UnitSpec read_unit(std::istream& in, const std::string& id, const BatterySpec& battery,
                          const std::string& name) {
  const auto t = parse_two_column(in, name, {"timestamp", "pv_kw", "demand_kw"});
  for (std::size_t i = 0; i < t.first.size(); ++i) {
    const std::string where = name + " data row " + std::to_string(i + 1) + " (line " + std::to_string(i + 2) + ", " +
                              (t.start + static_cast<std::int64_t>(i)).to_iso() + ")";
    if (t.first[i] < 0.0) throw ValidationError(where + ": negative PV " + format_number(t.first[i]));
    if (t.second[i] < 0.0) throw ValidationError(where + ": negative demand " + format_number(t.second[i]));
  }
  UnitSpec u{id, battery, HourlySeries{t.start, t.first, Unit::kw}, HourlySeries{t.start, t.second, Unit::kw}};
  return u;
}

struct PriceSeries {
  HourlySeries da;
  HourlySeries rt;
};

inline PriceSeries read_prices(std::istream& in, const std::string& name) {
  const auto t = parse_two_column(in, name, {"timestamp", "da_price", "rt_price"});
  return {HourlySeries{t.start, t.first, Unit::currency_per_kwh}, HourlySeries{t.start, t.second, Unit::currency_per_kwh}};
}

inline void write_two_column(std::ostream& out, const std::array<std::string_view, 3>& header, const HourlySeries& a,
                             const HourlySeries& b) {
  aggsim::detail::require(a.start() == b.start() && a.size() == b.size(), "write: series cover different ranges");
  out << header[0] << ',' << header[1] << ',' << header[2] << '\n';
  for (std::size_t i = 0; i < a.size(); ++i) {
    out << (a.start() + static_cast<std::int64_t>(i)).to_iso() << ',' << format_number(a[i]) << ','
        << format_number(b[i]) << '\n';
  }
}

inline void write_unit(std::ostream& out, const UnitSpec& u) {
  write_two_column(out, {"timestamp", "pv_kw", "demand_kw"}, u.pv_history, u.demand_history);
}

inline void write_prices(std::ostream& out, const HourlySeries& da, const HourlySeries& rt) {
  write_two_column(out, {"timestamp", "da_price", "rt_price"}, da, rt);
}

/// Where a dataset lives on disk.
struct DatasetFiles {
  std::filesystem::path prices;
  std::vector<std::filesystem::path> units;
};

/// Unit ids are the file stems.
inline Dataset ingest(const DatasetFiles& files, const BatterySpec& battery) {
  if (files.units.empty()) throw ValidationError("dataset lists no unit files");
  Dataset data;
  {
    auto in = open_input(files.prices);
    auto p = read_prices(in, files.prices.filename().string());
    data.da_price = std::move(p.da);
    data.rt_price = std::move(p.rt);
  }
  for (const auto& path : files.units) {
    auto in = open_input(path);
    data.units.push_back(read_unit(in, path.stem().string(), battery, path.filename().string()));
  }
  try {
    data.validate();
  } catch (const InvalidArgument& e) {
    throw ValidationError(e.what());
  }
  return data;
}

/// Writes prices.csv and one <id>.csv per unit into `dir`.
inline DatasetFiles emit(const Dataset& data, const std::filesystem::path& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw IoError("cannot create directory '" + dir.string() + "': " + ec.message());
  DatasetFiles files{dir / "prices.csv", {}};
  {
    auto out = open_output(files.prices);
    write_prices(out, data.da_price, data.rt_price);
    if (!out) throw IoError("write failed for '" + files.prices.string() + "'");
  }
  for (const auto& u : data.units) {
    files.units.push_back(dir / (u.id + ".csv"));
    auto out = open_output(files.units.back());
    write_unit(out, u);
    if (!out) throw IoError("write failed for '" + files.units.back().string() + "'");
  }
  return files;
}

}  // namespace aggsim::io
