#pragma once

// Loading of the hourly Beijing PM2.5 CSV layout
//   No,year,month,day,hour,pm2.5,DEWP,TEMP,PRES,cbwd,Iws,Is,Ir
// and of generic headered numeric CSV files.

#include <algorithm>
#include <charconv>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstddef>
#include <cstdint>
#include <fstream>
#include <istream>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <system_error>
#include <variant>
#include <vector>

#include "copte/core.hpp"

namespace copte {

// Whole hours since 1970-01-01T00 (UTC-free civil time).
struct HourStamp {
  std::int64_t hours = 0;

  static HourStamp from_civil(int year, unsigned month, unsigned day, int hour) {
    using namespace std::chrono;
    const year_month_day ymd{std::chrono::year{year}, std::chrono::month{month},
                             std::chrono::day{day}};
    if (!ymd.ok()) {
      throw Error(ErrorCode::InvalidArgument, "invalid calendar date " + std::to_string(year) +
                                                  "-" + std::to_string(month) + "-" +
                                                  std::to_string(day));
    }
    const auto days = sys_days{ymd}.time_since_epoch().count();
    return {static_cast<std::int64_t>(days) * 24 + hour};
  }

  // Accepts YYYY-MM-DD, YYYY-MM-DDTHH or "YYYY-MM-DD HH".
  static HourStamp parse(std::string_view text);

  std::string to_string() const {
    using namespace std::chrono;
    const auto day_count = hours >= 0 ? hours / 24 : (hours - 23) / 24;
    const int hour = static_cast<int>(hours - day_count * 24);
    const year_month_day ymd{sys_days{days{day_count}}};
    char buf[32];
    std::snprintf(buf, sizeof buf, "%04d-%02u-%02uT%02d", static_cast<int>(ymd.year()),
                  static_cast<unsigned>(ymd.month()), static_cast<unsigned>(ymd.day()), hour);
    return buf;
  }

  HourStamp operator+(std::int64_t h) const { return {hours + h}; }
  auto operator<=>(const HourStamp&) const = default;
};

namespace detail {

inline std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) {
    s.remove_suffix(1);
  }
  return s;
}

inline std::vector<std::string_view> split_fields(std::string_view line, char sep = ',') {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const std::size_t pos = line.find(sep, start);
    out.push_back(trim(line.substr(start, pos - start)));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return out;
}

// Locale-independent; rejects trailing garbage.
inline std::optional<double> parse_double(std::string_view s) {
  if (!s.empty() && s.front() == '+') s.remove_prefix(1);
  double value = 0.0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), value);
  if (ec != std::errc{} || ptr != s.data() + s.size() || s.empty()) return std::nullopt;
  return value;
}

inline std::optional<long long> parse_int(std::string_view s) {
  long long value = 0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), value);
  if (ec != std::errc{} || ptr != s.data() + s.size() || s.empty()) return std::nullopt;
  return value;
}

}  // namespace detail

inline HourStamp HourStamp::parse(std::string_view text) {
  text = detail::trim(text);
  const auto fail = [&] {
    return Error(ErrorCode::InvalidArgument, "cannot parse timestamp '" + std::string(text) +
                                                 "' (expected YYYY-MM-DD[THH])");
  };
  if (text.size() < 10 || text[4] != '-' || text[7] != '-') throw fail();
  const auto y = detail::parse_int(text.substr(0, 4));
  const auto m = detail::parse_int(text.substr(5, 2));
  const auto d = detail::parse_int(text.substr(8, 2));
  long long h = 0;
  if (text.size() > 10) {
    if (text[10] != 'T' && text[10] != ' ') throw fail();
    const auto hh = detail::parse_int(text.substr(11));
    if (!hh) throw fail();
    h = *hh;
  }
  if (!y || !m || !d || h < 0 || h > 23 || *m < 1 || *m > 12 || *d < 1 || *d > 31) throw fail();
  return from_civil(static_cast<int>(*y), static_cast<unsigned>(*m), static_cast<unsigned>(*d),
                    static_cast<int>(h));
}

struct Pm25Record {
  long long row_no = 0;
  int year = 0;
  int month = 0;
  int day = 0;
  int hour = 0;
  std::optional<double> pm25;  // ug/m^3
  std::optional<double> dewp;  // deg C
  std::optional<double> temp;  // deg C
  std::optional<double> pres;  // hPa
  std::string cbwd;            // combined wind direction (categorical)
  std::optional<double> iws;   // cumulated wind speed, m/s
  std::optional<double> is_snow;
  std::optional<double> ir_rain;

  HourStamp stamp() const {
    return HourStamp::from_civil(year, static_cast<unsigned>(month), static_cast<unsigned>(day),
                                 hour);
  }

  friend bool operator==(const Pm25Record&, const Pm25Record&) = default;
};

inline constexpr std::string_view kPm25Header = "No,year,month,day,hour,pm2.5,DEWP,TEMP,PRES,cbwd,Iws,Is,Ir";

inline bool is_pm25_header(std::string_view line) {
  return detail::trim(line) == kPm25Header;
}

using MeasurementField = std::optional<double> Pm25Record::*;

namespace detail {

inline MeasurementField numeric_field(std::string_view name) {
  if (name == "pm2.5") return &Pm25Record::pm25;
  if (name == "DEWP") return &Pm25Record::dewp;
  if (name == "TEMP") return &Pm25Record::temp;
  if (name == "PRES") return &Pm25Record::pres;
  if (name == "Iws") return &Pm25Record::iws;
  if (name == "Is") return &Pm25Record::is_snow;
  if (name == "Ir") return &Pm25Record::ir_rain;
  return nullptr;
}

}  // namespace detail

// "NA" in any numeric measurement column parses as missing. Consecutive records must be
// exactly one hour apart.
inline std::vector<Pm25Record> parse_pm25_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) throw Error(ErrorCode::SchemaMismatch, "input is empty");
  if (line.size() >= 3 && line.compare(0, 3, "\xEF\xBB\xBF") == 0) line.erase(0, 3);
  if (!is_pm25_header(line)) {
    throw Error(ErrorCode::SchemaMismatch, "header '" + std::string(detail::trim(line)) +
                                               "' does not match '" + std::string(kPm25Header) +
                                               "'");
  }

  std::vector<Pm25Record> records;
  std::size_t line_no = 1;
  std::optional<HourStamp> previous;
  while (std::getline(in, line)) {
    ++line_no;
    if (detail::trim(line).empty()) continue;
    const auto fields = detail::split_fields(line);
    const auto malformed = [&](const std::string& reason) {
      return Error(ErrorCode::MalformedRow, "line " + std::to_string(line_no) + ": " + reason);
    };
    if (fields.size() != 13) {
      throw malformed("expected 13 fields, got " + std::to_string(fields.size()));
    }

    Pm25Record rec;
    const auto integer = [&](std::size_t i, const char* name) {
      const auto v = detail::parse_int(fields[i]);
      if (!v) throw malformed(std::string("bad ") + name + " '" + std::string(fields[i]) + "'");
      return *v;
    };
    const auto measurement = [&](std::size_t i, const char* name) -> std::optional<double> {
      if (fields[i] == "NA") return std::nullopt;
      const auto v = detail::parse_double(fields[i]);
      if (!v || !std::isfinite(*v)) {
        throw malformed(std::string("bad ") + name + " '" + std::string(fields[i]) + "'");
      }
      return v;
    };

    rec.row_no = integer(0, "No");
    rec.year = static_cast<int>(integer(1, "year"));
    rec.month = static_cast<int>(integer(2, "month"));
    rec.day = static_cast<int>(integer(3, "day"));
    rec.hour = static_cast<int>(integer(4, "hour"));
    if (rec.month < 1 || rec.month > 12) throw malformed("month out of range");
    if (rec.hour < 0 || rec.hour > 23) throw malformed("hour out of range");
    rec.pm25 = measurement(5, "pm2.5");
    rec.dewp = measurement(6, "DEWP");
    rec.temp = measurement(7, "TEMP");
    rec.pres = measurement(8, "PRES");
    rec.cbwd = std::string(fields[9]);
    rec.iws = measurement(10, "Iws");
    rec.is_snow = measurement(11, "Is");
    rec.ir_rain = measurement(12, "Ir");

    HourStamp stamp;
    try {
      stamp = rec.stamp();
    } catch (const Error& e) {
      throw malformed(e.what());
    }
    if (previous && stamp.hours != previous->hours + 1) {
      throw Error(ErrorCode::NonMonotonicTime,
                  "line " + std::to_string(line_no) + ": " + stamp.to_string() +
                      " does not follow " + previous->to_string() + " by one hour");
    }
    previous = stamp;
    records.push_back(std::move(rec));
  }
  return records;
}

inline std::vector<Pm25Record> parse_pm25_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::IoError, "cannot open '" + path + "'");
  return parse_pm25_csv(in);
}

struct CompleteWindow {
  std::size_t start_index = 0;
  std::size_t length = 0;

  friend bool operator==(const CompleteWindow&, const CompleteWindow&) = default;
};

// Records stamped within [start, end]. With `count`, exactly `count` records from `start`
// are taken instead and a warning reports the actual end when it differs from `end`.
struct ByDateRange {
  HourStamp start;
  HourStamp end;
  std::optional<std::size_t> count;
};

// Earliest run of at least n complete records, truncated to n.
struct FirstCompleteRun {
  std::size_t n = 1000;
};

using WindowPolicy = std::variant<ByDateRange, FirstCompleteRun>;

namespace detail {

inline bool record_complete(const Pm25Record& rec,
                            const std::vector<MeasurementField>& fields) {
  return std::all_of(fields.begin(), fields.end(),
                     [&](auto field) { return (rec.*field).has_value(); });
}

inline std::vector<MeasurementField> resolve_fields(const std::vector<std::string>& columns) {
  std::vector<MeasurementField> out;
  for (const auto& name : columns) {
    if (name == "cbwd") {
      throw Error(ErrorCode::CategoricalColumnRequested,
                  "column 'cbwd' is categorical and cannot be analysed");
    }
    auto field = numeric_field(name);
    if (field == nullptr) throw Error(ErrorCode::UnknownColumn, "unknown column '" + name + "'");
    out.push_back(field);
  }
  return out;
}

}  // namespace detail

// Completeness is required across `required_columns` (pm2.5 by default).
inline CompleteWindow select_window(const std::vector<Pm25Record>& records,
                                    const WindowPolicy& policy,
                                    const std::vector<std::string>& required_columns = {"pm2.5"}) {
  const auto fields = detail::resolve_fields(required_columns);

  if (const auto* run = std::get_if<FirstCompleteRun>(&policy)) {
    if (run->n < 1) throw Error(ErrorCode::InvalidArgument, "window length must be >= 1");
    std::size_t run_start = 0;
    std::size_t run_length = 0;
    for (std::size_t i = 0; i < records.size(); ++i) {
      if (detail::record_complete(records[i], fields)) {
        if (run_length == 0) run_start = i;
        if (++run_length == run->n) return {run_start, run->n};
      } else {
        run_length = 0;
      }
    }
    throw Error(ErrorCode::NoCompleteRun,
                "no run of " + std::to_string(run->n) + " consecutive complete records");
  }

  const auto& range = std::get<ByDateRange>(policy);
  if (range.end < range.start) throw Error(ErrorCode::InvalidArgument, "date range is reversed");
  const auto first = std::find_if(records.begin(), records.end(),
                                  [&](const Pm25Record& r) { return r.stamp() >= range.start; });
  if (first == records.end() || first->stamp() > range.end) {
    throw Error(ErrorCode::InvalidArgument, "no records between " + range.start.to_string() +
                                                " and " + range.end.to_string());
  }
  const auto start = static_cast<std::size_t>(first - records.begin());
  std::size_t length = 0;
  if (range.count) {
    length = *range.count;
    if (length < 1 || start + length > records.size()) {
      throw Error(ErrorCode::InvalidArgument, "requested " + std::to_string(length) +
                                                  " records from " + range.start.to_string() +
                                                  " exceeds the data");
    }
    const HourStamp actual_end = records[start + length - 1].stamp();
    if (actual_end != range.end) {
      warn("window of " + std::to_string(length) + " records from " + range.start.to_string() +
           " ends at " + actual_end.to_string() + ", not at the requested " +
           range.end.to_string());
    }
  } else {
    while (start + length < records.size() && records[start + length].stamp() <= range.end) {
      ++length;
    }
  }

  for (std::size_t i = start; i < start + length; ++i) {
    if (!detail::record_complete(records[i], fields)) {
      throw Error(ErrorCode::WindowHasMissing,
                  "record " + records[i].stamp().to_string() + " inside the window has missing values");
    }
  }
  return {start, length};
}

inline SeriesMatrix to_series_matrix(const std::vector<Pm25Record>& records,
                                     const CompleteWindow& window,
                                     const std::vector<std::string>& columns) {
  if (columns.empty()) throw Error(ErrorCode::InvalidArgument, "no columns requested");
  const auto fields = detail::resolve_fields(columns);
  if (window.length == 0 || window.start_index + window.length > records.size()) {
    throw Error(ErrorCode::InvalidArgument, "window lies outside the records");
  }
  std::vector<double> values;
  values.reserve(window.length * columns.size());
  for (std::size_t i = window.start_index; i < window.start_index + window.length; ++i) {
    for (std::size_t c = 0; c < fields.size(); ++c) {
      const auto& v = records[i].*fields[c];
      if (!v) {
        throw Error(ErrorCode::WindowHasMissing, "column '" + columns[c] + "' is missing at " +
                                                     records[i].stamp().to_string());
      }
      values.push_back(*v);
    }
  }
  return make_series_matrix(std::move(values), columns.size(), columns);
}

// Headered, comma-separated, all-numeric table.
inline SeriesMatrix read_numeric_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) throw Error(ErrorCode::EmptyInput, "input is empty");
  if (line.size() >= 3 && line.compare(0, 3, "\xEF\xBB\xBF") == 0) line.erase(0, 3);
  std::vector<std::string> labels;
  for (auto f : detail::split_fields(line)) labels.emplace_back(f);

  std::vector<double> values;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (detail::trim(line).empty()) continue;
    const auto fields = detail::split_fields(line);
    if (fields.size() != labels.size()) {
      throw Error(ErrorCode::MalformedRow, "line " + std::to_string(line_no) + ": expected " +
                                               std::to_string(labels.size()) + " fields, got " +
                                               std::to_string(fields.size()));
    }
    for (std::size_t c = 0; c < fields.size(); ++c) {
      const auto v = detail::parse_double(fields[c]);
      if (!v) {
        throw Error(ErrorCode::MalformedRow, "line " + std::to_string(line_no) + ", column '" +
                                                 labels[c] + "': '" + std::string(fields[c]) +
                                                 "' is not a number");
      }
      values.push_back(*v);
    }
  }
  const std::size_t cols = labels.size();
  return make_series_matrix(std::move(values), cols, std::move(labels));
}

inline SeriesMatrix select_columns(const SeriesMatrix& m, const std::vector<std::string>& names) {
  std::vector<std::size_t> idx;
  for (const auto& name : names) {
    const auto it = std::find(m.labels().begin(), m.labels().end(), name);
    if (it == m.labels().end()) throw Error(ErrorCode::UnknownColumn, "unknown column '" + name + "'");
    idx.push_back(static_cast<std::size_t>(it - m.labels().begin()));
  }
  std::vector<double> values;
  values.reserve(m.rows() * idx.size());
  for (std::size_t r = 0; r < m.rows(); ++r) {
    for (auto c : idx) values.push_back(m(r, c));
  }
  return make_series_matrix(std::move(values), idx.size(), names);
}

}  // namespace copte
