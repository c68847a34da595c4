#pragma once

// Table output for the command-line tool: 6 significant digits in CSV, full precision
// (shortest round-trip representation) in JSON.

#include <charconv>
#include <cstddef>
#include <istream>
#include <ostream>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "copte/core.hpp"
#include "copte/ingest.hpp"

namespace copte::report {

inline constexpr std::string_view kLagScanHeader =
    "lag,te_nats,ce_joint,ce_self,ce_assoc,ce_past,n_effective";

inline std::string format_g6(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, v, std::chars_format::general, 6);
  return std::string(buf, res.ptr);
}

inline std::string format_exact(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

// One parsed line of a lag-scan CSV.
struct LagScanRow {
  int lag = 0;
  double te_nats = 0.0;
  double ce_joint = 0.0;
  double ce_self = 0.0;
  double ce_assoc = 0.0;
  double ce_past = 0.0;
  std::size_t n_effective = 0;

  friend bool operator==(const LagScanRow&, const LagScanRow&) = default;
};

inline std::vector<LagScanRow> to_rows(const LagScanResult& scan) {
  std::vector<LagScanRow> rows;
  for (const auto& [lag, e] : scan.entries) {
    rows.push_back({lag, e.te_nats(), e.ce_joint(), e.ce_self(), e.ce_assoc(), e.ce_past(),
                    e.n_effective()});
  }
  return rows;
}

inline void write_lag_scan_csv(std::ostream& out, const std::vector<LagScanRow>& rows) {
  out << kLagScanHeader << '\n';
  for (const auto& r : rows) {
    out << r.lag << ',' << format_g6(r.te_nats) << ',' << format_g6(r.ce_joint) << ','
        << format_g6(r.ce_self) << ',' << format_g6(r.ce_assoc) << ',' << format_g6(r.ce_past)
        << ',' << r.n_effective << '\n';
  }
}

inline std::vector<LagScanRow> parse_lag_scan_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line) || detail::trim(line) != kLagScanHeader) {
    throw Error(ErrorCode::SchemaMismatch, "expected header '" + std::string(kLagScanHeader) + "'");
  }
  std::vector<LagScanRow> rows;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (detail::trim(line).empty()) continue;
    const auto f = detail::split_fields(line);
    const auto bad = [&] {
      return Error(ErrorCode::MalformedRow, "line " + std::to_string(line_no) + " of lag scan");
    };
    if (f.size() != 7) throw bad();
    const auto lag = detail::parse_int(f[0]);
    const auto n = detail::parse_int(f[6]);
    std::optional<double> v[5];
    for (int i = 0; i < 5; ++i) v[i] = detail::parse_double(f[i + 1]);
    if (!lag || !n || *n < 1) throw bad();
    for (const auto& x : v) {
      if (!x) throw bad();
    }
    rows.push_back({static_cast<int>(*lag), *v[0], *v[1], *v[2], *v[3], *v[4],
                    static_cast<std::size_t>(*n)});
  }
  return rows;
}

inline nlohmann::json to_json(const LagScanResult& scan, int k) {
  nlohmann::json entries = nlohmann::json::array();
  for (const auto& [lag, e] : scan.entries) {
    entries.push_back({{"lag", lag},
                       {"te_nats", e.te_nats()},
                       {"ce_joint", e.ce_joint()},
                       {"ce_self", e.ce_self()},
                       {"ce_assoc", e.ce_assoc()},
                       {"ce_past", e.ce_past()},
                       {"n_effective", e.n_effective()}});
  }
  return {{"cause", scan.cause_label},
          {"effect", scan.effect_label},
          {"order_m", scan.order_m},
          {"k", k},
          {"entries", entries}};
}

}  // namespace copte::report
