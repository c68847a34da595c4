#include "cli_app.hpp"

#include <algorithm>
#include <fstream>
#include <iostream>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "copte/causality.hpp"
#include "copte/copula.hpp"
#include "copte/ingest.hpp"
#include "copte/oracle.hpp"
#include "report.hpp"

namespace copte::cli {
namespace {

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Failure in a named stage ("load", "estimate", ...).
struct StageError : std::runtime_error {
  StageError(const std::string& stage, const std::string& what)
      : std::runtime_error(stage + ": " + what) {}
};

template <typename F>
auto in_stage(const std::string& stage, F&& f) {
  try {
    return f();
  } catch (const UsageError&) {
    throw;
  } catch (const std::exception& e) {
    throw StageError(stage, e.what());
  }
}

struct DataOptions {
  std::string input;
  int k = 3;
  std::string format = "csv";
  std::string output;
  std::string date_range;
  std::size_t first_complete_run = 1000;
  bool first_complete_run_given = false;
};

struct ScanOptions {
  std::string cause;
  std::string effect;
  std::string lags = "1..24";
  int order = 1;
  bool compare = false;
};

struct SynthOptions {
  Var2Spec spec;
  std::size_t n = 10000;
  std::size_t burn_in = 1000;
  std::string output;
};

struct OracleOptions {
  Var2Spec spec;
  std::string lags = "1";
  int order = 1;
  std::string format = "csv";
  std::string output;
};

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::string item;
  std::istringstream in(s);
  while (std::getline(in, item, sep)) {
    const auto t = detail::trim(item);
    if (!t.empty()) out.emplace_back(t);
  }
  return out;
}

// "a..b" inclusive ranges and comma lists, e.g. "1..9,12,24".
std::vector<int> parse_lags(const std::string& spec) {
  std::vector<int> lags;
  for (const auto& part : split(spec, ',')) {
    const auto dots = part.find("..");
    const auto number = [&](std::string_view s) {
      const auto v = detail::parse_int(detail::trim(s));
      if (!v) throw UsageError("bad lag specification '" + spec + "'");
      return static_cast<int>(*v);
    };
    if (dots == std::string::npos) {
      lags.push_back(number(part));
    } else {
      const int lo = number(std::string_view(part).substr(0, dots));
      const int hi = number(std::string_view(part).substr(dots + 2));
      if (hi < lo) throw UsageError("empty lag range '" + part + "'");
      for (int l = lo; l <= hi; ++l) lags.push_back(l);
    }
  }
  try {
    check_lags(lags);
  } catch (const Error& e) {
    throw UsageError(std::string("--lags: ") + e.what());
  }
  return lags;
}

// Runs `write` against --output (or `out` when empty). The file is written only on success.
template <typename F>
void emit(const std::string& path, std::ostream& out, F&& write) {
  if (path.empty()) {
    write(out);
    return;
  }
  std::ostringstream buffer;
  write(buffer);
  std::ofstream file(path, std::ios::binary);
  if (!file) throw StageError("output", "cannot open '" + path + "' for writing");
  file << buffer.str();
  if (!file) throw StageError("output", "failed writing '" + path + "'");
}

// Loads the requested columns. PM2.5-schema files go through window selection; other
// headered numeric CSV files are used whole.
SeriesMatrix load_columns(const DataOptions& opt, const std::vector<std::string>& columns,
                          std::ostream& err) {
  return in_stage("load", [&] {
    std::ifstream in(opt.input, std::ios::binary);
    if (!in) throw Error(ErrorCode::IoError, "cannot open '" + opt.input + "'");
    std::string header;
    std::getline(in, header);
    in.clear();
    in.seekg(0);

    if (!is_pm25_header(header)) {
      if (!opt.date_range.empty() || opt.first_complete_run_given) {
        throw UsageError("--date-range and --first-complete-run apply only to PM2.5-schema input");
      }
      return select_columns(read_numeric_csv(in), columns);
    }

    const auto records = parse_pm25_csv(in);
    WindowPolicy policy = FirstCompleteRun{opt.first_complete_run};
    if (!opt.date_range.empty()) {
      if (opt.first_complete_run_given) {
        throw UsageError("--date-range and --first-complete-run are mutually exclusive");
      }
      const auto colon = opt.date_range.find(':');
      if (colon == std::string::npos) throw UsageError("--date-range expects START:END");
      policy = ByDateRange{HourStamp::parse(opt.date_range.substr(0, colon)),
                           HourStamp::parse(opt.date_range.substr(colon + 1)), std::nullopt};
    }
    const CompleteWindow window = select_window(records, policy, columns);
    const auto& first = records[window.start_index];
    const auto& last = records[window.start_index + window.length - 1];
    err << "window: " << window.length << " records, " << first.stamp().to_string() << " to "
        << last.stamp().to_string() << '\n';
    return to_series_matrix(records, window, columns);
  });
}

void check_format(const std::string& format) {
  if (format != "csv" && format != "json") throw UsageError("--format must be csv or json");
}

void check_k(int k) {
  if (k < 1) throw UsageError("--k must be >= 1");
}

int cmd_ce(const DataOptions& opt, const std::string& columns_arg, std::ostream& out,
           std::ostream& err) {
  check_format(opt.format);
  check_k(opt.k);
  const auto columns = split(columns_arg, ',');
  if (columns.size() < 2) throw UsageError("--columns needs at least two column names");

  const SeriesMatrix data = load_columns(opt, columns, err);
  const EstimatorParams params{opt.k};
  const double ce = in_stage("estimate", [&] { return copula_entropy(data, params); });

  emit(opt.output, out, [&](std::ostream& os) {
    if (opt.format == "json") {
      nlohmann::json j = {{"ce_nats", ce}, {"n", data.rows()}, {"k", opt.k}, {"columns", columns}};
      os << j.dump(2) << '\n';
    } else {
      std::string joined;
      for (const auto& c : columns) joined += (joined.empty() ? "" : ";") + c;
      os << "ce_nats,n,k,columns\n"
         << report::format_g6(ce) << ',' << data.rows() << ',' << opt.k << ',' << joined << '\n';
    }
  });
  return 0;
}

struct PairData {
  std::vector<double> cause;
  std::vector<double> effect;
};

PairData load_pair(const DataOptions& opt, const ScanOptions& scan, std::ostream& err) {
  if (scan.cause.empty() || scan.effect.empty()) {
    throw UsageError("--cause and --effect are required");
  }
  if (scan.cause == scan.effect) throw UsageError("--cause and --effect must differ");
  const SeriesMatrix data = load_columns(opt, {scan.cause, scan.effect}, err);
  return {data.column(0), data.column(1)};
}

int cmd_te(const DataOptions& opt, const ScanOptions& scan, std::ostream& out,
           std::ostream& err) {
  check_format(opt.format);
  check_k(opt.k);
  if (scan.order < 1) throw UsageError("--order must be >= 1");
  const auto lags = parse_lags(scan.lags);
  const PairData pair = load_pair(opt, scan, err);
  const EstimatorParams params{opt.k};

  const LagScanResult result = in_stage("estimate", [&] {
    return lag_scan(pair.cause, pair.effect, lags, scan.order, params, scan.cause, scan.effect);
  });

  emit(opt.output, out, [&](std::ostream& os) {
    if (opt.format == "json") {
      os << report::to_json(result, opt.k).dump(2) << '\n';
    } else {
      report::write_lag_scan_csv(os, report::to_rows(result));
    }
  });
  return 0;
}

int cmd_baseline(const DataOptions& opt, const ScanOptions& scan, std::ostream& out,
                 std::ostream& err) {
  check_format(opt.format);
  check_k(opt.k);
  if (scan.order < 1) throw UsageError("--order must be >= 1");
  const auto lags = parse_lags(scan.lags);
  const PairData pair = load_pair(opt, scan, err);
  const EstimatorParams params{opt.k};

  struct Row {
    int lag;
    double cmi;
    std::size_t n;
    double te;
  };
  std::vector<Row> rows(lags.size());
  in_stage("estimate", [&] {
    detail::parallel_for(
        lags.size(),
        [&](std::size_t i) {
          const EmbeddingSpec spec{lags[i], scan.order};
          try {
            rows[i].lag = lags[i];
            rows[i].cmi = cmi_four_entropy_baseline(pair.cause, pair.effect, spec, params);
            rows[i].n = static_cast<std::size_t>(spec.effective_rows(pair.effect.size()));
            if (scan.compare) {
              rows[i].te = transfer_entropy(pair.cause, pair.effect, spec, params).te_nats();
            }
          } catch (const Error& e) {
            throw Error(e.code(), "lag " + std::to_string(lags[i]) + ": " + e.what());
          }
        },
        1);
    return 0;
  });

  emit(opt.output, out, [&](std::ostream& os) {
    if (opt.format == "json") {
      nlohmann::json entries = nlohmann::json::array();
      for (const auto& r : rows) {
        nlohmann::json e = {{"lag", r.lag}, {"cmi_nats", r.cmi}, {"n_effective", r.n}};
        if (scan.compare) e["te_nats"] = r.te;
        entries.push_back(e);
      }
      nlohmann::json j = {{"cause", scan.cause}, {"effect", scan.effect}, {"order_m", scan.order},
                          {"k", opt.k}, {"entries", entries}};
      os << j.dump(2) << '\n';
    } else {
      os << "lag,cmi_nats,n_effective" << (scan.compare ? ",te_nats" : "") << '\n';
      for (const auto& r : rows) {
        os << r.lag << ',' << report::format_g6(r.cmi) << ',' << r.n;
        if (scan.compare) os << ',' << report::format_g6(r.te);
        os << '\n';
      }
    }
  });
  return 0;
}

int cmd_synth(const SynthOptions& opt, std::ostream& out) {
  if (opt.n < 1) throw UsageError("--n must be >= 1");
  const Var2Sample sample =
      in_stage("simulate", [&] { return simulate_var2(opt.spec, opt.n, opt.burn_in); });
  emit(opt.output, out, [&](std::ostream& os) {
    os << "x,y\n";
    for (std::size_t t = 0; t < sample.x.size(); ++t) {
      os << report::format_exact(sample.x[t]) << ',' << report::format_exact(sample.y[t]) << '\n';
    }
  });
  return 0;
}

int cmd_oracle(const OracleOptions& opt, std::ostream& out) {
  check_format(opt.format);
  if (opt.order < 1) throw UsageError("--order must be >= 1");
  const auto lags = parse_lags(opt.lags);

  struct Row {
    int lag;
    double gc;
    double te;
  };
  std::vector<Row> rows;
  const StationaryCov cov = in_stage("oracle", [&] {
    const StationaryCov c = stationary_covariance(opt.spec);
    for (int lag : lags) {
      const double gc = analytic_var_gc(opt.spec, lag, opt.order);
      rows.push_back({lag, gc, 0.5 * gc});
    }
    return c;
  });

  emit(opt.output, out, [&](std::ostream& os) {
    if (opt.format == "json") {
      nlohmann::json entries = nlohmann::json::array();
      for (const auto& r : rows) {
        entries.push_back({{"lag", r.lag}, {"te_nats", r.te}, {"gc", r.gc}});
      }
      nlohmann::json j = {{"a", opt.spec.a},
                          {"b", opt.spec.b},
                          {"c", opt.spec.c},
                          {"sigma_eps", opt.spec.sigma_eps},
                          {"sigma_eta", opt.spec.sigma_eta},
                          {"order_m", opt.order},
                          {"var_y", cov.sigma(0, 0)},
                          {"cov_yx", cov.sigma(0, 1)},
                          {"var_x", cov.sigma(1, 1)},
                          {"entries", entries}};
      os << j.dump(2) << '\n';
    } else {
      os << "lag,te_nats,gc,var_y,cov_yx,var_x\n";
      for (const auto& r : rows) {
        os << r.lag << ',' << report::format_g6(r.te) << ',' << report::format_g6(r.gc) << ','
           << report::format_g6(cov.sigma(0, 0)) << ',' << report::format_g6(cov.sigma(0, 1))
           << ',' << report::format_g6(cov.sigma(1, 1)) << '\n';
      }
    }
  });
  return 0;
}

void add_data_options(CLI::App* cmd, DataOptions& opt) {
  cmd->add_option("--input", opt.input, "Input CSV (PM2.5 schema or headered numeric)")
      ->required();
  cmd->add_option("--k", opt.k, "Neighbor count")->capture_default_str();
  cmd->add_option("--format", opt.format, "Output format: csv or json")->capture_default_str();
  cmd->add_option("--output", opt.output, "Output file (default: standard output)");
  cmd->add_option("--date-range", opt.date_range,
                  "PM2.5 window START:END, e.g. 2010-04-02T00:2010-05-14T23");
  cmd->add_option("--first-complete-run", opt.first_complete_run,
                  "PM2.5 window: earliest run of N complete records")
      ->capture_default_str();
}

void add_scan_options(CLI::App* cmd, ScanOptions& opt) {
  cmd->add_option("--cause", opt.cause, "Cause column")->required();
  cmd->add_option("--effect", opt.effect, "Effect column")->required();
  cmd->add_option("--lags", opt.lags, "Lags: a..b ranges and comma lists")->capture_default_str();
  cmd->add_option("--order", opt.order, "Markov order of the effect's past")->capture_default_str();
}

void add_var_options(CLI::App* cmd, Var2Spec& spec) {
  cmd->add_option("--a", spec.a, "Y self-coefficient")->capture_default_str();
  cmd->add_option("--b", spec.b, "X -> Y coupling")->capture_default_str();
  cmd->add_option("--c", spec.c, "X self-coefficient")->capture_default_str();
  cmd->add_option("--sigma-eps", spec.sigma_eps, "Y innovation std")->capture_default_str();
  cmd->add_option("--sigma-eta", spec.sigma_eta, "X innovation std")->capture_default_str();
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Transfer entropy and copula entropy estimation", "copte"};
  app.require_subcommand(1);

  DataOptions data;
  ScanOptions scan;
  std::string columns;
  SynthOptions synth;
  OracleOptions oracle;

  auto* ce = app.add_subcommand("ce", "Copula entropy of selected columns");
  add_data_options(ce, data);
  ce->add_option("--columns", columns, "Comma-separated column names (at least two)")->required();

  auto* te = app.add_subcommand("te", "Transfer entropy lag scan via copula entropy");
  add_data_options(te, data);
  add_scan_options(te, scan);

  auto* baseline = app.add_subcommand("baseline", "Four-entropy kNN conditional MI lag scan");
  add_data_options(baseline, data);
  add_scan_options(baseline, scan);
  baseline->add_flag("--compare", scan.compare, "Also report the copula-entropy TE per lag");

  auto* syn = app.add_subcommand("synth", "Simulate the bivariate VAR(1) to CSV (x,y)");
  add_var_options(syn, synth.spec);
  syn->add_option("--n", synth.n, "Samples to record")->capture_default_str();
  syn->add_option("--burn-in", synth.burn_in, "Discarded warm-up steps")->capture_default_str();
  syn->add_option("--seed", synth.spec.seed, "Generator seed")->capture_default_str();
  syn->add_option("--output", synth.output, "Output file (default: standard output)");

  auto* orc = app.add_subcommand("oracle", "Analytic TE, GC and stationary covariance of the VAR");
  add_var_options(orc, oracle.spec);
  orc->add_option("--lags", oracle.lags, "Lags: a..b ranges and comma lists")
      ->capture_default_str();
  orc->add_option("--order", oracle.order, "Markov order")->capture_default_str();
  orc->add_option("--format", oracle.format, "Output format: csv or json")->capture_default_str();
  orc->add_option("--output", oracle.output, "Output file (default: standard output)");

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? 0 : 2;
  }
  data.first_complete_run_given = (ce->parsed() ? ce : te->parsed() ? te : baseline)
                                      ->count("--first-complete-run") > 0;

  const auto previous_handler = warning_handler();
  set_warning_handler([&err](std::string_view msg) { err << "warning: " << msg << '\n'; });
  struct Restore {
    WarningHandler h;
    ~Restore() { set_warning_handler(std::move(h)); }
  } restore{previous_handler};

  try {
    if (ce->parsed()) return cmd_ce(data, columns, out, err);
    if (te->parsed()) return cmd_te(data, scan, out, err);
    if (baseline->parsed()) return cmd_baseline(data, scan, out, err);
    if (syn->parsed()) return cmd_synth(synth, out);
    if (orc->parsed()) return cmd_oracle(oracle, out);
  } catch (const UsageError& e) {
    err << "usage error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return 1;
  }
  return 2;
}

}  // namespace copte::cli
