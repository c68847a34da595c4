#pragma once

// Shared data model: observation matrices, estimator parameters, result records,
// and the library-wide error type.

#include <cmath>
#include <cstddef>
#include <functional>
#include <iostream>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <unordered_set>
#include <utility>
#include <vector>

namespace copte {

enum class ErrorCode {
  NonFinite,
  EmptyInput,
  DuplicateLabel,
  RaggedTable,
  TooFewSamples,
  KTooLarge,
  DuplicatePoints,
  SeriesTooShort,
  LengthMismatch,
  InvalidArgument,
  NonStationarySpec,
  SingularDesign,
  DegenerateResidual,
  RhoOutOfRange,
  SchemaMismatch,
  MalformedRow,
  NonMonotonicTime,
  WindowHasMissing,
  NoCompleteRun,
  UnknownColumn,
  CategoricalColumnRequested,
  IoError,
};

inline std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::NonFinite: return "NonFinite";
    case ErrorCode::EmptyInput: return "EmptyInput";
    case ErrorCode::DuplicateLabel: return "DuplicateLabel";
    case ErrorCode::RaggedTable: return "RaggedTable";
    case ErrorCode::TooFewSamples: return "TooFewSamples";
    case ErrorCode::KTooLarge: return "KTooLarge";
    case ErrorCode::DuplicatePoints: return "DuplicatePoints";
    case ErrorCode::SeriesTooShort: return "SeriesTooShort";
    case ErrorCode::LengthMismatch: return "LengthMismatch";
    case ErrorCode::InvalidArgument: return "InvalidArgument";
    case ErrorCode::NonStationarySpec: return "NonStationarySpec";
    case ErrorCode::SingularDesign: return "SingularDesign";
    case ErrorCode::DegenerateResidual: return "DegenerateResidual";
    case ErrorCode::RhoOutOfRange: return "RhoOutOfRange";
    case ErrorCode::SchemaMismatch: return "SchemaMismatch";
    case ErrorCode::MalformedRow: return "MalformedRow";
    case ErrorCode::NonMonotonicTime: return "NonMonotonicTime";
    case ErrorCode::WindowHasMissing: return "WindowHasMissing";
    case ErrorCode::NoCompleteRun: return "NoCompleteRun";
    case ErrorCode::UnknownColumn: return "UnknownColumn";
    case ErrorCode::CategoricalColumnRequested: return "CategoricalColumnRequested";
    case ErrorCode::IoError: return "IoError";
  }
  return "Unknown";
}

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(std::string(to_string(code)) + ": " + message), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

// Non-fatal diagnostics (constant columns, window adjustments). Defaults to stderr.
using WarningHandler = std::function<void(std::string_view)>;

inline WarningHandler& warning_handler() {
  static WarningHandler handler = [](std::string_view msg) {
    std::cerr << "warning: " << msg << '\n';
  };
  return handler;
}

inline void set_warning_handler(WarningHandler handler) { warning_handler() = std::move(handler); }

inline void warn(std::string_view msg) {
  if (warning_handler()) warning_handler()(msg);
}

// T rows (time) by d columns (variables), row-major, all entries finite.
class SeriesMatrix {
 public:
  std::size_t rows() const noexcept { return rows_; }
  std::size_t cols() const noexcept { return cols_; }

  double operator()(std::size_t r, std::size_t c) const { return values_[r * cols_ + c]; }

  std::span<const double> row(std::size_t r) const {
    return {values_.data() + r * cols_, cols_};
  }

  std::vector<double> column(std::size_t c) const {
    std::vector<double> out(rows_);
    for (std::size_t r = 0; r < rows_; ++r) out[r] = (*this)(r, c);
    return out;
  }

  std::span<const double> data() const noexcept { return values_; }
  const std::vector<std::string>& labels() const noexcept { return labels_; }

  friend bool operator==(const SeriesMatrix&, const SeriesMatrix&) = default;

 private:
  SeriesMatrix(std::vector<double> values, std::size_t rows, std::size_t cols,
               std::vector<std::string> labels)
      : values_(std::move(values)), rows_(rows), cols_(cols), labels_(std::move(labels)) {}

  friend SeriesMatrix validate_matrix(std::span<const std::vector<double>>,
                                      std::vector<std::string>);
  friend SeriesMatrix make_series_matrix(std::vector<double>, std::size_t,
                                         std::vector<std::string>);

  std::vector<double> values_;
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<std::string> labels_;
};

namespace detail {

inline void check_labels(const std::vector<std::string>& labels) {
  std::unordered_set<std::string> seen;
  for (const auto& label : labels) {
    if (!seen.insert(label).second) {
      throw Error(ErrorCode::DuplicateLabel, "column label '" + label + "' appears more than once");
    }
  }
}

inline std::vector<std::string> default_labels(std::size_t d) {
  std::vector<std::string> labels(d);
  for (std::size_t c = 0; c < d; ++c) labels[c] = "c" + std::to_string(c);
  return labels;
}

inline void check_finite(std::span<const double> values, std::size_t cols) {
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (!std::isfinite(values[i])) {
      throw Error(ErrorCode::NonFinite, "non-finite value at row " + std::to_string(i / cols) +
                                            ", column " + std::to_string(i % cols));
    }
  }
}

}  // namespace detail

// Validates a row-wise table. Empty `labels` means "c0", "c1", ...
inline SeriesMatrix validate_matrix(std::span<const std::vector<double>> table,
                                    std::vector<std::string> labels = {}) {
  if (table.empty()) throw Error(ErrorCode::EmptyInput, "table has no rows");
  const std::size_t d = table.front().size();
  if (d == 0) throw Error(ErrorCode::EmptyInput, "table has no columns");

  std::vector<double> values;
  values.reserve(table.size() * d);
  for (std::size_t r = 0; r < table.size(); ++r) {
    if (table[r].size() != d) {
      throw Error(ErrorCode::RaggedTable, "row " + std::to_string(r) + " has " +
                                              std::to_string(table[r].size()) +
                                              " entries, expected " + std::to_string(d));
    }
    values.insert(values.end(), table[r].begin(), table[r].end());
  }
  detail::check_finite(values, d);

  if (labels.empty()) labels = detail::default_labels(d);
  if (labels.size() != d) {
    throw Error(ErrorCode::InvalidArgument, "got " + std::to_string(labels.size()) +
                                                " labels for " + std::to_string(d) + " columns");
  }
  detail::check_labels(labels);
  return SeriesMatrix(std::move(values), table.size(), d, std::move(labels));
}

// Same checks as validate_matrix, for data already laid out row-major.
inline SeriesMatrix make_series_matrix(std::vector<double> row_major, std::size_t cols,
                                       std::vector<std::string> labels = {}) {
  if (cols == 0) throw Error(ErrorCode::EmptyInput, "table has no columns");
  if (row_major.empty()) throw Error(ErrorCode::EmptyInput, "table has no rows");
  if (row_major.size() % cols != 0) {
    throw Error(ErrorCode::RaggedTable, "value count is not a multiple of the column count");
  }
  detail::check_finite(row_major, cols);
  if (labels.empty()) labels = detail::default_labels(cols);
  if (labels.size() != cols) {
    throw Error(ErrorCode::InvalidArgument, "label count does not match column count");
  }
  detail::check_labels(labels);
  const std::size_t rows = row_major.size() / cols;
  return SeriesMatrix(std::move(row_major), rows, cols, std::move(labels));
}

// Builds a matrix from equal-length columns.
inline SeriesMatrix from_columns(std::span<const std::vector<double>> columns,
                                 std::vector<std::string> labels = {}) {
  if (columns.empty()) throw Error(ErrorCode::EmptyInput, "no columns");
  const std::size_t n = columns.front().size();
  std::vector<double> values(n * columns.size());
  for (std::size_t c = 0; c < columns.size(); ++c) {
    if (columns[c].size() != n) {
      throw Error(ErrorCode::LengthMismatch, "column " + std::to_string(c) + " has length " +
                                                 std::to_string(columns[c].size()) +
                                                 ", expected " + std::to_string(n));
    }
    for (std::size_t r = 0; r < n; ++r) values[r * columns.size() + c] = columns[c][r];
  }
  return make_series_matrix(std::move(values), columns.size(), std::move(labels));
}

struct EstimatorParams {
  int k = 3;  // neighbor count; distances use the maximum norm

  void check(std::size_t n_effective) const {
    if (k < 1) throw Error(ErrorCode::InvalidArgument, "k must be >= 1");
    if (static_cast<std::size_t>(k) >= n_effective) {
      throw Error(ErrorCode::KTooLarge, "k=" + std::to_string(k) + " needs more than " +
                                            std::to_string(n_effective) + " samples");
    }
  }
};

// Transfer entropy together with the copula-entropy terms it was assembled from.
// te_nats is always computed from the stored terms, so the decomposition identity
// holds for every instance.
class TeEstimate {
 public:
  TeEstimate() = default;

  static TeEstimate from_terms(double ce_joint, double ce_self, double ce_assoc, double ce_past,
                               std::size_t n_effective) {
    if (n_effective < 1) throw Error(ErrorCode::InvalidArgument, "n_effective must be >= 1");
    TeEstimate e;
    e.ce_joint_ = ce_joint;
    e.ce_self_ = ce_self;
    e.ce_assoc_ = ce_assoc;
    e.ce_past_ = ce_past;
    e.n_effective_ = n_effective;
    e.te_nats_ = combine(ce_joint, ce_self, ce_assoc, ce_past);
    return e;
  }

  static double combine(double ce_joint, double ce_self, double ce_assoc, double ce_past) {
    return -ce_joint + ce_self + ce_assoc - ce_past;
  }

  double te_nats() const noexcept { return te_nats_; }
  double ce_joint() const noexcept { return ce_joint_; }
  double ce_self() const noexcept { return ce_self_; }
  double ce_assoc() const noexcept { return ce_assoc_; }
  double ce_past() const noexcept { return ce_past_; }
  std::size_t n_effective() const noexcept { return n_effective_; }

  bool identity_holds() const {
    return te_nats_ == combine(ce_joint_, ce_self_, ce_assoc_, ce_past_);
  }

  friend bool operator==(const TeEstimate&, const TeEstimate&) = default;

 private:
  double te_nats_ = 0.0;
  double ce_joint_ = 0.0;
  double ce_self_ = 0.0;
  double ce_assoc_ = 0.0;
  double ce_past_ = 0.0;
  std::size_t n_effective_ = 1;
};

struct LagScanEntry {
  int lag = 1;
  TeEstimate estimate;

  friend bool operator==(const LagScanEntry&, const LagScanEntry&) = default;
};

struct LagScanResult {
  std::string cause_label;
  std::string effect_label;
  int order_m = 1;
  std::vector<LagScanEntry> entries;  // strictly increasing lag

  friend bool operator==(const LagScanResult&, const LagScanResult&) = default;
};

}  // namespace copte
