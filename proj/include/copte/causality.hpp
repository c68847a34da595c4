#pragma once

// Transfer entropy from copula entropies:
//
//   TE(X -> Y) = -Hc(Y_fut, Y_past, X) + Hc(Y_fut, Y_past) + Hc(Y_past, X) - Hc(Y_past)
//
// plus the lag scan built on it and the four-entropy kNN baseline on raw values.

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "copte/copula.hpp"
#include "copte/core.hpp"
#include "copte/detail/parallel.hpp"
#include "copte/knn_entropy.hpp"

namespace copte {

// lag: cause-to-effect offset; order_m: length of the effect's past block.
struct EmbeddingSpec {
  int lag = 1;
  int order_m = 1;

  void check() const {
    if (lag < 1) throw Error(ErrorCode::InvalidArgument, "lag must be >= 1");
    if (order_m < 1) throw Error(ErrorCode::InvalidArgument, "order_m must be >= 1");
  }

  // Rows available from a series of length t; may be <= 0.
  long long effective_rows(std::size_t t) const {
    return static_cast<long long>(t) - lag - order_m + 1;
  }
};

// Row r has base index i = order_m - 1 + r:
//   y_fut[r] = y[i + lag], y_past[r][j] = y[i - j], x_cause[r] = x[i].
struct JointEmbedding {
  std::vector<double> y_fut;
  std::vector<double> y_past;  // row-major rows() x order_m
  std::vector<double> x_cause;
  int order_m = 1;

  std::size_t rows() const noexcept { return y_fut.size(); }
  double past(std::size_t r, std::size_t j) const { return y_past[r * order_m + j]; }
};

inline JointEmbedding build_embedding(std::span<const double> x, std::span<const double> y,
                                      const EmbeddingSpec& spec) {
  spec.check();
  if (x.size() != y.size()) {
    throw Error(ErrorCode::LengthMismatch, "cause has " + std::to_string(x.size()) +
                                               " samples, effect has " +
                                               std::to_string(y.size()));
  }
  const long long n_eff = spec.effective_rows(y.size());
  if (n_eff < 1) {
    throw Error(ErrorCode::SeriesTooShort,
                "series of length " + std::to_string(y.size()) + " leaves no rows for lag " +
                    std::to_string(spec.lag) + ", order " + std::to_string(spec.order_m));
  }

  const auto n = static_cast<std::size_t>(n_eff);
  const auto m = static_cast<std::size_t>(spec.order_m);
  JointEmbedding e;
  e.order_m = spec.order_m;
  e.y_fut.resize(n);
  e.x_cause.resize(n);
  e.y_past.resize(n * m);
  for (std::size_t r = 0; r < n; ++r) {
    const std::size_t i = m - 1 + r;
    e.y_fut[r] = y[i + static_cast<std::size_t>(spec.lag)];
    e.x_cause[r] = x[i];
    for (std::size_t j = 0; j < m; ++j) e.y_past[r * m + j] = y[i - j];
  }
  return e;
}

namespace detail {

struct BlockSelection {
  bool fut = false;
  bool past = false;
  bool cause = false;
};

// Column-concatenates the selected blocks in the order (y_fut, y_past..., x_cause).
inline SeriesMatrix embedding_block(const JointEmbedding& e, BlockSelection sel) {
  const std::size_t m = static_cast<std::size_t>(e.order_m);
  std::vector<std::string> labels;
  if (sel.fut) labels.push_back("y_fut");
  if (sel.past) {
    for (std::size_t j = 0; j < m; ++j) labels.push_back("y_past" + std::to_string(j));
  }
  if (sel.cause) labels.push_back("x_cause");

  const std::size_t d = labels.size();
  std::vector<double> values;
  values.reserve(e.rows() * d);
  for (std::size_t r = 0; r < e.rows(); ++r) {
    if (sel.fut) values.push_back(e.y_fut[r]);
    if (sel.past) {
      for (std::size_t j = 0; j < m; ++j) values.push_back(e.past(r, j));
    }
    if (sel.cause) values.push_back(e.x_cause[r]);
  }
  return make_series_matrix(std::move(values), d, std::move(labels));
}

inline void check_sample_size(const JointEmbedding& e, const EstimatorParams& params) {
  if (params.k < 1) throw Error(ErrorCode::InvalidArgument, "k must be >= 1");
  if (e.rows() <= static_cast<std::size_t>(params.k) + 1) {
    throw Error(ErrorCode::TooFewSamples, std::to_string(e.rows()) +
                                              " embedded rows is too few for k=" +
                                              std::to_string(params.k));
  }
}

}  // namespace detail

// Copula-entropy terms of an embedding. With order_m == 1 the past block is one
// variable and its term is 0 without estimation.
inline TeEstimate transfer_entropy(const JointEmbedding& e, const EstimatorParams& params) {
  detail::check_sample_size(e, params);
  const double ce_joint =
      copula_entropy(detail::embedding_block(e, {true, true, true}), params);
  const double ce_self = copula_entropy(detail::embedding_block(e, {true, true, false}), params);
  const double ce_assoc =
      copula_entropy(detail::embedding_block(e, {false, true, true}), params);
  const double ce_past =
      e.order_m > 1 ? copula_entropy(detail::embedding_block(e, {false, true, false}), params)
                    : 0.0;
  return TeEstimate::from_terms(ce_joint, ce_self, ce_assoc, ce_past, e.rows());
}

inline TeEstimate transfer_entropy(std::span<const double> x, std::span<const double> y,
                                   const EmbeddingSpec& spec, const EstimatorParams& params) {
  return transfer_entropy(build_embedding(x, y, spec), params);
}

// Conditional mutual information I(Y_fut; X | Y_past) as a sum of four kNN entropies
// of the raw (not rank-transformed) embedding.
inline double cmi_four_entropy_baseline(std::span<const double> x, std::span<const double> y,
                                        const EmbeddingSpec& spec,
                                        const EstimatorParams& params) {
  const JointEmbedding e = build_embedding(x, y, spec);
  detail::check_sample_size(e, params);
  const double h_self = kl_entropy(detail::embedding_block(e, {true, true, false}), params);
  const double h_assoc = kl_entropy(detail::embedding_block(e, {false, true, true}), params);
  const double h_past = kl_entropy(detail::embedding_block(e, {false, true, false}), params);
  const double h_joint = kl_entropy(detail::embedding_block(e, {true, true, true}), params);
  return h_self + h_assoc - h_past - h_joint;
}

inline void check_lags(std::span<const int> lags) {
  if (lags.empty()) throw Error(ErrorCode::InvalidArgument, "lag list is empty");
  for (std::size_t i = 0; i < lags.size(); ++i) {
    if (lags[i] < 1) {
      throw Error(ErrorCode::InvalidArgument, "lag " + std::to_string(lags[i]) + " is not >= 1");
    }
    if (i > 0 && lags[i] <= lags[i - 1]) {
      throw Error(ErrorCode::InvalidArgument, "lags must be strictly increasing");
    }
  }
}

// Each lag gets its own embedding, so n_effective shrinks as the lag grows.
inline LagScanResult lag_scan(std::span<const double> x, std::span<const double> y,
                              std::span<const int> lags, int order_m,
                              const EstimatorParams& params, std::string cause_label = "x",
                              std::string effect_label = "y") {
  check_lags(lags);
  LagScanResult result;
  result.cause_label = std::move(cause_label);
  result.effect_label = std::move(effect_label);
  result.order_m = order_m;
  result.entries.resize(lags.size());

  detail::parallel_for(
      lags.size(),
      [&](std::size_t i) {
        try {
          result.entries[i] = {lags[i], transfer_entropy(x, y, {lags[i], order_m}, params)};
        } catch (const Error& err) {
          throw Error(err.code(), "lag " + std::to_string(lags[i]) + ": " + err.what());
        }
      },
      1);
  return result;
}

}  // namespace copte
