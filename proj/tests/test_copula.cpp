#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <random>
#include <string>
#include <vector>

#include "copte/copula.hpp"
#include "test_support.hpp"

using namespace copte;

namespace {

SeriesMatrix single_column(std::vector<double> v) {
  const std::vector<std::vector<double>> cols{std::move(v)};
  return from_columns(cols);
}

std::vector<double> column_of(const PseudoObservations& u, std::size_t c) {
  std::vector<double> out(u.rows);
  for (std::size_t r = 0; r < u.rows; ++r) out[r] = u(r, c);
  return out;
}

// Silences the constant-column warning for the scope of a test.
struct QuietWarnings {
  WarningHandler saved = warning_handler();
  std::vector<std::string> seen;
  QuietWarnings() {
    set_warning_handler([this](std::string_view m) { seen.emplace_back(m); });
  }
  ~QuietWarnings() { set_warning_handler(saved); }
};

}  // namespace

TEST(RankTransform, RanksOverT) {
  const auto u = rank_transform(single_column({10.0, 30.0, 20.0}));
  EXPECT_EQ(column_of(u, 0), (std::vector<double>{1.0 / 3, 3.0 / 3, 2.0 / 3}));
}

TEST(RankTransform, TiesBrokenByRowIndex) {
  QuietWarnings quiet;
  const auto u = rank_transform(single_column({5.0, 5.0, 5.0}));
  EXPECT_EQ(column_of(u, 0), (std::vector<double>{1.0 / 3, 2.0 / 3, 3.0 / 3}));
  ASSERT_EQ(quiet.seen.size(), 1u);
  EXPECT_NE(quiet.seen[0].find("constant"), std::string::npos);

  const auto partial = rank_transform(single_column({2.0, 1.0, 2.0, 1.0}));
  EXPECT_EQ(column_of(partial, 0), (std::vector<double>{0.75, 0.25, 1.0, 0.5}));
}

TEST(RankTransform, MonotoneInvariant) {
  const auto a = rank_transform(single_column({10.0, 30.0, 20.0}));
  const auto b = rank_transform(single_column({std::exp(10.0), std::exp(30.0), std::exp(20.0)}));
  EXPECT_EQ(a.values, b.values);
}

TEST(RankTransform, ColumnsArePermutationsOfGrid) {
  const auto x = fixtures::correlated_gaussian(257, 0.3, 1);
  const auto u = rank_transform(x);
  for (std::size_t c = 0; c < 2; ++c) {
    auto col = column_of(u, c);
    std::sort(col.begin(), col.end());
    for (std::size_t i = 0; i < col.size(); ++i) {
      EXPECT_EQ(col[i], static_cast<double>(i + 1) / 257.0);
    }
  }
  EXPECT_EQ(u.source_labels, x.labels());
}

TEST(RankTransform, NeedsTwoRows) {
  EXPECT_THROW(rank_transform(single_column({1.0})), Error);
}

TEST(CopulaEntropy, SingleColumnIsExactlyZero) {
  EXPECT_EQ(copula_entropy(single_column(fixtures::white_noise(100, 3)), {3}), 0.0);
}

TEST(CopulaEntropy, TooFewSamples) {
  const std::vector<std::vector<double>> cols{{1, 2, 3, 4}, {4, 2, 3, 1}};
  try {
    copula_entropy(from_columns(cols), {3});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::TooFewSamples);
  }
}

TEST(CopulaEntropy, IndependentUniformsNearZero) {
  // 10-seed mean of |CE| at N=5000; see the N=2000 bias test below.
  std::vector<double> abs_values;
  for (std::uint64_t s = 0; s < 10; ++s) {
    const std::vector<std::vector<double>> cols{fixtures::uniform_noise(5000, 2 * s),
                                                fixtures::uniform_noise(5000, 2 * s + 1)};
    abs_values.push_back(std::abs(copula_entropy(from_columns(cols), {3})));
  }
  EXPECT_LE(fixtures::mean(abs_values), 0.05);
}

TEST(CopulaEntropy, IndependenceBiasIsPositiveAndShrinksWithN) {
  // Boundary effect of the kNN estimator on the unit square: the estimate for independent
  // columns sits slightly above 0 and approaches it as N grows.
  std::vector<double> means;
  for (std::size_t n : {2000u, 8000u}) {
    std::vector<double> v;
    for (std::uint64_t s = 0; s < 10; ++s) {
      const std::vector<std::vector<double>> cols{fixtures::uniform_noise(n, 100 + 2 * s),
                                                  fixtures::uniform_noise(n, 101 + 2 * s)};
      v.push_back(copula_entropy(from_columns(cols), {3}));
    }
    means.push_back(fixtures::mean(v));
  }
  EXPECT_GT(means[0], 0.0);
  EXPECT_LT(means[0], 0.08);
  EXPECT_LT(means[1], means[0]);
}

TEST(CopulaEntropy, GaussianRhoPointNine) {
  const double truth = 0.5 * std::log(1.0 - 0.81);
  std::vector<double> v;
  for (std::uint64_t s = 0; s < 10; ++s) {
    v.push_back(copula_entropy(fixtures::correlated_gaussian(5000, 0.9, 300 + s), {3}));
  }
  EXPECT_NEAR(fixtures::mean(v), truth, 0.05);
  for (double x : v) EXPECT_NEAR(x, truth, 0.08);
}

TEST(CopulaEntropy, ConvergesTowardGaussianValue) {
  const double truth = 0.5 * std::log(1.0 - 0.81);
  std::vector<double> errors;
  for (std::size_t n : {500u, 2000u, 8000u}) {
    std::vector<double> abs_err;
    for (std::uint64_t s = 0; s < 10; ++s) {
      abs_err.push_back(
          std::abs(copula_entropy(fixtures::correlated_gaussian(n, 0.9, 7000 + s), {3}) - truth));
    }
    errors.push_back(fixtures::mean(abs_err));
  }
  EXPECT_GT(errors[0], errors[1]);
  EXPECT_GT(errors[1], errors[2]);
}

TEST(CopulaEntropy, MonotoneInvarianceIsExact) {
  const auto x = fixtures::correlated_gaussian(1500, 0.6, 21);
  std::vector<std::vector<double>> cols{x.column(0), x.column(1)};
  for (auto& v : cols[0]) v = std::exp(v);
  for (auto& v : cols[1]) v = 3.0 * v * v * v - 7.0;
  EXPECT_EQ(copula_entropy(x, {3}), copula_entropy(from_columns(cols), {3}));
}

TEST(CopulaEntropy, ColumnPermutationSymmetry) {
  std::mt19937_64 rng(5);
  std::normal_distribution<double> z;
  std::vector<std::vector<double>> cols(3, std::vector<double>(1200));
  for (std::size_t i = 0; i < 1200; ++i) {
    cols[0][i] = z(rng);
    cols[1][i] = cols[0][i] + z(rng);
    cols[2][i] = std::sin(cols[1][i]) + 0.3 * z(rng);
  }
  const double base = copula_entropy(from_columns(cols), {3});
  const std::vector<std::vector<double>> permuted{cols[2], cols[0], cols[1]};
  EXPECT_EQ(copula_entropy(from_columns(permuted), {3}), base);
}

TEST(CopulaEntropy, RowShuffleEquivariance) {
  const auto x = fixtures::correlated_gaussian(2000, 0.5, 8);
  std::vector<std::size_t> perm(x.rows());
  std::iota(perm.begin(), perm.end(), std::size_t{0});
  std::shuffle(perm.begin(), perm.end(), std::mt19937_64(3));
  std::vector<std::vector<double>> cols(2, std::vector<double>(x.rows()));
  for (std::size_t r = 0; r < x.rows(); ++r) {
    cols[0][r] = x(perm[r], 0);
    cols[1][r] = x(perm[r], 1);
  }
  // Summation order changes, so equality is up to rounding.
  EXPECT_NEAR(copula_entropy(from_columns(cols), {3}), copula_entropy(x, {3}), 1e-12);
}

TEST(CopulaEntropy, ConstantColumnIsAllowedAndWarns) {
  QuietWarnings quiet;
  const std::vector<std::vector<double>> cols{fixtures::white_noise(500, 1),
                                              std::vector<double>(500, 2.5)};
  EXPECT_NO_THROW(copula_entropy(from_columns(cols), {3}));
  EXPECT_FALSE(quiet.seen.empty());
}
