#pragma once

// Ground truth for validating the estimators: a bivariate Gaussian VAR(1) in which X
// drives Y, its exact stationary covariance, the analytic transfer entropy that follows
// from it, the least-squares Granger log variance ratio, and the Gaussian CE formula.
//
// Model:  Y[t+1] = a*Y[t] + b*X[t] + eps[t],   X[t+1] = c*X[t] + eta[t]
// with eps ~ N(0, sigma_eps^2), eta ~ N(0, sigma_eta^2).
//
// For Gaussian processes TE = GC / 2 with GC = ln(restricted / full residual variance).

#include <Eigen/Dense>

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <numbers>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "copte/causality.hpp"
#include "copte/core.hpp"

namespace copte {

// Standard normal variates from std::mt19937_64 (seeded with the given integer) through
// the Box-Muller transform. Both variates of a pair are used, cosine branch first.
class GaussianSource {
 public:
  explicit GaussianSource(std::uint64_t seed) : engine_(seed) {}

  // 53-bit uniform in [0, 1).
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

  double normal() {
    if (has_spare_) {
      has_spare_ = false;
      return spare_;
    }
    const double u1 = 1.0 - uniform();  // (0, 1]
    const double u2 = uniform();
    const double radius = std::sqrt(-2.0 * std::log(u1));
    const double angle = 2.0 * std::numbers::pi * u2;
    spare_ = radius * std::sin(angle);
    has_spare_ = true;
    return radius * std::cos(angle);
  }

 private:
  std::mt19937_64 engine_;
  double spare_ = 0.0;
  bool has_spare_ = false;
};

struct Var2Spec {
  double a = 0.5;  // Y on Y
  double b = 0.5;  // X on Y
  double c = 0.5;  // X on X
  double sigma_eps = 1.0;
  double sigma_eta = 1.0;
  std::uint64_t seed = 0;

  Eigen::Matrix2d transition() const {
    Eigen::Matrix2d m;
    m << a, b, 0.0, c;
    return m;
  }

  // Triangular transition: the eigenvalues are a and c.
  double spectral_radius() const { return std::max(std::abs(a), std::abs(c)); }

  void check() const {
    if (!std::isfinite(a) || !std::isfinite(b) || !std::isfinite(c)) {
      throw Error(ErrorCode::NonStationarySpec, "VAR coefficients must be finite");
    }
    if (!(spectral_radius() < 1.0)) {
      throw Error(ErrorCode::NonStationarySpec,
                  "spectral radius " + std::to_string(spectral_radius()) +
                      " >= 1; the process is not stationary");
    }
    if (!(sigma_eps > 0.0) || !(sigma_eta > 0.0) || !std::isfinite(sigma_eps) ||
        !std::isfinite(sigma_eta)) {
      throw Error(ErrorCode::InvalidArgument, "innovation standard deviations must be > 0");
    }
  }
};

struct Var2Sample {
  std::vector<double> x;
  std::vector<double> y;
};

// Starts from (0, 0), discards burn_in steps, then records n steps. Each step draws the
// Y innovation before the X innovation.
inline Var2Sample simulate_var2(const Var2Spec& spec, std::size_t n, std::size_t burn_in = 1000) {
  spec.check();
  if (n < 1) throw Error(ErrorCode::InvalidArgument, "n must be >= 1");
  GaussianSource rng(spec.seed);
  Var2Sample out;
  out.x.reserve(n);
  out.y.reserve(n);
  double y = 0.0;
  double x = 0.0;
  for (std::size_t t = 0; t < burn_in + n; ++t) {
    const double eps = spec.sigma_eps * rng.normal();
    const double eta = spec.sigma_eta * rng.normal();
    const double y_next = spec.a * y + spec.b * x + eps;
    x = spec.c * x + eta;
    y = y_next;
    if (t >= burn_in) {
      out.y.push_back(y);
      out.x.push_back(x);
    }
  }
  return out;
}

// Stationary covariance of the state s = (Y, X) and its autocovariances
// Cov(s[t+h], s[t]) = A^h * Sigma.
struct StationaryCov {
  Eigen::Matrix2d sigma;       // Var of (Y, X)
  Eigen::Matrix2d transition;  // A
  Eigen::Matrix2d noise;       // Q = diag(sigma_eps^2, sigma_eta^2)

  Eigen::Matrix2d lag1() const { return transition * sigma; }

  Eigen::Matrix2d autocov(int h) const {
    Eigen::Matrix2d g = sigma;
    for (int i = 0; i < std::abs(h); ++i) g = transition * g;
    return h >= 0 ? g : Eigen::Matrix2d(g.transpose());
  }

  // ||Sigma - A Sigma A^T - Q||_max
  double lyapunov_residual() const {
    return (sigma - transition * sigma * transition.transpose() - noise).cwiseAbs().maxCoeff();
  }
};

// Solves Sigma = A Sigma A^T + Q for the three unknowns (Syy, Syx, Sxx).
inline StationaryCov stationary_covariance(const Var2Spec& spec) {
  spec.check();
  const double a = spec.a, b = spec.b, c = spec.c;
  const double q_y = spec.sigma_eps * spec.sigma_eps;
  const double q_x = spec.sigma_eta * spec.sigma_eta;

  // Syy = a^2 Syy + 2ab Syx + b^2 Sxx + q_y
  // Syx = ac Syx + bc Sxx
  // Sxx = c^2 Sxx + q_x
  Eigen::Matrix3d lhs;
  lhs << 1.0 - a * a, -2.0 * a * b, -b * b,
         0.0, 1.0 - a * c, -b * c,
         0.0, 0.0, 1.0 - c * c;
  const Eigen::Vector3d rhs(q_y, 0.0, q_x);
  const Eigen::Vector3d s = lhs.fullPivLu().solve(rhs);

  StationaryCov out;
  out.sigma << s(0), s(1), s(1), s(2);
  out.transition = spec.transition();
  out.noise << q_y, 0.0, 0.0, q_x;
  return out;
}

namespace detail {

// Var(target | given) = S_tt - S_tg S_gg^{-1} S_gt.
inline double conditional_variance(const Eigen::MatrixXd& cov, int target,
                                   const std::vector<int>& given) {
  const auto g = static_cast<Eigen::Index>(given.size());
  Eigen::MatrixXd s_gg(g, g);
  Eigen::VectorXd s_gt(g);
  for (Eigen::Index i = 0; i < g; ++i) {
    s_gt(i) = cov(given[i], target);
    for (Eigen::Index j = 0; j < g; ++j) s_gg(i, j) = cov(given[i], given[j]);
  }
  return cov(target, target) - s_gt.dot(s_gg.ldlt().solve(s_gt));
}

}  // namespace detail

// ln of the ratio Var(Y[t+lag] | Y past block) / Var(Y[t+lag] | Y past block, X[t]),
// from the exact joint Gaussian covariance.
inline double analytic_var_gc(const Var2Spec& spec, int lag, int order_m) {
  const EmbeddingSpec emb{lag, order_m};
  emb.check();
  const StationaryCov sc = stationary_covariance(spec);
  if (spec.b == 0.0) return 0.0;

  // Variables: 0 = Y[t+lag], 1..m = Y[t], ..., Y[t-m+1], m+1 = X[t].
  struct Var {
    int time;
    int comp;  // 0 = Y, 1 = X
  };
  std::vector<Var> vars;
  vars.push_back({lag, 0});
  for (int j = 0; j < order_m; ++j) vars.push_back({-j, 0});
  vars.push_back({0, 1});

  const auto n = static_cast<Eigen::Index>(vars.size());
  Eigen::MatrixXd cov(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < n; ++j) {
      cov(i, j) = sc.autocov(vars[i].time - vars[j].time)(vars[i].comp, vars[j].comp);
    }
  }

  std::vector<int> past;
  for (int j = 1; j <= order_m; ++j) past.push_back(j);
  std::vector<int> full = past;
  full.push_back(order_m + 1);

  const double restricted = detail::conditional_variance(cov, 0, past);
  const double unrestricted = detail::conditional_variance(cov, 0, full);
  return std::log(restricted / unrestricted);
}

inline double analytic_var_te(const Var2Spec& spec, int lag, int order_m) {
  return 0.5 * analytic_var_gc(spec, lag, order_m);
}

namespace detail {

// Residual sum of squares of an OLS fit with intercept.
inline double ols_rss(const Eigen::MatrixXd& regressors, const Eigen::VectorXd& target) {
  Eigen::MatrixXd design(regressors.rows(), regressors.cols() + 1);
  design.col(0).setOnes();
  design.rightCols(regressors.cols()) = regressors;
  // Pivots below 1e-10 of the largest count as zero; exact collinearity leaves only
  // rounding-level pivots that the default threshold can miss.
  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(design.rows(), design.cols());
  qr.setThreshold(1e-10);
  qr.compute(design);
  if (qr.rank() < design.cols()) {
    throw Error(ErrorCode::SingularDesign,
                "regressors are collinear (rank " + std::to_string(qr.rank()) + " of " +
                    std::to_string(design.cols()) + ")");
  }
  const Eigen::VectorXd beta = qr.solve(target);
  return (target - design * beta).squaredNorm();
}

}  // namespace detail

// ln(RSS_restricted / RSS_full) for predicting y_fut from y_past, without and with x_cause.
inline double granger_variance_ratio(std::span<const double> x, std::span<const double> y,
                                     const EmbeddingSpec& spec) {
  const JointEmbedding e = build_embedding(x, y, spec);
  const auto n = static_cast<Eigen::Index>(e.rows());
  const Eigen::Index m = spec.order_m;
  if (n <= m + 2) {
    throw Error(ErrorCode::TooFewSamples, "too few rows for a least-squares fit");
  }

  Eigen::VectorXd target(n);
  Eigen::MatrixXd past(n, m);
  Eigen::MatrixXd full(n, m + 1);
  for (Eigen::Index r = 0; r < n; ++r) {
    target(r) = e.y_fut[r];
    for (Eigen::Index j = 0; j < m; ++j) {
      past(r, j) = e.past(r, j);
      full(r, j) = e.past(r, j);
    }
    full(r, m) = e.x_cause[r];
  }

  const double centered_ss = (target.array() - target.mean()).matrix().squaredNorm();
  const double rss_restricted = detail::ols_rss(past, target);
  const double rss_full = detail::ols_rss(full, target);
  const double floor = 1e-12 * std::max(centered_ss, std::numeric_limits<double>::min());
  if (!(rss_restricted > floor) || !(rss_full > floor)) {
    throw Error(ErrorCode::DegenerateResidual,
                "residual variance is numerically zero; the effect is perfectly predicted");
  }
  return std::log(rss_restricted / rss_full);
}

// Copula entropy of a bivariate Gaussian with correlation rho.
inline double gaussian_ce(double rho) {
  if (!(std::abs(rho) < 1.0)) {
    throw Error(ErrorCode::RhoOutOfRange, "|rho| must be < 1, got " + std::to_string(rho));
  }
  return 0.5 * std::log1p(-rho * rho);
}

}  // namespace copte
