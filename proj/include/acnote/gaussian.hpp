#pragma once

/**
 * @file gaussian.hpp
 * @brief Zero-centred multivariate normal CDF N_m(d, C) with absolute error
 *        control.
 *
 * m = 1 uses erfc, m = 2 the Drezner-Wesolowsky / Genz Gauss-Legendre
 * scheme, m >= 3 a randomly shifted Richtmyer lattice applied to the
 * Genz separation-of-variables integrand with dynamic variable reordering.
 */

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numbers>
#include <random>
#include <vector>

#include <Eigen/Dense>
#include <boost/math/special_functions/erf.hpp>

#include "acnote/errors.hpp"

namespace acnote {

inline constexpr int kMaxMvnDimension = 24;

/// Absolute-error bounds reported for the deterministic kernels.
inline constexpr double kUnivariateErrorBound = 1e-15;
inline constexpr double kBivariateErrorBound = 1e-14;

/// Eigenvalues down to this value count as round-off and are clipped.
inline constexpr double kPsdTolerance = 1e-10;

// ---------------------------------------------------------------------------
// Univariate

inline double normal_cdf(double x) { return 0.5 * std::erfc(-x * std::numbers::sqrt2 * 0.5); }

inline double normal_pdf(double x) {
  return std::exp(-0.5 * x * x) * (0.5 * std::numbers::inv_sqrtpi * std::numbers::sqrt2);
}

inline double normal_quantile(double p) {
  using NoPromote = boost::math::policies::policy<boost::math::policies::promote_double<false>>;
  if (p <= 0.0) return -std::numeric_limits<double>::infinity();
  if (p >= 1.0) return std::numeric_limits<double>::infinity();
  return -std::numbers::sqrt2 * boost::math::erfc_inv(2.0 * p, NoPromote());
}

/// 64-bit mixing function used to derive independent seeds.
inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

// ---------------------------------------------------------------------------
// Gauss-Legendre rules

struct GaussLegendreRule {
  std::vector<double> nodes;    // on [-1, 1]
  std::vector<double> weights;
};

/// n-point Gauss-Legendre rule by Newton iteration on P_n.
inline GaussLegendreRule gauss_legendre(int n) {
  GaussLegendreRule rule;
  rule.nodes.resize(n);
  rule.weights.resize(n);
  for (int i = 0; i < (n + 1) / 2; ++i) {
    double x = std::cos(std::numbers::pi * (i + 0.75) / (n + 0.5));
    double dp = 0.0;
    for (int iter = 0; iter < 100; ++iter) {
      double p0 = 1.0, p1 = x;
      for (int k = 2; k <= n; ++k) {
        double p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = p2;
      }
      double pn = (n == 1) ? x : p1;
      double pnm1 = (n == 1) ? 1.0 : p0;
      dp = n * (x * pn - pnm1) / (x * x - 1.0);
      double dx = pn / dp;
      x -= dx;
      if (std::abs(dx) < 1e-16) break;
    }
    double w = 2.0 / ((1.0 - x * x) * dp * dp);
    rule.nodes[i] = -x;
    rule.nodes[n - 1 - i] = x;
    rule.weights[i] = w;
    rule.weights[n - 1 - i] = w;
  }
  return rule;
}

namespace detail {

inline const GaussLegendreRule& bvn_rule(int which) {
  static const std::array<GaussLegendreRule, 3> rules{gauss_legendre(6), gauss_legendre(12),
                                                      gauss_legendre(20)};
  return rules[which];
}

/// P(X > h, Y > k) for standard bivariate normal with correlation r.
inline double bvn_upper(double h, double k, double r) {
  constexpr double two_pi = 2.0 * std::numbers::pi;
  const double abs_r = std::abs(r);
  const GaussLegendreRule& rule = bvn_rule(abs_r < 0.3 ? 0 : (abs_r < 0.75 ? 1 : 2));
  double hk = h * k;
  double bvn = 0.0;
  if (abs_r < 0.925) {
    double hs = (h * h + k * k) / 2.0;
    double asr = std::asin(r);
    for (std::size_t i = 0; i < rule.nodes.size(); ++i) {
      double sn = std::sin(asr * (rule.nodes[i] + 1.0) / 2.0);
      bvn += rule.weights[i] * std::exp((sn * hk - hs) / (1.0 - sn * sn));
    }
    return bvn * asr / (2.0 * two_pi) + normal_cdf(-h) * normal_cdf(-k);
  }
  if (r < 0.0) {
    k = -k;
    hk = -hk;
  }
  if (abs_r < 1.0) {
    double as = (1.0 - r) * (1.0 + r);
    double a = std::sqrt(as);
    double bs = (h - k) * (h - k);
    double c = (4.0 - hk) / 8.0;
    double d = (12.0 - hk) / 16.0;
    bvn = a * std::exp(-(bs / as + hk) / 2.0) *
          (1.0 - c * (bs - as) * (1.0 - d * bs / 5.0) / 3.0 + c * d * as * as / 5.0);
    if (hk > -160.0) {
      double b = std::sqrt(bs);
      bvn -= std::exp(-hk / 2.0) * std::sqrt(two_pi) * normal_cdf(-b / a) * b *
             (1.0 - c * bs * (1.0 - d * bs / 5.0) / 3.0);
    }
    a /= 2.0;
    for (std::size_t i = 0; i < rule.nodes.size(); ++i) {
      double xs = as * (rule.nodes[i] + 1.0) * (rule.nodes[i] + 1.0) / 4.0;
      double rs = std::sqrt(1.0 - xs);
      bvn += a * rule.weights[i] * std::exp(-(bs / xs + hk) / 2.0) *
             (std::exp(-hk * xs / (2.0 * (1.0 + rs) * (1.0 + rs))) / rs -
              (1.0 + c * xs * (1.0 + d * xs)));
    }
    bvn = -bvn / two_pi;
  }
  if (r > 0.0) return bvn + normal_cdf(-std::max(h, k));
  bvn = -bvn;
  if (k > h) {
    if (h < 0.0)
      bvn += normal_cdf(k) - normal_cdf(h);
    else
      bvn += normal_cdf(-h) - normal_cdf(-k);
  }
  return bvn;
}

}  // namespace detail

/// P(X < h, Y < k), standard bivariate normal with correlation rho.
inline double bivariate_normal_cdf(double h, double k, double rho) {
  if (std::isinf(h) || std::isinf(k)) {
    if (h == -INFINITY || k == -INFINITY) return 0.0;
    if (h == INFINITY && k == INFINITY) return 1.0;
    return normal_cdf(h == INFINITY ? k : h);
  }
  double p = detail::bvn_upper(-h, -k, rho);
  return std::clamp(p, 0.0, 1.0);
}

// ---------------------------------------------------------------------------
// Multivariate

struct MvnQuery {
  Eigen::VectorXd d;   // upper limits
  Eigen::MatrixXd C;   // correlation matrix
  double tol = 1e-6;   // absolute error target
  std::uint64_t seed = 0;
  std::int64_t max_evaluations = 50'000'000;
};

struct MvnResult {
  double value = 0.0;
  double err_est = 0.0;
};

/// Clips round-off negative eigenvalues of a correlation matrix and
/// restores its unit diagonal. Throws if the matrix is genuinely indefinite.
inline Eigen::MatrixXd repair_correlation(const Eigen::MatrixXd& C) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(C);
  double min_ev = eig.eigenvalues().minCoeff();
  if (min_ev < -kPsdTolerance)
    throw DomainError("correlation matrix is not positive semi-definite (min eigenvalue " +
                      std::to_string(min_ev) + ")");
  if (min_ev >= 0.0) return C;
  Eigen::VectorXd ev = eig.eigenvalues().cwiseMax(0.0);
  Eigen::MatrixXd out = eig.eigenvectors() * ev.asDiagonal() * eig.eigenvectors().transpose();
  Eigen::VectorXd s = out.diagonal().cwiseSqrt().cwiseInverse();
  out = s.asDiagonal() * out * s.asDiagonal();
  out.diagonal().setOnes();
  return out;
}

namespace detail {

/// Cholesky factor of C with Genz-Bretz variable reordering: at each step the
/// remaining variable with the smallest conditional probability goes first.
struct OrderedCholesky {
  Eigen::MatrixXd L;
  Eigen::VectorXd limits;
};

inline OrderedCholesky ordered_cholesky(Eigen::VectorXd d, Eigen::MatrixXd C) {
  const Eigen::Index m = d.size();
  Eigen::MatrixXd L = Eigen::MatrixXd::Zero(m, m);
  Eigen::VectorXd y = Eigen::VectorXd::Zero(m);
  constexpr double eps = 1e-12;
  for (Eigen::Index i = 0; i < m; ++i) {
    Eigen::Index best = i;
    double best_p = 2.0;
    for (Eigen::Index j = i; j < m; ++j) {
      double var = C(j, j) - L.row(j).head(i).squaredNorm();
      double sd = std::sqrt(std::max(var, 0.0));
      double shift = L.row(j).head(i).dot(y.head(i));
      double p = sd > eps ? normal_cdf((d(j) - shift) / sd) : (d(j) - shift > 0.0 ? 1.0 : 0.0);
      if (p < best_p) {
        best_p = p;
        best = j;
      }
    }
    if (best != i) {
      std::swap(d(i), d(best));
      C.row(i).swap(C.row(best));
      C.col(i).swap(C.col(best));
      L.row(i).head(i).swap(L.row(best).head(i));
    }
    double var = C(i, i) - L.row(i).head(i).squaredNorm();
    double lii = var > eps * eps ? std::sqrt(var) : 0.0;
    L(i, i) = lii;
    for (Eigen::Index j = i + 1; j < m; ++j) {
      L(j, i) = lii > 0.0 ? (C(j, i) - L.row(j).head(i).dot(L.row(i).head(i))) / lii : 0.0;
    }
    double shift = L.row(i).head(i).dot(y.head(i));
    if (lii > 0.0) {
      double u = (d(i) - shift) / lii;
      double pu = normal_cdf(u);
      y(i) = pu > 1e-300 ? -normal_pdf(u) / pu : u;
    } else {
      y(i) = 0.0;
    }
  }
  return {std::move(L), std::move(d)};
}

inline constexpr std::array<int, kMaxMvnDimension> kPrimes{
    2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37, 41, 43, 47, 53, 59, 61, 67, 71, 73, 79, 83, 89};

/// Genz integrand for one point w in [0,1]^(m-1).
inline double genz_integrand(const OrderedCholesky& f, const double* w, double* y) {
  const Eigen::Index m = f.limits.size();
  double prod = 1.0;
  for (Eigen::Index i = 0; i < m; ++i) {
    double shift = 0.0;
    for (Eigen::Index k = 0; k < i; ++k) shift += f.L(i, k) * y[k];
    double lii = f.L(i, i);
    double e;
    if (lii > 0.0) {
      e = normal_cdf((f.limits(i) - shift) / lii);
    } else {
      e = (f.limits(i) - shift > 0.0) ? 1.0 : 0.0;
    }
    prod *= e;
    if (prod == 0.0) return 0.0;
    if (i + 1 < m) {
      if (lii > 0.0) {
        double p = std::clamp(w[i] * e, 1e-300, 1.0 - 1e-16);
        y[i] = normal_quantile(p);
      } else {
        y[i] = 0.0;
      }
    }
  }
  return prod;
}

inline MvnResult qmc_mvn(const Eigen::VectorXd& d, const Eigen::MatrixXd& C, double tol,
                         std::uint64_t seed, std::int64_t max_evaluations) {
  constexpr int kShifts = 8;
  constexpr double kErrorMultiplier = 3.0;
  constexpr std::int64_t kInitialPoints = 256;

  OrderedCholesky f = ordered_cholesky(d, C);
  const Eigen::Index m = d.size();
  const Eigen::Index dim = m - 1;
  std::vector<double> gen(dim);
  for (Eigen::Index j = 0; j < dim; ++j) {
    double s = std::sqrt(static_cast<double>(kPrimes[j]));
    gen[j] = s - std::floor(s);
  }
  std::mt19937_64 rng(splitmix64(seed));
  std::uniform_real_distribution<double> unif(0.0, 1.0);

  std::vector<double> x(dim), w(dim), y(m);
  double weighted_sum = 0.0, weight_total = 0.0;
  double value = 0.0, err = std::numeric_limits<double>::infinity();
  std::int64_t used = 0;
  std::int64_t n = kInitialPoints;
  while (true) {
    double mean = 0.0, m2 = 0.0;
    for (int s = 0; s < kShifts; ++s) {
      for (Eigen::Index j = 0; j < dim; ++j) x[j] = unif(rng);
      double sum = 0.0;
      for (std::int64_t p = 0; p < n; ++p) {
        for (Eigen::Index j = 0; j < dim; ++j) {
          x[j] += gen[j];
          if (x[j] >= 1.0) x[j] -= 1.0;
          w[j] = std::abs(2.0 * x[j] - 1.0);  // baker's transform
        }
        sum += genz_integrand(f, w.data(), y.data());
      }
      double est = sum / static_cast<double>(n);
      double delta = est - mean;
      mean += delta / (s + 1);
      m2 += delta * (est - mean);
    }
    used += n * kShifts;
    double var_of_mean = m2 / (kShifts - 1) / kShifts;
    // Inverse-variance combination across refinement rounds.
    double wgt = var_of_mean > 0.0 ? 1.0 / var_of_mean : 1e300;
    weighted_sum += wgt * mean;
    weight_total += wgt;
    value = weighted_sum / weight_total;
    err = kErrorMultiplier * std::sqrt(1.0 / weight_total);
    if (var_of_mean == 0.0) err = 0.0;
    if (err <= tol) break;
    if (used + 2 * n * kShifts > max_evaluations) {
      throw ConvergenceError("mvn_cdf: tolerance not reached within evaluation budget",
                             std::clamp(value, 0.0, 1.0), err);
    }
    n *= 2;
  }
  return {std::clamp(value, 0.0, 1.0), err};
}

}  // namespace detail

/// N_m(d, C): probability that Z ~ N(0, C) lies componentwise below d.
inline MvnResult mvn_cdf(const MvnQuery& q) {
  const Eigen::Index m = q.d.size();
  if (m < 1 || m > kMaxMvnDimension) throw DomainError("mvn_cdf: dimension out of range");
  if (q.C.rows() != m || q.C.cols() != m) throw DomainError("mvn_cdf: C has wrong shape");
  if (!(q.tol > 0.0)) throw DomainError("mvn_cdf: tol must be positive");
  for (Eigen::Index i = 0; i < m; ++i) {
    if (std::isnan(q.d(i))) throw DomainError("mvn_cdf: NaN limit");
    if (std::abs(q.C(i, i) - 1.0) > 1e-12) throw DomainError("mvn_cdf: C needs unit diagonal");
    for (Eigen::Index j = 0; j < i; ++j) {
      if (std::abs(q.C(i, j) - q.C(j, i)) > 1e-12) throw DomainError("mvn_cdf: C not symmetric");
    }
  }
  std::vector<Eigen::Index> keep;
  for (Eigen::Index i = 0; i < m; ++i) {
    if (q.d(i) == -std::numeric_limits<double>::infinity()) return {0.0, 0.0};
    if (q.d(i) != std::numeric_limits<double>::infinity()) keep.push_back(i);
  }
  const auto k = static_cast<Eigen::Index>(keep.size());
  if (k == 0) return {1.0, 0.0};
  Eigen::VectorXd d(k);
  Eigen::MatrixXd C(k, k);
  for (Eigen::Index a = 0; a < k; ++a) {
    d(a) = q.d(keep[a]);
    for (Eigen::Index b = 0; b < k; ++b) C(a, b) = q.C(keep[a], keep[b]);
  }
  C = repair_correlation(C);
  if (k == 1) return {normal_cdf(d(0)), kUnivariateErrorBound};
  if (k == 2) return {bivariate_normal_cdf(d(0), d(1), std::clamp(C(0, 1), -1.0, 1.0)),
                      kBivariateErrorBound};
  return detail::qmc_mvn(d, C, q.tol, q.seed, q.max_evaluations);
}

}  // namespace acnote
