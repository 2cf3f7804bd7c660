#pragma once

/**
 * @file term_structures.hpp
 * @brief Piecewise-constant deterministic curves r(s), q_i(s), sigma_i(s) and
 *        the exact time integrals used by the Gaussian valuation formula.
 */

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "acnote/errors.hpp"

namespace acnote {

/// Number of underlyings. The flat multi-index map assumes exactly two.
inline constexpr int kNumAssets = 2;

/// Days per year under ACT/365 fixed; day index d sits at time d / 365.
inline constexpr double kDaysPerYear = 365.0;

/// Piecewise-constant curve on [0, inf).
///
/// Level values[j] holds on [breakpoints[j], breakpoints[j+1]); the last
/// level extends to infinity. All integrals are evaluated segment by
/// segment in closed form.
class PiecewiseCurve {
 public:
  PiecewiseCurve() : breakpoints_{0.0}, values_{0.0} {}

  PiecewiseCurve(std::vector<double> breakpoints, std::vector<double> values)
      : breakpoints_(std::move(breakpoints)), values_(std::move(values)) {
    if (breakpoints_.empty()) throw DomainError("curve needs at least one breakpoint");
    if (breakpoints_.size() != values_.size())
      throw DomainError("curve breakpoints and values differ in length");
    if (breakpoints_.front() != 0.0) throw DomainError("curve must start at t = 0");
    for (std::size_t j = 1; j < breakpoints_.size(); ++j) {
      if (!(breakpoints_[j] > breakpoints_[j - 1]))
        throw DomainError("curve breakpoints must be strictly increasing");
    }
    for (double v : values_) {
      if (!std::isfinite(v)) throw DomainError("curve levels must be finite");
    }
  }

  static PiecewiseCurve constant(double level) { return PiecewiseCurve({0.0}, {level}); }

  std::span<const double> breakpoints() const noexcept { return breakpoints_; }
  std::span<const double> values() const noexcept { return values_; }

  /// Level of the right-open interval containing t.
  double operator()(double t) const {
    if (t < 0.0) throw DomainError("curve evaluated at negative time");
    return values_[segment_of(t)];
  }

  /// Exact integral of the curve over [a, b], 0 <= a <= b.
  double integral(double a, double b) const {
    return accumulate(a, b, [](double v) { return v; });
  }

  /// Exact integral of the squared curve over [a, b].
  double square_integral(double a, double b) const {
    return accumulate(a, b, [](double v) { return v * v; });
  }

  double integral(double t) const { return integral(0.0, t); }

  double min_level() const { return *std::min_element(values_.begin(), values_.end()); }

 private:
  std::size_t segment_of(double t) const {
    auto it = std::upper_bound(breakpoints_.begin(), breakpoints_.end(), t);
    return static_cast<std::size_t>(it - breakpoints_.begin()) - 1;
  }

  template <typename F>
  double accumulate(double a, double b, F&& f) const {
    if (a < 0.0 || b < a) throw DomainError("invalid integration interval");
    double sum = 0.0;
    std::size_t j = segment_of(a);
    double lo = a;
    while (lo < b) {
      double hi = (j + 1 < breakpoints_.size()) ? std::min(b, breakpoints_[j + 1]) : b;
      sum += f(values_[j]) * (hi - lo);
      lo = hi;
      ++j;
    }
    return sum;
  }

  std::vector<double> breakpoints_;
  std::vector<double> values_;
};

/// Volatility curve: a piecewise-constant curve with non-negative levels.
class VolatilityCurve : public PiecewiseCurve {
 public:
  VolatilityCurve() = default;

  explicit VolatilityCurve(PiecewiseCurve curve) : PiecewiseCurve(std::move(curve)) {
    if (min_level() < 0.0) throw DomainError("volatility levels must be non-negative");
  }

  VolatilityCurve(std::vector<double> breakpoints, std::vector<double> values)
      : VolatilityCurve(PiecewiseCurve(std::move(breakpoints), std::move(values))) {}

  static VolatilityCurve constant(double level) { return VolatilityCurve({0.0}, {level}); }
};

/// (1/tau) * integral_0^tau curve(s) ds.
inline double curve_average(const PiecewiseCurve& curve, double tau) {
  if (!(tau > 0.0)) throw DomainError("curve_average requires tau > 0");
  return curve.integral(0.0, tau) / tau;
}

/// Root-mean-square volatility sqrt((1/tau) * integral_0^tau sigma(s)^2 ds).
inline double variance_average(const VolatilityCurve& vol, double tau) {
  if (!(tau > 0.0)) throw DomainError("variance_average requires tau > 0");
  return std::sqrt(vol.square_integral(0.0, tau) / tau);
}

/// integral_a^b sigma_i(s) sigma_j(s) ds over the merged breakpoint grid.
inline double cross_vol_integral(const VolatilityCurve& vol_i, const VolatilityCurve& vol_j,
                                 double a, double b) {
  if (a < 0.0 || b < a) throw DomainError("invalid integration interval");
  auto bi = vol_i.breakpoints();
  auto bj = vol_j.breakpoints();
  std::vector<double> grid;
  grid.reserve(bi.size() + bj.size() + 2);
  grid.push_back(a);
  for (double t : bi)
    if (t > a && t < b) grid.push_back(t);
  for (double t : bj)
    if (t > a && t < b) grid.push_back(t);
  grid.push_back(b);
  std::sort(grid.begin(), grid.end());
  grid.erase(std::unique(grid.begin(), grid.end()), grid.end());
  double sum = 0.0;
  for (std::size_t s = 1; s < grid.size(); ++s) {
    double lo = grid[s - 1];
    sum += vol_i(lo) * vol_j(lo) * (grid[s] - lo);
  }
  return sum;
}

inline double cross_vol_integral(const VolatilityCurve& vol_i, const VolatilityCurve& vol_j,
                                 double t_upper) {
  if (t_upper < 0.0) throw DomainError("cross_vol_integral requires t_upper >= 0");
  return cross_vol_integral(vol_i, vol_j, 0.0, t_upper);
}

/// Market state for the two underlyings under deterministic Black-Scholes
/// dynamics dS_i / S_i = (r - q_i) ds + sigma_i dW_i.
struct MarketData {
  PiecewiseCurve rate;
  std::array<PiecewiseCurve, kNumAssets> dividend;
  std::array<VolatilityCurve, kNumAssets> vol;
  std::array<std::array<double, kNumAssets>, kNumAssets> correlation{{{1.0, 0.0}, {0.0, 1.0}}};
  std::array<double, kNumAssets> spot{1.0, 1.0};

  void validate() const {
    for (int i = 0; i < kNumAssets; ++i) {
      if (!(spot[i] > 0.0) || !std::isfinite(spot[i]))
        throw DomainError("market.spots must be positive");
      if (correlation[i][i] != 1.0) throw DomainError("market.correlation needs unit diagonal");
    }
    if (correlation[0][1] != correlation[1][0])
      throw DomainError("market.correlation must be symmetric");
    if (!(std::abs(correlation[0][1]) <= 1.0))
      throw DomainError("market.correlation entries must lie in [-1, 1]");
  }

  double rho(int i, int j) const { return correlation[i][j]; }
};

/// Time averages of the market curves at each observation time.
struct AveragedParams {
  std::vector<double> r_bar;
  std::array<std::vector<double>, kNumAssets> q_bar;
  std::array<std::vector<double>, kNumAssets> sigma_bar;
};

inline AveragedParams averaged_params(const MarketData& market, std::span<const double> taus) {
  AveragedParams out;
  for (double tau : taus) {
    out.r_bar.push_back(curve_average(market.rate, tau));
    for (int i = 0; i < kNumAssets; ++i) {
      out.q_bar[i].push_back(curve_average(market.dividend[i], tau));
      out.sigma_bar[i].push_back(variance_average(market.vol[i], tau));
    }
  }
  return out;
}

/// Correlation of the standardized Gaussian drivers Z_{i,t} and Z_{j,u}:
/// rho_ij * integral_0^min(t,u) sigma_i sigma_j / (sqrt(t u) sigma_bar_i(t) sigma_bar_j(u)).
inline double driver_correlation(const MarketData& market, int i, double t, int j, double u) {
  double si = variance_average(market.vol[i], t);
  double sj = variance_average(market.vol[j], u);
  if (!(si > 0.0) || !(sj > 0.0))
    throw DegenerateInputError("zero averaged volatility for asset " +
                               std::to_string(si > 0.0 ? j + 1 : i + 1));
  if (i == j && t == u) return 1.0;
  double cross = cross_vol_integral(market.vol[i], market.vol[j], std::min(t, u));
  return market.rho(i, j) * cross / (std::sqrt(t * u) * si * sj);
}

/// R_{(i,k)(j,l)} for 1-based assets i, j and 1-based schedule dates k, l.
inline double correlation_entry(int i, int k, int j, int l, const MarketData& market,
                                std::span<const double> taus) {
  const int num_dates = static_cast<int>(taus.size());
  if (i < 1 || i > kNumAssets || j < 1 || j > kNumAssets)
    throw DomainError("asset index out of range");
  if (k < 1 || k > num_dates || l < 1 || l > num_dates)
    throw DomainError("date index out of range");
  return driver_correlation(market, i - 1, taus[k - 1], j - 1, taus[l - 1]);
}

}  // namespace acnote
