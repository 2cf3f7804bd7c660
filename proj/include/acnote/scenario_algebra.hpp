#pragma once

/**
 * @file scenario_algebra.hpp
 * @brief Inclusion-exclusion expansion of auto-call survival events into
 *        signed intersections of "both assets above barrier" events, and the
 *        mapping of each intersection onto a Gaussian orthant problem.
 *
 * Observed prices X_{i,s} (asset i, date s) are addressed through the flat
 * index I = 2 (s - 1) + i. A scenario is a set of m barrier conditions
 * S (X^A) > S a where each row of the exponent matrix A picks a product
 * of observed prices.
 */

#include <array>
#include <cmath>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "acnote/errors.hpp"
#include "acnote/term_structures.hpp"

namespace acnote {

/// (asset, date) pair of an observed price, both 1-based.
struct MultiIndex {
  int asset = 1;
  int date = 1;

  int flat() const { return kNumAssets * (date - 1) + asset; }

  static MultiIndex from_flat(int flat) {
    if (flat < 1) throw DomainError("flat index must be >= 1");
    return {(flat - 1) % kNumAssets + 1, (flat - 1) / kNumAssets + 1};
  }
};

inline int flat_index(int asset, int date, int num_dates) {
  if (asset < 1 || asset > kNumAssets) throw DomainError("asset index out of range");
  if (date < 1 || date > num_dates) throw DomainError("date index out of range");
  return MultiIndex{asset, date}.flat();
}

/// All C(k, s) ascending s-tuples from {1..k} in lexicographic order.
/// s = 0 yields a single empty tuple.
inline std::vector<std::vector<int>> combinations(int k, int s) {
  if (s < 0 || s > k) throw DomainError("combinations requires 0 <= s <= k");
  std::vector<std::vector<int>> out;
  std::vector<int> cur(s);
  for (int j = 0; j < s; ++j) cur[j] = j + 1;
  while (true) {
    out.push_back(cur);
    int j = s - 1;
    while (j >= 0 && cur[j] == k - s + j + 1) --j;
    if (j < 0) break;
    ++cur[j];
    for (int t = j + 1; t < s; ++t) cur[t] = cur[t - 1] + 1;
  }
  return out;
}

/// Per-date barrier levels b_{i,date} in price units; element [date-1][asset-1].
using BarrierTable = std::vector<std::array<double, kNumAssets>>;

struct ScenarioMatrices {
  Eigen::MatrixXd exponents;  // A: m conditions x n observed prices
  Eigen::VectorXd barriers;   // a: positive barrier per condition
  Eigen::VectorXd signs;      // diagonal of S: +1 for '>', -1 for '<'

  Eigen::Index conditions() const { return exponents.rows(); }
  Eigen::Index prices() const { return exponents.cols(); }

  void validate() const {
    if (barriers.size() != conditions() || signs.size() != conditions())
      throw DomainError("scenario: barrier/sign vectors do not match the exponent matrix");
    for (Eigen::Index j = 0; j < conditions(); ++j) {
      if (!(barriers(j) > 0.0)) throw DomainError("scenario: barriers must be positive");
      if (signs(j) != 1.0 && signs(j) != -1.0) throw DomainError("scenario: signs must be +-1");
    }
  }
};

struct SignedScenario {
  int sign = 1;
  ScenarioMatrices scenario;
};

/// constant + sum_t sign_t * P(scenario_t)
struct SignedExpansion {
  double constant = 0.0;
  std::vector<SignedScenario> terms;
};

/// Upper bound on the number of observation dates entering one expansion.
struct ScenarioBudget {
  int max_dates = 12;
  bool override_limit = false;

  void check(int k) const {
    if (k > max_dates && !override_limit)
      throw ResourceError("expansion over " + std::to_string(k) +
                          " dates exceeds the scenario budget of " +
                          std::to_string(max_dates) + " (2^k terms)");
  }
};

/// Conditions "both assets above b_{i,sigma(j)}" for every date in sigma,
/// followed, when include_terminal, by "both above b_{i,k}" at date k. The
/// column space covers the 2k prices of dates 1..k.
inline ScenarioMatrices build_autocall_scenario(std::span<const int> sigma, int k,
                                                const BarrierTable& barriers,
                                                bool include_terminal) {
  if (k < 1) throw DomainError("scenario: k must be >= 1");
  if (static_cast<int>(barriers.size()) < k) throw DomainError("scenario: barrier table too short");
  for (std::size_t j = 0; j < sigma.size(); ++j) {
    if (j > 0 && !(sigma[j] > sigma[j - 1]))
      throw DomainError("scenario: combination must be strictly ascending");
    const int limit = include_terminal ? k - 1 : k;
    if (sigma[j] < 1 || sigma[j] > limit) throw DomainError("scenario: date outside 1..k");
  }
  const int s = static_cast<int>(sigma.size());
  const int m = kNumAssets * (s + (include_terminal ? 1 : 0));
  const int n = kNumAssets * k;
  ScenarioMatrices out;
  out.exponents = Eigen::MatrixXd::Zero(m, n);
  out.barriers.resize(m);
  out.signs = Eigen::VectorXd::Ones(m);
  auto add_date = [&](int row_block, int date) {
    for (int i = 1; i <= kNumAssets; ++i) {
      int row = MultiIndex{i, row_block}.flat() - 1;
      int col = MultiIndex{i, date}.flat() - 1;
      out.exponents(row, col) = 1.0;
      out.barriers(row) = barriers[date - 1][i - 1];
    }
  };
  for (int j = 0; j < s; ++j) add_date(j + 1, sigma[j]);
  if (include_terminal) add_date(s + 1, k);
  out.validate();
  return out;
}

/// Survival to the end of date k (no auto-call at 1..k):
/// 1 + sum_{s=1..k} sum_{sigma in C(k,s)} (-1)^s P(all sigma dates above).
inline SignedExpansion expand_survival(int k, const BarrierTable& barriers,
                                       const ScenarioBudget& budget = {}) {
  if (k < 1) throw DomainError("expand_survival requires k >= 1");
  budget.check(k);
  SignedExpansion out;
  out.constant = 1.0;
  for (int s = 1; s <= k; ++s) {
    const int sign = (s % 2 == 0) ? 1 : -1;
    for (const auto& sigma : combinations(k, s))
      out.terms.push_back({sign, build_autocall_scenario(sigma, k, barriers, false)});
  }
  return out;
}

/// First auto-call at date k: sum_{s=0..k-1} sum_{sigma in C(k-1,s)}
/// (-1)^s P(sigma dates above, and date k above its terminal barrier).
/// Row k of the table holds the terminal barrier, which lets the same
/// expansion serve P_up (barrier kappa * S_bar) and the coupon terms
/// (accrual barrier at an accrual time).
inline SignedExpansion expand_autocall(int k, const BarrierTable& barriers,
                                       const ScenarioBudget& budget = {}) {
  if (k < 1) throw DomainError("expand_autocall requires k >= 1");
  budget.check(k);
  SignedExpansion out;
  for (int s = 0; s <= k - 1; ++s) {
    const int sign = (s % 2 == 0) ? 1 : -1;
    for (const auto& sigma : combinations(k - 1, s))
      out.terms.push_back({sign, build_autocall_scenario(sigma, k, barriers, true)});
  }
  return out;
}

/// Orthant problem N_m(S d, S C S) equivalent to one scenario.
struct GaussianProblem {
  Eigen::VectorXd d;
  Eigen::MatrixXd C;
};

/// Builds (S d, S C S) for a scenario whose price columns refer to dates
/// observed at `times` (one time per date, so prices() == 2 * times.size()).
/// Uses the market spots as the current prices x_i.
inline GaussianProblem build_gaussian_problem(const ScenarioMatrices& scen,
                                              std::span<const double> times,
                                              const MarketData& market) {
  scen.validate();
  const Eigen::Index n = scen.prices();
  if (n != static_cast<Eigen::Index>(kNumAssets * times.size()))
    throw DomainError("gaussian problem: time list does not match price columns");

  // Only prices with a non-zero exponent enter; the rest are skipped.
  std::vector<Eigen::Index> used;
  for (Eigen::Index c = 0; c < n; ++c)
    if (scen.exponents.col(c).cwiseAbs().maxCoeff() > 0.0) used.push_back(c);
  const auto u = static_cast<Eigen::Index>(used.size());

  Eigen::VectorXd mu(u), sig(u), logx(u);
  std::vector<int> asset(u);
  std::vector<double> when(u);
  for (Eigen::Index a = 0; a < u; ++a) {
    MultiIndex mi = MultiIndex::from_flat(static_cast<int>(used[a]) + 1);
    const int i = mi.asset - 1;
    const double t = times[mi.date - 1];
    if (!(t > 0.0)) throw DomainError("gaussian problem: observation times must be positive");
    asset[a] = i;
    when[a] = t;
    double sbar = variance_average(market.vol[i], t);
    if (!(sbar > 0.0))
      throw DegenerateInputError("zero averaged volatility for asset " + std::to_string(i + 1));
    double rbar = curve_average(market.rate, t);
    double qbar = curve_average(market.dividend[i], t);
    mu(a) = (rbar - qbar - 0.5 * sbar * sbar) * t;
    sig(a) = sbar * std::sqrt(t);
    logx(a) = std::log(market.spot[i]);
  }
  Eigen::MatrixXd R(u, u);
  for (Eigen::Index a = 0; a < u; ++a) {
    R(a, a) = 1.0;
    for (Eigen::Index b = 0; b < a; ++b) {
      R(a, b) = R(b, a) = driver_correlation(market, asset[a], when[a], asset[b], when[b]);
    }
  }
  Eigen::MatrixXd gamma = sig.asDiagonal() * R * sig.asDiagonal();
  Eigen::MatrixXd A(scen.conditions(), u);
  for (Eigen::Index a = 0; a < u; ++a) A.col(a) = scen.exponents.col(used[a]);

  Eigen::MatrixXd agamma = A * gamma * A.transpose();
  Eigen::VectorXd D = agamma.diagonal().cwiseSqrt();
  for (Eigen::Index j = 0; j < D.size(); ++j) {
    if (!(D(j) > 0.0))
      throw DegenerateInputError("gaussian problem: condition " + std::to_string(j + 1) +
                                 " has zero variance");
  }
  Eigen::VectorXd Dinv = D.cwiseInverse();
  GaussianProblem out;
  out.C = Dinv.asDiagonal() * agamma * Dinv.asDiagonal();
  out.C = (out.C + out.C.transpose()) / 2.0;
  out.C.diagonal().setOnes();
  Eigen::VectorXd loga = scen.barriers.array().log();
  out.d = Dinv.asDiagonal() * (A * logx - loga + A * mu);
  // Apply S: d -> S d, C -> S C S.
  out.d = scen.signs.asDiagonal() * out.d;
  out.C = scen.signs.asDiagonal() * out.C * scen.signs.asDiagonal();
  return out;
}

}  // namespace acnote
