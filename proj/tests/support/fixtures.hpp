#pragma once

// Shared instruments, markets and independent oracles for the test suites.

#include <array>
#include <cmath>
#include <cstdint>
#include <random>
#include <vector>

#include <Eigen/Dense>

#include "acnote/instrument.hpp"
#include "acnote/scenario_algebra.hpp"
#include "acnote/term_structures.hpp"

namespace acnote::fx {

inline MarketData flat_market(double r, std::array<double, 2> q, std::array<double, 2> sigma,
                              double rho, std::array<double, 2> spot = {100.0, 100.0}) {
  MarketData m;
  m.rate = PiecewiseCurve::constant(r);
  for (int i = 0; i < 2; ++i) {
    m.dividend[i] = PiecewiseCurve::constant(q[i]);
    m.vol[i] = VolatilityCurve::constant(sigma[i]);
  }
  m.correlation = {{{1.0, rho}, {rho, 1.0}}};
  m.spot = spot;
  return m;
}

/// Two-asset, two-date note with the market of the benchmark example.
inline MarketData table1_market() { return flat_market(0.01, {0.005, 0.007}, {0.25, 0.20}, 0.78); }

inline Instrument table1_instrument() {
  Instrument inst;
  inst.observation_times = {1.0, 2.0};
  inst.autocall_barriers = {{100.0, 100.0}};
  inst.accrual_barriers = {100.0, 100.0};
  inst.final_barrier_frac = 0.6;
  inst.daily_coupon = 0.15 / 365.0;
  inst.issue_spots = {100.0, 100.0};
  inst.redemption = RedemptionMode::kappa_floor;
  return inst;
}

/// Random piecewise curve with up to three segments on [0, 3).
inline PiecewiseCurve random_curve(std::mt19937_64& rng, double lo, double hi) {
  std::uniform_real_distribution<double> level(lo, hi);
  std::uniform_int_distribution<int> segs(1, 3);
  int n = segs(rng);
  std::vector<double> t{0.0}, v{level(rng)};
  for (int j = 1; j < n; ++j) {
    t.push_back(t.back() + std::uniform_real_distribution<double>(0.2, 1.0)(rng));
    v.push_back(level(rng));
  }
  return PiecewiseCurve(t, v);
}

inline MarketData random_market(std::mt19937_64& rng) {
  MarketData m;
  m.rate = random_curve(rng, 0.0, 0.04);
  for (int i = 0; i < 2; ++i) {
    m.dividend[i] = random_curve(rng, 0.0, 0.03);
    m.vol[i] = VolatilityCurve(random_curve(rng, 0.1, 0.4));
  }
  double rho = std::uniform_real_distribution<double>(-0.8, 0.9)(rng);
  m.correlation = {{{1.0, rho}, {rho, 1.0}}};
  m.spot = {std::uniform_real_distribution<double>(85.0, 115.0)(rng),
            std::uniform_real_distribution<double>(85.0, 115.0)(rng)};
  return m;
}

/// Random auto-callable with 2 <= M <= max_dates half-yearly or yearly dates.
inline Instrument random_instrument(std::mt19937_64& rng, int max_dates) {
  std::uniform_int_distribution<int> pick_m(2, max_dates);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  Instrument inst;
  const int M = pick_m(rng);
  double step = u(rng) < 0.5 ? 0.5 : 1.0;
  for (int k = 1; k <= M; ++k) inst.observation_times.push_back(step * k);
  for (int k = 1; k < M; ++k)
    inst.autocall_barriers.push_back({90.0 + 20.0 * u(rng), 90.0 + 20.0 * u(rng)});
  inst.accrual_barriers = {70.0 + 30.0 * u(rng), 70.0 + 30.0 * u(rng)};
  inst.final_barrier_frac = 0.5 + 0.4 * u(rng);
  inst.daily_coupon = 0.1 * u(rng) / 365.0;
  inst.issue_spots = {100.0, 100.0};
  inst.redemption = u(rng) < 0.5 ? RedemptionMode::worst_of : RedemptionMode::kappa_floor;
  return inst;
}

/// Black-Scholes d2 for a single price S_t > a under flat parameters.
inline double bs_d2(double x, double a, double r, double q, double sigma, double t) {
  return (std::log(x / a) + (r - q - 0.5 * sigma * sigma) * t) / (sigma * std::sqrt(t));
}

/// Exhaustive two-point outcome model. Every observed price takes one of two
/// levels per (asset, date) with an arbitrary joint distribution over the
/// 2^(2k) outcomes; probabilities of scenarios are computed by enumeration.
struct TwoPointModel {
  int dates = 0;
  std::vector<std::array<double, 2>> low, high;  // [date][asset]
  std::vector<double> weight;                    // one per outcome bit pattern

  int prices() const { return 2 * dates; }

  /// log price of flat column c under outcome bits.
  double log_price(std::uint32_t bits, int c) const {
    int date = c / 2, asset = c % 2;
    return std::log(((bits >> c) & 1u) ? high[date][asset] : low[date][asset]);
  }

  bool holds(const ScenarioMatrices& s, std::uint32_t bits) const {
    for (Eigen::Index j = 0; j < s.conditions(); ++j) {
      double lhs = 0.0;
      for (Eigen::Index c = 0; c < s.prices(); ++c)
        if (s.exponents(j, c) != 0.0) lhs += s.exponents(j, c) * log_price(bits, static_cast<int>(c));
      double diff = lhs - std::log(s.barriers(j));
      if (!(s.signs(j) * diff > 0.0)) return false;
    }
    return true;
  }

  double probability(const ScenarioMatrices& s) const {
    double p = 0.0;
    for (std::uint32_t bits = 0; bits < weight.size(); ++bits)
      if (holds(s, bits)) p += weight[bits];
    return p;
  }

  template <typename Pred>
  double probability_if(Pred&& pred) const {
    double p = 0.0;
    for (std::uint32_t bits = 0; bits < weight.size(); ++bits)
      if (pred(bits)) p += weight[bits];
    return p;
  }

  /// True when both assets sit above the table row for `date` (1-based).
  bool above(std::uint32_t bits, int date, const std::array<double, 2>& row) const {
    for (int i = 0; i < 2; ++i) {
      double lp = log_price(bits, 2 * (date - 1) + i);
      if (!(lp > std::log(row[i]))) return false;
    }
    return true;
  }
};

/// Levels straddle 100 so barriers drawn in (90, 110) produce mixed outcomes.
inline TwoPointModel random_two_point_model(std::mt19937_64& rng, int dates) {
  TwoPointModel m;
  m.dates = dates;
  std::uniform_real_distribution<double> lo(70.0, 99.0), hi(101.0, 130.0), w(0.0, 1.0);
  for (int k = 0; k < dates; ++k) {
    m.low.push_back({lo(rng), lo(rng)});
    m.high.push_back({hi(rng), hi(rng)});
  }
  m.weight.resize(std::size_t{1} << m.prices());
  double total = 0.0;
  for (auto& x : m.weight) total += (x = w(rng));
  for (auto& x : m.weight) x /= total;
  return m;
}

inline double evaluate_by_enumeration(const SignedExpansion& ex, const TwoPointModel& model) {
  double v = ex.constant;
  for (const auto& t : ex.terms) v += t.sign * model.probability(t.scenario);
  return v;
}

}  // namespace acnote::fx
