#include <gtest/gtest.h>

#include "acnote/mc_pricer.hpp"
#include "acnote/sa_pricer.hpp"
#include "fixtures.hpp"

using namespace acnote;

namespace {

McConfig small(std::uint64_t seed, std::int64_t paths = 20'000) {
  McConfig c;
  c.n_paths = paths;
  c.seed = seed;
  c.workers = 1;
  return c;
}

}  // namespace

TEST(MonteCarlo, DeterministicForSeedAndWorkerCount) {
  Instrument inst = fx::table1_instrument();
  MarketData m = fx::table1_market();
  McEstimate a = simulate_price(inst, m, small(5));
  McEstimate b = simulate_price(inst, m, small(5));
  McConfig threaded = small(5);
  threaded.workers = 3;
  McEstimate c = simulate_price(inst, m, threaded);
  EXPECT_EQ(a.value, b.value);
  EXPECT_EQ(a.std_error, b.std_error);
  EXPECT_EQ(a.value, c.value);
  EXPECT_EQ(a.std_error, c.std_error);
  EXPECT_NE(a.value, simulate_price(inst, m, small(6)).value);
}

TEST(MonteCarlo, LegsSumToValue) {
  McEstimate e = simulate_price(fx::table1_instrument(), fx::table1_market(), small(1));
  EXPECT_NEAR(e.autocall_leg + e.maturity_leg + e.coupon_leg, e.value, 1e-12);
  EXPECT_EQ(e.n_paths_used, 20'224);  // rounded up to whole 256-path batches
}

TEST(MonteCarlo, ZeroVolatilityIsDeterministic) {
  // Forwards grow at r - q; with S0 = 100 and r > q both assets sit above
  // 100 at every date, so the note calls at date 1 with a full year of
  // coupons.
  MarketData m = fx::flat_market(0.03, {0.01, 0.0}, {0.0, 0.0}, 0.0);
  Instrument inst = fx::table1_instrument();
  McEstimate e = simulate_price(inst, m, small(1, 1000));
  double df1 = std::exp(-0.03);
  EXPECT_NEAR(e.value, df1 * (1.0 + 365 * inst.daily_coupon), 1e-12);
  EXPECT_LT(e.std_error, 1e-8);

  // Falling forwards: no call, no coupons, worst_of pays the worse forward.
  MarketData down = fx::flat_market(0.0, {0.1, 0.05}, {0.0, 0.0}, 0.0);
  inst.redemption = RedemptionMode::worst_of;
  inst.final_barrier_frac = 0.9;
  McEstimate w = simulate_price(inst, down, small(1, 1000));
  EXPECT_NEAR(w.value, std::exp(-0.1 * 2.0), 1e-12);
}

TEST(MonteCarlo, SingleDateClosedForm) {
  // One date, kappa_floor, no coupon: DF * (kappa + (1 - kappa) P_up).
  Instrument inst;
  inst.observation_times = {1.0};
  inst.accrual_barriers = {100.0, 100.0};
  inst.final_barrier_frac = 0.8;
  inst.issue_spots = {100.0, 100.0};
  MarketData m = fx::table1_market();
  double d1 = fx::bs_d2(100.0, 80.0, 0.01, 0.005, 0.25, 1.0);
  double d2 = fx::bs_d2(100.0, 80.0, 0.01, 0.007, 0.20, 1.0);
  double pup = bivariate_normal_cdf(d1, d2, 0.78);
  double expected = std::exp(-0.01) * (0.8 + 0.2 * pup);
  McEstimate e = simulate_price(inst, m, small(3, 200'000));
  EXPECT_NEAR(e.value, expected, 4 * e.std_error);
}

TEST(MonteCarlo, MartingaleOfForwardViaWorstOf) {
  // kappa = 1 and identical assets with rho = 1: the worst_of payoff is
  // min(1, S_T / S_bar), a capped forward whose value follows from the
  // Black-Scholes put: E[min(1, X)] = 1 - E[(1 - X)^+].
  Instrument inst;
  inst.observation_times = {1.0};
  inst.accrual_barriers = {100.0, 100.0};
  inst.final_barrier_frac = 1.0;
  inst.issue_spots = {100.0, 100.0};
  inst.redemption = RedemptionMode::worst_of;
  const double r = 0.02, q = 0.0, s = 0.2, T = 1.0;
  MarketData m = fx::flat_market(r, {q, q}, {s, s}, 1.0);
  double d1 = (std::log(1.0) + (r - q + 0.5 * s * s) * T) / (s * std::sqrt(T));
  double d2 = d1 - s * std::sqrt(T);
  double put = std::exp(-r * T) * normal_cdf(-d2) - std::exp(-q * T) * normal_cdf(-d1);
  double expected = std::exp(-r * T) - put;
  McEstimate e = simulate_price(inst, m, small(11, 200'000));
  EXPECT_NEAR(e.value, expected, 4 * e.std_error);
}

TEST(MonteCarlo, AntitheticReducesError) {
  MarketData m = fx::table1_market();
  Instrument inst;
  inst.observation_times = {1.0};
  inst.accrual_barriers = {100.0, 100.0};
  inst.final_barrier_frac = 1.0;
  inst.issue_spots = {100.0, 100.0};
  inst.redemption = RedemptionMode::worst_of;
  McConfig plain = small(2, 50'000), anti = plain;
  anti.antithetic = true;
  McEstimate a = simulate_price(inst, m, plain), b = simulate_price(inst, m, anti);
  EXPECT_LT(b.std_error, a.std_error);
  EXPECT_NEAR(a.value, b.value, 4 * std::hypot(a.std_error, b.std_error));
}

TEST(MonteCarlo, AntitheticWithEarlyExitIsUnbiased) {
  Instrument inst = fx::table1_instrument();
  MarketData m = fx::table1_market();
  McConfig anti = small(4, 200'000);
  anti.antithetic = true;
  McEstimate e = simulate_price(inst, m, anti);
  PricingResult sa = total_value(inst, m, 1e-4);
  EXPECT_NEAR(e.value, sa.total_value, 4 * e.std_error + 1e-4);
}

TEST(MonteCarlo, TargetErrorAndPathScaling) {
  Instrument inst = fx::table1_instrument();
  MarketData m = fx::table1_market();
  McConfig cfg = small(9);
  cfg.target_abs_error = 4e-3;
  McEstimate coarse = simulate_price(inst, m, cfg);
  cfg.target_abs_error = 2e-3;
  McEstimate fine = simulate_price(inst, m, cfg);
  EXPECT_LE(coarse.std_error, 4e-3);
  EXPECT_LE(fine.std_error, 2e-3);
  double ratio = static_cast<double>(fine.n_paths_used) / coarse.n_paths_used;
  EXPECT_GT(ratio, 3.0);
  EXPECT_LT(ratio, 5.5);
}

TEST(MonteCarlo, PathBudgetExhaustion) {
  McConfig cfg = small(1);
  cfg.target_abs_error = 1e-6;
  cfg.max_paths = 2048;
  try {
    simulate_price(fx::table1_instrument(), fx::table1_market(), cfg);
    FAIL() << "expected McConvergenceError";
  } catch (const McConvergenceError& e) {
    EXPECT_EQ(e.estimate().n_paths_used, 2048);
    EXPECT_GT(e.estimate().std_error, 1e-6);
  }
}

TEST(MonteCarlo, Validation) {
  McConfig cfg = small(1);
  cfg.n_paths = 1;
  EXPECT_THROW(simulate_price(fx::table1_instrument(), fx::table1_market(), cfg), DomainError);
  cfg = small(1);
  cfg.target_abs_error = -1.0;
  EXPECT_THROW(simulate_price(fx::table1_instrument(), fx::table1_market(), cfg), DomainError);
}

TEST(MonteCarlo, ProfileRejectsBadGrid) {
  Instrument inst = fx::table1_instrument();
  MarketData m = fx::table1_market();
  EXPECT_THROW(error_runtime_profile(inst, m, {1e-3, 2e-3}), DomainError);
  EXPECT_THROW(error_runtime_profile(inst, m, {}), DomainError);
  EXPECT_THROW(error_runtime_profile(inst, m, {1e-2, -1.0}), DomainError);
}

TEST(MonteCarlo, ProfileRows) {
  Instrument inst = fx::table1_instrument();
  MarketData m = fx::table1_market();
  auto rows = error_runtime_profile(inst, m, {1e-2, 5e-3}, small(3));
  ASSERT_EQ(rows.size(), 2u);
  EXPECT_LE(rows[1].mc_std_error, 5e-3);
  EXPECT_GT(rows[1].mc_paths, rows[0].mc_paths);
  EXPECT_NEAR(rows[0].mc_value, rows[0].sa_value, 3 * std::hypot(rows[0].mc_std_error, 1e-2));
}
