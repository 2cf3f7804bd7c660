#pragma once

/**
 * @file mc_pricer.hpp
 * @brief Day-to-day Monte Carlo under correlated GBM with piecewise-constant
 *        parameters. Each step integrates drift and variance exactly.
 */

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <optional>
#include <random>
#include <thread>
#include <vector>

#include "acnote/errors.hpp"
#include "acnote/gaussian.hpp"
#include "acnote/instrument.hpp"
#include "acnote/sa_pricer.hpp"
#include "acnote/term_structures.hpp"

namespace acnote {

struct McConfig {
  std::int64_t n_paths = 100'000;
  std::uint64_t seed = 0;
  std::optional<double> target_abs_error;  // grow paths until std_error <= target
  bool antithetic = false;
  std::int64_t max_paths = 200'000'000;
  int workers = 0;  // 0: hardware concurrency

  void validate() const {
    if (n_paths < 2) throw DomainError("mc: n_paths must be >= 2");
    if (target_abs_error && !(*target_abs_error > 0.0))
      throw DomainError("mc: target_abs_error must be positive");
  }
};

struct McEstimate {
  double value = 0.0;
  double std_error = 0.0;
  std::int64_t n_paths_used = 0;
  double autocall_leg = 0.0;
  double maturity_leg = 0.0;
  double coupon_leg = 0.0;
};

/// Thrown when target_abs_error was not met within max_paths.
class McConvergenceError : public ConvergenceError {
 public:
  explicit McConvergenceError(McEstimate est)
      : ConvergenceError("monte carlo: target error not reached within path budget", est.value,
                         est.std_error),
        estimate_(est) {}

  const McEstimate& estimate() const noexcept { return estimate_; }

 private:
  McEstimate estimate_;
};

namespace detail {

inline constexpr std::int64_t kMcBatchPaths = 256;

/// Simulation grid: accrual days merged with observation times.
struct McStep {
  std::array<double, kNumAssets> drift{};
  double l11 = 0.0, l21 = 0.0, l22 = 0.0;
  int accrual_period = 0;  // 0: not an accrual day
  int observation = 0;     // 1-based observation index, 0: none
};

struct McPlan {
  std::vector<McStep> steps;
  std::vector<double> df;  // discount factor per observation
  std::vector<std::array<double, kNumAssets>> log_autocall;  // log(b / x) per date < M
  std::array<double, kNumAssets> log_accrual{};
  std::array<double, kNumAssets> log_final{};
  std::array<double, kNumAssets> spot_over_issue{};
  double gamma = 0.0;
  double kappa = 1.0;
  RedemptionMode redemption = RedemptionMode::kappa_floor;
  int num_dates = 0;
  bool pure_accrual = false;
};

inline McPlan make_plan(const Instrument& inst, const MarketData& market) {
  McPlan plan;
  plan.num_dates = inst.num_dates();
  plan.pure_accrual = inst.is_pure_accrual();
  plan.gamma = inst.daily_coupon;
  plan.kappa = inst.final_barrier_frac;
  plan.redemption = inst.redemption;

  struct Node {
    double t;
    int accrual_period;
    int observation;
  };
  std::vector<Node> nodes;
  for (const auto& d : accrual_days(inst)) nodes.push_back({d.time(), d.period, 0});
  for (int k = 1; k <= inst.num_dates(); ++k) {
    double tau = inst.observation_times[k - 1];
    auto it = std::find_if(nodes.begin(), nodes.end(),
                           [&](const Node& n) { return std::abs(n.t - tau) < 1e-9; });
    if (it != nodes.end())
      it->observation = k;
    else
      nodes.push_back({tau, 0, k});
  }
  std::sort(nodes.begin(), nodes.end(), [](const Node& a, const Node& b) { return a.t < b.t; });

  double prev = 0.0;
  for (const auto& n : nodes) {
    McStep s;
    std::array<double, kNumAssets> var{};
    for (int i = 0; i < kNumAssets; ++i) {
      var[i] = market.vol[i].square_integral(prev, n.t);
      s.drift[i] = market.rate.integral(prev, n.t) - market.dividend[i].integral(prev, n.t) -
                   0.5 * var[i];
    }
    double cov = market.rho(0, 1) * cross_vol_integral(market.vol[0], market.vol[1], prev, n.t);
    s.l11 = std::sqrt(var[0]);
    s.l21 = s.l11 > 0.0 ? cov / s.l11 : 0.0;
    s.l22 = std::sqrt(std::max(var[1] - s.l21 * s.l21, 0.0));
    s.accrual_period = n.accrual_period;
    s.observation = n.observation;
    plan.steps.push_back(s);
    prev = n.t;
  }

  for (int k = 0; k < inst.num_dates(); ++k)
    plan.df.push_back(std::exp(-market.rate.integral(0.0, inst.observation_times[k])));
  for (const auto& row : inst.autocall_barriers)
    plan.log_autocall.push_back({std::log(row[0] / market.spot[0]), std::log(row[1] / market.spot[1])});
  for (int i = 0; i < kNumAssets; ++i) {
    plan.log_accrual[i] = std::log(inst.accrual_barriers[i] / market.spot[i]);
    plan.log_final[i] = std::log(inst.final_barrier_frac * inst.issue_spots[i] / market.spot[i]);
    plan.spot_over_issue[i] = market.spot[i] / inst.issue_spots[i];
  }
  return plan;
}

struct LegValues {
  double autocall = 0.0, maturity = 0.0, coupon = 0.0;
  double total() const { return autocall + maturity + coupon; }
};

/// One path driven by normals from `draw`; `flip` negates them (antithetic).
template <typename Draw>
LegValues simulate_path(const McPlan& plan, Draw& draw, std::vector<double>& normals,
                        std::size_t& recorded, bool replay, bool flip) {
  LegValues out;
  double y1 = 0.0, y2 = 0.0;
  int accrued = 0;
  std::size_t used = 0;
  const double sgn = flip ? -1.0 : 1.0;
  for (const auto& s : plan.steps) {
    double z1, z2;
    if (replay && used < recorded) {
      z1 = normals[used];
      z2 = normals[used + 1];
    } else {
      z1 = draw();
      z2 = draw();
      normals[used] = z1;
      normals[used + 1] = z2;
    }
    used += 2;
    if (!replay) recorded = used;
    z1 *= sgn;
    z2 *= sgn;
    y1 += s.drift[0] + s.l11 * z1;
    y2 += s.drift[1] + s.l21 * z1 + s.l22 * z2;
    if (s.accrual_period != 0 && y1 > plan.log_accrual[0] && y2 > plan.log_accrual[1]) ++accrued;
    if (s.observation == 0) continue;
    const int k = s.observation;
    const double df = plan.df[k - 1];
    out.coupon += plan.gamma * accrued * df;
    accrued = 0;
    if (k < plan.num_dates) {
      if (!plan.pure_accrual && y1 > plan.log_autocall[k - 1][0] &&
          y2 > plan.log_autocall[k - 1][1]) {
        out.autocall = df;
        return out;
      }
      continue;
    }
    double payoff;
    if (y1 > plan.log_final[0] && y2 > plan.log_final[1]) {
      payoff = 1.0;
    } else if (plan.redemption == RedemptionMode::kappa_floor) {
      payoff = plan.kappa;
    } else {
      payoff = std::min(plan.spot_over_issue[0] * std::exp(y1), plan.spot_over_issue[1] * std::exp(y2));
    }
    out.maturity = df * payoff;
  }
  return out;
}

struct BatchSums {
  double sum = 0.0, sum_sq = 0.0;
  double autocall = 0.0, maturity = 0.0, coupon = 0.0;
  std::int64_t samples = 0;
  std::int64_t paths = 0;
};

inline BatchSums run_batch(const McPlan& plan, std::uint64_t seed, std::int64_t batch,
                           bool antithetic) {
  std::mt19937_64 rng(splitmix64(seed ^ splitmix64(static_cast<std::uint64_t>(batch))));
  std::normal_distribution<double> normal;
  auto draw = [&] { return normal(rng); };
  std::vector<double> normals(2 * plan.steps.size());
  std::size_t recorded = 0;
  BatchSums b;
  const std::int64_t samples = antithetic ? kMcBatchPaths / 2 : kMcBatchPaths;
  for (std::int64_t p = 0; p < samples; ++p) {
    LegValues v = simulate_path(plan, draw, normals, recorded, false, false);
    double weight = 1.0;
    if (antithetic) {
      LegValues w = simulate_path(plan, draw, normals, recorded, true, true);
      v.autocall += w.autocall;
      v.maturity += w.maturity;
      v.coupon += w.coupon;
      weight = 0.5;
    }
    double x = weight * v.total();
    b.sum += x;
    b.sum_sq += x * x;
    b.autocall += weight * v.autocall;
    b.maturity += weight * v.maturity;
    b.coupon += weight * v.coupon;
  }
  b.samples = samples;
  b.paths = kMcBatchPaths;
  return b;
}

/// Runs batches [first, last) on `workers` threads; results are stored per
/// batch so the reduction order never depends on scheduling.
inline void run_batches(const McPlan& plan, const McConfig& cfg, std::int64_t first,
                        std::int64_t last, std::vector<BatchSums>& out) {
  out.resize(static_cast<std::size_t>(last));
  int workers = cfg.workers > 0 ? cfg.workers
                                : static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
  workers = static_cast<int>(std::min<std::int64_t>(workers, last - first));
  if (workers <= 1) {
    for (std::int64_t b = first; b < last; ++b) out[b] = run_batch(plan, cfg.seed, b, cfg.antithetic);
    return;
  }
  std::atomic<std::int64_t> next{first};
  std::vector<std::thread> pool;
  for (int w = 0; w < workers; ++w) {
    pool.emplace_back([&] {
      for (std::int64_t b = next++; b < last; b = next++)
        out[b] = run_batch(plan, cfg.seed, b, cfg.antithetic);
    });
  }
  for (auto& t : pool) t.join();
}

inline McEstimate reduce(const std::vector<BatchSums>& batches) {
  BatchSums tot;
  for (const auto& b : batches) {
    tot.sum += b.sum;
    tot.sum_sq += b.sum_sq;
    tot.autocall += b.autocall;
    tot.maturity += b.maturity;
    tot.coupon += b.coupon;
    tot.samples += b.samples;
    tot.paths += b.paths;
  }
  McEstimate e;
  const double n = static_cast<double>(tot.samples);
  e.autocall_leg = tot.autocall / n;
  e.maturity_leg = tot.maturity / n;
  e.coupon_leg = tot.coupon / n;
  e.value = e.autocall_leg + e.maturity_leg + e.coupon_leg;
  double mean = tot.sum / n;
  double var = std::max(tot.sum_sq / n - mean * mean, 0.0) * n / std::max(n - 1.0, 1.0);
  e.std_error = std::sqrt(var / n);
  e.n_paths_used = tot.paths;
  return e;
}

}  // namespace detail

/// Monte Carlo price. With a target error, runs one batch as a pilot and
/// then grows the path count from the observed variance until the standard
/// error meets the target.
inline McEstimate simulate_price(const Instrument& inst, const MarketData& market,
                                 const McConfig& cfg) {
  inst.validate();
  market.validate();
  cfg.validate();
  const detail::McPlan plan = detail::make_plan(inst, market);
  constexpr std::int64_t B = detail::kMcBatchPaths;
  const std::int64_t max_batches = std::max<std::int64_t>(1, cfg.max_paths / B);
  std::vector<detail::BatchSums> batches;

  if (!cfg.target_abs_error) {
    std::int64_t n = (cfg.n_paths + B - 1) / B;
    detail::run_batches(plan, cfg, 0, n, batches);
    return detail::reduce(batches);
  }

  const double target = *cfg.target_abs_error;
  std::int64_t done = 1;
  detail::run_batches(plan, cfg, 0, done, batches);
  McEstimate est = detail::reduce(batches);
  while (est.std_error > target) {
    if (done >= max_batches) throw McConvergenceError(est);
    double ratio = est.std_error / target;
    auto want = static_cast<std::int64_t>(std::ceil(done * ratio * ratio * 1.02));
    want = std::clamp<std::int64_t>(want, done + 1, max_batches);
    detail::run_batches(plan, cfg, done, want, batches);
    done = want;
    est = detail::reduce(batches);
  }
  return est;
}

struct ProfileRow {
  double eps = 0.0;
  double mc_runtime_seconds = 0.0;
  double mc_value = 0.0;
  double mc_std_error = 0.0;
  std::int64_t mc_paths = 0;
  double sa_runtime_seconds = 0.0;
  double sa_value = 0.0;
  double sa_err_est = 0.0;
};

/// Wall-clock cost of both engines at each requested absolute error.
inline std::vector<ProfileRow> error_runtime_profile(const Instrument& inst,
                                                     const MarketData& market,
                                                     const std::vector<double>& eps_grid,
                                                     const McConfig& base = {},
                                                     const SaOptions& sa = {}) {
  if (eps_grid.empty()) throw DomainError("eps grid is empty");
  for (std::size_t i = 0; i < eps_grid.size(); ++i) {
    if (!(eps_grid[i] > 0.0)) throw DomainError("eps grid entries must be positive");
    if (i > 0 && !(eps_grid[i] < eps_grid[i - 1])) throw DomainError("eps grid must be descending");
  }
  using clock = std::chrono::steady_clock;
  std::vector<ProfileRow> rows;
  for (double eps : eps_grid) {
    ProfileRow row;
    row.eps = eps;
    McConfig cfg = base;
    cfg.target_abs_error = eps;
    auto t0 = clock::now();
    McEstimate mc = simulate_price(inst, market, cfg);
    auto t1 = clock::now();
    PricingResult r = price_semi_analytic(inst, market, eps, sa);
    auto t2 = clock::now();
    row.mc_runtime_seconds = std::chrono::duration<double>(t1 - t0).count();
    row.mc_value = mc.value;
    row.mc_std_error = mc.std_error;
    row.mc_paths = mc.n_paths_used;
    row.sa_runtime_seconds = std::chrono::duration<double>(t2 - t1).count();
    row.sa_value = r.total_value;
    row.sa_err_est = r.err_est;
    rows.push_back(row);
  }
  return rows;
}

}  // namespace acnote
