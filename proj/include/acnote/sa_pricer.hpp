#pragma once

/**
 * @file sa_pricer.hpp
 * @brief Semi-analytic valuation: every probability is a signed sum of
 *        multivariate normal orthant probabilities.
 *
 * Error budget of total_value (absolute, fractions of notional):
 *   auto-call leg 40 %, maturity leg 30 %, coupon leg 30 % of tol.
 * Within an expansion the budget is shared evenly by the terms evaluated
 * by lattice integration (dimension >= 3); the 1-d and 2-d kernels are
 * deterministic and only contribute their fixed error bounds.
 */

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "acnote/errors.hpp"
#include "acnote/gaussian.hpp"
#include "acnote/instrument.hpp"
#include "acnote/scenario_algebra.hpp"
#include "acnote/term_structures.hpp"

namespace acnote {

struct SaOptions {
  std::uint64_t seed = 0;
  ScenarioBudget budget{};
  std::int64_t max_evaluations = 50'000'000;
};

/// A value with its absolute error bound.
struct Estimate {
  double value = 0.0;
  double err_est = 0.0;
  bool converged = true;
};

struct CouponLeg {
  std::vector<double> coupon_days;  // N_1 .. N_M
  double value = 0.0;               // VC_M
  double err_est = 0.0;
  bool converged = true;
};

struct MaturityLeg {
  double value = 0.0;  // undiscounted
  double p_up = 0.0;
  double p_mat = 0.0;
  double err_est = 0.0;
  bool converged = true;
};

/// Thrown by total_value when some kernel call missed its tolerance; carries
/// the full best-effort result.
class PricingConvergenceError : public ConvergenceError {
 public:
  explicit PricingConvergenceError(PricingResult result)
      : ConvergenceError("semi-analytic pricing did not reach its tolerance", result.total_value,
                         result.err_est),
        result_(std::move(result)) {}

  const PricingResult& result() const noexcept { return result_; }

 private:
  PricingResult result_;
};

namespace detail {

enum class SeedTag : std::uint64_t {
  autocall = 1,
  survival = 2,
  p_up = 3,
  coupon = 4,
  p_up_integral = 5,
};

inline std::uint64_t term_seed(std::uint64_t base, SeedTag tag, std::uint64_t a, std::uint64_t b) {
  return splitmix64(splitmix64(splitmix64(base ^ static_cast<std::uint64_t>(tag)) ^ a) ^ b);
}

inline Estimate throw_if_unconverged(const Estimate& e, const char* what) {
  if (!e.converged) throw ConvergenceError(what, e.value, e.err_est);
  return e;
}

/// Sums the signed expansion with a total absolute tolerance tol.
inline Estimate evaluate_expansion(const SignedExpansion& ex, std::span<const double> times,
                                   const MarketData& market, double tol, std::uint64_t seed,
                                   const SaOptions& opt) {
  std::size_t lattice_terms = 0;
  for (const auto& t : ex.terms) lattice_terms += t.scenario.conditions() >= 3 ? 1 : 0;
  const double analytic_share =
      kBivariateErrorBound * static_cast<double>(ex.terms.size() - lattice_terms);
  // Lattice terms use independent random shifts, so their 3 SE errors add in
  // quadrature; closed-form terms add linearly.
  const double term_tol =
      lattice_terms > 0
          ? std::max(tol - analytic_share, 1e-3 * tol) / std::sqrt(static_cast<double>(lattice_terms))
          : tol;

  Estimate out;
  out.value = ex.constant;
  double lattice_sq = 0.0;
  for (std::size_t idx = 0; idx < ex.terms.size(); ++idx) {
    const auto& term = ex.terms[idx];
    GaussianProblem gp = build_gaussian_problem(term.scenario, times, market);
    MvnQuery q{gp.d, gp.C, term_tol, splitmix64(seed ^ (idx * 0x9E3779B97F4A7C15ULL)),
               opt.max_evaluations};
    MvnResult r;
    try {
      r = mvn_cdf(q);
    } catch (const ConvergenceError& e) {
      r = {e.best_estimate(), e.err_est()};
      out.converged = false;
    }
    out.value += term.sign * r.value;
    if (term.scenario.conditions() >= 3) lattice_sq += r.err_est * r.err_est;
    else out.err_est += r.err_est;
  }
  out.err_est += std::sqrt(lattice_sq);
  return out;
}

inline double discount(const MarketData& market, double t) {
  return std::exp(-market.rate.integral(0.0, t));
}

/// Table and time grid for "survive dates 1..k-1, then both above `terminal` at t".
inline SignedExpansion conditional_expansion(const Instrument& inst, int k,
                                             const std::array<double, kNumAssets>& terminal,
                                             double t, std::vector<double>& times,
                                             const SaOptions& opt) {
  BarrierTable table(inst.autocall_barriers.begin(), inst.autocall_barriers.begin() + (k - 1));
  table.push_back(terminal);
  times.assign(inst.observation_times.begin(), inst.observation_times.begin() + (k - 1));
  times.push_back(t);
  return expand_autocall(k, table, opt.budget);
}

inline int autocall_dates(const Instrument& inst) {
  return inst.is_pure_accrual() ? 0 : inst.num_dates() - 1;
}

inline Estimate p_up_impl(double kappa, const Instrument& inst, const MarketData& market,
                          double tol, std::uint64_t seed, const SaOptions& opt) {
  if (!(kappa > 0.0)) throw DomainError("p_up requires kappa > 0");
  std::vector<double> times;
  const int k = autocall_dates(inst) + 1;
  SignedExpansion ex =
      conditional_expansion(inst, k, {kappa * inst.issue_spots[0], kappa * inst.issue_spots[1]},
                            inst.observation_times.back(), times, opt);
  return evaluate_expansion(ex, times, market, tol, seed, opt);
}

inline Estimate survival_impl(int k, const Instrument& inst, const MarketData& market,
                              double tol, const SaOptions& opt) {
  if (k == 0) return {1.0, 0.0, true};
  SignedExpansion ex = expand_survival(k, inst.autocall_barriers, opt.budget);
  std::span<const double> times(inst.observation_times.data(), k);
  return evaluate_expansion(ex, times, market, tol,
                            term_seed(opt.seed, SeedTag::survival, k, 0), opt);
}

inline Estimate autocall_impl(int k, const Instrument& inst, const MarketData& market,
                              double tol, const SaOptions& opt) {
  SignedExpansion ex = expand_autocall(k, inst.autocall_barriers, opt.budget);
  std::span<const double> times(inst.observation_times.data(), k);
  return evaluate_expansion(ex, times, market, tol,
                            term_seed(opt.seed, SeedTag::autocall, k, 0), opt);
}

inline Estimate coupon_prob_impl(int k, double tau_a, const Instrument& inst,
                                 const MarketData& market, double tol, const SaOptions& opt) {
  std::vector<double> times;
  SignedExpansion ex = conditional_expansion(inst, k, inst.accrual_barriers, tau_a, times, opt);
  auto day = static_cast<std::uint64_t>(std::llround(tau_a * kDaysPerYear * 1024.0));
  return evaluate_expansion(ex, times, market, tol, term_seed(opt.seed, SeedTag::coupon, k, day),
                            opt);
}

/// Panel of the 32-point Gauss-Legendre rule. The integrand returns noisy
/// estimates with independent errors, so value noise adds in quadrature.
struct Panel {
  double value = 0.0;
  double noise_sq = 0.0;
};

inline const GaussLegendreRule& panel_rule() {
  static const GaussLegendreRule rule = gauss_legendre(32);
  return rule;
}

template <typename F>
Panel gauss_legendre_panel(F&& f, double lo, double hi) {
  const auto& rule = panel_rule();
  const double half = 0.5 * (hi - lo), mid = 0.5 * (hi + lo);
  Panel p;
  for (std::size_t i = 0; i < rule.nodes.size(); ++i) {
    Estimate e = f(mid + half * rule.nodes[i]);
    const double w = half * rule.weights[i];
    p.value += w * e.value;
    p.noise_sq += w * w * e.err_est * e.err_est;
  }
  return p;
}

/// Adaptive bisection on [a, b]. The disagreement between a panel and its
/// two halves counts as discretization error only beyond the combined
/// integrand noise of the three estimates.
template <typename F>
void adaptive_gauss_legendre(F&& f, double a, double b, const Panel& whole, double budget, int depth,
                             double& sum, double& noise_sq, double& err, bool& converged) {
  const double m = 0.5 * (a + b);
  Panel left = gauss_legendre_panel(f, a, m);
  Panel right = gauss_legendre_panel(f, m, b);
  const double floor = std::sqrt(whole.noise_sq + left.noise_sq + right.noise_sq);
  const double diff = std::max(0.0, std::abs(left.value + right.value - whole.value) - floor);
  if (diff <= budget || depth == 0) {
    if (diff > budget) converged = false;
    sum += left.value + right.value;
    noise_sq += left.noise_sq + right.noise_sq;
    err += diff;
    return;
  }
  adaptive_gauss_legendre(f, a, m, left, budget / 2.0, depth - 1, sum, noise_sq, err, converged);
  adaptive_gauss_legendre(f, m, b, right, budget / 2.0, depth - 1, sum, noise_sq, err, converged);
}

}  // namespace detail

/// P_k: first auto-call at date k, 1 <= k <= M-1.
inline Estimate autocall_probability(int k, const Instrument& inst, const MarketData& market,
                                     double tol, const SaOptions& opt = {}) {
  inst.validate();
  if (k < 1 || k > detail::autocall_dates(inst))
    throw DomainError("autocall_probability requires 1 <= k <= M-1");
  return detail::throw_if_unconverged(detail::autocall_impl(k, inst, market, tol, opt),
                                      "autocall_probability did not converge");
}

/// P_bar_k: no auto-call at dates 1..k, 0 <= k <= M-1.
inline Estimate survival_probability(int k, const Instrument& inst, const MarketData& market,
                                     double tol, const SaOptions& opt = {}) {
  inst.validate();
  if (k < 0 || k > detail::autocall_dates(inst))
    throw DomainError("survival_probability requires 0 <= k <= M-1");
  return detail::throw_if_unconverged(detail::survival_impl(k, inst, market, tol, opt),
                                      "survival_probability did not converge");
}

/// P_up: reach maturity with both assets above kappa * S_bar_i.
inline Estimate p_up(double kappa_frac, const Instrument& inst, const MarketData& market,
                     double tol, const SaOptions& opt = {}) {
  inst.validate();
  return detail::throw_if_unconverged(
      detail::p_up_impl(kappa_frac, inst, market, tol,
                        detail::term_seed(opt.seed, detail::SeedTag::p_up, 0, 0), opt),
      "p_up did not converge");
}

/// P_01(tau_a): both assets above the accrual barriers at tau_a in the first period.
inline Estimate coupon_prob_first(double tau_a, const Instrument& inst, const MarketData& market,
                                  double tol, const SaOptions& opt = {}) {
  inst.validate();
  const double limit =
      inst.is_pure_accrual() ? inst.observation_times.back() : inst.observation_times.front();
  if (!(tau_a > 0.0 && tau_a <= limit + 1e-12))
    throw DomainError("coupon_prob_first requires 0 < tau_a <= tau_1");
  return detail::throw_if_unconverged(detail::coupon_prob_impl(1, tau_a, inst, market, tol, opt),
                                      "coupon_prob_first did not converge");
}

/// P_{k-1,k}(tau_a): no auto-call at dates 1..k-1 and both above the
/// accrual barriers at tau_a, tau_{k-1} < tau_a <= tau_k.
inline Estimate coupon_prob(int k, double tau_a, const Instrument& inst, const MarketData& market,
                            double tol, const SaOptions& opt = {}) {
  inst.validate();
  if (k < 2 || k > inst.num_dates()) throw DomainError("coupon_prob requires 2 <= k <= M");
  const auto& tau = inst.observation_times;
  if (!(tau_a > tau[k - 2] && tau_a <= tau[k - 1] + 1e-12))
    throw DomainError("coupon_prob requires tau_{k-1} < tau_a <= tau_k");
  if (inst.is_pure_accrual()) return coupon_prob_first(tau_a, inst, market, tol, opt);
  return detail::throw_if_unconverged(detail::coupon_prob_impl(k, tau_a, inst, market, tol, opt),
                                      "coupon_prob did not converge");
}

/// Expected accrual days per period and VC_M = gamma * sum_k DF(tau_k) N_k.
/// tol bounds the absolute error of VC_M; day probabilities are capped at
/// 1e-3 absolute error so N_k stays meaningful when gamma = 0.
inline CouponLeg coupon_leg(const Instrument& inst, const MarketData& market, double tol,
                            const SaOptions& opt = {}) {
  inst.validate();
  constexpr double kMaxDayTol = 1e-3;
  const int M = inst.num_dates();
  const auto days = accrual_days(inst);
  std::vector<double> df(M);
  for (int k = 0; k < M; ++k)
    df[k] = detail::discount(market, inst.observation_times[k]);

  // Each day is an independently randomized estimate, so day errors (3 SE
  // each) combine in quadrature rather than linearly.
  double weight_sq = 0.0;
  for (const auto& d : days) {
    const double w = inst.daily_coupon * df[d.period - 1];
    weight_sq += w * w;
  }
  const double day_tol = weight_sq > 0.0 ? std::min(kMaxDayTol, tol / std::sqrt(weight_sq)) : kMaxDayTol;

  CouponLeg out;
  out.coupon_days.assign(M, 0.0);
  double err_sq = 0.0;
  for (const auto& d : days) {
    const int k = inst.is_pure_accrual() ? 1 : d.period;
    Estimate p = detail::coupon_prob_impl(k, d.time(), inst, market, day_tol, opt);
    out.coupon_days[d.period - 1] += p.value;
    const double w = inst.daily_coupon * df[d.period - 1];
    err_sq += w * w * p.err_est * p.err_est;
    out.converged = out.converged && p.converged;
  }
  for (int k = 0; k < M; ++k) out.value += inst.daily_coupon * df[k] * out.coupon_days[k];
  out.err_est = std::sqrt(err_sq);
  return out;
}

/// Undiscounted maturity payoff per the instrument's redemption mode.
///   kappa_floor: (1 - kappa) P_up(kappa) + kappa P_mat
///   worst_of:    (1 - kappa) P_up(kappa) + integral_0^kappa P_up(x) dx
/// The worst-of form follows from integrating the conditional expectation
/// of min_i S_i / S_bar_i by parts.
inline MaturityLeg maturity_value(const Instrument& inst, const MarketData& market, double tol,
                                  const SaOptions& opt = {}) {
  inst.validate();
  const double kappa = inst.final_barrier_frac;
  const int autocalls = detail::autocall_dates(inst);
  MaturityLeg out;

  Estimate mat = detail::survival_impl(autocalls, inst, market, tol, opt);
  out.p_mat = mat.value;

  if (inst.redemption == RedemptionMode::kappa_floor) {
    Estimate up = detail::p_up_impl(kappa, inst, market, tol,
                                    detail::term_seed(opt.seed, detail::SeedTag::p_up, 0, 0), opt);
    out.p_up = up.value;
    out.value = (1.0 - kappa) * up.value + kappa * mat.value;
    out.err_est = (1.0 - kappa) * up.err_est + kappa * mat.err_est;
    out.converged = up.converged && mat.converged;
    return out;
  }

  Estimate up = detail::p_up_impl(kappa, inst, market, tol / 2.0,
                                  detail::term_seed(opt.seed, detail::SeedTag::p_up, 0, 0), opt);
  out.p_up = up.value;
  // Node evaluations get their own seeds; size their tolerance so the
  // quadrature-weighted noise of one panel over [0, kappa] is tol / 4.
  double weight_norm = 0.0;
  for (double w : detail::panel_rule().weights) weight_norm += w * w;
  weight_norm = 0.5 * kappa * std::sqrt(weight_norm);
  const double eval_tol = std::min(1e-3, 0.25 * tol / weight_norm);
  const std::uint64_t inner_seed = detail::term_seed(opt.seed, detail::SeedTag::p_up_integral, 0, 0);
  bool evals_ok = true;
  auto integrand = [&](double x) {
    const auto node = static_cast<std::uint64_t>(std::llround(x * 0x1p40));
    Estimate e = detail::p_up_impl(x, inst, market, eval_tol, splitmix64(inner_seed ^ node), opt);
    evals_ok = evals_ok && e.converged;
    return e;
  };
  detail::Panel whole = detail::gauss_legendre_panel(integrand, 0.0, kappa);
  double integral = 0.0, noise_sq = 0.0, quad_err = 0.0;
  bool quad_ok = true;
  detail::adaptive_gauss_legendre(integrand, 0.0, kappa, whole, tol / 4.0, 10, integral, noise_sq,
                                  quad_err, quad_ok);
  out.value = (1.0 - kappa) * up.value + integral;
  out.err_est = (1.0 - kappa) * up.err_est + std::sqrt(noise_sq) + quad_err;
  out.converged = up.converged && mat.converged && evals_ok && quad_ok;
  return out;
}

/// Pure accrual note (no auto-call): bivariate accrual probabilities for
/// every day and a single-date P_up at maturity.
inline PricingResult pure_accrual_value(const Instrument& inst, const MarketData& market,
                                        double tol, const SaOptions& opt = {});

/// V_tot = DF(tau_M) V_maturity + sum_{k<M} DF(tau_k) P_k + VC_M.
inline PricingResult total_value(const Instrument& inst, const MarketData& market, double tol,
                                 const SaOptions& opt = {}) {
  inst.validate();
  market.validate();
  if (!(tol > 0.0)) throw DomainError("tol must be positive");
  const int M = inst.num_dates();
  opt.budget.check(M);
  const int autocalls = detail::autocall_dates(inst);

  PricingResult res;
  const double autocall_tol = 0.4 * tol;
  for (int k = 1; k <= autocalls; ++k) {
    double df = detail::discount(market, inst.observation_times[k - 1]);
    Estimate p = detail::autocall_impl(k, inst, market,
                                       autocall_tol / (autocalls * std::max(1.0, df)), opt);
    res.p_autocall.push_back(p.value);
    res.autocall_value += df * p.value;
    res.err_est += df * p.err_est;
    res.converged = res.converged && p.converged;
  }

  const double df_mat = detail::discount(market, inst.observation_times.back());
  MaturityLeg mat = maturity_value(inst, market, 0.3 * tol / std::max(1.0, df_mat), opt);
  res.p_mat = mat.p_mat;
  res.p_up = mat.p_up;
  res.p_down = mat.p_mat - mat.p_up;
  res.maturity_value = mat.value;
  res.err_est += df_mat * mat.err_est;
  res.converged = res.converged && mat.converged;

  CouponLeg coupons = coupon_leg(inst, market, 0.3 * tol, opt);
  res.coupon_days = coupons.coupon_days;
  res.coupon_value = coupons.value;
  res.err_est += coupons.err_est;
  res.converged = res.converged && coupons.converged;

  res.total_value = df_mat * res.maturity_value + res.autocall_value + res.coupon_value;
  if (!res.converged) throw PricingConvergenceError(res);
  return res;
}

inline PricingResult pure_accrual_value(const Instrument& inst, const MarketData& market,
                                        double tol, const SaOptions& opt) {
  if (!inst.is_pure_accrual()) throw DomainError("pure_accrual_value requires no auto-call barriers");
  return total_value(inst, market, tol, opt);
}

/// Dispatches on the instrument kind.
inline PricingResult price_semi_analytic(const Instrument& inst, const MarketData& market,
                                         double tol, const SaOptions& opt = {}) {
  return inst.is_pure_accrual() ? pure_accrual_value(inst, market, tol, opt)
                                : total_value(inst, market, tol, opt);
}

}  // namespace acnote
