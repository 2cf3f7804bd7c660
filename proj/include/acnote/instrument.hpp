#pragma once

/**
 * @file instrument.hpp
 * @brief Dual-asset auto-callable range-accrual note, notional 1.
 */

#include <array>
#include <cmath>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "acnote/errors.hpp"
#include "acnote/scenario_algebra.hpp"
#include "acnote/term_structures.hpp"

namespace acnote {

enum class RedemptionMode {
  worst_of,     // below the final barrier: pay min_i S_i / S_bar_i
  kappa_floor,  // below the final barrier: pay kappa
};

inline std::string_view to_string(RedemptionMode mode) {
  return mode == RedemptionMode::worst_of ? "worst_of" : "kappa_floor";
}

inline std::optional<RedemptionMode> parse_redemption_mode(std::string_view s) {
  if (s == "worst_of") return RedemptionMode::worst_of;
  if (s == "kappa_floor") return RedemptionMode::kappa_floor;
  return std::nullopt;
}

struct Instrument {
  std::vector<double> observation_times;  // tau_1 < ... < tau_M, year fractions
  BarrierTable autocall_barriers;         // dates 1..M-1; empty for a pure accrual note
  std::array<double, kNumAssets> accrual_barriers{};
  double final_barrier_frac = 1.0;        // kappa
  double daily_coupon = 0.0;              // gamma per accrual day
  std::array<double, kNumAssets> issue_spots{1.0, 1.0};
  RedemptionMode redemption = RedemptionMode::kappa_floor;

  int num_dates() const { return static_cast<int>(observation_times.size()); }
  bool is_pure_accrual() const { return autocall_barriers.empty(); }

  void validate() const {
    if (observation_times.empty()) throw DomainError("instrument.observation_times is empty");
    if (!(observation_times.front() > 0.0))
      throw DomainError("instrument.observation_times must start after 0");
    for (std::size_t k = 1; k < observation_times.size(); ++k) {
      if (!(observation_times[k] > observation_times[k - 1]))
        throw DomainError("instrument.observation_times must be strictly increasing");
    }
    if (!autocall_barriers.empty() &&
        static_cast<int>(autocall_barriers.size()) != num_dates() - 1)
      throw DomainError("instrument.autocall_barriers needs one entry per date before maturity");
    for (const auto& row : autocall_barriers)
      for (double b : row)
        if (!(b > 0.0)) throw DomainError("instrument.autocall_barriers must be positive");
    for (int i = 0; i < kNumAssets; ++i) {
      if (!(accrual_barriers[i] > 0.0))
        throw DomainError("instrument.accrual_barriers must be positive");
      if (!(issue_spots[i] > 0.0)) throw DomainError("instrument.issue_spots must be positive");
    }
    if (!(final_barrier_frac > 0.0 && final_barrier_frac <= 1.0))
      throw DomainError("instrument.final_barrier_frac must lie in (0, 1]");
    if (!(daily_coupon >= 0.0) || !std::isfinite(daily_coupon))
      throw DomainError("instrument.daily_coupon must be non-negative");
  }

  /// Barrier table for dates 1..M: auto-call barriers, then kappa * S_bar at maturity.
  BarrierTable maturity_table(double kappa) const {
    BarrierTable t = autocall_barriers;
    t.push_back({kappa * issue_spots[0], kappa * issue_spots[1]});
    return t;
  }
};

/// One accrual observation: integer day index and its 1-based period.
struct AccrualDay {
  int day = 0;
  int period = 1;

  double time() const { return day / kDaysPerYear; }
};

/// Integer days d with d/365 in (tau_{k-1}, tau_k], tau_0 = 0, tagged with k.
/// Shared by both pricers, so the two engines accrue on the same grid.
inline std::vector<AccrualDay> accrual_days(const Instrument& inst) {
  constexpr double eps = 1e-9;
  std::vector<AccrualDay> out;
  double prev = 0.0;
  for (int k = 1; k <= inst.num_dates(); ++k) {
    double tau = inst.observation_times[k - 1];
    int first = static_cast<int>(std::floor(prev * kDaysPerYear + eps)) + 1;
    int last = static_cast<int>(std::floor(tau * kDaysPerYear + eps));
    for (int d = first; d <= last; ++d) out.push_back({d, k});
    prev = tau;
  }
  return out;
}

/// Semi-analytic pricing output; all values are fractions of notional.
struct PricingResult {
  std::vector<double> p_autocall;    // P_1 .. P_{M-1}
  double p_mat = 0.0;                // survival to maturity
  double p_up = 0.0;
  double p_down = 0.0;
  std::vector<double> coupon_days;   // N_1 .. N_M (expected accrual days)
  double coupon_value = 0.0;         // VC_M
  double autocall_value = 0.0;       // discounted early-redemption leg
  double maturity_value = 0.0;       // undiscounted maturity payoff
  double total_value = 0.0;
  double err_est = 0.0;
  bool converged = true;
};

}  // namespace acnote
