#pragma once

/**
 * @file bench.hpp
 * @brief Run records, the runtime-versus-error benchmark table and the
 *        linear-transform validation suite behind the command-line tool.
 */

#include <chrono>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include <json.hpp>

#include "acnote/config.hpp"
#include "acnote/lemma.hpp"
#include "acnote/mc_pricer.hpp"
#include "acnote/sa_pricer.hpp"

namespace acnote {

struct RunRecord {
  Method method = Method::sa;
  double tol_or_eps = 0.0;
  double value = 0.0;
  double err_est = 0.0;
  double runtime_seconds = 0.0;
  std::int64_t n_paths = 0;
  std::uint64_t seed = 0;
  std::string digest;
  bool converged = true;
};

inline std::string method_name(Method m) { return m == Method::sa ? "SA" : "MC"; }

/// Round-trip representation, so records are byte-stable.
inline std::string format_number(double x) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

inline std::string format_runtime(double seconds) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.3f", seconds);
  return buf;
}

inline nlohmann::ordered_json to_json(const RunRecord& r) {
  nlohmann::ordered_json j;
  j["method"] = method_name(r.method);
  j["tol_or_eps"] = r.tol_or_eps;
  j["value"] = r.value;
  j["err_est"] = r.err_est;
  j["runtime_seconds"] = std::round(r.runtime_seconds * 1000.0) / 1000.0;
  j["n_paths"] = r.n_paths;
  j["seed"] = r.seed;
  j["digest"] = r.digest;
  j["converged"] = r.converged;
  return j;
}

inline SaOptions sa_options(const RunSettings& run) {
  SaOptions o;
  o.seed = run.seed;
  o.budget.override_limit = run.allow_large_schedule;
  o.max_evaluations = run.max_evaluations;
  return o;
}

inline McConfig mc_config(const RunSettings& run, std::optional<double> target) {
  McConfig c;
  c.n_paths = run.n_paths;
  c.seed = run.seed;
  c.antithetic = run.antithetic;
  c.workers = run.workers;
  c.max_paths = run.max_paths;
  c.target_abs_error = target;
  return c;
}

/// Prices once with the requested method; a missed tolerance still yields
/// the best estimate with converged = false.
inline RunRecord run_price(const Config& cfg, Method method, double tol_or_eps) {
  using clock = std::chrono::steady_clock;
  RunRecord rec;
  rec.method = method;
  rec.tol_or_eps = tol_or_eps;
  rec.seed = cfg.run.seed;
  rec.digest = config_digest(cfg);
  auto t0 = clock::now();
  if (method == Method::sa) {
    try {
      PricingResult r = price_semi_analytic(cfg.instrument, cfg.market, tol_or_eps, sa_options(cfg.run));
      rec.value = r.total_value;
      rec.err_est = r.err_est;
    } catch (const PricingConvergenceError& e) {
      rec.value = e.result().total_value;
      rec.err_est = e.result().err_est;
      rec.converged = false;
    }
  } else {
    std::optional<double> target;
    if (tol_or_eps > 0.0) target = tol_or_eps;
    try {
      McEstimate e = simulate_price(cfg.instrument, cfg.market, mc_config(cfg.run, target));
      rec.value = e.value;
      rec.err_est = e.std_error;
      rec.n_paths = e.n_paths_used;
    } catch (const McConvergenceError& e) {
      rec.value = e.estimate().value;
      rec.err_est = e.estimate().std_error;
      rec.n_paths = e.estimate().n_paths_used;
      rec.converged = false;
    }
  }
  rec.runtime_seconds = std::chrono::duration<double>(clock::now() - t0).count();
  return rec;
}

inline constexpr const char* kBenchCsvHeader = "method,eps,value,err_est,runtime_seconds,n_paths,seed";

inline std::string csv_row(const RunRecord& r) {
  return method_name(r.method) + "," + format_number(r.tol_or_eps) + "," + format_number(r.value) +
         "," + format_number(r.err_est) + "," + format_runtime(r.runtime_seconds) + "," +
         std::to_string(r.n_paths) + "," + std::to_string(r.seed);
}

/// Least-squares slope of log(runtime) against log(eps).
inline std::optional<double> loglog_slope(const std::vector<RunRecord>& rows) {
  std::vector<double> x, y;
  for (const auto& r : rows) {
    if (r.runtime_seconds > 0.0 && r.tol_or_eps > 0.0) {
      x.push_back(std::log(r.tol_or_eps));
      y.push_back(std::log(r.runtime_seconds));
    }
  }
  if (x.size() < 2) return std::nullopt;
  const double n = static_cast<double>(x.size());
  double mx = 0, my = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    mx += x[i] / n;
    my += y[i] / n;
  }
  double sxy = 0, sxx = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxy += (x[i] - mx) * (y[i] - my);
    sxx += (x[i] - mx) * (x[i] - mx);
  }
  if (sxx == 0.0) return std::nullopt;
  return sxy / sxx;
}

/// eps at which the SA and MC runtime curves cross, interpolated in log-log
/// between the first bracketing pair of grid points; nullopt when the
/// curves do not intersect on the grid.
inline std::optional<double> runtime_crossover(const std::vector<RunRecord>& sa,
                                               const std::vector<RunRecord>& mc) {
  if (sa.size() != mc.size() || sa.size() < 2) return std::nullopt;
  auto gap = [&](std::size_t j) {
    return std::log(std::max(sa[j].runtime_seconds, 1e-9)) -
           std::log(std::max(mc[j].runtime_seconds, 1e-9));
  };
  for (std::size_t j = 0; j + 1 < sa.size(); ++j) {
    double g0 = gap(j), g1 = gap(j + 1);
    if (g0 == 0.0) return sa[j].tol_or_eps;
    if ((g0 > 0.0) != (g1 > 0.0)) {
      double l0 = std::log(sa[j].tol_or_eps), l1 = std::log(sa[j + 1].tol_or_eps);
      return std::exp(l0 + (l1 - l0) * g0 / (g0 - g1));
    }
  }
  return std::nullopt;
}

struct BenchTable {
  std::vector<RunRecord> sa;
  std::vector<RunRecord> mc;
  std::optional<double> mc_slope;
  std::optional<double> crossover;
};

inline BenchTable run_bench(const Config& cfg, const std::vector<double>& eps, bool with_sa,
                            bool with_mc) {
  BenchTable t;
  for (double e : eps) {
    if (with_sa) t.sa.push_back(run_price(cfg, Method::sa, e));
    if (with_mc) t.mc.push_back(run_price(cfg, Method::mc, e));
  }
  if (with_mc) t.mc_slope = loglog_slope(t.mc);
  if (with_sa && with_mc) t.crossover = runtime_crossover(t.sa, t.mc);
  return t;
}

/// CSV with one row per (method, eps), then summary rows MC_SLOPE (slope in
/// the value column) and CROSSOVER (crossover eps in the eps column).
inline std::string bench_csv(const BenchTable& t, std::uint64_t seed) {
  std::string out = std::string(kBenchCsvHeader) + "\n";
  for (const auto& r : t.sa) out += csv_row(r) + "\n";
  for (const auto& r : t.mc) out += csv_row(r) + "\n";
  if (t.mc_slope) out += "MC_SLOPE,," + format_number(*t.mc_slope) + ",,,," + std::to_string(seed) + "\n";
  if (t.crossover) out += "CROSSOVER," + format_number(*t.crossover) + ",,,,," + std::to_string(seed) + "\n";
  return out;
}

// ---------------------------------------------------------------------------
// Validation suite

enum class LemmaStatus { pass, fail, domain_error };

struct LemmaCase {
  int m = 0, n = 0;
  LemmaResult result;
  LemmaStatus status = LemmaStatus::pass;
  std::string message;
};

struct LemmaSuiteReport {
  std::vector<LemmaCase> cases;
  int passed = 0, failed = 0, domain_errors = 0;

  double pass_rate() const {
    int judged = passed + failed;
    return judged > 0 ? static_cast<double>(passed) / judged : 0.0;
  }
};

inline LemmaCase run_lemma_case(const LemmaInstance& inst, std::int64_t samples, std::uint64_t seed) {
  LemmaCase c;
  c.m = static_cast<int>(inst.B.rows());
  c.n = static_cast<int>(inst.B.cols());
  try {
    c.result = lemma1_check(inst, samples, seed);
    c.status = c.result.passes() ? LemmaStatus::pass : LemmaStatus::fail;
  } catch (const DomainError& e) {
    c.status = LemmaStatus::domain_error;
    c.message = e.what();
  }
  return c;
}

/// `count` random instances (m <= max_m, n <= max_n); when
/// inject_rank_deficient is set one extra instance with duplicated rows is
/// appended.
inline LemmaSuiteReport run_lemma_suite(int count, int max_m, int max_n, std::int64_t samples,
                                        std::uint64_t seed, bool inject_rank_deficient = false) {
  if (count < 1) throw DomainError("lemma suite needs count >= 1");
  std::mt19937_64 rng(splitmix64(seed));
  std::vector<LemmaInstance> instances;
  for (int i = 0; i < count; ++i) instances.push_back(random_lemma_instance(rng, max_m, max_n));
  if (inject_rank_deficient) {
    LemmaInstance bad;
    bad.B = Eigen::MatrixXd::Ones(2, 3);
    bad.R = Eigen::MatrixXd::Identity(3, 3);
    bad.b = Eigen::VectorXd::Zero(2);
    instances.push_back(bad);
  }
  LemmaSuiteReport rep;
  for (std::size_t i = 0; i < instances.size(); ++i) {
    LemmaCase c = run_lemma_case(instances[i], samples, splitmix64(seed + 1 + i));
    if (c.status == LemmaStatus::pass) ++rep.passed;
    if (c.status == LemmaStatus::fail) ++rep.failed;
    if (c.status == LemmaStatus::domain_error) ++rep.domain_errors;
    rep.cases.push_back(std::move(c));
  }
  return rep;
}

inline std::string lemma_report_lines(const LemmaSuiteReport& rep) {
  std::string out;
  for (std::size_t i = 0; i < rep.cases.size(); ++i) {
    const auto& c = rep.cases[i];
    nlohmann::ordered_json j;
    j["instance"] = i;
    j["m"] = c.m;
    j["n"] = c.n;
    if (c.status == LemmaStatus::domain_error) {
      j["status"] = "domain_error";
      j["message"] = c.message;
    } else {
      j["lhs_mc"] = c.result.lhs_mc;
      j["rhs_formula"] = c.result.rhs_formula;
      j["mc_se"] = c.result.mc_se;
      j["status"] = c.status == LemmaStatus::pass ? "pass" : "fail";
    }
    out += j.dump() + "\n";
  }
  nlohmann::ordered_json s;
  s["summary"] = true;
  s["count"] = rep.cases.size();
  s["passed"] = rep.passed;
  s["failed"] = rep.failed;
  s["domain_errors"] = rep.domain_errors;
  s["pass_rate"] = rep.pass_rate();
  out += s.dump() + "\n";
  return out;
}

}  // namespace acnote
