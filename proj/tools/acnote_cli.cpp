// Command-line front end: price, bench, validate-lemma.

#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "acnote/bench.hpp"
#include "acnote/config.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitError = 1;
constexpr int kExitInvalidConfig = 2;
constexpr int kExitNotConverged = 3;

void emit(const std::string& text, const std::string& out_path) {
  if (out_path.empty()) {
    std::cout << text << std::flush;
    return;
  }
  std::ofstream out(out_path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + out_path);
  out << text;
}

acnote::Method parse_method(const std::string& s, acnote::Method fallback) {
  if (s.empty()) return fallback;
  return s == "mc" ? acnote::Method::mc : acnote::Method::sa;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Auto-callable range-accrual note pricer"};
  app.require_subcommand(1);

  std::string config_path, method, out_path;
  double tol = 0.0;
  std::vector<double> eps;
  std::uint64_t seed = 0;
  bool omit_timing = false;

  auto* price = app.add_subcommand("price", "Price one instrument with SA or MC");
  price->add_option("--config", config_path, "Config JSON")->required();
  price->add_option("--method", method, "sa|mc")->check(CLI::IsMember({"sa", "mc"}));
  price->add_option("--tol", tol, "SA absolute tolerance / MC target standard error");
  price->add_option("--eps", eps, "Alias of --tol")->delimiter(',');
  auto* price_seed = price->add_option("--seed", seed, "Random seed");
  price->add_option("--out", out_path, "Write the record here instead of stdout");
  price->add_flag("--omit-timing", omit_timing, "Report runtime_seconds as 0");

  std::string bench_method = "both";
  auto* bench = app.add_subcommand("bench", "Runtime versus absolute error for SA and MC");
  bench->add_option("--config", config_path, "Config JSON")->required();
  bench->add_option("--eps", eps, "Descending error grid")->delimiter(',');
  bench->add_option("--method", bench_method, "sa|mc|both")->check(CLI::IsMember({"sa", "mc", "both"}));
  auto* bench_seed = bench->add_option("--seed", seed, "Random seed");
  bench->add_option("--out", out_path, "CSV output path");
  bench->add_flag("--omit-timing", omit_timing, "Report runtime_seconds as 0");

  int count = 50;
  std::vector<int> dims{4, 6};
  std::int64_t samples = 1'000'000;
  bool inject = false;
  auto* lemma = app.add_subcommand("validate-lemma", "Simulation check of the Gaussian transform identity");
  lemma->add_option("--count", count, "Number of random instances")->check(CLI::PositiveNumber);
  lemma->add_option("--dims", dims, "max_m,max_n")->delimiter(',')->expected(2);
  lemma->add_option("--samples", samples, "Monte Carlo samples per instance");
  lemma->add_option("--seed", seed, "Random seed");
  lemma->add_flag("--inject-rank-deficient", inject, "Append one rank-deficient instance");
  lemma->add_option("--out", out_path, "Report output path");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*lemma) {
      if (dims[0] < 1 || dims[1] < dims[0]) throw std::runtime_error("--dims needs 1 <= max_m <= max_n");
      auto rep = acnote::run_lemma_suite(count, dims[0], dims[1], samples, seed, inject);
      emit(acnote::lemma_report_lines(rep), out_path);
      return kExitOk;
    }

    acnote::Config cfg;
    try {
      cfg = acnote::load_config(config_path);
    } catch (const acnote::ConfigError& e) {
      std::cerr << "invalid config: " << e.what() << "\n";
      return kExitInvalidConfig;
    }

    if (*price) {
      if (*price_seed) cfg.run.seed = seed;
      acnote::Method m = parse_method(method, cfg.run.method);
      double level = tol > 0.0 ? tol : (!eps.empty() ? eps.front() : 0.0);
      if (level <= 0.0) level = m == acnote::Method::sa ? cfg.run.tol : (cfg.run.eps.empty() ? 0.0 : cfg.run.eps.front());
      if (m == acnote::Method::sa && !(level > 0.0)) {
        std::cerr << "invalid config: run.tol must be positive\n";
        return kExitInvalidConfig;
      }
      acnote::RunRecord rec = acnote::run_price(cfg, m, level);
      if (omit_timing) rec.runtime_seconds = 0.0;
      emit(acnote::to_json(rec).dump() + "\n", out_path);
      return rec.converged ? kExitOk : kExitNotConverged;
    }

    if (*bench) {
      if (*bench_seed) cfg.run.seed = seed;
      if (eps.empty()) eps = cfg.run.eps;
      if (eps.empty()) {
        std::cerr << "invalid config: bench needs --eps or run.eps\n";
        return kExitInvalidConfig;
      }
      for (double e : eps) {
        if (!(e > 0.0)) {
          std::cerr << "invalid config: eps entries must be positive\n";
          return kExitInvalidConfig;
        }
      }
      bool with_sa = bench_method != "mc";
      bool with_mc = bench_method != "sa";
      acnote::BenchTable t = acnote::run_bench(cfg, eps, with_sa, with_mc);
      bool converged = true;
      for (auto* rows : {&t.sa, &t.mc}) {
        for (auto& r : *rows) {
          converged = converged && r.converged;
          if (omit_timing) r.runtime_seconds = 0.0;
        }
      }
      if (omit_timing) {
        t.crossover.reset();
        t.mc_slope.reset();
      }
      emit(acnote::bench_csv(t, cfg.run.seed), out_path);
      return converged ? kExitOk : kExitNotConverged;
    }
  } catch (const acnote::DomainError& e) {
    std::cerr << "domain error: " << e.what() << "\n";
    return kExitInvalidConfig;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitError;
  }
  return kExitOk;
}
