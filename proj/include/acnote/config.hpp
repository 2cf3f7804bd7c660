#pragma once

/**
 * @file config.hpp
 * @brief JSON run configuration: sections `instrument`, `market`, `run`.
 *
 * Curves are arrays of [breakpoint, value] pairs; the correlation is a full
 * symmetric 2x2 matrix.
 */

#include <cstdint>
#include <cstdio>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "acnote/errors.hpp"
#include "acnote/instrument.hpp"
#include "acnote/term_structures.hpp"

namespace acnote {

/// Parse or validation failure; `field()` is the dotted path of the culprit.
class ConfigError : public std::runtime_error {
 public:
  ConfigError(std::string field, const std::string& what)
      : std::runtime_error(field + ": " + what), field_(std::move(field)) {}
  const std::string& field() const noexcept { return field_; }

 private:
  std::string field_;
};

enum class Method { sa, mc };

struct RunSettings {
  Method method = Method::sa;
  double tol = 1e-4;
  std::vector<double> eps;
  std::uint64_t seed = 0;
  std::int64_t n_paths = 100'000;
  bool antithetic = false;
  bool allow_large_schedule = false;
  int workers = 0;
  std::int64_t max_evaluations = 50'000'000;  // SA kernel budget per MVN call
  std::int64_t max_paths = 200'000'000;       // MC path cap in target-error mode
};

struct Config {
  Instrument instrument;
  MarketData market;
  RunSettings run;
};

namespace detail {

using nlohmann::json;

inline const json& require(const json& obj, const std::string& section, const char* key) {
  const std::string path = section + "." + key;
  if (!obj.is_object() || !obj.contains(key)) throw ConfigError(path, "missing field");
  return obj.at(key);
}

inline double as_number(const json& v, const std::string& path) {
  if (!v.is_number()) throw ConfigError(path, "expected a number");
  return v.get<double>();
}

inline std::array<double, kNumAssets> as_pair(const json& v, const std::string& path) {
  if (!v.is_array() || v.size() != kNumAssets) throw ConfigError(path, "expected two numbers");
  return {as_number(v[0], path), as_number(v[1], path)};
}

inline PiecewiseCurve as_curve(const json& v, const std::string& path) {
  if (!v.is_array() || v.empty()) throw ConfigError(path, "expected [[t, value], ...]");
  std::vector<double> t, x;
  for (const auto& p : v) {
    auto pr = as_pair(p, path);
    t.push_back(pr[0]);
    x.push_back(pr[1]);
  }
  try {
    return PiecewiseCurve(std::move(t), std::move(x));
  } catch (const DomainError& e) {
    throw ConfigError(path, e.what());
  }
}

inline json curve_to_json(const PiecewiseCurve& c) {
  json out = json::array();
  for (std::size_t j = 0; j < c.breakpoints().size(); ++j)
    out.push_back({c.breakpoints()[j], c.values()[j]});
  return out;
}

inline std::uint64_t fnv1a64(const std::string& s) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char ch : s) {
    h ^= ch;
    h *= 0x100000001b3ULL;
  }
  return h;
}

}  // namespace detail

inline Config parse_config(const nlohmann::json& doc) {
  using detail::as_curve;
  using detail::as_number;
  using detail::as_pair;
  using detail::require;
  Config cfg;

  const auto& ji = require(doc, "config", "instrument");
  Instrument& inst = cfg.instrument;
  const auto& times = require(ji, "instrument", "observation_times");
  if (!times.is_array() || times.empty())
    throw ConfigError("instrument.observation_times", "expected a non-empty array");
  for (const auto& t : times) inst.observation_times.push_back(as_number(t, "instrument.observation_times"));
  if (ji.contains("autocall_barriers")) {
    const auto& ab = ji.at("autocall_barriers");
    if (!ab.is_array()) throw ConfigError("instrument.autocall_barriers", "expected an array");
    for (const auto& row : ab) inst.autocall_barriers.push_back(as_pair(row, "instrument.autocall_barriers"));
  }
  inst.accrual_barriers = as_pair(require(ji, "instrument", "accrual_barriers"), "instrument.accrual_barriers");
  inst.final_barrier_frac = as_number(require(ji, "instrument", "final_barrier_frac"), "instrument.final_barrier_frac");
  inst.daily_coupon = as_number(require(ji, "instrument", "daily_coupon"), "instrument.daily_coupon");
  inst.issue_spots = as_pair(require(ji, "instrument", "issue_spots"), "instrument.issue_spots");
  const auto& mode = require(ji, "instrument", "redemption_mode");
  auto parsed_mode = mode.is_string() ? parse_redemption_mode(mode.get<std::string>()) : std::nullopt;
  if (!parsed_mode) throw ConfigError("instrument.redemption_mode", "expected worst_of or kappa_floor");
  inst.redemption = *parsed_mode;

  const auto& jm = require(doc, "config", "market");
  MarketData& mkt = cfg.market;
  mkt.spot = as_pair(require(jm, "market", "spots"), "market.spots");
  mkt.rate = as_curve(require(jm, "market", "rate"), "market.rate");
  const auto& divs = require(jm, "market", "dividends");
  const auto& vols = require(jm, "market", "vols");
  if (!divs.is_array() || divs.size() != kNumAssets) throw ConfigError("market.dividends", "expected two curves");
  if (!vols.is_array() || vols.size() != kNumAssets) throw ConfigError("market.vols", "expected two curves");
  for (int i = 0; i < kNumAssets; ++i) {
    mkt.dividend[i] = as_curve(divs[i], "market.dividends");
    try {
      mkt.vol[i] = VolatilityCurve(as_curve(vols[i], "market.vols"));
    } catch (const DomainError& e) {
      throw ConfigError("market.vols", e.what());
    }
  }
  const auto& corr = require(jm, "market", "correlation");
  if (!corr.is_array() || corr.size() != kNumAssets) throw ConfigError("market.correlation", "expected a 2x2 matrix");
  for (int i = 0; i < kNumAssets; ++i) mkt.correlation[i] = as_pair(corr[i], "market.correlation");

  if (doc.contains("run")) {
    const auto& jr = doc.at("run");
    RunSettings& run = cfg.run;
    if (jr.contains("method")) {
      std::string m = jr.at("method").get<std::string>();
      if (m == "sa") run.method = Method::sa;
      else if (m == "mc") run.method = Method::mc;
      else throw ConfigError("run.method", "expected sa or mc");
    }
    if (jr.contains("tol")) run.tol = as_number(jr.at("tol"), "run.tol");
    if (jr.contains("eps"))
      for (const auto& e : jr.at("eps")) run.eps.push_back(as_number(e, "run.eps"));
    if (jr.contains("seed")) run.seed = jr.at("seed").get<std::uint64_t>();
    if (jr.contains("n_paths")) run.n_paths = jr.at("n_paths").get<std::int64_t>();
    if (jr.contains("antithetic")) run.antithetic = jr.at("antithetic").get<bool>();
    if (jr.contains("allow_large_schedule")) run.allow_large_schedule = jr.at("allow_large_schedule").get<bool>();
    if (jr.contains("workers")) run.workers = jr.at("workers").get<int>();
    if (jr.contains("max_evaluations")) run.max_evaluations = jr.at("max_evaluations").get<std::int64_t>();
    if (jr.contains("max_paths")) run.max_paths = jr.at("max_paths").get<std::int64_t>();
    if (run.max_evaluations < 1) throw ConfigError("run.max_evaluations", "must be positive");
    if (run.max_paths < 256) throw ConfigError("run.max_paths", "must be at least 256");
  }

  // Semantic validation; map the failing field into the message.
  try {
    inst.validate();
  } catch (const DomainError& e) {
    std::string msg = e.what();
    throw ConfigError(msg.substr(0, msg.find(' ')), msg);
  }
  try {
    mkt.validate();
  } catch (const DomainError& e) {
    std::string msg = e.what();
    throw ConfigError(msg.substr(0, msg.find(' ')), msg);
  }
  return cfg;
}

inline Config load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("config", "cannot open " + path);
  nlohmann::json doc;
  try {
    in >> doc;
  } catch (const nlohmann::json::parse_error& e) {
    throw ConfigError("config", std::string("invalid JSON: ") + e.what());
  }
  return parse_config(doc);
}

inline nlohmann::json to_json(const Config& cfg) {
  using nlohmann::json;
  const Instrument& inst = cfg.instrument;
  json ji;
  ji["observation_times"] = inst.observation_times;
  if (!inst.autocall_barriers.empty()) {
    json ab = json::array();
    for (const auto& row : inst.autocall_barriers) ab.push_back({row[0], row[1]});
    ji["autocall_barriers"] = ab;
  }
  ji["accrual_barriers"] = {inst.accrual_barriers[0], inst.accrual_barriers[1]};
  ji["final_barrier_frac"] = inst.final_barrier_frac;
  ji["daily_coupon"] = inst.daily_coupon;
  ji["issue_spots"] = {inst.issue_spots[0], inst.issue_spots[1]};
  ji["redemption_mode"] = std::string(to_string(inst.redemption));

  const MarketData& m = cfg.market;
  json jm;
  jm["spots"] = {m.spot[0], m.spot[1]};
  jm["rate"] = detail::curve_to_json(m.rate);
  jm["dividends"] = {detail::curve_to_json(m.dividend[0]), detail::curve_to_json(m.dividend[1])};
  jm["vols"] = {detail::curve_to_json(m.vol[0]), detail::curve_to_json(m.vol[1])};
  jm["correlation"] = {{m.correlation[0][0], m.correlation[0][1]},
                       {m.correlation[1][0], m.correlation[1][1]}};

  const RunSettings& r = cfg.run;
  json jr;
  jr["method"] = r.method == Method::sa ? "sa" : "mc";
  jr["tol"] = r.tol;
  jr["eps"] = r.eps;
  jr["seed"] = r.seed;
  jr["n_paths"] = r.n_paths;
  jr["antithetic"] = r.antithetic;
  jr["allow_large_schedule"] = r.allow_large_schedule;
  jr["workers"] = r.workers;
  jr["max_evaluations"] = r.max_evaluations;
  jr["max_paths"] = r.max_paths;

  return json{{"instrument", ji}, {"market", jm}, {"run", jr}};
}

/// Content hash of the canonical serialization. Object keys are emitted in
/// sorted order, so the digest ignores key order in the source file.
inline std::string config_digest(const Config& cfg) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx",
                static_cast<unsigned long long>(detail::fnv1a64(to_json(cfg).dump())));
  return buf;
}

}  // namespace acnote
