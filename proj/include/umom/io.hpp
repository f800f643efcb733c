#pragma once

#include <charconv>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <string_view>
#include <system_error>
#include <vector>

#include <json.hpp>

#include "umom/distributions.hpp"
#include "umom/errors.hpp"
#include "umom/estimators.hpp"
#include "umom/harness.hpp"

namespace umom {

// ---------------------------------------------------------------------------
// Number formatting and parsing. All persisted numbers use the shortest
// decimal form that parses back to the identical double, so outputs are
// byte-stable and exactly comparable.
// ---------------------------------------------------------------------------

inline std::string format_double(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

inline std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r'))
    s.remove_suffix(1);
  return s;
}

inline double parse_double(std::string_view s, const std::string& what) {
  s = trim(s);
  double v = 0.0;
  const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (res.ec != std::errc{} || res.ptr != s.data() + s.size() || !std::isfinite(v))
    throw ConfigError(what + ": not a finite number: '" + std::string(s) + "'");
  return v;
}

inline std::uint64_t parse_u64(std::string_view s, const std::string& what) {
  s = trim(s);
  std::uint64_t v = 0;
  const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (res.ec != std::errc{} || res.ptr != s.data() + s.size())
    throw ConfigError(what + ": not a nonnegative integer: '" + std::string(s) + "'");
  return v;
}

inline std::vector<std::string> split_list(std::string_view s, char delim) {
  std::vector<std::string> out;
  std::size_t start = 0;
  for (std::size_t i = 0; i <= s.size(); ++i) {
    if (i == s.size() || s[i] == delim) {
      const auto piece = trim(s.substr(start, i - start));
      if (!piece.empty()) out.emplace_back(piece);
      start = i + 1;
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Config files: flat "key = value" lines grouped under [command] sections.
// '#' starts a full-line comment. Duplicate keys are rejected — configs are
// meant to be diffable, not layered.
// ---------------------------------------------------------------------------

struct ConfigFile {
  std::map<std::string, std::map<std::string, std::string>> sections;
};

inline ConfigFile parse_config_text(const std::string& text) {
  ConfigFile cfg;
  std::string current;
  std::istringstream in(text);
  std::string raw;
  std::size_t line_no = 0;
  while (std::getline(in, raw)) {
    ++line_no;
    const auto line = trim(raw);
    if (line.empty() || line.front() == '#') continue;
    if (line.front() == '[') {
      if (line.back() != ']')
        throw ConfigError("config line " + std::to_string(line_no) +
                          ": malformed section header");
      current = std::string(trim(line.substr(1, line.size() - 2)));
      if (current.empty())
        throw ConfigError("config line " + std::to_string(line_no) +
                          ": empty section name");
      cfg.sections[current];
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string_view::npos)
      throw ConfigError("config line " + std::to_string(line_no) +
                        ": expected 'key = value'");
    if (current.empty())
      throw ConfigError("config line " + std::to_string(line_no) +
                        ": key outside of a [section]");
    const std::string key(trim(line.substr(0, eq)));
    const std::string value(trim(line.substr(eq + 1)));
    if (key.empty())
      throw ConfigError("config line " + std::to_string(line_no) + ": empty key");
    auto& section = cfg.sections[current];
    if (!section.emplace(key, value).second)
      throw ConfigError("config line " + std::to_string(line_no) +
                        ": duplicate key '" + key + "'");
  }
  return cfg;
}

// Pull-based view over a section merged with command-line overrides;
// whatever is left unconsumed is reported as unknown keys.
class Settings {
 public:
  Settings(std::map<std::string, std::string> kv) : kv_(std::move(kv)) {}

  static Settings from(const ConfigFile& cfg, const std::string& section,
                       const std::map<std::string, std::string>& overrides) {
    std::map<std::string, std::string> kv;
    const auto it = cfg.sections.find(section);
    if (it != cfg.sections.end()) kv = it->second;
    for (const auto& [k, v] : overrides) kv[k] = v;
    return Settings(std::move(kv));
  }

  std::optional<std::string> take(const std::string& key) {
    const auto it = kv_.find(key);
    if (it == kv_.end()) return std::nullopt;
    std::string v = it->second;
    kv_.erase(it);
    return v;
  }

  std::string require(const std::string& key) {
    auto v = take(key);
    if (!v) missing_.insert(key);
    return v.value_or("");
  }

  // Call after all takes: reports missing required keys and unknown leftovers.
  void finish(const std::string& section) const {
    if (!missing_.empty()) {
      std::string msg = "missing required config keys in [" + section + "]:";
      for (const auto& k : missing_) msg += " " + k;
      throw ConfigError(msg);
    }
    if (!kv_.empty()) {
      std::string msg = "unknown config keys in [" + section + "]:";
      for (const auto& [k, v] : kv_) msg += " " + k;
      throw ConfigError(msg);
    }
  }

 private:
  std::map<std::string, std::string> kv_;
  std::set<std::string> missing_;
};

// ---------------------------------------------------------------------------
// Distribution spec text form: family(name=value,...) with canonical
// parameter names; parse/print round-trips exactly.
// ---------------------------------------------------------------------------

inline std::string to_config_string(const DistributionSpec& spec) {
  switch (spec.family) {
    case Family::gaussian:
      return "gaussian(mu=" + format_double(spec.p1) +
             ",sigma=" + format_double(spec.p2) + ")";
    case Family::student_t:
      return "student_t(nu=" + format_double(spec.p1) + ")";
    case Family::pareto:
      return "pareto(alpha=" + format_double(spec.p1) +
             ",scale=" + format_double(spec.p2) + ")";
    case Family::lognormal:
      return "lognormal(mulog=" + format_double(spec.p1) +
             ",sigmalog=" + format_double(spec.p2) + ")";
    case Family::rademacher:
      return "rademacher";
  }
  throw ConfigError("unknown distribution family");
}

inline DistributionSpec parse_distribution(std::string_view text) {
  const auto s = trim(text);
  std::string name;
  std::map<std::string, double> params;
  const auto paren = s.find('(');
  if (paren == std::string_view::npos) {
    name = std::string(trim(s));
  } else {
    if (s.back() != ')')
      throw ConfigError("distribution: missing ')' in '" + std::string(s) + "'");
    name = std::string(trim(s.substr(0, paren)));
    const auto body = s.substr(paren + 1, s.size() - paren - 2);
    for (const auto& piece : split_list(body, ',')) {
      const auto eq = piece.find('=');
      if (eq == std::string::npos)
        throw ConfigError("distribution: expected name=value, got '" + piece + "'");
      const std::string key(trim(std::string_view(piece).substr(0, eq)));
      const double val = parse_double(std::string_view(piece).substr(eq + 1),
                                      "distribution parameter " + key);
      if (!params.emplace(key, val).second)
        throw ConfigError("distribution: duplicate parameter '" + key + "'");
    }
  }
  auto take = [&](const std::string& key, std::optional<double> fallback) {
    const auto it = params.find(key);
    if (it == params.end()) {
      if (fallback) return *fallback;
      throw ConfigError("distribution " + name + ": missing parameter '" + key + "'");
    }
    const double v = it->second;
    params.erase(it);
    return v;
  };
  DistributionSpec spec;
  if (name == "gaussian") {
    const double mu = take("mu", 0.0);
    const double sigma = take("sigma", 1.0);
    spec = make_gaussian(mu, sigma);
  } else if (name == "student_t") {
    spec = make_student_t(take("nu", std::nullopt));
  } else if (name == "pareto") {
    const double alpha = take("alpha", std::nullopt);
    const double scale = take("scale", 1.0);
    spec = make_pareto(alpha, scale);
  } else if (name == "lognormal") {
    const double mu_log = take("mulog", 0.0);
    const double sigma_log = take("sigmalog", 1.0);
    spec = make_lognormal(mu_log, sigma_log);
  } else if (name == "rademacher") {
    spec = make_rademacher();
  } else {
    throw ConfigError("unknown distribution family: '" + name + "'");
  }
  if (!params.empty())
    throw ConfigError("distribution " + name + ": unknown parameter '" +
                      params.begin()->first + "'");
  return spec;
}

// ---------------------------------------------------------------------------
// Data files: one finite decimal per line; blank lines and lines starting
// with '#' are skipped. Parse failures carry the 1-based line number.
// ---------------------------------------------------------------------------

inline std::vector<double> read_data_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open input file: " + path.string());
  std::vector<double> values;
  std::string raw;
  std::size_t line_no = 0;
  while (std::getline(in, raw)) {
    ++line_no;
    const auto line = trim(raw);
    if (line.empty() || line.front() == '#') continue;
    double v = 0.0;
    const auto res = std::from_chars(line.data(), line.data() + line.size(), v);
    if (res.ec != std::errc{} || res.ptr != line.data() + line.size() ||
        !std::isfinite(v))
      throw DataError("line " + std::to_string(line_no) + ": not a number");
    values.push_back(v);
  }
  if (values.empty()) throw DataError("no data in input file: " + path.string());
  return values;
}

// Write-temp-then-rename so partially written results are never observed.
inline void atomic_write_file(const std::filesystem::path& path,
                              const std::string& content) {
  const auto dir = path.parent_path().empty() ? std::filesystem::path(".")
                                              : path.parent_path();
  std::filesystem::create_directories(dir);
  const auto tmp = dir / ("." + path.filename().string() + ".tmp");
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw DataError("cannot write file: " + tmp.string());
    out << content;
    if (!out) throw DataError("write failed: " + tmp.string());
  }
  std::filesystem::rename(tmp, path);
}

inline std::string read_text_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open file: " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

// ---------------------------------------------------------------------------
// CSV and JSON serialization. Schemas are pinned; see README.
// ---------------------------------------------------------------------------

inline constexpr const char* kTailCsvHeader =
    "estimator,t,threshold,p_hat,p_stderr,c_hat,censored_flag,var_scaled,var_stderr";

inline std::string tail_curves_csv(const std::vector<TailCurve>& curves) {
  std::string out(kTailCsvHeader);
  out += '\n';
  for (const auto& curve : curves) {
    for (const auto& pt : curve.points) {
      out += curve.estimator_id;
      out += ',';
      out += format_double(pt.t);
      out += ',';
      out += format_double(pt.threshold);
      out += ',';
      out += format_double(pt.p_hat);
      out += ',';
      out += format_double(pt.p_stderr);
      out += ',';
      out += format_double(pt.c_hat);
      out += ',';
      out += pt.censored ? '1' : '0';
      out += ',';
      out += format_double(curve.var_scaled);
      out += ',';
      out += format_double(curve.var_stderr);
      out += '\n';
    }
  }
  return out;
}

inline nlohmann::json json_of_plan(const BlockPlan& plan) {
  return nlohmann::json{{"N_total", plan.N_total}, {"k", plan.k},
                        {"l", plan.l},             {"n", plan.n},
                        {"b", plan.b},             {"m", plan.m},
                        {"N_used", plan.N_used}};
}

inline nlohmann::json json_of_design(const SubsetDesignInfo& d) {
  nlohmann::json j{{"kind", d.kind == SubsetDesignInfo::Kind::exact
                                ? "exact"
                                : "subsampled"},
                   {"n", d.n},
                   {"l", d.l}};
  if (d.kind == SubsetDesignInfo::Kind::subsampled) {
    j["T"] = d.T;
    j["seed"] = d.seed;
  }
  return j;
}

inline nlohmann::json json_of_curves(const std::vector<TailCurve>& curves) {
  nlohmann::json arr = nlohmann::json::array();
  for (const auto& curve : curves) {
    nlohmann::json points = nlohmann::json::array();
    for (const auto& pt : curve.points) {
      points.push_back({{"t", pt.t},
                        {"threshold", pt.threshold},
                        {"p_hat", pt.p_hat},
                        {"p_stderr", pt.p_stderr},
                        {"c_hat", pt.c_hat},
                        {"censored", pt.censored},
                        {"dev_quantile", pt.dev_quantile}});
    }
    arr.push_back({{"estimator", curve.estimator_id},
                   {"var_scaled", curve.var_scaled},
                   {"var_stderr", curve.var_stderr},
                   {"points", points}});
  }
  return arr;
}

inline nlohmann::json json_of_comparison(const ComparisonTable& table) {
  nlohmann::json rows = nlohmann::json::array();
  for (const auto& row : table.rows)
    rows.push_back({{"t", row.t}, {"quantile_ratio", row.quantile_ratio}});
  return nlohmann::json{{"target", table.target_id},
                        {"baseline", table.baseline_id},
                        {"var_ratio", table.var_ratio},
                        {"rows", rows}};
}

}  // namespace umom
