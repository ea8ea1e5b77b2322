#pragma once

#include <cctype>
#include <cstdint>
#include <fstream>
#include <functional>
#include <map>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "ustash/io.hpp"
#include "ustash/model.hpp"
#include "ustash/sim.hpp"
#include "ustash/units.hpp"
#include "ustash/workload.hpp"

// Experiment configuration: a plain-text document of `key = value` lines with
// dotted keys and optional `[section]` headers (TOML subset). Every key has a
// default; an empty file yields the reference configuration. See
// docs/config.md for the schema.
namespace ustash::config {

enum class ErrorKind { Parse = 2, UnknownKey = 3, Domain = 4, Io = 5 };

class ConfigError : public std::runtime_error {
 public:
  ConfigError(ErrorKind kind, std::string key, const std::string& what)
      : std::runtime_error(key.empty() ? what : key + ": " + what),
        kind_(kind),
        key_(std::move(key)) {}

  ErrorKind kind() const { return kind_; }
  const std::string& key() const { return key_; }
  int exit_code() const { return static_cast<int>(kind_); }

 private:
  ErrorKind kind_;
  std::string key_;
};

enum class SweepParam { X, S, RV, OmegaRatio };

inline std::string_view to_string(SweepParam p) {
  switch (p) {
    case SweepParam::X: return "x";
    case SweepParam::S: return "s";
    case SweepParam::RV: return "r_v";
    case SweepParam::OmegaRatio: return "omega_ratio";
  }
  return "?";
}

inline std::optional<SweepParam> parse_sweep_param(std::string_view s) {
  if (s == "x") return SweepParam::X;
  if (s == "s") return SweepParam::S;
  if (s == "r_v") return SweepParam::RV;
  if (s == "omega_ratio") return SweepParam::OmegaRatio;
  return std::nullopt;
}

// Default grids: x over [0,1], s over [0.5,2], R_v over 1..400 and the
// user/stash bandwidth ratio over [1/80, 1].
inline std::vector<double> default_grid(SweepParam p) {
  std::vector<double> g;
  switch (p) {
    case SweepParam::X:
      for (int i = 0; i <= 20; ++i) g.push_back(i / 20.0);
      break;
    case SweepParam::S:
      g = {0.5, 0.716, 0.8, 1.0, 1.005, 1.25, 1.5, 1.75, 2.0};
      break;
    case SweepParam::RV:
      g = {1, 50, 100, 200, 400};
      break;
    case SweepParam::OmegaRatio:
      for (int i = 1; i <= 80; ++i) g.push_back(i / 80.0);
      break;
  }
  return g;
}

struct SweepSpec {
  SweepParam param = SweepParam::X;
  std::vector<double> values = default_grid(SweepParam::X);
  std::uint32_t replications = 1;
  std::uint32_t x_points = 101;  // x resolution of the H surface
};

// Which class feeds the aggregate model and with which overrides.
struct ModelSection {
  ContentClass content_class = ContentClass::NonVideo;
  std::uint64_t n = 120627;
  double lambda_e = 1.0;
  model::Gammas gammas;
};

struct ExperimentConfig {
  WorkloadConfig workload = WorkloadConfig::defaults();
  ModelSection model;
  model::NetworkParams net;
  model::CostParams cost;
  sim::SplitPolicy policy = sim::SplitPolicy::optimal();
  sim::HitTime hit_time = sim::HitTime::Consumed;
  std::uint64_t sample_interval = 1000;
  std::vector<std::string> scenarios{"direct", "onboard-wifi", "cache-wifi", "ustash"};
  SweepSpec sweep;
  std::string output_dir = "out";
  std::string format = "csv";

  std::uint64_t seed() const { return workload.seed; }

  model::ModelParams model_params() const {
    model::ModelParams mp;
    const auto& w = workload.of(model.content_class);
    mp.zipf = w.zipf;
    mp.mean_size_mb = w.size.mean_mb();
    mp.lambda_e = model.lambda_e;
    mp.n = model.n;
    mp.net = net;
    mp.cost = cost;
    mp.gammas = model.gammas;
    return mp;
  }

  sim::SimParams sim_params() const {
    sim::SimParams p;
    p.net = net;
    p.cost = cost;
    p.hit_time = hit_time;
    p.sample_interval = sample_interval;
    return p;
  }

  std::vector<sim::Scenario> scenario_list() const {
    std::vector<sim::Scenario> out;
    for (const auto& s : scenarios) out.push_back(sim::scenario_by_name(s));
    return out;
  }
};

// ---------------------------------------------------------------------------
// Raw document
// ---------------------------------------------------------------------------

struct RawValue {
  std::string text;
  bool quoted = false;
  std::size_t line = 0;
};

using RawDocument = std::map<std::string, RawValue>;

namespace detail {

inline std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

inline bool valid_key(std::string_view k) {
  if (k.empty() || k.front() == '.' || k.back() == '.') return false;
  for (char c : k) {
    if (!(std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '.' || c == '-')) {
      return false;
    }
  }
  return k.find("..") == std::string_view::npos;
}

}  // namespace detail

inline RawDocument parse_document(std::istream& is) {
  RawDocument doc;
  std::string section;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    const std::string where = "line " + std::to_string(lineno);
    std::string_view s = detail::trim(line);
    if (s.empty() || s.front() == '#') continue;
    if (s.front() == '[') {
      if (s.back() != ']') throw ConfigError(ErrorKind::Parse, where, "unterminated section header");
      auto name = detail::trim(s.substr(1, s.size() - 2));
      if (!detail::valid_key(name)) throw ConfigError(ErrorKind::Parse, where, "bad section name");
      section = std::string(name) + ".";
      continue;
    }
    auto eq = s.find('=');
    if (eq == std::string_view::npos) throw ConfigError(ErrorKind::Parse, where, "expected key = value");
    auto key = detail::trim(s.substr(0, eq));
    auto val = detail::trim(s.substr(eq + 1));
    if (!detail::valid_key(key)) throw ConfigError(ErrorKind::Parse, where, "bad key");
    RawValue rv;
    rv.line = lineno;
    if (!val.empty() && val.front() == '"') {
      auto close = val.find('"', 1);
      if (close == std::string_view::npos) throw ConfigError(ErrorKind::Parse, where, "unterminated string");
      auto rest = detail::trim(val.substr(close + 1));
      if (!rest.empty() && rest.front() != '#') throw ConfigError(ErrorKind::Parse, where, "trailing text after string");
      rv.text = std::string(val.substr(1, close - 1));
      rv.quoted = true;
    } else {
      auto hash = val.find('#');
      if (hash != std::string_view::npos) val = detail::trim(val.substr(0, hash));
      if (val.empty()) throw ConfigError(ErrorKind::Parse, where, "missing value");
      rv.text = std::string(val);
    }
    std::string full = section + std::string(key);
    if (doc.count(full)) throw ConfigError(ErrorKind::Parse, full, "duplicate key");
    doc.emplace(std::move(full), std::move(rv));
  }
  return doc;
}

// ---------------------------------------------------------------------------
// Schema
// ---------------------------------------------------------------------------

namespace detail {

inline double number(const std::string& key, const RawValue& v) {
  try {
    return io::parse_double(v.text);
  } catch (const std::exception&) {
    throw ConfigError(ErrorKind::Parse, key, "expected a number, got '" + v.text + "'");
  }
}

inline std::uint64_t integer(const std::string& key, const RawValue& v) {
  try {
    return io::parse_u64(v.text);
  } catch (const std::exception&) {
    throw ConfigError(ErrorKind::Parse, key, "expected a non-negative integer, got '" + v.text + "'");
  }
}

template <class F>
double quantity(const std::string& key, const RawValue& v, F&& parse) {
  try {
    return parse(v.text);
  } catch (const units::UnitError& e) {
    throw ConfigError(ErrorKind::Parse, key, e.what());
  }
}

inline bool boolean(const std::string& key, const RawValue& v) {
  if (v.text == "true") return true;
  if (v.text == "false") return false;
  throw ConfigError(ErrorKind::Parse, key, "expected true or false");
}

// List elements from either "a,b" or [a, "b"].
inline std::vector<std::string> list_items(const std::string& key, const RawValue& v) {
  std::string_view body = trim(v.text);
  if (!body.empty() && body.front() == '[') {
    if (body.back() != ']') throw ConfigError(ErrorKind::Parse, key, "unterminated list");
    body = body.substr(1, body.size() - 2);
  }
  std::vector<std::string> out;
  for (auto f : io::split_csv(body)) {
    auto t = trim(f);
    if (t.size() >= 2 && t.front() == '"' && t.back() == '"') t = t.substr(1, t.size() - 2);
    if (!t.empty()) out.emplace_back(t);
  }
  return out;
}

inline std::vector<double> number_list(const std::string& key, const RawValue& v) {
  std::vector<double> out;
  for (const auto& t : list_items(key, v)) out.push_back(number(key, RawValue{t, false, v.line}));
  return out;
}

inline std::vector<std::string> string_list(const std::string& key, const RawValue& v) {
  return list_items(key, v);
}

inline void require(bool ok, const std::string& key, const std::string& what) {
  if (!ok) throw ConfigError(ErrorKind::Domain, key, what);
}

}  // namespace detail

using Setter = std::function<void(ExperimentConfig&, const std::string&, const RawValue&)>;

inline const std::map<std::string, Setter>& schema() {
  using namespace detail;
  static const std::map<std::string, Setter> s = [] {
    std::map<std::string, Setter> m;
    auto class_keys = [&m](const std::string& name, ContentClass c) {
      m["zipf.m_" + name] = [c](ExperimentConfig& cfg, const std::string& k, const RawValue& v) {
        cfg.workload.of(c).zipf.m = integer(k, v);
      };
      m["size." + name + ".shape"] = [c](ExperimentConfig& cfg, const std::string& k, const RawValue& v) {
        cfg.workload.of(c).size.shape = number(k, v);
      };
      m["size." + name + ".scale"] = [c](ExperimentConfig& cfg, const std::string& k, const RawValue& v) {
        cfg.workload.of(c).size.scale_mb = quantity(k, v, units::parse_size);
      };
    };
    class_keys("nonvideo", ContentClass::NonVideo);
    class_keys("video", ContentClass::Video);

    m["seed"] = [](ExperimentConfig& c, const std::string& k, const RawValue& v) {
      c.workload.seed = integer(k, v);
    };
    m["workload.n_requests"] = [](ExperimentConfig& c, const std::string& k, const RawValue& v) {
      c.workload.n_requests = integer(k, v);
    };
    m["workload.r_v"] = [](ExperimentConfig& c, const std::string& k, const RawValue& v) {
      c.workload.r_v = number(k, v);
    };
    m["zipf.s"] = [](ExperimentConfig& c, const std::string& k, const RawValue& v) {
      c.workload.nonvideo.zipf.s = c.workload.video.zipf.s = number(k, v);
    };
    m["zipf.s_video"] = [](ExperimentConfig& c, const std::string& k, const RawValue& v) {
      c.workload.video.zipf.s = number(k, v);
    };
    m["size.fixed"] = [](ExperimentConfig& c, const std::string& k, const RawValue& v) {
      if (v.text == "none") {
        c.workload.nonvideo.size.fixed_mb.reset();
        c.workload.video.size.fixed_mb.reset();
        return;
      }
      const double mb = quantity(k, v, units::parse_size);
      c.workload.nonvideo.size.fixed_mb = c.workload.video.size.fixed_mb = mb;
    };
    m["view.lambda_e"] = [](ExperimentConfig& c, const std::string& k, const RawValue& v) {
      c.workload.video.view.lambda_e = number(k, v);
    };
    m["network.omega_u"] = [](ExperimentConfig& c, const std::string& k, const RawValue& v) {
      c.net.omega_u = quantity(k, v, units::parse_bandwidth);
    };
    m["network.omega_b"] = [](ExperimentConfig& c, const std::string& k, const RawValue& v) {
      c.net.omega_b = quantity(k, v, units::parse_bandwidth);
    };
    m["network.omega_l"] = [](ExperimentConfig& c, const std::string& k, const RawValue& v) {
      c.net.omega_l = quantity(k, v, units::parse_bandwidth);
    };
    m["cost.phi_u"] = [](ExperimentConfig& c, const std::string& k, const RawValue& v) {
      c.cost.phi_u = quantity(k, v, units::parse_cost);
    };
    m["cost.phi_b"] = [](ExperimentConfig& c, const std::string& k, const RawValue& v) {
      c.cost.phi_b = quantity(k, v, units::parse_cost);
    };
    m["model.class"] = [](ExperimentConfig& c, const std::string& k, const RawValue& v) {
      try {
        c.model.content_class = parse_content_class(v.text);
      } catch (const std::invalid_argument& e) {
        throw ConfigError(ErrorKind::Domain, k, e.what());
      }
    };
    m["model.n"] = [](ExperimentConfig& c, const std::string& k, const RawValue& v) {
      c.model.n = integer(k, v);
    };
    m["model.lambda_e"] = [](ExperimentConfig& c, const std::string& k, const RawValue& v) {
      c.model.lambda_e = number(k, v);
    };
    m["model.gamma_t"] = [](ExperimentConfig& c, const std::string& k, const RawValue& v) {
      c.model.gammas.t = number(k, v);
    };
    m["model.gamma_b"] = [](ExperimentConfig& c, const std::string& k, const RawValue& v) {
      c.model.gammas.b = number(k, v);
    };
    m["model.gamma_u"] = [](ExperimentConfig& c, const std::string& k, const RawValue& v) {
      c.model.gammas.u = number(k, v);
    };
    m["policy.kind"] = [](ExperimentConfig& c, const std::string& k, const RawValue& v) {
      try {
        c.policy.kind = sim::parse_policy_kind(v.text);
      } catch (const std::invalid_argument& e) {
        throw ConfigError(ErrorKind::Domain, k, e.what());
      }
    };
    m["policy.x"] = [](ExperimentConfig& c, const std::string& k, const RawValue& v) {
      c.policy.x = number(k, v);
    };
    m["policy.x_min"] = [](ExperimentConfig& c, const std::string& k, const RawValue& v) {
      if (v.text == "none") c.policy.x_min.reset();
      else c.policy.x_min = number(k, v);
    };
    m["policy.x_max"] = [](ExperimentConfig& c, const std::string& k, const RawValue& v) {
      if (v.text == "none") c.policy.x_max.reset();
      else c.policy.x_max = number(k, v);
    };
    m["sim.hit_time"] = [](ExperimentConfig& c, const std::string& k, const RawValue& v) {
      if (v.text == "consumed") c.hit_time = sim::HitTime::Consumed;
      else if (v.text == "full_size") c.hit_time = sim::HitTime::FullSize;
      else throw ConfigError(ErrorKind::Domain, k, "expected consumed or full_size");
    };
    m["sim.sample_interval"] = [](ExperimentConfig& c, const std::string& k, const RawValue& v) {
      c.sample_interval = integer(k, v);
    };
    m["scenarios"] = [](ExperimentConfig& c, const std::string& k, const RawValue& v) {
      c.scenarios = string_list(k, v);
    };
    m["sweep.param"] = [](ExperimentConfig& c, const std::string& k, const RawValue& v) {
      auto p = parse_sweep_param(v.text);
      if (!p) throw ConfigError(ErrorKind::Domain, k, "expected one of x, s, r_v, omega_ratio");
      c.sweep.param = *p;
      c.sweep.values = default_grid(*p);
    };
    m["sweep.values"] = [](ExperimentConfig& c, const std::string& k, const RawValue& v) {
      c.sweep.values = number_list(k, v);
    };
    m["sweep.replications"] = [](ExperimentConfig& c, const std::string& k, const RawValue& v) {
      c.sweep.replications = static_cast<std::uint32_t>(integer(k, v));
    };
    m["sweep.x_points"] = [](ExperimentConfig& c, const std::string& k, const RawValue& v) {
      c.sweep.x_points = static_cast<std::uint32_t>(integer(k, v));
    };
    m["output.dir"] = [](ExperimentConfig& c, const std::string&, const RawValue& v) {
      c.output_dir = v.text;
    };
    m["output.format"] = [](ExperimentConfig& c, const std::string& k, const RawValue& v) {
      if (v.text != "csv" && v.text != "json") throw ConfigError(ErrorKind::Domain, k, "expected csv or json");
      c.format = v.text;
    };
    return m;
  }();
  return s;
}

// Domain checks, reported against the key that controls each value.
inline void validate(const ExperimentConfig& c) {
  using detail::require;
  const auto& w = c.workload;
  require(w.nonvideo.zipf.s >= 0.0, "zipf.s", "must be >= 0");
  require(w.video.zipf.s >= 0.0, "zipf.s_video", "must be >= 0");
  require(w.nonvideo.zipf.m >= 1 && w.nonvideo.zipf.m <= 0xffffffffULL, "zipf.m_nonvideo", "must be in [1, 2^32-1]");
  require(w.video.zipf.m >= 1 && w.video.zipf.m <= 0xffffffffULL, "zipf.m_video", "must be in [1, 2^32-1]");
  require(w.nonvideo.size.shape > 0.0, "size.nonvideo.shape", "must be > 0");
  require(w.nonvideo.size.scale_mb > 0.0, "size.nonvideo.scale", "must be > 0");
  require(w.video.size.shape > 0.0, "size.video.shape", "must be > 0");
  require(w.video.size.scale_mb > 0.0, "size.video.scale", "must be > 0");
  require(!w.nonvideo.size.fixed_mb || *w.nonvideo.size.fixed_mb > 0.0, "size.fixed", "must be > 0");
  require(w.video.view.lambda_e > 0.0, "view.lambda_e", "must be > 0");
  require(w.r_v > 0.0, "workload.r_v", "must be > 0");
  require(w.n_requests >= 1, "workload.n_requests", "must be >= 1");
  require(c.net.omega_u > 0.0, "network.omega_u", "must be > 0");
  require(c.net.omega_b > 0.0, "network.omega_b", "must be > 0");
  require(c.net.omega_l > 0.0, "network.omega_l", "must be > 0");
  require(c.cost.phi_u >= 0.0, "cost.phi_u", "must be >= 0");
  require(c.cost.phi_b >= 0.0, "cost.phi_b", "must be >= 0");
  require(c.model.n >= 1, "model.n", "must be >= 1");
  require(c.model.lambda_e > 0.0, "model.lambda_e", "must be > 0");
  require(c.model.gammas.t >= 0.0, "model.gamma_t", "must be >= 0");
  require(c.model.gammas.b >= 0.0, "model.gamma_b", "must be >= 0");
  require(c.model.gammas.u >= 0.0, "model.gamma_u", "must be >= 0");
  require(c.policy.x >= 0.0 && c.policy.x <= 1.0, "policy.x", "must lie in [0,1]");
  try {
    c.policy.validate();
  } catch (const std::domain_error& e) {
    throw ConfigError(ErrorKind::Domain, "policy.x_min", e.what());
  }
  require(c.sample_interval >= 1, "sim.sample_interval", "must be >= 1");
  require(!c.scenarios.empty(), "scenarios", "must not be empty");
  for (const auto& s : c.scenarios) {
    try {
      sim::scenario_by_name(s);
    } catch (const std::invalid_argument& e) {
      throw ConfigError(ErrorKind::Domain, "scenarios", e.what());
    }
  }
  require(!c.sweep.values.empty(), "sweep.values", "grid must not be empty");
  for (double v : c.sweep.values) {
    switch (c.sweep.param) {
      case SweepParam::X: require(v >= 0.0 && v <= 1.0, "sweep.values", "x must lie in [0,1]"); break;
      case SweepParam::S: require(v >= 0.0, "sweep.values", "s must be >= 0"); break;
      case SweepParam::RV: require(v > 0.0, "sweep.values", "r_v must be > 0"); break;
      case SweepParam::OmegaRatio: require(v > 0.0, "sweep.values", "omega ratio must be > 0"); break;
    }
  }
  require(c.sweep.replications >= 1, "sweep.replications", "must be >= 1");
  require(c.sweep.x_points >= 2, "sweep.x_points", "must be >= 2");
  require(!c.output_dir.empty(), "output.dir", "must not be empty");
}

// Top-level shorthands for the most common keys.
inline std::string canonical_key(const std::string& key) {
  static const std::map<std::string, std::string> aliases{
      {"omega_u", "network.omega_u"}, {"omega_b", "network.omega_b"}, {"omega_l", "network.omega_l"},
      {"phi_u", "cost.phi_u"},         {"phi_b", "cost.phi_b"},         {"r_v", "workload.r_v"},
      {"n_requests", "workload.n_requests"}};
  auto it = aliases.find(key);
  return it == aliases.end() ? key : it->second;
}

inline ExperimentConfig from_document(const RawDocument& raw) {
  RawDocument doc;
  for (const auto& [key, value] : raw) {
    auto canon = canonical_key(key);
    if (doc.count(canon)) throw ConfigError(ErrorKind::Parse, canon, "duplicate key");
    doc.emplace(std::move(canon), value);
  }
  ExperimentConfig cfg;
  const auto& sch = schema();
  // sweep.param resets the grid, so it is applied before sweep.values.
  if (auto it = doc.find("sweep.param"); it != doc.end()) {
    sch.at("sweep.param")(cfg, it->first, it->second);
  }
  for (const auto& [key, value] : doc) {
    if (key == "sweep.param") continue;
    auto it = sch.find(key);
    if (it == sch.end()) throw ConfigError(ErrorKind::UnknownKey, key, "unknown key");
    it->second(cfg, key, value);
  }
  validate(cfg);
  return cfg;
}

inline ExperimentConfig parse_config(std::string_view text) {
  std::istringstream is{std::string(text)};
  return from_document(parse_document(is));
}

inline ExperimentConfig load_config(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw ConfigError(ErrorKind::Io, "", "cannot read config '" + path + "'");
  return from_document(parse_document(is));
}

// ---------------------------------------------------------------------------
// Echo
// ---------------------------------------------------------------------------

// Fully resolved configuration in the input format, internal units, so that
// loading it reproduces the run.
inline std::string to_config_text(const ExperimentConfig& c) {
  using io::format_double;
  std::ostringstream os;
  auto list = [](const std::vector<double>& v) {
    std::string s;
    for (std::size_t i = 0; i < v.size(); ++i) s += (i ? "," : "") + format_double(v[i]);
    return s;
  };
  const auto& w = c.workload;
  std::string sc;
  for (std::size_t i = 0; i < c.scenarios.size(); ++i) sc += (i ? "," : "") + c.scenarios[i];
  os << "seed = " << w.seed << "\n"
     << "scenarios = \"" << sc << "\"\n\n";
  os << "[workload]\n"
     << "n_requests = " << w.n_requests << "\n"
     << "r_v = " << format_double(w.r_v) << "\n\n";
  os << "[zipf]\n"
     << "s = " << format_double(w.nonvideo.zipf.s) << "\n"
     << "s_video = " << format_double(w.video.zipf.s) << "\n"
     << "m_nonvideo = " << w.nonvideo.zipf.m << "\n"
     << "m_video = " << w.video.zipf.m << "\n\n";
  os << "[size]\n"
     << "nonvideo.shape = " << format_double(w.nonvideo.size.shape) << "\n"
     << "nonvideo.scale = \"" << format_double(w.nonvideo.size.scale_mb) << "MB\"\n"
     << "video.shape = " << format_double(w.video.size.shape) << "\n"
     << "video.scale = \"" << format_double(w.video.size.scale_mb) << "MB\"\n"
     << "fixed = \""
     << (w.nonvideo.size.fixed_mb ? format_double(*w.nonvideo.size.fixed_mb) + "MB" : "none")
     << "\"\n\n";
  os << "[view]\n"
     << "lambda_e = " << format_double(w.video.view.lambda_e) << "\n\n";
  os << "[network]\n"
     << "omega_u = \"" << format_double(c.net.omega_u) << "MB/s\"\n"
     << "omega_b = \"" << format_double(c.net.omega_b) << "MB/s\"\n"
     << "omega_l = \"" << format_double(c.net.omega_l) << "MB/s\"\n\n";
  os << "[cost]\n"
     << "phi_u = " << format_double(c.cost.phi_u) << "\n"
     << "phi_b = " << format_double(c.cost.phi_b) << "\n\n";
  os << "[model]\n"
     << "class = \"" << to_string(c.model.content_class) << "\"\n"
     << "n = " << c.model.n << "\n"
     << "lambda_e = " << format_double(c.model.lambda_e) << "\n"
     << "gamma_t = " << format_double(c.model.gammas.t) << "\n"
     << "gamma_b = " << format_double(c.model.gammas.b) << "\n"
     << "gamma_u = " << format_double(c.model.gammas.u) << "\n\n";
  os << "[policy]\n"
     << "kind = \"" << sim::to_string(c.policy.kind) << "\"\n"
     << "x = " << format_double(c.policy.x) << "\n"
     << "x_min = " << (c.policy.x_min ? format_double(*c.policy.x_min) : "none") << "\n"
     << "x_max = " << (c.policy.x_max ? format_double(*c.policy.x_max) : "none") << "\n\n";
  os << "[sim]\n"
     << "hit_time = \"" << (c.hit_time == sim::HitTime::FullSize ? "full_size" : "consumed") << "\"\n"
     << "sample_interval = " << c.sample_interval << "\n\n";
  os << "[sweep]\n"
     << "param = \"" << to_string(c.sweep.param) << "\"\n"
     << "values = \"" << list(c.sweep.values) << "\"\n"
     << "replications = " << c.sweep.replications << "\n"
     << "x_points = " << c.sweep.x_points << "\n\n";
  os << "[output]\n"
     << "dir = \"" << c.output_dir << "\"\n"
     << "format = \"" << c.format << "\"\n";
  return os.str();
}

inline nlohmann::json to_json(const ExperimentConfig& c) {
  nlohmann::json j;
  j["workload"] = ustash::to_json(c.workload);
  j["network_mb_per_s"] = {{"omega_u", c.net.omega_u}, {"omega_b", c.net.omega_b}, {"omega_l", c.net.omega_l}};
  j["cost_cents_per_mb"] = {{"phi_u", c.cost.phi_u}, {"phi_b", c.cost.phi_b}};
  j["model"] = {{"class", to_string(c.model.content_class)},
                {"n", c.model.n},
                {"lambda_e", c.model.lambda_e},
                {"gammas", {c.model.gammas.t, c.model.gammas.b, c.model.gammas.u}}};
  j["policy"] = {{"kind", sim::to_string(c.policy.kind)}, {"x", c.policy.x}};
  j["policy"]["x_min"] = c.policy.x_min ? nlohmann::json(*c.policy.x_min) : nlohmann::json();
  j["policy"]["x_max"] = c.policy.x_max ? nlohmann::json(*c.policy.x_max) : nlohmann::json();
  j["sim"] = {{"hit_time", c.hit_time == sim::HitTime::FullSize ? "full_size" : "consumed"},
              {"sample_interval", c.sample_interval}};
  j["scenarios"] = c.scenarios;
  j["sweep"] = {{"param", to_string(c.sweep.param)},
                {"values", c.sweep.values},
                {"replications", c.sweep.replications},
                {"x_points", c.sweep.x_points}};
  j["output"] = {{"dir", c.output_dir}, {"format", c.format}};
  j["seed"] = c.seed();
  j["config_text"] = to_config_text(c);
  return j;
}

}  // namespace ustash::config
