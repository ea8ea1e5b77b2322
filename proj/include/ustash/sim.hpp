#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <future>
#include <optional>
#include <ostream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

#include <json.hpp>

#include "ustash/io.hpp"
#include "ustash/model.hpp"
#include "ustash/workload.hpp"

// Trace-driven simulation of an on-board stash with collaborative downloads.
//
// Requests are processed in order against a stash that starts empty. The
// stash holds a contiguous prefix of each content. A request either hits
// fully, hits the stored prefix and fetches the tail, or misses. Fetched
// bytes are split between the stash's cellular link and the user's own link;
// the user pushes its share back over local WiFi so that after a request the
// stash holds at least the consumed prefix. There is no eviction.
namespace ustash::sim {

using model::CostParams;
using model::NetworkParams;

struct SplitPolicy {
  enum class Kind { Fixed, OptimalPerRequest, NoStash, AllStash };

  Kind kind = Kind::OptimalPerRequest;
  double x = 0.0;  // Fixed only
  std::optional<double> x_min;
  std::optional<double> x_max;

  static SplitPolicy fixed(double x) { return {Kind::Fixed, x, std::nullopt, std::nullopt}; }
  static SplitPolicy optimal() { return {}; }
  static SplitPolicy no_stash() { return {Kind::NoStash, 0.0, std::nullopt, std::nullopt}; }
  static SplitPolicy all_stash() { return {Kind::AllStash, 0.0, std::nullopt, std::nullopt}; }

  void validate() const {
    if (kind == Kind::Fixed && !(x >= 0.0 && x <= 1.0)) {
      throw std::domain_error("fixed split must lie in [0,1]");
    }
    const double lo = x_min.value_or(0.0);
    const double hi = x_max.value_or(1.0);
    if (!(lo >= 0.0 && lo <= hi && hi <= 1.0)) {
      throw std::domain_error("split bounds must satisfy 0 <= x_min <= x_max <= 1");
    }
  }
};

inline std::string_view to_string(SplitPolicy::Kind k) {
  switch (k) {
    case SplitPolicy::Kind::Fixed: return "fixed";
    case SplitPolicy::Kind::OptimalPerRequest: return "optimal";
    case SplitPolicy::Kind::NoStash: return "no_stash";
    case SplitPolicy::Kind::AllStash: return "all_stash";
  }
  return "?";
}

inline SplitPolicy::Kind parse_policy_kind(std::string_view s) {
  if (s == "fixed") return SplitPolicy::Kind::Fixed;
  if (s == "optimal") return SplitPolicy::Kind::OptimalPerRequest;
  if (s == "no_stash") return SplitPolicy::Kind::NoStash;
  if (s == "all_stash") return SplitPolicy::Kind::AllStash;
  throw std::invalid_argument("unknown split policy '" + std::string(s) + "'");
}

enum class Classification { FullHit, PartialHit, Miss };

inline std::string_view to_string(Classification c) {
  switch (c) {
    case Classification::FullHit: return "full_hit";
    case Classification::PartialHit: return "partial_hit";
    case Classification::Miss: return "miss";
  }
  return "?";
}

// Consumed: a full hit takes V*s/omega_l. FullSize: s/omega_l regardless of
// V, which is the literal hit term of the analytical model.
enum class HitTime { Consumed, FullSize };

struct SimParams {
  NetworkParams net;
  CostParams cost;
  HitTime hit_time = HitTime::Consumed;
  bool stashing = true;
  std::uint64_t sample_interval = 1000;
};

// ---------------------------------------------------------------------------
// Stash
// ---------------------------------------------------------------------------

class StashState {
 public:
  double fraction(ContentId id) const {
    auto it = prefix_.find(id);
    return it == prefix_.end() ? 0.0 : it->second;
  }

  // Extends the stored prefix of `id` to at least `fraction`.
  void extend(ContentId id, double fraction, double size_mb) {
    fraction = std::clamp(fraction, 0.0, 1.0);
    auto [it, inserted] = prefix_.try_emplace(id, 0.0);
    if (fraction > it->second) {
      total_stored_mb_ += (fraction - it->second) * size_mb;
      it->second = fraction;
    }
  }

  double total_stored_mb() const { return total_stored_mb_; }
  std::size_t entries() const { return prefix_.size(); }

  template <class F>
  void for_each(F&& f) const {
    for (const auto& [id, frac] : prefix_) f(id, frac);
  }

 private:
  std::unordered_map<ContentId, double, ContentIdHash> prefix_;
  double total_stored_mb_ = 0.0;
};

struct ClassifyResult {
  Classification kind = Classification::Miss;
  double stashed = 0.0;
};

inline ClassifyResult classify(const StashState& stash, const Request& req) {
  const double f = stash.fraction(req.content_id);
  if (f <= 0.0) return {Classification::Miss, 0.0};
  if (f >= req.view_ratio) return {Classification::FullHit, f};
  return {Classification::PartialHit, f};
}

// Stash share (fraction of the whole content) for a fetch of `remaining`.
inline double resolve_split(const SplitPolicy& policy, double remaining, const NetworkParams& net) {
  if (!(remaining > 0.0 && remaining <= 1.0)) {
    throw std::domain_error("remaining fraction must lie in (0,1]");
  }
  double x = 0.0;
  switch (policy.kind) {
    case SplitPolicy::Kind::OptimalPerRequest:
      x = remaining * net.omega_b / (net.omega_u + net.omega_b);
      break;
    case SplitPolicy::Kind::Fixed: x = std::min(policy.x, remaining); break;
    case SplitPolicy::Kind::NoStash: x = 0.0; break;
    case SplitPolicy::Kind::AllStash: x = remaining; break;
  }
  if (policy.x_min) x = std::max(x, *policy.x_min * remaining);
  if (policy.x_max) x = std::min(x, *policy.x_max * remaining);
  return x;
}

struct RequestOutcome {
  Classification classification = Classification::Miss;
  double local_mb = 0.0;
  double user_cellular_mb = 0.0;
  double stash_cellular_mb = 0.0;
  double completion_s = 0.0;
  double user_cost_cents = 0.0;
  double stash_cost_cents = 0.0;
};

inline RequestOutcome process_request(StashState& stash, const Request& req, double size_mb,
                                      const SplitPolicy& policy, const SimParams& params) {
  const auto& net = params.net;
  const double v = req.view_ratio;
  RequestOutcome out;
  const auto c = params.stashing ? classify(stash, req) : ClassifyResult{};
  out.classification = c.kind;

  if (c.kind == Classification::FullHit) {
    out.local_mb = v * size_mb;
    const double served = params.hit_time == HitTime::FullSize ? size_mb : out.local_mb;
    out.completion_s = served / net.omega_l;
    return out;
  }

  const double remaining = v - c.stashed;
  const double x = resolve_split(policy, remaining, net);
  const double y = remaining - x;
  out.local_mb = c.stashed * size_mb;
  out.stash_cellular_mb = x * size_mb;
  out.user_cellular_mb = y * size_mb;
  // Local, user and stash legs run in parallel.
  out.completion_s = std::max({out.local_mb / net.omega_l, out.user_cellular_mb / net.omega_u,
                               out.stash_cellular_mb / net.omega_b});
  out.stash_cost_cents = params.cost.phi_b * out.stash_cellular_mb;
  out.user_cost_cents = params.cost.phi_u * out.user_cellular_mb;
  // Stash leg plus user push-back cover the consumed prefix.
  if (params.stashing) stash.extend(req.content_id, v, size_mb);
  return out;
}

// ---------------------------------------------------------------------------
// Run metrics
// ---------------------------------------------------------------------------

struct ByteTotals {
  double requested_mb = 0.0;
  double local_mb = 0.0;
  double user_mb = 0.0;
  double stash_mb = 0.0;
};

struct ClassMetrics {
  std::uint64_t full_hits = 0;
  std::uint64_t partial_hits = 0;
  std::uint64_t misses = 0;
  std::uint64_t total = 0;
  ByteTotals bytes;

  double hit_rate() const { return total ? static_cast<double>(full_hits) / total : 0.0; }
  double partial_hit_rate() const {
    return total ? static_cast<double>(partial_hits) / total : 0.0;
  }
  double byte_hit_rate() const {
    return bytes.requested_mb > 0.0 ? bytes.local_mb / bytes.requested_mb : 0.0;
  }
};

struct RunMetrics {
  std::uint64_t full_hits = 0;
  std::uint64_t partial_hits = 0;
  std::uint64_t misses = 0;
  std::uint64_t total = 0;
  double hit_rate = 0.0;
  double partial_hit_rate = 0.0;
  double byte_hit_rate = 0.0;
  ByteTotals bytes;
  double user_cost_cents = 0.0;
  double stash_cost_cents = 0.0;
  double total_completion_s = 0.0;
  double mean_completion_s = 0.0;
  std::array<ClassMetrics, 2> per_class{};
  std::uint64_t stashed_contents = 0;
  double total_stored_mb = 0.0;
  // (requests processed, cumulative full-hit rate)
  std::vector<std::pair<std::uint64_t, double>> hit_rate_series;

  const ClassMetrics& of(ContentClass c) const { return per_class[class_index(c)]; }
  double system_cost_cents() const { return user_cost_cents + stash_cost_cents; }
  // Cellular traffic avoided thanks to the stash.
  double bandwidth_savings_mb() const { return bytes.local_mb; }
};

inline void add_bytes(ByteTotals& t, const RequestOutcome& o, double requested) {
  t.requested_mb += requested;
  t.local_mb += o.local_mb;
  t.user_mb += o.user_cellular_mb;
  t.stash_mb += o.stash_cellular_mb;
}

inline void count(std::uint64_t& full, std::uint64_t& partial, std::uint64_t& miss,
                  Classification c) {
  switch (c) {
    case Classification::FullHit: ++full; break;
    case Classification::PartialHit: ++partial; break;
    case Classification::Miss: ++miss; break;
  }
}

// Processes the trace in order against a cold stash. When `log` is given it
// receives one outcome per request.
inline RunMetrics run(const Trace& trace, const SplitPolicy& policy, const SimParams& params,
                      std::vector<RequestOutcome>* log = nullptr) {
  policy.validate();
  params.net.validate();
  params.cost.validate();
  if (!trace.catalog) throw std::invalid_argument("trace has no catalog");
  StashState stash;
  RunMetrics m;
  if (log) {
    log->clear();
    log->reserve(trace.size());
  }
  const std::uint64_t interval = std::max<std::uint64_t>(params.sample_interval, 1);
  for (const auto& req : trace.requests) {
    const double size = trace.catalog->size_mb(req.content_id);
    const auto o = process_request(stash, req, size, policy, params);
    const double requested = req.view_ratio * size;
    auto& cm = m.per_class[class_index(req.content_id.content_class())];
    count(m.full_hits, m.partial_hits, m.misses, o.classification);
    count(cm.full_hits, cm.partial_hits, cm.misses, o.classification);
    ++m.total;
    ++cm.total;
    add_bytes(m.bytes, o, requested);
    add_bytes(cm.bytes, o, requested);
    m.user_cost_cents += o.user_cost_cents;
    m.stash_cost_cents += o.stash_cost_cents;
    m.total_completion_s += o.completion_s;
    if (m.total % interval == 0) {
      m.hit_rate_series.emplace_back(m.total, static_cast<double>(m.full_hits) / m.total);
    }
    if (log) log->push_back(o);
  }
  if (m.total > 0) {
    if (m.hit_rate_series.empty() || m.hit_rate_series.back().first != m.total) {
      m.hit_rate_series.emplace_back(m.total, static_cast<double>(m.full_hits) / m.total);
    }
    m.hit_rate = static_cast<double>(m.full_hits) / m.total;
    m.partial_hit_rate = static_cast<double>(m.partial_hits) / m.total;
    m.mean_completion_s = m.total_completion_s / m.total;
  }
  m.byte_hit_rate = m.bytes.requested_mb > 0.0 ? m.bytes.local_mb / m.bytes.requested_mb : 0.0;
  m.stashed_contents = stash.entries();
  m.total_stored_mb = stash.total_stored_mb();
  return m;
}

// ---------------------------------------------------------------------------
// Scenarios
// ---------------------------------------------------------------------------

struct Scenario {
  std::string name;
  SplitPolicy policy;
  bool stashing = true;
};

// direct: users' own cellular only. onboard-wifi: everything over the
// stash's link, nothing kept. cache-wifi: everything over the stash's link,
// kept as a conventional cache. ustash: optimal split with push-back.
inline std::vector<Scenario> canonical_scenarios() {
  return {{"direct", SplitPolicy::no_stash(), false},
          {"onboard-wifi", SplitPolicy::all_stash(), false},
          {"cache-wifi", SplitPolicy::all_stash(), true},
          {"ustash", SplitPolicy::optimal(), true}};
}

inline Scenario scenario_by_name(std::string_view name) {
  for (auto& s : canonical_scenarios()) {
    if (s.name == name) return s;
  }
  throw std::invalid_argument("unknown scenario '" + std::string(name) + "'");
}

struct ScenarioResult {
  std::string name;
  RunMetrics metrics;
};

// Runs each scenario on the same trace; scenarios run concurrently and the
// results keep the input order.
inline std::vector<ScenarioResult> compare_scenarios(const Trace& trace, const SimParams& params,
                                                     const std::vector<Scenario>& scenarios =
                                                         canonical_scenarios()) {
  std::vector<std::future<RunMetrics>> jobs;
  jobs.reserve(scenarios.size());
  for (const auto& sc : scenarios) {
    SimParams p = params;
    p.stashing = sc.stashing;
    jobs.push_back(std::async(std::launch::async,
                              [&trace, p, policy = sc.policy] { return run(trace, policy, p); }));
  }
  std::vector<ScenarioResult> out;
  for (std::size_t i = 0; i < scenarios.size(); ++i) {
    out.push_back({scenarios[i].name, jobs[i].get()});
  }
  return out;
}

// ---------------------------------------------------------------------------
// Output
// ---------------------------------------------------------------------------

inline constexpr std::string_view kOutcomeCsvHeader =
    "index,content_id,class,view_ratio,classification,local_mb,user_mb,stash_mb,completion_s,"
    "user_cost,stash_cost";

inline void write_outcomes_csv(std::ostream& os, const Trace& trace,
                               const std::vector<RequestOutcome>& outcomes) {
  if (outcomes.size() != trace.size()) throw std::invalid_argument("outcome log size mismatch");
  os << kOutcomeCsvHeader << '\n';
  for (std::size_t i = 0; i < outcomes.size(); ++i) {
    const auto& r = trace.requests[i];
    const auto& o = outcomes[i];
    os << r.index << ',' << r.content_id.to_string() << ','
       << to_string(r.content_id.content_class()) << ',' << io::format_double(r.view_ratio) << ','
       << to_string(o.classification) << ',' << io::format_double(o.local_mb) << ','
       << io::format_double(o.user_cellular_mb) << ',' << io::format_double(o.stash_cellular_mb)
       << ',' << io::format_double(o.completion_s) << ',' << io::format_double(o.user_cost_cents)
       << ',' << io::format_double(o.stash_cost_cents) << '\n';
  }
}

inline nlohmann::json to_json(const ByteTotals& b) {
  return {{"requested_mb", b.requested_mb},
          {"local_mb", b.local_mb},
          {"user_cellular_mb", b.user_mb},
          {"stash_cellular_mb", b.stash_mb}};
}

inline nlohmann::json to_json(const ClassMetrics& c) {
  return {{"full_hits", c.full_hits},         {"partial_hits", c.partial_hits},
          {"misses", c.misses},               {"total", c.total},
          {"hit_rate", c.hit_rate()},         {"partial_hit_rate", c.partial_hit_rate()},
          {"byte_hit_rate", c.byte_hit_rate()}, {"bytes", to_json(c.bytes)}};
}

inline nlohmann::json to_json(const RunMetrics& m) {
  nlohmann::json series = nlohmann::json::array();
  for (auto [n, h] : m.hit_rate_series) series.push_back({n, h});
  return {{"full_hits", m.full_hits},
          {"partial_hits", m.partial_hits},
          {"misses", m.misses},
          {"total", m.total},
          {"hit_rate", m.hit_rate},
          {"partial_hit_rate", m.partial_hit_rate},
          {"byte_hit_rate", m.byte_hit_rate},
          {"bytes", to_json(m.bytes)},
          {"bandwidth_savings_mb", m.bandwidth_savings_mb()},
          {"user_cost_cents", m.user_cost_cents},
          {"stash_cost_cents", m.stash_cost_cents},
          {"system_cost_cents", m.system_cost_cents()},
          {"mean_completion_s", m.mean_completion_s},
          {"stashed_contents", m.stashed_contents},
          {"total_stored_mb", m.total_stored_mb},
          {"per_class",
           {{"nonvideo", to_json(m.of(ContentClass::NonVideo))},
            {"video", to_json(m.of(ContentClass::Video))}}},
          {"hit_rate_series", std::move(series)}};
}

}  // namespace ustash::sim
