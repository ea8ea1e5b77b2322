#pragma once

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <ctime>
#include <filesystem>
#include <limits>
#include <optional>
#include <ostream>
#include <string>
#include <thread>
#include <utility>
#include <vector>

#include <json.hpp>

#include "ustash/analytics.hpp"
#include "ustash/config.hpp"
#include "ustash/io.hpp"
#include "ustash/model.hpp"
#include "ustash/sim.hpp"
#include "ustash/workload.hpp"

namespace ustash::experiment {

inline constexpr std::string_view kToolVersion = "0.1.0";

// ---------------------------------------------------------------------------
// Tables
// ---------------------------------------------------------------------------

struct Table {
  std::string name;
  std::vector<std::string> columns;
  std::vector<std::vector<std::string>> rows;

  void add_row(const std::vector<double>& values) {
    std::vector<std::string> r;
    r.reserve(values.size());
    for (double v : values) r.push_back(io::format_double(v));
    rows.push_back(std::move(r));
  }
};

inline void write_csv(std::ostream& os, const Table& t) {
  for (std::size_t i = 0; i < t.columns.size(); ++i) os << (i ? "," : "") << t.columns[i];
  os << '\n';
  for (const auto& r : t.rows) {
    for (std::size_t i = 0; i < r.size(); ++i) os << (i ? "," : "") << r[i];
    os << '\n';
  }
}

inline nlohmann::json to_json(const Table& t) {
  nlohmann::json rows = nlohmann::json::array();
  for (const auto& r : t.rows) {
    nlohmann::json o;
    for (std::size_t i = 0; i < r.size(); ++i) o[t.columns[i]] = r[i];
    rows.push_back(std::move(o));
  }
  return {{"name", t.name}, {"columns", t.columns}, {"rows", std::move(rows)}};
}

// Runs f(0..n-1) on a small worker pool. Results are stored by index, so the
// output order never depends on completion order.
template <class F>
auto parallel_map(std::size_t n, F&& f) -> std::vector<decltype(f(std::size_t{}))> {
  using R = decltype(f(std::size_t{}));
  std::vector<std::optional<R>> slots(n);
  std::atomic<std::size_t> next{0};
  const std::size_t workers =
      std::max<std::size_t>(1, std::min<std::size_t>(n, std::thread::hardware_concurrency()));
  std::vector<std::exception_ptr> errors(workers);
  {
    std::vector<std::jthread> pool;
    for (std::size_t w = 0; w < workers; ++w) {
      pool.emplace_back([&, w] {
        try {
          for (std::size_t i = next++; i < n; i = next++) slots[i].emplace(f(i));
        } catch (...) {
          errors[w] = std::current_exception();
          next = n;
        }
      });
    }
  }
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
  std::vector<R> out;
  out.reserve(n);
  for (auto& s : slots) out.push_back(std::move(*s));
  return out;
}

// ---------------------------------------------------------------------------
// Analytic helpers over the two-class workload
// ---------------------------------------------------------------------------

// Expected full-hit rate after n requests when a fraction 1/(1+R_v) of them
// are video. Each request picks content k of class c with probability
// share_c * p_k, so the unique count is one sum over both catalogs.
class MixedHitRate {
 public:
  explicit MixedHitRate(const WorkloadConfig& w)
      : nonvideo_(w.nonvideo.zipf, 1.0 - w.video_fraction()), video_(w.video.zipf, w.video_fraction()) {}

  double operator()(double n) const {
    if (n <= 0.0) return 0.0;
    return (n - nonvideo_(n) - video_(n)) / n;
  }

 private:
  ExpectedUniqueCurve nonvideo_;
  ExpectedUniqueCurve video_;
};

// ---------------------------------------------------------------------------
// Figure builders
// ---------------------------------------------------------------------------

inline Table model_sweep_table(const model::Model& m, const std::vector<double>& xs) {
  Table t{"model_sweep",
          {"x", "expected_T_s", "cost_stash_cents", "cost_user_cents", "cost_system_cents",
           "t_norm", "cb_norm", "cu_norm", "h_sum", "h_dist"},
          {}};
  for (double x : xs) {
    const auto h = m.h_metric(x);
    t.add_row({x, m.expected_completion(x), m.stash_cost(x), m.user_cost(x), m.system_cost(x),
               h.t_norm, h.cb_norm, h.cu_norm, h.h_sum, h.h_dist});
  }
  return t;
}

// Expected completion vs x from the model, next to the simulated mean
// completion of a fixed-split policy on the same trace. Both curves are
// also normalized by their maximum over the grid.
inline Table fig5b_completion_vs_x(const config::ExperimentConfig& cfg, const Trace& trace,
                                   const std::vector<double>& xs) {
  const model::Model m(cfg.model_params());
  const auto params = cfg.sim_params();
  auto sims = parallel_map(xs.size(), [&](std::size_t i) {
    return sim::run(trace, sim::SplitPolicy::fixed(xs[i]), params).mean_completion_s;
  });
  std::vector<double> model_t;
  for (double x : xs) model_t.push_back(m.expected_completion(x));
  const double mmax = *std::max_element(model_t.begin(), model_t.end());
  const double smax = *std::max_element(sims.begin(), sims.end());
  Table t{"fig5b_completion_vs_x", {"x", "model_T_s", "model_T_norm", "sim_T_s", "sim_T_norm"}, {}};
  for (std::size_t i = 0; i < xs.size(); ++i) {
    t.add_row({xs[i], model_t[i], model_t[i] / mmax, sims[i], smax > 0 ? sims[i] / smax : 0.0});
  }
  return t;
}

// Cumulative simulated hit rate against the analytic (N - E(Y))/N, thinned
// to at most max_rows points.
inline Table fig6_hitrate_vs_n(const config::ExperimentConfig& cfg, const sim::RunMetrics& run,
                               std::size_t max_rows = 100) {
  const MixedHitRate analytic(cfg.workload);
  const auto& series = run.hit_rate_series;
  const std::size_t stride = std::max<std::size_t>(1, (series.size() + max_rows - 1) / max_rows);
  Table t{"fig6_hitrate_vs_n", {"n", "sim_hit_rate", "analytic_hit_rate"}, {}};
  for (std::size_t i = 0; i < series.size(); ++i) {
    if ((i + 1) % stride != 0 && i + 1 != series.size()) continue;
    const auto [n, h] = series[i];
    t.add_row({static_cast<double>(n), h, analytic(static_cast<double>(n))});
  }
  return t;
}

inline Table fig11_scenarios(const std::vector<sim::ScenarioResult>& results) {
  Table t{"fig11_scenarios",
          {"scenario", "mean_completion_s", "user_cost_cents", "stash_cost_cents",
           "system_cost_cents", "hit_rate", "byte_hit_rate"},
          {}};
  for (const auto& r : results) {
    const auto& m = r.metrics;
    t.rows.push_back({r.name, io::format_double(m.mean_completion_s),
                      io::format_double(m.user_cost_cents), io::format_double(m.stash_cost_cents),
                      io::format_double(m.system_cost_cents()), io::format_double(m.hit_rate),
                      io::format_double(m.byte_hit_rate)});
  }
  return t;
}

struct SeedRun {
  WorkloadConfig workload;
  std::uint32_t replication = 0;
};

// Seed of replication r; replication 0 uses the configured seed.
inline std::uint64_t replication_seed(std::uint64_t seed, std::uint32_t r) {
  return seed + 0x9E3779B97F4A7C15ULL * r;
}

inline sim::RunMetrics run_ustash(const WorkloadConfig& w, const sim::SimParams& params) {
  return sim::run(generate_trace(w), sim::SplitPolicy::optimal(), params);
}

// Popularity skew sweep: simulated and analytic hit rate, and the model's
// minimum expected completion time, per exponent s.
inline Table fig9_s_sweep(const config::ExperimentConfig& cfg, const std::vector<double>& ss) {
  const auto params = cfg.sim_params();
  struct Point {
    double analytic, sim_hit, model_t, sim_t;
  };
  auto pts = parallel_map(ss.size(), [&](std::size_t i) {
    auto c = cfg;
    c.workload.nonvideo.zipf.s = c.workload.video.zipf.s = ss[i];
    const auto run = run_ustash(c.workload, params);
    const MixedHitRate analytic(c.workload);
    const model::Model m(c.model_params());
    return Point{analytic(static_cast<double>(c.workload.n_requests)), run.hit_rate,
                 m.expected_completion_min(), run.mean_completion_s};
  });
  Table t{"fig9_s_sweep", {"s", "analytic_hit_rate", "sim_hit_rate", "model_T_min_s", "sim_T_s"}, {}};
  for (std::size_t i = 0; i < ss.size(); ++i) {
    t.add_row({ss[i], pts[i].analytic, pts[i].sim_hit, pts[i].model_t, pts[i].sim_t});
  }
  return t;
}

// Video concentration sweep. Counts are pooled over replications.
inline Table fig10_rv_sweep(const config::ExperimentConfig& cfg, const std::vector<double>& rvs) {
  const auto params = cfg.sim_params();
  const std::uint32_t reps = cfg.sweep.replications;
  auto runs = parallel_map(rvs.size() * reps, [&](std::size_t i) {
    auto w = cfg.workload;
    w.r_v = rvs[i / reps];
    w.seed = replication_seed(cfg.seed(), static_cast<std::uint32_t>(i % reps));
    return run_ustash(w, params);
  });
  Table t{"fig10_rv_sweep",
          {"r_v", "hit_rate", "byte_hit_rate", "partial_hit_rate", "video_requests",
           "video_hit_rate", "video_partial_hit_rate", "video_byte_hit_rate"},
          {}};
  for (std::size_t j = 0; j < rvs.size(); ++j) {
    double total = 0, full = 0, partial = 0, req_mb = 0, local_mb = 0;
    double vtotal = 0, vfull = 0, vpartial = 0, vreq = 0, vlocal = 0;
    for (std::uint32_t r = 0; r < reps; ++r) {
      const auto& m = runs[j * reps + r];
      const auto& v = m.of(ContentClass::Video);
      total += m.total;
      full += m.full_hits;
      partial += m.partial_hits;
      req_mb += m.bytes.requested_mb;
      local_mb += m.bytes.local_mb;
      vtotal += v.total;
      vfull += v.full_hits;
      vpartial += v.partial_hits;
      vreq += v.bytes.requested_mb;
      vlocal += v.bytes.local_mb;
    }
    auto ratio = [](double a, double b) { return b > 0 ? a / b : 0.0; };
    t.add_row({rvs[j], ratio(full, total), ratio(local_mb, req_mb), ratio(partial, total), vtotal,
               ratio(vfull, vtotal), ratio(vpartial, vtotal), ratio(vlocal, vreq)});
  }
  return t;
}

struct SurfacePoint {
  double omega_ratio = 0.0;
  model::ObjectivePoint point;
};

struct HSurface {
  std::vector<SurfacePoint> points;
  SurfacePoint closest;   // minimum h_dist; ties keep the smaller ratio, then smaller x
  SurfacePoint farthest;  // maximum h_dist; same tie rule
  double max_argmin_gap = 0.0;  // worst |closed-form x* - grid argmin of h_sum| over ratios
};

// Normalized (t, cb, cu) surface over x and the user/stash bandwidth ratio.
// omega_b and omega_l stay fixed; omega_u = ratio * omega_b.
inline HSurface h_surface(const config::ExperimentConfig& cfg, const std::vector<double>& ratios) {
  const model::Model base(cfg.model_params());
  const std::uint32_t nx = cfg.sweep.x_points;
  HSurface s;
  double best = std::numeric_limits<double>::infinity();
  double worst = -1.0;
  for (double r : ratios) {
    auto net = cfg.net;
    net.omega_u = r * net.omega_b;
    const auto m = base.with_network(net);
    double grid_best = std::numeric_limits<double>::infinity();
    double grid_x = 0.0;
    for (std::uint32_t i = 0; i < nx; ++i) {
      const double x = static_cast<double>(i) / (nx - 1);
      SurfacePoint p{r, m.h_metric(x)};
      if (p.point.h_dist < best) {
        best = p.point.h_dist;
        s.closest = p;
      }
      if (p.point.h_dist > worst) {
        worst = p.point.h_dist;
        s.farthest = p;
      }
      if (p.point.h_sum < grid_best) {
        grid_best = p.point.h_sum;
        grid_x = x;
      }
      s.points.push_back(p);
    }
    const double x_star = net.omega_b / (net.omega_u + net.omega_b);
    s.max_argmin_gap = std::max(s.max_argmin_gap, std::abs(grid_x - x_star));
  }
  return s;
}

inline Table fig12_h_surface(const HSurface& s) {
  Table t{"fig12_h_surface", {"x", "omega_ratio", "t_norm", "cb_norm", "cu_norm", "h_sum", "h_dist"}, {}};
  for (const auto& p : s.points) {
    t.add_row({p.point.x_c, p.omega_ratio, p.point.t_norm, p.point.cb_norm, p.point.cu_norm,
               p.point.h_sum, p.point.h_dist});
  }
  return t;
}

// ---------------------------------------------------------------------------
// Orchestration
// ---------------------------------------------------------------------------

enum class Command { Generate, Analyze, Model, Simulate, Compare, Sweep };

struct RunOptions {
  std::optional<std::string> trace_path;      // load instead of generating
  std::optional<std::string> analyze_input;   // label,content_id CSV
  std::size_t groups = 7;                     // chunks when analyzing a trace
  bool observed_sources = false;
  bool log_outcomes = false;
  std::vector<config::SweepParam> sweeps;     // empty: cfg.sweep.param
};

struct Report {
  config::ExperimentConfig config;
  std::string command;
  std::optional<Trace> trace;
  std::optional<sim::RunMetrics> run;
  std::vector<sim::RequestOutcome> outcomes;
  std::vector<sim::ScenarioResult> scenarios;
  std::vector<Table> tables;
  nlohmann::json summary = nlohmann::json::object();
  std::vector<std::string> warnings;
  std::string tool_version{kToolVersion};
  std::string timestamp;
};

inline std::string_view to_string(Command c) {
  switch (c) {
    case Command::Generate: return "generate";
    case Command::Analyze: return "analyze";
    case Command::Model: return "model";
    case Command::Simulate: return "simulate";
    case Command::Compare: return "compare";
    case Command::Sweep: return "sweep";
  }
  return "?";
}

inline std::string utc_timestamp() {
  const auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

inline Trace obtain_trace(const config::ExperimentConfig& cfg, const RunOptions& opts) {
  if (opts.trace_path) {
    auto is = io::open_input(*opts.trace_path);
    return read_trace_csv(is);
  }
  return generate_trace(cfg.workload);
}

inline nlohmann::json model_summary(const model::Model& m) {
  const auto& p = m.params();
  const auto h = m.h_argmin();
  return {{"expected_unique", m.expected_unique()},
          {"expected_hit_rate", m.expected_hit_rate()},
          {"x_optimal", m.x_optimal()},
          {"x_optimal_capped", model::x_optimal_capped(p.net, p.lambda_e)},
          {"expected_T_x0_s", m.expected_completion(0.0)},
          {"expected_T_xopt_s", m.expected_completion(m.x_optimal())},
          {"expected_T_x1_s", m.expected_completion(1.0)},
          {"expected_T_min_s", m.expected_completion_min()},
          {"h_argmin_x", h.x},
          {"h_min", h.h_min},
          {"h_min_closed_form", h.h_min_literal},
          {"bandwidth_order_ok", p.net.ordered()}};
}

inline void run_sweep(const config::ExperimentConfig& cfg, config::SweepParam param,
                      const std::vector<double>& values, Report& rep) {
  switch (param) {
    case config::SweepParam::X: {
      const auto trace = generate_trace(cfg.workload);
      rep.tables.push_back(fig5b_completion_vs_x(cfg, trace, values));
      rep.tables.push_back(model_sweep_table(model::Model(cfg.model_params()), values));
      break;
    }
    case config::SweepParam::S:
      rep.tables.push_back(fig9_s_sweep(cfg, values));
      break;
    case config::SweepParam::RV:
      rep.tables.push_back(fig10_rv_sweep(cfg, values));
      break;
    case config::SweepParam::OmegaRatio: {
      const auto s = h_surface(cfg, values);
      rep.tables.push_back(fig12_h_surface(s));
      auto pt = [](const SurfacePoint& p) {
        return nlohmann::json{{"x", p.point.x_c},
                              {"omega_ratio", p.omega_ratio},
                              {"t_norm", p.point.t_norm},
                              {"cb_norm", p.point.cb_norm},
                              {"cu_norm", p.point.cu_norm},
                              {"h_dist", p.point.h_dist}};
      };
      rep.summary["h_surface"] = {{"closest", pt(s.closest)},
                                  {"farthest", pt(s.farthest)},
                                  {"max_argmin_gap", s.max_argmin_gap}};
      break;
    }
  }
}

inline Report run_experiment(const config::ExperimentConfig& cfg, Command cmd,
                             const RunOptions& opts = {}) {
  config::validate(cfg);
  Report rep;
  rep.config = cfg;
  rep.command = std::string(to_string(cmd));
  rep.timestamp = utc_timestamp();
  if (!cfg.net.ordered()) {
    rep.warnings.push_back("bandwidths violate omega_l >= omega_b >= omega_u");
  }
  if (model::x_optimal_capped(cfg.net, cfg.model.lambda_e)) {
    rep.warnings.push_back("optimal split exceeds 1 and was capped");
  }

  switch (cmd) {
    case Command::Generate:
      rep.trace = obtain_trace(cfg, opts);
      rep.summary = {{"requests", rep.trace->size()},
                     {"unique_contents", rep.trace->unique_count()},
                     {"video_requests", rep.trace->count(ContentClass::Video)}};
      break;

    case Command::Analyze: {
      std::vector<analytics::LabeledRequest> rows;
      if (opts.analyze_input) {
        auto is = io::open_input(*opts.analyze_input);
        rows = analytics::read_labeled_csv(is);
      } else {
        rows = analytics::label_trace_chunks(obtain_trace(cfg, opts), opts.groups);
      }
      const auto groups = analytics::group_sets(rows);
      if (groups.size() >= 2) {
        const auto mtx = analytics::similarity_matrix(groups);
        Table t{"similarity_matrix", {"label"}, {}};
        for (const auto& g : groups) t.columns.push_back(g.label);
        for (std::size_t i = 0; i < groups.size(); ++i) {
          std::vector<std::string> r{groups[i].label};
          for (double v : mtx[i]) r.push_back(io::format_double(v));
          t.rows.push_back(std::move(r));
        }
        rep.tables.push_back(std::move(t));
      } else {
        rep.warnings.push_back("fewer than two groups; similarity matrix skipped");
      }
      const auto counts = analytics::source_counts(rows);
      if (!counts.empty()) {
        Table t{"entropy_cdf", {"entropy", "cumulative_fraction"}, {}};
        for (auto [e, f] : analytics::entropy_cdf(counts, opts.observed_sources)) t.add_row({e, f});
        rep.tables.push_back(std::move(t));
      }
      rep.summary = {{"groups", groups.size()}, {"contents", counts.size()}, {"log_base", "e"}};
      break;
    }

    case Command::Model: {
      const model::Model m(cfg.model_params());
      const auto xs = cfg.sweep.param == config::SweepParam::X ? cfg.sweep.values
                                                               : config::default_grid(config::SweepParam::X);
      rep.tables.push_back(model_sweep_table(m, xs));
      rep.summary = model_summary(m);
      break;
    }

    case Command::Simulate: {
      const auto trace = obtain_trace(cfg, opts);
      auto params = cfg.sim_params();
      rep.run = sim::run(trace, cfg.policy, params, opts.log_outcomes ? &rep.outcomes : nullptr);
      if (opts.log_outcomes) rep.trace = trace;
      if (trace.config) rep.tables.push_back(fig6_hitrate_vs_n(cfg, *rep.run));
      break;
    }

    case Command::Compare: {
      const auto trace = obtain_trace(cfg, opts);
      rep.scenarios = sim::compare_scenarios(trace, cfg.sim_params(), cfg.scenario_list());
      rep.tables.push_back(fig11_scenarios(rep.scenarios));
      for (const auto& r : rep.scenarios) {
        if (r.name == "ustash" && trace.config) {
          rep.tables.push_back(fig6_hitrate_vs_n(cfg, r.metrics));
        }
      }
      break;
    }

    case Command::Sweep: {
      auto params = opts.sweeps;
      if (params.empty()) params.push_back(cfg.sweep.param);
      for (auto p : params) {
        const auto values = p == cfg.sweep.param ? cfg.sweep.values : config::default_grid(p);
        run_sweep(cfg, p, values, rep);
      }
      break;
    }
  }
  return rep;
}

inline nlohmann::json to_json(const Report& rep, bool embed_tables) {
  nlohmann::json j;
  j["command"] = rep.command;
  j["config"] = config::to_json(rep.config);
  j["provenance"] = {{"tool", "ustash"}, {"version", rep.tool_version}, {"timestamp", rep.timestamp}};
  j["summary"] = rep.summary;
  j["warnings"] = rep.warnings;
  if (rep.run) j["run"] = sim::to_json(*rep.run);
  nlohmann::json sc = nlohmann::json::object();
  for (const auto& r : rep.scenarios) sc[r.name] = sim::to_json(r.metrics);
  j["scenarios"] = std::move(sc);
  nlohmann::json tables = nlohmann::json::array();
  for (const auto& t : rep.tables) {
    tables.push_back(embed_tables ? to_json(t) : nlohmann::json(t.name + ".csv"));
  }
  j["tables"] = std::move(tables);
  return j;
}

// Writes every table as <dir>/<name>.csv and returns the paths written.
inline std::vector<std::string> emit_figures(const Report& rep, const std::string& dir) {
  std::filesystem::create_directories(dir);
  std::vector<std::string> written;
  for (const auto& t : rep.tables) {
    const auto path = (std::filesystem::path(dir) / (t.name + ".csv")).string();
    auto os = io::open_output(path);
    write_csv(os, t);
    if (!os) throw io::IoError("failed writing '" + path + "'");
    written.push_back(path);
  }
  return written;
}

// Writes all artifacts of a report: tables (CSV or embedded JSON), the
// trace and outcome log when present, the resolved config and report.json.
inline std::vector<std::string> write_report(const Report& rep, const std::string& dir) {
  std::filesystem::create_directories(dir);
  const bool json = rep.config.format == "json";
  std::vector<std::string> written;
  if (!json) written = emit_figures(rep, dir);
  auto path = [&](const std::string& name) { return (std::filesystem::path(dir) / name).string(); };
  if (rep.trace && rep.command == "generate") {
    if (json) {
      auto os = io::open_output(path("trace.json"));
      os << trace_to_json(*rep.trace).dump(1) << '\n';
      written.push_back(path("trace.json"));
    } else {
      auto os = io::open_output(path("trace.csv"));
      write_trace_csv(os, *rep.trace);
      written.push_back(path("trace.csv"));
    }
  }
  if (!rep.outcomes.empty() && rep.trace) {
    auto os = io::open_output(path("outcomes.csv"));
    sim::write_outcomes_csv(os, *rep.trace, rep.outcomes);
    written.push_back(path("outcomes.csv"));
  }
  {
    auto os = io::open_output(path("config.resolved.toml"));
    os << config::to_config_text(rep.config);
    written.push_back(path("config.resolved.toml"));
  }
  {
    auto os = io::open_output(path("report.json"));
    os << to_json(rep, json).dump(2) << '\n';
    if (!os) throw io::IoError("failed writing report.json");
    written.push_back(path("report.json"));
  }
  return written;
}

}  // namespace ustash::experiment
