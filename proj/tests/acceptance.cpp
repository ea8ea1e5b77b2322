// Acceptance checks. Prints one PASS/FAIL line per criterion; exit status is
// nonzero when any selected criterion fails.
//
//   acceptance                 all criteria
//   acceptance --criterion 3   just one

#include <sys/wait.h>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <functional>
#include <iostream>
#include <random>
#include <sstream>
#include <string>
#include <unordered_set>
#include <vector>

#include <CLI11.hpp>

#include "ustash/experiment.hpp"

using namespace ustash;

namespace {

struct Outcome {
  bool pass = true;
  std::ostringstream detail;

  void check(bool ok, const std::string& what) {
    if (!ok) pass = false;
    detail << (ok ? "" : "[x] ") << what << "; ";
  }
  void info(const std::string& what) { detail << what << "; "; }
};

std::string num(double v, int prec = 4) {
  std::ostringstream os;
  os.precision(prec);
  os << std::fixed << v;
  return os.str();
}

bool within(double v, double target, double tol) { return std::abs(v - target) <= tol; }

const config::ExperimentConfig& defaults() {
  static const auto c = config::parse_config("");
  return c;
}

// -- AC1 ---------------------------------------------------------------------

void ac1(Outcome& o) {
  model::NetworkParams net;
  net.omega_u = units::parse_bandwidth("500kbps");
  net.omega_b = units::parse_bandwidth("800kbps");
  net.omega_l = units::parse_bandwidth("6Mbps");
  const double x = model::x_optimal(net, 1.0);
  o.check(within(x, 0.6154, 0.0005), "x_opt=" + num(x, 6) + " want 0.6154+-0.0005");
}

// -- AC2 ---------------------------------------------------------------------

void ac2(Outcome& o) {
  const model::Model m(defaults().model_params());
  const double xo = m.x_optimal();
  const double t0 = m.expected_completion(0.0);
  const double t1 = m.expected_completion(1.0);
  const double to = m.expected_completion(xo);
  const double r0 = to / t0;
  const double r1 = to / t1;
  o.check(within(r0, 0.40, 0.10), "T(xopt)/T(0)=" + num(r0) + " want 0.40+-0.10");
  o.check(within(r1, 0.75, 0.10), "T(xopt)/T(1)=" + num(r1) + " want 0.75+-0.10");

  // U-shape: strictly decreasing up to x_opt, strictly increasing after,
  // on a fine grid that contains x_opt itself.
  std::vector<double> xs;
  for (int i = 0; i <= 1000; ++i) xs.push_back(i / 1000.0);
  xs.push_back(xo);
  std::sort(xs.begin(), xs.end());
  xs.erase(std::unique(xs.begin(), xs.end()), xs.end());
  bool ushape = true;
  for (std::size_t i = 0; i + 1 < xs.size(); ++i) {
    const double a = m.expected_completion(xs[i]);
    const double b = m.expected_completion(xs[i + 1]);
    if (xs[i + 1] <= xo ? !(b < a) : !(b > a)) ushape = false;
  }
  o.check(ushape, "U-shape with unique minimum at x_opt=" + num(xo, 4));
  o.info("reductions " + num(100 * (1 - r0), 1) + "% vs x=0, " + num(100 * (1 - r1), 1) + "% vs x=1");
}

// -- AC3 ---------------------------------------------------------------------

void ac3(Outcome& o) {
  const auto& cfg = defaults();
  const auto trace = generate_trace(cfg.workload);
  const auto run = sim::run(trace, cfg.policy, cfg.sim_params());
  o.check(trace.size() >= 100000, "N=" + std::to_string(trace.size()));
  o.check(run.hit_rate >= 0.15 && run.hit_rate <= 0.25, "sim hit rate=" + num(run.hit_rate) + " want [0.15,0.25]");
  const double printed = (120627.0 - 99576.0) / 120627.0;
  o.check(within(printed, 0.1745, 0.0005), "(N-E(Y))/N for N=120627, E(Y)=99576: " + num(printed));
  const model::Model m(cfg.model_params());
  o.info("model E(Y)=" + num(m.expected_unique(), 0) + " hit rate " + num(m.expected_hit_rate()));
}

// -- AC4 ---------------------------------------------------------------------

void ac4(Outcome& o) {
  auto cfg = defaults();
  cfg.workload.r_v = 1e12;  // non-video only, V = 1
  cfg.workload.nonvideo.size.fixed_mb = 2.0;
  cfg.hit_time = sim::HitTime::FullSize;
  const auto trace = generate_trace(cfg.workload);
  o.check(trace.count(ContentClass::Video) == 0, "no video requests");

  model::ModelParams mp = cfg.model_params();
  mp.zipf = cfg.workload.nonvideo.zipf;
  mp.mean_size_mb = 2.0;
  mp.n = trace.size();
  mp.lambda_e = 1.0;
  const model::Model m(mp);

  auto params = cfg.sim_params();
  std::vector<double> xs;
  for (int i = 0; i <= 20; ++i) xs.push_back(i / 20.0);
  const auto runs = experiment::parallel_map(
      xs.size(), [&](std::size_t i) { return sim::run(trace, sim::SplitPolicy::fixed(xs[i]), params); });
  double worst = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    const double model_t = m.expected_completion(xs[i]);
    worst = std::max(worst, std::abs(runs[i].mean_completion_s - model_t) / model_t);
  }
  o.check(worst <= 0.05, "max relative error over 21 x=" + num(worst, 5) + " want <=0.05");

  // Monte-Carlo band of the unique count from independent request streams.
  const ZipfSampler sampler(mp.zipf);
  const int reps = 200;
  std::vector<double> uniques(reps);
  for (int r = 0; r < reps; ++r) {
    std::mt19937_64 rng(1000 + r);
    std::unordered_set<std::uint64_t> seen;
    seen.reserve(trace.size());
    for (std::size_t i = 0; i < trace.size(); ++i) seen.insert(sampler(rng));
    uniques[r] = static_cast<double>(seen.size());
  }
  double mean = 0, var = 0;
  for (double u : uniques) mean += u / reps;
  for (double u : uniques) var += (u - mean) * (u - mean) / (reps - 1);
  const double sd = std::sqrt(var);
  const double ey = m.expected_unique();
  const double misses = static_cast<double>(runs[0].misses);
  o.check(std::abs(ey - mean) <= 3 * sd / std::sqrt(reps) + 1.0,
          "E(Y)=" + num(ey, 1) + " vs MC mean " + num(mean, 1));
  o.check(std::abs(misses - ey) <= 3 * sd,
          "sim misses=" + num(misses, 0) + " in E(Y)+-3sd (sd=" + num(sd, 1) + ")");
}

// -- AC5 ---------------------------------------------------------------------

void ac5(Outcome& o) {
  auto cfg = defaults();
  cfg.sweep.x_points = 101;
  const auto s = experiment::h_surface(cfg, config::default_grid(config::SweepParam::OmegaRatio));
  const auto& c = s.closest.point;
  o.check(within(c.t_norm, 0.33, 0.07) && within(c.cb_norm, 0.67, 0.07) && within(c.cu_norm, 0.37, 0.07),
          "closest (" + num(c.t_norm, 3) + "," + num(c.cb_norm, 3) + "," + num(c.cu_norm, 3) +
              ") want (0.33,0.67,0.37)+-0.07");
  o.check(within(c.h_dist, 0.83, 0.05), "closest dist=" + num(c.h_dist) + " want 0.83+-0.05");
  const auto& f = s.farthest.point;
  o.check(within(f.t_norm, 1, 1e-9) && within(f.cb_norm, 0, 1e-9) && within(f.cu_norm, 1, 1e-9) &&
              within(f.h_dist, std::sqrt(2.0), 1e-9),
          "farthest (" + num(f.t_norm, 3) + "," + num(f.cb_norm, 3) + "," + num(f.cu_norm, 3) +
              ") dist=" + num(f.h_dist, 5));
  const double res = 1.0 / (cfg.sweep.x_points - 1);
  o.check(s.max_argmin_gap <= res + 1e-12, "closed-form vs grid argmin gap=" + num(s.max_argmin_gap) +
                                               " want <=" + num(res, 2));
  o.info("at x=" + num(c.x_c, 2) + " omega_u/omega_b=" + num(s.closest.omega_ratio, 4));
}

// -- AC6 ---------------------------------------------------------------------

void ac6(Outcome& o) {
  auto cfg = defaults();
  cfg.sweep.replications = 8;
  const auto t = experiment::fig10_rv_sweep(cfg, {1, 50, 100, 200, 400});
  auto col = [&](const std::string& name) {
    const auto it = std::find(t.columns.begin(), t.columns.end(), name);
    std::vector<double> v;
    for (const auto& r : t.rows) v.push_back(std::stod(r[it - t.columns.begin()]));
    return v;
  };
  const auto rv = col("r_v");
  const auto full = col("video_hit_rate");
  const auto partial = col("video_partial_hit_rate");
  o.check(within(full[0], 0.12, 0.04), "R_v=1 video full=" + num(100 * full[0], 2) + "% want 12+-4");
  o.check(within(partial[0], 0.06, 0.04), "R_v=1 video partial=" + num(100 * partial[0], 2) + "% want 6+-4");
  for (std::size_t i = 0; i < rv.size(); ++i) {
    if (rv[i] > 200) {
      o.check(partial[i] > full[i], "R_v=" + num(rv[i], 0) + " partial " + num(100 * partial[i], 2) +
                                        "% > full " + num(100 * full[i], 2) + "%");
    } else if (i > 0) {
      o.info("R_v=" + num(rv[i], 0) + " full " + num(100 * full[i], 2) + "% partial " + num(100 * partial[i], 2) +
             "%");
    }
  }
  o.info(std::to_string(cfg.sweep.replications) + " replications per point");
}

// -- AC7 ---------------------------------------------------------------------

void ac7(Outcome& o) {
  const auto& cfg = defaults();
  const auto trace = generate_trace(cfg.workload);
  const auto res = sim::compare_scenarios(trace, cfg.sim_params(), cfg.scenario_list());
  auto get = [&](const std::string& n) -> const sim::RunMetrics& {
    for (const auto& r : res) {
      if (r.name == n) return r.metrics;
    }
    throw std::runtime_error("missing scenario " + n);
  };
  const auto& direct = get("direct");
  const auto& ustash = get("ustash");
  const auto& cache = get("cache-wifi");
  const double ratio = ustash.user_cost_cents / direct.user_cost_cents;
  o.check(ratio <= 0.5, "ustash/direct user cost=" + num(ratio) + " want <=0.5");
  o.check(ustash.stash_cost_cents < cache.stash_cost_cents,
          "stash cost ustash " + num(ustash.stash_cost_cents, 0) + " < cache-wifi " + num(cache.stash_cost_cents, 0));
}

// -- AC8 ---------------------------------------------------------------------

void ac8(Outcome& o) {
  const std::vector<std::string> binaries{USTASH_PROPERTY_BINARIES};
  int total = 0;
  for (const auto& bin : binaries) {
    const std::string cmd = bin + " --gtest_filter='*Property.*' 2>&1";
    FILE* pipe = popen(cmd.c_str(), "r");
    if (!pipe) throw std::runtime_error("cannot run " + bin);
    std::string out;
    char buf[4096];
    while (std::fgets(buf, sizeof buf, pipe)) out += buf;
    const int status = pclose(pipe);
    int passed = 0;
    if (const auto at = out.find("[  PASSED  ] "); at != std::string::npos) {
      passed = std::atoi(out.c_str() + at + 13);
    }
    const bool ok = WIFEXITED(status) && WEXITSTATUS(status) == 0 && passed > 0;
    total += passed;
    o.check(ok, bin.substr(bin.find_last_of('/') + 1) + " " + std::to_string(passed) + " passed");
  }
  o.info(std::to_string(total) + " property tests");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"acceptance checks"};
  int only = 0;
  app.add_option("--criterion", only, "run one criterion (1-8)")->check(CLI::Range(1, 8));
  CLI11_PARSE(app, argc, argv);

  const std::vector<std::function<void(Outcome&)>> criteria{ac1, ac2, ac3, ac4, ac5, ac6, ac7, ac8};
  bool all = true;
  for (int i = 1; i <= 8; ++i) {
    if (only && i != only) continue;
    Outcome o;
    const auto start = std::chrono::steady_clock::now();
    try {
      criteria[i - 1](o);
    } catch (const std::exception& e) {
      o.check(false, std::string("exception: ") + e.what());
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    std::cout << "AC" << i << ' ' << (o.pass ? "PASS" : "FAIL") << ' ' << o.detail.str() << '(' << num(secs, 1)
              << " s)" << std::endl;
    all = all && o.pass;
  }
  return all ? 0 : 1;
}
