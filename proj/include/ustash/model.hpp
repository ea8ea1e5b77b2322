#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <stdexcept>
#include <vector>

#include "ustash/units.hpp"
#include "ustash/workload.hpp"

// Closed-form cost / completion-time model of collaborative downloading.
//
// All contents are abstracted to a constant size (mean_size_mb), a constant
// view ratio V = 1/lambda_e and a common stash share x. E(Y) is the expected
// number of distinct contents (stash misses) after N Zipf requests; the
// remaining N - E(Y) requests are served locally.
namespace ustash::model {

// Bandwidths in MB/s.
struct NetworkParams {
  double omega_u = 500.0 * units::kKbpsToMBps;
  double omega_b = 800.0 * units::kKbpsToMBps;
  double omega_l = 6.0 * units::kMbpsToMBps;

  // The derivations assume omega_l >= omega_b >= omega_u.
  bool ordered() const { return omega_l >= omega_b && omega_b >= omega_u; }

  void validate() const {
    if (!(omega_u > 0.0 && omega_b > 0.0 && omega_l > 0.0)) {
      throw std::domain_error("bandwidths must be > 0");
    }
  }
};

// Cents per MB.
struct CostParams {
  double phi_u = 10.0;
  double phi_b = 3.0;

  void validate() const {
    if (!(phi_u >= 0.0 && phi_b >= 0.0)) throw std::domain_error("costs must be >= 0");
  }
};

struct Gammas {
  double t = 1.0;
  double b = 1.0;
  double u = 1.0;

  bool unit() const { return t == 1.0 && b == 1.0 && u == 1.0; }
};

struct ModelParams {
  ZipfParams zipf{0.716, 2'000'000};
  double mean_size_mb = 0.0006 * 2.102;
  double lambda_e = 1.0;
  std::uint64_t n = 120627;
  NetworkParams net;
  CostParams cost;
  Gammas gammas;

  double view_ratio() const { return 1.0 / lambda_e; }

  void validate() const {
    zipf.validate();
    net.validate();
    cost.validate();
    if (!(mean_size_mb > 0.0)) throw std::domain_error("mean size must be > 0");
    if (!(lambda_e > 0.0)) throw std::domain_error("lambda_e must be > 0");
    if (n < 1) throw std::domain_error("request count must be >= 1");
    if (!(gammas.t >= 0.0 && gammas.b >= 0.0 && gammas.u >= 0.0)) {
      throw std::domain_error("gammas must be >= 0");
    }
  }
};

enum class CostMode { Exact, Approx };

struct ObjectivePoint {
  double x_c = 0.0;
  double t_norm = 0.0;
  double cb_norm = 0.0;
  double cu_norm = 0.0;
  double h_sum = 0.0;
  double h_dist = 0.0;
};

struct HOptimum {
  double x = 0.0;
  double h_min = 0.0;      // h_sum evaluated at x
  double h_min_literal = 0.0;  // literal closed form (unit gammas only), see h_min_closed_form
  bool closed_form = false;
};

// ---------------------------------------------------------------------------
// Per-request quantities
// ---------------------------------------------------------------------------

// Time for a collaborative miss: max of the user leg and the stash leg.
inline double completion_time_miss(double size_mb, double view_ratio, double x,
                                   const NetworkParams& net) {
  if (!(size_mb > 0.0)) throw std::domain_error("size must be > 0");
  if (!(x >= 0.0) || !(view_ratio <= 1.0)) throw std::domain_error("need 0 <= x <= V <= 1");
  if (x > view_ratio) throw std::domain_error("stash share exceeds requested view ratio");
  const double user_leg = size_mb * (view_ratio - x) / net.omega_u;
  const double stash_leg = size_mb * x / net.omega_b;
  return std::max(user_leg, stash_leg);
}

// E(x_opt) = omega_b / (lambda_e (omega_u + omega_b)), unclamped.
inline double x_optimal_raw(const NetworkParams& net, double lambda_e) {
  return net.omega_b / (lambda_e * (net.omega_u + net.omega_b));
}

inline bool x_optimal_capped(const NetworkParams& net, double lambda_e) {
  return x_optimal_raw(net, lambda_e) > 1.0;
}

inline double x_optimal(const NetworkParams& net, double lambda_e) {
  net.validate();
  if (!(lambda_e > 0.0)) throw std::domain_error("lambda_e must be > 0");
  return std::min(x_optimal_raw(net, lambda_e), 1.0);
}

inline double expected_hit_rate(const ZipfParams& p, double n) {
  if (!(n >= 1.0)) throw std::domain_error("request count must be >= 1");
  return std::max(0.0, (n - expected_unique(p, n)) / n);
}

// ---------------------------------------------------------------------------
// Aggregate model
// ---------------------------------------------------------------------------

// Holds the parameters together with E(Y) so that sweeps over x or over the
// network parameters do not recompute the O(M) popularity sum.
class Model {
 public:
  explicit Model(const ModelParams& p) : p_(p) {
    p_.validate();
    expected_unique_ = ustash::expected_unique(p_.zipf, static_cast<double>(p_.n));
  }

  const ModelParams& params() const { return p_; }
  double expected_unique() const { return expected_unique_; }
  double n() const { return static_cast<double>(p_.n); }

  Model with_network(const NetworkParams& net) const {
    net.validate();
    Model m = *this;
    m.p_.net = net;
    return m;
  }

  double expected_hit_rate() const { return std::max(0.0, (n() - expected_unique_) / n()); }

  double x_optimal() const { return model::x_optimal(p_.net, p_.lambda_e); }

  // Expected completion time under the constant abstraction. Exact mode
  // evaluates the per-item sum instead of factoring out E(Y).
  double expected_completion(double x, CostMode mode = CostMode::Approx) const {
    check_x(x);
    return completion_at(x, p_.view_ratio(), mode);
  }

  // Closed-form minimum at the optimal split. Falls back to evaluating the
  // expected completion at x = 1 when the optimal split formula exceeds 1.
  double expected_completion_min() const {
    const auto& net = p_.net;
    if (x_optimal_capped(net, p_.lambda_e)) return expected_completion(1.0);
    const double bt = p_.mean_size_mb;
    return bt / n() *
           (expected_unique_ * (1.0 / (p_.lambda_e * (net.omega_u + net.omega_b)) - 1.0 / net.omega_l) +
            n() / net.omega_l);
  }

  // Stash cost: phi_b * s * x summed over expected misses.
  double stash_cost(double x, CostMode mode = CostMode::Approx) const {
    check_x(x);
    return p_.cost.phi_b * p_.mean_size_mb * x * misses(mode);
  }

  // User cost with y = V - x. Affine in x; negative when x > V.
  double user_cost(double x, CostMode mode = CostMode::Approx) const {
    check_x(x);
    return p_.cost.phi_u * p_.mean_size_mb * (p_.view_ratio() - x) * misses(mode);
  }

  double system_cost(double x, CostMode mode = CostMode::Approx) const {
    return stash_cost(x, mode) + user_cost(x, mode);
  }

  // Completion time with V = 1, as used by the combined objective.
  double completion_full_view(double x) const {
    check_x(x);
    return completion_at(x, 1.0, CostMode::Approx);
  }

  // max over x in [0,1] of completion_full_view. The function is convex
  // piecewise linear, so the maximum sits at a boundary.
  double max_completion_full_view() const {
    return std::max(completion_full_view(0.0), completion_full_view(1.0));
  }

  // Combined objective H with V = 1 and each metric normalized by its
  // maximum over [0,1]. h_dist is the Euclidean distance to the origin.
  ObjectivePoint h_metric(double x) const {
    check_x(x);
    ObjectivePoint pt;
    pt.x_c = x;
    const double tmax = max_completion_full_view();
    pt.t_norm = completion_full_view(x) / tmax;
    // C_b grows linearly from 0 at x=0; C_u shrinks linearly to 0 at x=1.
    const double cb_max = p_.cost.phi_b * p_.mean_size_mb * expected_unique_;
    const double cu_max = p_.cost.phi_u * p_.mean_size_mb * expected_unique_;
    pt.cb_norm = cb_max > 0.0 ? (cb_max * x) / cb_max : 0.0;
    pt.cu_norm = cu_max > 0.0 ? (cu_max * (1.0 - x)) / cu_max : 0.0;
    const auto& g = p_.gammas;
    pt.h_sum = g.t * pt.t_norm + g.b * pt.cb_norm + g.u * pt.cu_norm;
    pt.h_dist = std::hypot(g.t * pt.t_norm, g.b * pt.cb_norm, g.u * pt.cu_norm);
    return pt;
  }

  // Literal closed form for min H under unit gammas and V = 1.
  double h_min_closed_form() const {
    const auto& net = p_.net;
    const double ey = expected_unique_;
    return 1.0 + 1.0 / (n() * net.omega_u) -
           net.omega_l * net.omega_b * ey /
               ((ey * (net.omega_l - net.omega_u) + n() * net.omega_u) * (net.omega_u + net.omega_b));
  }

  // Minimizer of h_sum over x in [0,1]. Unit gammas use the closed form
  // x* = omega_b / (omega_u + omega_b); other weights use a grid search.
  HOptimum h_argmin(double grid_step = 1e-4) const {
    HOptimum best;
    if (p_.gammas.unit()) {
      best.closed_form = true;
      best.x = p_.net.omega_b / (p_.net.omega_u + p_.net.omega_b);
      best.h_min = h_metric(best.x).h_sum;
      best.h_min_literal = h_min_closed_form();
      return best;
    }
    const auto steps = static_cast<std::size_t>(std::llround(1.0 / grid_step));
    best.h_min = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i <= steps; ++i) {
      const double x = std::min(1.0, static_cast<double>(i) * grid_step);
      const double h = h_metric(x).h_sum;
      if (h < best.h_min) {
        best.h_min = h;
        best.x = x;
      }
    }
    return best;
  }

 private:
  static void check_x(double x) {
    if (!(x >= 0.0 && x <= 1.0)) throw std::domain_error("split x must lie in [0,1]");
  }

  // Expected number of misses: E(Y), or the explicit sum over items.
  double misses(CostMode mode) const {
    if (mode == CostMode::Approx) return expected_unique_;
    return sum_over_items([](double q, double) { return q; });
  }

  template <class F>
  double sum_over_items(F&& term) const {
    const double norm = harmonic_number(p_.zipf);
    double sum = 0.0;
    for (std::uint64_t k = p_.zipf.m; k >= 1; --k) {
      const double pk = std::pow(static_cast<double>(k), -p_.zipf.s) / norm;
      sum += term(requested_at_least_once(pk, n()), pk);
    }
    return sum;
  }

  double completion_at(double x, double v, CostMode mode) const {
    const auto& net = p_.net;
    const double bt = p_.mean_size_mb;
    const double miss_time = bt * std::max((v - x) / net.omega_u, x / net.omega_b);
    const double hit_time = bt / net.omega_l;
    if (mode == CostMode::Approx) {
      return (expected_unique_ * miss_time + (n() - expected_unique_) * hit_time) / n();
    }
    const double nn = n();
    return sum_over_items([&](double q, double pk) {
             return miss_time * q + hit_time * (pk * nn - q);
           }) /
           nn;
  }

  ModelParams p_;
  double expected_unique_ = 0.0;
};

// Free-function forms over plain parameters.

inline double expected_completion(const ModelParams& mp, double x,
                                  CostMode mode = CostMode::Approx) {
  return Model(mp).expected_completion(x, mode);
}

inline double expected_completion_min(const ModelParams& mp) {
  return Model(mp).expected_completion_min();
}

inline double stash_cost(const ModelParams& mp, double x, CostMode mode = CostMode::Approx) {
  return Model(mp).stash_cost(x, mode);
}

inline double user_cost(const ModelParams& mp, double x, CostMode mode = CostMode::Approx) {
  return Model(mp).user_cost(x, mode);
}

inline double system_cost(const ModelParams& mp, double x) { return Model(mp).system_cost(x); }

inline ObjectivePoint h_metric(const ModelParams& mp, double x) { return Model(mp).h_metric(x); }

inline HOptimum h_argmin(const ModelParams& mp) { return Model(mp).h_argmin(); }

}  // namespace ustash::model
