#pragma once

// Memory decoherence time tau(eps) = inf{t >= 0 : Delta(t) > eps ||F sqrt P||^2},
// its high-fidelity asymptote tau_hat(eps) = ||F sqrt P|| / ||G sqrt P|| sqrt(eps),
// Markov tail bounds and epsilon sweeps.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <exception>
#include <optional>
#include <sstream>
#include <thread>
#include <utility>
#include <vector>

#include "qmemtime/errors.hpp"
#include "qmemtime/moments.hpp"
#include "qmemtime/numerics.hpp"
#include "qmemtime/oqho_model.hpp"

namespace qmemtime {

struct DecoherenceOptions {
  std::optional<double> t_max;          // default: 10 tau_hat, else 10 / ||A||
  std::size_t grid_points = 2001;       // scan grid on [0, t_max]
  std::optional<double> bisect_tol;     // default: 1e-9 t_max
  LyapunovOptions lyapunov;
};

struct DecoherenceReport {
  double epsilon = 0.0;
  double ref_scale = 0.0;
  double threshold = 0.0;  // epsilon * ref_scale
  double t_max = 0.0;
  std::optional<double> tau;      // nullopt: no crossing on [0, t_max]
  std::optional<double> tau_hat;  // nullopt: G sqrt P = 0
  std::optional<double> ratio;    // tau / tau_hat
  std::optional<std::pair<double, double>> crossing_bracket;
  std::optional<double> delta_at_tau;
  std::optional<double> slope_at_tau;
  bool no_crossing = false;
  bool near_tangent = false;
};

/// Closed-form high-fidelity asymptote ||F sqrt P|| / ||G sqrt P|| sqrt(eps).
inline double approx_decoherence_time(const DeviationSpec& spec, const RealMatrix& g,
                                      double epsilon) {
  if (!(epsilon > 0.0) || !std::isfinite(epsilon)) {
    throw Error(ErrorKind::kDomain, "approx_decoherence_time: epsilon must be > 0");
  }
  const double g_norm = (g * spec.sqrtP).norm();
  if (!(g_norm > 1e-14)) {
    throw Error(ErrorKind::kInapplicableAsymptote,
                "approx_decoherence_time: G sqrt(P) = 0, the square-root asymptote does not "
                "apply");
  }
  return std::sqrt(spec.ref_scale) / g_norm * std::sqrt(epsilon);
}

/// Markov bound Delta(t) / z on the tail probability of the quadratic form.
inline double tail_bound(double delta_t, double z) {
  if (!(delta_t >= 0.0) || !(z > 0.0) || !(z > delta_t)) {
    std::ostringstream os;
    os << "tail_bound: requires z > Delta(t) >= 0, got Delta(t) = " << delta_t << ", z = " << z;
    throw Error(ErrorKind::kPrecondition, os.str());
  }
  return delta_t / z;
}

inline DecoherenceReport decoherence_time(const StateSpace& ss, const DeviationSpec& spec,
                                          double epsilon, const DecoherenceOptions& opts = {}) {
  if (!(epsilon > 0.0) || !std::isfinite(epsilon)) {
    throw Error(ErrorKind::kDomain, "decoherence_time: epsilon must be > 0");
  }
  DecoherenceReport rep;
  rep.epsilon = epsilon;
  rep.ref_scale = spec.ref_scale;
  rep.threshold = epsilon * spec.ref_scale;
  const RealMatrix g = spec.F * ss.A0;
  if ((g * spec.sqrtP).norm() > 1e-14) rep.tau_hat = approx_decoherence_time(spec, g, epsilon);

  if (opts.t_max) {
    rep.t_max = *opts.t_max;
  } else if (rep.tau_hat) {
    rep.t_max = 10.0 * *rep.tau_hat;
  } else {
    const double a_norm = ss.A.norm();
    rep.t_max = a_norm > 0.0 ? 10.0 / a_norm : 1.0;
  }
  if (!(rep.t_max > 0.0) || !std::isfinite(rep.t_max)) {
    throw Error(ErrorKind::kDomain, "decoherence_time: t_max must be positive and finite");
  }
  const double bisect_tol = opts.bisect_tol.value_or(1e-9 * rep.t_max);

  const auto grid = uniform_grid(rep.t_max, std::max<std::size_t>(opts.grid_points, 2));
  const auto traj = deviation_trajectory(ss, spec, grid, opts.lyapunov);
  std::size_t hit = 0;
  for (std::size_t i = 1; i < grid.size(); ++i) {
    if (traj.delta[i] > rep.threshold) {
      hit = i;
      break;
    }
  }
  if (hit == 0) {
    rep.no_crossing = true;
    return rep;
  }

  auto delta = [&](double t) { return deviation_at(ss, spec, t, opts.lyapunov); };
  double lo = grid[hit - 1];
  double hi = grid[hit];
  while (hi - lo > bisect_tol) {
    const double mid = 0.5 * (lo + hi);
    if (mid <= lo || mid >= hi) break;
    if (delta(mid) > rep.threshold) {
      hi = mid;
    } else {
      lo = mid;
    }
  }
  const double tau = 0.5 * (lo + hi);
  rep.tau = tau;
  rep.crossing_bracket = std::make_pair(lo, hi);
  rep.delta_at_tau = delta(tau);
  const double h = 1e-4 * tau;
  rep.slope_at_tau = (delta(tau + h) - delta(std::max(0.0, tau - h))) / (2.0 * h);
  rep.near_tangent = std::abs(*rep.slope_at_tau) < 1e-8;
  if (rep.tau_hat) rep.ratio = tau / *rep.tau_hat;
  return rep;
}

struct SweepResult {
  std::vector<DecoherenceReport> reports;
  std::optional<double> slope;  // log tau vs log eps over finite entries
};

/// Evaluates decoherence_time for every epsilon, optionally on several
/// threads; reports keep the order of eps_grid.
inline SweepResult epsilon_sweep(const StateSpace& ss, const DeviationSpec& spec,
                                 const std::vector<double>& eps_grid,
                                 const DecoherenceOptions& opts = {}, unsigned threads = 1) {
  for (double e : eps_grid) {
    if (!(e > 0.0)) throw Error(ErrorKind::kDomain, "epsilon_sweep: every epsilon must be > 0");
  }
  SweepResult out;
  out.reports.resize(eps_grid.size());
  const std::size_t workers =
      std::max<std::size_t>(1, std::min<std::size_t>(threads, eps_grid.size()));
  if (workers == 1) {
    for (std::size_t i = 0; i < eps_grid.size(); ++i) {
      out.reports[i] = decoherence_time(ss, spec, eps_grid[i], opts);
    }
  } else {
    std::vector<std::exception_ptr> errors(workers);
    std::vector<std::thread> pool;
    for (std::size_t w = 0; w < workers; ++w) {
      pool.emplace_back([&, w] {
        try {
          for (std::size_t i = w; i < eps_grid.size(); i += workers) {
            out.reports[i] = decoherence_time(ss, spec, eps_grid[i], opts);
          }
        } catch (...) {
          errors[w] = std::current_exception();
        }
      });
    }
    for (auto& t : pool) t.join();
    for (auto& e : errors) {
      if (e) std::rethrow_exception(e);
    }
  }
  std::vector<double> eps, tau;
  for (const auto& r : out.reports) {
    if (r.tau) {
      eps.push_back(r.epsilon);
      tau.push_back(*r.tau);
    }
  }
  if (eps.size() >= 2) out.slope = loglog_slope(eps, tau);
  return out;
}

}  // namespace qmemtime
