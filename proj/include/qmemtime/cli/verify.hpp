#pragma once

// The invariant suite behind `qmemtime verify`. Every check records its
// measured value and tolerance; checks that do not apply to the scenario
// (for instance optimizer checks in single mode) are reported as skipped.
// Nothing here depends on timing or thread count, so reports are
// byte-identical across runs.

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <string>
#include <vector>

#include "json.hpp"
#include "qmemtime/cli/model.hpp"
#include "qmemtime/reference.hpp"

namespace qmemtime::cli {

struct Check {
  std::string name;
  std::string status;  // "pass", "fail" or "skip"
  double value = 0.0;
  double tolerance = 0.0;
  std::string note;
};

namespace detail {

inline Check bound(std::string name, double value, double tol, std::string note = {}) {
  const bool ok = std::isfinite(value) && value <= tol;
  return {std::move(name), ok ? "pass" : "fail", value, tol, std::move(note)};
}

inline Check within(std::string name, double value, double lo, double hi, std::string note = {}) {
  const bool ok = std::isfinite(value) && value >= lo && value <= hi;
  return {std::move(name), ok ? "pass" : "fail", value, 0.5 * (hi - lo), std::move(note)};
}

inline Check skip(std::string name, std::string note) {
  return {std::move(name), "skip", 0.0, 0.0, std::move(note)};
}

inline double relative_gap(const RealMatrix& x, const RealMatrix& ref) {
  const double scale = ref.norm();
  return scale > 0.0 ? (x - ref).norm() / scale : (x - ref).norm();
}

inline std::vector<double> log_times() { return log_grid(1e-4, 1e-2, 21); }

/// Delta and F Re V F^T on the short-horizon log grid (0 prepended for the integrator).
inline DeviationTrajectory short_trajectory(const StateSpace& ss, const DeviationSpec& dev) {
  std::vector<double> grid{0.0};
  for (double t : log_times()) grid.push_back(t);
  return deviation_trajectory(ss, dev, grid);
}

}  // namespace detail

inline std::vector<Check> verify_checks(const Model& m, const Analysis& an) {
  using detail::bound;
  using detail::skip;
  using detail::within;
  std::vector<Check> out;
  auto guarded = [&](const std::string& name, const std::function<void()>& body) {
    try {
      body();
    } catch (const Error& e) {
      out.push_back({name, "fail", std::numeric_limits<double>::quiet_NaN(), 0.0,
                     std::string(to_string(e.kind())) + ": " + e.what()});
    }
  };
  const StateSpace& ss = m.ss;
  const IsolationDecomposition& dec = an.dec;
  const DeviationSpec& dev = an.dev;
  const Eigen::Index n = ss.A.rows();
  const double a_norm = ss.A.norm();
  const double b_norm = ss.B.norm();

  // Realization.
  if (m.composite) {
    out.push_back(bound("realization_A_blocks_vs_composite",
                        (m.composite->A_blocks - ss.A).norm() / (1.0 + a_norm), 1e-10));
    out.push_back(bound("realization_B_blocks_vs_composite",
                        (m.composite->B_blocks - ss.B).norm() / (1.0 + b_norm), 1e-10));
  } else {
    out.push_back(skip("realization_A_blocks_vs_composite", "single oscillator"));
    out.push_back(skip("realization_B_blocks_vs_composite", "single oscillator"));
  }
  {
    const RealMatrix& th = ss.ccr.theta;
    const RealMatrix pr = ss.A * th + th * ss.A.transpose() +
                          ss.B * ss.ccr.j_field * ss.B.transpose();
    out.push_back(bound("physical_realizability", pr.norm() / (1.0 + a_norm), 1e-10));
    out.push_back(bound("mho_real_part_psd", -min_eigenvalue_symmetric(ss.mho.re), 1e-10));
  }

  // Partial isolation.
  out.push_back(bound("isolation_rank_F", std::abs(double(numerical_rank(dec.F) - dec.s)), 0.0));
  if (m.scenario.isolation.F_override && !dec.partially_isolated) {
    out.push_back(skip("isolation_FB_zero", "F_override does not isolate (F B != 0)"));
  } else {
    out.push_back(bound("isolation_FB_zero", dec.fb_residual / (1.0 + b_norm), 1e-10));
  }
  if (dec.partially_isolated) {
    out.push_back(bound("isolation_FA_equals_G", dec.fa_minus_g / (1.0 + a_norm), 1e-10));
  } else {
    out.push_back(skip("isolation_FA_equals_G", "F B != 0"));
  }

  // Covariance: Lyapunov ODE against the quadrature Gramian.
  guarded("covariance_vs_quadrature", [&] {
    const std::vector<double> times{0.1, 1.0, 5.0};
    const auto ode = integrate_lyapunov(ss.A, ss.mho, {0.0, 0.1, 1.0, 5.0});
    double worst = 0.0;
    for (std::size_t k = 0; k < times.size(); ++k) {
      const HermitianPair q = gramian_quadrature(ss.A, ss.B, ss.ccr.j_field, times[k]);
      RealMatrix x(n, 2 * n), ref(n, 2 * n);
      x << ode[k + 1].re, ode[k + 1].im;
      ref << q.re, q.im;
      worst = std::max(worst, detail::relative_gap(x, ref));
    }
    out.push_back(bound("covariance_vs_quadrature", worst, 1e-8));
  });

  // Short-horizon growth of Delta.
  guarded("short_horizon_slope", [&] {
    const auto traj = detail::short_trajectory(ss, dev);
    const auto ts = detail::log_times();
    std::vector<double> delta(traj.delta.begin() + 1, traj.delta.end());
    const ShortHorizon sh = short_horizon(ss, dev);
    if (dec.partially_isolated) {
      if (!(sh.leading_coefficient > 1e-14)) {
        out.push_back(skip("short_horizon_slope", "G sqrt(P) = 0"));
        out.push_back(skip("short_horizon_leading_coefficient", "G sqrt(P) = 0"));
      } else {
        out.push_back(within("short_horizon_slope", loglog_slope(ts, delta), 1.95, 2.05,
                             "expected slope 2"));
        const double t0 = ts.front();
        out.push_back(bound("short_horizon_leading_coefficient",
                            std::abs(delta.front() / (t0 * t0) / sh.leading_coefficient - 1.0),
                            0.02));
      }
    } else {
      out.push_back(within("short_horizon_slope", loglog_slope(ts, delta), 0.95, 1.05,
                           "F B != 0, expected slope 1"));
      out.push_back(skip("short_horizon_leading_coefficient", "F B != 0"));
    }
    if (!dec.partially_isolated || sh.third_order_matrix.norm() <= 1e-14) {
      out.push_back(skip("third_order_slope", "requires F B = 0 and G B != 0"));
      out.push_back(skip("third_order_matrix", "requires F B = 0 and G B != 0"));
    } else {
      std::vector<double> norms;
      for (std::size_t i = 1; i < traj.v_re_F.size(); ++i) norms.push_back(traj.v_re_F[i].norm());
      out.push_back(within("third_order_slope", loglog_slope(ts, norms), 2.95, 3.05,
                           "expected slope 3"));
      const double t0 = ts.front();
      out.push_back(bound("third_order_matrix",
                          detail::relative_gap(traj.v_re_F[1] / (t0 * t0 * t0),
                                               sh.third_order_matrix),
                          0.02));
    }
  });

  // Decoherence time against its asymptote.
  guarded("decoherence_ratio", [&] {
    const RealMatrix g = dev.F * ss.A0;
    if (!dec.partially_isolated || (g * dev.sqrtP).norm() <= 1e-14) {
      out.push_back(skip("decoherence_ratio", "square-root asymptote does not apply"));
      out.push_back(skip("decoherence_sweep_slope", "square-root asymptote does not apply"));
      out.push_back(skip("decoherence_monotone", "square-root asymptote does not apply"));
      return;
    }
    const DecoherenceReport rep = decoherence_time(ss, dev, 1e-5);
    out.push_back(within("decoherence_ratio", rep.ratio.value_or(std::nan("")), 0.95, 1.05,
                         "tau / tau_hat at epsilon = 1e-5"));
    const SweepResult sw = epsilon_sweep(ss, dev, kDefaultEpsGrid);
    out.push_back(within("decoherence_sweep_slope", sw.slope.value_or(std::nan("")), 0.45, 0.55,
                         "log tau vs log epsilon"));
    double drop = 0.0;
    bool all_found = true;
    for (std::size_t i = 0; i < sw.reports.size(); ++i) {
      if (!sw.reports[i].tau) all_found = false;
    }
    // eps grid is decreasing, so tau must be nonincreasing along it.
    for (std::size_t i = 1; all_found && i < sw.reports.size(); ++i) {
      const bool larger_eps = sw.reports[i - 1].epsilon > sw.reports[i].epsilon;
      const double prev = *sw.reports[i - 1].tau;
      const double cur = *sw.reports[i].tau;
      drop = std::max(drop, larger_eps ? cur - prev : prev - cur);
    }
    out.push_back(all_found ? bound("decoherence_monotone", drop, 0.0)
                            : Check{"decoherence_monotone", "fail", std::nan(""), 0.0,
                                    "missing crossing"});
  });

  // Frequency-domain identity and independence from the complement T.
  guarded("frequency_identity", [&] {
    SeededRng rng(m.scenario.seed ^ 0x9e3779b97f4a7c15ULL);
    const double scale = 1.0 + dec.a.norm();
    double worst = 0.0;
    std::vector<ComplexPoint> points;
    while (points.size() < 10) {
      const ComplexPoint u{(1.0 + 2.0 * rng.uniform()) * scale, rng.symmetric() * scale};
      points.push_back(u);
      const MatrixPair full = full_noise_response(ss, dec.F, u);
      const TransferValues tv = transfer_eval(dec, u);
      worst = std::max(worst, (full - tv.noise_map).norm());
    }
    out.push_back(bound("frequency_identity", worst, 1e-8, "10 points with Re u > ||S A S^-1||"));
    if (dec.T.rows() == 0) {
      out.push_back(skip("complement_invariance", "s = n"));
      return;
    }
    const Eigen::Index rest = dec.T.rows();
    const RealMatrix q = RealMatrix::Identity(rest, rest) + rng.matrix(rest, rest, 0.3);
    const RealMatrix t_alt = q * dec.T + rng.matrix(rest, dec.s) * dec.F;
    const IsolationDecomposition alt = decompose(ss, dec.F, t_alt);
    const double alt_scale = 1.0 + std::max(dec.a.norm(), alt.a.norm());
    double gap = 0.0;
    for (int k = 0; k < 5; ++k) {
      const ComplexPoint u{(1.0 + 2.0 * rng.uniform()) * alt_scale, rng.symmetric() * alt_scale};
      gap = std::max(gap, (transfer_eval(dec, u).noise_map - transfer_eval(alt, u).noise_map).norm());
    }
    out.push_back(bound("complement_invariance", gap, 1e-8));
  });

  // Direct coupling optimization.
  static const char* kOptChecks[] = {"g_symmetric",     "g_negative_semidefinite",
                                     "g_pairing",       "optimizer_residual",
                                     "gradient_vs_finite_differences",
                                     "optimizer_local_minimum", "optimizer_improves_tau_hat"};
  if (!m.composite) {
    for (const char* c : kOptChecks) out.push_back(skip(c, "single oscillator"));
    return out;
  }
  guarded("optimizer", [&] {
    const CouplingProblem pr = coupling_problem(m, an);
    const OptimizerBlocks blocks = blocks_of(pr);
    const RealMatrix gm = assemble_g(blocks);
    out.push_back(bound("g_symmetric", (gm - gm.transpose()).cwiseAbs().maxCoeff(), 1e-12));
    out.push_back(bound("g_negative_semidefinite",
                        max_eigenvalue_symmetric(0.5 * (gm + gm.transpose())), 1e-10));
    SeededRng rng(m.scenario.seed + 17);
    const Eigen::Index n1 = pr.n1;
    const Eigen::Index n2 = n - n1;
    double pairing = 0.0;
    for (int k = 0; k < 50; ++k) {
      const RealMatrix x = rng.matrix(n1, n2);
      const RealMatrix y = rng.matrix(n1, n2);
      pairing = std::max(pairing, std::abs(frobenius_inner(apply_g(x, blocks), y) -
                                           frobenius_inner(x, apply_g(y, blocks))));
    }
    out.push_back(bound("g_pairing", pairing, 1e-10, "50 random pairs"));

    const RealMatrix r12 = m.scenario.interconnection->R12;
    const OptimizationResult res = optimal_coupling(pr, r12, kDefaultEpsilon);
    out.push_back(bound("optimizer_residual", res.residual / (1.0 + res.k_norm), 1e-8));

    double fd_gap = 0.0;
    for (const RealMatrix* at : {&r12, &res.R12_opt}) {
      const RealMatrix grad = objective_and_gradient(*at, pr).grad;
      const double h = 1e-6;
      for (Eigen::Index j = 0; j < n2; ++j) {
        for (Eigen::Index i = 0; i < n1; ++i) {
          RealMatrix up = *at, dn = *at;
          up(i, j) += h;
          dn(i, j) -= h;
          const double fd =
              (objective_and_gradient(up, pr).f - objective_and_gradient(dn, pr).f) / (2.0 * h);
          fd_gap = std::max(fd_gap, std::abs(fd - grad(i, j)));
        }
      }
    }
    out.push_back(bound("gradient_vs_finite_differences", fd_gap, 1e-6));

    double worst_drop = -std::numeric_limits<double>::infinity();
    for (int k = 0; k < 100; ++k) {
      RealMatrix delta = rng.matrix(n1, n2);
      delta *= 1e-3 / delta.norm();
      worst_drop = std::max(worst_drop,
                            res.f_value - objective_and_gradient(res.R12_opt + delta, pr).f);
    }
    out.push_back(bound("optimizer_local_minimum", worst_drop, 0.0,
                        "max f(R12*) - f(R12* + delta) over 100 perturbations"));

    if (res.k_norm <= 1e-12) {
      out.push_back(skip("optimizer_improves_tau_hat", "K = 0"));
    } else if (!res.tau_hat_before || !res.tau_hat_after) {
      out.push_back(res.tau_hat_after ? Check{"optimizer_improves_tau_hat", "pass", 0.0, 0.0,
                                              "G sqrt(P) vanished before optimization"}
                                      : Check{"optimizer_improves_tau_hat", "pass", 0.0, 0.0,
                                              "G sqrt(P) vanishes at the optimum"});
    } else {
      const bool ok = res.g_sqrtp_after < res.g_sqrtp_before &&
                      *res.tau_hat_after >= *res.tau_hat_before;
      out.push_back({"optimizer_improves_tau_hat", ok ? "pass" : "fail",
                     *res.tau_hat_after - *res.tau_hat_before, 0.0,
                     "tau_hat after minus before"});
    }
  });
  return out;
}

inline nlohmann::json verify_report(const Model& m, const Analysis& an) {
  const auto checks = verify_checks(m, an);
  nlohmann::json list = nlohmann::json::array();
  int passed = 0, failed = 0, skipped = 0;
  for (const auto& c : checks) {
    if (c.status == "pass") ++passed;
    if (c.status == "fail") ++failed;
    if (c.status == "skip") ++skipped;
    nlohmann::json j{{"name", c.name}, {"status", c.status}};
    if (c.status != "skip") {
      j["value"] = std::isfinite(c.value) ? nlohmann::json(c.value) : nlohmann::json(nullptr);
      j["tolerance"] = c.tolerance;
    }
    if (!c.note.empty()) j["note"] = c.note;
    list.push_back(std::move(j));
  }
  return {{"schema_version", kSchemaVersion},
          {"report", "verify"},
          {"mode", m.scenario.mode},
          {"n", m.ss.A.rows()},
          {"s", an.dec.s},
          {"d", an.dec.d},
          {"checks", list},
          {"summary", {{"passed", passed}, {"failed", failed}, {"skipped", skipped},
                       {"ok", failed == 0}}}};
}

}  // namespace qmemtime::cli
