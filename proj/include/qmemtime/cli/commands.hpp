#pragma once

// Command dispatch for the qmemtime tool. Each command writes its artifacts
// into the output directory; failures surface as qmemtime::Error and are
// turned into an exit code plus a JSON error document by run().

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "json.hpp"
#include "qmemtime/cli/model.hpp"
#include "qmemtime/cli/scenario.hpp"
#include "qmemtime/cli/verify.hpp"

namespace qmemtime::cli {

inline const std::vector<std::string> kCommands = {"realize", "isolate",  "simulate", "decohere",
                                                   "sweep",   "optimize", "verify"};

/// Decimal text with 17 significant digits (round-trips every double).
inline std::string fmt17(double x) {
  if (std::isnan(x)) return "nan";
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

inline std::string fmt17(const std::optional<double>& x) {
  return x ? fmt17(*x) : std::string("nan");
}

inline json optional_json(const std::optional<double>& x) {
  return x ? json(*x) : json(nullptr);
}

class OutputDir {
 public:
  explicit OutputDir(std::filesystem::path dir) : dir_(std::move(dir)) {
    std::error_code ec;
    std::filesystem::create_directories(dir_, ec);
    if (ec) {
      throw Error(ErrorKind::kIo, "cannot create output directory '" + dir_.string() + "': " +
                                      ec.message());
    }
  }

  void write_json(const std::string& name, const json& doc) const {
    write_text(name, doc.dump(2) + "\n");
  }

  void write_csv(const std::string& name, const std::vector<std::string>& header,
                 const std::vector<std::vector<std::string>>& rows) const {
    std::string text;
    auto line = [&text](const std::vector<std::string>& cells) {
      for (std::size_t i = 0; i < cells.size(); ++i) {
        if (i) text += ',';
        text += cells[i];
      }
      text += '\n';
    };
    line(header);
    for (const auto& r : rows) line(r);
    write_text(name, text);
  }

  void write_text(const std::string& name, const std::string& text) const {
    const auto path = dir_ / name;
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(ErrorKind::kIo, "cannot write '" + path.string() + "'");
    out << text;
    if (!out) throw Error(ErrorKind::kIo, "write failed for '" + path.string() + "'");
  }

 private:
  std::filesystem::path dir_;
};

inline json state_space_json(const Model& m) {
  const StateSpace& ss = m.ss;
  json doc{{"schema_version", kSchemaVersion},
           {"report", "state_space"},
           {"mode", m.scenario.mode},
           {"nu", ss.ccr.nu},
           {"n", ss.ccr.n},
           {"m", ss.ccr.m},
           {"Theta", matrix_to_json(ss.ccr.theta)},
           {"J", matrix_to_json(ss.ccr.j_field)},
           {"R", matrix_to_json(ss.R)},
           {"M", matrix_to_json(ss.M)},
           {"D", matrix_to_json(ss.D)},
           {"A", matrix_to_json(ss.A)},
           {"A0", matrix_to_json(ss.A0)},
           {"Atilde", matrix_to_json(ss.Atilde)},
           {"B", matrix_to_json(ss.B)},
           {"C", matrix_to_json(ss.C)},
           {"Omega_re", matrix_to_json(ss.mho.re)},
           {"Omega_im", matrix_to_json(ss.mho.im)}};
  if (m.composite) {
    doc["interconnection"] = {
        {"n1", m.composite->n1},
        {"n2", m.composite->n2},
        {"Rstar", matrix_to_json(m.composite->Rstar)},
        {"A_blocks", matrix_to_json(m.composite->A_blocks)},
        {"B_blocks", matrix_to_json(m.composite->B_blocks)},
        {"A_relative_gap", (m.composite->A_blocks - ss.A).norm() / (1.0 + ss.A.norm())},
        {"B_relative_gap", (m.composite->B_blocks - ss.B).norm() / (1.0 + ss.B.norm())}};
  }
  return doc;
}

inline json isolation_json(const Model& m, const Analysis& an) {
  const IsolationDecomposition& dec = an.dec;
  return {{"schema_version", kSchemaVersion},
          {"report", "isolation"},
          {"F_source", m.scenario.isolation.F_override ? "override" : "kernel"},
          {"n", m.ss.A.rows()},
          {"s", dec.s},
          {"d", dec.d},
          {"partially_isolated", dec.partially_isolated},
          {"F", matrix_to_json(dec.F)},
          {"T", matrix_to_json(dec.T)},
          {"G", matrix_to_json(dec.G)},
          {"S", matrix_to_json(dec.S)},
          {"S_inv", matrix_to_json(dec.S_inv)},
          {"a11", matrix_to_json(dec.a11)},
          {"a12", matrix_to_json(dec.a12)},
          {"a21", matrix_to_json(dec.a21)},
          {"a22", matrix_to_json(dec.a22)},
          {"b", matrix_to_json(dec.b)},
          {"FB_norm", dec.fb_residual},
          {"FA_minus_G_norm", dec.fa_minus_g},
          {"F_Theta_Mt_norm", dec.ftheta_mt},
          {"autonomy_residual", autonomy_residual(dec)}};
}

inline json decoherence_json(const DecoherenceReport& r) {
  json doc{{"epsilon", r.epsilon},
           {"ref_scale", r.ref_scale},
           {"threshold", r.threshold},
           {"t_max", r.t_max},
           {"tau", optional_json(r.tau)},
           {"tau_hat", optional_json(r.tau_hat)},
           {"ratio", optional_json(r.ratio)},
           {"delta_at_tau", optional_json(r.delta_at_tau)},
           {"slope_at_tau", optional_json(r.slope_at_tau)},
           {"no_crossing", r.no_crossing},
           {"near_tangent", r.near_tangent}};
  doc["crossing_bracket"] = r.crossing_bracket
                                ? json::array({r.crossing_bracket->first, r.crossing_bracket->second})
                                : json(nullptr);
  return doc;
}

namespace commands {

inline void realize_cmd(const Model& m, const OutputDir& out) {
  out.write_json("state_space.json", state_space_json(m));
  out.write_json("realized_scenario.json", scenario_to_json(m.scenario));
}

inline void isolate_cmd(const Model& m, const Overrides& ov, const OutputDir& out) {
  out.write_json("isolation.json", isolation_json(m, analysis_for(m, ov)));
}

inline void simulate_cmd(const Model& m, const Overrides& ov, const OutputDir& out) {
  const Analysis an = analysis_for(m, ov);
  const DecoherenceOptions opts = decoherence_options(m, ov);
  const double t_max = opts.t_max.value_or(default_horizon(m, an, resolve_epsilon(m, ov)));
  const auto grid = uniform_grid(t_max, opts.grid_points);
  const auto traj = deviation_trajectory(m.ss, an.dev, grid, opts.lyapunov);
  std::vector<std::vector<std::string>> rows;
  rows.reserve(grid.size());
  for (std::size_t i = 0; i < grid.size(); ++i) {
    rows.push_back({fmt17(grid[i]), fmt17(traj.delta[i]), fmt17(traj.state_term[i]),
                    fmt17(traj.noise_term[i]), fmt17(traj.delta[i] / an.dev.ref_scale)});
  }
  out.write_csv("delta_trajectory.csv", {"t", "delta", "state_term", "noise_term", "relative_delta"},
                rows);
}

inline void decohere_cmd(const Model& m, const Overrides& ov, const OutputDir& out) {
  const Analysis an = analysis_for(m, ov);
  const double eps = resolve_epsilon(m, ov);
  const DecoherenceReport r = decoherence_time(m.ss, an.dev, eps, decoherence_options(m, ov));
  json doc = decoherence_json(r);
  doc["schema_version"] = kSchemaVersion;
  doc["report"] = "decoherence";
  doc["s"] = an.dec.s;
  doc["partially_isolated"] = an.dec.partially_isolated;
  doc["G_sqrtP_norm"] = (an.dec.G * an.dev.sqrtP).norm();
  out.write_json("decoherence_report.json", doc);
  out.write_csv("decoherence_report.csv",
                {"epsilon", "tau", "tau_hat", "ratio", "threshold", "t_max", "no_crossing",
                 "near_tangent"},
                {{fmt17(r.epsilon), fmt17(r.tau), fmt17(r.tau_hat), fmt17(r.ratio),
                  fmt17(r.threshold), fmt17(r.t_max), r.no_crossing ? "1" : "0",
                  r.near_tangent ? "1" : "0"}});
}

inline void sweep_cmd(const Model& m, const Overrides& ov, const OutputDir& out) {
  const Analysis an = analysis_for(m, ov);
  const auto& grid = m.scenario.analysis.eps_grid.empty() ? kDefaultEpsGrid
                                                          : m.scenario.analysis.eps_grid;
  const SweepResult sw =
      epsilon_sweep(m.ss, an.dev, grid, decoherence_options(m, ov), ov.threads);
  std::vector<std::vector<std::string>> rows;
  json reports = json::array();
  for (const auto& r : sw.reports) {
    rows.push_back({fmt17(r.epsilon), fmt17(r.tau), fmt17(r.tau_hat), fmt17(r.ratio),
                    fmt17(sw.slope)});
    reports.push_back(decoherence_json(r));
  }
  out.write_csv("sweep.csv", {"epsilon", "tau", "tau_hat", "ratio", "fitted_slope"}, rows);
  out.write_json("sweep.json", {{"schema_version", kSchemaVersion},
                                {"report", "sweep"},
                                {"fitted_slope", optional_json(sw.slope)},
                                {"entries", reports}});
}

inline void optimize_cmd(const Model& m, const Overrides& ov, const OutputDir& out) {
  const Analysis an = analysis_for(m, ov);
  const CouplingProblem pr = coupling_problem(m, an);
  const double eps = resolve_epsilon(m, ov);
  const OptimizationResult res = optimal_coupling(pr, m.scenario.interconnection->R12, eps);
  out.write_json("r12_opt.json", {{"schema_version", kSchemaVersion},
                                  {"report", "r12_opt"},
                                  {"R12_opt", matrix_to_json(res.R12_opt)},
                                  {"residual", res.residual},
                                  {"f_value", res.f_value},
                                  {"grad_norm", res.grad_norm},
                                  {"g_matrix_rank", res.g_matrix_rank},
                                  {"g_nullity", res.g_nullity},
                                  {"K", matrix_to_json(res.K)},
                                  {"K_norm", res.k_norm}});
  out.write_json("optimize_report.json",
                 {{"schema_version", kSchemaVersion},
                  {"report", "optimize"},
                  {"epsilon", eps},
                  {"R12_before", matrix_to_json(res.R12_before)},
                  {"f_before", res.f_before},
                  {"f_after", res.f_value},
                  {"G_sqrtP_norm_before", res.g_sqrtp_before},
                  {"G_sqrtP_norm_after", res.g_sqrtp_after},
                  {"tau_hat_before", optional_json(res.tau_hat_before)},
                  {"tau_hat_after", optional_json(res.tau_hat_after)},
                  {"K_norm", res.k_norm},
                  {"g_nullity", res.g_nullity}});
  Scenario optimized = m.scenario;
  optimized.interconnection->R12 = res.R12_opt;
  out.write_json("optimized_scenario.json", scenario_to_json(optimized));
}

/// Returns false when any check failed.
inline bool verify_cmd(const Model& m, const Overrides& ov, const OutputDir& out) {
  const json report = verify_report(m, analysis_for(m, ov));
  out.write_json("verify_report.json", report);
  return report["summary"]["ok"].get<bool>();
}

}  // namespace commands

inline json error_json(const std::string& kind, const std::string& message,
                       const std::vector<std::string>& details, int code) {
  return {{"error", {{"kind", kind}, {"message", message}, {"details", details},
                     {"exit_code", code}}}};
}

/// Runs one command end to end. Returns the process exit code; on failure a
/// single-line JSON error document is written to err.
inline int run(const std::string& command, const std::string& scenario_path,
               const std::string& out_dir, const Overrides& ov, std::ostream& err) {
  try {
    if (ov.epsilon && !(*ov.epsilon > 0.0)) {
      throw Error(ErrorKind::kValidation, "--epsilon must be > 0");
    }
    if (ov.t_max && !(*ov.t_max > 0.0)) throw Error(ErrorKind::kValidation, "--t-max must be > 0");
    if (ov.grid_points && *ov.grid_points < 2) {
      throw Error(ErrorKind::kValidation, "--grid must be >= 2");
    }
    const Model m = build_model(load_scenario(scenario_path));
    const OutputDir out(out_dir);
    if (command == "realize") {
      commands::realize_cmd(m, out);
    } else if (command == "isolate") {
      commands::isolate_cmd(m, ov, out);
    } else if (command == "simulate") {
      commands::simulate_cmd(m, ov, out);
    } else if (command == "decohere") {
      commands::decohere_cmd(m, ov, out);
    } else if (command == "sweep") {
      commands::sweep_cmd(m, ov, out);
    } else if (command == "optimize") {
      commands::optimize_cmd(m, ov, out);
    } else if (command == "verify") {
      if (!commands::verify_cmd(m, ov, out)) {
        err << error_json("verification_failed",
                          "one or more invariant checks failed; see verify_report.json", {},
                          exit_code::kNumeric)
                   .dump()
            << "\n";
        return exit_code::kNumeric;
      }
    } else {
      throw Error(ErrorKind::kValidation, "unknown command '" + command + "'");
    }
    return exit_code::kOk;
  } catch (const Error& e) {
    const int code = exit_code_for(e.kind());
    err << error_json(std::string(to_string(e.kind())), e.what(), e.details(), code).dump()
        << "\n";
    return code;
  } catch (const std::exception& e) {
    err << error_json("internal", e.what(), {}, exit_code::kNumeric).dump() << "\n";
    return exit_code::kNumeric;
  }
}

}  // namespace qmemtime::cli
