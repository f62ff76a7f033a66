#pragma once

// Resolves a validated Scenario into the objects every command works on.

#include <algorithm>
#include <cmath>
#include <optional>
#include <vector>

#include "qmemtime/cli/scenario.hpp"
#include "qmemtime/decoherence.hpp"
#include "qmemtime/isolation.hpp"
#include "qmemtime/moments.hpp"
#include "qmemtime/oqho_model.hpp"
#include "qmemtime/optimizer.hpp"

namespace qmemtime::cli {

inline constexpr double kDefaultEpsilon = 1e-5;
inline const std::vector<double> kDefaultEpsGrid = {1e-2, 1e-3, 1e-4, 1e-5};

/// Command line settings that take precedence over the scenario's analysis block.
struct Overrides {
  std::optional<double> epsilon;
  std::optional<double> t_max;
  std::optional<std::size_t> grid_points;
  bool allow_unphysical_P = false;
  unsigned threads = 1;
};

struct Model {
  Scenario scenario;
  StateSpace ss;
  std::optional<CompositeSystem> composite;
  RealMatrix P;
};

inline Model build_model(const Scenario& sc) {
  Model m;
  m.scenario = sc;
  if (sc.is_interconnection()) {
    m.composite = compose(*sc.interconnection);
    m.ss = m.composite->ss;
  } else {
    const auto& o = *sc.single;
    m.ss = realize(o.params, make_ccr(o.nu, static_cast<int>(o.params.M.rows())));
  }
  const Eigen::Index n = m.ss.A.rows();
  m.P = sc.P ? *sc.P : RealMatrix(0.5 * RealMatrix::Identity(n, n));
  return m;
}

inline IsolationDecomposition isolation_for(const Model& m) {
  if (m.scenario.isolation.F_override) return isolation_from_f(m.ss, *m.scenario.isolation.F_override);
  const Eigen::Index d = isolation_rank(m.ss.M, m.ss.A.rows());
  const Eigen::Index s = m.scenario.isolation.s ? *m.scenario.isolation.s : d;
  return isolation_basis(m.ss, s);
}

struct Analysis {
  IsolationDecomposition dec;
  DeviationSpec dev;
};

inline Analysis analysis_for(const Model& m, const Overrides& ov) {
  Analysis a;
  a.dec = isolation_for(m);
  a.dev = deviation_spec(a.dec.F, m.P, m.ss.ccr.theta, ov.allow_unphysical_P);
  return a;
}

inline double resolve_epsilon(const Model& m, const Overrides& ov) {
  return ov.epsilon.value_or(m.scenario.analysis.epsilon.value_or(kDefaultEpsilon));
}

inline DecoherenceOptions decoherence_options(const Model& m, const Overrides& ov) {
  DecoherenceOptions opts;
  opts.t_max = ov.t_max ? ov.t_max : m.scenario.analysis.t_max;
  opts.grid_points = ov.grid_points.value_or(m.scenario.analysis.grid_points);
  return opts;
}

/// Horizon used when no t_max is given: ten asymptotic decoherence times if
/// the asymptote applies, otherwise ten natural time units 1/||A||.
inline double default_horizon(const Model& m, const Analysis& an, double epsilon) {
  const RealMatrix g = an.dev.F * m.ss.A0;
  if ((g * an.dev.sqrtP).norm() > 1e-14) {
    return 10.0 * approx_decoherence_time(an.dev, g, epsilon);
  }
  const double a_norm = m.ss.A.norm();
  return a_norm > 0.0 ? 10.0 / a_norm : 1.0;
}

inline CouplingProblem coupling_problem(const Model& m, const Analysis& an) {
  if (!m.composite) {
    throw Error(ErrorKind::kValidation,
                "optimize: the direct coupling R12 exists only in interconnection mode");
  }
  CouplingProblem pr;
  pr.F = an.dev.F;
  pr.Theta = m.ss.ccr.theta;
  pr.P = an.dev.P;
  pr.sqrtP = an.dev.sqrtP;
  pr.Rstar = m.composite->Rstar;
  pr.n1 = m.composite->n1;
  return pr;
}

}  // namespace qmemtime::cli
