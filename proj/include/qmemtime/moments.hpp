#pragma once

// Second-moment dynamics of the deviation X(t) - X(0) seen through F:
//   Delta(t) = ||F (e^{tA} - I) sqrt(P)||^2 + <F^T F, Re V(t)>,
// where V is the noise covariance solving V' = A V + V A^T + mho, V(0) = 0.

#include <array>
#include <cmath>
#include <sstream>
#include <vector>

#include "qmemtime/errors.hpp"
#include "qmemtime/numerics.hpp"
#include "qmemtime/oqho_model.hpp"

namespace qmemtime {

struct DeviationSpec {
  RealMatrix F;      // s x n
  RealMatrix Sigma;  // F^T F
  RealMatrix P;      // Re of the initial second-moment matrix P + i Theta
  RealMatrix sqrtP;
  double ref_scale = 0.0;  // ||F sqrt(P)||^2
};

/// Validates (F, P) and precomputes Sigma, sqrt(P) and the reference scale.
/// P + i Theta must be positive semi-definite unless allow_unphysical is set.
inline DeviationSpec deviation_spec(const RealMatrix& f, const RealMatrix& p,
                                    const RealMatrix& theta, bool allow_unphysical = false) {
  const Eigen::Index n = theta.rows();
  if (f.cols() != n || p.rows() != n || p.cols() != n || f.rows() < 1) {
    throw Error(ErrorKind::kDimension, "deviation_spec: F is " + shape_of(f) + ", P is " +
                                           shape_of(p) + ", expected s x " +
                                           std::to_string(n) + " and square of order " +
                                           std::to_string(n));
  }
  if (numerical_rank(f) != f.rows()) {
    throw Error(ErrorKind::kRank, "deviation_spec: F must have full row rank");
  }
  const double scale = 1.0 + p.cwiseAbs().maxCoeff();
  if (!is_symmetric(p, 1e-12 * scale)) {
    throw Error(ErrorKind::kValidation, "deviation_spec: P is not symmetric");
  }
  const double min_eig = min_eigenvalue_hermitian(p, theta);
  if (min_eig < -1e-10 && !allow_unphysical) {
    std::ostringstream os;
    os << "deviation_spec: P + i Theta is not positive semi-definite (min eigenvalue "
       << min_eig << ")";
    throw Error(ErrorKind::kUnphysicalState, os.str());
  }
  DeviationSpec spec;
  spec.F = f;
  spec.Sigma = f.transpose() * f;
  spec.P = 0.5 * (p + p.transpose());
  spec.sqrtP = sqrtm_psd(spec.P);
  spec.ref_scale = (f * spec.sqrtP).squaredNorm();
  if (!(spec.ref_scale > 1e-14)) {
    throw Error(ErrorKind::kTrivialCase,
                "deviation_spec: F sqrt(P) = 0, the decoherence time would be trivially zero");
  }
  return spec;
}

/// ||F (e^{tA} - I) sqrt(P)||^2, the response to the initial condition.
inline double state_term(const StateSpace& ss, const DeviationSpec& spec, double t) {
  const Eigen::Index n = ss.A.rows();
  const RealMatrix alpha = expm(ss.A, t) - RealMatrix::Identity(n, n);
  return (spec.F * alpha * spec.sqrtP).squaredNorm();
}

struct DeviationTrajectory {
  std::vector<double> t_grid;
  std::vector<double> delta;
  std::vector<double> state_term;
  std::vector<double> noise_term;      // <Sigma, Re V(t)>
  std::vector<RealMatrix> v_re_F;      // F Re V(t) F^T
  std::vector<HermitianPair> covariance;  // V(t)
};

inline DeviationTrajectory deviation_trajectory(const StateSpace& ss,
                                                const DeviationSpec& spec,
                                                const std::vector<double>& t_grid,
                                                const LyapunovOptions& opts = {}) {
  DeviationTrajectory traj;
  traj.t_grid = t_grid;
  traj.covariance = integrate_lyapunov(ss.A, ss.mho, t_grid, opts);
  const std::size_t count = t_grid.size();
  traj.delta.reserve(count);
  traj.state_term.reserve(count);
  traj.noise_term.reserve(count);
  traj.v_re_F.reserve(count);
  for (std::size_t i = 0; i < count; ++i) {
    const HermitianPair& v = traj.covariance[i];
    const double st = i == 0 ? 0.0 : state_term(ss, spec, t_grid[i]);
    const double nt = frobenius_inner(spec.Sigma, v.re);
    traj.state_term.push_back(st);
    traj.noise_term.push_back(nt);
    traj.delta.push_back(st + nt);
    traj.v_re_F.push_back(spec.F * v.re * spec.F.transpose());
  }
  return traj;
}

/// Delta(t) at a single time.
inline double deviation_at(const StateSpace& ss, const DeviationSpec& spec, double t,
                           const LyapunovOptions& opts = {}) {
  if (t == 0.0) return 0.0;
  if (!(t > 0.0)) throw Error(ErrorKind::kDomain, "deviation_at: t must be >= 0");
  const auto v = integrate_lyapunov(ss.A, ss.mho, {0.0, t}, opts);
  return state_term(ss, spec, t) + frobenius_inner(spec.Sigma, v.back().re);
}

/// Taylor data of Delta and V at t = 0, computed from the matrices alone.
struct ShortHorizon {
  double delta0 = 0.0;
  double delta_dot0 = 0.0;   // ||F B||^2
  double delta_ddot0 = 0.0;  // 2 (||F A sqrt P||^2 + <F B, F A B>)
  double leading_coefficient = 0.0;  // ||G sqrt P||^2
  RealMatrix G;                      // F A0
  RealMatrix third_order_matrix;     // (1/3) G B B^T G^T
  HermitianPair v_dot0;              // mho
  HermitianPair v_ddot0;             // A mho + mho A^T
  HermitianPair v_dddot0;            // A^2 mho + mho A^T^2 + 2 A mho A^T
};

inline ShortHorizon short_horizon(const StateSpace& ss, const DeviationSpec& spec) {
  const RealMatrix& a = ss.A;
  const RealMatrix& f = spec.F;
  ShortHorizon sh;
  sh.G = f * ss.A0;
  const RealMatrix fb = f * ss.B;
  sh.delta0 = 0.0;
  sh.delta_dot0 = fb.squaredNorm();
  sh.delta_ddot0 =
      2.0 * ((f * a * spec.sqrtP).squaredNorm() + frobenius_inner(fb, f * a * ss.B));
  sh.leading_coefficient = (sh.G * spec.sqrtP).squaredNorm();
  sh.third_order_matrix = (1.0 / 3.0) * sh.G * ss.B * ss.B.transpose() * sh.G.transpose();
  const RealMatrix at = a.transpose();
  auto derivs = [&](const RealMatrix& q) {
    return std::array<RealMatrix, 3>{q, a * q + q * at,
                                     a * a * q + q * at * at + 2.0 * a * q * at};
  };
  const auto re = derivs(ss.mho.re);
  const auto im = derivs(ss.mho.im);
  sh.v_dot0 = {re[0], im[0]};
  sh.v_ddot0 = {re[1], im[1]};
  sh.v_dddot0 = {re[2], im[2]};
  return sh;
}

/// Uniform grid of `points` samples on [0, t_max].
inline std::vector<double> uniform_grid(double t_max, std::size_t points) {
  if (points < 2 || !(t_max > 0.0)) {
    throw Error(ErrorKind::kGrid, "uniform_grid: need t_max > 0 and at least 2 points");
  }
  std::vector<double> grid(points);
  for (std::size_t i = 0; i < points; ++i) {
    grid[i] = t_max * static_cast<double>(i) / static_cast<double>(points - 1);
  }
  return grid;
}

/// Geometric grid of `points` samples on [lo, hi], lo > 0.
inline std::vector<double> log_grid(double lo, double hi, std::size_t points) {
  std::vector<double> grid(points);
  const double llo = std::log(lo);
  const double lhi = std::log(hi);
  for (std::size_t i = 0; i < points; ++i) {
    const double w = points == 1 ? 0.0 : static_cast<double>(i) / static_cast<double>(points - 1);
    grid[i] = std::exp(llo + w * (lhi - llo));
  }
  return grid;
}

/// Least-squares slope of log y against log x.
inline double loglog_slope(const std::vector<double>& x, const std::vector<double>& y) {
  const std::size_t n = x.size();
  if (n < 2 || y.size() != n) {
    throw Error(ErrorKind::kDimension, "loglog_slope: need at least two paired samples");
  }
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    mx += std::log(x[i]);
    my += std::log(y[i]);
  }
  mx /= static_cast<double>(n);
  my /= static_cast<double>(n);
  double sxy = 0.0, sxx = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double dx = std::log(x[i]) - mx;
    sxy += dx * (std::log(y[i]) - my);
    sxx += dx * dx;
  }
  return sxy / sxx;
}

}  // namespace qmemtime
