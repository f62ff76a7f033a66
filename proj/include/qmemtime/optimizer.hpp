#pragma once

// Direct energy coupling optimization for the two-oscillator interconnection.
// With F and P fixed, maximizing the asymptotic decoherence time amounts to
// minimizing the convex quadratic
//   f(R12) = 1/2 ||F Theta R sqrt(P)||^2,   R = R* + [[0, R12], [R12^T, 0]],
// whose negative gradient is g(R12) + K with g linear, self-adjoint and
// negative semi-definite. The stationarity equation is solved by vectorizing
// R12 (column stacking).

#include <cmath>
#include <optional>
#include <sstream>

#include "qmemtime/errors.hpp"
#include "qmemtime/numerics.hpp"
#include "qmemtime/oqho_model.hpp"

namespace qmemtime {

struct OptimizerBlocks {
  Eigen::Index n1 = 0;
  Eigen::Index n2 = 0;
  RealMatrix Theta1, Theta2;
  RealMatrix Sigma11, Sigma12, Sigma22;
  RealMatrix P11, P12, P22;
  RealMatrix Rstar;
};

inline OptimizerBlocks extract_blocks(const RealMatrix& theta, const RealMatrix& sigma,
                                      const RealMatrix& p, const RealMatrix& rstar,
                                      Eigen::Index n1) {
  const Eigen::Index n = theta.rows();
  if (theta.cols() != n || sigma.rows() != n || sigma.cols() != n || p.rows() != n ||
      p.cols() != n || rstar.rows() != n || rstar.cols() != n || n1 < 1 || n1 >= n) {
    throw Error(ErrorKind::kDimension, "extract_blocks: Theta, Sigma, P, R* must be " +
                                           std::to_string(n) + "x" + std::to_string(n) +
                                           " with 0 < n1 < n");
  }
  const Eigen::Index n2 = n - n1;
  OptimizerBlocks b;
  b.n1 = n1;
  b.n2 = n2;
  b.Theta1 = theta.topLeftCorner(n1, n1);
  b.Theta2 = theta.bottomRightCorner(n2, n2);
  b.Sigma11 = sigma.topLeftCorner(n1, n1);
  b.Sigma12 = sigma.topRightCorner(n1, n2);
  b.Sigma22 = sigma.bottomRightCorner(n2, n2);
  b.P11 = p.topLeftCorner(n1, n1);
  b.P12 = p.topRightCorner(n1, n2);
  b.P22 = p.bottomRightCorner(n2, n2);
  b.Rstar = rstar;
  return b;
}

/// g(N) = Th1 S11 Th1 N P22 + P11 N Th2 S22 Th2 + Th1 S12 Th2 N^T P12 + P12 N^T Th1 S12 Th2.
inline RealMatrix apply_g(const RealMatrix& n, const OptimizerBlocks& b) {
  if (n.rows() != b.n1 || n.cols() != b.n2) {
    throw Error(ErrorKind::kDimension, "apply_g: N is " + shape_of(n) + ", expected " +
                                           std::to_string(b.n1) + "x" + std::to_string(b.n2));
  }
  const RealMatrix cross = b.Theta1 * b.Sigma12 * b.Theta2;
  return b.Theta1 * b.Sigma11 * b.Theta1 * n * b.P22 +
         b.P11 * n * b.Theta2 * b.Sigma22 * b.Theta2 + cross * n.transpose() * b.P12 +
         b.P12 * n.transpose() * cross;
}

/// Column-stacking vec.
inline RealVector vec(const RealMatrix& m) {
  return Eigen::Map<const RealVector>(m.data(), m.size());
}

inline RealMatrix unvec(const RealVector& v, Eigen::Index rows, Eigen::Index cols) {
  return Eigen::Map<const RealMatrix>(v.data(), rows, cols);
}

/// Matrix of g in the canonical basis: column i + j n1 holds vec(g(E_ij)).
inline RealMatrix assemble_g(const OptimizerBlocks& b) {
  const Eigen::Index dim = b.n1 * b.n2;
  RealMatrix out(dim, dim);
  for (Eigen::Index j = 0; j < b.n2; ++j) {
    for (Eigen::Index i = 0; i < b.n1; ++i) {
      RealMatrix e = RealMatrix::Zero(b.n1, b.n2);
      e(i, j) = 1.0;
      out.col(i + j * b.n1) = vec(apply_g(e, b));
    }
  }
  return out;
}

/// K = 2 (sym(Theta Sigma Theta R* P))_12.
inline RealMatrix compute_k(const RealMatrix& theta, const RealMatrix& sigma,
                            const RealMatrix& rstar, const RealMatrix& p, Eigen::Index n1) {
  const Eigen::Index n = theta.rows();
  if (sigma.rows() != n || rstar.rows() != n || p.rows() != n || n1 < 1 || n1 >= n) {
    throw Error(ErrorKind::kDimension, "compute_k: inconsistent dimensions");
  }
  const RealMatrix y = theta * sigma * theta * rstar * p;
  return (y + y.transpose()).topRightCorner(n1, n - n1);
}

/// Everything f(R12) depends on; F and P are held fixed.
struct CouplingProblem {
  RealMatrix F;
  RealMatrix Theta;
  RealMatrix P;
  RealMatrix sqrtP;
  RealMatrix Rstar;
  Eigen::Index n1 = 0;
};

struct ObjectiveValue {
  double f = 0.0;
  RealMatrix grad;
};

inline OptimizerBlocks blocks_of(const CouplingProblem& pr) {
  return extract_blocks(pr.Theta, pr.F.transpose() * pr.F, pr.P, pr.Rstar, pr.n1);
}

/// f(R12) = 1/2 ||F Theta R sqrt P||^2 and its gradient -(g(R12) + K).
inline ObjectiveValue objective_and_gradient(const RealMatrix& r12, const CouplingProblem& pr) {
  const Eigen::Index n = pr.Theta.rows();
  if (r12.rows() != pr.n1 || r12.cols() != n - pr.n1) {
    throw Error(ErrorKind::kDimension, "objective_and_gradient: R12 is " + shape_of(r12));
  }
  const RealMatrix r = with_direct_coupling(pr.Rstar, r12);
  ObjectiveValue out;
  out.f = 0.5 * (pr.F * pr.Theta * r * pr.sqrtP).squaredNorm();
  const OptimizerBlocks b = blocks_of(pr);
  const RealMatrix k = compute_k(pr.Theta, pr.F.transpose() * pr.F, pr.Rstar, pr.P, pr.n1);
  out.grad = -(apply_g(r12, b) + k);
  return out;
}

/// ||G sqrt P|| = 2 ||F Theta R sqrt P|| for the coupling R12.
inline double g_sqrtp_norm(const RealMatrix& r12, const CouplingProblem& pr) {
  const RealMatrix r = with_direct_coupling(pr.Rstar, r12);
  return 2.0 * (pr.F * pr.Theta * r * pr.sqrtP).norm();
}

struct OptimizationResult {
  RealMatrix R12_opt;
  double residual = 0.0;  // ||g(R12*) + K||_F
  double f_value = 0.0;
  double grad_norm = 0.0;
  Eigen::Index g_matrix_rank = 0;
  Eigen::Index g_nullity = 0;
  double k_norm = 0.0;
  RealMatrix K;
  // Comparison against the starting coupling.
  RealMatrix R12_before;
  double f_before = 0.0;
  double g_sqrtp_before = 0.0;
  double g_sqrtp_after = 0.0;
  double reference_epsilon = 0.0;
  std::optional<double> tau_hat_before;
  std::optional<double> tau_hat_after;  // nullopt when G sqrt P vanishes
};

/// Solves g(R12) + K = 0 for the minimum-norm R12 and verifies optimality.
inline OptimizationResult optimal_coupling(const CouplingProblem& pr,
                                           const RealMatrix& r12_before,
                                           double reference_epsilon = 1e-5) {
  const Eigen::Index n1 = pr.n1;
  const Eigen::Index n2 = pr.Theta.rows() - n1;
  const OptimizerBlocks b = blocks_of(pr);
  const RealMatrix sigma = pr.F.transpose() * pr.F;
  OptimizationResult res;
  res.K = compute_k(pr.Theta, sigma, pr.Rstar, pr.P, n1);
  res.k_norm = res.K.norm();
  const RealMatrix gmat = assemble_g(b);
  const auto sol = lstsq_min_norm(gmat, -vec(res.K));
  res.R12_opt = unvec(sol.x, n1, n2);
  res.g_matrix_rank = sol.rank;
  res.g_nullity = n1 * n2 - sol.rank;
  res.residual = (apply_g(res.R12_opt, b) + res.K).norm();
  const ObjectiveValue after = objective_and_gradient(res.R12_opt, pr);
  res.f_value = after.f;
  res.grad_norm = after.grad.norm();
  if (res.residual > 1e-8 * (1.0 + res.k_norm) || res.grad_norm > 1e-6 * (1.0 + res.k_norm)) {
    std::ostringstream os;
    os << "optimal_coupling: stationarity residual " << res.residual
       << " exceeds tolerance; numerical breakdown in the vectorized solve";
    throw Error(ErrorKind::kOptimalityViolation, os.str());
  }
  res.R12_before = r12_before;
  res.f_before = objective_and_gradient(r12_before, pr).f;
  res.g_sqrtp_before = g_sqrtp_norm(r12_before, pr);
  res.g_sqrtp_after = g_sqrtp_norm(res.R12_opt, pr);
  res.reference_epsilon = reference_epsilon;
  const double numer = (pr.F * pr.sqrtP).norm() * std::sqrt(reference_epsilon);
  if (res.g_sqrtp_before > 1e-14) res.tau_hat_before = numer / res.g_sqrtp_before;
  if (res.g_sqrtp_after > 1e-14) res.tau_hat_after = numer / res.g_sqrtp_after;
  return res;
}

}  // namespace qmemtime
