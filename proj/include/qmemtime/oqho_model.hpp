#pragma once

// Open quantum harmonic oscillators: CCR matrices, parameter validation,
// state-space realization and the two-oscillator coherent feedback
// interconnection. Variables are ordered (q1, p1, q2, p2, ...).

#include <array>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "qmemtime/errors.hpp"
#include "qmemtime/numerics.hpp"

namespace qmemtime {

/// The 2x2 symplectic block [[0, 1], [-1, 0]].
inline RealMatrix symplectic_block() {
  RealMatrix j(2, 2);
  j << 0.0, 1.0, -1.0, 0.0;
  return j;
}

namespace detail {
inline RealMatrix block_diagonal_symplectic(Eigen::Index blocks, double scale) {
  RealMatrix out = RealMatrix::Zero(2 * blocks, 2 * blocks);
  for (Eigen::Index k = 0; k < blocks; ++k) {
    out(2 * k, 2 * k + 1) = scale;
    out(2 * k + 1, 2 * k) = -scale;
  }
  return out;
}

inline RealMatrix block_diag(const RealMatrix& a, const RealMatrix& b) {
  RealMatrix out = RealMatrix::Zero(a.rows() + b.rows(), a.cols() + b.cols());
  out.topLeftCorner(a.rows(), a.cols()) = a;
  out.bottomRightCorner(b.rows(), b.cols()) = b;
  return out;
}
}  // namespace detail

/// CCR matrix Theta = 1/2 I_nu (x) J2 of nu position-momentum pairs.
inline RealMatrix ccr_theta(int nu) {
  if (nu < 1) throw Error(ErrorKind::kDomain, "ccr_theta: nu must be >= 1");
  return detail::block_diagonal_symplectic(nu, 0.5);
}

/// Ito table matrix J = I_{m/2} (x) J2 of m field channels.
inline RealMatrix ito_j(int m) {
  if (m < 2 || m % 2 != 0) {
    throw Error(ErrorKind::kDomain,
                "ito_j: field dimension must be even and >= 2, got " + std::to_string(m));
  }
  return detail::block_diagonal_symplectic(m / 2, 1.0);
}

struct CcrStructure {
  int nu = 0;
  int n = 0;
  RealMatrix theta;
  int m = 0;
  RealMatrix j_field;
};

inline CcrStructure make_ccr(int nu, int m) {
  return {nu, 2 * nu, ccr_theta(nu), m, ito_j(m)};
}

/// Energy matrix R (n x n), coupling matrix M (m x n), output selector D (r x m).
struct OqhoParams {
  RealMatrix R;
  RealMatrix M;
  RealMatrix D;
};

/// A row selection of a permutation matrix: 0/1 entries, one 1 per row, at
/// most one per column.
inline bool is_row_selection(const RealMatrix& d) {
  if (d.rows() > d.cols()) return false;
  std::vector<int> col_count(static_cast<std::size_t>(d.cols()), 0);
  for (Eigen::Index i = 0; i < d.rows(); ++i) {
    int ones = 0;
    for (Eigen::Index j = 0; j < d.cols(); ++j) {
      const double x = d(i, j);
      if (x == 1.0) {
        ++ones;
        ++col_count[static_cast<std::size_t>(j)];
      } else if (x != 0.0) {
        return false;
      }
    }
    if (ones != 1) return false;
  }
  for (int c : col_count) {
    if (c > 1) return false;
  }
  return true;
}

/// Collects every violated invariant of (params, ccr) into issues.
inline void collect_param_issues(const OqhoParams& p, const CcrStructure& ccr,
                                 const std::string& prefix,
                                 std::vector<std::string>& issues) {
  const Eigen::Index n = ccr.n;
  const Eigen::Index m = ccr.m;
  if (p.R.rows() != n || p.R.cols() != n) {
    issues.push_back(prefix + "R: expected " + std::to_string(n) + "x" + std::to_string(n) +
                     ", got " + shape_of(p.R));
  } else if (!p.R.allFinite()) {
    issues.push_back(prefix + "R: non-finite entries");
  } else {
    const double asym = (p.R - p.R.transpose()).norm();
    if (asym > 1e-12) {
      std::ostringstream os;
      os << prefix << "R: not symmetric, asymmetry norm ||R - R^T||_F = " << asym;
      issues.push_back(os.str());
    }
  }
  if (p.M.rows() != m || p.M.cols() != n) {
    issues.push_back(prefix + "M: expected " + std::to_string(m) + "x" + std::to_string(n) +
                     ", got " + shape_of(p.M));
  } else if (!p.M.allFinite()) {
    issues.push_back(prefix + "M: non-finite entries");
  }
  if (p.D.cols() != m || p.D.rows() % 2 != 0 || p.D.rows() == 0) {
    issues.push_back(prefix + "D: expected r x " + std::to_string(m) +
                     " with even r >= 2, got " + shape_of(p.D));
  } else if (!is_row_selection(p.D)) {
    issues.push_back(prefix + "D: must consist of distinct rows of a permutation matrix");
  }
}

inline void validate_params(const OqhoParams& p, const CcrStructure& ccr) {
  std::vector<std::string> issues;
  collect_param_issues(p, ccr, "", issues);
  if (issues.empty()) return;
  const bool only_symmetry =
      issues.size() == 1 && issues.front().find("not symmetric") != std::string::npos;
  throw Error(only_symmetry ? ErrorKind::kValidation : ErrorKind::kDimension,
              "invalid oscillator parameters: " + issues.front(), issues);
}

/// Linear QSDE coefficients dX = A X dt + B dW, dY = C X dt + D dW together with
/// the drift split A = A0 + Atilde and the diffusion matrix mho = B (I + iJ) B^T.
struct StateSpace {
  RealMatrix A;
  RealMatrix A0;
  RealMatrix Atilde;
  RealMatrix B;
  RealMatrix C;
  HermitianPair mho;
  CcrStructure ccr;
  // Inputs the realization was built from.
  RealMatrix R;
  RealMatrix M;
  RealMatrix D;
};

inline StateSpace realize(const OqhoParams& params, const CcrStructure& ccr) {
  validate_params(params, ccr);
  const RealMatrix& theta = ccr.theta;
  const RealMatrix& j = ccr.j_field;
  StateSpace ss;
  ss.ccr = ccr;
  ss.R = params.R;
  ss.M = params.M;
  ss.D = params.D;
  ss.A0 = 2.0 * theta * params.R;
  ss.B = 2.0 * theta * params.M.transpose();
  ss.Atilde = ss.B * j * params.M;
  ss.A = ss.A0 + ss.Atilde;
  ss.C = 2.0 * params.D * j * params.M;
  const RealMatrix bbt = ss.B * ss.B.transpose();
  const RealMatrix bjbt = ss.B * j * ss.B.transpose();
  ss.mho.re = 0.5 * (bbt + bbt.transpose());
  ss.mho.im = 0.5 * (bjbt - bjbt.transpose());
  return ss;
}

/// One constituent of the two-oscillator interconnection. N couples this
/// oscillator to the output field of the other one (r_other x n).
struct OscillatorSpec {
  int nu = 0;
  int m = 0;
  RealMatrix R;
  RealMatrix M;
  RealMatrix D;
  RealMatrix N;
};

struct InterconnectionSpec {
  std::array<OscillatorSpec, 2> osc;
  RealMatrix R12;  // n1 x n2 direct energy coupling
};

inline void collect_interconnection_issues(const InterconnectionSpec& spec,
                                           std::vector<std::string>& issues) {
  for (int k = 0; k < 2; ++k) {
    const auto& o = spec.osc[static_cast<std::size_t>(k)];
    const auto& other = spec.osc[static_cast<std::size_t>(1 - k)];
    const std::string prefix = "oscillators[" + std::to_string(k) + "].";
    if (o.nu < 1 || o.m < 2 || o.m % 2 != 0) {
      issues.push_back(prefix + "nu must be >= 1 and m even >= 2");
      continue;
    }
    collect_param_issues({o.R, o.M, o.D}, make_ccr(o.nu, o.m), prefix, issues);
    const Eigen::Index r_other = other.D.rows();
    if (o.N.rows() != r_other || o.N.cols() != 2 * o.nu) {
      issues.push_back(prefix + "N: expected " + std::to_string(r_other) + "x" +
                       std::to_string(2 * o.nu) + ", got " + shape_of(o.N));
    } else if (!o.N.allFinite()) {
      issues.push_back(prefix + "N: non-finite entries");
    }
  }
  const Eigen::Index n1 = 2 * spec.osc[0].nu;
  const Eigen::Index n2 = 2 * spec.osc[1].nu;
  if (spec.R12.rows() != n1 || spec.R12.cols() != n2) {
    issues.push_back("R12: expected " + std::to_string(n1) + "x" + std::to_string(n2) +
                     ", got " + shape_of(spec.R12));
  }
}

inline void validate_interconnection(const InterconnectionSpec& spec) {
  std::vector<std::string> issues;
  collect_interconnection_issues(spec, issues);
  if (!issues.empty()) {
    throw Error(ErrorKind::kDimension, "invalid interconnection: " + issues.front(), issues);
  }
}

/// Field-mediated energy matrix R* (without the direct coupling R12).
inline RealMatrix interconnection_rstar(const InterconnectionSpec& spec) {
  const auto& o1 = spec.osc[0];
  const auto& o2 = spec.osc[1];
  const RealMatrix j1 = ito_j(o1.m);
  const RealMatrix j2 = ito_j(o2.m);
  const Eigen::Index n1 = o1.R.rows();
  const Eigen::Index n2 = o2.R.rows();
  RealMatrix rstar(n1 + n2, n1 + n2);
  rstar.topLeftCorner(n1, n1) = o1.R;
  rstar.bottomRightCorner(n2, n2) = o2.R;
  rstar.topRightCorner(n1, n2) = o1.N.transpose() * o2.D * j2 * o2.M -
                                 o1.M.transpose() * j1 * o1.D.transpose() * o2.N;
  rstar.bottomLeftCorner(n2, n1) = o2.N.transpose() * o1.D * j1 * o1.M -
                                   o2.M.transpose() * j2 * o2.D.transpose() * o1.N;
  // Symmetric in exact arithmetic; drop the rounding asymmetry.
  return 0.5 * (rstar + rstar.transpose());
}

/// Energy matrix R* + [[0, R12], [R12^T, 0]].
inline RealMatrix with_direct_coupling(const RealMatrix& rstar, const RealMatrix& r12) {
  RealMatrix r = rstar;
  const Eigen::Index n1 = r12.rows();
  const Eigen::Index n2 = r12.cols();
  r.topRightCorner(n1, n2) += r12;
  r.bottomLeftCorner(n2, n1) += r12.transpose();
  return r;
}

struct CompositeSystem {
  OqhoParams params;  // composite R, M and D = diag(D1, D2)
  CcrStructure ccr;
  StateSpace ss;      // realize(params, ccr)
  RealMatrix Rstar;
  // Drift and diffusion assembled directly from the per-oscillator blocks.
  RealMatrix A_blocks;
  RealMatrix B_blocks;
  Eigen::Index n1 = 0;
  Eigen::Index n2 = 0;
};

/// Drift and diffusion of the interconnection from the per-oscillator
/// coefficients A_k, B_k, C_k, E_k, F_k.
inline std::pair<RealMatrix, RealMatrix> interconnection_blocks(
    const InterconnectionSpec& spec) {
  const auto& o1 = spec.osc[0];
  const auto& o2 = spec.osc[1];
  const std::array<RealMatrix, 2> theta{ccr_theta(o1.nu), ccr_theta(o2.nu)};
  const std::array<RealMatrix, 2> j{ito_j(o1.m), ito_j(o2.m)};
  const std::array<RealMatrix, 2> r_cross{spec.R12, spec.R12.transpose()};
  std::array<RealMatrix, 2> a, b, c, e, f;
  for (std::size_t k = 0; k < 2; ++k) {
    const auto& o = spec.osc[k];
    const auto& other = spec.osc[1 - k];
    const RealMatrix j_other_out = other.D * j[1 - k] * other.D.transpose();
    a[k] = 2.0 * theta[k] *
           (o.R + o.M.transpose() * j[k] * o.M + o.N.transpose() * j_other_out * o.N);
    b[k] = 2.0 * theta[k] * o.M.transpose();
    c[k] = 2.0 * o.D * j[k] * o.M;
    e[k] = 2.0 * theta[k] * o.N.transpose();
    f[k] = 2.0 * theta[k] * r_cross[k];
  }
  const Eigen::Index n1 = a[0].rows();
  const Eigen::Index n2 = a[1].rows();
  const Eigen::Index m1 = b[0].cols();
  const Eigen::Index m2 = b[1].cols();
  RealMatrix big_a(n1 + n2, n1 + n2);
  big_a << a[0], f[0] + e[0] * c[1], f[1] + e[1] * c[0], a[1];
  RealMatrix big_b(n1 + n2, m1 + m2);
  big_b << b[0], e[0] * o2.D, e[1] * o1.D, b[1];
  return {big_a, big_b};
}

inline CompositeSystem compose(const InterconnectionSpec& spec) {
  validate_interconnection(spec);
  const auto& o1 = spec.osc[0];
  const auto& o2 = spec.osc[1];
  CompositeSystem out;
  out.n1 = 2 * o1.nu;
  out.n2 = 2 * o2.nu;
  out.ccr = make_ccr(o1.nu + o2.nu, o1.m + o2.m);
  out.Rstar = interconnection_rstar(spec);
  out.params.R = with_direct_coupling(out.Rstar, spec.R12);
  out.params.M.resize(o1.m + o2.m, out.n1 + out.n2);
  out.params.M << o1.M, o1.D.transpose() * o2.N, o2.D.transpose() * o1.N, o2.M;
  out.params.D = detail::block_diag(o1.D, o2.D);
  out.ss = realize(out.params, out.ccr);
  auto [a_blocks, b_blocks] = interconnection_blocks(spec);
  out.A_blocks = std::move(a_blocks);
  out.B_blocks = std::move(b_blocks);
  return out;
}

}  // namespace qmemtime
