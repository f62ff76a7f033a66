#pragma once

// Partially isolated subsystems: a full row rank F with F B = 0, its
// completion S = [F; T], the similarity a = S A S^-1 split into the
// (phi, psi) blocks, and pointwise evaluation of the associated transfer
// functions.

#include <sstream>
#include <string>

#include "qmemtime/errors.hpp"
#include "qmemtime/numerics.hpp"
#include "qmemtime/oqho_model.hpp"

namespace qmemtime {

struct IsolationDecomposition {
  Eigen::Index s = 0;
  Eigen::Index d = 0;  // n - rank M
  RealMatrix F;        // s x n
  RealMatrix T;        // (n - s) x n
  RealMatrix S;
  RealMatrix S_inv;
  RealMatrix S1;  // n x s
  RealMatrix S2;  // n x (n - s)
  RealMatrix a;   // S A S^-1
  RealMatrix a11, a12, a21, a22;
  RealMatrix b;  // T B
  RealMatrix G;  // F A0
  // Diagnostics.
  double fb_residual = 0.0;       // ||F B||_F
  double fa_minus_g = 0.0;        // ||F A - G||_F
  double ftheta_mt = 0.0;         // ||F Theta M^T||_F
  bool partially_isolated = false;
};

/// d = n - rank M, the number of independent directions not seen by the fields.
inline Eigen::Index isolation_rank(const RealMatrix& m, Eigen::Index n, double tol = 1e-10) {
  if (m.cols() != n) {
    throw Error(ErrorKind::kDimension, "isolation_rank: M has " + std::to_string(m.cols()) +
                                           " columns, expected " + std::to_string(n));
  }
  return n - numerical_rank(m, tol);
}

/// Builds the decomposition for a given F and complement T ([F; T] nonsingular).
inline IsolationDecomposition decompose(const StateSpace& ss, const RealMatrix& f,
                                        const RealMatrix& t) {
  const Eigen::Index n = ss.A.rows();
  if (f.cols() != n || t.cols() != n || f.rows() + t.rows() != n) {
    throw Error(ErrorKind::kDimension, "decompose: F (" + shape_of(f) + ") and T (" +
                                           shape_of(t) + ") do not stack to " +
                                           std::to_string(n) + "x" + std::to_string(n));
  }
  IsolationDecomposition dec;
  dec.s = f.rows();
  dec.d = isolation_rank(ss.M, n);
  dec.F = f;
  dec.T = t;
  dec.S.resize(n, n);
  dec.S << f, t;
  Eigen::FullPivLU<RealMatrix> lu(dec.S);
  if (!lu.isInvertible()) {
    throw Error(ErrorKind::kRank, "decompose: [F; T] is singular");
  }
  dec.S_inv = lu.inverse();
  const Eigen::Index s = dec.s;
  dec.S1 = dec.S_inv.leftCols(s);
  dec.S2 = dec.S_inv.rightCols(n - s);
  dec.a = dec.S * ss.A * dec.S_inv;
  dec.a11 = dec.a.topLeftCorner(s, s);
  dec.a12 = dec.a.topRightCorner(s, n - s);
  dec.a21 = dec.a.bottomLeftCorner(n - s, s);
  dec.a22 = dec.a.bottomRightCorner(n - s, n - s);
  dec.b = t * ss.B;
  dec.G = f * ss.A0;
  dec.fb_residual = (f * ss.B).norm();
  dec.fa_minus_g = (f * ss.A - dec.G).norm();
  dec.ftheta_mt = (f * ss.ccr.theta * ss.M.transpose()).norm();
  dec.partially_isolated = dec.fb_residual <= 1e-10 * (1.0 + ss.B.norm());
  return dec;
}

/// Decomposition for a caller-supplied full row rank F, completed by the
/// orthonormal complement of its row space.
inline IsolationDecomposition isolation_from_f(const StateSpace& ss, const RealMatrix& f) {
  if (f.cols() != ss.A.rows() || f.rows() < 1) {
    throw Error(ErrorKind::kDimension, "isolation_from_f: F has shape " + shape_of(f) +
                                           ", expected s x " + std::to_string(ss.A.rows()));
  }
  return decompose(ss, f, row_complement(f));
}

/// Constructs F with F Theta M^T = 0 (hence F B = 0) from s kernel directions of
/// M, with unit-norm rows, and the full decomposition around it.
inline IsolationDecomposition isolation_basis(const StateSpace& ss, Eigen::Index s,
                                              double tol = 1e-10) {
  const Eigen::Index n = ss.A.rows();
  const Eigen::Index d = isolation_rank(ss.M, n, tol);
  if (d == 0) {
    throw Error(ErrorKind::kNoIsolation,
                "isolation_basis: M has full column rank, no partially isolated subsystem");
  }
  if (s < 1 || s > d) {
    std::ostringstream os;
    os << "isolation_basis: requested s = " << s << " but only d = n - rank M = " << d
       << " directions are available";
    throw Error(ErrorKind::kInfeasibleIsolation, os.str());
  }
  const RealMatrix kernel = kernel_basis(ss.M, tol);
  // Theta^-1 = -4 Theta, so F^T = Theta^-T K_s gives F Theta M^T = (M K_s)^T.
  RealMatrix f = 4.0 * kernel.leftCols(s).transpose() * ss.ccr.theta;
  for (Eigen::Index i = 0; i < f.rows(); ++i) f.row(i).normalize();
  return decompose(ss, f, row_complement(f, tol));
}

/// Residual of the least-squares fit G = N F. A zero residual means
/// ker F is contained in ker G and the phi subsystem is autonomous.
inline double autonomy_residual(const IsolationDecomposition& dec) {
  // G = N F  <=>  F^T N^T = G^T, solved column by column.
  double sq = 0.0;
  const RealMatrix ft = dec.F.transpose();
  for (Eigen::Index j = 0; j < dec.G.rows(); ++j) {
    const auto sol = lstsq_min_norm(ft, dec.G.row(j).transpose());
    sq += sol.residual * sol.residual;
  }
  return std::sqrt(sq);
}

struct TransferValues {
  MatrixPair Phi;        // s x (n - s)
  MatrixPair Psi1;       // (n - s) x s
  MatrixPair Psi2;       // (n - s) x m
  MatrixPair Gamma;      // s x (n - s)
  MatrixPair noise_map;  // Gamma Psi2, s x m
};

namespace detail {

inline MatrixPair shifted(const RealMatrix& a, ComplexPoint u) {
  const Eigen::Index k = a.rows();
  return {u.re * RealMatrix::Identity(k, k) - a, u.im * RealMatrix::Identity(k, k)};
}

inline MatrixPair checked_solve(const MatrixPair& lhs, const MatrixPair& rhs,
                                const char* what, ComplexPoint u) {
  if (lhs.rows() == 0) return MatrixPair::zero(0, rhs.cols());
  double cond = 0.0;
  MatrixPair x = solve_complex(lhs, rhs, &cond);
  if (!(cond < 1e12)) {
    std::ostringstream os;
    os << "transfer_eval: " << what << " is singular at u = " << u.re << (u.im < 0 ? "-" : "+")
       << std::abs(u.im) << "i (condition number " << cond << ")";
    throw Error(ErrorKind::kPole, os.str());
  }
  return x;
}

}  // namespace detail

/// Evaluates Phi(u), Psi(u) = [Psi1 Psi2], Gamma(u) = Phi (I - Psi1 Phi)^-1 and
/// the noise response Gamma(u) Psi2(u) of the phi subsystem at a point u.
inline TransferValues transfer_eval(const IsolationDecomposition& dec, ComplexPoint u) {
  const Eigen::Index s = dec.s;
  const Eigen::Index rest = dec.a22.rows();
  const Eigen::Index m = dec.b.cols();
  TransferValues tv;
  tv.Phi = detail::checked_solve(detail::shifted(dec.a11, u), MatrixPair::real(dec.a12),
                                 "u I - a11", u);
  RealMatrix psi_rhs(rest, s + m);
  psi_rhs << dec.a21, dec.b;
  const MatrixPair psi = detail::checked_solve(detail::shifted(dec.a22, u),
                                               MatrixPair::real(psi_rhs), "u I - a22", u);
  tv.Psi1 = {psi.re.leftCols(s), psi.im.leftCols(s)};
  tv.Psi2 = {psi.re.rightCols(m), psi.im.rightCols(m)};
  if (rest == 0) {
    tv.Gamma = MatrixPair::zero(s, 0);
    tv.noise_map = MatrixPair::zero(s, m);
    return tv;
  }
  const MatrixPair loop = MatrixPair::real(RealMatrix::Identity(rest, rest)) - tv.Psi1 * tv.Phi;
  // Gamma = Phi loop^-1  <=>  loop^T Gamma^T = Phi^T (plain transpose, not adjoint).
  const MatrixPair loop_t{loop.re.transpose(), loop.im.transpose()};
  const MatrixPair phi_t{tv.Phi.re.transpose(), tv.Phi.im.transpose()};
  const MatrixPair gamma_t = detail::checked_solve(loop_t, phi_t, "I - Psi1 Phi", u);
  tv.Gamma = {gamma_t.re.transpose(), gamma_t.im.transpose()};
  tv.noise_map = tv.Gamma * tv.Psi2;
  return tv;
}

/// F (u I - A)^-1 B evaluated on the full system, without the decomposition.
inline MatrixPair full_noise_response(const StateSpace& ss, const RealMatrix& f,
                                      ComplexPoint u) {
  const MatrixPair x =
      detail::checked_solve(detail::shifted(ss.A, u), MatrixPair::real(ss.B), "u I - A", u);
  return {f * x.re, f * x.im};
}

}  // namespace qmemtime
