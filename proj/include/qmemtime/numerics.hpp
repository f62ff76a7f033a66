#pragma once

// Dense real linear algebra and integration kernels. Complex-valued matrices
// never appear as a complex scalar type: they are carried as (re, im) pairs
// of real matrices and complex linear systems are solved through their real
// 2x2 block embedding.

#include <Eigen/Dense>

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <functional>
#include <limits>
#include <sstream>
#include <string>
#include <vector>

#include "qmemtime/errors.hpp"

namespace qmemtime {

using RealMatrix = Eigen::MatrixXd;
using RealVector = Eigen::VectorXd;

/// Hermitian matrix re + i*im with re symmetric and im antisymmetric.
struct HermitianPair {
  RealMatrix re;
  RealMatrix im;

  static HermitianPair zero(Eigen::Index order) {
    return {RealMatrix::Zero(order, order), RealMatrix::Zero(order, order)};
  }
  Eigen::Index order() const { return re.rows(); }
};

/// General complex matrix re + i*im (transfer function values).
struct MatrixPair {
  RealMatrix re;
  RealMatrix im;

  static MatrixPair zero(Eigen::Index rows, Eigen::Index cols) {
    return {RealMatrix::Zero(rows, cols), RealMatrix::Zero(rows, cols)};
  }
  static MatrixPair real(const RealMatrix& m) {
    return {m, RealMatrix::Zero(m.rows(), m.cols())};
  }
  Eigen::Index rows() const { return re.rows(); }
  Eigen::Index cols() const { return re.cols(); }
  double norm() const { return std::sqrt(re.squaredNorm() + im.squaredNorm()); }
};

/// A complex number u = re + i*im, used as a resolvent argument.
struct ComplexPoint {
  double re = 0.0;
  double im = 0.0;
};

inline MatrixPair operator*(const MatrixPair& a, const MatrixPair& b) {
  return {a.re * b.re - a.im * b.im, a.re * b.im + a.im * b.re};
}
inline MatrixPair operator-(const MatrixPair& a, const MatrixPair& b) {
  return {a.re - b.re, a.im - b.im};
}
inline MatrixPair operator+(const MatrixPair& a, const MatrixPair& b) {
  return {a.re + b.re, a.im + b.im};
}

/// Frobenius inner product <a, b> = Tr(a^T b).
inline double frobenius_inner(const RealMatrix& a, const RealMatrix& b) {
  return (a.array() * b.array()).sum();
}

inline bool is_symmetric(const RealMatrix& m, double tol) {
  return m.rows() == m.cols() && (m - m.transpose()).cwiseAbs().maxCoeff() <= tol;
}

inline bool is_antisymmetric(const RealMatrix& m, double tol) {
  return m.rows() == m.cols() && (m + m.transpose()).cwiseAbs().maxCoeff() <= tol;
}

inline bool all_finite(const RealMatrix& m) { return m.allFinite(); }

inline std::string shape_of(const RealMatrix& m) {
  std::ostringstream os;
  os << m.rows() << "x" << m.cols();
  return os.str();
}

inline void require_square(const RealMatrix& m, const char* what) {
  if (m.rows() != m.cols()) {
    throw Error(ErrorKind::kDimension,
                std::string(what) + " must be square, got " + shape_of(m));
  }
}

/// Smallest eigenvalue of a symmetric matrix.
inline double min_eigenvalue_symmetric(const RealMatrix& m) {
  if (m.size() == 0) return 0.0;
  Eigen::SelfAdjointEigenSolver<RealMatrix> es(m, Eigen::EigenvaluesOnly);
  return es.eigenvalues().minCoeff();
}

inline double max_eigenvalue_symmetric(const RealMatrix& m) {
  if (m.size() == 0) return 0.0;
  Eigen::SelfAdjointEigenSolver<RealMatrix> es(m, Eigen::EigenvaluesOnly);
  return es.eigenvalues().maxCoeff();
}

/// Real symmetric embedding [[re, -im], [im, re]] of a Hermitian matrix; its
/// spectrum is that of re + i*im with every eigenvalue doubled.
inline RealMatrix hermitian_embedding(const RealMatrix& re, const RealMatrix& im) {
  const Eigen::Index n = re.rows();
  RealMatrix e(2 * n, 2 * n);
  e << re, -im, im, re;
  return e;
}

/// Smallest eigenvalue of the Hermitian matrix re + i*im.
inline double min_eigenvalue_hermitian(const RealMatrix& re, const RealMatrix& im) {
  return min_eigenvalue_symmetric(hermitian_embedding(re, im));
}

/// Numerical rank with singular values counted above tol * sigma_max * max(rows, cols).
inline Eigen::Index numerical_rank(const RealMatrix& m, double tol = 1e-10) {
  if (m.size() == 0) return 0;
  Eigen::JacobiSVD<RealMatrix> svd(m);
  const auto& sv = svd.singularValues();
  const double smax = sv.size() > 0 ? sv(0) : 0.0;
  if (smax == 0.0) return 0;
  const double cut = tol * smax * static_cast<double>(std::max(m.rows(), m.cols()));
  return static_cast<Eigen::Index>((sv.array() > cut).count());
}

namespace detail {

// Pade approximant coefficients and 1-norm bounds theta_m for the degree-m
// diagonal approximant in the scaling and squaring method.
inline constexpr std::array<double, 4> kPade3 = {120.0, 60.0, 12.0, 1.0};
inline constexpr std::array<double, 6> kPade5 = {30240.0, 15120.0, 3360.0,
                                                 420.0,   30.0,    1.0};
inline constexpr std::array<double, 8> kPade7 = {17297280.0, 8648640.0, 1995840.0,
                                                 277200.0,   25200.0,   1512.0,
                                                 56.0,       1.0};
inline constexpr std::array<double, 10> kPade9 = {
    17643225600.0, 8821612800.0, 2075673600.0, 302702400.0, 30270240.0,
    2162160.0,     110880.0,     3960.0,       90.0,        1.0};
inline constexpr std::array<double, 14> kPade13 = {
    64764752532480000.0, 32382376266240000.0, 7771770303897600.0,
    1187353796428800.0,  129060195264000.0,   10559470521600.0,
    670442572800.0,      33522128640.0,       1323241920.0,
    40840800.0,          960960.0,            16380.0,
    182.0,               1.0};
inline constexpr double kTheta3 = 1.495585217958292e-2;
inline constexpr double kTheta5 = 2.539398330063230e-1;
inline constexpr double kTheta7 = 9.504178996162932e-1;
inline constexpr double kTheta9 = 2.097847961257068e0;
inline constexpr double kTheta13 = 5.371920351148152e0;

template <std::size_t N>
RealMatrix pade_low_order(const RealMatrix& a, const std::array<double, N>& b) {
  const Eigen::Index n = a.rows();
  const RealMatrix ident = RealMatrix::Identity(n, n);
  const RealMatrix a2 = a * a;
  RealMatrix even = b[0] * ident;
  RealMatrix odd = b[1] * ident;
  RealMatrix power = ident;
  for (std::size_t k = 2; k < N; k += 2) {
    power = power * a2;
    even += b[k] * power;
    if (k + 1 < N) odd += b[k + 1] * power;
  }
  const RealMatrix u = a * odd;
  return (even - u).partialPivLu().solve(even + u);
}

inline RealMatrix pade13(const RealMatrix& a) {
  const auto& b = kPade13;
  const Eigen::Index n = a.rows();
  const RealMatrix ident = RealMatrix::Identity(n, n);
  const RealMatrix a2 = a * a;
  const RealMatrix a4 = a2 * a2;
  const RealMatrix a6 = a4 * a2;
  const RealMatrix u =
      a * (a6 * (b[13] * a6 + b[11] * a4 + b[9] * a2) + b[7] * a6 + b[5] * a4 +
           b[3] * a2 + b[1] * ident);
  const RealMatrix v = a6 * (b[12] * a6 + b[10] * a4 + b[8] * a2) + b[6] * a6 +
                       b[4] * a4 + b[2] * a2 + b[0] * ident;
  return (v - u).partialPivLu().solve(v + u);
}

}  // namespace detail

/// Matrix exponential e^{tA} by scaling and squaring with a diagonal Pade
/// approximant whose degree is picked from the 1-norm of tA.
inline RealMatrix expm(const RealMatrix& a, double t) {
  require_square(a, "expm argument");
  if (!std::isfinite(t)) throw Error(ErrorKind::kDomain, "expm: time must be finite");
  const Eigen::Index n = a.rows();
  if (n == 0) return RealMatrix(0, 0);
  const RealMatrix ta = t * a;
  const double norm1 = ta.cwiseAbs().colwise().sum().maxCoeff();
  if (norm1 == 0.0) return RealMatrix::Identity(n, n);
  if (norm1 <= detail::kTheta3) return detail::pade_low_order(ta, detail::kPade3);
  if (norm1 <= detail::kTheta5) return detail::pade_low_order(ta, detail::kPade5);
  if (norm1 <= detail::kTheta7) return detail::pade_low_order(ta, detail::kPade7);
  if (norm1 <= detail::kTheta9) return detail::pade_low_order(ta, detail::kPade9);
  const int squarings =
      std::max(0, static_cast<int>(std::ceil(std::log2(norm1 / detail::kTheta13))));
  RealMatrix e = detail::pade13(ta / std::ldexp(1.0, squarings));
  for (int k = 0; k < squarings; ++k) e = e * e;
  return e;
}

/// Symmetric square root of a positive semi-definite matrix. Eigenvalues in
/// [-tol, 0) are clamped to zero.
inline RealMatrix sqrtm_psd(const RealMatrix& p, double tol = 1e-10) {
  require_square(p, "sqrtm_psd argument");
  if (!is_symmetric(p, 1e-12 * (1.0 + p.cwiseAbs().maxCoeff()))) {
    throw Error(ErrorKind::kValidation, "sqrtm_psd: matrix is not symmetric");
  }
  if (p.size() == 0) return p;
  const RealMatrix sym = 0.5 * (p + p.transpose());
  Eigen::SelfAdjointEigenSolver<RealMatrix> es(sym);
  RealVector ev = es.eigenvalues();
  if (ev.minCoeff() < -tol) {
    std::ostringstream os;
    os << "sqrtm_psd: matrix has eigenvalue " << ev.minCoeff() << " below -" << tol;
    throw Error(ErrorKind::kNotPsd, os.str());
  }
  ev = ev.cwiseMax(0.0).cwiseSqrt();
  const RealMatrix& q = es.eigenvectors();
  RealMatrix s = q * ev.asDiagonal() * q.transpose();
  return 0.5 * (s + s.transpose());
}

/// Orthonormal basis of ker M as the columns of an n x (n - rank M) matrix.
/// Columns are ordered from the smallest singular direction upward.
inline RealMatrix kernel_basis(const RealMatrix& m, double tol = 1e-10) {
  const Eigen::Index n = m.cols();
  if (n == 0) return RealMatrix(0, 0);
  if (m.rows() == 0) return RealMatrix::Identity(n, n);
  Eigen::JacobiSVD<RealMatrix> svd(m, Eigen::ComputeFullV);
  const Eigen::Index rank = numerical_rank(m, tol);
  const RealMatrix& v = svd.matrixV();
  RealMatrix k(n, n - rank);
  for (Eigen::Index j = 0; j < n - rank; ++j) k.col(j) = v.col(n - 1 - j);
  return k;
}

/// Orthonormal rows spanning the orthogonal complement of the row space of a
/// full row rank F; [F; T] is then nonsingular.
inline RealMatrix row_complement(const RealMatrix& f, double tol = 1e-10) {
  const Eigen::Index rank = numerical_rank(f, tol);
  if (rank != f.rows() || f.rows() > f.cols()) {
    std::ostringstream os;
    os << "row_complement: F (" << shape_of(f) << ") has rank " << rank
       << ", full row rank required";
    throw Error(ErrorKind::kRank, os.str());
  }
  return kernel_basis(f, tol).transpose();
}

struct LeastSquaresSolution {
  RealVector x;
  double residual = 0.0;
  Eigen::Index rank = 0;
};

/// Minimum-norm least-squares solution of L x = b by SVD with singular values
/// below tol * sigma_max treated as zero.
inline LeastSquaresSolution lstsq_min_norm(const RealMatrix& l, const RealVector& b,
                                           double tol = 1e-10) {
  if (l.rows() != b.size()) {
    throw Error(ErrorKind::kDimension, "lstsq_min_norm: L has " +
                                           std::to_string(l.rows()) + " rows but b has " +
                                           std::to_string(b.size()) + " entries");
  }
  LeastSquaresSolution out;
  out.x = RealVector::Zero(l.cols());
  if (l.size() == 0) {
    out.residual = b.norm();
    return out;
  }
  Eigen::JacobiSVD<RealMatrix> svd(l, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const auto& sv = svd.singularValues();
  const double smax = sv(0);
  const RealVector utb = svd.matrixU().transpose() * b;
  RealVector coeff = RealVector::Zero(sv.size());
  for (Eigen::Index i = 0; i < sv.size(); ++i) {
    if (smax > 0.0 && sv(i) > tol * smax) {
      coeff(i) = utb(i) / sv(i);
      ++out.rank;
    }
  }
  out.x = svd.matrixV() * coeff;
  out.residual = (l * out.x - b).norm();
  return out;
}

/// Solves (re + i*im) X = rhs through the real block embedding. Returns the
/// solution and the 2-norm condition number of the embedded matrix.
inline MatrixPair solve_complex(const MatrixPair& lhs, const MatrixPair& rhs,
                                double* condition = nullptr) {
  const Eigen::Index n = lhs.rows();
  RealMatrix big(2 * n, 2 * n);
  big << lhs.re, -lhs.im, lhs.im, lhs.re;
  RealMatrix rb(2 * n, rhs.cols());
  rb << rhs.re, rhs.im;
  if (condition != nullptr) {
    Eigen::JacobiSVD<RealMatrix> svd(big);
    const auto& sv = svd.singularValues();
    const double smin = sv.size() > 0 ? sv(sv.size() - 1) : 1.0;
    *condition = smin > 0.0 ? sv(0) / smin : std::numeric_limits<double>::infinity();
  }
  const RealMatrix x = big.fullPivLu().solve(rb);
  return {x.topRows(n), x.bottomRows(n)};
}

/// Options for the fixed-step Lyapunov integrator. The substep h on each grid
/// interval is the largest one that divides the interval evenly and keeps
/// ||A||_F * h <= norm_step.
struct LyapunovOptions {
  double norm_step = 0.01;
};

namespace detail {

// Right-hand side of V' = A V + V A^T + Q on a (re, im) pair. Writing A V + V A^T
// as W + W^T (re) and W - W^T (im) with W = A V keeps the parts exactly
// symmetric and antisymmetric.
inline HermitianPair lyapunov_rhs(const RealMatrix& a, const HermitianPair& v,
                                  const HermitianPair& q) {
  const RealMatrix wr = a * v.re;
  const RealMatrix wi = a * v.im;
  return {wr + wr.transpose() + q.re, wi - wi.transpose() + q.im};
}

inline void rk4_step(const RealMatrix& a, const HermitianPair& q, double h,
                     HermitianPair& v) {
  const HermitianPair k1 = lyapunov_rhs(a, v, q);
  const HermitianPair k2 =
      lyapunov_rhs(a, {v.re + 0.5 * h * k1.re, v.im + 0.5 * h * k1.im}, q);
  const HermitianPair k3 =
      lyapunov_rhs(a, {v.re + 0.5 * h * k2.re, v.im + 0.5 * h * k2.im}, q);
  const HermitianPair k4 = lyapunov_rhs(a, {v.re + h * k3.re, v.im + h * k3.im}, q);
  v.re += (h / 6.0) * (k1.re + 2.0 * k2.re + 2.0 * k3.re + k4.re);
  v.im += (h / 6.0) * (k1.im + 2.0 * k2.im + 2.0 * k3.im + k4.im);
}

}  // namespace detail

/// Samples of the solution of V' = A V + V A^T + mho, V(0) = 0, on an
/// increasing grid starting at 0, by classical RK4.
inline std::vector<HermitianPair> integrate_lyapunov(const RealMatrix& a,
                                                     const HermitianPair& mho,
                                                     const std::vector<double>& t_grid,
                                                     const LyapunovOptions& opts = {}) {
  require_square(a, "integrate_lyapunov: A");
  if (mho.re.rows() != a.rows() || mho.re.cols() != a.cols() ||
      mho.im.rows() != a.rows() || mho.im.cols() != a.cols()) {
    throw Error(ErrorKind::kDimension, "integrate_lyapunov: mho order does not match A");
  }
  if (t_grid.empty() || t_grid.front() != 0.0) {
    throw Error(ErrorKind::kGrid, "integrate_lyapunov: grid must start at 0");
  }
  for (std::size_t i = 1; i < t_grid.size(); ++i) {
    if (!(t_grid[i] > t_grid[i - 1]) || !std::isfinite(t_grid[i])) {
      throw Error(ErrorKind::kGrid, "integrate_lyapunov: grid is not strictly increasing");
    }
  }
  const double a_norm = a.norm();
  std::vector<HermitianPair> out;
  out.reserve(t_grid.size());
  HermitianPair v = HermitianPair::zero(a.rows());
  out.push_back(v);
  for (std::size_t i = 1; i < t_grid.size(); ++i) {
    const double dt = t_grid[i] - t_grid[i - 1];
    const double steps = std::max(1.0, std::ceil(a_norm * dt / opts.norm_step));
    const auto n_sub = static_cast<long long>(steps);
    const double h = dt / steps;
    for (long long k = 0; k < n_sub; ++k) detail::rk4_step(a, mho, h, v);
    out.push_back(v);
  }
  return out;
}

/// Controllability Gramian int_0^t e^{sA} B (I + iJ) B^T e^{sA^T} ds by adaptive
/// Simpson quadrature. Independent of the Lyapunov integrator and used as its
/// oracle.
inline HermitianPair gramian_quadrature(const RealMatrix& a, const RealMatrix& b,
                                        const RealMatrix& j_field, double t,
                                        double abs_tol = 1e-10) {
  require_square(a, "gramian_quadrature: A");
  if (!(t >= 0.0)) throw Error(ErrorKind::kDomain, "gramian_quadrature: t must be >= 0");
  if (b.rows() != a.rows() || j_field.rows() != b.cols() || j_field.cols() != b.cols()) {
    throw Error(ErrorKind::kDimension, "gramian_quadrature: inconsistent A, B, J");
  }
  const Eigen::Index n = a.rows();
  const RealMatrix q_re = b * b.transpose();
  const RealMatrix q_im = b * j_field * b.transpose();
  if (t == 0.0) return HermitianPair::zero(n);

  // Integrand values stacked as [re im] so one recursion handles both parts.
  auto integrand = [&](double s) {
    const RealMatrix e = expm(a, s);
    RealMatrix out(n, 2 * n);
    out << e * q_re * e.transpose(), e * q_im * e.transpose();
    return out;
  };
  auto simpson = [](double lo, double hi, const RealMatrix& flo, const RealMatrix& fmid,
                    const RealMatrix& fhi) {
    return ((hi - lo) / 6.0) * (flo + 4.0 * fmid + fhi);
  };
  std::function<RealMatrix(double, double, const RealMatrix&, const RealMatrix&,
                           const RealMatrix&, const RealMatrix&, double, int)>
      recurse = [&](double lo, double hi, const RealMatrix& flo, const RealMatrix& fmid,
                    const RealMatrix& fhi, const RealMatrix& whole, double tol,
                    int depth) -> RealMatrix {
    const double mid = 0.5 * (lo + hi);
    const RealMatrix fl = integrand(0.5 * (lo + mid));
    const RealMatrix fr = integrand(0.5 * (mid + hi));
    const RealMatrix left = simpson(lo, mid, flo, fl, fmid);
    const RealMatrix right = simpson(mid, hi, fmid, fr, fhi);
    const RealMatrix delta = left + right - whole;
    if (depth <= 0 || delta.cwiseAbs().maxCoeff() <= 15.0 * tol) {
      return left + right + delta / 15.0;
    }
    return recurse(lo, mid, flo, fl, fmid, left, 0.5 * tol, depth - 1) +
           recurse(mid, hi, fmid, fr, fhi, right, 0.5 * tol, depth - 1);
  };
  // Split into a few panels up front so the first estimate is not degenerate.
  const int panels = 8;
  RealMatrix total = RealMatrix::Zero(n, 2 * n);
  for (int p = 0; p < panels; ++p) {
    const double lo = t * p / panels;
    const double hi = t * (p + 1) / panels;
    const RealMatrix flo = integrand(lo);
    const RealMatrix fmid = integrand(0.5 * (lo + hi));
    const RealMatrix fhi = integrand(hi);
    total += recurse(lo, hi, flo, fmid, fhi, simpson(lo, hi, flo, fmid, fhi),
                     abs_tol / panels, 40);
  }
  HermitianPair g{total.leftCols(n), total.rightCols(n)};
  g.re = 0.5 * (g.re + g.re.transpose());
  g.im = 0.5 * (g.im - g.im.transpose());
  return g;
}

}  // namespace qmemtime
