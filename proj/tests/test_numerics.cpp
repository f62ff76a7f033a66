#include <gtest/gtest.h>

#include <cmath>

#include "qmemtime/numerics.hpp"
#include "qmemtime/oqho_model.hpp"
#include "qmemtime/reference.hpp"

namespace {

using qmemtime::ErrorKind;
using qmemtime::RealMatrix;

template <class F>
ErrorKind kind_of(F&& f) {
  try {
    f();
  } catch (const qmemtime::Error& e) {
    return e.kind();
  }
  ADD_FAILURE() << "no error thrown";
  return ErrorKind::kIo;
}

// Truncated Taylor series, summed until the terms vanish; fine for small ||tA||.
RealMatrix taylor_exp(const RealMatrix& a) {
  RealMatrix sum = RealMatrix::Identity(a.rows(), a.cols());
  RealMatrix term = sum;
  for (int k = 1; k < 60; ++k) {
    term = term * a / k;
    sum += term;
  }
  return sum;
}

TEST(Expm, ZeroMatrixIsIdentity) {
  EXPECT_TRUE(qmemtime::expm(RealMatrix::Zero(3, 3), 2.0).isApprox(RealMatrix::Identity(3, 3)));
}

TEST(Expm, RotationGenerator) {
  RealMatrix a(2, 2);
  a << 0.0, 1.0, -1.0, 0.0;
  for (double t : {0.001, 0.3, 1.0, 7.5, 40.0}) {
    RealMatrix expected(2, 2);
    expected << std::cos(t), std::sin(t), -std::sin(t), std::cos(t);
    EXPECT_LT((qmemtime::expm(a, t) - expected).norm(), 1e-12 * (1.0 + t)) << "t = " << t;
  }
}

TEST(Expm, MatchesTaylorAcrossPadeDegrees) {
  qmemtime::SeededRng rng(5);
  const RealMatrix a = rng.matrix(6, 6);
  // Scales chosen so each Pade degree and the squaring branch is exercised.
  for (double t : {1e-3, 0.03, 0.1, 0.25, 0.5, 1.0, 2.0}) {
    const RealMatrix ref = taylor_exp(t * a);
    EXPECT_LT((qmemtime::expm(a, t) - ref).norm() / ref.norm(), 1e-13) << "t = " << t;
  }
}

TEST(Expm, SemigroupProperty) {
  qmemtime::SeededRng rng(9);
  const RealMatrix a = rng.matrix(5, 5, 2.0);
  const RealMatrix lhs = qmemtime::expm(a, 0.7) * qmemtime::expm(a, 1.3);
  const RealMatrix rhs = qmemtime::expm(a, 2.0);
  EXPECT_LT((lhs - rhs).norm() / rhs.norm(), 1e-12);
}

TEST(Expm, RejectsNonSquare) {
  EXPECT_EQ(kind_of([] { qmemtime::expm(RealMatrix::Zero(2, 3), 1.0); }), ErrorKind::kDimension);
}

TEST(SqrtmPsd, SquaresBack) {
  qmemtime::SeededRng rng(3);
  const RealMatrix g = rng.matrix(5, 5);
  const RealMatrix p = g * g.transpose();
  const RealMatrix r = qmemtime::sqrtm_psd(p);
  EXPECT_LT((r * r - p).norm(), 1e-12 * p.norm());
  EXPECT_LT((r - r.transpose()).norm(), 1e-14);
}

TEST(SqrtmPsd, HalfIdentity) {
  const RealMatrix r = qmemtime::sqrtm_psd(0.5 * RealMatrix::Identity(4, 4));
  EXPECT_LT((r - std::sqrt(0.5) * RealMatrix::Identity(4, 4)).norm(), 1e-15);
}

TEST(SqrtmPsd, RejectsIndefinite) {
  RealMatrix p(2, 2);
  p << 1.0, 0.0, 0.0, -1.0;
  EXPECT_EQ(kind_of([&] { qmemtime::sqrtm_psd(p); }), ErrorKind::kNotPsd);
}

TEST(KernelBasis, SpansNullSpace) {
  qmemtime::SeededRng rng(11);
  const RealMatrix m = rng.matrix(2, 6);
  const RealMatrix k = qmemtime::kernel_basis(m);
  ASSERT_EQ(k.rows(), 6);
  ASSERT_EQ(k.cols(), 4);
  EXPECT_LT((m * k).norm(), 1e-13);
  EXPECT_LT((k.transpose() * k - RealMatrix::Identity(4, 4)).norm(), 1e-13);
}

TEST(KernelBasis, ZeroMatrixGivesWholeSpace) {
  EXPECT_EQ(qmemtime::kernel_basis(RealMatrix::Zero(2, 3)).cols(), 3);
  EXPECT_EQ(qmemtime::numerical_rank(RealMatrix::Zero(2, 3)), 0);
}

TEST(RowComplement, CompletesToInvertible) {
  qmemtime::SeededRng rng(12);
  const RealMatrix f = rng.matrix(2, 5);
  const RealMatrix t = qmemtime::row_complement(f);
  ASSERT_EQ(t.rows(), 3);
  EXPECT_LT((t * f.transpose()).norm(), 1e-13);
  RealMatrix s(5, 5);
  s << f, t;
  EXPECT_EQ(qmemtime::numerical_rank(s), 5);
}

TEST(RowComplement, RejectsRankDeficient) {
  RealMatrix f(2, 3);
  f << 1, 2, 3, 2, 4, 6;
  EXPECT_EQ(kind_of([&] { qmemtime::row_complement(f); }), ErrorKind::kRank);
}

TEST(Lstsq, MinimumNormOnRankDeficientSystem) {
  RealMatrix l(2, 3);
  l << 1, 0, 0, 0, 0, 0;
  qmemtime::RealVector b(2);
  b << 2, 0;
  const auto sol = qmemtime::lstsq_min_norm(l, b);
  EXPECT_EQ(sol.rank, 1);
  EXPECT_NEAR(sol.x(0), 2.0, 1e-15);
  EXPECT_NEAR(sol.x(1), 0.0, 1e-15);
  EXPECT_NEAR(sol.x(2), 0.0, 1e-15);
  EXPECT_LT(sol.residual, 1e-15);
}

TEST(SolveComplex, MatchesStdComplex) {
  qmemtime::SeededRng rng(21);
  const RealMatrix ar = rng.matrix(3, 3), ai = rng.matrix(3, 3);
  const RealMatrix br = rng.matrix(3, 2), bi = rng.matrix(3, 2);
  const auto x = qmemtime::solve_complex({ar, ai}, {br, bi});
  const Eigen::MatrixXcd a = ar.cast<std::complex<double>>() +
                             std::complex<double>(0, 1) * ai.cast<std::complex<double>>();
  const Eigen::MatrixXcd b = br.cast<std::complex<double>>() +
                             std::complex<double>(0, 1) * bi.cast<std::complex<double>>();
  const Eigen::MatrixXcd ref = a.fullPivLu().solve(b);
  EXPECT_LT((x.re - ref.real()).norm(), 1e-12);
  EXPECT_LT((x.im - ref.imag()).norm(), 1e-12);
}

TEST(HermitianEigen, CcrStateBound) {
  // P + i Theta >= 0 holds for P = I/2 (vacuum) and fails for P = I/4.
  const RealMatrix theta = qmemtime::ccr_theta(2);
  EXPECT_NEAR(qmemtime::min_eigenvalue_hermitian(0.5 * RealMatrix::Identity(4, 4), theta), 0.0,
              1e-14);
  EXPECT_LT(qmemtime::min_eigenvalue_hermitian(0.25 * RealMatrix::Identity(4, 4), theta), -0.2);
}

TEST(Lyapunov, ScalarClosedForm) {
  // v' = 2 a v + q  =>  v(t) = q (e^{2at} - 1) / (2a).
  RealMatrix a(1, 1);
  a << -0.7;
  qmemtime::HermitianPair q{RealMatrix::Constant(1, 1, 1.3), RealMatrix::Zero(1, 1)};
  const auto v = qmemtime::integrate_lyapunov(a, q, {0.0, 0.5, 2.0});
  for (std::size_t k = 1; k < 3; ++k) {
    const double t = k == 1 ? 0.5 : 2.0;
    const double expected = 1.3 * (std::exp(-1.4 * t) - 1.0) / -1.4;
    EXPECT_NEAR(v[k].re(0, 0), expected, 1e-9 * expected);
  }
}

TEST(Lyapunov, GridValidation) {
  const RealMatrix a = RealMatrix::Zero(2, 2);
  const auto q = qmemtime::HermitianPair::zero(2);
  EXPECT_EQ(kind_of([&] { qmemtime::integrate_lyapunov(a, q, {0.1, 0.2}); }), ErrorKind::kGrid);
  EXPECT_EQ(kind_of([&] { qmemtime::integrate_lyapunov(a, q, {0.0, 0.2, 0.2}); }),
            ErrorKind::kGrid);
}

TEST(Lyapunov, MatchesQuadratureGramian) {
  qmemtime::SeededRng rng(4);
  const RealMatrix a = rng.matrix(4, 4) - RealMatrix::Identity(4, 4);
  const RealMatrix b = rng.matrix(4, 2);
  const RealMatrix j = qmemtime::ito_j(2);
  const qmemtime::HermitianPair mho{b * b.transpose(), b * j * b.transpose()};
  const auto v = qmemtime::integrate_lyapunov(a, mho, {0.0, 0.4, 3.0});
  for (std::size_t k = 1; k < 3; ++k) {
    const double t = k == 1 ? 0.4 : 3.0;
    const auto q = qmemtime::gramian_quadrature(a, b, j, t);
    EXPECT_LT((v[k].re - q.re).norm() / q.re.norm(), 1e-9);
    EXPECT_LT((v[k].im - q.im).norm() / q.im.norm(), 1e-9);
  }
}

TEST(Lyapunov, PreservesSymmetryExactly) {
  qmemtime::SeededRng rng(8);
  const RealMatrix a = rng.matrix(5, 5);
  const RealMatrix b = rng.matrix(5, 2);
  const RealMatrix j = qmemtime::ito_j(2);
  const RealMatrix bjb = b * j * b.transpose();
  const qmemtime::HermitianPair mho{b * b.transpose(), 0.5 * (bjb - bjb.transpose())};
  const auto v = qmemtime::integrate_lyapunov(a, mho, {0.0, 1.0});
  EXPECT_EQ((v[1].re - v[1].re.transpose()).norm(), 0.0);
  EXPECT_EQ((v[1].im + v[1].im.transpose()).norm(), 0.0);
}

TEST(Expm, NilpotentSeriesTerminates) {
  RealMatrix a(2, 2);
  a << 0.0, 1.0, 0.0, 0.0;
  RealMatrix expected(2, 2);
  expected << 1.0, 1.0, 0.0, 1.0;
  EXPECT_LT((qmemtime::expm(a, 1.0) - expected).norm(), 1e-15);
  EXPECT_TRUE(qmemtime::expm(a, 0.0).isIdentity(0.0));
}

TEST(SqrtmPsd, Diagonal) {
  RealMatrix p = RealMatrix::Zero(2, 2);
  p.diagonal() << 4.0, 9.0;
  const RealMatrix r = qmemtime::sqrtm_psd(p);
  EXPECT_NEAR(r(0, 0), 2.0, 1e-15);
  EXPECT_NEAR(r(1, 1), 3.0, 1e-15);
  EXPECT_NEAR(r(0, 1), 0.0, 1e-15);
  EXPECT_TRUE(qmemtime::sqrtm_psd(RealMatrix::Identity(3, 3)).isIdentity(1e-15));
}

TEST(KernelBasis, CoordinateKernel) {
  RealMatrix m = RealMatrix::Zero(2, 4);
  m(0, 0) = 1.0;
  m(1, 1) = 1.0;
  const RealMatrix k = qmemtime::kernel_basis(m);
  ASSERT_EQ(k.cols(), 2);
  EXPECT_LT((m * k).norm(), 1e-15);
  EXPECT_LT(k.topRows(2).norm(), 1e-15);
  EXPECT_LT((k.transpose() * k - RealMatrix::Identity(2, 2)).norm(), 1e-14);
}

TEST(KernelBasis, SeededWideMatrix) {
  qmemtime::SeededRng rng(13);
  const RealMatrix m = rng.matrix(2, 8);
  const RealMatrix k = qmemtime::kernel_basis(m);
  ASSERT_EQ(k.cols(), 6);
  EXPECT_LT((m * k).norm(), 1e-12);
}

TEST(RowComplement, CoordinateRows) {
  RealMatrix f = RealMatrix::Zero(2, 4);
  f(0, 2) = 1.0;
  f(1, 3) = 1.0;
  const RealMatrix t = qmemtime::row_complement(f);
  ASSERT_EQ(t.rows(), 2);
  EXPECT_LT(t.rightCols(2).norm(), 1e-15);
  RealMatrix single = RealMatrix::Zero(1, 4);
  single(0, 0) = 1.0;
  const RealMatrix t1 = qmemtime::row_complement(single);
  ASSERT_EQ(t1.rows(), 3);
  EXPECT_LT(t1.col(0).norm(), 1e-15);
}

TEST(Lstsq, IdentityReturnsRhs) {
  qmemtime::RealVector b(3);
  b << 1.5, -2.0, 0.25;
  const auto sol = qmemtime::lstsq_min_norm(RealMatrix::Identity(3, 3), b);
  EXPECT_LT((sol.x - b).norm(), 1e-15);
  EXPECT_EQ(sol.rank, 3);
}

TEST(Lstsq, SeededRankDeficientProjection) {
  qmemtime::SeededRng rng(14);
  const RealMatrix l = rng.matrix(6, 3) * rng.matrix(3, 6);
  const qmemtime::RealVector b = l * rng.matrix(6, 1).col(0);
  const auto sol = qmemtime::lstsq_min_norm(l, b);
  EXPECT_EQ(sol.rank, 3);
  EXPECT_LT(sol.residual, 1e-10);
  const RealMatrix ker = qmemtime::kernel_basis(l);
  EXPECT_LT((ker.transpose() * sol.x).norm(), 1e-10);
}

TEST(Lyapunov, ZeroDiffusionStaysZero) {
  qmemtime::SeededRng rng(15);
  const auto v = qmemtime::integrate_lyapunov(rng.matrix(3, 3), qmemtime::HermitianPair::zero(3),
                                              {0.0, 1.0, 2.0});
  for (const auto& x : v) EXPECT_EQ(x.re.norm() + x.im.norm(), 0.0);
}

TEST(Lyapunov, ZeroDriftGrowsLinearly) {
  qmemtime::SeededRng rng(16);
  const RealMatrix g = rng.matrix(3, 3);
  const qmemtime::HermitianPair q{g * g.transpose(), RealMatrix::Zero(3, 3)};
  const auto v = qmemtime::integrate_lyapunov(RealMatrix::Zero(3, 3), q, {0.0, 0.5, 4.0});
  EXPECT_LT((v[1].re - 0.5 * q.re).norm(), 1e-14);
  EXPECT_LT((v[2].re - 4.0 * q.re).norm(), 1e-13);
}

TEST(Quadrature, TrivialCases) {
  qmemtime::SeededRng rng(17);
  const RealMatrix b = rng.matrix(4, 2);
  const RealMatrix j = qmemtime::ito_j(2);
  const auto zero = qmemtime::gramian_quadrature(rng.matrix(4, 4), b, j, 0.0);
  EXPECT_EQ(zero.re.norm() + zero.im.norm(), 0.0);
  const auto lin = qmemtime::gramian_quadrature(RealMatrix::Zero(4, 4), b, j, 2.0);
  EXPECT_LT((lin.re - 2.0 * b * b.transpose()).norm(), 1e-12);
  EXPECT_LT((lin.im - 2.0 * b * j * b.transpose()).norm(), 1e-12);
}

}  // namespace
