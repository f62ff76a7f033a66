#include <gtest/gtest.h>

#include "qmemtime/isolation.hpp"
#include "qmemtime/reference.hpp"

namespace {

using qmemtime::ComplexPoint;
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

qmemtime::StateSpace reference_ss(std::uint64_t seed) {
  return qmemtime::compose(qmemtime::reference_interconnection(seed)).ss;
}

TEST(IsolationRank, Examples) {
  EXPECT_EQ(qmemtime::isolation_rank(RealMatrix::Zero(2, 4), 4), 4);
  EXPECT_EQ(qmemtime::isolation_rank(RealMatrix::Identity(4, 4), 4), 0);
  qmemtime::SeededRng rng(1);
  EXPECT_EQ(qmemtime::isolation_rank(rng.matrix(4, 8), 8), 4);
  EXPECT_EQ(qmemtime::isolation_rank(reference_ss(42).M, 8), 4);
}

TEST(IsolationBasis, CoordinateCoupling) {
  RealMatrix m = RealMatrix::Zero(2, 4);
  m(0, 0) = 1.0;
  m(1, 1) = 1.0;
  const auto ss = qmemtime::realize({RealMatrix::Identity(4, 4), m, RealMatrix::Identity(2, 2)},
                                    qmemtime::make_ccr(2, 2));
  const auto dec = qmemtime::isolation_basis(ss, 2);
  EXPECT_LT(dec.ftheta_mt, 1e-15);
  EXPECT_LT(dec.fb_residual, 1e-15);
  // Row space is span{e3, e4}.
  EXPECT_LT(dec.F.leftCols(2).norm(), 1e-15);
  EXPECT_EQ(qmemtime::numerical_rank(dec.F), 2);
}

TEST(IsolationBasis, ClosedSystemAnyOrder) {
  const auto ss = qmemtime::realize(
      {RealMatrix::Identity(4, 4), RealMatrix::Zero(2, 4), RealMatrix::Identity(2, 2)},
      qmemtime::make_ccr(2, 2));
  for (int s = 1; s <= 4; ++s) {
    const auto dec = qmemtime::isolation_basis(ss, s);
    EXPECT_EQ(dec.fb_residual, 0.0);
    EXPECT_EQ(dec.F.rows(), s);
  }
}

TEST(IsolationBasis, ReferenceScenario) {
  for (std::uint64_t seed : {1u, 2u, 3u, 42u}) {
    const auto ss = reference_ss(seed);
    const auto dec = qmemtime::isolation_basis(ss, 2);
    EXPECT_TRUE(dec.partially_isolated);
    EXPECT_LE(dec.fb_residual, 1e-10 * (1.0 + ss.B.norm()));
    EXPECT_LE(dec.fa_minus_g, 1e-10 * (1.0 + ss.A.norm()));
    EXPECT_EQ(qmemtime::numerical_rank(dec.F), 2);
    EXPECT_EQ(dec.d, 4);
    for (Eigen::Index i = 0; i < dec.F.rows(); ++i) EXPECT_NEAR(dec.F.row(i).norm(), 1.0, 1e-14);
    // Similarity blocks reproduce the drift.
    EXPECT_LT((dec.S_inv * dec.a * dec.S - ss.A).norm(), 1e-12);
    EXPECT_LT((dec.a11 - dec.G * dec.S1).norm(), 1e-12);
  }
}

TEST(IsolationBasis, Errors) {
  const auto ss = qmemtime::realize(
      {RealMatrix::Identity(2, 2), RealMatrix::Identity(2, 2), RealMatrix::Identity(2, 2)},
      qmemtime::make_ccr(1, 2));
  EXPECT_EQ(kind_of([&] { qmemtime::isolation_basis(ss, 1); }), ErrorKind::kNoIsolation);
  const auto ref = reference_ss(3);
  EXPECT_EQ(kind_of([&] { qmemtime::isolation_basis(ref, 5); }),
            ErrorKind::kInfeasibleIsolation);
  EXPECT_EQ(kind_of([&] { qmemtime::isolation_basis(ref, 0); }),
            ErrorKind::kInfeasibleIsolation);
  EXPECT_EQ(kind_of([&] { qmemtime::isolation_from_f(ref, RealMatrix::Zero(2, 8)); }),
            ErrorKind::kRank);
  EXPECT_EQ(kind_of([&] { qmemtime::isolation_from_f(ref, RealMatrix::Zero(2, 7)); }),
            ErrorKind::kDimension);
}

TEST(Autonomy, DecoupledBlockIsAutonomous) {
  // Oscillator 2 is closed and uncoupled: its variables form an autonomous
  // isolated subsystem, so G = N F has an exact solution.
  auto spec = qmemtime::reference_interconnection(4);
  spec.osc[0].N.setZero();
  spec.osc[1].N.setZero();
  spec.osc[1].M.setZero();
  const auto ss = qmemtime::compose(spec).ss;
  RealMatrix f = RealMatrix::Zero(4, 8);
  f.rightCols(4) = RealMatrix::Identity(4, 4);
  const auto dec = qmemtime::isolation_from_f(ss, f);
  EXPECT_TRUE(dec.partially_isolated);
  EXPECT_LT(qmemtime::autonomy_residual(dec), 1e-13);
  EXPECT_LT(dec.a12.norm(), 1e-14);
  const auto tv = qmemtime::transfer_eval(dec, {1.0, 0.5});
  EXPECT_LT(tv.Phi.norm(), 1e-14);
  EXPECT_LT(tv.Gamma.norm(), 1e-14);
  EXPECT_LT(tv.noise_map.norm(), 1e-14);
}

TEST(Autonomy, GenericReferenceIsNot) {
  const auto dec = qmemtime::isolation_basis(reference_ss(42), 2);
  EXPECT_GT(qmemtime::autonomy_residual(dec), 1e-3);
}

TEST(Transfer, ResolventDecay) {
  const auto dec = qmemtime::isolation_basis(reference_ss(2), 2);
  const double n2 = qmemtime::transfer_eval(dec, {1e2, 0.0}).Phi.norm();
  const double n3 = qmemtime::transfer_eval(dec, {1e3, 0.0}).Phi.norm();
  EXPECT_NEAR(n2 / n3, 10.0, 0.2);
  EXPECT_NEAR(n3 * 1e3, dec.a12.norm(), 0.01 * dec.a12.norm());
}

TEST(Transfer, MatchesFullResolvent) {
  const auto ss = reference_ss(42);
  const auto dec = qmemtime::isolation_basis(ss, 2);
  for (ComplexPoint u : {ComplexPoint{1.0, 0.0}, ComplexPoint{0.3, 2.0}, ComplexPoint{-2.5, 1.1}}) {
    const auto full = qmemtime::full_noise_response(ss, dec.F, u);
    const auto tv = qmemtime::transfer_eval(dec, u);
    EXPECT_LT((full - tv.noise_map).norm(), 1e-8) << u.re << " + " << u.im << "i";
  }
}

TEST(Transfer, InvariantUnderComplementChoice) {
  const auto ss = reference_ss(7);
  const auto dec = qmemtime::isolation_basis(ss, 2);
  qmemtime::SeededRng rng(70);
  const RealMatrix q = RealMatrix::Identity(6, 6) + rng.matrix(6, 6, 0.3);
  const RealMatrix t_alt = q * dec.T + rng.matrix(6, 2) * dec.F;
  const auto alt = qmemtime::decompose(ss, dec.F, t_alt);
  for (ComplexPoint u : {ComplexPoint{0.7, 0.0}, ComplexPoint{-1.0, 3.0}}) {
    const auto x = qmemtime::transfer_eval(dec, u).noise_map;
    const auto y = qmemtime::transfer_eval(alt, u).noise_map;
    EXPECT_LT((x - y).norm(), 1e-10);
  }
}

TEST(Transfer, PoleIsReported) {
  // Closed oscillator: A = 2 Theta has eigenvalues +-i.
  const auto ss = qmemtime::realize(
      {RealMatrix::Identity(2, 2), RealMatrix::Zero(2, 2), RealMatrix::Identity(2, 2)},
      qmemtime::make_ccr(1, 2));
  RealMatrix f = RealMatrix::Zero(1, 2);
  f(0, 0) = 1.0;
  const auto dec = qmemtime::isolation_from_f(ss, f);
  // a22 is 1x1 and zero here, so u = 0 is a pole of Psi.
  EXPECT_EQ(kind_of([&] { qmemtime::transfer_eval(dec, {0.0, 0.0}); }), ErrorKind::kPole);
}

}  // namespace
