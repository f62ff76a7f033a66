#include <gtest/gtest.h>

#include <cmath>

#include "qmemtime/decoherence.hpp"
#include "qmemtime/isolation.hpp"
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

struct System {
  qmemtime::StateSpace ss;
  qmemtime::DeviationSpec dev;
};

System reference(std::uint64_t seed) {
  System s;
  s.ss = qmemtime::compose(qmemtime::reference_interconnection(seed)).ss;
  const auto dec = qmemtime::isolation_basis(s.ss, 2);
  s.dev = qmemtime::deviation_spec(dec.F, 0.5 * RealMatrix::Identity(8, 8), s.ss.ccr.theta);
  return s;
}

System control(std::uint64_t seed) {
  System s;
  s.ss = qmemtime::compose(qmemtime::reference_interconnection(seed)).ss;
  RealMatrix f = RealMatrix::Zero(2, 8);
  f(0, 0) = 1.0;
  f(1, 1) = 1.0;
  s.dev = qmemtime::deviation_spec(f, 0.5 * RealMatrix::Identity(8, 8), s.ss.ccr.theta);
  return s;
}

System closed_oscillator() {
  System s;
  s.ss = qmemtime::realize(
      {RealMatrix::Identity(2, 2), RealMatrix::Zero(2, 2), RealMatrix::Identity(2, 2)},
      qmemtime::make_ccr(1, 2));
  RealMatrix f(1, 2);
  f << 1.0, 0.0;
  s.dev = qmemtime::deviation_spec(f, 0.5 * RealMatrix::Identity(2, 2), s.ss.ccr.theta);
  return s;
}

TEST(Approx, Arithmetic) {
  qmemtime::DeviationSpec dev;
  dev.F = RealMatrix::Zero(1, 2);
  dev.F(0, 0) = 1.0;
  dev.P = RealMatrix::Identity(2, 2);
  dev.sqrtP = dev.P;
  dev.ref_scale = 1.0;
  RealMatrix g = RealMatrix::Zero(1, 2);
  g(0, 0) = 2.0;
  EXPECT_NEAR(qmemtime::approx_decoherence_time(dev, g, 0.01), 0.05, 1e-16);
  EXPECT_NEAR(qmemtime::approx_decoherence_time(dev, g, 0.04),
              2.0 * qmemtime::approx_decoherence_time(dev, g, 0.01), 1e-16);
  EXPECT_EQ(kind_of([&] { qmemtime::approx_decoherence_time(dev, 0.0 * g, 0.01); }),
            ErrorKind::kInapplicableAsymptote);
  EXPECT_EQ(kind_of([&] { qmemtime::approx_decoherence_time(dev, g, 0.0); }), ErrorKind::kDomain);
}

TEST(TailBound, Examples) {
  EXPECT_EQ(qmemtime::tail_bound(0.0, 1.0), 0.0);
  EXPECT_DOUBLE_EQ(qmemtime::tail_bound(0.2, 0.5), 0.4);
  EXPECT_EQ(kind_of([] { qmemtime::tail_bound(1.0, 1.0); }), ErrorKind::kPrecondition);
  EXPECT_EQ(kind_of([] { qmemtime::tail_bound(-0.1, 1.0); }), ErrorKind::kPrecondition);
}

TEST(DecoherenceTime, StaticSystemNeverCrosses) {
  System s;
  s.ss = qmemtime::realize(
      {RealMatrix::Zero(2, 2), RealMatrix::Zero(2, 2), RealMatrix::Identity(2, 2)},
      qmemtime::make_ccr(1, 2));
  RealMatrix f(1, 2);
  f << 1.0, 0.0;
  s.dev = qmemtime::deviation_spec(f, 0.5 * RealMatrix::Identity(2, 2), s.ss.ccr.theta);
  const auto rep = qmemtime::decoherence_time(s.ss, s.dev, 0.1);
  EXPECT_FALSE(rep.tau.has_value());
  EXPECT_TRUE(rep.no_crossing);
  EXPECT_FALSE(rep.tau_hat.has_value());
  EXPECT_EQ(rep.t_max, 1.0);
}

TEST(DecoherenceTime, ThresholdAboveBoundedDeviation) {
  // Delta(t) = 1 - cos t <= 2 = 4 ref_scale.
  const auto s = closed_oscillator();
  const auto rep = qmemtime::decoherence_time(s.ss, s.dev, 5.0);
  EXPECT_TRUE(rep.no_crossing);
  EXPECT_FALSE(rep.tau.has_value());
}

TEST(DecoherenceTime, ClosedFormCrossing) {
  // 1 - cos tau = eps / 2.
  const auto s = closed_oscillator();
  const double eps = 0.1;
  const auto rep = qmemtime::decoherence_time(s.ss, s.dev, eps);
  ASSERT_TRUE(rep.tau.has_value());
  EXPECT_NEAR(*rep.tau, std::acos(1.0 - eps / 2.0), 1e-8);
  EXPECT_FALSE(rep.near_tangent);
}

TEST(DecoherenceTime, DeltaAtTauEqualsThreshold) {
  const auto s = reference(42);
  const auto rep = qmemtime::decoherence_time(s.ss, s.dev, 0.1);
  ASSERT_TRUE(rep.tau.has_value());
  const double d = qmemtime::deviation_at(s.ss, s.dev, *rep.tau);
  EXPECT_NEAR(d, rep.threshold, 1e-6 * rep.threshold);
  ASSERT_TRUE(rep.crossing_bracket.has_value());
  EXPECT_LE(qmemtime::deviation_at(s.ss, s.dev, rep.crossing_bracket->first), rep.threshold);
  EXPECT_GT(qmemtime::deviation_at(s.ss, s.dev, rep.crossing_bracket->second), rep.threshold);
}

TEST(DecoherenceTime, AsymptoteRatio) {
  for (std::uint64_t seed : {1u, 42u}) {
    const auto s = reference(seed);
    const auto rep = qmemtime::decoherence_time(s.ss, s.dev, 1e-5);
    ASSERT_TRUE(rep.ratio.has_value());
    EXPECT_GE(*rep.ratio, 0.95);
    EXPECT_LE(*rep.ratio, 1.05);
  }
}

TEST(DecoherenceTime, RejectsBadEpsilon) {
  const auto s = closed_oscillator();
  EXPECT_EQ(kind_of([&] { qmemtime::decoherence_time(s.ss, s.dev, -1.0); }), ErrorKind::kDomain);
}

TEST(Sweep, SquareRootLaw) {
  const auto s = reference(42);
  const auto sw = qmemtime::epsilon_sweep(s.ss, s.dev, {1e-2, 1e-3, 1e-4, 1e-5});
  ASSERT_TRUE(sw.slope.has_value());
  EXPECT_NEAR(*sw.slope, 0.5, 0.03);
  for (std::size_t i = 1; i < sw.reports.size(); ++i) {
    EXPECT_LE(*sw.reports[i].tau, *sw.reports[i - 1].tau);
  }
}

TEST(Sweep, ControlIsLinear) {
  const auto s = control(42);
  const auto sw = qmemtime::epsilon_sweep(s.ss, s.dev, {1e-2, 1e-3, 1e-4, 1e-5});
  ASSERT_TRUE(sw.slope.has_value());
  EXPECT_NEAR(*sw.slope, 1.0, 0.05);
}

TEST(Sweep, ThreadCountDoesNotChangeResults) {
  const auto s = reference(3);
  const std::vector<double> eps{1e-2, 3e-3, 1e-3, 3e-4, 1e-4};
  const auto serial = qmemtime::epsilon_sweep(s.ss, s.dev, eps, {}, 1);
  const auto parallel = qmemtime::epsilon_sweep(s.ss, s.dev, eps, {}, 4);
  ASSERT_EQ(serial.reports.size(), parallel.reports.size());
  for (std::size_t i = 0; i < eps.size(); ++i) {
    EXPECT_EQ(serial.reports[i].epsilon, eps[i]);
    EXPECT_EQ(*serial.reports[i].tau, *parallel.reports[i].tau);
  }
  EXPECT_EQ(*serial.slope, *parallel.slope);
}

}  // namespace
