#pragma once

// Seeded fixtures: random matrices and the reference two-oscillator
// interconnection (nu1 = nu2 = 2, m_k = r_k = 2, D_k = I2). The generator
// only uses the raw 64-bit output of mt19937_64, whose sequence is fixed by
// the standard, so fixtures are identical on every platform.

#include <cstdint>
#include <random>

#include "qmemtime/numerics.hpp"
#include "qmemtime/oqho_model.hpp"

namespace qmemtime {

class SeededRng {
 public:
  explicit SeededRng(std::uint64_t seed) : engine_(seed) {}

  /// Uniform on [0, 1).
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }
  /// Uniform on [-1, 1).
  double symmetric() { return 2.0 * uniform() - 1.0; }

  RealMatrix matrix(Eigen::Index rows, Eigen::Index cols, double scale = 1.0) {
    RealMatrix m(rows, cols);
    for (Eigen::Index j = 0; j < cols; ++j) {
      for (Eigen::Index i = 0; i < rows; ++i) m(i, j) = scale * symmetric();
    }
    return m;
  }

  RealMatrix symmetric_matrix(Eigen::Index order, double scale = 1.0) {
    const RealMatrix g = matrix(order, order, scale);
    return 0.5 * (g + g.transpose());
  }

 private:
  std::mt19937_64 engine_;
};

/// Reference interconnection: R_k = I + 0.3 sym(U), M_k and N_k with entries in
/// [-0.5, 0.5), R12 = 0.
inline InterconnectionSpec reference_interconnection(std::uint64_t seed) {
  SeededRng rng(seed);
  InterconnectionSpec spec;
  for (auto& o : spec.osc) {
    o.nu = 2;
    o.m = 2;
    o.R = RealMatrix::Identity(4, 4) + rng.symmetric_matrix(4, 0.3);
    o.M = rng.matrix(2, 4, 0.5);
    o.D = RealMatrix::Identity(2, 2);
    o.N = rng.matrix(2, 4, 0.5);
  }
  spec.R12 = RealMatrix::Zero(4, 4);
  return spec;
}

}  // namespace qmemtime
