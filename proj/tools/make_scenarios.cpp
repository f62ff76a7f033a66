// Writes the bundled scenario files: the seeded two-oscillator reference
// interconnection and a minimal closed single oscillator.
//
//   make_scenarios <out_dir> [seed]

#include <cstdint>
#include <cstdlib>
#include <iostream>
#include <string>

#include "qmemtime/cli/commands.hpp"
#include "qmemtime/reference.hpp"

int main(int argc, char** argv) {
  namespace qc = qmemtime::cli;
  if (argc < 2 || argc > 3) {
    std::cerr << "usage: make_scenarios <out_dir> [seed]\n";
    return 2;
  }
  const std::uint64_t seed = argc == 3 ? std::strtoull(argv[2], nullptr, 10) : 42;
  try {
    const qc::OutputDir out(argv[1]);

    qc::Scenario ref;
    ref.mode = "interconnection";
    ref.interconnection = qmemtime::reference_interconnection(seed);
    ref.P = 0.5 * qmemtime::RealMatrix::Identity(8, 8);
    ref.isolation.s = 2;
    ref.analysis.epsilon = 1e-5;
    ref.analysis.eps_grid = qc::kDefaultEpsGrid;
    ref.seed = seed;
    out.write_json("reference.json", qc::scenario_to_json(ref));

    qc::Scenario closed;
    closed.mode = "single";
    closed.single = qc::SingleOscillator{
        1, {qmemtime::RealMatrix::Identity(2, 2), qmemtime::RealMatrix::Zero(2, 2),
            qmemtime::RealMatrix::Identity(2, 2)}};
    out.write_json("single_closed.json", qc::scenario_to_json(closed));
  } catch (const qmemtime::Error& e) {
    std::cerr << e.what() << "\n";
    return 1;
  }
  return 0;
}
