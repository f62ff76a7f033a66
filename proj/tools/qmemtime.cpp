#include <algorithm>
#include <cstdlib>
#include <iostream>
#include <optional>
#include <string>
#include <thread>

#include "CLI11.hpp"
#include "qmemtime/cli/commands.hpp"

namespace {

// Worker count for the epsilon sweep: hardware concurrency, capped by
// QMEMTIME_THREADS when set. Returns nullopt for an unusable value.
std::optional<unsigned> thread_budget() {
  const unsigned hw = std::max(1u, std::thread::hardware_concurrency());
  const char* env = std::getenv("QMEMTIME_THREADS");
  if (env == nullptr || *env == '\0') return hw;
  char* end = nullptr;
  const long cap = std::strtol(env, &end, 10);
  if (*end != '\0' || cap < 1) return std::nullopt;
  return std::min<unsigned>(hw, static_cast<unsigned>(cap));
}

}  // namespace

int main(int argc, char** argv) {
  namespace qc = qmemtime::cli;
  CLI::App app{"qmemtime: memory decoherence analysis for open quantum harmonic oscillators"};
  app.require_subcommand(1, 1);

  std::string scenario;
  std::string out_dir;
  std::optional<double> epsilon;
  std::optional<double> t_max;
  std::optional<std::size_t> grid;
  bool allow_unphysical = false;
  for (const auto& name : qc::kCommands) {
    auto* sub = app.add_subcommand(name);
    sub->add_option("--scenario", scenario, "scenario JSON file")->required();
    sub->add_option("--out", out_dir, "output directory")->required();
    sub->add_option("--epsilon", epsilon, "fidelity level epsilon");
    sub->add_option("--t-max", t_max, "time horizon");
    sub->add_option("--grid", grid, "number of grid points");
    sub->add_flag("--allow-unphysical-P", allow_unphysical,
                  "accept P with P + i Theta not positive semi-definite");
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << qc::error_json("usage", e.what(), {}, qmemtime::exit_code::kValidation).dump()
              << "\n";
    return qmemtime::exit_code::kValidation;
  }

  const auto threads = thread_budget();
  if (!threads) {
    std::cerr << qc::error_json("validation", "QMEMTIME_THREADS must be a positive integer", {},
                                qmemtime::exit_code::kValidation)
                     .dump()
              << "\n";
    return qmemtime::exit_code::kValidation;
  }
  qc::Overrides ov;
  ov.epsilon = epsilon;
  ov.t_max = t_max;
  ov.grid_points = grid;
  ov.allow_unphysical_P = allow_unphysical;
  ov.threads = *threads;
  return qc::run(app.get_subcommands().front()->get_name(), scenario, out_dir, ov, std::cerr);
}
