#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>

#include "mfgnet/config.hpp"
#include "mfgnet/mfg.hpp"
#include "mfgnet/montecarlo.hpp"

namespace mfgnet {

  enum ExitCode : int {
    ExitOk = 0,
    ExitValidation = 2,
    ExitNumerical = 3,
    ExitNotConverged = 4,
  };

  struct RunOptions {
    unsigned threads{1};
    /// Progress lines; null for silence.
    std::ostream* log{nullptr};
  };

  struct OracleResult {
    EquilibriumResult equilibrium;
    /// F of the PDE at the reported T_star, on the PDE time grid.
    std::vector<double> pde_flow;
    ArrivalCdf mc;
    SimConfig sim;
    double sup_distance{};
  };

  /// Fixed point of the configured problem at mesh size `h`.
  EquilibriumResult solve(const RunConfig& config, double h, const RunOptions& options = {});

  /// Solves, then simulates agents driven by the equilibrium velocity and
  /// compares their arrival CDF with the PDE flow on the PDE time grid.
  OracleResult run_oracle(const RunConfig& config, const RunOptions& options = {});

  /// Runs the configured mode and writes its artifacts under
  /// config.run.output_dir. Configuration and numerical errors propagate.
  ExitCode run(const RunConfig& config, const RunOptions& options = {});

  /// Threads requested through MFGNET_THREADS (1 when unset).
  /// Throws ValidationError on a malformed value.
  unsigned threads_from_environment();

}  // namespace mfgnet
