#pragma once

#include <cstddef>
#include <functional>
#include <map>
#include <optional>
#include <vector>

#include "mfgnet/grid.hpp"

namespace mfgnet {

  /// Discrete Kirchhoff condition at one vertex, with continuity imposed.
  struct VertexStencil {
    struct Term {
      EdgeId edge{};
      int sign{};               // a_ij
      double step{};            // h_j
      std::size_t node{};       // packed interior index of the adjacent node
    };
    VertexId vertex{};
    std::vector<Term> terms;
    double total_weight{};      // sum_j 1 / h_j
  };

  /// Stencils for every vertex except the exit. With `include_exit` the exit
  /// vertex also gets one (a zero-flux, fully reflecting network).
  std::vector<VertexStencil> build_vertex_stencils(const SpatialGrid& grid,
                                                   bool include_exit = false);

  /// Replaces each stencil vertex value by the 1/h-weighted mean of the
  /// adjacent interior values, the unique solution of the discrete Kirchhoff
  /// equation under continuity.
  void solve_vertex_values(GridField& field, const std::vector<VertexStencil>& stencils);

  /// Residual sum_j a_ij * (one-sided difference along j) at a stencil vertex.
  double kirchhoff_residual(const GridField& field, const VertexStencil& stencil);

  /// One explicit step of the heat equation on the network. The same stencil
  /// serves the forward sweep (psi) and the backward sweep (phi).
  class HeatStepper {
  public:
    /// Throws NumericalError(CflViolation) if dt / h_j^2 > 1/2 on any edge.
    /// When `reflecting_exit` is set the exit is a Kirchhoff vertex too and
    /// `advance` must be called without an exit value.
    HeatStepper(std::shared_ptr<const SpatialGrid> grid, double dt, bool reflecting_exit = false);

    const SpatialGrid& grid() const noexcept { return *m_grid; }
    double dt() const noexcept { return m_dt; }
    const std::vector<VertexStencil>& stencils() const noexcept { return m_stencils; }

    /// Interior update of edges [edge_begin, edge_end) only.
    void update_interior(const GridField& from, GridField& to, EdgeId edge_begin,
                         EdgeId edge_end) const;
    /// Imposes the exit Dirichlet value (if any) and solves the vertex values.
    void close_level(GridField& to, std::optional<double> exit_value) const;

    /// (1) interior stencil, (2) exit Dirichlet, (3) Kirchhoff vertex solve.
    void advance(const GridField& from, GridField& to, std::optional<double> exit_value) const;

  private:
    std::shared_ptr<const SpatialGrid> m_grid;
    double m_dt;
    std::vector<double> m_ratio;  // dt / h_j^2
    std::vector<VertexStencil> m_stencils;
  };

  /// psi^{n+1} from psi^n with psi(v0) = 0.
  GridField step_forward(const GridField& psi, double dt);
  /// phi^n from phi^{n+1} with phi(v0) = exit_value.
  GridField step_backward(const GridField& phi_next, double dt, double exit_value);

  using LevelObserver = std::function<void(std::size_t level, const GridField& field)>;

  struct SweepOptions {
    /// Levels retained in the result besides the first and last.
    std::vector<std::size_t> keep_levels;
    /// Also retain every k-th level (0 disables).
    std::size_t keep_every{0};
    /// Called once per computed level, in sweep order.
    LevelObserver observer;
    /// Worker threads for the per-edge interior update.
    unsigned threads{1};
  };

  /// Retained levels of a sweep plus the values traced at the exit-adjacent
  /// node for every level and the extrema over all nodes and levels.
  struct FieldSeries {
    std::map<std::size_t, GridField> levels;
    std::vector<double> exit_trace;
    double min_value{0.0};
    double max_value{0.0};

    const GridField& at(std::size_t level) const;
    bool has(std::size_t level) const { return levels.contains(level); }
  };

  using TimeFunction = std::function<double(double)>;

  /// Backward sweep from phi^{N} = exp(c_T(T_max)) with phi(v0, t_n) = exp(c_T(t_n)).
  FieldSeries solve_backward_phi(std::shared_ptr<const SpatialGrid> grid, const TimeGrid& time,
                                 const TimeFunction& cost, const SweepOptions& options = {});

  /// Forward sweep from psi^0 = m0 / phi^0 with psi(v0) = 0. Throws
  /// NumericalError(NonpositivePhi) if phi^0 is not strictly positive.
  FieldSeries solve_forward_psi(std::shared_ptr<const SpatialGrid> grid, const TimeGrid& time,
                                const GridField& m0, const GridField& phi0,
                                const SweepOptions& options = {});

  /// Generic sweep: applies `stepper` n_steps times to `initial`, labelling
  /// the k-th computed level with level_of_step(k). exit_value(k) gives the
  /// Dirichlet value at the exit for the k-th computed level.
  FieldSeries run_sweep(const HeatStepper& stepper, GridField initial, std::size_t n_steps,
                        const std::function<std::size_t(std::size_t)>& level_of_step,
                        const std::function<std::optional<double>(std::size_t)>& exit_value,
                        const SweepOptions& options);

}  // namespace mfgnet
