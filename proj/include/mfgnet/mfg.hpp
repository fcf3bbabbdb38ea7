#pragma once

#include <cstddef>
#include <map>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "mfgnet/grid.hpp"
#include "mfgnet/heat.hpp"

namespace mfgnet {

  /// Piecewise-linear arrival cost c_T(s) = c1 (s - t0)^+ + c2 (s - T)^+ + c3 (T - s)^+.
  struct CostSpec {
    double t0{0.5};
    double t_max{10.0};
    double lateness_scheduled{0.1};  // c1, reputation cost w.r.t. t0
    double lateness_actual{0.0};     // c2, lateness w.r.t. the actual start T
    double waiting{0.1};             // c3, time lost waiting for the start

    /// Throws NumericalError(InvalidArgument) on a violated invariant.
    void validate() const;
    bool operator==(const CostSpec&) const = default;
  };

  double cost(double s, double start_time, const CostSpec& spec);

  /// Discrete cumulative arrival distribution
  /// F(t_n) = dt / h_0 * sum_{k<=n} exp(c_T(t_k)) psi^k at the exit-adjacent node.
  std::vector<double> cumulative_flow(std::span<const double> exit_trace, const TimeFunction& cost_of_time,
                                      const SpatialGrid& grid, const TimeGrid& time);

  /// First grid time with F(t_n) > theta (strict), clamped to [t0, t_max];
  /// t_max when F never exceeds theta.
  double quorum_time(std::span<const double> flow, double theta, double t0, double t_max,
                     const TimeGrid& time);

  struct ProblemSpec {
    std::shared_ptr<const Network> network;
    CostSpec cost;
    double theta{0.5};
    /// Unnormalized initial density g; m0 = g / integral(g) on the grid.
    SpatialFunction initial_density;
    double h_target{0.1};
    double cfl_factor{0.25};
    double tolerance{1e-4};
    std::optional<double> start_guess;  // defaults to t_max
    std::size_t max_iters{50};
    unsigned threads{1};
    /// Quadrature for normalizing m0 and measuring the residual mass.
    Quadrature mass_rule{Quadrature::InteriorNodes};

    void validate() const;
  };

  /// One evaluation of the map T -> c_T -> phi -> psi -> T*.
  struct PsiEvaluation {
    double start_time{};  // the candidate T
    double quorum{};      // T*
    FieldSeries phi;
    FieldSeries psi;
    std::vector<double> flow;  // F(t_n), n = 0..N_max
  };

  struct LevelFields {
    GridField phi;
    GridField psi;
    GridField u;
    GridField m;
  };

  enum class FixedPointStatus { Converged, TwoCycle, MaxIters };
  const char* to_string(FixedPointStatus status);

  struct EquilibriumResult {
    double start_time{};                  // T_star
    std::vector<double> iterates;         // T_init followed by every Psi output
    std::size_t iterations{};             // number of Psi evaluations
    bool converged{false};
    FixedPointStatus status{FixedPointStatus::MaxIters};
    std::vector<double> flow;             // F series of the final evaluation
    std::size_t start_level{};            // N with T_star = N dt
    double residual_mass_error{};         // E_h
    std::map<std::size_t, LevelFields> fields;
    std::vector<std::string> diagnostics;
    std::shared_ptr<const SpatialGrid> grid;
    TimeGrid time;
  };

  /// Precomputes the grids and m0 for a problem, then evaluates the quorum
  /// map and its fixed point.
  class MfgSolver {
  public:
    explicit MfgSolver(ProblemSpec spec);

    const ProblemSpec& spec() const noexcept { return m_spec; }
    const std::shared_ptr<const SpatialGrid>& grid() const noexcept { return m_grid; }
    const TimeGrid& time() const noexcept { return m_time; }
    const GridField& initial_mass() const noexcept { return m_m0; }
    const std::vector<std::string>& warnings() const noexcept { return m_warnings; }

    TimeFunction cost_function(double start_time) const;

    PsiEvaluation psi_map(double start_time, const SweepOptions& phi_options = {},
                          const SweepOptions& psi_options = {}) const;

    /// Iterates T <- Psi(T) from the start guess. `snapshot_every` retains
    /// every k-th level of the final fields in addition to 0, N and N_max.
    EquilibriumResult fixed_point(std::size_t snapshot_every = 0) const;

  private:
    ProblemSpec m_spec;
    std::shared_ptr<const SpatialGrid> m_grid;
    TimeGrid m_time;
    GridField m_m0;
    std::vector<std::string> m_warnings;
  };

  inline EquilibriumResult fixed_point(const ProblemSpec& spec) {
    return MfgSolver(spec).fixed_point();
  }

  /// u = ln(phi), m = phi * psi nodewise. Throws NumericalError(NonpositivePhi).
  std::pair<GridField, GridField> recover_um(const GridField& phi, const GridField& psi);

  /// |1 - theta - integral(m)| with the scheme-conserved (interior node) mass.
  double residual_mass_error(const GridField& m, double theta,
                             Quadrature rule = Quadrature::InteriorNodes);

  /// Per-edge nodal values k = 0..M_j; unlike GridField the two endpoint
  /// entries are edge-local, so one-sided vertex derivatives fit.
  struct EdgeProfiles {
    std::vector<std::vector<double>> values;
  };

  /// a* = -d u / dy along each edge: centered differences at interior nodes,
  /// one-sided at the endpoints.
  EdgeProfiles drift_profile(const GridField& u);

  /// Drift a*(x, t) sampled at PDE levels: piecewise constant in time,
  /// linear in space between nodes.
  class DriftField {
  public:
    DriftField() = default;
    DriftField(std::shared_ptr<const SpatialGrid> grid, double level_dt,
               std::vector<std::size_t> levels, std::vector<EdgeProfiles> profiles);

    double at(EdgeId edge, double arc, double t) const;
    bool empty() const noexcept { return m_profiles.empty(); }

  private:
    std::shared_ptr<const SpatialGrid> m_grid;
    double m_level_dt{};
    std::vector<std::size_t> m_levels;
    std::vector<EdgeProfiles> m_profiles;
    std::size_t m_stride{};  // nonzero when levels are evenly spaced
  };

  /// Builds a DriftField of a* = -du/dy from u at a set of levels.
  DriftField drift_field(const std::map<std::size_t, GridField>& u_levels, double level_dt);

  /// Velocity 2 d/dy ln(phi) that transports m = phi * psi: with phi solving
  /// the backward and psi the forward heat equation (unit diffusion),
  /// m_t - m_yy + d/dy(2 (ln phi)_y m) = 0. Drives the Monte-Carlo oracle.
  DriftField population_velocity(const std::map<std::size_t, GridField>& phi_levels,
                                 double level_dt);

}  // namespace mfgnet
