#pragma once

#include <cstddef>
#include <functional>
#include <iosfwd>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "mfgnet/network.hpp"

namespace mfgnet {

  /// Uniform partition of every edge: M_j cells of width h_j = l_j / M_j.
  /// Node k = 0 is the tail vertex and k = M_j the head vertex; only the
  /// interior nodes k = 1..M_j-1 are stored per edge.
  class SpatialGrid {
  public:
    /// M_j = max(2, round(l_j / h_target)). Throws NumericalError(StepTooCoarse)
    /// when h_target exceeds half of the shortest edge.
    static std::shared_ptr<const SpatialGrid> build(std::shared_ptr<const Network> network,
                                                    double h_target);

    const Network& network() const noexcept { return *m_network; }
    const std::shared_ptr<const Network>& network_ptr() const noexcept { return m_network; }

    std::size_t cells(EdgeId j) const { return m_cells.at(j); }
    double step(EdgeId j) const { return m_steps.at(j); }
    double min_step() const noexcept { return m_min_step; }
    double h_target() const noexcept { return m_h_target; }

    /// Offset of node (j, 1) in the packed interior array.
    std::size_t interior_offset(EdgeId j) const { return m_offsets.at(j); }
    std::size_t interior_count(EdgeId j) const { return m_cells.at(j) - 1; }
    std::size_t n_interior() const noexcept { return m_offsets.back(); }

    /// Index of the interior node adjacent to vertex `i` along edge `j`
    /// (k = 1 if j starts at i, k = M_j - 1 if it ends there).
    std::size_t adjacent_node(VertexId i, EdgeId j) const;

    Point2 node_position(EdgeId j, std::size_t k) const;

  private:
    std::shared_ptr<const Network> m_network;
    std::vector<std::size_t> m_cells;
    std::vector<double> m_steps;
    std::vector<std::size_t> m_offsets;  // n_edges + 1 entries
    double m_min_step{};
    double m_h_target{};
  };

  /// Uniform time grid t_n = n * dt, n = 0..n_steps, with n_steps * dt = t_max.
  struct TimeGrid {
    double dt{};
    std::size_t n_steps{};
    double t_max{};

    double time(std::size_t n) const noexcept { return n == n_steps ? t_max : n * dt; }
    /// Nearest level to time t, clamped to [0, n_steps].
    std::size_t level_of(double t) const noexcept;
  };

  /// dt0 = cfl_factor * h_min^2, n_steps = ceil(t_max / dt0), dt = t_max / n_steps.
  TimeGrid build_time_grid(double t_max, double h_min, double cfl_factor);

  /// One value per interior node and one per vertex, at a single time level.
  /// Continuity at vertices is structural: (j, 0) and (j, M_j) read the
  /// shared vertex value.
  class GridField {
  public:
    GridField() = default;
    explicit GridField(std::shared_ptr<const SpatialGrid> grid, double fill = 0.0);

    const SpatialGrid& grid() const noexcept { return *m_grid; }
    const std::shared_ptr<const SpatialGrid>& grid_ptr() const noexcept { return m_grid; }

    double at(EdgeId j, std::size_t k) const;
    void set(EdgeId j, std::size_t k, double value);

    std::span<double> interior() noexcept { return m_interior; }
    std::span<const double> interior() const noexcept { return m_interior; }
    std::span<double> edge_interior(EdgeId j);
    std::span<const double> edge_interior(EdgeId j) const;
    std::span<double> vertices() noexcept { return m_vertex; }
    std::span<const double> vertices() const noexcept { return m_vertex; }

    std::size_t level{0};

    double min() const;
    double max() const;

  private:
    std::shared_ptr<const SpatialGrid> m_grid;
    std::vector<double> m_interior;
    std::vector<double> m_vertex;
  };

  /// A point of the network seen from one edge.
  struct NetworkPoint {
    EdgeId edge{};
    double arc{};
    Point2 position{};
  };

  using SpatialFunction = std::function<double(const NetworkPoint&)>;

  /// Pointwise evaluation at every interior node and every vertex. Vertices
  /// are evaluated from their lowest-id incident edge.
  GridField sample_function(std::shared_ptr<const SpatialGrid> grid, const SpatialFunction& f);

  enum class Quadrature {
    /// sum_j sum_{k=0}^{M_j-1} f_{j,k} h_j; exact for constants.
    LeftRectangle,
    /// sum_j sum_{k=1}^{M_j-1} f_{j,k} h_j. Vertex values are algebraic
    /// (Kirchhoff averages) and carry no mass, so this is the quantity the
    /// explicit scheme conserves up to the exit flux.
    InteriorNodes,
  };

  double integrate(const GridField& field, Quadrature rule = Quadrature::LeftRectangle);

  /// g / integrate(g, rule) with the exit value projected to zero. Throws
  /// NumericalError(ZeroMass) when g has no positive mass. A warning is
  /// appended when the exit value was noticeably nonzero before projection.
  GridField normalize_mass(const GridField& g, std::vector<std::string>* warnings = nullptr,
                           Quadrature rule = Quadrature::LeftRectangle);

  /// CSV with header edge_id,k,x_coord_1,x_coord_2,value; every edge lists
  /// k = 0..M_j so vertex values repeat once per incident edge.
  void write_csv(std::ostream& os, const GridField& field);

}  // namespace mfgnet
