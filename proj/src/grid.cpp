#include "mfgnet/grid.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>

#include "mfgnet/errors.hpp"

namespace mfgnet {

  std::shared_ptr<const SpatialGrid> SpatialGrid::build(std::shared_ptr<const Network> network,
                                                        double h_target) {
    if (!network) throw NumericalError(NumericalErrc::InvalidArgument, "null network");
    if (!(h_target > 0.0)) {
      throw NumericalError(NumericalErrc::InvalidArgument, "h_target must be positive");
    }
    double min_len = network->edges().front().length;
    for (const auto& e : network->edges()) min_len = std::min(min_len, e.length);
    if (h_target > min_len / 2.0) {
      throw NumericalError(NumericalErrc::StepTooCoarse,
                           "h_target " + std::to_string(h_target) +
                               " exceeds half of the shortest edge (" + std::to_string(min_len) +
                               ")");
    }

    auto grid = std::make_shared<SpatialGrid>();
    grid->m_network = std::move(network);
    grid->m_h_target = h_target;
    const auto& edges = grid->m_network->edges();
    grid->m_offsets.push_back(0);
    grid->m_min_step = edges.front().length;
    for (const auto& e : edges) {
      const auto cells = std::max<std::size_t>(2, std::llround(e.length / h_target));
      const double h = e.length / static_cast<double>(cells);
      grid->m_cells.push_back(cells);
      grid->m_steps.push_back(h);
      grid->m_offsets.push_back(grid->m_offsets.back() + cells - 1);
      grid->m_min_step = std::min(grid->m_min_step, h);
    }
    return grid;
  }

  std::size_t SpatialGrid::adjacent_node(VertexId i, EdgeId j) const {
    const auto sign = m_network->incidence_sign(i, j);
    if (sign == 0) {
      throw NumericalError(NumericalErrc::InvalidArgument,
                           "edge " + std::to_string(j) + " is not incident to vertex " +
                               std::to_string(i));
    }
    return sign > 0 ? 1 : m_cells[j] - 1;
  }

  Point2 SpatialGrid::node_position(EdgeId j, std::size_t k) const {
    return m_network->position(j, static_cast<double>(k) * m_steps.at(j));
  }

  std::size_t TimeGrid::level_of(double t) const noexcept {
    if (t <= 0.0) return 0;
    const auto n = static_cast<std::size_t>(std::llround(t / dt));
    return std::min(n, n_steps);
  }

  TimeGrid build_time_grid(double t_max, double h_min, double cfl_factor) {
    if (!(cfl_factor > 0.0 && cfl_factor < 1.0)) {
      throw NumericalError(NumericalErrc::InvalidArgument, "cfl_factor must lie in (0, 1)");
    }
    if (!(t_max > 0.0) || !(h_min > 0.0)) {
      throw NumericalError(NumericalErrc::InvalidArgument, "t_max and h_min must be positive");
    }
    const double dt0 = cfl_factor * h_min * h_min;
    // the relative slack keeps exact ratios such as 10 / 2.5e-3 from rounding up
    const auto n = static_cast<std::size_t>(std::ceil(t_max / dt0 * (1.0 - 1e-12)));
    TimeGrid tg;
    tg.n_steps = std::max<std::size_t>(1, n);
    tg.dt = t_max / static_cast<double>(tg.n_steps);
    tg.t_max = t_max;
    return tg;
  }

  GridField::GridField(std::shared_ptr<const SpatialGrid> grid, double fill)
      : m_grid(std::move(grid)),
        m_interior(m_grid->n_interior(), fill),
        m_vertex(m_grid->network().n_vertices(), fill) {}

  double GridField::at(EdgeId j, std::size_t k) const {
    const auto& e = m_grid->network().edge(j);
    if (k == 0) return m_vertex[e.tail];
    if (k == m_grid->cells(j)) return m_vertex[e.head];
    return m_interior.at(m_grid->interior_offset(j) + k - 1);
  }

  void GridField::set(EdgeId j, std::size_t k, double value) {
    const auto& e = m_grid->network().edge(j);
    if (k == 0) {
      m_vertex[e.tail] = value;
    } else if (k == m_grid->cells(j)) {
      m_vertex[e.head] = value;
    } else {
      m_interior.at(m_grid->interior_offset(j) + k - 1) = value;
    }
  }

  std::span<double> GridField::edge_interior(EdgeId j) {
    return std::span<double>(m_interior).subspan(m_grid->interior_offset(j),
                                                 m_grid->interior_count(j));
  }

  std::span<const double> GridField::edge_interior(EdgeId j) const {
    return std::span<const double>(m_interior)
        .subspan(m_grid->interior_offset(j), m_grid->interior_count(j));
  }

  double GridField::min() const {
    double lo = *std::min_element(m_vertex.begin(), m_vertex.end());
    if (!m_interior.empty()) lo = std::min(lo, *std::min_element(m_interior.begin(), m_interior.end()));
    return lo;
  }

  double GridField::max() const {
    double hi = *std::max_element(m_vertex.begin(), m_vertex.end());
    if (!m_interior.empty()) hi = std::max(hi, *std::max_element(m_interior.begin(), m_interior.end()));
    return hi;
  }

  GridField sample_function(std::shared_ptr<const SpatialGrid> grid, const SpatialFunction& f) {
    GridField out(grid);
    const auto& net = grid->network();
    for (EdgeId j = 0; j < net.n_edges(); ++j) {
      auto values = out.edge_interior(j);
      for (std::size_t k = 1; k < grid->cells(j); ++k) {
        const double arc = static_cast<double>(k) * grid->step(j);
        values[k - 1] = f(NetworkPoint{j, arc, net.position(j, arc)});
      }
    }
    for (VertexId i = 0; i < net.n_vertices(); ++i) {
      const EdgeId j = net.incident_edges(i).front();
      const double arc = net.incidence_sign(i, j) > 0 ? 0.0 : net.edge(j).length;
      out.vertices()[i] = f(NetworkPoint{j, arc, net.vertex(i).position});
    }
    return out;
  }

  double integrate(const GridField& field, Quadrature rule) {
    const auto& grid = field.grid();
    const auto& net = grid.network();
    double total = 0.0;
    for (EdgeId j = 0; j < net.n_edges(); ++j) {
      double edge_sum =
          rule == Quadrature::LeftRectangle ? field.vertices()[net.edge(j).tail] : 0.0;
      for (double v : field.edge_interior(j)) edge_sum += v;
      total += edge_sum * grid.step(j);
    }
    return total;
  }

  GridField normalize_mass(const GridField& g, std::vector<std::string>* warnings,
                           Quadrature rule) {
    if (g.min() < 0.0) {
      throw NumericalError(NumericalErrc::InvalidArgument, "initial mass must be nonnegative");
    }
    const double mass = integrate(g, rule);
    if (!(mass > 0.0)) throw NumericalError(NumericalErrc::ZeroMass, "initial mass integrates to 0");
    GridField m0 = g;
    for (double& v : m0.interior()) v /= mass;
    for (double& v : m0.vertices()) v /= mass;
    const VertexId exit = g.grid().network().exit_vertex();
    if (warnings && std::abs(m0.vertices()[exit]) > 1e-8) {
      warnings->push_back("initial density at the exit vertex was " +
                          std::to_string(m0.vertices()[exit]) + ", projected to 0");
    }
    m0.vertices()[exit] = 0.0;
    return m0;
  }

  void write_csv(std::ostream& os, const GridField& field) {
    const auto& grid = field.grid();
    const auto& net = grid.network();
    const auto old_precision = os.precision(17);
    os << "edge_id,k,x_coord_1,x_coord_2,value\n";
    for (EdgeId j = 0; j < net.n_edges(); ++j) {
      for (std::size_t k = 0; k <= grid.cells(j); ++k) {
        const Point2 p = grid.node_position(j, k);
        os << j << ',' << k << ',' << p.x << ',' << p.y << ',' << field.at(j, k) << '\n';
      }
    }
    os.precision(old_precision);
  }

}  // namespace mfgnet
