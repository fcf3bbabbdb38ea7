#include "mfgnet/heat.hpp"

#include <algorithm>
#include <atomic>
#include <barrier>
#include <cmath>
#include <exception>
#include <set>
#include <thread>

#include "mfgnet/errors.hpp"

namespace mfgnet {

  std::vector<VertexStencil> build_vertex_stencils(const SpatialGrid& grid, bool include_exit) {
    const auto& net = grid.network();
    std::vector<VertexStencil> out;
    for (VertexId i = 0; i < net.n_vertices(); ++i) {
      if (i == net.exit_vertex() && !include_exit) continue;
      VertexStencil s;
      s.vertex = i;
      for (EdgeId j : net.incident_edges(i)) {
        const std::size_t k = grid.adjacent_node(i, j);
        s.terms.push_back({j, net.incidence_sign(i, j), grid.step(j),
                           grid.interior_offset(j) + k - 1});
        s.total_weight += 1.0 / grid.step(j);
      }
      out.push_back(std::move(s));
    }
    return out;
  }

  void solve_vertex_values(GridField& field, const std::vector<VertexStencil>& stencils) {
    const auto interior = field.interior();
    auto vertices = field.vertices();
    for (const auto& s : stencils) {
      double acc = 0.0;
      for (const auto& t : s.terms) acc += interior[t.node] / t.step;
      vertices[s.vertex] = acc / s.total_weight;
    }
  }

  double kirchhoff_residual(const GridField& field, const VertexStencil& stencil) {
    const double v = field.vertices()[stencil.vertex];
    double plus = 0.0;
    double minus = 0.0;
    for (const auto& t : stencil.terms) {
      const double adj = field.interior()[t.node];
      if (t.sign > 0) {
        plus += (adj - v) / t.step;
      } else {
        minus += (v - adj) / t.step;
      }
    }
    return plus - minus;
  }

  HeatStepper::HeatStepper(std::shared_ptr<const SpatialGrid> grid, double dt, bool reflecting_exit)
      : m_grid(std::move(grid)), m_dt(dt) {
    const auto& net = m_grid->network();
    for (EdgeId j = 0; j < net.n_edges(); ++j) {
      const double h = m_grid->step(j);
      const double r = dt / (h * h);
      if (r > 0.5) {
        throw NumericalError(NumericalErrc::CflViolation,
                             "dt / h^2 = " + std::to_string(r) + " > 1/2 on edge " +
                                 std::to_string(j));
      }
      m_ratio.push_back(r);
    }
    m_stencils = build_vertex_stencils(*m_grid, reflecting_exit);
  }

  void HeatStepper::update_interior(const GridField& from, GridField& to, EdgeId edge_begin,
                                    EdgeId edge_end) const {
    const auto& net = m_grid->network();
    const auto vin = from.vertices();
    for (EdgeId j = edge_begin; j < edge_end; ++j) {
      const auto& e = net.edge(j);
      const auto src = from.edge_interior(j);
      auto dst = to.edge_interior(j);
      const double r = m_ratio[j];
      const std::size_t n = src.size();
      const double left = vin[e.tail];
      const double right = vin[e.head];
      if (n == 1) {
        dst[0] = src[0] + r * (right - 2.0 * src[0] + left);
        continue;
      }
      dst[0] = src[0] + r * (src[1] - 2.0 * src[0] + left);
      for (std::size_t k = 1; k + 1 < n; ++k) {
        dst[k] = src[k] + r * (src[k + 1] - 2.0 * src[k] + src[k - 1]);
      }
      dst[n - 1] = src[n - 1] + r * (right - 2.0 * src[n - 1] + src[n - 2]);
    }
  }

  void HeatStepper::close_level(GridField& to, std::optional<double> exit_value) const {
    if (exit_value) to.vertices()[m_grid->network().exit_vertex()] = *exit_value;
    solve_vertex_values(to, m_stencils);
  }

  void HeatStepper::advance(const GridField& from, GridField& to,
                            std::optional<double> exit_value) const {
    update_interior(from, to, 0, m_grid->network().n_edges());
    close_level(to, exit_value);
  }

  GridField step_forward(const GridField& psi, double dt) {
    const HeatStepper stepper(psi.grid_ptr(), dt);
    GridField next = psi;
    stepper.advance(psi, next, 0.0);
    next.level = psi.level + 1;
    return next;
  }

  GridField step_backward(const GridField& phi_next, double dt, double exit_value) {
    const HeatStepper stepper(phi_next.grid_ptr(), dt);
    GridField prev = phi_next;
    stepper.advance(phi_next, prev, exit_value);
    prev.level = phi_next.level > 0 ? phi_next.level - 1 : 0;
    return prev;
  }

  const GridField& FieldSeries::at(std::size_t level) const {
    const auto it = levels.find(level);
    if (it == levels.end()) {
      throw NumericalError(NumericalErrc::InvalidArgument,
                           "level " + std::to_string(level) + " was not retained");
    }
    return it->second;
  }

  namespace {
    // Contiguous edge ranges with roughly equal interior node counts.
    std::vector<EdgeId> partition_edges(const SpatialGrid& grid, unsigned parts) {
      const std::size_t n_edges = grid.network().n_edges();
      std::vector<EdgeId> bounds{0};
      const double per_part = static_cast<double>(grid.n_interior()) / parts;
      std::size_t acc = 0;
      for (EdgeId j = 0; j < n_edges && bounds.size() < parts; ++j) {
        acc += grid.interior_count(j);
        if (static_cast<double>(acc) >= per_part * static_cast<double>(bounds.size())) {
          bounds.push_back(j + 1);
        }
      }
      while (bounds.size() <= parts) bounds.push_back(n_edges);
      bounds.back() = n_edges;
      return bounds;
    }
  }  // namespace

  FieldSeries run_sweep(const HeatStepper& stepper, GridField initial, std::size_t n_steps,
                        const std::function<std::size_t(std::size_t)>& level_of_step,
                        const std::function<std::optional<double>(std::size_t)>& exit_value,
                        const SweepOptions& options) {
    const auto& grid = stepper.grid();
    const auto& net = grid.network();
    const EdgeId exit_edge = net.exit_edge();
    const std::size_t exit_node =
        grid.interior_offset(exit_edge) + grid.adjacent_node(net.exit_vertex(), exit_edge) - 1;

    std::set<std::size_t> keep(options.keep_levels.begin(), options.keep_levels.end());
    keep.insert(level_of_step(0));
    keep.insert(level_of_step(n_steps));

    FieldSeries out;
    out.exit_trace.assign(n_steps + 1, 0.0);
    out.min_value = initial.min();
    out.max_value = initial.max();

    auto record = [&](const GridField& f) {
      out.exit_trace.at(f.level) = f.interior()[exit_node];
      out.min_value = std::min(out.min_value, f.min());
      out.max_value = std::max(out.max_value, f.max());
      if (keep.contains(f.level) || (options.keep_every > 0 && f.level % options.keep_every == 0)) {
        out.levels.insert_or_assign(f.level, f);
      }
      if (options.observer) options.observer(f.level, f);
    };

    GridField a = std::move(initial);
    a.level = level_of_step(0);
    record(a);
    GridField b = a;
    GridField* cur = &a;
    GridField* next = &b;

    const unsigned threads =
        std::clamp<unsigned>(options.threads, 1, static_cast<unsigned>(net.n_edges()));
    if (threads == 1) {
      for (std::size_t step = 1; step <= n_steps; ++step) {
        stepper.advance(*cur, *next, exit_value(step));
        next->level = level_of_step(step);
        record(*next);
        std::swap(cur, next);
      }
      return out;
    }

    const auto bounds = partition_edges(grid, threads);
    std::size_t step = 1;
    std::atomic<bool> abort{false};
    std::exception_ptr error;
    auto on_level = [&]() noexcept {
      try {
        stepper.close_level(*next, exit_value(step));
        next->level = level_of_step(step);
        record(*next);
        std::swap(cur, next);
        ++step;
      } catch (...) {
        error = std::current_exception();
        abort = true;
      }
    };
    std::barrier sync(static_cast<std::ptrdiff_t>(threads), on_level);
    auto worker = [&](unsigned t) {
      for (std::size_t s = 1; s <= n_steps && !abort; ++s) {
        stepper.update_interior(*cur, *next, bounds[t], bounds[t + 1]);
        sync.arrive_and_wait();
      }
    };
    {
      std::vector<std::jthread> pool;
      for (unsigned t = 1; t < threads; ++t) pool.emplace_back(worker, t);
      worker(0);
    }
    if (error) std::rethrow_exception(error);
    return out;
  }

  FieldSeries solve_backward_phi(std::shared_ptr<const SpatialGrid> grid, const TimeGrid& time,
                                 const TimeFunction& cost, const SweepOptions& options) {
    const HeatStepper stepper(grid, time.dt);
    const std::size_t n_max = time.n_steps;
    GridField terminal(grid, std::exp(cost(time.t_max)));
    return run_sweep(
        stepper, std::move(terminal), n_max, [n_max](std::size_t s) { return n_max - s; },
        [&](std::size_t s) -> std::optional<double> {
          return std::exp(cost(time.time(n_max - s)));
        },
        options);
  }

  FieldSeries solve_forward_psi(std::shared_ptr<const SpatialGrid> grid, const TimeGrid& time,
                                const GridField& m0, const GridField& phi0,
                                const SweepOptions& options) {
    if (!(phi0.min() > 0.0)) {
      throw NumericalError(NumericalErrc::NonpositivePhi,
                           "phi^0 has minimum " + std::to_string(phi0.min()));
    }
    const HeatStepper stepper(grid, time.dt);
    GridField psi0(grid);
    {
      auto dst = psi0.interior();
      const auto m = m0.interior();
      const auto p = phi0.interior();
      for (std::size_t i = 0; i < dst.size(); ++i) dst[i] = m[i] / p[i];
      auto dv = psi0.vertices();
      const auto mv = m0.vertices();
      const auto pv = phi0.vertices();
      for (std::size_t i = 0; i < dv.size(); ++i) dv[i] = mv[i] / pv[i];
      dv[grid->network().exit_vertex()] = 0.0;
    }
    return run_sweep(
        stepper, std::move(psi0), time.n_steps, [](std::size_t s) { return s; },
        [](std::size_t) -> std::optional<double> { return 0.0; }, options);
  }

}  // namespace mfgnet
