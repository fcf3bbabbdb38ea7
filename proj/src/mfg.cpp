#include "mfgnet/mfg.hpp"

#include <algorithm>
#include <cmath>

#include "mfgnet/errors.hpp"

namespace mfgnet {

  void CostSpec::validate() const {
    if (!(t0 >= 0.0 && t0 < t_max)) {
      throw NumericalError(NumericalErrc::InvalidArgument, "need 0 <= t0 < T_max");
    }
    if (lateness_scheduled < 0.0 || lateness_actual < 0.0 || waiting < 0.0) {
      throw NumericalError(NumericalErrc::InvalidArgument, "cost coefficients must be >= 0");
    }
  }

  double cost(double s, double start_time, const CostSpec& spec) {
    return spec.lateness_scheduled * std::max(s - spec.t0, 0.0) +
           spec.lateness_actual * std::max(s - start_time, 0.0) +
           spec.waiting * std::max(start_time - s, 0.0);
  }

  std::vector<double> cumulative_flow(std::span<const double> exit_trace,
                                      const TimeFunction& cost_of_time, const SpatialGrid& grid,
                                      const TimeGrid& time) {
    const double h0 = grid.step(grid.network().exit_edge());
    const double scale = time.dt / h0;
    std::vector<double> flow(exit_trace.size());
    double acc = 0.0;
    for (std::size_t n = 0; n < exit_trace.size(); ++n) {
      acc += std::exp(cost_of_time(time.time(n))) * exit_trace[n];
      flow[n] = scale * acc;
    }
    return flow;
  }

  double quorum_time(std::span<const double> flow, double theta, double t0, double t_max,
                     const TimeGrid& time) {
    for (std::size_t n = 0; n < flow.size(); ++n) {
      if (flow[n] > theta) return std::clamp(time.time(n), t0, t_max);
    }
    return t_max;
  }

  void ProblemSpec::validate() const {
    if (!network) throw NumericalError(NumericalErrc::InvalidArgument, "problem has no network");
    if (!initial_density) {
      throw NumericalError(NumericalErrc::InvalidArgument, "problem has no initial density");
    }
    cost.validate();
    if (!(theta > 0.0 && theta < 1.0)) {
      throw NumericalError(NumericalErrc::InvalidArgument, "theta must lie in (0, 1)");
    }
    if (!(tolerance > 0.0)) throw NumericalError(NumericalErrc::InvalidArgument, "tolerance must be > 0");
    if (!(cfl_factor > 0.0 && cfl_factor < 0.5)) {
      throw NumericalError(NumericalErrc::InvalidArgument, "cfl_factor must lie in (0, 1/2)");
    }
    if (start_guess && !(*start_guess >= cost.t0 && *start_guess <= cost.t_max)) {
      throw NumericalError(NumericalErrc::InvalidArgument, "start guess must lie in [t0, T_max]");
    }
    if (max_iters == 0) throw NumericalError(NumericalErrc::InvalidArgument, "max_iters must be >= 1");
  }

  const char* to_string(FixedPointStatus status) {
    switch (status) {
      case FixedPointStatus::Converged:
        return "converged";
      case FixedPointStatus::TwoCycle:
        return "two-cycle";
      case FixedPointStatus::MaxIters:
        return "max-iters";
    }
    return "unknown";
  }

  MfgSolver::MfgSolver(ProblemSpec spec) : m_spec(std::move(spec)) {
    m_spec.validate();
    m_grid = SpatialGrid::build(m_spec.network, m_spec.h_target);
    m_time = build_time_grid(m_spec.cost.t_max, m_grid->min_step(), m_spec.cfl_factor);
    m_m0 = normalize_mass(sample_function(m_grid, m_spec.initial_density), &m_warnings,
                          m_spec.mass_rule);
    if (m_spec.cost.lateness_actual != 0.0) {
      m_warnings.emplace_back(
          "cost depends on lateness w.r.t. the actual start (c2 != 0); the equilibrium may not be "
          "unique");
    }
  }

  TimeFunction MfgSolver::cost_function(double start_time) const {
    return [spec = m_spec.cost, start_time](double s) { return cost(s, start_time, spec); };
  }

  PsiEvaluation MfgSolver::psi_map(double start_time, const SweepOptions& phi_options,
                                   const SweepOptions& psi_options) const {
    PsiEvaluation out;
    out.start_time = start_time;
    const auto c = cost_function(start_time);
    out.phi = solve_backward_phi(m_grid, m_time, c, phi_options);
    out.psi = solve_forward_psi(m_grid, m_time, m_m0, out.phi.at(0), psi_options);
    out.flow = cumulative_flow(out.psi.exit_trace, c, *m_grid, m_time);
    out.quorum = quorum_time(out.flow, m_spec.theta, m_spec.cost.t0, m_spec.cost.t_max, m_time);
    return out;
  }

  EquilibriumResult MfgSolver::fixed_point(std::size_t snapshot_every) const {
    EquilibriumResult result;
    result.grid = m_grid;
    result.time = m_time;
    result.diagnostics = m_warnings;

    SweepOptions base;
    base.threads = m_spec.threads;

    double current = m_spec.start_guess.value_or(m_spec.cost.t_max);
    result.iterates.push_back(current);
    double last_input = current;
    result.status = FixedPointStatus::MaxIters;
    while (result.iterations < m_spec.max_iters) {
      const double next = psi_map(current, base, base).quorum;
      ++result.iterations;
      result.iterates.push_back(next);
      last_input = current;
      if (std::abs(next - current) <= m_spec.tolerance) {
        result.status = FixedPointStatus::Converged;
        break;
      }
      const auto n = result.iterates.size();
      if (n >= 3 && std::abs(next - result.iterates[n - 3]) < 0.5 * m_time.dt) {
        result.status = FixedPointStatus::TwoCycle;
        result.diagnostics.push_back("fixed-point map cycles between " + std::to_string(current) +
                                     " and " + std::to_string(next) + "; returning the midpoint");
        break;
      }
      current = next;
    }
    result.converged = result.status == FixedPointStatus::Converged;
    if (result.status == FixedPointStatus::MaxIters) {
      result.diagnostics.push_back("no convergence after " + std::to_string(result.iterations) +
                                   " iterations");
    }

    // Final evaluation again with the fields at the equilibrium level retained.
    const double reported = result.status == FixedPointStatus::TwoCycle
                                ? 0.5 * (result.iterates.back() + last_input)
                                : result.iterates.back();
    result.start_time = reported;
    result.start_level = m_time.level_of(reported);
    SweepOptions keep = base;
    keep.keep_levels = {0, result.start_level, m_time.n_steps};
    keep.keep_every = snapshot_every;
    const auto final_eval = psi_map(last_input, keep, keep);
    result.flow = final_eval.flow;
    for (const auto& [level, phi] : final_eval.phi.levels) {
      if (!final_eval.psi.has(level)) continue;
      const auto& psi = final_eval.psi.at(level);
      auto [u, m] = recover_um(phi, psi);
      result.fields.emplace(level, LevelFields{phi, psi, std::move(u), std::move(m)});
    }
    result.residual_mass_error =
        residual_mass_error(result.fields.at(result.start_level).m, m_spec.theta, m_spec.mass_rule);
    return result;
  }

  std::pair<GridField, GridField> recover_um(const GridField& phi, const GridField& psi) {
    if (!(phi.min() > 0.0)) {
      throw NumericalError(NumericalErrc::NonpositivePhi,
                           "phi has minimum " + std::to_string(phi.min()));
    }
    GridField u = phi;
    GridField m = psi;
    auto transform = [](std::span<const double> p, std::span<const double> q, std::span<double> uu,
                        std::span<double> mm) {
      for (std::size_t i = 0; i < p.size(); ++i) {
        uu[i] = std::log(p[i]);
        mm[i] = p[i] * q[i];
      }
    };
    transform(phi.interior(), psi.interior(), u.interior(), m.interior());
    transform(phi.vertices(), psi.vertices(), u.vertices(), m.vertices());
    return {std::move(u), std::move(m)};
  }

  double residual_mass_error(const GridField& m, double theta, Quadrature rule) {
    return std::abs(1.0 - theta - integrate(m, rule));
  }

  EdgeProfiles drift_profile(const GridField& u) {
    const auto& grid = u.grid();
    EdgeProfiles out;
    out.values.resize(grid.network().n_edges());
    for (EdgeId j = 0; j < out.values.size(); ++j) {
      const std::size_t cells = grid.cells(j);
      const double h = grid.step(j);
      auto& a = out.values[j];
      a.resize(cells + 1);
      a[0] = -(u.at(j, 1) - u.at(j, 0)) / h;
      for (std::size_t k = 1; k < cells; ++k) a[k] = -(u.at(j, k + 1) - u.at(j, k - 1)) / (2.0 * h);
      a[cells] = -(u.at(j, cells) - u.at(j, cells - 1)) / h;
    }
    return out;
  }

  DriftField::DriftField(std::shared_ptr<const SpatialGrid> grid, double level_dt,
                         std::vector<std::size_t> levels, std::vector<EdgeProfiles> profiles)
      : m_grid(std::move(grid)),
        m_level_dt(level_dt),
        m_levels(std::move(levels)),
        m_profiles(std::move(profiles)) {
    if (m_levels.size() != m_profiles.size() || m_levels.empty()) {
      throw NumericalError(NumericalErrc::InvalidArgument, "drift levels and profiles mismatch");
    }
    if (m_levels.size() > 1) {
      m_stride = m_levels[1] - m_levels[0];
      for (std::size_t i = 1; i < m_levels.size() && m_stride != 0; ++i) {
        if (m_levels[i] - m_levels[i - 1] != m_stride) m_stride = 0;
      }
    }
  }

  double DriftField::at(EdgeId edge, double arc, double t) const {
    const auto level = static_cast<std::size_t>(std::max(0.0, std::floor(t / m_level_dt)));
    std::size_t idx = 0;
    if (m_stride != 0) {
      if (level > m_levels.front()) idx = std::min((level - m_levels.front()) / m_stride, m_levels.size() - 1);
    } else {
      auto it = std::upper_bound(m_levels.begin(), m_levels.end(), level);
      idx = it == m_levels.begin() ? 0 : static_cast<std::size_t>(it - m_levels.begin()) - 1;
    }
    const auto& a = m_profiles[idx].values[edge];
    const double h = m_grid->step(edge);
    const double pos = std::clamp(arc / h, 0.0, static_cast<double>(a.size() - 1));
    const auto k = std::min(static_cast<std::size_t>(pos), a.size() - 2);
    const double w = pos - static_cast<double>(k);
    return (1.0 - w) * a[k] + w * a[k + 1];
  }

  DriftField drift_field(const std::map<std::size_t, GridField>& u_levels, double level_dt) {
    if (u_levels.empty()) throw NumericalError(NumericalErrc::InvalidArgument, "no drift levels");
    std::vector<std::size_t> levels;
    std::vector<EdgeProfiles> profiles;
    for (const auto& [level, u] : u_levels) {
      levels.push_back(level);
      profiles.push_back(drift_profile(u));
    }
    return DriftField(u_levels.begin()->second.grid_ptr(), level_dt, std::move(levels),
                      std::move(profiles));
  }

  DriftField population_velocity(const std::map<std::size_t, GridField>& phi_levels,
                                 double level_dt) {
    if (phi_levels.empty()) throw NumericalError(NumericalErrc::InvalidArgument, "no phi levels");
    std::vector<std::size_t> levels;
    std::vector<EdgeProfiles> profiles;
    for (const auto& [level, phi] : phi_levels) {
      GridField log_phi = recover_um(phi, phi).first;
      auto p = drift_profile(log_phi);
      for (auto& edge : p.values) {
        for (double& v : edge) v *= -2.0;
      }
      levels.push_back(level);
      profiles.push_back(std::move(p));
    }
    return DriftField(phi_levels.begin()->second.grid_ptr(), level_dt, std::move(levels),
                      std::move(profiles));
  }

}  // namespace mfgnet
