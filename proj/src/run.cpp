#include "mfgnet/run.hpp"

#include <cstdlib>
#include <fstream>
#include <iomanip>
#include <ostream>
#include <sstream>

#include <json.hpp>

#include "mfgnet/errors.hpp"

namespace mfgnet {

  namespace fs = std::filesystem;
  using ojson = nlohmann::ordered_json;

  namespace {
    std::ofstream open_output(const fs::path& path) {
      std::ofstream out(path, std::ios::binary);
      if (!out) throw ValidationError("output_dir", "run.output_dir", "cannot write " + path.string());
      out << std::setprecision(17);
      return out;
    }

    void prepare_directory(const fs::path& dir) {
      std::error_code ec;
      fs::create_directories(dir, ec);
      if (ec) throw ValidationError("output_dir", "run.output_dir", "cannot create " + dir.string() + ": " + ec.message());
    }

    const char* quadrature_name(Quadrature rule) {
      return rule == Quadrature::LeftRectangle ? "left" : "interior";
    }

    ojson equilibrium_json(const EquilibriumResult& r, double h) {
      ojson j;
      j["h"] = h;
      j["h_min"] = r.grid->min_step();
      j["dt"] = r.time.dt;
      j["n_steps"] = r.time.n_steps;
      j["T_star"] = r.start_time;
      j["start_level"] = r.start_level;
      j["iterations"] = r.iterations;
      j["converged"] = r.converged;
      j["status"] = to_string(r.status);
      j["E_h"] = r.residual_mass_error;
      j["iterates"] = r.iterates;
      j["diagnostics"] = r.diagnostics;
      return j;
    }

    ojson header_json(const RunConfig& config) {
      ojson j;
      j["name"] = config.name;
      j["geometry"] = config.geometry;
      j["mode"] = to_string(config.run.mode);
      j["theta"] = config.theta;
      j["tol"] = config.numerics.tol;
      j["mass_quadrature"] = quadrature_name(config.numerics.mass_quadrature);
      return j;
    }

    void write_json(const fs::path& path, const ojson& j) {
      auto out = open_output(path);
      out << j.dump(2) << "\n";
    }

    void write_series(const fs::path& dir, const EquilibriumResult& r) {
      auto flow = open_output(dir / "F_series.csv");
      flow << "t,F\n";
      for (std::size_t n = 0; n < r.flow.size(); ++n) flow << r.time.time(n) << ',' << r.flow[n] << '\n';

      auto iterates = open_output(dir / "iterates.csv");
      iterates << "iteration,T\n";
      for (std::size_t i = 0; i < r.iterates.size(); ++i) iterates << i << ',' << r.iterates[i] << '\n';

      const auto& grid = *r.grid;
      for (const auto& [level, f] : r.fields) {
        std::ostringstream name;
        name << "fields_level_" << std::setw(7) << std::setfill('0') << level << ".csv";
        auto out = open_output(dir / name.str());
        out << "# t=" << r.time.time(level) << "\n";
        out << "edge_id,k,x_coord_1,x_coord_2,phi,psi,u,m\n";
        for (EdgeId j = 0; j < grid.network().n_edges(); ++j) {
          for (std::size_t k = 0; k <= grid.cells(j); ++k) {
            const Point2 p = grid.node_position(j, k);
            out << j << ',' << k << ',' << p.x << ',' << p.y << ',' << f.phi.at(j, k) << ','
                << f.psi.at(j, k) << ',' << f.u.at(j, k) << ',' << f.m.at(j, k) << '\n';
          }
        }
      }
    }

    void report(const RunOptions& options, const std::string& label, const EquilibriumResult& r) {
      if (!options.log) return;
      *options.log << label << "T_star=" << r.start_time << " iterations=" << r.iterations
                   << " E_h=" << r.residual_mass_error << " status=" << to_string(r.status) << '\n';
    }

    EquilibriumResult solve_with(const MfgSolver& solver, std::size_t snapshots) {
      return solver.fixed_point(snapshots);
    }
  }  // namespace

  unsigned threads_from_environment() {
    const char* text = std::getenv("MFGNET_THREADS");
    if (!text || !*text) return 1;
    char* end = nullptr;
    const long value = std::strtol(text, &end, 10);
    if (*end != '\0' || value < 1 || value > 1024) {
      throw ValidationError("MFGNET_THREADS", "MFGNET_THREADS", "expected an integer in [1, 1024]");
    }
    return static_cast<unsigned>(value);
  }

  EquilibriumResult solve(const RunConfig& config, double h, const RunOptions& options) {
    ProblemSpec spec = make_problem(config, h);
    spec.threads = options.threads;
    MfgSolver solver(std::move(spec));
    return solve_with(solver, config.run.snapshots);
  }

  OracleResult run_oracle(const RunConfig& config, const RunOptions& options) {
    ProblemSpec spec = make_problem(config);
    spec.threads = options.threads;
    MfgSolver solver(std::move(spec));
    OracleResult out;
    out.equilibrium = solve_with(solver, config.run.snapshots);

    SweepOptions every_level;
    every_level.keep_every = 1;
    every_level.threads = options.threads;
    const PsiEvaluation eval = solver.psi_map(out.equilibrium.start_time, every_level);
    const DriftField velocity = population_velocity(eval.phi.levels, solver.time().dt);

    out.sim.agents = config.run.agents;
    out.sim.dt = solver.time().dt / config.run.mc_dt_ratio;
    out.sim.seed = config.run.seed;
    out.sim.t_max = config.cost.t_max;
    out.sim.threads = options.threads;
    out.mc = estimate_arrival_cdf(solver.grid()->network(), out.sim,
                                  density_sampler(solver.initial_mass(), config.numerics.mass_quadrature),
                                  solver.time(), &velocity);
    out.pde_flow = eval.flow;
    out.sup_distance = sup_distance(out.mc.cdf, out.pde_flow);
    return out;
  }

  ExitCode run(const RunConfig& config, const RunOptions& options) {
    const fs::path dir = config.run.output_dir;
    prepare_directory(dir);
    ojson summary = header_json(config);

    switch (config.run.mode) {
      case RunMode::Solve: {
        const EquilibriumResult r = solve(config, config.numerics.h, options);
        report(options, "", r);
        summary.update(equilibrium_json(r, config.numerics.h));
        write_series(dir, r);
        write_json(dir / "summary.json", summary);
        return r.converged ? ExitOk : ExitNotConverged;
      }
      case RunMode::Oracle: {
        const OracleResult o = run_oracle(config, options);
        const auto& r = o.equilibrium;
        report(options, "", r);
        summary.update(equilibrium_json(r, config.numerics.h));
        ojson mc;
        mc["agents"] = o.sim.agents;
        mc["seed"] = o.sim.seed;
        mc["dt"] = o.sim.dt;
        mc["bridge_exit"] = o.sim.bridge_exit;
        mc["dkw_band"] = o.mc.band;
        mc["sup_distance"] = o.sup_distance;
        summary["oracle"] = mc;
        write_series(dir, r);

        auto cmp = open_output(dir / "oracle_comparison.csv");
        cmp << "t,F_pde,F_mc,band_lo,band_hi\n";
        auto cdf = open_output(dir / "mc_cdf.csv");
        cdf << "t,F_hat,band_lo,band_hi\n";
        for (std::size_t n = 0; n < o.mc.times.size(); ++n) {
          cmp << o.mc.times[n] << ',' << o.pde_flow[n] << ',' << o.mc.cdf[n] << ',' << o.mc.lower(n) << ','
              << o.mc.upper(n) << '\n';
          cdf << o.mc.times[n] << ',' << o.mc.cdf[n] << ',' << o.mc.lower(n) << ',' << o.mc.upper(n) << '\n';
        }
        write_json(dir / "summary.json", summary);
        if (options.log) {
          *options.log << "oracle sup_distance=" << o.sup_distance << " dkw_band=" << o.mc.band << '\n';
        }
        return r.converged ? ExitOk : ExitNotConverged;
      }
      case RunMode::RefineStudy: {
        auto table = open_output(dir / "refine_study.csv");
        table << "h,E_h,T,iterations,converged\n";
        ojson rows = ojson::array();
        bool all_converged = true;
        for (double h : config.run.h_ladder) {
          const EquilibriumResult r = solve(config, h, options);
          std::ostringstream label;
          label << "h=" << h << ' ';
          report(options, label.str(), r);
          table << h << ',' << r.residual_mass_error << ',' << r.start_time << ',' << r.iterations << ','
                << (r.converged ? "true" : "false") << '\n';
          rows.push_back(equilibrium_json(r, h));
          all_converged = all_converged && r.converged;
        }
        summary["rows"] = rows;
        write_json(dir / "summary.json", summary);
        return all_converged ? ExitOk : ExitNotConverged;
      }
    }
    return ExitOk;
  }

}  // namespace mfgnet
