#pragma once

#include <cstddef>
#include <cstdint>
#include <memory>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "mfgnet/grid.hpp"
#include "mfgnet/mfg.hpp"
#include "mfgnet/network.hpp"

namespace mfgnet {

  /// Malformed JSON text; line and column are 1-based.
  class ParseError : public std::runtime_error {
  public:
    ParseError(std::size_t line, std::size_t column, const std::string& what);
    std::size_t line() const noexcept { return m_line; }
    std::size_t column() const noexcept { return m_column; }

  private:
    std::size_t m_line;
    std::size_t m_column;
  };

  /// Well-formed JSON that does not describe a valid run. `field` is the
  /// offending key, `path` its dotted location.
  class ValidationError : public std::runtime_error {
  public:
    ValidationError(std::string field, std::string path, const std::string& what);
    const std::string& field() const noexcept { return m_field; }
    const std::string& path() const noexcept { return m_path; }

  private:
    std::string m_field;
    std::string m_path;
  };

  enum class RunMode { Solve, Oracle, RefineStudy };
  const char* to_string(RunMode mode);
  std::optional<RunMode> parse_run_mode(std::string_view text);

  struct Bump {
    Point2 center;
    double radius{};

    bool operator==(const Bump&) const = default;
  };

  /// Nodal values equally spaced along an edge, both endpoints included.
  struct EdgeTable {
    EdgeId edge{};
    std::vector<double> values;

    bool operator==(const EdgeTable&) const = default;
  };

  /// Unnormalized initial density g.
  ///  abs:       g(x) = |x| (Euclidean norm of the embedded point)
  ///  bumps:     g(x) = sum_b max(r_b^2 - |x - p_b|^2, 0)
  ///  tabulated: piecewise linear per edge, zero on unlisted edges
  struct InitialMassConfig {
    enum class Kind { Abs, Bumps, Tabulated };
    Kind kind{Kind::Abs};
    std::vector<Bump> bumps;
    std::vector<EdgeTable> tables;

    bool operator==(const InitialMassConfig&) const = default;
  };

  struct NumericsConfig {
    double h{0.1};
    double cfl_factor{0.25};
    double tol{1e-4};
    std::optional<double> t_init;
    std::size_t max_iters{50};
    Quadrature mass_quadrature{Quadrature::InteriorNodes};

    bool operator==(const NumericsConfig&) const = default;
  };

  struct RunSection {
    RunMode mode{RunMode::Solve};
    std::string output_dir{"out"};
    std::uint64_t seed{0};
    std::size_t agents{100000};
    /// Monte-Carlo step is the PDE step divided by this ratio.
    double mc_dt_ratio{10.0};
    /// Emit every N-th level of the final fields (0: only t = 0, T, T_max).
    std::size_t snapshots{0};
    std::vector<double> h_ladder{0.1, 0.05, 0.025, 0.0125};

    bool operator==(const RunSection&) const = default;
  };

  struct RunConfig {
    std::string name;
    std::string geometry;
    std::vector<Vertex> vertices;
    std::vector<EdgeSpec> edges;
    VertexId exit_vertex{};
    CostSpec cost;
    double theta{0.5};
    InitialMassConfig initial_mass;
    NumericsConfig numerics;
    RunSection run;

    bool operator==(const RunConfig&) const = default;
  };

  /// Parses and validates a version-1 JSON run description. Unknown keys are
  /// rejected. Throws ParseError or ValidationError.
  RunConfig parse_config(std::string_view text);
  RunConfig load_config(const std::string& path);

  /// Canonical JSON text with every field spelled out.
  std::string emit_config(const RunConfig& config);

  /// Throws ValidationError("network") if the graph is rejected.
  std::shared_ptr<const Network> build_network(const RunConfig& config);

  SpatialFunction initial_density(const RunConfig& config);

  /// Assembles the solver input at mesh size `h` (the configured h by default).
  ProblemSpec make_problem(const RunConfig& config, std::optional<double> h = std::nullopt);

}  // namespace mfgnet
