#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <limits>
#include <optional>
#include <random>
#include <vector>

#include "mfgnet/grid.hpp"
#include "mfgnet/mfg.hpp"
#include "mfgnet/network.hpp"

namespace mfgnet {

  /// xoshiro256** seeded through SplitMix64. One independent stream per
  /// agent is derived from (seed, agent index), so results do not depend on
  /// how agents are scheduled across threads.
  class AgentRng {
  public:
    using result_type = std::uint64_t;

    explicit AgentRng(std::uint64_t seed);
    static AgentRng for_agent(std::uint64_t seed, std::uint64_t agent);

    static constexpr result_type min() { return 0; }
    static constexpr result_type max() { return std::numeric_limits<result_type>::max(); }
    result_type operator()();

    /// Uniform in [0, 1).
    double uniform();
    double normal() { return m_normal(*this); }
    std::size_t below(std::size_t n);

  private:
    std::uint64_t m_s[4];
    std::normal_distribution<double> m_normal;
  };

  struct AgentState {
    EdgeId edge{};
    double arc{};
    bool alive{true};
    std::optional<double> arrival;
  };

  struct SimConfig {
    std::size_t agents{100000};
    double dt{1e-4};
    std::uint64_t seed{0};
    double sigma{1.4142135623730951};  // nu = sigma^2 / 2 = 1
    double t_max{10.0};
    unsigned threads{1};
    /// Brownian-bridge test for hitting the exit between two steps.
    bool bridge_exit{true};
  };

  /// Applies an arc-length displacement to `state`. Each time a vertex is
  /// crossed the overshoot is re-emitted into an incident edge drawn
  /// uniformly from Inc_i (the arrival edge included; at a degree-1 vertex
  /// that is specular reflection). Returns true when the exit is reached.
  bool displace(const Network& net, AgentState& state, double delta, AgentRng& rng);

  /// Euler-Maruyama path y <- y + b dt + sigma sqrt(dt) xi until the exit is
  /// hit (returns the arrival time) or t_max is reached (returns nullopt).
  /// `velocity` may be null for driftless motion.
  std::optional<double> simulate_agent(const Network& net, const SimConfig& config,
                                       AgentState start, const DriftField* velocity,
                                       AgentRng& rng);

  using StartSampler = std::function<AgentState(AgentRng&)>;

  /// Inverse-CDF sampling of starting points from a density on the grid:
  /// a cell is drawn with probability proportional to its quadrature weight,
  /// then a point uniformly inside it. InteriorNodes cells are centred on the
  /// interior nodes; LeftRectangle cells are [y_k, y_{k+1}] carrying f_{j,k}.
  /// Throws NumericalError(ZeroMass).
  StartSampler density_sampler(const GridField& density,
                               Quadrature rule = Quadrature::InteriorNodes);

  struct ArrivalCdf {
    std::vector<double> times;
    std::vector<double> cdf;
    double band{};  // 95% DKW half-width
    std::vector<double> arrivals;  // +inf when censored, indexed by agent

    double lower(std::size_t n) const { return std::max(0.0, cdf[n] - band); }
    double upper(std::size_t n) const { return std::min(1.0, cdf[n] + band); }
  };

  /// Half-width of the 95% Dvoretzky-Kiefer-Wolfowitz band for n samples.
  double dkw_band(std::size_t n, double alpha = 0.05);

  /// Fraction of agents arrived by each t_n of `time`.
  ArrivalCdf estimate_arrival_cdf(const Network& net, const SimConfig& config,
                                  const StartSampler& sampler, const TimeGrid& time,
                                  const DriftField* velocity = nullptr);

  /// sup_n |a[n] - b[n]| over the common prefix.
  double sup_distance(const std::vector<double>& a, const std::vector<double>& b);

}  // namespace mfgnet
