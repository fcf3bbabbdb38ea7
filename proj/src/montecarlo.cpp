#include "mfgnet/montecarlo.hpp"

#include <algorithm>
#include <cmath>
#include <thread>

#include "mfgnet/errors.hpp"

namespace mfgnet {

  namespace {
    std::uint64_t splitmix64(std::uint64_t& x) {
      std::uint64_t z = (x += 0x9e3779b97f4a7c15ULL);
      z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
      z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
      return z ^ (z >> 31);
    }

    constexpr std::uint64_t rotl(std::uint64_t x, int k) { return (x << k) | (x >> (64 - k)); }
  }  // namespace

  AgentRng::AgentRng(std::uint64_t seed) {
    for (auto& s : m_s) s = splitmix64(seed);
  }

  AgentRng AgentRng::for_agent(std::uint64_t seed, std::uint64_t agent) {
    std::uint64_t key = seed;
    const std::uint64_t base = splitmix64(key);
    return AgentRng(base ^ (agent * 0xd1b54a32d192ed03ULL));
  }

  AgentRng::result_type AgentRng::operator()() {
    const std::uint64_t result = rotl(m_s[1] * 5, 7) * 9;
    const std::uint64_t t = m_s[1] << 17;
    m_s[2] ^= m_s[0];
    m_s[3] ^= m_s[1];
    m_s[1] ^= m_s[2];
    m_s[0] ^= m_s[3];
    m_s[2] ^= t;
    m_s[3] = rotl(m_s[3], 45);
    return result;
  }

  double AgentRng::uniform() { return static_cast<double>((*this)() >> 11) * 0x1.0p-53; }

  std::size_t AgentRng::below(std::size_t n) {
    return std::uniform_int_distribution<std::size_t>(0, n - 1)(*this);
  }

  bool displace(const Network& net, AgentState& state, double delta, AgentRng& rng) {
    EdgeId j = state.edge;
    double y = state.arc + delta;
    for (;;) {
      const Edge& e = net.edge(j);
      VertexId v;
      double over;
      if (y < 0.0) {
        v = e.tail;
        over = -y;
      } else if (y > e.length) {
        v = e.head;
        over = y - e.length;
      } else {
        state.edge = j;
        state.arc = y;
        return false;
      }
      if (v == net.exit_vertex()) {
        state.edge = j;
        state.arc = v == e.tail ? 0.0 : e.length;
        return true;
      }
      const auto inc = net.incident_edges(v);
      j = inc[inc.size() == 1 ? 0 : rng.below(inc.size())];
      y = net.incidence_sign(v, j) > 0 ? over : net.edge(j).length - over;
    }
  }

  namespace {
    bool at_exit(const Network& net, const AgentState& s) {
      const auto& e = net.edge(s.edge);
      const VertexId exit = net.exit_vertex();
      return (e.tail == exit && s.arc <= 0.0) || (e.head == exit && s.arc >= e.length);
    }

    // Distance to the exit along the exit edge, or -1 elsewhere.
    double exit_distance(const Network& net, const AgentState& s) {
      if (s.edge != net.exit_edge()) return -1.0;
      const auto& e = net.edge(s.edge);
      return e.tail == net.exit_vertex() ? s.arc : e.length - s.arc;
    }
  }  // namespace

  std::optional<double> simulate_agent(const Network& net, const SimConfig& config,
                                       AgentState start, const DriftField* velocity,
                                       AgentRng& rng) {
    if (at_exit(net, start)) return 0.0;
    AgentState s = start;
    const double var = config.sigma * config.sigma;
    for (std::size_t n = 0;; ++n) {
      const double t = static_cast<double>(n) * config.dt;
      if (t >= config.t_max) return std::nullopt;
      const double step = std::min(config.dt, config.t_max - t);
      const double b = velocity ? velocity->at(s.edge, s.arc, t) : 0.0;
      const double before = config.bridge_exit ? exit_distance(net, s) : -1.0;
      const double delta = b * step + config.sigma * std::sqrt(step) * rng.normal();
      if (displace(net, s, delta, rng)) return t + step;
      if (before >= 0.0) {
        const double after = exit_distance(net, s);
        if (after >= 0.0 && rng.uniform() < std::exp(-2.0 * before * after / (var * step))) {
          return t + step;
        }
      }
    }
  }

  StartSampler density_sampler(const GridField& density, Quadrature rule) {
    struct Cell {
      EdgeId edge;
      double lo;
      double hi;
    };
    const auto& grid = density.grid();
    const auto& net = grid.network();
    auto cells = std::make_shared<std::vector<Cell>>();
    auto cumulative = std::make_shared<std::vector<double>>();
    double total = 0.0;
    for (EdgeId j = 0; j < net.n_edges(); ++j) {
      const double h = grid.step(j);
      const std::size_t first = rule == Quadrature::LeftRectangle ? 0 : 1;
      for (std::size_t k = first; k < grid.cells(j); ++k) {
        const double w = density.at(j, k) * h;
        if (w < 0.0) throw NumericalError(NumericalErrc::InvalidArgument, "negative density");
        if (w == 0.0) continue;
        const double y = static_cast<double>(k) * h;
        if (rule == Quadrature::LeftRectangle) {
          cells->push_back({j, y, y + h});
        } else {
          cells->push_back({j, y - 0.5 * h, y + 0.5 * h});
        }
        total += w;
        cumulative->push_back(total);
      }
    }
    if (!(total > 0.0)) throw NumericalError(NumericalErrc::ZeroMass, "sampling density has no mass");
    return [cells, cumulative, total](AgentRng& rng) {
      const double u = rng.uniform() * total;
      auto it = std::upper_bound(cumulative->begin(), cumulative->end(), u);
      if (it == cumulative->end()) --it;
      const Cell& c = (*cells)[static_cast<std::size_t>(it - cumulative->begin())];
      return AgentState{c.edge, c.lo + rng.uniform() * (c.hi - c.lo), true, std::nullopt};
    };
  }

  double dkw_band(std::size_t n, double alpha) {
    return std::sqrt(std::log(2.0 / alpha) / (2.0 * static_cast<double>(n)));
  }

  ArrivalCdf estimate_arrival_cdf(const Network& net, const SimConfig& config,
                                  const StartSampler& sampler, const TimeGrid& time,
                                  const DriftField* velocity) {
    if (config.agents == 0 || !(config.dt > 0.0)) {
      throw NumericalError(NumericalErrc::InvalidArgument, "need agents >= 1 and dt > 0");
    }
    ArrivalCdf out;
    out.arrivals.assign(config.agents, std::numeric_limits<double>::infinity());
    auto run_block = [&](std::size_t begin, std::size_t end) {
      for (std::size_t i = begin; i < end; ++i) {
        AgentRng rng = AgentRng::for_agent(config.seed, i);
        const AgentState start = sampler(rng);
        if (auto t = simulate_agent(net, config, start, velocity, rng)) out.arrivals[i] = *t;
      }
    };
    const unsigned threads = std::max(1u, std::min<unsigned>(config.threads, static_cast<unsigned>(config.agents)));
    if (threads == 1) {
      run_block(0, config.agents);
    } else {
      std::vector<std::jthread> pool;
      const std::size_t chunk = (config.agents + threads - 1) / threads;
      for (unsigned t = 0; t < threads; ++t) {
        const std::size_t begin = std::min(config.agents, t * chunk);
        const std::size_t end = std::min(config.agents, begin + chunk);
        pool.emplace_back(run_block, begin, end);
      }
    }

    std::vector<double> sorted = out.arrivals;
    std::sort(sorted.begin(), sorted.end());
    out.times.resize(time.n_steps + 1);
    out.cdf.resize(time.n_steps + 1);
    std::size_t count = 0;
    const double n = static_cast<double>(config.agents);
    for (std::size_t k = 0; k <= time.n_steps; ++k) {
      out.times[k] = time.time(k);
      while (count < sorted.size() && sorted[count] <= out.times[k]) ++count;
      out.cdf[k] = static_cast<double>(count) / n;
    }
    out.band = dkw_band(config.agents);
    return out;
  }

  double sup_distance(const std::vector<double>& a, const std::vector<double>& b) {
    double d = 0.0;
    for (std::size_t i = 0; i < std::min(a.size(), b.size()); ++i) d = std::max(d, std::abs(a[i] - b[i]));
    return d;
  }

}  // namespace mfgnet
