#pragma once

#include <cmath>
#include <memory>
#include <numbers>
#include <random>
#include <vector>

#include "mfgnet/network.hpp"

namespace mfgnet::testing {

  inline std::shared_ptr<const Network> share(Network net) {
    return std::make_shared<const Network>(std::move(net));
  }

  /// Edge [0, length] from the exit v0 to a reflecting end v1.
  inline std::shared_ptr<const Network> single_edge(double length = 1.0, bool reversed = false) {
    std::vector<Vertex> v{{0, {0.0, 0.0}}, {1, {length, 0.0}}};
    std::vector<EdgeSpec> e{reversed ? EdgeSpec{0, 1, 0, {}} : EdgeSpec{0, 0, 1, {}}};
    return share(Network::build(v, e, 0));
  }

  /// Exit pendant into a center with `arms` further edges of the given length.
  inline std::shared_ptr<const Network> star(std::size_t arms, double length = 1.0) {
    std::vector<Vertex> v{{0, {0.0, -length}}, {1, {0.0, 0.0}}};
    std::vector<EdgeSpec> e{{0, 0, 1, {}}};
    for (std::size_t a = 0; a < arms; ++a) {
      const double angle = 2.0 * std::numbers::pi * (static_cast<double>(a) + 0.5) / static_cast<double>(arms);
      v.push_back({a + 2, {length * std::cos(angle), length * std::sin(angle)}});
      e.push_back({a + 1, 1, a + 2, length});
    }
    return share(Network::build(v, e, 0));
  }

  /// Triangle with an exit pendant (the Example-1 reconstruction).
  inline std::shared_ptr<const Network> triangle_pendant() {
    std::vector<Vertex> v{{0, {0.0, 0.0}}, {1, {0.0, 1.0}}, {2, {-1.0, 1.75}}, {3, {1.0, 1.75}}};
    std::vector<EdgeSpec> e{{0, 0, 1, {}}, {1, 1, 2, {}}, {2, 2, 3, {}}, {3, 3, 1, {}}};
    return share(Network::build(v, e, 0));
  }

  /// Exit pendant into the corner of a rows x cols lattice with random edge lengths.
  inline std::shared_ptr<const Network> random_lattice(std::mt19937_64& rng, std::size_t rows, std::size_t cols) {
    std::uniform_real_distribution<double> len(0.3, 1.0);
    std::vector<Vertex> v{{0, {-1.0, -1.0}}};
    auto id = [cols](std::size_t r, std::size_t c) { return 1 + r * cols + c; };
    for (std::size_t r = 0; r < rows; ++r) {
      for (std::size_t c = 0; c < cols; ++c) v.push_back({id(r, c), {double(c), double(r)}});
    }
    std::vector<EdgeSpec> e{{0, 0, id(0, 0), len(rng)}};
    for (std::size_t r = 0; r < rows; ++r) {
      for (std::size_t c = 0; c < cols; ++c) {
        if (c + 1 < cols) e.push_back({e.size(), id(r, c), id(r, c + 1), len(rng)});
        if (r + 1 < rows) e.push_back({e.size(), id(r + 1, c), id(r, c), len(rng)});
      }
    }
    return share(Network::build(v, e, 0));
  }

  /// P(tau <= t) for unit diffusion (sigma^2 = 2) on [0, L], absorbing at 0
  /// and reflecting at L, started at x0: eigenfunction series.
  inline double absorbed_by(double t, double x0, double length, int terms = 50) {
    double survival = 0.0;
    for (int n = 0; n < terms; ++n) {
      const double lambda = (n + 0.5) * std::numbers::pi / length;
      survival += (2.0 / length) * std::sin(lambda * x0) / lambda * std::exp(-lambda * lambda * t);
    }
    return 1.0 - survival;
  }

}  // namespace mfgnet::testing
