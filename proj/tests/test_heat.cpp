#include <doctest.h>

#include <cmath>
#include <numbers>

#include "mfgnet/errors.hpp"
#include "mfgnet/heat.hpp"
#include "mfgnet/mfg.hpp"
#include "support.hpp"

using namespace mfgnet;

namespace {
  // Sup-error at t = 0.1 of the explicit scheme for sin(pi x) on [0, 1]
  // with both ends held at zero and dt = h^2 / 4.
  double sine_decay_error(double h) {
    const auto grid = SpatialGrid::build(testing::single_edge(), h);
    const double dt = 0.25 * h * h;
    const auto steps = static_cast<std::size_t>(std::llround(0.1 / dt));
    const HeatStepper stepper(grid, dt);
    GridField cur = sample_function(grid, [](const NetworkPoint& p) { return std::sin(std::numbers::pi * p.arc); });
    cur.vertices()[0] = 0.0;
    cur.vertices()[1] = 0.0;
    GridField next = cur;
    for (std::size_t n = 0; n < steps; ++n) {
      stepper.update_interior(cur, next, 0, 1);
      std::swap(cur, next);
    }
    const double decay = std::exp(-std::numbers::pi * std::numbers::pi * static_cast<double>(steps) * dt);
    double err = 0.0;
    for (std::size_t k = 0; k <= grid->cells(0); ++k) {
      const double x = static_cast<double>(k) * grid->step(0);
      err = std::max(err, std::abs(cur.at(0, k) - decay * std::sin(std::numbers::pi * x)));
    }
    return err;
  }

  // Two interior slots of a field stand in for the adjacent nodes of a
  // vertex whose edges have steps h1 and h2.
  VertexStencil two_term_stencil(double h1, double h2) {
    VertexStencil s;
    s.vertex = 1;
    s.terms = {{0, -1, h1, 0}, {0, 1, h2, 1}};
    s.total_weight = 1.0 / h1 + 1.0 / h2;
    return s;
  }
}  // namespace

TEST_CASE("vertex values") {
  SUBCASE("three arms, equal steps") {
    const auto grid = SpatialGrid::build(testing::star(2, 1.0), 0.1);
    GridField f(grid, 0.0);
    f.set(0, grid->cells(0) - 1, 1.0);
    f.set(1, 1, 2.0);
    f.set(2, 1, 3.0);
    const auto stencils = build_vertex_stencils(*grid);
    solve_vertex_values(f, stencils);
    CHECK(f.vertices()[1] == doctest::Approx(2.0));
    for (const auto& s : stencils) CHECK(std::abs(kirchhoff_residual(f, s)) <= 1e-12);
  }
  SUBCASE("two arms, steps 0.1 and 0.2") {
    const auto grid = SpatialGrid::build(testing::single_edge(), 0.25);
    GridField f(grid, 0.0);
    f.interior()[0] = 1.0;
    f.interior()[1] = 2.0;
    solve_vertex_values(f, {two_term_stencil(0.1, 0.2)});
    CHECK(f.vertices()[1] == doctest::Approx(4.0 / 3.0));
  }
  SUBCASE("reflecting end") {
    const auto grid = SpatialGrid::build(testing::single_edge(), 0.1);
    GridField f(grid, 0.0);
    f.set(0, 9, 7.0);
    const auto stencils = build_vertex_stencils(*grid);
    REQUIRE(stencils.size() == 1);
    solve_vertex_values(f, stencils);
    CHECK(f.vertices()[1] == 7.0);
    CHECK(f.vertices()[0] == 0.0);
  }
}

TEST_CASE("stencils cover every incident edge") {
  const auto grid = SpatialGrid::build(testing::triangle_pendant(), 0.1);
  const auto stencils = build_vertex_stencils(*grid);
  CHECK(stencils.size() == 3);
  for (const auto& s : stencils) {
    CHECK(s.terms.size() == grid->network().degree(s.vertex));
    double w = 0.0;
    for (const auto& t : s.terms) {
      w += 1.0 / t.step;
      CHECK(t.sign == grid->network().incidence_sign(s.vertex, t.edge));
    }
    CHECK(s.total_weight == doctest::Approx(w));
  }
  CHECK(build_vertex_stencils(*grid, true).size() == 4);
}

TEST_CASE("stencil arithmetic") {
  const auto grid = SpatialGrid::build(testing::single_edge(0.2), 0.1);
  REQUIRE(grid->cells(0) == 2);
  const double dt = 0.25 * 0.01;
  const HeatStepper stepper(grid, dt);
  SUBCASE("forward") {
    GridField from(grid, 0.0);
    from.interior()[0] = 1.0;
    GridField to(grid);
    stepper.update_interior(from, to, 0, 1);
    CHECK(to.interior()[0] == doctest::Approx(0.5));
  }
  SUBCASE("backward") {
    GridField from(grid, 2.0);
    from.interior()[0] = 0.0;
    GridField to(grid);
    stepper.update_interior(from, to, 0, 1);
    CHECK(to.interior()[0] == doctest::Approx(1.0));
  }
}

TEST_CASE("stability limit") {
  const auto grid = SpatialGrid::build(testing::single_edge(), 0.1);
  CHECK_NOTHROW(HeatStepper(grid, 0.5 * 0.01));
  try {
    HeatStepper(grid, 0.51 * 0.01);
    FAIL("expected CflViolation");
  } catch (const NumericalError& e) {
    CHECK(e.code() == NumericalErrc::CflViolation);
  }
}

TEST_CASE("constants are steady without a Dirichlet vertex") {
  const auto grid = SpatialGrid::build(testing::triangle_pendant(), 0.05);
  const HeatStepper stepper(grid, 0.25 * grid->min_step() * grid->min_step(), true);
  GridField a(grid, 3.25);
  GridField b(grid);
  for (int n = 0; n < 200; ++n) {
    stepper.advance(a, b, std::nullopt);
    std::swap(a, b);
  }
  CHECK(a.min() == 3.25);
  CHECK(a.max() == 3.25);
}

TEST_CASE("mass is conserved on a star with no exit") {
  const auto grid = SpatialGrid::build(testing::star(3, 1.0), 0.05);
  const double dt = 0.25 * grid->min_step() * grid->min_step();
  const HeatStepper stepper(grid, dt, true);
  GridField a = sample_function(grid, [](const NetworkPoint& p) { return 1.0 + p.position.x * p.position.x + p.arc; });
  solve_vertex_values(a, stepper.stencils());
  const double interior0 = integrate(a, Quadrature::InteriorNodes);
  const double left0 = integrate(a, Quadrature::LeftRectangle);
  GridField b(grid);
  const std::size_t steps = 4000;
  for (std::size_t n = 0; n < steps; ++n) {
    stepper.advance(a, b, std::nullopt);
    std::swap(a, b);
  }
  CHECK(std::abs(integrate(a, Quadrature::InteriorNodes) - interior0) <= 1e-12 * interior0);
  // The left rule counts vertex values, which move with the solution.
  CHECK(std::abs(integrate(a, Quadrature::LeftRectangle) - left0) <= static_cast<double>(steps) * dt * grid->min_step() * 10.0);
}

TEST_CASE("explicit scheme matches the decaying sine mode") {
  const double coarse = sine_decay_error(0.02);
  const double fine = sine_decay_error(0.01);
  CHECK(fine <= 1e-3);
  CHECK(coarse / fine >= 3.5);
  CHECK(coarse / fine <= 4.5);
}

TEST_CASE("backward sweep boundary data") {
  const auto grid = SpatialGrid::build(testing::triangle_pendant(), 0.1);
  const auto time = build_time_grid(10.0, grid->min_step(), 0.25);
  SUBCASE("zero cost") {
    const auto phi = solve_backward_phi(grid, time, [](double) { return 0.0; });
    CHECK(phi.min_value == 1.0);
    CHECK(phi.max_value == 1.0);
  }
  SUBCASE("constant cost") {
    const auto phi = solve_backward_phi(grid, time, [](double) { return 0.3; });
    CHECK(phi.min_value == doctest::Approx(std::exp(0.3)));
    CHECK(phi.max_value == doctest::Approx(std::exp(0.3)));
  }
  SUBCASE("exit value equals exp(c_T) at every level") {
    CostSpec spec;
    const auto c = [spec](double s) { return cost(s, 5.617, spec); };
    std::size_t checked = 0;
    SweepOptions options;
    options.observer = [&](std::size_t level, const GridField& f) {
      const double t = time.time(level);
      const double expected = std::exp(0.1 * std::max(t - 0.5, 0.0) + 0.1 * std::max(5.617 - t, 0.0));
      CHECK(f.vertices()[0] == doctest::Approx(expected).epsilon(1e-15));
      ++checked;
    };
    const auto phi = solve_backward_phi(grid, time, c, options);
    CHECK(checked == time.n_steps + 1);
    CHECK(phi.min_value >= 1.0);
  }
}

TEST_CASE("forward sweep") {
  const auto grid = SpatialGrid::build(testing::triangle_pendant(), 0.1);
  const auto time = build_time_grid(2.0, grid->min_step(), 0.25);
  const GridField phi0(grid, 1.0);
  SUBCASE("zero mass stays zero") {
    const auto psi = solve_forward_psi(grid, time, GridField(grid, 0.0), phi0);
    CHECK(psi.min_value == 0.0);
    CHECK(psi.max_value == 0.0);
  }
  SUBCASE("nonpositive phi is rejected") {
    GridField bad(grid, 1.0);
    bad.interior()[3] = 0.0;
    try {
      solve_forward_psi(grid, time, GridField(grid, 1.0), bad);
      FAIL("expected NonpositivePhi");
    } catch (const NumericalError& e) {
      CHECK(e.code() == NumericalErrc::NonpositivePhi);
    }
  }
}

TEST_CASE("maximum principle and nonnegativity on random networks") {
  std::mt19937_64 rng(2024);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int trial = 0; trial < 8; ++trial) {
    const auto net = testing::random_lattice(rng, 2 + trial % 2, 2 + trial % 3);
    const auto grid = SpatialGrid::build(net, 0.1);
    const auto time = build_time_grid(2.0, grid->min_step(), 0.1 + 0.35 * u(rng));
    const double a = u(rng);
    const double b = u(rng);
    const double terminal = u(rng);
    const TimeFunction c = [=](double t) { return a * std::abs(std::sin(3.0 * t + b)) + (t >= 2.0 ? terminal : 0.0); };
    const auto phi = solve_backward_phi(grid, time, c);
    double lowest = std::exp(c(time.t_max));
    for (std::size_t n = 0; n <= time.n_steps; ++n) lowest = std::min(lowest, std::exp(c(time.time(n))));
    CHECK(phi.min_value >= lowest - 1e-12);

    std::vector<double> weights(grid->n_interior());
    for (auto& w : weights) w = u(rng) < 0.3 ? 0.0 : u(rng);
    GridField m0(grid, 0.0);
    std::copy(weights.begin(), weights.end(), m0.interior().begin());
    const auto psi = solve_forward_psi(grid, time, m0, phi.at(0));
    CHECK(psi.min_value >= 0.0);
  }
}

TEST_CASE("threaded sweep matches the serial one") {
  const auto grid = SpatialGrid::build(testing::triangle_pendant(), 0.05);
  const auto time = build_time_grid(1.0, grid->min_step(), 0.25);
  CostSpec spec;
  const auto c = [spec](double s) { return cost(s, 3.0, spec); };
  SweepOptions serial;
  serial.keep_every = 97;
  SweepOptions threaded = serial;
  threaded.threads = 3;
  const auto a = solve_backward_phi(grid, time, c, serial);
  const auto b = solve_backward_phi(grid, time, c, threaded);
  REQUIRE(a.levels.size() == b.levels.size());
  for (const auto& [level, f] : a.levels) {
    const auto& g = b.at(level);
    CHECK(std::equal(f.interior().begin(), f.interior().end(), g.interior().begin()));
    CHECK(std::equal(f.vertices().begin(), f.vertices().end(), g.vertices().begin()));
  }
  CHECK(a.exit_trace == b.exit_trace);
}
