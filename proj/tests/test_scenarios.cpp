#include <doctest.h>

#include <cmath>

#include "vortexlab/errors.hpp"
#include "vortexlab/evolve.hpp"
#include "vortexlab/scenarios.hpp"

using namespace vortexlab;
using namespace vortexlab::scenarios;

TEST_CASE("presets solve the free Schrodinger equation") {
  for (const auto& name : preset_names()) {
    CAPTURE(name);
    const ScenarioPreset p = preset(name);
    CHECK(std::abs(p.solution.residual()) == 0.0);
    // independent check: centred differences are exact on quadratics up to rounding
    const evolve::SpaceTimeFn fn = [&](const Vec3& x, double t) { return p.solution(x, t); };
    for (const Vec3& x : {Vec3{0.1, -0.2, 0.3}, Vec3{-0.5, 0.4, 0.05}}) {
      const cplx r = evolve::pointwise_residual(fn, x, 0.03, 0.0, evolve::Nonlinearity::GrossPitaevskii, 1e-3);
      CHECK(std::abs(r) < 1e-6);
    }
  }
}

TEST_CASE("quadratic solutions reject non-solutions") {
  Quadratic p;
  p.hessian_half[0][0] = 1.0;  // Lap p = 2
  Quadratic q;
  CHECK_THROWS_AS(QuadraticSolution(p, q, 0.0, 0.0), DomainError);
  CHECK_NOTHROW(QuadraticSolution(p, q, 0.0, 2.0));
  CHECK_THROWS_AS(preset("vortex-soup"), ConfigError);
  CHECK_THROWS_AS(preset("moving-ring", -1.0), ConfigError);
}

TEST_CASE("analytic zero sets and transversality") {
  SUBCASE("exchange branches") {
    const auto p = preset("hyperbolic-exchange");
    for (double t : {-0.1, 0.05}) {
      for (double s : {-0.3, 0.0, 0.2}) {
        // x1^2 - x2^2 = -2t on x3 = 0
        const Vec3 x = t < 0 ? Vec3{std::sqrt(-2 * t + s * s), s, 0.0} : Vec3{s, std::sqrt(2 * t + s * s), 0.0};
        CHECK(std::abs(p.solution(x, t)) < 1e-14);
        const auto g = p.solution.gradients(x);
        CHECK(norm(cross(g[0], g[1])) > 0.1);
      }
    }
    // the gradients fail to be transversal only at the reconnection point
    const auto g = p.solution.gradients({0.0, 0.0, 0.0});
    CHECK(norm(cross(g[0], g[1])) == 0.0);
  }
  SUBCASE("ring death radius") {
    const double R = 0.5;
    const auto p = preset("ring-death", R);
    const double ts = p.events.at(0).time;
    CHECK(ts == doctest::Approx(-R * R / 2));
    const double t = ts - 0.05, rho = std::sqrt(-R * R - 2 * t);
    for (double phi : {0.0, 1.0, 2.5}) {
      const Vec3 x{rho * std::cos(phi), rho * std::sin(phi), 0.0};
      CHECK(std::abs(p.solution(x, t)) < 1e-14);
      const auto g = p.solution.gradients(x);
      CHECK(norm(cross(g[0], g[1])) > 0.1);
    }
    CHECK(std::abs(p.solution({0.0, 0.0, 0.0}, ts + 0.01)) > 0.0);
  }
  SUBCASE("moving ring") {
    const auto p = preset("moving-ring", 0.4);
    CHECK(std::abs(p.solution({0.4, 0.0, -0.4}, 0.1)) < 1e-15);
    CHECK(p.events.empty());
  }
}

TEST_CASE("sampling grids") {
  const auto t = time_grid(-0.2, 0.2, 0.0125);
  CHECK(t.size() == 33);
  CHECK(t[16] == doctest::Approx(0.0).epsilon(1e-15));
  const auto p = preset("moving-ring");
  const auto fields = sample(p.solution, scenario_box(16), std::span<const double>(t.data(), 3));
  REQUIRE(fields.size() == 3);
  const auto& f = fields[1];
  CHECK(f(3, 4, 5) == p.solution(f.point(3, 4, 5), t[1]));
  CHECK_THROWS_AS(time_grid(0.0, 1.0, 0.0), ConfigError);
}
