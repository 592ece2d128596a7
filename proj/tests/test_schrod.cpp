#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "vortexlab/errors.hpp"
#include "vortexlab/evolve.hpp"
#include "vortexlab/schrod_approx.hpp"

using namespace vortexlab;
using namespace vortexlab::schrod;

namespace {

constexpr double kPi = std::numbers::pi;
const cplx I{0.0, 1.0};

cplx plane_wave(const Vec3& xi, const Vec3& x, double t) { return std::exp(I * (dot(xi, x) - dot(xi, xi) * t)); }

Vec3 wave_vector(double tau, const Vec3& dir) { return std::sqrt(-tau) / norm(dir) * dir; }

// G_tau(x - x0) e^{i tau t} with tau on the frequency grid of T = 0.5, 64 samples.
const SchwartzResult& single_mode_run() {
  static const SchwartzResult result = [] {
    const double tau0 = -2 * kPi;
    const helmholtz::FundamentalSolution G({tau0});
    const SpaceTimeFn v = [&](const Vec3& x, double t) { return G(x - Vec3{2, 0, 0}) * std::exp(I * (tau0 * t)); };
    const auto S = SpacetimeSamples::sample(Domain::ball({0, 0, 0}, 1.0), 16, 0.5, 64, v);
    return build_schwartz_datum(S, 0.05);
  }();
  return result;
}

FrequencyStack hand_stack(double tau, int degree, unsigned seed) {
  std::mt19937 rng(seed);
  std::normal_distribution<double> n(0.0, 1.0);
  std::vector<cplx> c(static_cast<std::size_t>((degree + 1) * (degree + 1)));
  for (auto& a : c) a = {n(rng), n(rng)};
  FrequencyStack s;
  Layer layer;
  layer.tau = tau;
  layer.weight = 1.0;
  layer.psi = helmholtz::SphericalExpansion({tau}, degree, c);
  s.layers.push_back(layer);
  return s;
}

}  // namespace

TEST_CASE("time Fourier transform of single frequencies") {
  const Domain D = Domain::ball({0, 0, 0}, 1.0);
  SUBCASE("plane wave lands in the bin tau = -|xi|^2") {
    const Vec3 xi = wave_vector(-4 * kPi, {1, 2, 2});
    const auto S = SpacetimeSamples::sample(D, 16, 0.5, 64, [&](const Vec3& x, double t) { return plane_wave(xi, x, t); });
    const auto F = time_fourier(S);
    CHECK(F.dtau == doctest::Approx(2 * kPi));
    std::size_t peak = 0;
    for (std::size_t q = 0; q < F.taus.size(); ++q)
      if (F.norms[q] > F.norms[peak]) peak = q;
    CHECK(F.taus[peak] == doctest::Approx(-dot(xi, xi)));
    for (std::size_t q = 0; q < F.taus.size(); ++q)
      if (q != peak) CHECK(F.norms[q] < 1e-10 * F.norms[peak]);
    CHECK(helmholtz::helmholtz_residual(S.voxels, F.slices[peak], F.taus[peak]) < 0.05);
    CHECK(F.parseval() == doctest::Approx(S.l2_norm() * S.l2_norm()).epsilon(1e-12));
  }
  SUBCASE("three plane waves against direct summation") {
    const std::array<double, 3> taus{-2 * kPi, -4 * kPi, -6 * kPi};
    const std::array<Vec3, 3> dirs{Vec3{1, 0, 0}, Vec3{0, 1, 1}, Vec3{1, -1, 2}};
    const std::array<cplx, 3> amp{{{1.0, 0.5}, {-0.3, 0.2}, {0.1, -0.7}}};
    const SpaceTimeFn v = [&](const Vec3& x, double t) {
      cplx s{0.0, 0.0};
      for (int k = 0; k < 3; ++k) s += amp[k] * plane_wave(wave_vector(taus[k], dirs[k]), x, t);
      return s;
    };
    const auto S = SpacetimeSamples::sample(D, 12, 0.5, 64, v);
    const auto F = time_fourier(S);
    const auto nodes = S.voxels.nodes();
    for (int k = 0; k < 3; ++k) {
      const auto q = static_cast<std::size_t>(std::lround(taus[k] / F.dtau)) + F.taus.size() / 2;
      REQUIRE(F.taus[q] == doctest::Approx(taus[k]));
      for (std::size_t i : {std::size_t{0}, nodes.size() / 2, nodes.size() - 1}) {
        cplx direct{0.0, 0.0};
        for (std::size_t j = 0; j < S.times.size(); ++j)
          direct += std::exp(-I * (taus[k] * S.times[j])) * S.values[j * nodes.size() + i];
        direct *= S.dt() / (2 * kPi);
        CHECK(std::abs(F.slices[q][i] - direct) < 1e-12);
        // v^ = (T / pi) a e^{i xi.x}
        const cplx a = F.slices[q][i] / ((S.T / kPi) * std::exp(I * dot(wave_vector(taus[k], dirs[k]), nodes[i])));
        CHECK(std::abs(a - amp[k]) < 1e-8);
      }
    }
  }
  SUBCASE("non-solutions and short records are rejected") {
    CHECK_THROWS_AS(SpacetimeSamples::sample(D, 12, 0.5, 64, [](const Vec3& x, double) { return cplx{std::exp(-dot(x, x)), 0.0}; }),
                    NotASolutionError);
    CHECK_THROWS_AS(SpacetimeSamples::sample(D, 12, 0.5, 32, [](const Vec3&, double) { return cplx{1.0, 0.0}; }), DomainError);
  }
}

TEST_CASE("assembly and damping basics") {
  FrequencyStack empty;
  CHECK(assemble_v1(empty, {0.1, 0.2, 0.3}, 0.4) == cplx{0.0, 0.0});
  CHECK(damp_and_propagate(empty, 0.1, {0.1, 0.2, 0.3}, 0.4) == cplx{0.0, 0.0});

  FrequencyStack s = hand_stack(-4.0, 3, 7);
  s.layers[0].weight = 0.75;
  const Vec3 x{0.3, -0.2, 0.5};
  const cplx psi = s.layers[0].psi(x);
  CHECK(std::abs(assemble_v1(s, x, 0.3) - 0.75 * std::exp(I * (-4.0 * 0.3)) * psi) < 1e-14);
  CHECK(std::abs(damp_and_propagate(s, 0.2, x, 0.0) - assemble_v1(s, x, 0.0) * std::exp(-0.2 * dot(x, x))) < 1e-13);
  CHECK_THROWS_AS(damp_and_propagate(s, 0.0, x, 0.1), DomainError);
}

TEST_CASE("closed-form propagation agrees with the FFT propagator") {
  for (double tau : {-4.0, 1.0}) {
    CAPTURE(tau);
    const FrequencyStack s = hand_stack(tau, 3, 11);
    const double delta = 0.5, t = 0.1;
    const BoxSpec box = BoxSpec::cube(16.0, 64, true);
    const auto u0 = ComplexField::sample(box, [&](const Vec3& x) { return damp_and_propagate(s, delta, x, 0.0); });
    const auto ut = evolve::linear_propagate(u0, t);
    double worst = 0.0, scale = 0.0;
    const auto n = box.points[0];
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j)
        for (int k = 0; k < n; ++k) {
          const Vec3 x = ut.point(i, j, k);
          if (dot(x, x) > 1.0) continue;
          worst = std::max(worst, std::abs(ut(i, j, k) - damp_and_propagate(s, delta, x, t)));
          scale = std::max(scale, std::abs(ut(i, j, k)));
        }
    CHECK(scale > 0.1);
    CHECK(worst < 1e-6);
  }
}

TEST_CASE("single-mode ground truth end to end") {
  const auto& r = single_mode_run();
  const auto& rep = r.report;
  CHECK(r.datum.stack.layers.size() == 1);
  CHECK(rep.relative_error <= 0.05);
  CHECK(rep.target_met);
  CHECK(rep.v1_relative_error < rep.relative_error);
  CHECK(std::isfinite(rep.datum_l2_norm));
  CHECK(rep.datum_l2_norm > 0.0);
  CHECK(rep.budgets.contains("tower_bound"));
  // delta halving trace decreases until the stopping step
  for (std::size_t k = 1; k < rep.trace.size(); ++k) CHECK(rep.trace[k].relative_error < rep.trace[k - 1].relative_error);
  const auto json = rep.to_json();
  CHECK(json.at("delta").get<double>() == rep.delta);
}

TEST_CASE("damping error is first order in delta") {
  const auto& stack = single_mode_run().datum.stack;
  const helmholtz::VoxelSet pts = helmholtz::VoxelSet::build(Domain::ball({0, 0, 0}, 1.0), 8);
  auto damping_error = [&](double delta) {
    double m = 0.0;
    for (const auto& x : pts.nodes())
      for (double t : {-0.45, -0.2, 0.1, 0.35}) m = std::max(m, std::abs(damp_and_propagate(stack, delta, x, t) - assemble_v1(stack, x, t)));
    return m;
  };
  const double ratio = damping_error(0.01) / damping_error(0.005);
  CHECK(ratio == doctest::Approx(2.0).epsilon(0.15));
}

TEST_CASE("v1 solves the free equation up to the per-layer residual") {
  const auto& stack = single_mode_run().datum.stack;
  double worst_layer = 0.0;
  for (const auto& l : stack.layers) worst_layer = std::max(worst_layer, l.helmholtz_residual);
  const auto set = helmholtz::VoxelSet::build(Domain::ball({0, 0, 0}, 1.0), 16);
  const int M = 16;
  const double dt = 1.0 / M;
  std::vector<std::vector<cplx>> slices(M);
  for (int j = 0; j < M; ++j) slices[j] = set.sample([&](const Vec3& x) { return assemble_v1(stack, x, -0.5 + j * dt); });
  double num = 0.0, dt_norm = 0.0, lap_norm = 0.0;
  for (int j = 1; j + 1 < M; ++j) {
    const auto lap = set.laplacian(slices[j]);
    for (std::size_t i : set.interior()) {
      const cplx vt = (slices[j + 1][i] - slices[j - 1][i]) / (2 * dt);
      num += std::norm(I * vt + lap[i]);
      dt_norm += std::norm(vt);
      lap_norm += std::norm(lap[i]);
    }
  }
  const double residual = std::sqrt(num) / (std::sqrt(dt_norm) + std::sqrt(lap_norm));
  CHECK(residual <= 10 * worst_layer);
}

TEST_CASE("zero data give the zero datum") {
  const auto S = SpacetimeSamples::sample(Domain::ball({0, 0, 0}, 1.0), 12, 0.5, 64, [](const Vec3&, double) { return cplx{}; });
  const auto r = build_schwartz_datum(S, 0.05);
  CHECK(r.datum.stack.empty());
  CHECK(r.report.relative_error == 0.0);
  CHECK(r.report.datum_l2_norm == 0.0);
  CHECK(r.datum.initial({0.2, 0.1, 0.0}) == cplx{0.0, 0.0});
}
