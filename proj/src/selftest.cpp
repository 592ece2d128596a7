// Fast invariant checks behind `vortexlab selftest`. Each check records the
// measured quantity next to its threshold so failures are diagnosable from
// the JSON alone.

#include <cmath>
#include <functional>
#include <numbers>
#include <random>

#include "vortexlab/cli.hpp"
#include "vortexlab/config.hpp"
#include "vortexlab/errors.hpp"
#include "vortexlab/evolve.hpp"
#include "vortexlab/helmholtz.hpp"
#include "vortexlab/io.hpp"
#include "vortexlab/kernels.hpp"
#include "vortexlab/quadrature.hpp"
#include "vortexlab/scenarios.hpp"
#include "vortexlab/specfun.hpp"
#include "vortexlab/vortex.hpp"

namespace vortexlab::cli {

namespace {

constexpr double kPi = std::numbers::pi;
const cplx I{0.0, 1.0};

class Suite {
 public:
  // value <= threshold passes
  void check(const std::string& name, const std::function<double()>& measure, double threshold) {
    double value = 0.0;
    bool ok = false;
    std::string error;
    try {
      value = measure();
      ok = std::isfinite(value) && value <= threshold;
    } catch (const std::exception& e) {
      error = e.what();
    }
    nlohmann::json j = {{"name", name}, {"passed", ok}, {"value", value}, {"threshold", threshold}};
    if (!error.empty()) j["error"] = error;
    report.checks.push_back(j);
    (ok ? report.passed : report.failed) += 1;
  }

  SelftestReport report;
};

double rel(cplx a, cplx b) { return std::abs(a - b) / std::max(1e-300, std::abs(b)); }

// int G (Lap - tau) phi for a Gaussian bump centred at c, in spherical coordinates
double pairing_error(double tau) {
  const Vec3 c{0.3, 0.0, 0.1};
  const double s = 0.6;
  const auto g = helmholtz::fundamental_solution({tau});
  const auto radial = composite_gauss_legendre(48, 20, 0.0, norm(c) + 7 * s);
  const auto sphere = SphereRule::for_degree(40);
  double acc = 0.0;
  for (std::size_t i = 0; i < radial.nodes.size(); ++i) {
    const double r = radial.nodes[i];
    double shell = 0.0;
    for (std::size_t q = 0; q < sphere.size(); ++q) {
      const Vec3 d = r * sphere.directions[q] - c;
      const double phi = std::exp(-dot(d, d) / (s * s));
      shell += sphere.weights[q] * ((4 * dot(d, d) / (s * s * s * s) - 6 / (s * s)) * phi - tau * phi);
    }
    acc += radial.weights[i] * r * r * g.radial(r) * shell;
  }
  const double phi0 = std::exp(-dot(c, c) / (s * s));
  return std::abs(acc - phi0) / phi0;
}

}  // namespace

SelftestReport selftest(std::uint64_t seed, int stability_trials) {
  Suite s;
  using specfun::BesselKind;

  // specfun
  s.check("bessel: J(iz) = i^nu I(z)", [] {
    double worst = 0.0;
    for (double nu : {0.0, 1.0, 2.5})
      for (double z : {0.5, 2.0, 7.0})
        worst = std::max(worst, rel(specfun::bessel(BesselKind::J, nu, cplx{0, z}),
                                    std::pow(I, nu) * specfun::bessel(BesselKind::I, nu, z)));
    return worst;
  }, 1e-12);
  s.check("bessel: I_1/2(1) closed form", [] {
    return std::abs(specfun::bessel_real(BesselKind::I, 0.5, 1.0) - std::sqrt(2 / kPi) * std::sinh(1.0));
  }, 1e-14);
  s.check("spherical harmonics: Gram matrix l <= 8", [] {
    const auto rule = SphereRule::for_degree(8);
    const int n = specfun::SphericalIndex::count(8);
    std::vector<double> gram(static_cast<std::size_t>(n * n), 0.0);
    for (std::size_t q = 0; q < rule.size(); ++q) {
      const auto y = specfun::sph_harm_all(8, rule.directions[q]);
      for (int a = 0; a < n; ++a)
        for (int b = 0; b < n; ++b)
          gram[static_cast<std::size_t>(a * n + b)] += rule.weights[q] * y[static_cast<std::size_t>(a)] * y[static_cast<std::size_t>(b)];
    }
    double worst = 0.0;
    for (int a = 0; a < n; ++a)
      for (int b = 0; b < n; ++b) worst = std::max(worst, std::abs(gram[static_cast<std::size_t>(a * n + b)] - (a == b)));
    return worst;
  }, 1e-9);
  s.check("energy integral: closed form at nu = 1/2", [] {
    const double exact = (std::sinh(2.0) - 2.0) / (2 * kPi);
    return std::abs(specfun::besseli_energy(0.5, 1.0, 1.0).value - exact) / exact;
  }, 1e-8);
  s.check("energy integral: |alpha|^2 I monotone (count of decreases)", [] {
    double prev = 0.0, bad = 0.0;
    for (int k = 0; k < 20; ++k) {
      const double a = 0.1 * std::pow(1.3, k);
      const double v = a * a * specfun::besseli_energy(1.5, a, 1.0).value;
      if (v <= prev) bad += 1;
      prev = v;
    }
    return bad;
  }, 0.0);

  // helmholtz
  for (double tau : {-4.0, 0.0, 9.0})
    s.check("fundamental solution: distributional identity, tau = " + io::format_number(tau),
            [tau] { return pairing_error(tau); }, 1e-3);
  s.check("runge: exterior point source at tau = -4", [] {
    using namespace helmholtz;
    const auto op = SourceOperator::build(Domain::ball({0, 0, 0}, 1.0), Domain::ball({3, 0, 0}, 0.3), {-4.0}, {12, 6});
    const auto phi = op.domain().sample([&](const Vec3& x) { return cplx{op.green()(x - Vec3{2, 0, 0}), 0.0}; });
    const auto r = runge_approximate(op, phi, 1e-2);
    if (r.report.source_norm * r.report.alpha > r.report.input_norm * (1 + 1e-12)) return 1.0;
    return r.report.relative_error;
  }, 1e-2);
  s.check("three-ball probe holds on random expansions", [&] {
    const auto st = helmholtz::stability_probe({1.0}, {0.5, 1.0, 1.5}, stability_trials, seed);
    return st.holds ? 0.0 : 1.0;
  }, 0.0);

  // kernels
  s.check("kernels: serial and parallel agree", [&] {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> g;
    std::vector<cplx> a(20000), b;
    for (auto& z : a) z = {g(rng), g(rng)};
    b = a;
    kernels::serial::nonlinear_phase(a, 1.0, 1e-2, kernels::Nonlinearity::GrossPitaevskii);
    kernels::parallel::nonlinear_phase(b, 1.0, 1e-2, kernels::Nonlinearity::GrossPitaevskii);
    // elementwise kernels agree bitwise; chunked sums only to roundoff
    const double s0 = kernels::serial::sum_abs2(a);
    return kernels::serial::max_abs_diff(a, b) + std::abs(s0 - kernels::parallel::sum_abs2(a)) / s0;
  }, 1e-13);

  // evolution
  const BoxSpec box = BoxSpec::cube(8.0, 16, true);
  s.check("gp: u = 1 is stationary", [&] {
    evolve::EvolutionConfig cfg;
    cfg.dt = 1e-2;
    cfg.t_end = 0.1;
    const ComplexField one(box, 1.0);
    const auto r = evolve::evolve(one, cfg);
    return max_abs_difference(r.snapshots.back(), one) + std::abs(r.series.back().gl_energy);
  }, 1e-13);
  s.check("gp: mass conserved per step", [&] {
    evolve::EvolutionConfig cfg;
    cfg.dt = 1e-3;
    const auto u0 = ComplexField::sample(box, [](const Vec3& x) { return 1.0 - 0.5 * std::exp(-dot(x, x)) + 0.1 * I * x[0]; });
    ComplexField u = u0;
    evolve::SplitStepSolver solver(box, cfg);
    double worst = 0.0;
    for (int n = 0; n < 10; ++n) {
      const double m0 = u.mass();
      solver.step(u, n);
      worst = std::max(worst, std::abs(u.mass() - m0) / m0);
    }
    return worst;
  }, 1e-10);
  s.check("linear propagator is unitary", [&] {
    const auto u0 = ComplexField::sample(box, [](const Vec3& x) { return std::exp(-dot(x, x)) * (1.0 + I * x[1]); });
    return std::abs(evolve::linear_propagate(u0, 0.3).mass() - u0.mass()) / u0.mass();
  }, 1e-12);
  s.check("gauge lift keeps the zero set bitwise", [&] {
    const auto u = ComplexField::sample(box, [](const Vec3& x) { return cplx{std::round(x[0]), std::round(x[1] * 2.0)}; });
    const auto lifted = evolve::gauge_lift(u, 0.7, 0.3);
    return evolve::zero_indicator(u) == evolve::zero_indicator(lifted) ? 0.0 : 1.0;
  }, 0.0);
  s.check("rescaling maps zeros exactly", [] {
    const auto p = scenarios::preset("hyperbolic-exchange");
    const evolve::SpaceTimeFn ut = [&](const Vec3& x, double t) { return p.solution(x, t); };
    const auto u = evolve::rescale_gp(ut, 0.25);
    double worst = 0.0;
    for (const Vec3& x : {Vec3{0.2, 0.2, 0.0}, Vec3{-0.3, 0.3, 0.0}})  // zeros of u~ at t = 0
      worst = std::max(worst, std::abs(u(0.5 * x, 0.0)) + std::abs(u(0.5 * x, 0.25 * 0.1) - ut(x, 0.1)));
    return worst;
  }, 0.0);
  s.check("torus datum is 2 pi-periodic", [] {
    const std::vector<Vec3> nodes{{0.5, 0.0, 0.0}, {0.25, -0.75, 1.0}};
    const std::vector<cplx> w{0.3, cplx{0.1, 0.2}};
    const auto d = evolve::rationalize_nodes(nodes, w, 8);
    const Vec3 x{0.3, -0.2, 1.1};
    return std::abs(d.torus({x[0] + 2 * kPi, x[1] - 2 * kPi, x[2]}, 0.4 + 2 * kPi) - d.torus(x, 0.4));
  }, 1e-10);

  // scenarios and zero sets
  s.check("presets solve the free Schrodinger equation", [] {
    double worst = 0.0;
    for (const auto& name : scenarios::preset_names()) worst = std::max(worst, std::abs(scenarios::preset(name).solution.residual()));
    return worst;
  }, 1e-12);
  s.check("exchange: two components at t = -0.1, one at t = 0", [] {
    const auto p = scenarios::preset("hyperbolic-exchange");
    const BoxSpec b = scenarios::scenario_box(32);
    auto count = [&](double t) {
      vortex::ExtractionOptions o;
      o.evaluator = vortex::analytic(p.solution, t);
      return static_cast<double>(vortex::extract_zero_set(scenarios::sample(p.solution, b, t), t, o).count());
    };
    return std::abs(count(-0.1) - 2.0) + std::abs(count(0.0) - 1.0);
  }, 0.0);
  s.check("empty field has no vortices", [] {
    const ComplexField one(scenarios::scenario_box(16), 1.0);
    return static_cast<double>(vortex::extract_zero_set(one, 0.0).count());
  }, 0.0);

  // artifacts and configuration
  s.check("snapshot round trip (float32 payload)", [&] {
    const auto u = ComplexField::sample(box, [](const Vec3& x) { return cplx{x[0], -x[2]}; });
    const auto back = io::decode_snapshot(io::encode_snapshot(u, 0.125), {{"box", io::box_json(box)}});
    return max_abs_difference(u, back.field) + std::abs(back.t - 0.125);
  }, 1e-6);
  s.check("config: unknown keys rejected, empty accepted", [] {
    double bad = 0.0;
    try {
      config::parse(R"({"gp_evolve": {"dtt": 0.1}})");
      bad += 1;
    } catch (const ConfigError&) {
    }
    config::parse("{}");
    return bad;
  }, 0.0);

  return s.report;
}

}  // namespace vortexlab::cli
