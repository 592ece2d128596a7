#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "oracles.hpp"
#include "vortexlab/errors.hpp"
#include "vortexlab/helmholtz.hpp"
#include "vortexlab/specfun.hpp"

using namespace vortexlab;
using namespace vortexlab::helmholtz;

namespace {

constexpr double kPi = std::numbers::pi;

const Domain kUnitBall = Domain::ball({0, 0, 0}, 1.0);
const Domain kSourceBall = Domain::ball({3, 0, 0}, 0.3);

std::vector<cplx> random_vector(std::size_t n, unsigned seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> g;
  std::vector<cplx> v(n);
  for (auto& x : v) x = {g(rng), g(rng)};
  return v;
}

}  // namespace

TEST_CASE("fundamental solution: distributional identity") {
  const oracles::Bump bumps[] = {{{0, 0, 0}, 0.5}, {{0.3, 0.0, 0.1}, 0.6}, {{0.0, -0.2, 0.25}, 0.4}};
  for (double tau : {-4.0, 0.0, 9.0}) {
    const auto g = fundamental_solution({tau});
    for (const auto& b : bumps) {
      const double lhs = oracles::distributional_pairing(g, b);
      CHECK(std::abs(lhs - b({0, 0, 0})) <= 1e-3 * b({0, 0, 0}));
    }
  }
}

TEST_CASE("fundamental solution: closed forms and decay") {
  const auto g0 = fundamental_solution({0.0});
  CHECK(g0.normalization() == doctest::Approx(-1.0 / (4 * kPi)));
  const auto g9 = fundamental_solution({9.0});
  for (double r : {0.1, 0.5, 2.0, 7.0}) {
    CHECK(g9.radial(r) == doctest::Approx(-std::exp(-3 * r) / (4 * kPi * r)).epsilon(1e-14));
    for (double tau : {-25.0, -1.0, 0.0, 1.0, 9.0}) {
      const auto g = fundamental_solution({tau});
      CHECK(g.radial(r) == doctest::Approx(g.radial_bessel(r)).epsilon(1e-12));
    }
  }
  CHECK_THROWS_AS(g9({0, 0, 0}), DomainError);

  for (double tau : {-4.0, 0.0, 9.0}) {
    const auto g = fundamental_solution({tau});
    const double s = std::sqrt(g.frequency().plus());
    double lo = 1e300, hi = 0.0;
    for (double r = 1.0; r <= 10.0; r += 0.01) {
      const double h = r * std::exp(s * r) * std::abs(g.radial(r));
      hi = std::max(hi, h);
      if (tau >= 0) lo = std::min(lo, h);
    }
    CHECK(hi <= 1.0 / (4 * kPi) + 1e-12);
    if (tau >= 0) CHECK(hi / lo == doctest::Approx(1.0));
  }
}

TEST_CASE("frequency parts") {
  Frequency f{-3.0};
  CHECK(f.plus() == 0.0);
  CHECK(f.minus() == 3.0);
  CHECK(f.plus() - f.minus() == f.tau);
}

TEST_CASE("source operator: geometry, columns, adjoint, spectrum") {
  CHECK_THROWS_AS(SourceOperator::build(kUnitBall, Domain::ball({1.5, 0, 0}, 0.6), {1.0}), GeometryError);
  CHECK_THROWS_AS(SourceOperator::build(kUnitBall, kSourceBall, {1.0}, {3, 8}), DomainError);

  const auto op = SourceOperator::build(kUnitBall, kSourceBall, {-4.0});
  const auto& a = op.matrix();
  const auto& d = op.domain();
  const auto& y = op.sources();
  for (std::size_t j : {std::size_t{0}, y.size() / 2}) {
    for (std::size_t i = 0; i < d.size(); i += 97) {
      CHECK(a(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) ==
            doctest::Approx(op.green()(d.nodes()[i] - y.nodes()[j]) * y.weights()[j]).epsilon(1e-13));
    }
  }

  const auto f = random_vector(y.size(), 3);
  const auto g = random_vector(d.size(), 4);
  const cplx lhs = op.inner_domain(op.apply(f), g);
  const cplx rhs = op.inner_source(f, op.adjoint(g));
  CHECK(std::abs(lhs - rhs) <= 1e-12 * std::abs(lhs));

  const auto& s = op.singular_values();
  for (Eigen::Index k = 1; k < s.size(); ++k) CHECK(s[k] <= s[k - 1]);
  CHECK(s[s.size() - 1] >= 0.0);

  const auto op1 = SourceOperator::build(kUnitBall, Domain::ball({3, 0, 0}, 0.1), {1.0});
  CHECK(op1.singular_values()[19] / op1.singular_values()[0] < 1e-8);

  // A f_k = alpha_k phi_k
  const Eigen::MatrixXd fk = op1.source_modes();
  const Eigen::MatrixXd pk = op1.domain_modes();
  for (int k : {0, 3, 10}) {
    const Eigen::VectorXd lhs_k = op1.matrix() * fk.col(k);
    CHECK((lhs_k - op1.singular_values()[k] * pk.col(k)).norm() <= 1e-12 * op1.singular_values()[0] * pk.col(k).norm());
  }
}

TEST_CASE("convolution bound with a single constant across tau") {
  double c = 0.0;
  for (double tau : {-25.0, -1.0, 0.0, 1.0, 25.0}) {
    const auto op = SourceOperator::build(kUnitBall, kSourceBall, {tau}, {10, 6});
    const double norm_op = op.singular_values()[0];
    for (unsigned seed = 0; seed < 4; ++seed) {
      const auto f = random_vector(op.sources().size(), seed);
      const double ratio = op.domain().l2_norm(op.apply(f)) / op.sources().l2_norm(f);
      CHECK(ratio <= norm_op * (1 + 1e-12));
    }
    c = std::max(c, norm_op);
  }
  CHECK(std::isfinite(c));
  CHECK(c > 0.0);
}

TEST_CASE("runge approximation of an exterior point source") {
  const Vec3 x0{2, 0, 0};
  const auto op = SourceOperator::build(kUnitBall, kSourceBall, {-4.0});
  const auto phi = op.domain().sample([&](const Vec3& x) { return cplx{op.green()(x - x0), 0.0}; });
  const auto res = runge_approximate(op, phi, 1e-2);
  CHECK(res.report.relative_error <= 1e-2);
  CHECK(res.report.source_norm * res.report.alpha <= res.report.input_norm);
  CHECK(res.report.modes_used > 0);

  // w = A F and the error trace is monotone in alpha
  const auto w = op.apply(res.sources);
  for (std::size_t i = 0; i < w.size(); i += 50) CHECK(std::abs(w[i] - res.field[i]) < 1e-12 * (1 + std::abs(w[i])));
  for (std::size_t t = 1; t < res.report.trace.size(); ++t)
    CHECK(res.report.trace[t].relative_error <= res.report.trace[t - 1].relative_error + 1e-15);

  RungeOptions opts;
  opts.interior = kUnitBall.shrunk(0.2);
  const auto inner = runge_approximate(op, phi, 1e-2, opts);
  REQUIRE(inner.report.relative_error_interior.has_value());
  CHECK(*inner.report.relative_error_interior <= 1e-2);
  CHECK(inner.report.alpha >= res.report.alpha * (1 - 1e-12));

  const auto j = res.report.to_json();
  CHECK(j.contains("budgets"));
  CHECK(j["trace"].size() == res.report.trace.size());
}

TEST_CASE("runge approximation: zero data and failures") {
  const auto op = SourceOperator::build(kUnitBall, kSourceBall, {1.0}, {10, 6});
  std::vector<cplx> zero(op.domain().size(), cplx{0, 0});
  const auto res = runge_approximate(op, zero, 0.1);
  CHECK(res.report.relative_error == 0.0);
  for (const auto& f : res.sources) CHECK(f == cplx{0, 0});

  const auto bad = op.domain().sample([](const Vec3& x) { return cplx{dot(x, x) + 1.0, 0.0}; });
  CHECK_THROWS_AS(runge_approximate(op, bad, 0.1), NotASolutionError);

  const auto phi = op.domain().sample([&](const Vec3& x) { return cplx{op.green()(x - Vec3{2, 0, 0}), 0.0}; });
  try {
    runge_approximate(op, phi, 1e-13);
    FAIL("expected unreachable tolerance");
  } catch (const UnreachableToleranceError& e) {
    CHECK(e.achieved() > 1e-13);
  }
  CHECK_THROWS_AS(runge_approximate(op, phi, 1.5), DomainError);
}

TEST_CASE("spherical truncation: plant and recover") {
  const double c = 0.7;
  const Frequency tau{1.0};
  auto w = [&](const Vec3& x) {
    const double r = norm(x);
    return cplx{c * specfun::bessel_real(specfun::BesselKind::I, 0.5, r) / std::sqrt(r) / std::sqrt(4 * kPi), 0.0};
  };
  const auto psi = spherical_truncate(w, tau, 4);
  CHECK(std::abs(psi.bessel_coefficient(0, 0) - c) < 1e-8);
  for (int l = 1; l <= 4; ++l)
    for (int m = -l; m <= l; ++m) CHECK(std::abs(psi.coefficient(l, m)) < 1e-10);
  CHECK(std::abs(psi({0.2, 0.3, -0.1}) - w({0.2, 0.3, -0.1})) < 1e-10);

  // tau = 0, linear polynomial 2x - y + 3z: R_1m = sqrt(3/4pi) (y, z, x) for m = -1, 0, 1
  auto lin = [](const Vec3& x) { return cplx{2 * x[0] - x[1] + 3 * x[2], 0.0}; };
  const auto p = spherical_truncate(lin, {0.0}, 2);
  const double n1 = std::sqrt(3.0 / (4 * kPi));
  CHECK(std::abs(p.coefficient(1, 1) - 2.0 / n1) < 1e-10);
  CHECK(std::abs(p.coefficient(1, -1) + 1.0 / n1) < 1e-10);
  CHECK(std::abs(p.coefficient(1, 0) - 3.0 / n1) < 1e-10);
  CHECK(std::abs(p.coefficient(0, 0)) < 1e-10);

  CHECK_THROWS_AS(spherical_truncate(lin, {0.0}, 21), DomainError);
}

TEST_CASE("spherical truncation tail decreases on a Runge output") {
  const auto op = SourceOperator::build(kUnitBall, kSourceBall, {-4.0});
  const Vec3 x0{2, 0, 0};
  const auto phi = op.domain().sample([&](const Vec3& x) { return cplx{op.green()(x - x0), 0.0}; });
  const auto res = runge_approximate(op, phi, 1e-2);
  auto w = [&](const Vec3& x) { return op.extend(res.sources, x); };
  double prev = 1e300;
  for (int l0 : {2, 4, 8, 16}) {
    const auto psi = spherical_truncate(w, {-4.0}, l0);
    std::vector<cplx> diff(op.domain().size());
    for (std::size_t i = 0; i < diff.size(); ++i) diff[i] = psi(op.domain().nodes()[i]) - res.field[i];
    const double err = op.domain().l2_norm(diff);
    CHECK(err < prev);
    prev = err;
  }
  CHECK(prev < 1e-3 * op.domain().l2_norm(res.field));
}

TEST_CASE("spherical expansion solves the equation to second order") {
  const Frequency tau{-3.0};
  std::vector<cplx> coeffs(specfun::SphericalIndex::count(3));
  for (std::size_t i = 0; i < coeffs.size(); ++i) coeffs[i] = {std::cos(1.0 + i), std::sin(2.0 * i)};
  const SphericalExpansion psi(tau, 3, coeffs);
  auto residual = [&](double h) {
    double worst = 0.0;
    for (const Vec3& x : {Vec3{0.1, 0.2, 0.3}, Vec3{-0.5, 0.4, 0.0}, Vec3{0.0, 0.0, 0.0}}) {
      cplx lap = -6.0 * psi(x);
      for (int a = 0; a < 3; ++a) {
        Vec3 e{0, 0, 0};
        e[a] = h;
        lap += psi(x + e) + psi(x - e);
      }
      lap /= h * h;
      worst = std::max(worst, std::abs(lap - tau.tau * psi(x)));
    }
    return worst / psi.coefficient_norm();
  };
  const double e1 = residual(0.02), e2 = residual(0.01);
  CHECK(std::log2(e1 / e2) >= 1.8);
}

TEST_CASE("global norms") {
  const SphericalExpansion zero({-1.0}, 0, {cplx{0, 0}});
  const auto z = global_norms(zero, 20.0);
  CHECK(z.triple_seminorm == 0.0);
  CHECK(z.weighted_sup == 0.0);

  // sin r / r = sqrt(4 pi) E_0(-r^2) Y_00
  const SphericalExpansion sinc({-1.0}, 0, {cplx{std::sqrt(4 * kPi), 0}});
  CHECK(std::abs(sinc({0.0, 1.0, 0.0}) - std::sin(1.0)) < 1e-14);
  const double s50 = global_norms(sinc, 50.0).triple_seminorm;
  const double s100 = global_norms(sinc, 100.0).triple_seminorm;
  CHECK(std::abs(s50 / s100 - 1.0) < 0.05);
  CHECK(s100 == doctest::Approx(std::sqrt(2 * kPi)).epsilon(0.02));

  const SphericalExpansion grow({1.0}, 0, {cplx{1.0, 0}});
  const double sup = global_norms(grow, 20.0).weighted_sup;
  CHECK(std::isfinite(sup));
  // <r> e^{-r} sinh(r)/r falls from 1 at the origin to the plateau 1/2 set by the I_{1/2} growth
  CHECK(sup == doctest::Approx(1.0 / std::sqrt(4 * kPi)).epsilon(1e-12));
  const double plateau = weighted_sup_norm(grow, 60.0);
  const auto f = grow.radial_factors(60.0);
  const double tail = std::sqrt(1.0 + 3600.0) * std::exp(-60.0) * std::abs(f[0]) / std::sqrt(4 * kPi);
  CHECK(tail == doctest::Approx(0.5 / std::sqrt(4 * kPi)).epsilon(1e-3));
  CHECK(plateau == doctest::Approx(sup));

  CHECK_THROWS_AS(global_norms(SphericalExpansion({0.0}, 0, {cplx{1, 0}}), 20.0), DomainError);
  CHECK_THROWS_AS(global_norms(sinc, 5.0), DomainError);
  CHECK(weighted_sup_norm(SphericalExpansion({0.0}, 0, {cplx{1, 0}}), 10.0) > 0.0);
}

TEST_CASE("three-ball probe") {
  const SphericalExpansion sinc({-1.0}, 0, {cplx{std::sqrt(4 * kPi), 0}});
  const SphericalExpansion zero({-1.0}, 0, {cplx{0, 0}});
  const std::vector<SphericalExpansion> sols{sinc, zero};
  const auto r = stability_probe(sols, {0.5, 1.0, 2.0});
  CHECK(r.holds);
  CHECK(r.excluded == 1);
  CHECK(r.theta > 0.0);
  CHECK(r.theta < 1.0);
  CHECK(r.rows.size() == 1);

  const auto a = stability_probe(Frequency{-25.0}, {0.5, 1.0, 2.0}, 16, 11);
  const auto b = stability_probe(Frequency{-100.0}, {0.5, 1.0, 2.0}, 16, 11);
  CHECK(a.holds);
  CHECK(b.holds);
  MESSAGE("fitted C at tau=-25: " << a.constant << ", tau=-100: " << b.constant);
  CHECK_THROWS_AS(stability_probe(sols, {1.0, 0.5, 2.0}), DomainError);
}
