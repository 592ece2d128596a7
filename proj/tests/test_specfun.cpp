#include <doctest.h>

#include <cmath>
#include <numbers>

#include "vortexlab/errors.hpp"
#include "vortexlab/quadrature.hpp"
#include "vortexlab/specfun.hpp"

using namespace vortexlab;
using namespace vortexlab::specfun;

namespace {

constexpr double kPi = std::numbers::pi;

// Ascending series in long double; sign = -1 for J, +1 for I.
double series_oracle(double nu, double x, int sign) {
  long double half = x / 2.0L;
  long double term = std::pow(half, static_cast<long double>(nu)) / std::tgamma(static_cast<long double>(nu) + 1.0L);
  long double sum = term;
  for (int k = 1; k < 200; ++k) {
    term *= sign * half * half / (static_cast<long double>(k) * (k + nu));
    sum += term;
    if (std::abs(term) < 1e-22L * std::abs(sum)) break;
  }
  return static_cast<double>(sum);
}

// Hankel asymptotic expansion of J_nu(x) for large x.
double hankel_oracle(double nu, double x) {
  const double mu = 4.0 * nu * nu;
  double p = 0.0, q = 0.0;
  double term = 1.0;
  for (int k = 0; k < 30; ++k) {
    if (k > 0) term *= (mu - std::pow(2.0 * k - 1.0, 2)) / (k * 8.0 * x);
    if (std::abs(term) < 1e-18) break;
    if (k % 2 == 0) {
      p += ((k / 2) % 2 == 0 ? 1.0 : -1.0) * term;
    } else {
      q += (((k - 1) / 2) % 2 == 0 ? 1.0 : -1.0) * term;
    }
  }
  const double chi = x - (0.5 * nu + 0.25) * kPi;
  return std::sqrt(2.0 / (kPi * x)) * (p * std::cos(chi) - q * std::sin(chi));
}

}  // namespace

TEST_CASE("bessel matches the ascending series oracle") {
  for (double nu : {0.0, 0.5, 1.0, 2.5, 7.0}) {
    for (double x : {0.1, 0.7, 2.0, 5.0, 9.5}) {
      const double j = bessel_real(BesselKind::J, nu, x);
      const double i = bessel_real(BesselKind::I, nu, x);
      CHECK(std::abs(j - series_oracle(nu, x, -1)) <= 1e-10 * std::max(std::abs(j), 1e-3));
      CHECK(std::abs(i / series_oracle(nu, x, 1) - 1.0) < 1e-10);
    }
  }
}

TEST_CASE("bessel matches the Hankel asymptotic oracle") {
  for (double nu : {0.0, 1.0, 2.5}) {
    for (double x : {40.0, 60.0, 120.0}) {
      const double envelope = std::sqrt(2.0 / (kPi * x));
      CHECK(std::abs(bessel_real(BesselKind::J, nu, x) - hankel_oracle(nu, x)) < 1e-10 * envelope);
    }
  }
}

TEST_CASE("bessel examples") {
  CHECK(bessel(BesselKind::J, 0.0, 0.0) == cplx{1.0, 0.0});
  CHECK(bessel_real(BesselKind::I, 0.5, 1.0) == doctest::Approx(std::sqrt(2.0 / kPi) * std::sinh(1.0)).epsilon(1e-13));
  const cplx j = bessel(BesselKind::J, 1.0, cplx{0.0, 2.0});
  CHECK(std::abs(j - cplx{0.0, series_oracle(1.0, 2.0, 1)}) < 1e-14);
}

TEST_CASE("J(iz) = i^nu I(z) and I(iz) = i^nu J(z)") {
  for (double nu : {0.0, 0.5, 1.0, 3.5, 10.0}) {
    for (double y : {0.3, 1.0, 4.0, 15.0}) {
      const cplx phase = std::polar(1.0, 0.5 * kPi * nu);
      CHECK(std::abs(bessel(BesselKind::J, nu, {0.0, y}) - phase * bessel_real(BesselKind::I, nu, y)) <=
            1e-15 * std::abs(bessel_real(BesselKind::I, nu, y)));
      CHECK(std::abs(bessel(BesselKind::I, nu, {0.0, y}) - phase * bessel_real(BesselKind::J, nu, y)) <= 1e-15);
    }
  }
}

TEST_CASE("Wronskian I K") {
  for (double nu : {0.0, 0.5, 1.0, 2.5}) {
    for (double z = 0.1; z <= 20.0; z *= 1.7) {
      const double w = bessel_real(BesselKind::I, nu, z) * bessel_real(BesselKind::K, nu + 1, z) +
                       bessel_real(BesselKind::I, nu + 1, z) * bessel_real(BesselKind::K, nu, z);
      CHECK(std::abs(w * z - 1.0) < 1e-9);
    }
  }
}

TEST_CASE("bessel half-integer closed forms for the second kind") {
  for (double x : {0.2, 1.0, 3.0, 11.0}) {
    CHECK(bessel_real(BesselKind::K, 0.5, x) == doctest::Approx(std::sqrt(kPi / (2 * x)) * std::exp(-x)).epsilon(1e-13));
    CHECK(bessel_real(BesselKind::Y, 0.5, x) == doctest::Approx(-std::sqrt(2 / (kPi * x)) * std::cos(x)).epsilon(1e-12));
  }
}

TEST_CASE("bessel errors") {
  CHECK_THROWS_AS(bessel(BesselKind::Y, 0.0, 0.0), DomainError);
  CHECK_THROWS_AS(bessel(BesselKind::K, 1.0, 0.0), DomainError);
  CHECK_THROWS_AS(bessel(BesselKind::J, 61.0, 1.0), RangeError);
  CHECK_THROWS_AS(bessel(BesselKind::J, 1.0, cplx{1.0, 1.0}), DomainError);
  CHECK_NOTHROW(bessel(BesselKind::J, 61.0, 1.0, 80.0));
}

TEST_CASE("spherical harmonics: constant and Gram matrix") {
  CHECK(sph_harm({0, 0}, {0.0, 0.0, 1.0}) == doctest::Approx(1.0 / std::sqrt(4.0 * kPi)));
  CHECK_THROWS_AS(sph_harm({1, 0}, {0.0, 0.0, 1.1}), DomainError);

  for (int l_max : {8, 20}) {
    const SphereRule rule = SphereRule::for_degree(l_max);
    const int count = SphericalIndex::count(l_max);
    std::vector<std::vector<double>> table;
    for (const auto& d : rule.directions) table.push_back(sph_harm_all(l_max, d));
    double worst = 0.0;
    for (int a = 0; a < count; ++a)
      for (int b = a; b < count; ++b) {
        double g = 0.0;
        for (std::size_t q = 0; q < rule.size(); ++q) g += rule.weights[q] * table[q][a] * table[q][b];
        worst = std::max(worst, std::abs(g - (a == b ? 1.0 : 0.0)));
      }
    CHECK(worst < 1e-9);
  }
}

TEST_CASE("spherical harmonics are eigenfunctions of the sphere Laplacian") {
  // Lap(f(r) Y) with f = 1 on the sphere: Lap_S Y = r^2 Lap(Y(x/|x|)) at |x| = 1.
  const double h = 1e-3;
  const Vec3 x{0.3, -0.5, std::sqrt(1.0 - 0.09 - 0.25)};
  for (int l = 0; l <= 6; ++l) {
    for (int m = -l; m <= l; ++m) {
      auto f = [&](const Vec3& p) { return sph_harm({l, m}, (1.0 / norm(p)) * p); };
      double lap = -6.0 * f(x);
      for (int a = 0; a < 3; ++a) {
        Vec3 e{0, 0, 0};
        e[a] = h;
        lap += f(x + e) + f(x - e);
      }
      lap /= h * h;
      CHECK(lap == doctest::Approx(-l * (l + 1.0) * f(x)).epsilon(1e-4).scale(1.0));
    }
  }
}

TEST_CASE("spherical harmonic sup bound with one constant") {
  const SphereRule rule = SphereRule::for_degree(60);
  double c = 0.0;
  for (int l = 0; l <= 20; ++l) {
    double sup = 0.0;
    for (const auto& d : rule.directions) {
      const auto y = sph_harm_all(l, d);
      for (int m = -l; m <= l; ++m) sup = std::max(sup, std::abs(y[SphericalIndex{l, m}.packed()]));
    }
    c = std::max(c, sup / std::sqrt(2.0 * l + 1.0));
  }
  CHECK(c < 0.5);
}

TEST_CASE("regular radial functions") {
  // E_l(s) r^l solves the radial equation; compare with half-integer Bessel form.
  for (double tau : {-9.0, -1.0, 0.5, 4.0, 30.0}) {
    for (double r : {0.05, 0.4, 1.3, 3.0}) {
      const auto e = regular_radial_all(12, cplx{tau * r * r, 0.0});
      for (int l = 0; l <= 12; ++l) {
        const cplx root = tau > 0 ? cplx{std::sqrt(tau), 0.0} : cplx{0.0, std::sqrt(-tau)};
        const cplx ref = bessel(BesselKind::I, l + 0.5, r * root) / std::sqrt(r);
        const cplx mine = half_integer_bessel_factor(l, tau) * std::pow(r, l) * e[l];
        CHECK(std::abs(mine - ref) <= 1e-11 * std::max(std::abs(ref), 1e-300));
      }
    }
  }
  CHECK(regular_radial(3, 0.0) == cplx{1.0, 0.0});
}

TEST_CASE("energy integral") {
  const auto e = besseli_energy(0.5, 1.0, 1.0);
  CHECK(e.value == doctest::Approx((std::sinh(2.0) - 2.0) / (2.0 * kPi)).epsilon(1e-10));
  CHECK(e.value == doctest::Approx(0.258923).epsilon(1e-6));

  double prev = 0.0;
  for (double a : {0.5, 1.0, 2.0, 4.0}) {
    const double v = a * a * besseli_energy(1.5, a, 1.0).value;
    CHECK(v > prev);
    prev = v;
  }
  for (double nu : {0.5, 1.5, 3.5}) {
    const double lo = besseli_energy(nu, 1e-3, 1.0).value;
    const double hi = besseli_energy(nu, 1e-2, 1.0).value;
    CHECK(std::log(hi / lo) / std::log(10.0) == doctest::Approx(2.0 * nu).epsilon(0.05 / (2.0 * nu)));
  }
  // imaginary alpha integrates J^2
  const auto ej = besseli_energy(0.5, cplx{0.0, 1.0}, 1.0);
  CHECK(ej.value == doctest::Approx((2.0 - std::sin(2.0)) / (2.0 * kPi)).epsilon(1e-10));

  CHECK_THROWS_AS(besseli_energy(0.25, 1.0, 1.0), DomainError);
  CHECK_THROWS_AS(besseli_energy(0.5, 1.0, 101.0), DomainError);
  CHECK_THROWS_AS(besseli_energy(0.5, cplx{1.0, 1.0}, 1.0), DomainError);
}

TEST_CASE("envelope") {
  CHECK(balodis_envelope(8.0, 0.0) == doctest::Approx(0.125));
  CHECK(balodis_envelope(8.0, 8.0) == doctest::Approx(0.5));
  double c = 0.0;
  for (double nu : {1.0, 4.0, 16.0}) {
    for (int i = 0; i <= 4000; ++i) {
      const double s = 4.0 * nu * i / 4000.0;
      c = std::max(c, std::abs(bessel_real(BesselKind::J, nu, s)) / balodis_envelope(nu, s));
    }
  }
  CHECK(c <= 2.0);
  CHECK_THROWS_AS(balodis_envelope(0.5, 1.0), DomainError);
}
