#include "vortexlab/specfun.hpp"

#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <boost/math/special_functions/bessel.hpp>

#include <cmath>
#include <numbers>
#include <stdexcept>
#include <string>

#include "vortexlab/errors.hpp"

namespace vortexlab::specfun {

namespace {

constexpr double kPi = std::numbers::pi;

double real_bessel(BesselKind kind, double nu, double x) {
  try {
    switch (kind) {
      case BesselKind::J:
        return boost::math::cyl_bessel_j(nu, x);
      case BesselKind::Y:
        return boost::math::cyl_neumann(nu, x);
      case BesselKind::I:
        return boost::math::cyl_bessel_i(nu, x);
      case BesselKind::K:
        return boost::math::cyl_bessel_k(nu, x);
    }
  } catch (const std::overflow_error& e) {
    throw RangeError(std::string("bessel: overflow: ") + e.what());
  } catch (const std::domain_error& e) {
    throw DomainError(std::string("bessel: ") + e.what());
  }
  return 0.0;
}

// e^{i pi nu / 2 * sign}
cplx quarter_turn_power(double nu, double sign) { return std::polar(1.0, sign * 0.5 * kPi * nu); }

}  // namespace

cplx bessel(BesselKind kind, double nu, cplx z, double max_order) {
  if (!(nu >= 0.0)) throw DomainError("bessel: negative order");
  if (nu > max_order) throw RangeError("bessel: order " + std::to_string(nu) + " exceeds nu_max");
  const double re = z.real();
  const double im = z.imag();
  if (!std::isfinite(re) || !std::isfinite(im)) throw DomainError("bessel: non-finite argument");
  if (re != 0.0 && im != 0.0) throw DomainError("bessel: argument must be real or purely imaginary");

  const bool second_kind = kind == BesselKind::Y || kind == BesselKind::K;
  if (re == 0.0 && im == 0.0) {
    if (second_kind) throw DomainError("bessel: Y and K have a pole at z = 0");
    return nu == 0.0 ? cplx{1.0, 0.0} : cplx{0.0, 0.0};
  }

  if (im == 0.0) {
    if (re > 0.0) return real_bessel(kind, nu, re);
    if (second_kind) throw DomainError("bessel: Y and K require a positive real argument");
    // principal branch: f(-x) = e^{i pi nu} f(x)
    return std::polar(1.0, kPi * nu) * real_bessel(kind, nu, -re);
  }

  if (second_kind) throw DomainError("bessel: Y and K of imaginary argument are not supported");
  const double sign = im > 0.0 ? 1.0 : -1.0;
  const double y = std::abs(im);
  if (kind == BesselKind::J) return quarter_turn_power(nu, sign) * real_bessel(BesselKind::I, nu, y);
  return quarter_turn_power(nu, sign) * real_bessel(BesselKind::J, nu, y);
}

double bessel_real(BesselKind kind, double nu, double x, double max_order) {
  if (x < 0.0) throw DomainError("bessel_real: negative argument");
  return bessel(kind, nu, cplx{x, 0.0}, max_order).real();
}

// --- spherical harmonics --------------------------------------------------

SphericalIndex SphericalIndex::unpack(int p) {
  int l = static_cast<int>(std::sqrt(static_cast<double>(p)));
  while (l * l > p) --l;
  while ((l + 1) * (l + 1) <= p) ++l;
  return {l, p - l * l - l};
}

std::vector<double> solid_harmonics(int l_max, const Vec3& x) {
  if (l_max < 0) return {};
  const double r2 = dot(x, x);
  const double z = x[2];
  std::vector<double> out(static_cast<std::size_t>(SphericalIndex::count(l_max)), 0.0);

  // (x + i y)^m, carried along m.
  cplx xy_pow{1.0, 0.0};
  const cplx xy{x[0], x[1]};
  double double_factorial = 1.0;  // (2m - 1)!!
  for (int m = 0; m <= l_max; ++m) {
    if (m > 0) {
      xy_pow *= xy;
      double_factorial *= (2.0 * m - 1.0);
    }
    // q_l^m = r^{l-m} P_l^m(cos) / sin^m, polynomial in (z, r^2)
    double q_prev = 0.0;
    double q = double_factorial;
    for (int l = m; l <= l_max; ++l) {
      if (l == m + 1) {
        const double q_next = (2.0 * m + 1.0) * z * q;
        q_prev = q;
        q = q_next;
      } else if (l > m + 1) {
        const double q_next = ((2.0 * l - 1.0) * z * q - (l + m - 1.0) * r2 * q_prev) / (l - m);
        q_prev = q;
        q = q_next;
      }
      const double log_norm = 0.5 * (std::log(2.0 * l + 1.0) - std::log(4.0 * kPi) +
                                     std::lgamma(l - m + 1.0) - std::lgamma(l + m + 1.0));
      const double base = std::exp(log_norm) * q;
      if (m == 0) {
        out[static_cast<std::size_t>(l * l + l)] = base;
      } else {
        out[static_cast<std::size_t>(l * l + l + m)] = std::numbers::sqrt2 * base * xy_pow.real();
        out[static_cast<std::size_t>(l * l + l - m)] = std::numbers::sqrt2 * base * xy_pow.imag();
      }
    }
  }
  return out;
}

std::vector<double> sph_harm_all(int l_max, const Vec3& direction) {
  if (std::abs(norm(direction) - 1.0) > 1e-12) throw DomainError("sph_harm: direction is not a unit vector");
  return solid_harmonics(l_max, direction);
}

double sph_harm(SphericalIndex idx, const Vec3& direction) {
  if (idx.l < 0 || std::abs(idx.m) > idx.l) throw DomainError("sph_harm: invalid (l, m)");
  return sph_harm_all(idx.l, direction)[static_cast<std::size_t>(idx.packed())];
}

// --- regular radial functions -----------------------------------------------

namespace {

std::vector<cplx> regular_radial_series(int l_max, cplx s) {
  std::vector<cplx> out(static_cast<std::size_t>(l_max + 1));
  const cplx half_s = 0.5 * s;
  for (int l = 0; l <= l_max; ++l) {
    cplx term{1.0, 0.0};
    cplx sum{1.0, 0.0};
    for (int j = 1; j < 400; ++j) {
      term *= half_s / (static_cast<double>(j) * (2.0 * l + 2.0 * j + 1.0));
      sum += term;
      if (std::abs(term) <= 1e-17 * std::abs(sum)) break;
    }
    out[static_cast<std::size_t>(l)] = sum;
  }
  return out;
}

// Miller's backward recurrence for the minimal solution i_l(z) of
// f_{l-1} = f_{l+1} + (2l+1)/z f_l, normalized by sum (2l+1) i_l(z) = e^z.
std::vector<cplx> regular_radial_miller(int l_max, cplx s) {
  const cplx z = std::sqrt(s);  // Re z >= 0
  const double az = std::abs(z);
  const int top = std::max(l_max, static_cast<int>(std::ceil(1.5 * az))) + 40;
  std::vector<cplx> f(static_cast<std::size_t>(top + 2), cplx{0.0, 0.0});
  f[static_cast<std::size_t>(top + 1)] = 0.0;
  f[static_cast<std::size_t>(top)] = 1e-30;
  for (int l = top; l >= 1; --l) {
    f[static_cast<std::size_t>(l - 1)] =
        f[static_cast<std::size_t>(l + 1)] + (2.0 * l + 1.0) / z * f[static_cast<std::size_t>(l)];
    if (std::abs(f[static_cast<std::size_t>(l - 1)]) > 1e250) {
      for (int k = l - 1; k <= top; ++k) f[static_cast<std::size_t>(k)] *= 1e-250;
    }
  }
  cplx sum{0.0, 0.0};
  for (int l = top; l >= 0; --l) sum += (2.0 * l + 1.0) * f[static_cast<std::size_t>(l)];
  const cplx scale = std::exp(z) / sum;

  std::vector<cplx> out(static_cast<std::size_t>(l_max + 1));
  cplx df_over_zl{1.0, 0.0};  // (2l+1)!! / z^l
  for (int l = 0; l <= l_max; ++l) {
    if (l > 0) df_over_zl *= (2.0 * l + 1.0) / z;
    out[static_cast<std::size_t>(l)] = df_over_zl * f[static_cast<std::size_t>(l)] * scale;
  }
  return out;
}

}  // namespace

std::vector<cplx> regular_radial_all(int l_max, cplx s) {
  if (l_max < 0) return {};
  if (std::abs(s) <= 4.0) return regular_radial_series(l_max, s);
  return regular_radial_miller(l_max, s);
}

cplx regular_radial(int l, cplx s) { return regular_radial_all(l, s)[static_cast<std::size_t>(l)]; }

cplx half_integer_bessel_factor(int l, double tau) {
  const double nu = l + 0.5;
  const cplx root = tau >= 0.0 ? cplx{std::sqrt(tau), 0.0} : cplx{0.0, std::sqrt(-tau)};
  if (tau == 0.0) return 0.0;
  return std::exp(nu * std::log(0.5 * root) - std::lgamma(nu + 1.0));
}

// --- energy integral ---------------------------------------------------------

EnergyIntegral besseli_energy(double nu, cplx alpha, double outer_radius, double rel_tol) {
  if (!(nu >= 0.5)) throw DomainError("besseli_energy: order must be >= 1/2");
  if (!(outer_radius > 0.0) || outer_radius > 100.0 || !std::isfinite(outer_radius))
    throw DomainError("besseli_energy: outer radius must lie in (0, 100]");
  const bool real_alpha = alpha.imag() == 0.0 && alpha.real() > 0.0;
  const bool imag_alpha = alpha.real() == 0.0 && alpha.imag() > 0.0;
  if (!real_alpha && !imag_alpha)
    throw DomainError("besseli_energy: alpha must be positive real or positive imaginary");
  const double a = std::abs(alpha);
  if (real_alpha && a * outer_radius > 340.0) throw RangeError("besseli_energy: |I_nu|^2 overflows");

  auto integrand = [&](double r) {
    const double v = real_alpha ? real_bessel(BesselKind::I, nu, r * a) : real_bessel(BesselKind::J, nu, r * a);
    return r * v * v;
  };
  double error = 0.0;
  const double value =
      boost::math::quadrature::gauss_kronrod<double, 31>::integrate(integrand, 0.0, outer_radius, 20, rel_tol, &error);

  EnergyIntegral out;
  out.nu = nu;
  out.alpha = alpha;
  out.outer_radius = outer_radius;
  out.value = value;
  out.error_estimate = error;
  if (!(value >= 0.0) || error > 1e-8 * value) {
    throw NumericalError("besseli_energy: quadrature did not reach 1e-8 relative error", error / value);
  }
  return out;
}

double balodis_envelope(double nu, double s) {
  if (!(nu >= 1.0) || !(s >= 0.0)) throw DomainError("balodis_envelope: requires nu >= 1, s >= 0");
  const double band = std::cbrt(nu);
  if (s <= nu - band) return 1.0 / (nu - s);
  if (s <= nu + band) return 1.0 / band;
  return std::pow(s, -0.5) * std::pow(1.0 - nu / s, -0.25);
}

}  // namespace vortexlab::specfun
