#pragma once

// Special functions: Bessel functions of real order with real or purely
// imaginary argument, real spherical (and solid) harmonics, the energy
// integral of I_nu over a ball radius and the Balodis-type envelope.

#include <complex>
#include <vector>

#include "vortexlab/vec3.hpp"

namespace vortexlab::specfun {

using cplx = std::complex<double>;

enum class BesselKind { J, Y, I, K };

/// Largest order accepted by bessel() unless overridden.
inline constexpr double kDefaultMaxOrder = 60.0;

/// Bessel function of the given kind and real order nu >= 0.
///
/// The argument must be real (z.imag() == 0, z.real() >= 0) or purely
/// imaginary (z.real() == 0). J and I accept both; Y and K accept positive
/// real arguments only. Imaginary arguments follow the principal branch,
/// J_nu(iy) = i^nu I_nu(y) and I_nu(iy) = i^nu J_nu(y) for y > 0.
///
/// Throws DomainError for Y/K at z = 0 or for a mixed complex argument and
/// RangeError when nu exceeds max_order.
cplx bessel(BesselKind kind, double nu, cplx z, double max_order = kDefaultMaxOrder);

/// Real-argument convenience wrapper.
double bessel_real(BesselKind kind, double nu, double x, double max_order = kDefaultMaxOrder);

// --- spherical harmonics --------------------------------------------------

/// (l, m) with |m| <= l, real basis. Packed index l*l + l + m.
struct SphericalIndex {
  int l = 0;
  int m = 0;

  constexpr int packed() const { return l * l + l + m; }
  static constexpr int count(int l_max) { return (l_max + 1) * (l_max + 1); }
  static SphericalIndex unpack(int p);
};

/// Multiplicity 2l + 1 of degree l on S^2.
constexpr int multiplicity(int l) { return 2 * l + 1; }

/// Real orthonormal spherical harmonic Y_lm at a unit direction (no
/// Condon-Shortley phase). m > 0 uses cos(m phi), m < 0 uses sin(|m| phi).
/// Throws DomainError when |direction| deviates from 1 by more than 1e-12.
double sph_harm(SphericalIndex idx, const Vec3& direction);

/// Regular solid harmonics R_lm(x) = |x|^l Y_lm(x/|x|) for all l <= l_max,
/// packed. Polynomial in x, so valid at the origin.
std::vector<double> solid_harmonics(int l_max, const Vec3& x);

/// All Y_lm(direction) for l <= l_max, packed. Same precondition as sph_harm.
std::vector<double> sph_harm_all(int l_max, const Vec3& direction);

// --- radial functions used by spherical expansions --------------------------

/// Normalized regular radial function E_l(s) = (2l+1)!! i_l(z) / z^l with
/// z^2 = s, i_l the modified spherical Bessel function. Entire in s with
/// E_l(0) = 1, so r^l E_l(tau r^2) is the regular radial solution of
/// Helmholtz-Yukawa at any real tau (r^l at tau = 0). Accepts complex s.
std::vector<cplx> regular_radial_all(int l_max, cplx s);
cplx regular_radial(int l, cplx s);

/// c_l(tau) with r^{-1/2} I_{l+1/2}(r sqrt(tau)) = c_l(tau) r^l E_l(tau r^2),
/// sqrt(tau) on the principal branch (positive imaginary for tau < 0).
cplx half_integer_bessel_factor(int l, double tau);

// --- energy integral ---------------------------------------------------------

struct EnergyIntegral {
  double nu = 0.5;
  cplx alpha{1.0, 0.0};
  double outer_radius = 1.0;
  double value = 0.0;
  double error_estimate = 0.0;
};

/// I_nu(alpha) = int_0^R r |I_nu(r alpha)|^2 dr for alpha > 0 or alpha in
/// i R_+, by adaptive Gauss-Kronrod with relative tolerance rel_tol.
/// Throws NumericalError (with the achieved estimate) when not converged.
EnergyIntegral besseli_energy(double nu, cplx alpha, double outer_radius, double rel_tol = 1e-10);

/// Piecewise uniform envelope f_nu(s) bounding |J_nu(s)| up to a constant.
double balodis_envelope(double nu, double s);

}  // namespace vortexlab::specfun
