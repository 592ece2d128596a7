#pragma once

// Independent reference computations shared by the unit tests and the
// acceptance runner.

#include <cmath>
#include <numbers>

#include "vortexlab/helmholtz.hpp"
#include "vortexlab/quadrature.hpp"

namespace oracles {

using namespace vortexlab;

/// Gaussian bump exp(-|x - c|^2 / s^2).
struct Bump {
  Vec3 center;
  double width;

  double operator()(const Vec3& x) const {
    const Vec3 d = x - center;
    return std::exp(-vortexlab::dot(d, d) / (width * width));
  }
  double laplacian(const Vec3& x) const {
    const Vec3 d = x - center;
    const double s2 = width * width;
    return (4.0 * vortexlab::dot(d, d) / (s2 * s2) - 6.0 / s2) * (*this)(x);
  }
};

/// int G(x) (Lap - tau) phi(x) dx in spherical coordinates about the origin
/// (the r^2 Jacobian removes the 1/r singularity of G).
inline double distributional_pairing(const vortexlab::helmholtz::FundamentalSolution& g, const Bump& phi) {
  const double tau = g.frequency().tau;
  const double outer = vortexlab::norm(phi.center) + 7.0 * phi.width;
  const auto radial = vortexlab::composite_gauss_legendre(48, 20, 0.0, outer);
  const auto sphere = vortexlab::SphereRule::for_degree(40);
  double acc = 0.0;
  for (std::size_t i = 0; i < radial.nodes.size(); ++i) {
    const double r = radial.nodes[i];
    double shell = 0.0;
    for (std::size_t q = 0; q < sphere.size(); ++q) {
      const Vec3 x = r * sphere.directions[q];
      shell += sphere.weights[q] * (phi.laplacian(x) - tau * phi(x));
    }
    acc += radial.weights[i] * r * r * g.radial(r) * shell;
  }
  return acc;
}

}  // namespace oracles
