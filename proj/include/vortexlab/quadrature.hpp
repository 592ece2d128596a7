#pragma once

#include <vector>

#include "vortexlab/vec3.hpp"

namespace vortexlab {

struct QuadratureRule1D {
  std::vector<double> nodes;
  std::vector<double> weights;
};

/// n-point Gauss-Legendre rule on [a, b].
QuadratureRule1D gauss_legendre(int n, double a = -1.0, double b = 1.0);

/// Composite Gauss-Legendre: `panels` equal panels of `order` points each.
QuadratureRule1D composite_gauss_legendre(int panels, int order, double a, double b);

/// Product rule on S^2: Gauss-Legendre in cos(theta) times uniform azimuth.
/// Exact for polynomials of degree <= 2 * degree (so Gram matrices of Y_lm,
/// l <= degree, are reproduced exactly).
struct SphereRule {
  int degree = 0;
  std::vector<Vec3> directions;
  std::vector<double> weights;

  static SphereRule for_degree(int degree);
  std::size_t size() const { return directions.size(); }
};

}  // namespace vortexlab
