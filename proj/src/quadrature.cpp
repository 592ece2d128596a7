#include "vortexlab/quadrature.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>
#include <utility>

namespace vortexlab {

namespace {

// P_n(x) and P_n'(x) by the three-term recurrence.
std::pair<double, double> legendre_with_derivative(int n, double x) {
  double p0 = 1.0;
  double p1 = x;
  for (int k = 2; k <= n; ++k) {
    const double p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
    p0 = p1;
    p1 = p2;
  }
  return {p1, n * (x * p1 - p0) / (x * x - 1.0)};
}

}  // namespace

QuadratureRule1D gauss_legendre(int n, double a, double b) {
  if (n < 1) throw std::invalid_argument("gauss_legendre: n must be positive");
  QuadratureRule1D rule;
  const double half = 0.5 * (b - a);
  const double mid = 0.5 * (b + a);
  if (n == 1) {
    rule.nodes = {mid};
    rule.weights = {2.0 * half};
    return rule;
  }
  rule.nodes.resize(static_cast<std::size_t>(n));
  rule.weights.resize(static_cast<std::size_t>(n));
  for (int i = 0; i < (n + 1) / 2; ++i) {
    double x = std::cos(std::numbers::pi * (i + 0.75) / (n + 0.5));
    for (int iter = 0; iter < 100; ++iter) {
      const auto [p, dp] = legendre_with_derivative(n, x);
      const double dx = p / dp;
      x -= dx;
      if (std::abs(dx) < 1e-16) break;
    }
    const double dp = legendre_with_derivative(n, x).second;
    const double w = 2.0 / ((1.0 - x * x) * dp * dp);
    const auto lo = static_cast<std::size_t>(i);
    const auto hi = static_cast<std::size_t>(n - 1 - i);
    rule.nodes[lo] = mid - half * x;
    rule.nodes[hi] = mid + half * x;
    rule.weights[lo] = half * w;
    rule.weights[hi] = half * w;
  }
  return rule;
}

QuadratureRule1D composite_gauss_legendre(int panels, int order, double a, double b) {
  QuadratureRule1D out;
  const double width = (b - a) / panels;
  for (int p = 0; p < panels; ++p) {
    const auto rule = gauss_legendre(order, a + p * width, a + (p + 1) * width);
    out.nodes.insert(out.nodes.end(), rule.nodes.begin(), rule.nodes.end());
    out.weights.insert(out.weights.end(), rule.weights.begin(), rule.weights.end());
  }
  return out;
}

SphereRule SphereRule::for_degree(int degree) {
  if (degree < 0) throw std::invalid_argument("SphereRule: negative degree");
  SphereRule rule;
  rule.degree = degree;
  const int n_theta = degree + 1;
  const int n_phi = 2 * degree + 2;
  const auto mu = gauss_legendre(n_theta);
  const double dphi = 2.0 * std::numbers::pi / n_phi;
  rule.directions.reserve(static_cast<std::size_t>(n_theta * n_phi));
  rule.weights.reserve(static_cast<std::size_t>(n_theta * n_phi));
  for (int i = 0; i < n_theta; ++i) {
    const double c = mu.nodes[static_cast<std::size_t>(i)];
    const double s = std::sqrt(std::max(0.0, 1.0 - c * c));
    for (int j = 0; j < n_phi; ++j) {
      const double phi = (j + 0.5) * dphi;
      Vec3 d{s * std::cos(phi), s * std::sin(phi), c};
      const double len = norm(d);
      rule.directions.push_back({d[0] / len, d[1] / len, d[2] / len});
      rule.weights.push_back(mu.weights[static_cast<std::size_t>(i)] * dphi);
    }
  }
  return rule;
}

}  // namespace vortexlab
