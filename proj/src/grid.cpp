#include "vortexlab/grid.hpp"

#include <algorithm>
#include <cmath>

#include "vortexlab/errors.hpp"
#include "vortexlab/kernels.hpp"

namespace vortexlab {

BoxSpec BoxSpec::cube(double length, int points, bool periodic) {
  BoxSpec b;
  b.length = {length, length, length};
  b.points = {points, points, points};
  b.periodic = periodic;
  return b;
}

Vec3 BoxSpec::origin() const {
  Vec3 o{};
  for (int a = 0; a < 3; ++a) {
    const auto ai = static_cast<std::size_t>(a);
    o[ai] = -0.5 * length[ai] + offset[ai] * spacing(a);
  }
  return o;
}

std::size_t BoxSpec::size() const {
  return static_cast<std::size_t>(points[0]) * static_cast<std::size_t>(points[1]) *
         static_cast<std::size_t>(points[2]);
}

void BoxSpec::validate() const {
  for (int a = 0; a < 3; ++a) {
    const auto ai = static_cast<std::size_t>(a);
    if (!(length[ai] > 0.0) || !std::isfinite(length[ai])) throw ConfigError("BoxSpec: side length must be positive");
    const int n = points[ai];
    if (n < 16) throw ConfigError("BoxSpec: at least 16 points per axis required");
    if (periodic && (n & (n - 1)) != 0) throw ConfigError("BoxSpec: periodic boxes need a power-of-two point count");
  }
}

bool BoxSpec::same_grid(const BoxSpec& other) const {
  return points == other.points && length == other.length && offset == other.offset && periodic == other.periodic;
}

ComplexField::ComplexField(BoxSpec box, cplx fill) : box_(box), data_(box.size(), fill) {}

ComplexField ComplexField::sample(const BoxSpec& box, const std::function<cplx(const Vec3&)>& fn) {
  ComplexField f(box);
  const int nx = box.points[0], ny = box.points[1], nz = box.points[2];
#pragma omp parallel for schedule(static)
  for (int i = 0; i < nx; ++i)
    for (int j = 0; j < ny; ++j)
      for (int k = 0; k < nz; ++k) f(i, j, k) = fn(f.point(i, j, k));
  return f;
}

Vec3 ComplexField::point(int i, int j, int k) const {
  const Vec3 o = box_.origin();
  return {o[0] + i * box_.spacing(0), o[1] + j * box_.spacing(1), o[2] + k * box_.spacing(2)};
}

double ComplexField::cell_volume() const { return box_.spacing(0) * box_.spacing(1) * box_.spacing(2); }

double ComplexField::mass() const { return kernels::parallel::sum_abs2(data_) * cell_volume(); }

double ComplexField::max_abs() const {
  double m = 0.0;
  for (const auto& v : data_) m = std::max(m, std::abs(v));
  return m;
}

double max_abs_difference(const ComplexField& a, const ComplexField& b) {
  if (!a.box().same_grid(b.box())) throw GeometryError("max_abs_difference: grid mismatch");
  return kernels::parallel::max_abs_diff(a.values(), b.values());
}

}  // namespace vortexlab
