#pragma once

#include <array>
#include <complex>
#include <cstddef>
#include <functional>
#include <span>
#include <vector>

#include "vortexlab/vec3.hpp"

namespace vortexlab {

using cplx = std::complex<double>;

/// Uniform box [-L/2, L/2) per axis shifted by `offset` grid spacings,
/// N points per axis at spacing L/N. Periodic boxes require N to be a power
/// of two; every box requires N >= 16.
struct BoxSpec {
  std::array<double, 3> length{16.0, 16.0, 16.0};
  std::array<int, 3> points{32, 32, 32};
  bool periodic = true;
  std::array<double, 3> offset{0.0, 0.0, 0.0};

  static BoxSpec cube(double length, int points, bool periodic = true);

  double spacing(int axis) const { return length[static_cast<std::size_t>(axis)] / points[static_cast<std::size_t>(axis)]; }
  Vec3 origin() const;
  std::size_t size() const;
  void validate() const;
  bool same_grid(const BoxSpec& other) const;
};

/// Complex scalar field on a BoxSpec grid, row-major (x slowest, z fastest).
class ComplexField {
 public:
  ComplexField() = default;
  explicit ComplexField(BoxSpec box, cplx fill = {0.0, 0.0});

  static ComplexField sample(const BoxSpec& box, const std::function<cplx(const Vec3&)>& fn);

  const BoxSpec& box() const { return box_; }
  std::size_t size() const { return data_.size(); }
  std::array<int, 3> dims() const { return box_.points; }

  std::size_t index(int i, int j, int k) const {
    return (static_cast<std::size_t>(i) * static_cast<std::size_t>(box_.points[1]) + static_cast<std::size_t>(j)) *
               static_cast<std::size_t>(box_.points[2]) +
           static_cast<std::size_t>(k);
  }
  Vec3 point(int i, int j, int k) const;

  cplx& operator()(int i, int j, int k) { return data_[index(i, j, k)]; }
  const cplx& operator()(int i, int j, int k) const { return data_[index(i, j, k)]; }

  std::span<cplx> values() { return data_; }
  std::span<const cplx> values() const { return data_; }

  double cell_volume() const;
  /// Discrete int |u|^2 dx.
  double mass() const;
  double max_abs() const;

 private:
  BoxSpec box_{};
  std::vector<cplx> data_;
};

/// max |a - b| over the grid; grids must match.
double max_abs_difference(const ComplexField& a, const ComplexField& b);

}  // namespace vortexlab
