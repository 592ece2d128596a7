#include <algorithm>
#include <cmath>
#include <cstdlib>

#include "vortexlab/kernels.hpp"

namespace vortexlab::kernels::serial {

void nonlinear_phase(std::span<cplx> u, double kappa, double dt, Nonlinearity form) {
  for (auto& v : u) {
    const double a2 = std::norm(v);
    const double angle = form == Nonlinearity::GrossPitaevskii ? kappa * (1.0 - a2) * dt : -kappa * a2 * dt;
    v *= std::polar(1.0, angle);
  }
}

void spectral_phase(std::span<cplx> u_hat, std::span<const double> k2, double t) {
  for (std::size_t i = 0; i < u_hat.size(); ++i) u_hat[i] *= std::polar(1.0, -k2[i] * t);
}

void scale(std::span<cplx> u, double factor) {
  for (auto& v : u) v *= factor;
}

double sum_abs2(std::span<const cplx> u) {
  double s = 0.0;
  for (const auto& v : u) s += std::norm(v);
  return s;
}

double max_abs_diff(std::span<const cplx> a, std::span<const cplx> b) {
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
  return m;
}

void assemble_kernel_matrix(std::span<const Vec3> targets, std::span<const Vec3> sources,
                            std::span<const double> row_scale, std::span<const double> col_scale,
                            const RadialFn& radial, double* out) {
  const std::size_t rows = targets.size();
  for (std::size_t j = 0; j < sources.size(); ++j) {
    for (std::size_t i = 0; i < rows; ++i) {
      out[j * rows + i] = row_scale[i] * radial(norm(targets[i] - sources[j])) * col_scale[j];
    }
  }
}

void laplacian_periodic(std::span<const cplx> u, std::array<int, 3> dims, std::array<double, 3> spacing,
                        std::span<cplx> out) {
  const int nx = dims[0], ny = dims[1], nz = dims[2];
  const double cx = 1.0 / (spacing[0] * spacing[0]);
  const double cy = 1.0 / (spacing[1] * spacing[1]);
  const double cz = 1.0 / (spacing[2] * spacing[2]);
  auto at = [&](int i, int j, int k) {
    i = (i + nx) % nx;
    j = (j + ny) % ny;
    k = (k + nz) % nz;
    return u[(static_cast<std::size_t>(i) * ny + j) * nz + k];
  };
  for (int i = 0; i < nx; ++i)
    for (int j = 0; j < ny; ++j)
      for (int k = 0; k < nz; ++k) {
        const cplx c = at(i, j, k);
        out[(static_cast<std::size_t>(i) * ny + j) * nz + k] = cx * (at(i + 1, j, k) - 2.0 * c + at(i - 1, j, k)) +
                                                               cy * (at(i, j + 1, k) - 2.0 * c + at(i, j - 1, k)) +
                                                               cz * (at(i, j, k + 1) - 2.0 * c + at(i, j, k - 1));
      }
}

void mark_zero_cells(std::span<const cplx> u, std::array<int, 3> dims, std::span<std::uint8_t> flags) {
  const int nx = dims[0], ny = dims[1], nz = dims[2];
  const int cx = nx - 1, cy = ny - 1, cz = nz - 1;
  for (int i = 0; i < cx; ++i)
    for (int j = 0; j < cy; ++j)
      for (int k = 0; k < cz; ++k) {
        bool re_pos = false, re_neg = false, im_pos = false, im_neg = false;
        for (int c = 0; c < 8; ++c) {
          const int di = c >> 2, dj = (c >> 1) & 1, dk = c & 1;
          const cplx v = u[(static_cast<std::size_t>(i + di) * ny + (j + dj)) * nz + (k + dk)];
          re_pos |= v.real() >= 0.0;
          re_neg |= v.real() <= 0.0;
          im_pos |= v.imag() >= 0.0;
          im_neg |= v.imag() <= 0.0;
        }
        flags[(static_cast<std::size_t>(i) * cy + j) * cz + k] = (re_pos && re_neg && im_pos && im_neg) ? 1 : 0;
      }
}

}  // namespace vortexlab::kernels::serial
