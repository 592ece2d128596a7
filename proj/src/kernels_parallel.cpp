#include <omp.h>

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <string>
#include <vector>

#include "vortexlab/kernels.hpp"

namespace vortexlab::kernels {

int configure_threads_from_env() {
  const char* env = std::getenv("VORTEXLAB_THREADS");
  if (env == nullptr || *env == '\0') return 0;
  const int cap = std::max(1, std::atoi(env));
  omp_set_num_threads(cap);
  return cap;
}

namespace parallel {

namespace {

constexpr std::ptrdiff_t kChunk = 4096;

// Sum of f(i) over [0, n): chunk partials in parallel, then an ordered sum.
template <class F>
double chunked_sum(std::ptrdiff_t n, F f) {
  const std::ptrdiff_t chunks = (n + kChunk - 1) / kChunk;
  std::vector<double> partial(static_cast<std::size_t>(chunks), 0.0);
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t c = 0; c < chunks; ++c) {
    double s = 0.0;
    const std::ptrdiff_t end = std::min(n, (c + 1) * kChunk);
    for (std::ptrdiff_t i = c * kChunk; i < end; ++i) s += f(i);
    partial[static_cast<std::size_t>(c)] = s;
  }
  double total = 0.0;
  for (double s : partial) total += s;
  return total;
}

}  // namespace

void nonlinear_phase(std::span<cplx> u, double kappa, double dt, Nonlinearity form) {
  const auto n = static_cast<std::ptrdiff_t>(u.size());
  const bool gp = form == Nonlinearity::GrossPitaevskii;
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t i = 0; i < n; ++i) {
    const double a2 = std::norm(u[static_cast<std::size_t>(i)]);
    const double angle = gp ? kappa * (1.0 - a2) * dt : -kappa * a2 * dt;
    u[static_cast<std::size_t>(i)] *= std::polar(1.0, angle);
  }
}

void spectral_phase(std::span<cplx> u_hat, std::span<const double> k2, double t) {
  const auto n = static_cast<std::ptrdiff_t>(u_hat.size());
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t i = 0; i < n; ++i) {
    u_hat[static_cast<std::size_t>(i)] *= std::polar(1.0, -k2[static_cast<std::size_t>(i)] * t);
  }
}

void scale(std::span<cplx> u, double factor) {
  const auto n = static_cast<std::ptrdiff_t>(u.size());
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t i = 0; i < n; ++i) u[static_cast<std::size_t>(i)] *= factor;
}

double sum_abs2(std::span<const cplx> u) {
  return chunked_sum(static_cast<std::ptrdiff_t>(u.size()),
                     [&](std::ptrdiff_t i) { return std::norm(u[static_cast<std::size_t>(i)]); });
}

double max_abs_diff(std::span<const cplx> a, std::span<const cplx> b) {
  const auto n = static_cast<std::ptrdiff_t>(a.size());
  double m = 0.0;
#pragma omp parallel for reduction(max : m) schedule(static)
  for (std::ptrdiff_t i = 0; i < n; ++i) {
    m = std::max(m, std::abs(a[static_cast<std::size_t>(i)] - b[static_cast<std::size_t>(i)]));
  }
  return m;
}

void assemble_kernel_matrix(std::span<const Vec3> targets, std::span<const Vec3> sources,
                            std::span<const double> row_scale, std::span<const double> col_scale,
                            const RadialFn& radial, double* out) {
  const auto rows = static_cast<std::ptrdiff_t>(targets.size());
  const auto cols = static_cast<std::ptrdiff_t>(sources.size());
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t j = 0; j < cols; ++j) {
    const auto& s = sources[static_cast<std::size_t>(j)];
    const double cs = col_scale[static_cast<std::size_t>(j)];
    for (std::ptrdiff_t i = 0; i < rows; ++i) {
      out[j * rows + i] = row_scale[static_cast<std::size_t>(i)] *
                          radial(norm(targets[static_cast<std::size_t>(i)] - s)) * cs;
    }
  }
}

void laplacian_periodic(std::span<const cplx> u, std::array<int, 3> dims, std::array<double, 3> spacing,
                        std::span<cplx> out) {
  const int nx = dims[0], ny = dims[1], nz = dims[2];
  const double cx = 1.0 / (spacing[0] * spacing[0]);
  const double cy = 1.0 / (spacing[1] * spacing[1]);
  const double cz = 1.0 / (spacing[2] * spacing[2]);
  auto idx = [=](int i, int j, int k) { return (static_cast<std::size_t>(i) * ny + j) * nz + k; };
#pragma omp parallel for schedule(static)
  for (int i = 0; i < nx; ++i) {
    const int ip = (i + 1) % nx, im = (i + nx - 1) % nx;
    for (int j = 0; j < ny; ++j) {
      const int jp = (j + 1) % ny, jm = (j + ny - 1) % ny;
      for (int k = 0; k < nz; ++k) {
        const int kp = (k + 1) % nz, km = (k + nz - 1) % nz;
        const cplx c = u[idx(i, j, k)];
        out[idx(i, j, k)] = cx * (u[idx(ip, j, k)] - 2.0 * c + u[idx(im, j, k)]) +
                            cy * (u[idx(i, jp, k)] - 2.0 * c + u[idx(i, jm, k)]) +
                            cz * (u[idx(i, j, kp)] - 2.0 * c + u[idx(i, j, km)]);
      }
    }
  }
}

void mark_zero_cells(std::span<const cplx> u, std::array<int, 3> dims, std::span<std::uint8_t> flags) {
  const int ny = dims[1], nz = dims[2];
  const int cx = dims[0] - 1, cy = ny - 1, cz = nz - 1;
#pragma omp parallel for schedule(static)
  for (int i = 0; i < cx; ++i)
    for (int j = 0; j < cy; ++j)
      for (int k = 0; k < cz; ++k) {
        bool re_pos = false, re_neg = false, im_pos = false, im_neg = false;
        for (int c = 0; c < 8; ++c) {
          const cplx v = u[(static_cast<std::size_t>(i + (c >> 2)) * ny + (j + ((c >> 1) & 1))) * nz + (k + (c & 1))];
          re_pos |= v.real() >= 0.0;
          re_neg |= v.real() <= 0.0;
          im_pos |= v.imag() >= 0.0;
          im_neg |= v.imag() <= 0.0;
        }
        flags[(static_cast<std::size_t>(i) * cy + j) * cz + k] = (re_pos && re_neg && im_pos && im_neg) ? 1 : 0;
      }
}

}  // namespace parallel
}  // namespace vortexlab::kernels
