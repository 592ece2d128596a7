#pragma once

// Data-parallel inner loops. Every kernel exists twice: an OpenMP version in
// `parallel` used by the library and a plain loop in `serial` kept as the
// reference for tests and the benchmark. Reductions in `parallel` are summed
// over fixed-size chunks in index order, so results do not depend on the
// thread count.

#include <array>
#include <complex>
#include <cstdint>
#include <functional>
#include <span>

#include "vortexlab/vec3.hpp"

namespace vortexlab::kernels {

using cplx = std::complex<double>;

enum class Nonlinearity {
  GrossPitaevskii,  // i u_t + Lap u + kappa (1 - |u|^2) u = 0
  DefocusingCubic,  // i u_t + Lap u - kappa |u|^2 u = 0
};

/// Radial profile g(|t - s|) used by the dense kernel assembly.
using RadialFn = std::function<double(double)>;

/// Reads VORTEXLAB_THREADS and caps the OpenMP team size. Returns the cap, 0 when unset.
int configure_threads_from_env();

namespace serial {

/// u <- u exp(i kappa (1 - |u|^2) dt) or u exp(-i kappa |u|^2 dt).
void nonlinear_phase(std::span<cplx> u, double kappa, double dt, Nonlinearity form);
/// u_hat <- u_hat exp(-i k2 t).
void spectral_phase(std::span<cplx> u_hat, std::span<const double> k2, double t);
void scale(std::span<cplx> u, double factor);
double sum_abs2(std::span<const cplx> u);
double max_abs_diff(std::span<const cplx> a, std::span<const cplx> b);
/// out(i, j) = row_scale[i] * radial(|targets[i] - sources[j]|) * col_scale[j], column-major.
void assemble_kernel_matrix(std::span<const Vec3> targets, std::span<const Vec3> sources,
                            std::span<const double> row_scale, std::span<const double> col_scale,
                            const RadialFn& radial, double* out);
/// Second-order 7-point Laplacian on a periodic grid.
void laplacian_periodic(std::span<const cplx> u, std::array<int, 3> dims, std::array<double, 3> spacing,
                        std::span<cplx> out);
/// flags[c] = 1 when Re u and Im u both change sign over the corners of cell c.
/// Cells are indexed row-major over dims - 1 per axis.
void mark_zero_cells(std::span<const cplx> u, std::array<int, 3> dims, std::span<std::uint8_t> flags);

}  // namespace serial

namespace parallel {

void nonlinear_phase(std::span<cplx> u, double kappa, double dt, Nonlinearity form);
void spectral_phase(std::span<cplx> u_hat, std::span<const double> k2, double t);
void scale(std::span<cplx> u, double factor);
double sum_abs2(std::span<const cplx> u);
double max_abs_diff(std::span<const cplx> a, std::span<const cplx> b);
void assemble_kernel_matrix(std::span<const Vec3> targets, std::span<const Vec3> sources,
                            std::span<const double> row_scale, std::span<const double> col_scale,
                            const RadialFn& radial, double* out);
void laplacian_periodic(std::span<const cplx> u, std::array<int, 3> dims, std::array<double, 3> spacing,
                        std::span<cplx> out);
void mark_zero_cells(std::span<const cplx> u, std::array<int, 3> dims, std::span<std::uint8_t> flags);

}  // namespace parallel

}  // namespace vortexlab::kernels
