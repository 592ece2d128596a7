#include <doctest.h>

#include <cmath>
#include <random>
#include <vector>

#include "vortexlab/kernels.hpp"

using namespace vortexlab;
using namespace vortexlab::kernels;

namespace {

std::vector<cplx> random_field(std::size_t n, unsigned seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> g;
  std::vector<cplx> out(n);
  for (auto& v : out) v = {g(rng), g(rng)};
  return out;
}

}  // namespace

TEST_CASE("parallel kernels agree with the serial reference") {
  const std::array<int, 3> dims{9, 10, 11};
  const std::size_t n = 9 * 10 * 11;
  auto a = random_field(n, 1);
  auto b = a;
  std::vector<double> k2(n);
  for (std::size_t i = 0; i < n; ++i) k2[i] = 0.01 * static_cast<double>(i);

  for (auto form : {Nonlinearity::GrossPitaevskii, Nonlinearity::DefocusingCubic}) {
    serial::nonlinear_phase(a, 0.7, 0.01, form);
    parallel::nonlinear_phase(b, 0.7, 0.01, form);
  }
  serial::spectral_phase(a, k2, 0.3);
  parallel::spectral_phase(b, k2, 0.3);
  serial::scale(a, 1.5);
  parallel::scale(b, 1.5);
  CHECK(serial::max_abs_diff(a, b) == 0.0);
  CHECK(parallel::max_abs_diff(a, b) == 0.0);
  CHECK(serial::sum_abs2(a) == doctest::Approx(parallel::sum_abs2(b)).epsilon(1e-14));

  std::vector<cplx> la(n), lb(n);
  serial::laplacian_periodic(a, dims, {0.1, 0.2, 0.3}, la);
  parallel::laplacian_periodic(a, dims, {0.1, 0.2, 0.3}, lb);
  CHECK(serial::max_abs_diff(la, lb) == 0.0);

  std::vector<std::uint8_t> fa(8 * 9 * 10), fb(8 * 9 * 10);
  serial::mark_zero_cells(a, dims, fa);
  parallel::mark_zero_cells(a, dims, fb);
  CHECK(fa == fb);

  std::vector<Vec3> t{{0, 0, 0}, {1, 0, 0}, {0, 2, 0}};
  std::vector<Vec3> s{{5, 0, 0}, {0, 0, 4}};
  std::vector<double> rs{1.0, 2.0, 3.0}, cs{0.5, 0.25};
  std::vector<double> ma(6), mb(6);
  auto radial = [](double r) { return 1.0 / r; };
  serial::assemble_kernel_matrix(t, s, rs, cs, radial, ma.data());
  parallel::assemble_kernel_matrix(t, s, rs, cs, radial, mb.data());
  CHECK(ma == mb);
  CHECK(ma[1] == doctest::Approx(2.0 * 0.5 / 4.0));  // (row 1, col 0), column-major
}

TEST_CASE("periodic laplacian of a plane wave") {
  const int n = 16;
  const double h = 2.0 * M_PI / n;
  std::vector<cplx> u(n * n * n), out(n * n * n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      for (int k = 0; k < n; ++k) u[(i * n + j) * n + k] = std::polar(1.0, i * h + 2 * k * h);
  parallel::laplacian_periodic(u, {n, n, n}, {h, h, h}, out);
  const double eig = (2.0 * std::cos(h) - 2.0) / (h * h) + (2.0 * std::cos(2 * h) - 2.0) / (h * h);
  for (std::size_t i = 0; i < u.size(); ++i) CHECK(std::abs(out[i] - eig * u[i]) < 1e-10);
}

TEST_CASE("chunked reduction is independent of the thread count") {
  auto a = random_field(100000, 7);
  const double s1 = parallel::sum_abs2(a);
  const double s2 = parallel::sum_abs2(a);
  CHECK(s1 == s2);
}
