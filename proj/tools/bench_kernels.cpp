// Serial reference vs OpenMP kernels on the same data: wall time per call and
// the max deviation between the two results.

#include <CLI11.hpp>
#include <nlohmann/json.hpp>
#include <omp.h>

#include <chrono>
#include <cstdio>
#include <functional>
#include <iostream>
#include <random>
#include <vector>

#include "vortexlab/kernels.hpp"

using namespace vortexlab;
using namespace vortexlab::kernels;

namespace {

double seconds_per_call(int repeat, const std::function<void()>& f) {
  f();  // warm-up
  const auto t0 = std::chrono::steady_clock::now();
  for (int r = 0; r < repeat; ++r) f();
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count() / repeat;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"bench_kernels: serial reference vs OpenMP kernels"};
  int points = 64, repeat = 5, sources = 600;
  bool as_json = false;
  app.add_option("--points", points, "grid points per axis")->capture_default_str();
  app.add_option("--repeat", repeat, "timed calls per kernel")->capture_default_str();
  app.add_option("--sources", sources, "matrix assembly size (targets = sources)")->capture_default_str();
  app.add_flag("--json", as_json, "machine-readable output");
  CLI11_PARSE(app, argc, argv);

  const int cap = configure_threads_from_env();
  const std::array<int, 3> dims{points, points, points};
  const std::size_t n = static_cast<std::size_t>(points) * points * points;
  std::mt19937_64 rng(42);
  std::normal_distribution<double> g;
  std::vector<cplx> base(n);
  for (auto& z : base) z = {g(rng), g(rng)};
  std::vector<double> k2(n);
  for (std::size_t i = 0; i < n; ++i) k2[i] = 1e-3 * static_cast<double>(i % 4096);
  std::vector<Vec3> pts(static_cast<std::size_t>(sources));
  for (auto& p : pts) p = {g(rng), g(rng), g(rng) + 5.0};
  std::vector<Vec3> tgt(static_cast<std::size_t>(sources));
  for (auto& p : tgt) p = {g(rng), g(rng), g(rng)};
  const std::vector<double> ones(static_cast<std::size_t>(sources), 1.0);
  const RadialFn radial = [](double r) { return std::cos(r) / r; };

  struct Row {
    std::string name;
    double serial = 0.0, parallel = 0.0, deviation = 0.0;
  };
  std::vector<Row> rows;

  {
    auto a = base, b = base;
    Row r{"nonlinear_phase"};
    r.serial = seconds_per_call(repeat, [&] { serial::nonlinear_phase(a, 1.0, 1e-3, Nonlinearity::GrossPitaevskii); });
    r.parallel = seconds_per_call(repeat, [&] { parallel::nonlinear_phase(b, 1.0, 1e-3, Nonlinearity::GrossPitaevskii); });
    r.deviation = serial::max_abs_diff(a, b);
    rows.push_back(r);
  }
  {
    auto a = base, b = base;
    Row r{"spectral_phase"};
    r.serial = seconds_per_call(repeat, [&] { serial::spectral_phase(a, k2, 1e-3); });
    r.parallel = seconds_per_call(repeat, [&] { parallel::spectral_phase(b, k2, 1e-3); });
    r.deviation = serial::max_abs_diff(a, b);
    rows.push_back(r);
  }
  {
    double sa = 0.0, sb = 0.0;
    Row r{"sum_abs2"};
    r.serial = seconds_per_call(repeat, [&] { sa = serial::sum_abs2(base); });
    r.parallel = seconds_per_call(repeat, [&] { sb = parallel::sum_abs2(base); });
    r.deviation = std::abs(sa - sb) / sa;
    rows.push_back(r);
  }
  {
    std::vector<cplx> la(n), lb(n);
    Row r{"laplacian_periodic"};
    r.serial = seconds_per_call(repeat, [&] { serial::laplacian_periodic(base, dims, {0.1, 0.1, 0.1}, la); });
    r.parallel = seconds_per_call(repeat, [&] { parallel::laplacian_periodic(base, dims, {0.1, 0.1, 0.1}, lb); });
    r.deviation = serial::max_abs_diff(la, lb);
    rows.push_back(r);
  }
  {
    const std::size_t cells = static_cast<std::size_t>(points - 1) * (points - 1) * (points - 1);
    std::vector<std::uint8_t> fa(cells), fb(cells);
    Row r{"mark_zero_cells"};
    r.serial = seconds_per_call(repeat, [&] { serial::mark_zero_cells(base, dims, fa); });
    r.parallel = seconds_per_call(repeat, [&] { parallel::mark_zero_cells(base, dims, fb); });
    r.deviation = fa == fb ? 0.0 : 1.0;
    rows.push_back(r);
  }
  {
    std::vector<double> ma(static_cast<std::size_t>(sources) * sources), mb(ma.size());
    Row r{"assemble_kernel_matrix"};
    r.serial = seconds_per_call(repeat, [&] { serial::assemble_kernel_matrix(tgt, pts, ones, ones, radial, ma.data()); });
    r.parallel = seconds_per_call(repeat, [&] { parallel::assemble_kernel_matrix(tgt, pts, ones, ones, radial, mb.data()); });
    double d = 0.0;
    for (std::size_t i = 0; i < ma.size(); ++i) d = std::max(d, std::abs(ma[i] - mb[i]));
    r.deviation = d;
    rows.push_back(r);
  }

  const int threads = omp_get_max_threads();
  if (as_json) {
    nlohmann::json j = {{"points", points}, {"repeat", repeat}, {"threads", threads}, {"thread_cap", cap}};
    for (const auto& r : rows)
      j["kernels"].push_back({{"name", r.name}, {"serial_s", r.serial}, {"parallel_s", r.parallel},
                              {"speedup", r.serial / r.parallel}, {"max_deviation", r.deviation}});
    std::cout << j.dump(2) << '\n';
  } else {
    std::printf("grid %d^3, %d repeats, %d OpenMP threads\n", points, repeat, threads);
    std::printf("%-24s %12s %12s %8s %12s\n", "kernel", "serial [ms]", "parallel [ms]", "speedup", "deviation");
    for (const auto& r : rows)
      std::printf("%-24s %12.3f %12.3f %8.2f %12.3g\n", r.name.c_str(), 1e3 * r.serial, 1e3 * r.parallel,
                  r.serial / r.parallel, r.deviation);
  }
  return 0;
}
