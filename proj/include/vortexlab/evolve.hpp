#pragma once

// Time evolution on periodic boxes: the free Schrodinger group, Strang
// split-step for the rescaled Gross-Pitaevskii equation and its defocusing
// variant, Duhamel checks, and the rescaling/gauge/torus constructions.

#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "vortexlab/grid.hpp"
#include "vortexlab/kernels.hpp"

namespace vortexlab::evolve {

using kernels::Nonlinearity;
using SpaceTimeFn = std::function<cplx(const Vec3&, double)>;

/// In-place 3D FFT on a box (FFTW, planned once). backward() is normalized.
class FftPlan {
 public:
  explicit FftPlan(const BoxSpec& box);
  ~FftPlan();
  FftPlan(const FftPlan&) = delete;
  FftPlan& operator=(const FftPlan&) = delete;

  void forward(std::span<cplx> data) const;
  void backward(std::span<cplx> data) const;
  /// |k|^2 per Fourier index, same layout as the field.
  const std::vector<double>& k2() const { return k2_; }
  double max_k2() const { return max_k2_; }

 private:
  struct Plans;
  std::unique_ptr<Plans> plans_;
  std::size_t size_ = 0;
  std::vector<double> k2_;
  double max_k2_ = 0.0;
};

/// e^{it Lap} u0 on the periodic box: multiplication by e^{-i|k|^2 t}.
ComplexField linear_propagate(const ComplexField& u0, double t);

struct EvolutionConfig {
  double kappa = 1.0;
  double dt = 1e-3;
  double t_end = 1.0;
  Nonlinearity form = Nonlinearity::GrossPitaevskii;
  /// Snapshot times (multiples of dt within [0, t_end]); empty = {0, t_end}.
  std::vector<double> snapshot_times;
  /// Use the serial reference kernels instead of the OpenMP ones.
  bool serial = false;
};

/// Strang splitting N(dt/2) L(dt) N(dt/2) on a fixed box.
class SplitStepSolver {
 public:
  SplitStepSolver(const BoxSpec& box, const EvolutionConfig& cfg);

  /// One step in place. Throws NonFiniteError tagged with `step_index`.
  void step(ComplexField& u, long step_index = 0) const;
  const FftPlan& fft() const { return fft_; }
  /// dt * max|k|^2 (> pi means the linear phase is under-resolved).
  double phase_product() const { return cfg_.dt * fft_.max_k2(); }

 private:
  BoxSpec box_;
  EvolutionConfig cfg_;
  FftPlan fft_;
  std::vector<double> k2_;
};

ComplexField gp_step(const ComplexField& u, const EvolutionConfig& cfg);

/// int (1/2)|grad u|^2 + (1/4)(1 - |u|^2)^2 dx with the spectral gradient.
double gl_energy(const ComplexField& u);
/// The conserved functional int |grad u|^2 + (kappa/2)(1-|u|^2)^2 (or (kappa/2)|u|^4 for the defocusing form).
double hamiltonian(const ComplexField& u, double kappa, Nonlinearity form);

struct Observables {
  double t = 0.0;
  double mass = 0.0;
  double gl_energy = 0.0;
  double hamiltonian = 0.0;
};

struct EvolutionResult {
  std::vector<double> times;
  std::vector<ComplexField> snapshots;
  std::vector<Observables> series;
  std::vector<std::string> warnings;
  long steps = 0;
};

/// Integrate from t = 0 to cfg.t_end, keeping the requested snapshots.
EvolutionResult evolve(const ComplexField& u0, const EvolutionConfig& cfg);

// --- Duhamel checks --------------------------------------------------------------------

enum class Background {
  One,      // u -> 1 at infinity, deviation ||u~ - (1 - w)||
  Decaying  // deviation ||u~ - w||
};

struct DuhamelReport {
  std::vector<double> times;
  std::vector<double> deviation;       // ||u~ - (1 - w)||_inf or ||u~ - w||_inf
  std::vector<double> reconstruction;  // ||u~ - Duhamel formula||_inf
  double max_deviation = 0.0;
  double max_reconstruction = 0.0;
};

/// Compares u~ to the linear solution and to its own Duhamel representation
///   u~(t) = e^{it Lap} u~(0) + i kappa int_0^t e^{i(t-s) Lap} f(u~(s)) ds,
/// the integral by the trapezoid rule on the snapshot times (times[0] = 0).
DuhamelReport duhamel_residual(std::span<const ComplexField> u_tilde, std::span<const ComplexField> w,
                               std::span<const double> times, double kappa, Nonlinearity form,
                               Background background = Background::One);

// --- rescaling and gauge ---------------------------------------------------------------

/// u(x, t) = u~(delta^{-1/2} x, t / delta).
SpaceTimeFn rescale_gp(SpaceTimeFn u_tilde, double delta);

/// Finite-difference residual of i u_t + Lap u + kappa (1-|u|^2) u (or - kappa |u|^2 u) at (x, t).
cplx pointwise_residual(const SpaceTimeFn& u, const Vec3& x, double t, double kappa, Nonlinearity form, double h);

/// u = delta^{1/2} e^{it} u~, slice by slice.
std::vector<ComplexField> gauge_lift(std::span<const ComplexField> u_tilde, std::span<const double> times,
                                     double delta);
ComplexField gauge_lift(const ComplexField& u_tilde, double t, double delta);

/// 1 where |u| <= tol (tol = 0 marks exact zeros).
std::vector<std::uint8_t> zero_indicator(const ComplexField& u, double tol = 0.0);

/// Background-one storage helpers: d = 1 - u and back.
ComplexField to_deviation(const ComplexField& u);
ComplexField from_deviation(const ComplexField& d);

// --- torus construction ----------------------------------------------------------------

struct Rational {
  long long num = 0;
  long long den = 1;
};

/// Best rational approximation with denominator <= q_max (continued fractions).
Rational best_rational(double x, long long q_max);

struct TorusOptions {
  long long denominator_limit = 10000;
  double t_max = 1.0;
  /// Half side of the cube used by the reference quadrature; 0 picks the default 6.
  double reference_radius = 6.0;
  int reference_nodes = 48;
  /// Exact v(x, t) = int e^{i xi.x - i|xi|^2 t} v0(xi) dxi if known.
  SpaceTimeFn reference;
};

struct RationalizedDatum {
  int J = 0;
  long long N = 1;
  std::vector<Vec3> nodes;                      // Riemann nodes xi_j
  std::vector<Vec3> snapped;                    // m_j / N
  std::vector<std::array<long long, 3>> lattice;  // m_j
  std::vector<cplx> weights;                    // v0(xi_j) * cell volume
  double riemann_error = 0.0;
  double snapping_error = 0.0;

  /// sum_j w_j e^{i xi.x - i|xi|^2 t} at the unsnapped or snapped nodes.
  cplx v1(const Vec3& x, double t, bool snapped_nodes = true) const;
  /// w(x, t) = v1(N x, N^2 t) evaluated with integer frequencies, exactly 2 pi-periodic.
  cplx torus(const Vec3& x, double t) const;
};

/// Rationalize explicit frequency nodes with given weights.
RationalizedDatum rationalize_nodes(std::span<const Vec3> nodes, std::span<const cplx> weights, long long q_max,
                                    long long denominator_limit = 10000);

/// Riemann sum of int e^{i xi.x - i|xi|^2 t} v0(xi) dxi over the cube of side J
/// (cells of side 1/J, midpoints), snapped to rationals, with its errors on B_1 x (0, t_max).
RationalizedDatum torus_rationalize(const std::function<cplx(const Vec3&)>& v0_hat, int J, long long q_max,
                                    const TorusOptions& options = {});

}  // namespace vortexlab::evolve
