#pragma once

// Approximation of a local free-Schrodinger solution on D x (-T, T) by a
// global one: time Fourier transform, per-frequency Helmholtz approximation,
// frequency assembly, Gaussian damping and exact free propagation.

#include <nlohmann/json.hpp>

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "vortexlab/helmholtz.hpp"

namespace vortexlab::schrod {

using helmholtz::cplx;
using helmholtz::Domain;
using SpaceTimeFn = std::function<cplx(const Vec3&, double)>;

/// Samples of v on the midpoint voxels of D at times t_j = -T + j dt, j < M, dt = 2T/M.
struct SpacetimeSamples {
  Domain domain;
  int nodes_per_axis = 0;
  helmholtz::VoxelSet voxels;
  double T = 0.0;
  std::vector<double> times;
  std::vector<cplx> values;  // values[j * voxels.size() + i]
  double residual = 0.0;     // relative discrete residual of i v_t + Lap v

  std::size_t voxel_count() const { return voxels.size(); }
  std::span<const cplx> slice(std::size_t j) const {
    return std::span<const cplx>(values).subspan(j * voxels.size(), voxels.size());
  }
  double dt() const { return times.size() > 1 ? times[1] - times[0] : 2.0 * T; }
  /// Discrete L^2(D x (-T, T)) norm.
  double l2_norm() const;

  /// Throws NotASolutionError when the residual exceeds residual_tol and
  /// DomainError unless time_samples >= 64 is even.
  static SpacetimeSamples sample(const Domain& domain, int nodes_per_axis, double T, int time_samples,
                                 const SpaceTimeFn& v, double residual_tol = 0.1);
};

/// Tail hypothesis int_{|tau|>tau0} ||v^(., tau)||^2 dtau <= M^2 <tau0>^{-sigma}.
struct TailFit {
  bool ok = false;
  double M = 0.0;
  double sigma = 0.0;
  std::string note;
};

/// v^(x, tau_q) = (1/2pi) sum_j e^{-i tau_q t_j} v(x, t_j) dt on the grid tau_q = q pi/T.
struct FourierSlices {
  double dtau = 0.0;
  std::vector<double> taus;                // ascending, q = -M/2 .. M/2 - 1
  std::vector<std::vector<cplx>> slices;   // per frequency, per voxel
  std::vector<double> norms;               // ||v^(., tau_q)||_{L^2(D)}
  TailFit tail;

  /// 2 pi sum_q ||v^_q||^2 dtau (equals ||v||^2_{L^2(D x (-T,T))}).
  double parseval() const;
};

FourierSlices time_fourier(const SpacetimeSamples& v);

struct Layer {
  int index = 0;       // position in FourierSlices::taus
  double tau = 0.0;
  double weight = 0.0; // dtau
  helmholtz::SphericalExpansion psi;  // about the domain centre
  double runge_error = 0.0;
  double slice_error = 0.0;          // ||psi - v^_q|| / ||v^_q|| on D
  double helmholtz_residual = 0.0;
};

struct FrequencyStack {
  Vec3 center{0.0, 0.0, 0.0};
  double tau_cutoff = 0.0;
  double epsilon_slice = 0.0;
  double K = 0.0;
  double sigma = 0.0;
  double M = 0.0;
  std::vector<Layer> layers;
  std::vector<std::string> log;

  bool empty() const { return layers.empty(); }
};

struct SweepOptions {
  Domain source = Domain::ball({3.0, 0.0, 0.0}, 0.3);
  helmholtz::Resolution resolution{};
  int degree = 20;
  double K = -1.0;              // < 0: 1 + 1/sigma + 0.5
  double cutoff_constant = 1.0; // c in tau_eps = c eps^{-2/sigma}
  int max_slices = 512;
  double zero_threshold = 1e-10;  // slices below this fraction of the largest are dropped
  std::optional<double> sigma;    // override the fitted tail exponent
  std::optional<double> M;
  double fallback_sigma = 2.0;    // used when the tail fit fails and no override is given
  /// Slice tolerance override (skips eps^K).
  std::optional<double> epsilon_slice;
  helmholtz::RungeOptions runge{};
  helmholtz::TruncationOptions truncation{};
};

/// Per-frequency Runge approximation and spherical truncation. Throws
/// UnreachableToleranceError tagged with the slice index.
FrequencyStack frequency_sweep(const SpacetimeSamples& v, const FourierSlices& slices, double eps,
                               const SweepOptions& options = {});

/// v1(x, t) = sum_q dtau e^{i tau_q t} psi_q(x).
cplx assemble_v1(const FrequencyStack& stack, const Vec3& x, double t);

/// e^{it Lap} u_delta at (x, t), u_delta(x) = v1(x, 0) exp(-delta |x - c|^2), per mode by
///   (1 + 4i delta t)^{-3/2} exp((-delta r^2 + i tau t)/(1 + 4i delta t)) rho^l E_l(tau rho^2) Y_lm,
/// rho = r / (1 + 4i delta t). Throws DomainError unless delta > 0.
cplx damp_and_propagate(const FrequencyStack& stack, double delta, const Vec3& x, double t);

struct DeltaStep {
  double delta = 0.0;
  double relative_error = 0.0;
};

struct SchwartzOptions {
  SweepOptions sweep{};
  std::optional<Domain> interior;  // measure the error on D' instead of D
  double delta0 = 0.5;
  double delta_max = 0.5;
  int max_halvings = 20;
  int sobolev_order = 0;  // 0 or 1: also report the discrete H^1 norm of u_delta
  double norm_radius = -1.0;  // < 0: centre + sqrt(70 / delta)
};

struct SchwartzReport {
  double epsilon = 0.0;
  double delta = 0.0;
  double relative_error = 0.0;   // ||v - w_delta|| / ||v|| on D(') x (-T, T)
  double v1_relative_error = 0.0;
  double data_norm = 0.0;        // ||v||_{L^2(D x (-T,T))}
  double datum_l2_norm = 0.0;    // ||u_delta||_{L^2(R^3)}
  std::optional<double> datum_h1_norm;
  bool target_met = false;
  std::vector<DeltaStep> trace;
  std::vector<std::string> notes;
  nlohmann::json budgets;  // metadata only

  nlohmann::json to_json() const;
};

struct DampedDatum {
  FrequencyStack stack;
  double delta = 0.0;
  cplx initial(const Vec3& x) const { return damp_and_propagate(stack, delta, x, 0.0); }
  cplx operator()(const Vec3& x, double t) const { return damp_and_propagate(stack, delta, x, t); }
};

struct SchwartzResult {
  DampedDatum datum;
  SchwartzReport report;
};

/// End to end: time_fourier -> frequency_sweep -> delta halving from delta0
/// until the error stops improving or falls below eps. Never throws for an
/// unreachable target; the best achieved error is reported instead.
SchwartzResult build_schwartz_datum(const SpacetimeSamples& v, double eps, const SchwartzOptions& options = {});

/// Relative L^2 error of a space-time function against the samples (optionally on D' only).
double relative_error(const SpacetimeSamples& v, const SpaceTimeFn& w, const std::optional<Domain>& interior = {});

/// ||u_delta||_{L^2(R^3)} and ||grad u_delta|| (when requested): exact angular
/// orthogonality of Y_lm leaves one radial Gauss-Legendre integral per mode.
std::pair<double, double> datum_norms(const FrequencyStack& stack, double delta, double radius, bool with_gradient);

}  // namespace vortexlab::schrod
