#pragma once

// Global approximation for the Helmholtz-Yukawa equation
//   Lap phi - tau phi = 0   in R^3
// by sources placed on a set Y away from the approximation domain D.

#include <Eigen/Dense>
#include <nlohmann/json.hpp>

#include <array>
#include <complex>
#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <vector>

#include "vortexlab/vec3.hpp"

namespace vortexlab::helmholtz {

using cplx = std::complex<double>;
using FieldFn = std::function<cplx(const Vec3&)>;

/// tau with its positive and negative parts, tau = plus - minus.
struct Frequency {
  double tau = 0.0;

  double plus() const { return 0.5 * (std::abs(tau) + tau); }
  double minus() const { return 0.5 * (std::abs(tau) - tau); }
};

/// G_tau with Lap G - tau G = delta_0 in R^3:
///   tau > 0:  beta   tau^{1/4} K_{1/2}(sqrt(tau)|x|) / |x|^{1/2}
///   tau = 0:  beta'  |x|^{-1}
///   tau < 0:  beta'' |tau|^{1/4} Y_{1/2}(sqrt(|tau|)|x|) / |x|^{1/2}
/// The tau < 0 branch is the standing-wave solution (no radiation condition).
class FundamentalSolution {
 public:
  explicit FundamentalSolution(Frequency tau);

  Frequency frequency() const { return tau_; }
  double normalization() const { return beta_; }

  /// G as a function of r > 0, evaluated through the Bessel functions.
  double radial_bessel(double r) const;
  /// Same function through the elementary form of the order-1/2 Bessel functions.
  double radial(double r) const;
  /// Throws DomainError at x = 0.
  double operator()(const Vec3& x) const;

 private:
  Frequency tau_;
  double beta_ = 0.0;
  double root_ = 0.0;  // sqrt(|tau|)
};

FundamentalSolution fundamental_solution(Frequency tau);

/// Axis-aligned ball or box.
struct Domain {
  enum class Shape { Ball, Box };

  Shape shape = Shape::Ball;
  Vec3 center{0.0, 0.0, 0.0};
  double radius = 1.0;
  Vec3 half_extent{1.0, 1.0, 1.0};

  static Domain ball(const Vec3& center, double radius);
  static Domain box(const Vec3& center, const Vec3& half_extent);

  bool contains(const Vec3& x) const;
  /// Radius of the smallest ball about `center` containing the domain.
  double bounding_radius() const;
  /// Distance from the closed ball B(c, r) to this domain (negative when they overlap).
  double distance_to_ball(const Vec3& c, double r) const;
  /// Interior set obtained by moving the boundary inwards by `margin`.
  Domain shrunk(double margin) const;
};

/// Midpoint-voxel quadrature: centres of a uniform grid that lie in a domain,
/// each with weight h^3. Keeps grid adjacency for finite differences.
class VoxelSet {
 public:
  static VoxelSet build(const Domain& domain, int nodes_per_axis);

  std::size_t size() const { return nodes_.size(); }
  double spacing() const { return h_; }
  std::span<const Vec3> nodes() const { return nodes_; }
  std::span<const double> weights() const { return weights_; }

  /// Index of the neighbour in direction `dir` (+1/-1) along `axis`, or -1.
  int neighbor(std::size_t node, int axis, int dir) const;
  /// Nodes whose six neighbours all belong to the set.
  const std::vector<std::size_t>& interior() const { return interior_; }

  double l2_norm(std::span<const cplx> values) const;
  /// Discrete H^1 norm: L^2 plus one-sided-difference gradient over available pairs.
  double h1_norm(std::span<const cplx> values) const;
  /// 7-point Laplacian on interior nodes; zero elsewhere.
  std::vector<cplx> laplacian(std::span<const cplx> values) const;
  std::vector<cplx> sample(const FieldFn& fn) const;

 private:
  std::array<int, 3> dims_{};
  Vec3 origin_{};
  double h_ = 0.0;
  std::vector<Vec3> nodes_;
  std::vector<double> weights_;
  std::vector<std::array<int, 3>> ijk_;
  std::vector<int> lookup_;
  std::vector<std::size_t> interior_;
};

/// Relative residual |Lap_h phi - tau phi| / (|Lap_h phi| + |tau||phi|) over interior nodes.
double helmholtz_residual(const VoxelSet& set, std::span<const cplx> phi, double tau);

struct Resolution {
  int domain_nodes_per_axis = 16;
  int source_nodes_per_axis = 8;
};

/// Discretized f -> (G_tau * f)|_D with f supported on Y, together with its
/// SVD in the weighted inner products of L^2(Y) and L^2(D). Immutable.
class SourceOperator {
 public:
  static SourceOperator build(const Domain& target, const Domain& source, Frequency tau, Resolution res = {});

  Frequency frequency() const { return green_.frequency(); }
  const FundamentalSolution& green() const { return green_; }
  const Domain& target_domain() const { return target_domain_; }
  const Domain& source_domain() const { return source_domain_; }
  const VoxelSet& domain() const { return domain_; }
  const VoxelSet& sources() const { return sources_; }

  /// A(i, j) = G(x_i - y_j) w_j.
  const Eigen::MatrixXd& matrix() const { return matrix_; }
  /// Nonincreasing singular values alpha_k.
  const Eigen::VectorXd& singular_values() const { return sigma_; }
  /// Orthonormal (in L^2(Y)) right singular functions f_k as columns.
  Eigen::MatrixXd source_modes() const;
  /// Orthonormal (in L^2(D)) left singular functions phi_k as columns, A f_k = alpha_k phi_k.
  Eigen::MatrixXd domain_modes() const;
  /// Weighted left/right factors of W_D^{1/2} A W_Y^{-1/2} = U S V^T.
  const Eigen::MatrixXd& u() const { return u_; }
  const Eigen::MatrixXd& v() const { return v_; }

  std::vector<cplx> apply(std::span<const cplx> f) const;
  /// Adjoint with respect to the quadrature inner products.
  std::vector<cplx> adjoint(std::span<const cplx> g) const;
  /// (G * F)(x) at any x away from the source nodes.
  cplx extend(std::span<const cplx> f, const Vec3& x) const;

  /// <a, b>_D and <a, b>_Y with the quadrature weights (conjugate-linear in a).
  cplx inner_domain(std::span<const cplx> a, std::span<const cplx> b) const;
  cplx inner_source(std::span<const cplx> a, std::span<const cplx> b) const;

 private:
  SourceOperator(const Domain& target, const Domain& source, Frequency tau, Resolution res);

  FundamentalSolution green_;
  Domain target_domain_;
  Domain source_domain_;
  VoxelSet domain_;
  VoxelSet sources_;
  Eigen::MatrixXd matrix_;
  Eigen::MatrixXd u_;
  Eigen::MatrixXd v_;
  Eigen::VectorXd sigma_;
  Eigen::VectorXd sqrt_wd_;
  Eigen::VectorXd sqrt_wy_;
};

struct RungeOptions {
  double residual_tol = 0.1;
  std::optional<Domain> interior;
  int max_bisection = 40;
  /// Stand-in for the unspecified constant C in the budgets N, N~.
  double budget_constant = 1.0;
};

struct BisectionStep {
  double alpha = 0.0;
  double relative_error = 0.0;
  int modes = 0;
};

struct RungeReport {
  double epsilon = 0.0;
  double tau = 0.0;
  double alpha = 0.0;
  int modes_used = 0;
  double relative_error = 0.0;
  std::optional<double> relative_error_interior;
  double input_norm = 0.0;
  double input_h1_norm = 0.0;
  double source_norm = 0.0;
  double pde_residual = 0.0;
  double budget_constant = 1.0;
  double log_budget_n = 0.0;        // log N_{eps,tau}
  double log_budget_n_tilde = 0.0;  // log N~_{eps,tau}
  std::vector<BisectionStep> trace;
  std::optional<double> triple_seminorm;
  std::optional<double> weighted_sup;
  std::optional<double> truncation_error;
  std::optional<int> truncation_degree;

  nlohmann::json to_json() const;
};

struct RungeResult {
  std::vector<cplx> sources;  // F on Y nodes
  std::vector<cplx> field;    // w = A F on D nodes
  RungeReport report;
};

/// log N_{eps,tau} and log N~_{eps,tau} with constant C.
std::pair<double, double> log_budgets(double eps, Frequency tau, double constant);

/// Truncated-SVD approximation of a local solution phi on D by G_tau * F.
/// The cutoff alpha is the largest value (bisection over the singular
/// spectrum) for which the relative L^2 error on D (or D') is <= eps.
/// Throws NotASolutionError when phi fails the residual check and
/// UnreachableToleranceError when no cutoff reaches eps.
RungeResult runge_approximate(const SourceOperator& op, std::span<const cplx> phi, double eps,
                              const RungeOptions& options = {});

// --- spherical expansions ------------------------------------------------------

/// psi(x) = sum_{l <= l0} sum_m A_lm r^l E_l(tau r^2) Y_lm(x/|x|), an entire
/// solution of Lap psi = tau psi. Coefficients refer to the normalized radial
/// basis r^l E_l(tau r^2) (equal to r^l at tau = 0); bessel_coefficient()
/// converts to the basis r^{-1/2} I_{l+1/2}(r sqrt(tau)).
class SphericalExpansion {
 public:
  SphericalExpansion() = default;
  SphericalExpansion(Frequency tau, int degree, std::vector<cplx> coefficients);

  Frequency frequency() const { return tau_; }
  int degree() const { return degree_; }
  std::span<const cplx> coefficients() const { return coeffs_; }
  cplx coefficient(int l, int m) const;
  cplx bessel_coefficient(int l, int m) const;
  double coefficient_norm() const;

  cplx operator()(const Vec3& x) const;
  /// Radial factor |x|^l E_l(tau |x|^2) for l <= degree.
  std::vector<cplx> radial_factors(double r) const;

  /// (l, m) pairs whose coefficient was zeroed because the radial energy underflowed.
  std::vector<std::pair<int, int>> flagged;

 private:
  Frequency tau_{};
  int degree_ = -1;
  std::vector<cplx> coeffs_;
};

struct TruncationOptions {
  double outer_radius = 1.2;  // R'' of the ball B''
  int radial_nodes = 32;
  int sphere_degree = -1;  // default degree + 12
  double min_energy = 1e-300;
};

/// Spherical-harmonic truncation at degree l0 of a field w that solves the
/// equation on a ball B'' (radius options.outer_radius).
SphericalExpansion spherical_truncate(const FieldFn& w, Frequency tau, int degree, const TruncationOptions& options = {});

struct GlobalNorms {
  double triple_seminorm = 0.0;
  double weighted_sup = 0.0;
};

/// Finite-R surrogates of the weighted Agmon-Hormander seminorm and the
/// weighted sup norm. Rejects tau = 0 (the seminorm degenerates there).
GlobalNorms global_norms(const SphericalExpansion& psi, double r_max);
/// Weighted sup alone; defined for every tau.
double weighted_sup_norm(const SphericalExpansion& psi, double r_max);
/// ||psi||_{L^2(B_R)} computed from the coefficients.
double ball_norm(const SphericalExpansion& psi, double radius);

struct StabilityRow {
  int trial = 0;
  double inner = 0.0;
  double middle = 0.0;
  double outer = 0.0;
  double interpolated = 0.0;  // inner^theta outer^(1-theta) at the fitted theta
};

struct StabilityResult {
  double constant = 0.0;
  double theta = 0.0;
  int excluded = 0;
  bool holds = false;
  std::vector<StabilityRow> rows;
};

/// Three-ball probe for the given solutions: fits (C, theta) with the
/// smallest C such that ||psi||_{B2} <= C ||psi||_{B1}^theta ||psi||_{B3}^{1-theta}.
StabilityResult stability_probe(std::span<const SphericalExpansion> solutions, std::array<double, 3> radii);
/// Same with `trials` random expansions of degree <= max_degree.
StabilityResult stability_probe(Frequency tau, std::array<double, 3> radii, int trials, std::uint64_t seed,
                                int max_degree = 4);

}  // namespace vortexlab::helmholtz
