#include "vortexlab/helmholtz.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>
#include <string>

#include "vortexlab/errors.hpp"
#include "vortexlab/kernels.hpp"
#include "vortexlab/quadrature.hpp"
#include "vortexlab/specfun.hpp"

namespace vortexlab::helmholtz {

namespace {

constexpr double kPi = std::numbers::pi;
constexpr double kFourPi = 4.0 * std::numbers::pi;

std::size_t uz(int v) { return static_cast<std::size_t>(v); }

}  // namespace

// --- fundamental solution ----------------------------------------------------------

FundamentalSolution::FundamentalSolution(Frequency tau) : tau_(tau), root_(std::sqrt(std::abs(tau.tau))) {
  if (!std::isfinite(tau.tau)) throw DomainError("fundamental_solution: tau must be finite");
  if (tau.tau > 0.0) {
    beta_ = -std::sqrt(2.0 / kPi) / kFourPi;
  } else if (tau.tau < 0.0) {
    beta_ = std::sqrt(kPi / 2.0) / kFourPi;
  } else {
    beta_ = -1.0 / kFourPi;
  }
}

double FundamentalSolution::radial_bessel(double r) const {
  if (!(r > 0.0)) throw DomainError("fundamental solution evaluated at x = 0");
  if (tau_.tau == 0.0) return beta_ / r;
  const auto kind = tau_.tau > 0.0 ? specfun::BesselKind::K : specfun::BesselKind::Y;
  return beta_ * std::sqrt(root_) * specfun::bessel_real(kind, 0.5, root_ * r) / std::sqrt(r);
}

double FundamentalSolution::radial(double r) const {
  if (!(r > 0.0)) throw DomainError("fundamental solution evaluated at x = 0");
  if (tau_.tau > 0.0) return -std::exp(-root_ * r) / (kFourPi * r);
  if (tau_.tau < 0.0) return -std::cos(root_ * r) / (kFourPi * r);
  return -1.0 / (kFourPi * r);
}

double FundamentalSolution::operator()(const Vec3& x) const { return radial(norm(x)); }

FundamentalSolution fundamental_solution(Frequency tau) { return FundamentalSolution(tau); }

// --- domains -------------------------------------------------------------------------

Domain Domain::ball(const Vec3& center, double radius) {
  if (!(radius > 0.0)) throw GeometryError("ball radius must be positive");
  Domain d;
  d.shape = Shape::Ball;
  d.center = center;
  d.radius = radius;
  d.half_extent = {radius, radius, radius};
  return d;
}

Domain Domain::box(const Vec3& center, const Vec3& half_extent) {
  for (double h : half_extent)
    if (!(h > 0.0)) throw GeometryError("box half extents must be positive");
  Domain d;
  d.shape = Shape::Box;
  d.center = center;
  d.half_extent = half_extent;
  d.radius = norm(half_extent);
  return d;
}

bool Domain::contains(const Vec3& x) const {
  const Vec3 d = x - center;
  if (shape == Shape::Ball) return dot(d, d) <= radius * radius;
  for (int a = 0; a < 3; ++a)
    if (std::abs(d[uz(a)]) > half_extent[uz(a)]) return false;
  return true;
}

double Domain::bounding_radius() const { return shape == Shape::Ball ? radius : norm(half_extent); }

double Domain::distance_to_ball(const Vec3& c, double r) const {
  if (shape == Shape::Ball) return norm(c - center) - radius - r;
  Vec3 outside{};
  for (int a = 0; a < 3; ++a) {
    const double d = std::abs(c[uz(a)] - center[uz(a)]) - half_extent[uz(a)];
    outside[uz(a)] = std::max(d, 0.0);
  }
  return norm(outside) - r;
}

Domain Domain::shrunk(double margin) const {
  if (shape == Shape::Ball) return ball(center, radius - margin);
  return box(center, {half_extent[0] - margin, half_extent[1] - margin, half_extent[2] - margin});
}

// --- voxel sets ----------------------------------------------------------------------

VoxelSet VoxelSet::build(const Domain& domain, int nodes_per_axis) {
  if (nodes_per_axis < 4) throw DomainError("voxel set: need at least 4 nodes per axis");
  VoxelSet set;
  const double widest = 2.0 * std::max({domain.half_extent[0], domain.half_extent[1], domain.half_extent[2]});
  set.h_ = widest / nodes_per_axis;
  for (int a = 0; a < 3; ++a) {
    const int n = std::max(1, static_cast<int>(std::lround(2.0 * domain.half_extent[uz(a)] / set.h_)));
    set.dims_[uz(a)] = n;
    set.origin_[uz(a)] = domain.center[uz(a)] - 0.5 * n * set.h_;
  }
  const auto [nx, ny, nz] = set.dims_;
  set.lookup_.assign(uz(nx) * uz(ny) * uz(nz), -1);
  const double w = set.h_ * set.h_ * set.h_;
  for (int i = 0; i < nx; ++i)
    for (int j = 0; j < ny; ++j)
      for (int k = 0; k < nz; ++k) {
        const Vec3 p{set.origin_[0] + (i + 0.5) * set.h_, set.origin_[1] + (j + 0.5) * set.h_,
                     set.origin_[2] + (k + 0.5) * set.h_};
        if (!domain.contains(p)) continue;
        set.lookup_[(uz(i) * uz(ny) + uz(j)) * uz(nz) + uz(k)] = static_cast<int>(set.nodes_.size());
        set.nodes_.push_back(p);
        set.weights_.push_back(w);
        set.ijk_.push_back({i, j, k});
      }
  if (set.nodes_.empty()) throw GeometryError("voxel set: domain contains no grid nodes");
  for (std::size_t n = 0; n < set.nodes_.size(); ++n) {
    bool inner = true;
    for (int a = 0; a < 3 && inner; ++a)
      for (int dir : {-1, 1})
        if (set.neighbor(n, a, dir) < 0) inner = false;
    if (inner) set.interior_.push_back(n);
  }
  return set;
}

int VoxelSet::neighbor(std::size_t node, int axis, int dir) const {
  auto ijk = ijk_[node];
  ijk[uz(axis)] += dir;
  for (int a = 0; a < 3; ++a)
    if (ijk[uz(a)] < 0 || ijk[uz(a)] >= dims_[uz(a)]) return -1;
  return lookup_[(uz(ijk[0]) * uz(dims_[1]) + uz(ijk[1])) * uz(dims_[2]) + uz(ijk[2])];
}

double VoxelSet::l2_norm(std::span<const cplx> values) const {
  double s = 0.0;
  for (std::size_t i = 0; i < values.size(); ++i) s += weights_[i] * std::norm(values[i]);
  return std::sqrt(s);
}

double VoxelSet::h1_norm(std::span<const cplx> values) const {
  double grad = 0.0;
  const double w = h_ * h_ * h_;
  for (std::size_t n = 0; n < size(); ++n)
    for (int a = 0; a < 3; ++a) {
      const int m = neighbor(n, a, 1);
      if (m >= 0) grad += w * std::norm((values[uz(m)] - values[n]) / h_);
    }
  const double l2 = l2_norm(values);
  return std::sqrt(l2 * l2 + grad);
}

std::vector<cplx> VoxelSet::laplacian(std::span<const cplx> values) const {
  std::vector<cplx> out(size(), cplx{0.0, 0.0});
  const double inv_h2 = 1.0 / (h_ * h_);
  for (std::size_t n : interior_) {
    cplx acc = -6.0 * values[n];
    for (int a = 0; a < 3; ++a)
      for (int dir : {-1, 1}) acc += values[uz(neighbor(n, a, dir))];
    out[n] = acc * inv_h2;
  }
  return out;
}

std::vector<cplx> VoxelSet::sample(const FieldFn& fn) const {
  std::vector<cplx> out(size());
  for (std::size_t i = 0; i < size(); ++i) out[i] = fn(nodes_[i]);
  return out;
}

double helmholtz_residual(const VoxelSet& set, std::span<const cplx> phi, double tau) {
  const auto lap = set.laplacian(phi);
  double num = 0.0;
  double den = 0.0;
  for (std::size_t n : set.interior()) {
    num += std::norm(lap[n] - tau * phi[n]);
    den += std::pow(std::abs(lap[n]) + std::abs(tau) * std::abs(phi[n]), 2);
  }
  return den > 0.0 ? std::sqrt(num / den) : 0.0;
}

// --- source operator -----------------------------------------------------------------

SourceOperator::SourceOperator(const Domain& target, const Domain& source, Frequency tau, Resolution res)
    : green_(tau),
      target_domain_(target),
      source_domain_(source),
      domain_(VoxelSet::build(target, res.domain_nodes_per_axis)),
      sources_(VoxelSet::build(source, res.source_nodes_per_axis)) {}

SourceOperator SourceOperator::build(const Domain& target, const Domain& source, Frequency tau, Resolution res) {
  const double gap = source.distance_to_ball(target.center, target.bounding_radius());
  if (!(gap > 0.0)) throw GeometryError("source set Y meets the bounding ball of D");
  SourceOperator op(target, source, tau, res);

  const std::size_t nd = op.domain_.size();
  const std::size_t ny = op.sources_.size();
  op.sqrt_wd_.resize(static_cast<Eigen::Index>(nd));
  op.sqrt_wy_.resize(static_cast<Eigen::Index>(ny));
  for (std::size_t i = 0; i < nd; ++i) op.sqrt_wd_[static_cast<Eigen::Index>(i)] = std::sqrt(op.domain_.weights()[i]);
  for (std::size_t j = 0; j < ny; ++j) op.sqrt_wy_[static_cast<Eigen::Index>(j)] = std::sqrt(op.sources_.weights()[j]);

  // Symmetrically weighted kernel W_D^{1/2} G W_Y^{1/2}; its SVD is the SVD of A in L^2(Y) -> L^2(D).
  Eigen::MatrixXd weighted(static_cast<Eigen::Index>(nd), static_cast<Eigen::Index>(ny));
  const FundamentalSolution& g = op.green_;
  kernels::parallel::assemble_kernel_matrix(
      op.domain_.nodes(), op.sources_.nodes(), {op.sqrt_wd_.data(), nd}, {op.sqrt_wy_.data(), ny},
      [&g](double r) { return g.radial(r); }, weighted.data());

  op.matrix_ = op.sqrt_wd_.cwiseInverse().asDiagonal() * weighted * op.sqrt_wy_.asDiagonal();
  if (!op.matrix_.allFinite()) throw GeometryError("source operator has non-finite entries");

  Eigen::BDCSVD<Eigen::MatrixXd> svd(weighted, Eigen::ComputeThinU | Eigen::ComputeThinV);
  op.u_ = svd.matrixU();
  op.v_ = svd.matrixV();
  op.sigma_ = svd.singularValues();
  return op;
}

Eigen::MatrixXd SourceOperator::source_modes() const { return sqrt_wy_.cwiseInverse().asDiagonal() * v_; }

Eigen::MatrixXd SourceOperator::domain_modes() const { return sqrt_wd_.cwiseInverse().asDiagonal() * u_; }

namespace {

Eigen::VectorXcd to_eigen(std::span<const cplx> v) {
  Eigen::VectorXcd out(static_cast<Eigen::Index>(v.size()));
  for (std::size_t i = 0; i < v.size(); ++i) out[static_cast<Eigen::Index>(i)] = v[i];
  return out;
}

std::vector<cplx> to_std(const Eigen::VectorXcd& v) { return {v.data(), v.data() + v.size()}; }

}  // namespace

std::vector<cplx> SourceOperator::apply(std::span<const cplx> f) const {
  if (f.size() != sources_.size()) throw DomainError("apply: source vector has the wrong length");
  return to_std(matrix_.cast<cplx>() * to_eigen(f));
}

std::vector<cplx> SourceOperator::adjoint(std::span<const cplx> g) const {
  if (g.size() != domain_.size()) throw DomainError("adjoint: domain vector has the wrong length");
  const Eigen::VectorXd wd = sqrt_wd_.cwiseAbs2();
  const Eigen::VectorXd inv_wy = sqrt_wy_.cwiseAbs2().cwiseInverse();
  Eigen::VectorXcd weighted = wd.cast<cplx>().cwiseProduct(to_eigen(g));
  Eigen::VectorXcd out = matrix_.transpose().cast<cplx>() * weighted;
  return to_std(inv_wy.cast<cplx>().cwiseProduct(out));
}

cplx SourceOperator::extend(std::span<const cplx> f, const Vec3& x) const {
  if (f.size() != sources_.size()) throw DomainError("extend: source vector has the wrong length");
  cplx acc{0.0, 0.0};
  for (std::size_t j = 0; j < f.size(); ++j)
    acc += green_(x - sources_.nodes()[j]) * sources_.weights()[j] * f[j];
  return acc;
}

cplx SourceOperator::inner_domain(std::span<const cplx> a, std::span<const cplx> b) const {
  cplx s{0.0, 0.0};
  for (std::size_t i = 0; i < a.size(); ++i) s += domain_.weights()[i] * std::conj(a[i]) * b[i];
  return s;
}

cplx SourceOperator::inner_source(std::span<const cplx> a, std::span<const cplx> b) const {
  cplx s{0.0, 0.0};
  for (std::size_t i = 0; i < a.size(); ++i) s += sources_.weights()[i] * std::conj(a[i]) * b[i];
  return s;
}

// --- Runge approximation -------------------------------------------------------------

std::pair<double, double> log_budgets(double eps, Frequency tau, double constant) {
  const double bracket = std::sqrt(1.0 + tau.tau * tau.tau);
  const double growth = std::exp(constant * std::sqrt(tau.minus()));
  const double log_n = constant * std::sqrt(bracket) * growth / eps;
  const double log_n_tilde = constant * std::log(bracket / eps) + constant * std::sqrt(tau.minus());
  return {log_n, log_n_tilde};
}

nlohmann::json RungeReport::to_json() const {
  nlohmann::json j;
  j["epsilon"] = epsilon;
  j["tau"] = tau;
  j["alpha"] = alpha;
  j["modes_used"] = modes_used;
  j["relative_error"] = relative_error;
  j["relative_error_interior"] = relative_error_interior ? nlohmann::json(*relative_error_interior) : nlohmann::json();
  j["input_norm"] = input_norm;
  j["input_h1_norm"] = input_h1_norm;
  j["source_norm"] = source_norm;
  j["pde_residual"] = pde_residual;
  j["budgets"] = {{"constant", budget_constant}, {"log_N", log_budget_n}, {"log_N_tilde", log_budget_n_tilde}};
  nlohmann::json surrogates = nlohmann::json::object();
  if (triple_seminorm) surrogates["triple_seminorm"] = *triple_seminorm;
  if (weighted_sup) surrogates["weighted_sup"] = *weighted_sup;
  j["norm_surrogates"] = surrogates;
  if (truncation_degree) j["truncation_degree"] = *truncation_degree;
  if (truncation_error) j["truncation_error"] = *truncation_error;
  nlohmann::json steps = nlohmann::json::array();
  for (const auto& s : trace) steps.push_back({{"alpha", s.alpha}, {"relative_error", s.relative_error}, {"modes", s.modes}});
  j["trace"] = steps;
  return j;
}

RungeResult runge_approximate(const SourceOperator& op, std::span<const cplx> phi, double eps,
                              const RungeOptions& options) {
  if (!(eps > 0.0 && eps < 1.0)) throw DomainError("runge_approximate: eps must lie in (0, 1)");
  const VoxelSet& dom = op.domain();
  if (phi.size() != dom.size()) throw DomainError("runge_approximate: phi has the wrong length");

  RungeResult result;
  RungeReport& rep = result.report;
  rep.epsilon = eps;
  rep.tau = op.frequency().tau;
  rep.budget_constant = options.budget_constant;
  std::tie(rep.log_budget_n, rep.log_budget_n_tilde) = log_budgets(eps, op.frequency(), options.budget_constant);
  rep.input_norm = dom.l2_norm(phi);
  rep.input_h1_norm = dom.h1_norm(phi);
  result.sources.assign(op.sources().size(), cplx{0.0, 0.0});
  result.field.assign(dom.size(), cplx{0.0, 0.0});
  const Eigen::VectorXd& sigma = op.singular_values();
  if (rep.input_norm == 0.0) {
    rep.alpha = sigma.size() > 0 ? sigma[0] : 0.0;
    if (options.interior) rep.relative_error_interior = 0.0;
    return result;
  }

  rep.pde_residual = helmholtz_residual(dom, phi, op.frequency().tau);
  if (rep.pde_residual > options.residual_tol)
    throw NotASolutionError("runge_approximate: phi fails the PDE residual check", rep.pde_residual);

  const Eigen::Index nd = static_cast<Eigen::Index>(dom.size());
  const Eigen::Index k = sigma.size();
  Eigen::VectorXcd b(nd);
  for (Eigen::Index i = 0; i < nd; ++i) b[i] = std::sqrt(dom.weights()[uz(static_cast<int>(i))]) * phi[uz(static_cast<int>(i))];
  const Eigen::VectorXcd beta = op.u().transpose().cast<cplx>() * b;

  // Error as a function of the number of retained modes.
  std::vector<std::size_t> interior_nodes;
  double interior_norm = 0.0;
  if (options.interior) {
    for (std::size_t i = 0; i < dom.size(); ++i)
      if (options.interior->contains(dom.nodes()[i])) {
        interior_nodes.push_back(i);
        interior_norm += dom.weights()[i] * std::norm(phi[i]);
      }
    interior_norm = std::sqrt(interior_norm);
    if (interior_nodes.empty() || interior_norm == 0.0)
      throw GeometryError("runge_approximate: interior set D' contains no nodes with nonzero data");
  }
  std::vector<double> tail(uz(static_cast<int>(k)) + 1, 0.0);
  const double perp2 = std::max(0.0, (b - op.u().cast<cplx>() * beta).squaredNorm());
  tail[uz(static_cast<int>(k))] = perp2;
  for (Eigen::Index m = k - 1; m >= 0; --m)
    tail[uz(static_cast<int>(m))] = tail[uz(static_cast<int>(m + 1))] + std::norm(beta[m]);

  auto error_with = [&](Eigen::Index m) {
    if (!options.interior) return std::sqrt(tail[uz(static_cast<int>(m))]) / rep.input_norm;
    const Eigen::VectorXcd r = b - op.u().leftCols(m).cast<cplx>() * beta.head(m);
    double s = 0.0;
    for (std::size_t i : interior_nodes) s += std::norm(r[static_cast<Eigen::Index>(i)]);
    return std::sqrt(s) / interior_norm;
  };
  auto modes_above = [&](double alpha) {
    Eigen::Index m = 0;
    while (m < k && sigma[m] > alpha) ++m;
    return m;
  };

  double smallest = sigma[k - 1];
  if (!(smallest > 0.0)) smallest = sigma[0] * 1e-300;
  double lo = std::log(0.5 * smallest);
  double hi = std::log(sigma[0] * (1.0 + 1e-12));
  const double best = error_with(modes_above(std::exp(lo)));
  rep.trace.push_back({std::exp(lo), best, static_cast<int>(modes_above(std::exp(lo)))});
  if (best > eps)
    throw UnreachableToleranceError("runge_approximate: eps unreachable even with every singular mode", best);
  const double none = error_with(0);
  rep.trace.push_back({std::exp(hi), none, 0});
  if (none <= eps) {
    lo = hi;
  } else {
    for (int it = 0; it < options.max_bisection; ++it) {
      const double mid = 0.5 * (lo + hi);
      const Eigen::Index m = modes_above(std::exp(mid));
      const double e = error_with(m);
      rep.trace.push_back({std::exp(mid), e, static_cast<int>(m)});
      if (e <= eps) {
        lo = mid;
      } else {
        hi = mid;
      }
    }
  }
  std::sort(rep.trace.begin(), rep.trace.end(), [](const auto& a, const auto& c) { return a.alpha > c.alpha; });

  rep.alpha = std::exp(lo);
  const Eigen::Index m = modes_above(rep.alpha);
  rep.modes_used = static_cast<int>(m);
  Eigen::VectorXcd coeff = beta.head(m).cwiseQuotient(sigma.head(m).cast<cplx>());
  Eigen::VectorXcd f = op.v().leftCols(m).cast<cplx>() * coeff;
  for (Eigen::Index j = 0; j < f.size(); ++j)
    result.sources[uz(static_cast<int>(j))] = f[j] / std::sqrt(op.sources().weights()[uz(static_cast<int>(j))]);
  result.field = op.apply(result.sources);

  std::vector<cplx> diff(dom.size());
  for (std::size_t i = 0; i < dom.size(); ++i) diff[i] = result.field[i] - phi[i];
  rep.relative_error = dom.l2_norm(diff) / rep.input_norm;
  if (options.interior) {
    double s = 0.0;
    for (std::size_t i : interior_nodes) s += dom.weights()[i] * std::norm(diff[i]);
    rep.relative_error_interior = std::sqrt(s) / interior_norm;
  }
  rep.source_norm = op.sources().l2_norm(result.sources);
  return result;
}

// --- spherical expansions ------------------------------------------------------------

SphericalExpansion::SphericalExpansion(Frequency tau, int degree, std::vector<cplx> coefficients)
    : tau_(tau), degree_(degree), coeffs_(std::move(coefficients)) {
  if (degree < 0) throw DomainError("spherical expansion: negative degree");
  if (coeffs_.size() != uz(specfun::SphericalIndex::count(degree)))
    throw DomainError("spherical expansion: coefficient count does not match the degree");
}

cplx SphericalExpansion::coefficient(int l, int m) const {
  if (l < 0 || l > degree_ || std::abs(m) > l) throw DomainError("spherical expansion: (l, m) out of range");
  return coeffs_[uz(specfun::SphericalIndex{l, m}.packed())];
}

cplx SphericalExpansion::bessel_coefficient(int l, int m) const {
  const cplx a = coefficient(l, m);
  if (tau_.tau == 0.0) return a;
  return a / specfun::half_integer_bessel_factor(l, tau_.tau);
}

double SphericalExpansion::coefficient_norm() const {
  double s = 0.0;
  for (const auto& c : coeffs_) s += std::norm(c);
  return std::sqrt(s);
}

std::vector<cplx> SphericalExpansion::radial_factors(double r) const {
  auto e = specfun::regular_radial_all(degree_, cplx{tau_.tau * r * r, 0.0});
  double rl = 1.0;
  for (int l = 0; l <= degree_; ++l) {
    e[uz(l)] *= rl;
    rl *= r;
  }
  return e;
}

cplx SphericalExpansion::operator()(const Vec3& x) const {
  if (degree_ < 0) return {0.0, 0.0};
  const auto solid = specfun::solid_harmonics(degree_, x);
  const auto radial = specfun::regular_radial_all(degree_, cplx{tau_.tau * dot(x, x), 0.0});
  cplx acc{0.0, 0.0};
  for (int l = 0; l <= degree_; ++l) {
    cplx part{0.0, 0.0};
    for (int m = -l; m <= l; ++m) {
      const auto p = uz(specfun::SphericalIndex{l, m}.packed());
      part += coeffs_[p] * solid[p];
    }
    acc += part * radial[uz(l)];
  }
  return acc;
}

SphericalExpansion spherical_truncate(const FieldFn& w, Frequency tau, int degree, const TruncationOptions& options) {
  if (degree < 0 || degree > 20) throw DomainError("spherical_truncate: degree must lie in [0, 20]");
  const double R = options.outer_radius;
  if (!(R > 0.0)) throw DomainError("spherical_truncate: outer radius must be positive");
  const int sphere_degree = options.sphere_degree < 0 ? degree + 12 : options.sphere_degree;
  const SphereRule sphere = SphereRule::for_degree(sphere_degree);
  const QuadratureRule1D radial = gauss_legendre(options.radial_nodes, 0.0, R);
  const int count = specfun::SphericalIndex::count(degree);

  std::vector<std::vector<double>> harmonics(sphere.size());
  for (std::size_t q = 0; q < sphere.size(); ++q) harmonics[q] = specfun::solid_harmonics(degree, sphere.directions[q]);

  // w_lm(r_i) by sphere quadrature
  std::vector<std::vector<cplx>> wlm(radial.nodes.size(), std::vector<cplx>(uz(count), cplx{0.0, 0.0}));
  for (std::size_t i = 0; i < radial.nodes.size(); ++i) {
    const double r = radial.nodes[i];
    for (std::size_t q = 0; q < sphere.size(); ++q) {
      const cplx value = w(r * sphere.directions[q]) * sphere.weights[q];
      for (int p = 0; p < count; ++p) wlm[i][uz(p)] += value * harmonics[q][uz(p)];
    }
  }

  std::vector<cplx> coeffs(uz(count), cplx{0.0, 0.0});
  std::vector<std::pair<int, int>> flagged;
  const bool yukawa = tau.tau > 0.0;
  const double root = std::sqrt(std::abs(tau.tau));
  for (int l = 0; l <= degree; ++l) {
    // profile p_l(r) and the denominator int_0^R r^2 |p_l|^2 dr
    std::vector<cplx> profile(radial.nodes.size());
    double energy = 0.0;
    if (tau.tau == 0.0) {
      for (std::size_t i = 0; i < profile.size(); ++i) profile[i] = std::pow(radial.nodes[i], l);
      energy = std::pow(R, 2 * l + 3) / (2.0 * l + 3.0);
    } else {
      const cplx alpha = yukawa ? cplx{root, 0.0} : cplx{0.0, root};
      for (std::size_t i = 0; i < profile.size(); ++i) {
        const double r = radial.nodes[i];
        profile[i] = specfun::bessel(specfun::BesselKind::I, l + 0.5, r * alpha) / std::sqrt(r);
      }
      energy = specfun::besseli_energy(l + 0.5, alpha, R).value;
    }
    for (int m = -l; m <= l; ++m) {
      const auto p = uz(specfun::SphericalIndex{l, m}.packed());
      if (!(energy >= options.min_energy)) {
        flagged.emplace_back(l, m);
        continue;
      }
      cplx num{0.0, 0.0};
      for (std::size_t i = 0; i < profile.size(); ++i) {
        const double r = radial.nodes[i];
        num += radial.weights[i] * r * r * std::conj(profile[i]) * wlm[i][p];
      }
      const cplx a = num / energy;
      coeffs[p] = tau.tau == 0.0 ? a : a * specfun::half_integer_bessel_factor(l, tau.tau);
    }
  }
  SphericalExpansion out(tau, degree, std::move(coeffs));
  out.flagged = std::move(flagged);
  return out;
}

// --- norms ---------------------------------------------------------------------------

namespace {

// int_0^R |r^l E_l(tau r^2)|^2 e^{-2 s r} r^2 dr for every l <= degree.
std::vector<double> radial_masses(const SphericalExpansion& psi, double radius, double decay) {
  const double root = std::sqrt(std::abs(psi.frequency().tau));
  const int panels = std::max(4, static_cast<int>(std::ceil(2.0 * radius * (root + 1.0))));
  const QuadratureRule1D rule = composite_gauss_legendre(panels, 16, 0.0, radius);
  std::vector<double> out(uz(psi.degree() + 1), 0.0);
  for (std::size_t i = 0; i < rule.nodes.size(); ++i) {
    const double r = rule.nodes[i];
    const auto f = psi.radial_factors(r);
    const double damp = std::exp(-decay * r);
    for (int l = 0; l <= psi.degree(); ++l) out[uz(l)] += rule.weights[i] * std::norm(f[uz(l)] * damp) * r * r;
  }
  return out;
}

double weighted_mass(const SphericalExpansion& psi, double radius, double decay) {
  if (psi.degree() < 0) return 0.0;
  const auto masses = radial_masses(psi, radius, decay);
  double s = 0.0;
  for (int l = 0; l <= psi.degree(); ++l)
    for (int m = -l; m <= l; ++m) s += std::norm(psi.coefficient(l, m)) * masses[uz(l)];
  return s;
}

void check_growth(const SphericalExpansion& psi, double radius) {
  if (std::sqrt(psi.frequency().plus()) * radius > 700.0)
    throw RangeError("norm surrogate: exponential growth overflows at this radius");
}

}  // namespace

double ball_norm(const SphericalExpansion& psi, double radius) {
  if (!(radius > 0.0)) throw DomainError("ball_norm: radius must be positive");
  check_growth(psi, radius);
  return std::sqrt(weighted_mass(psi, radius, 0.0));
}

double weighted_sup_norm(const SphericalExpansion& psi, double r_max) {
  if (!(r_max > 0.0)) throw DomainError("weighted_sup_norm: radius must be positive");
  check_growth(psi, r_max);
  if (psi.degree() < 0 || psi.coefficient_norm() == 0.0) return 0.0;
  const double decay = std::sqrt(psi.frequency().plus());
  const SphereRule sphere = SphereRule::for_degree(psi.degree() + 2);
  const int count = specfun::SphericalIndex::count(psi.degree());
  std::vector<std::vector<double>> harmonics(sphere.size());
  for (std::size_t q = 0; q < sphere.size(); ++q) harmonics[q] = specfun::solid_harmonics(psi.degree(), sphere.directions[q]);
  const auto coeffs = psi.coefficients();

  const int n_r = std::max(256, static_cast<int>(std::ceil(8.0 * r_max * (std::sqrt(std::abs(psi.frequency().tau)) + 1.0))));
  double best = 0.0;
  for (int i = 0; i <= n_r; ++i) {
    const double r = r_max * i / n_r;
    const auto f = psi.radial_factors(r);
    const double weight = std::sqrt(1.0 + r * r) * std::exp(-decay * r);
    std::vector<cplx> scaled(uz(count));
    for (int p = 0; p < count; ++p) {
      const auto idx = specfun::SphericalIndex::unpack(p);
      scaled[uz(p)] = coeffs[uz(p)] * f[uz(idx.l)] * weight;
    }
    for (std::size_t q = 0; q < sphere.size(); ++q) {
      cplx acc{0.0, 0.0};
      for (int p = 0; p < count; ++p) acc += scaled[uz(p)] * harmonics[q][uz(p)];
      best = std::max(best, std::abs(acc));
    }
  }
  return best;
}

GlobalNorms global_norms(const SphericalExpansion& psi, double r_max) {
  if (psi.frequency().tau == 0.0)
    throw DomainError("global_norms: the weighted seminorm collapses at tau = 0; request weighted_sup_norm instead");
  if (!(r_max >= 10.0)) throw DomainError("global_norms: R_max must be at least 10");
  check_growth(psi, r_max);
  GlobalNorms out;
  const double decay = std::sqrt(psi.frequency().plus());
  out.triple_seminorm = std::sqrt(weighted_mass(psi, r_max, decay) / r_max);
  out.weighted_sup = weighted_sup_norm(psi, r_max);
  return out;
}

// --- three-ball probe ------------------------------------------------------------------

StabilityResult stability_probe(std::span<const SphericalExpansion> solutions, std::array<double, 3> radii) {
  if (!(radii[0] > 0.0 && radii[0] < radii[1] && radii[1] < radii[2]))
    throw DomainError("stability_probe: radii must satisfy 0 < R1 < R2 < R3");
  StabilityResult out;
  for (std::size_t t = 0; t < solutions.size(); ++t) {
    StabilityRow row;
    row.trial = static_cast<int>(t);
    row.inner = ball_norm(solutions[t], radii[0]);
    row.middle = ball_norm(solutions[t], radii[1]);
    row.outer = ball_norm(solutions[t], radii[2]);
    if (row.inner == 0.0 || row.middle == 0.0 || row.outer == 0.0) {
      ++out.excluded;
      continue;
    }
    out.rows.push_back(row);
  }
  out.theta = 0.5;
  if (out.rows.empty()) {
    out.holds = true;
    return out;
  }
  double best_c = std::numeric_limits<double>::infinity();
  for (int i = 1; i < 100; ++i) {
    const double theta = i / 100.0;
    double c = 0.0;
    for (const auto& row : out.rows) {
      const double log_ratio = std::log(row.middle) - theta * std::log(row.inner) - (1.0 - theta) * std::log(row.outer);
      c = std::max(c, std::exp(log_ratio));
    }
    if (c < best_c) {
      best_c = c;
      out.theta = theta;
    }
  }
  out.constant = best_c;
  out.holds = true;
  for (auto& row : out.rows) {
    row.interpolated = std::pow(row.inner, out.theta) * std::pow(row.outer, 1.0 - out.theta);
    if (row.middle > out.constant * row.interpolated * (1.0 + 1e-12)) out.holds = false;
  }
  return out;
}

StabilityResult stability_probe(Frequency tau, std::array<double, 3> radii, int trials, std::uint64_t seed,
                                int max_degree) {
  if (trials < 1) throw DomainError("stability_probe: trials must be >= 1");
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal;
  std::uniform_int_distribution<int> pick(0, std::max(0, max_degree));
  std::vector<SphericalExpansion> solutions;
  for (int t = 0; t < trials; ++t) {
    const int degree = pick(rng);
    std::vector<cplx> coeffs(uz(specfun::SphericalIndex::count(degree)));
    for (auto& c : coeffs) c = {normal(rng), normal(rng)};
    solutions.emplace_back(tau, degree, std::move(coeffs));
  }
  return stability_probe(solutions, radii);
}

}  // namespace vortexlab::helmholtz
