#include "vortexlab/evolve.hpp"

#include <fftw3.h>

#include <algorithm>
#include <cmath>
#include <mutex>
#include <numbers>
#include <numeric>
#include <sstream>

#include "vortexlab/errors.hpp"
#include "vortexlab/quadrature.hpp"
#include "fftw_lock.hpp"

namespace vortexlab::detail {

std::mutex& fftw_planner_mutex() {
  static std::mutex m;
  return m;
}

}  // namespace vortexlab::detail

namespace vortexlab::evolve {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

std::mutex& planner_mutex() { return detail::fftw_planner_mutex(); }

fftw_complex* as_fftw(std::span<cplx> s) { return reinterpret_cast<fftw_complex*>(s.data()); }

void require_periodic(const BoxSpec& box, const char* who) {
  box.validate();
  if (!box.periodic) throw ConfigError(std::string(who) + ": box must be periodic");
}

void check_finite(std::span<const cplx> u, long step) {
  for (const auto& v : u)
    if (!std::isfinite(v.real()) || !std::isfinite(v.imag())) {
      throw NonFiniteError("non-finite field value at step " + std::to_string(step), step);
    }
}

}  // namespace

// --- FFT -------------------------------------------------------------------------------

struct FftPlan::Plans {
  fftw_plan forward = nullptr;
  fftw_plan backward = nullptr;
};

FftPlan::FftPlan(const BoxSpec& box) : plans_(std::make_unique<Plans>()), size_(box.size()) {
  require_periodic(box, "FftPlan");
  const auto [nx, ny, nz] = box.points;
  std::vector<cplx> scratch(size_);
  {
    std::lock_guard<std::mutex> lock(planner_mutex());
    const unsigned flags = FFTW_ESTIMATE | FFTW_UNALIGNED;
    plans_->forward = fftw_plan_dft_3d(nx, ny, nz, as_fftw(scratch), as_fftw(scratch), FFTW_FORWARD, flags);
    plans_->backward = fftw_plan_dft_3d(nx, ny, nz, as_fftw(scratch), as_fftw(scratch), FFTW_BACKWARD, flags);
  }
  if (plans_->forward == nullptr || plans_->backward == nullptr) throw NumericalError("FFTW planning failed");

  auto wavenumbers = [&](int axis) {
    const int n = box.points[static_cast<std::size_t>(axis)];
    const double base = kTwoPi / box.length[static_cast<std::size_t>(axis)];
    std::vector<double> k(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) k[static_cast<std::size_t>(i)] = base * (i < n / 2 ? i : i - n);
    return k;
  };
  const auto kx = wavenumbers(0), ky = wavenumbers(1), kz = wavenumbers(2);
  k2_.resize(size_);
  std::size_t idx = 0;
  for (int i = 0; i < nx; ++i)
    for (int j = 0; j < ny; ++j)
      for (int k = 0; k < nz; ++k) {
        const double v = kx[static_cast<std::size_t>(i)] * kx[static_cast<std::size_t>(i)] +
                         ky[static_cast<std::size_t>(j)] * ky[static_cast<std::size_t>(j)] +
                         kz[static_cast<std::size_t>(k)] * kz[static_cast<std::size_t>(k)];
        k2_[idx++] = v;
        max_k2_ = std::max(max_k2_, v);
      }
}

FftPlan::~FftPlan() {
  std::lock_guard<std::mutex> lock(planner_mutex());
  if (plans_->forward) fftw_destroy_plan(plans_->forward);
  if (plans_->backward) fftw_destroy_plan(plans_->backward);
}

void FftPlan::forward(std::span<cplx> data) const {
  if (data.size() != size_) throw GeometryError("FftPlan: size mismatch");
  fftw_execute_dft(plans_->forward, as_fftw(data), as_fftw(data));
}

void FftPlan::backward(std::span<cplx> data) const {
  if (data.size() != size_) throw GeometryError("FftPlan: size mismatch");
  fftw_execute_dft(plans_->backward, as_fftw(data), as_fftw(data));
  kernels::parallel::scale(data, 1.0 / static_cast<double>(size_));
}

ComplexField linear_propagate(const ComplexField& u0, double t) {
  ComplexField u = u0;
  if (t == 0.0) return u;
  const FftPlan fft(u.box());
  fft.forward(u.values());
  kernels::parallel::spectral_phase(u.values(), fft.k2(), t);
  fft.backward(u.values());
  return u;
}

// --- split step ------------------------------------------------------------------------

SplitStepSolver::SplitStepSolver(const BoxSpec& box, const EvolutionConfig& cfg) : box_(box), cfg_(cfg), fft_(box) {
  if (!(cfg.dt > 0.0) || !std::isfinite(cfg.dt)) throw ConfigError("evolution: dt must be positive");
  if (!std::isfinite(cfg.kappa)) throw ConfigError("evolution: kappa must be finite");
}

void SplitStepSolver::step(ComplexField& u, long step_index) const {
  if (!u.box().same_grid(box_)) throw GeometryError("split step: field grid differs from the solver box");
  const double half = 0.5 * cfg_.dt;
  auto values = u.values();
  if (cfg_.serial) {
    kernels::serial::nonlinear_phase(values, cfg_.kappa, half, cfg_.form);
    fft_.forward(values);
    kernels::serial::spectral_phase(values, fft_.k2(), cfg_.dt);
    fft_.backward(values);
    kernels::serial::nonlinear_phase(values, cfg_.kappa, half, cfg_.form);
  } else {
    kernels::parallel::nonlinear_phase(values, cfg_.kappa, half, cfg_.form);
    fft_.forward(values);
    kernels::parallel::spectral_phase(values, fft_.k2(), cfg_.dt);
    fft_.backward(values);
    kernels::parallel::nonlinear_phase(values, cfg_.kappa, half, cfg_.form);
  }
  check_finite(values, step_index);
}

ComplexField gp_step(const ComplexField& u, const EvolutionConfig& cfg) {
  check_finite(u.values(), 0);
  ComplexField out = u;
  SplitStepSolver(u.box(), cfg).step(out, 0);
  return out;
}

// --- observables -----------------------------------------------------------------------

namespace {

double gradient_energy(const ComplexField& u, const FftPlan& fft) {
  std::vector<cplx> hat(u.values().begin(), u.values().end());
  fft.forward(hat);
  const auto& k2 = fft.k2();
  std::vector<double> terms(hat.size());
  for (std::size_t i = 0; i < hat.size(); ++i) terms[i] = k2[i] * std::norm(hat[i]);
  // Parseval: sum |u|^2 = (1/N) sum |u_hat|^2
  const double sum = std::accumulate(terms.begin(), terms.end(), 0.0);
  return sum * u.cell_volume() / static_cast<double>(hat.size());
}

double potential_sum(const ComplexField& u, Nonlinearity form) {
  double s = 0.0;
  for (const auto& v : u.values()) {
    const double a = std::norm(v);
    s += form == Nonlinearity::GrossPitaevskii ? (1.0 - a) * (1.0 - a) : a * a;
  }
  return s * u.cell_volume();
}

Observables observe(const ComplexField& u, double t, const FftPlan& fft, const EvolutionConfig& cfg) {
  Observables o;
  o.t = t;
  o.mass = u.mass();
  const double grad = gradient_energy(u, fft);
  o.gl_energy = 0.5 * grad + 0.25 * potential_sum(u, Nonlinearity::GrossPitaevskii);
  o.hamiltonian = grad + 0.5 * cfg.kappa * potential_sum(u, cfg.form);
  return o;
}

}  // namespace

double gl_energy(const ComplexField& u) {
  const FftPlan fft(u.box());
  return 0.5 * gradient_energy(u, fft) + 0.25 * potential_sum(u, Nonlinearity::GrossPitaevskii);
}

double hamiltonian(const ComplexField& u, double kappa, Nonlinearity form) {
  const FftPlan fft(u.box());
  return gradient_energy(u, fft) + 0.5 * kappa * potential_sum(u, form);
}

EvolutionResult evolve(const ComplexField& u0, const EvolutionConfig& cfg) {
  const SplitStepSolver solver(u0.box(), cfg);
  check_finite(u0.values(), 0);
  if (!(cfg.t_end >= 0.0)) throw ConfigError("evolution: t_end must be nonnegative");

  const long total = std::lround(cfg.t_end / cfg.dt);
  if (std::abs(total * cfg.dt - cfg.t_end) > 1e-9 * std::max(1.0, cfg.t_end))
    throw ConfigError("evolution: t_end is not a multiple of dt");
  std::vector<long> snap_steps;
  if (cfg.snapshot_times.empty()) {
    snap_steps = {0, total};
  } else {
    for (double t : cfg.snapshot_times) {
      const long s = std::lround(t / cfg.dt);
      if (std::abs(s * cfg.dt - t) > 1e-9 * std::max(1.0, std::abs(t)) || s < 0 || s > total)
        throw ConfigError("evolution: snapshot time " + std::to_string(t) + " is not a multiple of dt in [0, t_end]");
      snap_steps.push_back(s);
    }
    std::sort(snap_steps.begin(), snap_steps.end());
    snap_steps.erase(std::unique(snap_steps.begin(), snap_steps.end()), snap_steps.end());
  }

  EvolutionResult out;
  if (solver.phase_product() > std::numbers::pi) {
    std::ostringstream msg;
    msg << "dt * max|k|^2 = " << solver.phase_product() << " exceeds pi; the linear phase is under-resolved";
    out.warnings.push_back(msg.str());
  }
  ComplexField u = u0;
  std::size_t next = 0;
  for (long n = 0;; ++n) {
    while (next < snap_steps.size() && snap_steps[next] == n) {
      const double t = static_cast<double>(n) * cfg.dt;
      out.times.push_back(t);
      out.snapshots.push_back(u);
      out.series.push_back(observe(u, t, solver.fft(), cfg));
      ++next;
    }
    if (n == total) break;
    solver.step(u, n + 1);
  }
  out.steps = total;
  return out;
}

// --- Duhamel -------------------------------------------------------------------------

namespace {

cplx nonlinear_term(cplx u, Nonlinearity form) {
  const double a = std::norm(u);
  return form == Nonlinearity::GrossPitaevskii ? (1.0 - a) * u : -a * u;
}

void propagate_in_place(std::span<cplx> v, const FftPlan& fft, double t) {
  fft.forward(v);
  kernels::parallel::spectral_phase(v, fft.k2(), t);
  fft.backward(v);
}

}  // namespace

DuhamelReport duhamel_residual(std::span<const ComplexField> u_tilde, std::span<const ComplexField> w,
                               std::span<const double> times, double kappa, Nonlinearity form,
                               Background background) {
  if (u_tilde.size() != times.size() || (!w.empty() && w.size() != times.size()))
    throw GeometryError("duhamel_residual: snapshot and time counts differ");
  if (u_tilde.empty()) return {};
  if (times[0] != 0.0) throw DomainError("duhamel_residual: the first snapshot must be at t = 0");
  const BoxSpec& box = u_tilde[0].box();
  for (std::size_t n = 0; n < times.size(); ++n) {
    if (!u_tilde[n].box().same_grid(box) || (!w.empty() && !w[n].box().same_grid(box)))
      throw GeometryError("duhamel_residual: grid mismatch");
    if (n > 0 && !(times[n] > times[n - 1])) throw DomainError("duhamel_residual: times must increase");
  }

  const FftPlan fft(box);
  const std::size_t size = box.size();
  DuhamelReport rep;
  rep.times.assign(times.begin(), times.end());

  std::vector<cplx> integral(size, cplx{0.0, 0.0});
  std::vector<cplx> prev_term(size);
  for (std::size_t i = 0; i < size; ++i) prev_term[i] = nonlinear_term(u_tilde[0].values()[i], form);

  for (std::size_t n = 0; n < times.size(); ++n) {
    const auto u = u_tilde[n].values();
    if (!w.empty()) {
      const auto wn = w[n].values();
      double dev = 0.0;
      for (std::size_t i = 0; i < size; ++i) {
        const cplx ref = background == Background::One ? 1.0 - wn[i] : wn[i];
        dev = std::max(dev, std::abs(u[i] - ref));
      }
      rep.deviation.push_back(dev);
      rep.max_deviation = std::max(rep.max_deviation, dev);
    }
    if (n > 0) {
      // D_n = e^{i dt Lap} D_{n-1} + dt/2 (e^{i dt Lap} f_{n-1} + f_n)
      const double dt = times[n] - times[n - 1];
      for (std::size_t i = 0; i < size; ++i) integral[i] += 0.5 * dt * prev_term[i];
      propagate_in_place(integral, fft, dt);
      for (std::size_t i = 0; i < size; ++i) {
        prev_term[i] = nonlinear_term(u[i], form);
        integral[i] += 0.5 * dt * prev_term[i];
      }
    }
    std::vector<cplx> free(u_tilde[0].values().begin(), u_tilde[0].values().end());
    propagate_in_place(free, fft, times[n]);
    double err = 0.0;
    for (std::size_t i = 0; i < size; ++i)
      err = std::max(err, std::abs(u[i] - (free[i] + cplx{0.0, kappa} * integral[i])));
    rep.reconstruction.push_back(err);
    rep.max_reconstruction = std::max(rep.max_reconstruction, err);
  }
  return rep;
}

// --- rescaling and gauge -------------------------------------------------------------------

SpaceTimeFn rescale_gp(SpaceTimeFn u_tilde, double delta) {
  if (!(delta > 0.0)) throw DomainError("rescale_gp: delta must be positive");
  const double inv_root = 1.0 / std::sqrt(delta);
  return [u_tilde = std::move(u_tilde), inv_root, delta](const Vec3& x, double t) {
    return u_tilde(inv_root * x, t / delta);
  };
}

cplx pointwise_residual(const SpaceTimeFn& u, const Vec3& x, double t, double kappa, Nonlinearity form, double h) {
  const cplx c = u(x, t);
  const cplx ut = (u(x, t + h) - u(x, t - h)) / (2.0 * h);
  cplx lap = -6.0 * c;
  for (int a = 0; a < 3; ++a) {
    Vec3 e{0.0, 0.0, 0.0};
    e[static_cast<std::size_t>(a)] = h;
    lap += u(x + e, t) + u(x - e, t);
  }
  lap /= h * h;
  return cplx{0.0, 1.0} * ut + lap + kappa * nonlinear_term(c, form);
}

ComplexField gauge_lift(const ComplexField& u_tilde, double t, double delta) {
  if (!(delta > 0.0)) throw DomainError("gauge_lift: delta must be positive");
  ComplexField u = u_tilde;
  const cplx factor = std::sqrt(delta) * std::polar(1.0, t);
  for (auto& v : u.values()) v *= factor;
  return u;
}

std::vector<ComplexField> gauge_lift(std::span<const ComplexField> u_tilde, std::span<const double> times,
                                     double delta) {
  if (u_tilde.size() != times.size()) throw GeometryError("gauge_lift: snapshot and time counts differ");
  std::vector<ComplexField> out;
  out.reserve(u_tilde.size());
  for (std::size_t n = 0; n < u_tilde.size(); ++n) out.push_back(gauge_lift(u_tilde[n], times[n], delta));
  return out;
}

std::vector<std::uint8_t> zero_indicator(const ComplexField& u, double tol) {
  std::vector<std::uint8_t> out(u.size());
  const auto v = u.values();
  for (std::size_t i = 0; i < v.size(); ++i) out[i] = std::abs(v[i]) <= tol ? 1 : 0;
  return out;
}

ComplexField to_deviation(const ComplexField& u) {
  ComplexField d = u;
  for (auto& v : d.values()) v = 1.0 - v;
  return d;
}

ComplexField from_deviation(const ComplexField& d) { return to_deviation(d); }

// --- torus ---------------------------------------------------------------------------

Rational best_rational(double x, long long q_max) {
  if (q_max < 1) throw DomainError("best_rational: q_max must be >= 1");
  if (!std::isfinite(x)) throw DomainError("best_rational: non-finite value");
  // convergents p/q, then the best semiconvergent below the cap
  long long p0 = 0, q0 = 1, p1 = 1, q1 = 0;
  double r = x;
  for (int it = 0; it < 64; ++it) {
    const double a_f = std::floor(r);
    if (std::abs(a_f) > 1e15) break;
    const auto a = static_cast<long long>(a_f);
    const long long q2 = a * q1 + q0;
    if (q2 > q_max) {
      const long long k = (q_max - q0) / q1;
      const Rational semi{k * p1 + p0, k * q1 + q0};
      const Rational conv{p1, q1};
      const double e_semi = std::abs(x - static_cast<double>(semi.num) / static_cast<double>(semi.den));
      const double e_conv = std::abs(x - static_cast<double>(conv.num) / static_cast<double>(conv.den));
      return (k > 0 && e_semi < e_conv) ? semi : conv;
    }
    const long long p2 = a * p1 + p0;
    p0 = p1;
    q0 = q1;
    p1 = p2;
    q1 = q2;
    const double frac = r - a_f;
    if (frac < 1e-12 || std::abs(x - static_cast<double>(p1) / static_cast<double>(q1)) < 1e-15 * std::max(1.0, std::abs(x)))
      break;
    r = 1.0 / frac;
  }
  return {p1, q1};
}

cplx RationalizedDatum::v1(const Vec3& x, double t, bool snapped_nodes) const {
  const auto& xi = snapped_nodes ? snapped : nodes;
  cplx acc{0.0, 0.0};
  for (std::size_t j = 0; j < xi.size(); ++j) acc += weights[j] * std::polar(1.0, dot(xi[j], x) - dot(xi[j], xi[j]) * t);
  return acc;
}

cplx RationalizedDatum::torus(const Vec3& x, double t) const {
  cplx acc{0.0, 0.0};
  for (std::size_t j = 0; j < lattice.size(); ++j) {
    const auto& m = lattice[j];
    // reduce the phase of each factor to [0, 2 pi) so periodicity holds to roundoff
    double phase = 0.0;
    long long m2 = 0;
    for (int a = 0; a < 3; ++a) {
      phase += std::remainder(static_cast<double>(m[static_cast<std::size_t>(a)]) * x[static_cast<std::size_t>(a)], kTwoPi);
      m2 += m[static_cast<std::size_t>(a)] * m[static_cast<std::size_t>(a)];
    }
    phase -= std::remainder(static_cast<double>(m2) * t, kTwoPi);
    acc += weights[j] * std::polar(1.0, phase);
  }
  return acc;
}

RationalizedDatum rationalize_nodes(std::span<const Vec3> nodes, std::span<const cplx> weights, long long q_max,
                                    long long denominator_limit) {
  if (nodes.size() != weights.size()) throw DomainError("rationalize_nodes: nodes and weights differ in length");
  RationalizedDatum d;
  d.nodes.assign(nodes.begin(), nodes.end());
  d.weights.assign(weights.begin(), weights.end());
  std::vector<std::array<Rational, 3>> snapped(nodes.size());
  long long lcm = 1;
  for (std::size_t j = 0; j < nodes.size(); ++j)
    for (int a = 0; a < 3; ++a) {
      const Rational r = best_rational(nodes[j][static_cast<std::size_t>(a)], q_max);
      snapped[j][static_cast<std::size_t>(a)] = r;
      lcm = std::lcm(lcm, r.den);
      if (lcm > denominator_limit)
        throw RangeError("torus_rationalize: common denominator exceeds " + std::to_string(denominator_limit) +
                         "; use a smaller q_max");
    }
  d.N = lcm;
  d.snapped.resize(nodes.size());
  d.lattice.resize(nodes.size());
  for (std::size_t j = 0; j < nodes.size(); ++j)
    for (int a = 0; a < 3; ++a) {
      const auto ai = static_cast<std::size_t>(a);
      const Rational r = snapped[j][ai];
      d.lattice[j][ai] = r.num * (lcm / r.den);
      d.snapped[j][ai] = static_cast<double>(r.num) / static_cast<double>(r.den);
    }
  return d;
}

RationalizedDatum torus_rationalize(const std::function<cplx(const Vec3&)>& v0_hat, int J, long long q_max,
                                    const TorusOptions& options) {
  if (J < 1) throw DomainError("torus_rationalize: J must be >= 1");
  const int cells = J * J;  // per axis: side J, cell 1/J
  const double h = 1.0 / J;
  const double cell_volume = h * h * h;
  std::vector<Vec3> nodes;
  std::vector<cplx> weights;
  nodes.reserve(static_cast<std::size_t>(cells) * cells * cells);
  for (int i = 0; i < cells; ++i)
    for (int j = 0; j < cells; ++j)
      for (int k = 0; k < cells; ++k) {
        const Vec3 xi{-0.5 * J + (i + 0.5) * h, -0.5 * J + (j + 0.5) * h, -0.5 * J + (k + 0.5) * h};
        nodes.push_back(xi);
        weights.push_back(v0_hat(xi) * cell_volume);
      }
  RationalizedDatum d = rationalize_nodes(nodes, weights, q_max, options.denominator_limit);
  d.J = J;

  // reference integral: options.reference or tensor Gauss-Legendre on a large cube
  SpaceTimeFn reference = options.reference;
  if (!reference) {
    const double radius = options.reference_radius > 0.0 ? options.reference_radius : 6.0;
    const auto rule = gauss_legendre(options.reference_nodes, -radius, radius);
    std::vector<Vec3> ref_nodes;
    std::vector<cplx> ref_weights;
    for (std::size_t a = 0; a < rule.nodes.size(); ++a)
      for (std::size_t b = 0; b < rule.nodes.size(); ++b)
        for (std::size_t c = 0; c < rule.nodes.size(); ++c) {
          const Vec3 xi{rule.nodes[a], rule.nodes[b], rule.nodes[c]};
          ref_nodes.push_back(xi);
          ref_weights.push_back(v0_hat(xi) * rule.weights[a] * rule.weights[b] * rule.weights[c]);
        }
    reference = [ref_nodes = std::move(ref_nodes), ref_weights = std::move(ref_weights)](const Vec3& x, double t) {
      cplx acc{0.0, 0.0};
      for (std::size_t j = 0; j < ref_nodes.size(); ++j)
        acc += ref_weights[j] * std::polar(1.0, dot(ref_nodes[j], x) - dot(ref_nodes[j], ref_nodes[j]) * t);
      return acc;
    };
  }
  for (double x1 : {-0.5, 0.0, 0.5})
    for (double x2 : {-0.5, 0.0, 0.5})
      for (double x3 : {-0.5, 0.0, 0.5})
        for (int s = 1; s <= 4; ++s) {
          const Vec3 x{x1, x2, x3};
          const double t = options.t_max * s / 4.0;
          const cplx raw = d.v1(x, t, false);
          d.riemann_error = std::max(d.riemann_error, std::abs(raw - reference(x, t)));
          d.snapping_error = std::max(d.snapping_error, std::abs(d.v1(x, t, true) - raw));
        }
  return d;
}

}  // namespace vortexlab::evolve
