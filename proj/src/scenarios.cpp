#include "vortexlab/scenarios.hpp"

#include <cmath>

#include "vortexlab/errors.hpp"

namespace vortexlab::scenarios {

double Quadratic::operator()(const Vec3& x) const {
  double s = constant + dot(linear, x);
  for (std::size_t i = 0; i < 3; ++i)
    for (std::size_t j = 0; j < 3; ++j) s += x[i] * hessian_half[i][j] * x[j];
  return s;
}

Vec3 Quadratic::gradient(const Vec3& x) const {
  Vec3 g = linear;
  for (std::size_t i = 0; i < 3; ++i)
    for (std::size_t j = 0; j < 3; ++j) g[i] += (hessian_half[i][j] + hessian_half[j][i]) * x[j];
  return g;
}

double Quadratic::laplacian() const { return 2.0 * (hessian_half[0][0] + hessian_half[1][1] + hessian_half[2][2]); }

QuadraticSolution::QuadraticSolution(Quadratic re, Quadratic im, double drift_re, double drift_im)
    : re_(re), im_(im), a_(drift_re), b_(drift_im) {
  if (std::abs(residual()) > 1e-12 * (1.0 + std::abs(a_) + std::abs(b_)))
    throw DomainError("QuadraticSolution: Lap p = b and Lap q = -a required");
}

cplx QuadraticSolution::operator()(const Vec3& x, double t) const { return {re_(x) + a_ * t, im_(x) + b_ * t}; }

std::array<Vec3, 2> QuadraticSolution::gradients(const Vec3& x) const { return {re_.gradient(x), im_.gradient(x)}; }

cplx QuadraticSolution::residual() const {
  // i (a + i b) + Lap p + i Lap q
  return {re_.laplacian() - b_, a_ + im_.laplacian()};
}

std::string to_string(EventKind kind) {
  switch (kind) {
    case EventKind::Exchange: return "exchange";
    case EventKind::Birth: return "birth";
    case EventKind::Death: return "death";
    case EventKind::Unclassified: break;
  }
  return "unclassified";
}

std::vector<std::string> preset_names() { return {"hyperbolic-exchange", "ring-death", "moving-ring"}; }

BoxSpec scenario_box(int points) {
  BoxSpec box = BoxSpec::cube(2.0, points, false);
  // irrational-looking fractions of a cell keep vertices off the planes x_i = 0
  box.offset = {0.3183, 0.2718, 0.1414};
  box.validate();
  return box;
}

namespace {

Quadratic diag(double a11, double a22, double a33, Vec3 g = {0.0, 0.0, 0.0}, double c = 0.0) {
  Quadratic q;
  q.hessian_half[0][0] = a11;
  q.hessian_half[1][1] = a22;
  q.hessian_half[2][2] = a33;
  q.linear = g;
  q.constant = c;
  return q;
}

}  // namespace

ScenarioPreset preset(const std::string& name, double radius) {
  const double dt = 0.0125;
  if (name == "hyperbolic-exchange") {
    // (x1^2 - x2^2 + 2t) + i (x3 - x3^2): branches x1^2 - x2^2 = -2t in the plane x3 = 0
    ScenarioPreset p{name, 0.0, QuadraticSolution(diag(1, -1, 0), diag(0, 0, -1, {0, 0, 1}), 2.0, 0.0), {},
                     scenario_box(64), -0.2, 0.2, dt,
                     "two branches reconnect at the origin at t = 0; separation 2 sqrt(2|t|)"};
    p.events.push_back({0.0, EventKind::Exchange, 0.5, 2.0 * std::sqrt(2.0), 2, 2});
    return p;
  }
  if (!(radius > 0.0) || radius >= 0.75) throw ConfigError("scenario: ring radius must lie in (0, 0.75)");
  const double r2 = radius * radius;
  if (name == "ring-death") {
    // (x1^2 + x2^2 - 2 x3^2 + R^2 + 2t) + i (x3 - x3^2): ring of radius sqrt(-R^2 - 2t) in x3 = 0
    const double ts = -0.5 * r2;
    ScenarioPreset p{name, radius, QuadraticSolution(diag(1, 1, -2, {0, 0, 0}, r2), diag(0, 0, -1, {0, 0, 1}), 2.0, 0.0),
                     {}, scenario_box(64), ts - 0.15, ts + 0.1, dt,
                     "ring shrinks to a point and disappears at t = -R^2/2"};
    p.events.push_back({ts, EventKind::Death, 0.5, std::sqrt(2.0), 1, 0});
    return p;
  }
  if (name == "moving-ring") {
    // (x1^2 + x2^2 - R^2) + i (x3 + 4t): ring of radius R translating along -x3 at speed 4
    return ScenarioPreset{name, radius, QuadraticSolution(diag(1, 1, 0, {0, 0, 0}, -r2), diag(0, 0, 0, {0, 0, 1}), 0.0, 4.0),
                          {}, scenario_box(64), -0.1, 0.1, dt, "single ring, no topology change"};
  }
  throw ConfigError("scenario: unknown preset '" + name + "'");
}

std::vector<double> time_grid(double t_begin, double t_end, double dt) {
  if (!(dt > 0.0) || t_end < t_begin) throw ConfigError("time grid: need dt > 0 and t_end >= t_begin");
  const long n = std::lround((t_end - t_begin) / dt);
  std::vector<double> t(static_cast<std::size_t>(n + 1));
  for (long i = 0; i <= n; ++i) t[static_cast<std::size_t>(i)] = t_begin + static_cast<double>(i) * dt;
  return t;
}

ComplexField sample(const QuadraticSolution& v, const BoxSpec& box, double t) {
  return ComplexField::sample(box, [&](const Vec3& x) { return v(x, t); });
}

std::vector<ComplexField> sample(const QuadraticSolution& v, const BoxSpec& box, std::span<const double> times) {
  std::vector<ComplexField> out;
  out.reserve(times.size());
  for (double t : times) out.push_back(sample(v, box, t));
  return out;
}

}  // namespace vortexlab::scenarios
