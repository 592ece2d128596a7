#pragma once

// Closed-form Schrodinger solutions with prescribed reconnection geometry.
//   v(x, t) = (p(x) + a t) + i (q(x) + b t),  p, q quadratic,
// solves i v_t + Lap v = 0 iff Lap p = b and Lap q = -a.

#include <array>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "vortexlab/grid.hpp"

namespace vortexlab::scenarios {

/// x^T A x + g . x + c with symmetric A.
struct Quadratic {
  std::array<std::array<double, 3>, 3> hessian_half{};  // A
  Vec3 linear{0.0, 0.0, 0.0};
  double constant = 0.0;

  double operator()(const Vec3& x) const;
  Vec3 gradient(const Vec3& x) const;
  double laplacian() const;
};

class QuadraticSolution {
 public:
  /// Throws DomainError unless Lap re = drift_im and Lap im = -drift_re.
  QuadraticSolution(Quadratic re, Quadratic im, double drift_re, double drift_im);

  cplx operator()(const Vec3& x, double t) const;
  /// grad Re v and grad Im v at x (time independent).
  std::array<Vec3, 2> gradients(const Vec3& x) const;
  /// i v_t + Lap v from the stored polynomials (exact derivatives).
  cplx residual() const;
  const Quadratic& re() const { return re_; }
  const Quadratic& im() const { return im_; }
  double drift_re() const { return a_; }
  double drift_im() const { return b_; }

 private:
  Quadratic re_, im_;
  double a_, b_;
};

enum class EventKind { Exchange, Birth, Death, Unclassified };
std::string to_string(EventKind kind);

struct AnalyticEvent {
  double time = 0.0;
  EventKind kind = EventKind::Exchange;
  double exponent = 0.5;
  double prefactor = 0.0;  // separation (exchange) or radius (birth/death) = prefactor |t - T|^exponent
  int count_before = 0;
  int count_after = 0;
};

struct ScenarioPreset {
  std::string name;
  double radius = 0.0;  // R for ring presets
  QuadraticSolution solution;
  std::vector<AnalyticEvent> events;
  /// Suggested sampling: box, time range, step.
  BoxSpec box;
  double t_begin = 0.0;
  double t_end = 0.0;
  double dt = 0.0;
  std::string notes;
};

/// Names accepted by preset().
std::vector<std::string> preset_names();

/// "hyperbolic-exchange", "ring-death" (radius R), "moving-ring" (radius R).
/// Throws ConfigError for unknown names or R <= 0.
ScenarioPreset preset(const std::string& name, double radius = 0.5);

/// Evenly spaced times t_begin + n dt, n = 0..round((t_end - t_begin)/dt).
std::vector<double> time_grid(double t_begin, double t_end, double dt);

ComplexField sample(const QuadraticSolution& v, const BoxSpec& box, double t);
std::vector<ComplexField> sample(const QuadraticSolution& v, const BoxSpec& box, std::span<const double> times);

/// Sampling box for the presets: cube [-1, 1)^3 shifted by a generic sub-cell
/// offset so that no grid vertex lies exactly on the zero set.
BoxSpec scenario_box(int points);

}  // namespace vortexlab::scenarios
