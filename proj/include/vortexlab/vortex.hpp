#pragma once

// Zero sets of sampled complex fields: extraction as polylines, component
// counts over time, separations, and detection of topology-changing events.

#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "vortexlab/grid.hpp"
#include "vortexlab/scenarios.hpp"

namespace vortexlab::vortex {

using scenarios::EventKind;

struct Polyline {
  std::vector<Vec3> points;
  bool closed = false;
  double length() const;
};

struct Component {
  std::vector<Polyline> pieces;  // several pieces when components were merged
  Vec3 centroid{0.0, 0.0, 0.0};
  double length = 0.0;
  std::size_t vertex_count() const;
};

/// Axis-aligned analysis window.
struct Window {
  Vec3 lo{0.0, 0.0, 0.0};
  Vec3 hi{0.0, 0.0, 0.0};
  /// Central `fraction` of the box per axis.
  static Window central(const BoxSpec& box, double fraction = 0.8);
  bool contains(const Vec3& x) const;
};

/// Value and spatial gradient (of Re and Im) of a field at a point.
struct LocalJet {
  cplx value;
  Vec3 grad_re;
  Vec3 grad_im;
};
using Evaluator = std::function<LocalJet(const Vec3&)>;

struct ExtractionOptions {
  double tol = 1e-8;                // |u| bound after Newton refinement
  std::optional<Window> window;     // default: central 80 % of the box
  double merge_radius = -1.0;       // < 0: 2 h
  double min_length = -1.0;         // shorter components are dropped as specks; < 0: h
  int newton_iterations = 20;
  bool refine = true;
  /// Analytic field for refinement and residuals; default is trilinear interpolation of the samples.
  Evaluator evaluator;
};

struct CurveSet {
  double t = 0.0;
  double h = 0.0;
  double merge_radius = 0.0;
  std::vector<Component> components;
  long degenerate_cells = 0;
  long unrefined_vertices = 0;
  long discarded_specks = 0;
  /// max |u| at the piecewise-linear vertices before / after refinement (evaluator values).
  double raw_residual = 0.0;
  double refined_residual = 0.0;
  std::size_t count() const { return components.size(); }
};

/// Marching tetrahedra on the Kuhn split of every cell; the zero of the
/// linear interpolant on each tetrahedron face becomes a vertex.
CurveSet extract_zero_set(const ComplexField& u, double t, const ExtractionOptions& options = {});

/// Evaluator from trilinear interpolation of grid samples.
Evaluator trilinear(const ComplexField& u);
/// Evaluator from a closed-form scenario solution at time t.
Evaluator analytic(const scenarios::QuadraticSolution& v, double t);

/// Exact minimum distance between two segments.
double segment_distance(const Vec3& p0, const Vec3& p1, const Vec3& q0, const Vec3& q1);
/// Minimum distance between two components (all segment pairs).
double component_distance(const Component& a, const Component& b);
/// Minimum pairwise separation in a curve set; nullopt with fewer than two components.
std::optional<double> min_separation(const CurveSet& set);
/// Distance between components a and b of a set; throws DomainError for a missing index.
double min_separation(const CurveSet& set, std::size_t a, std::size_t b);

struct TimelineRow {
  double t = 0.0;
  int count = 0;
  int parity = 0;
};
std::vector<TimelineRow> component_timeline(std::span<const CurveSet> sets);

/// Nearest-centroid matching between consecutive sets: link[i] is the index in
/// `next` of component i of `prev`, or -1 when the jump exceeds max_jump or the match is ambiguous.
std::vector<int> link_components(const CurveSet& prev, const CurveSet& next, double max_jump);

struct EventOptions {
  int min_snapshots_per_side = 8;
  double fit_max = 0.1;        // fit window upper bound on |t - T|
  double fit_min_factor = 4.0; // fit window lower bound = factor * h^2
  int exclusion_snapshots = 3;
  int max_exchange_run = 3;    // longest k-1 run still read as an exchange
};

struct Event {
  double time = 0.0;
  EventKind kind = EventKind::Unclassified;
  int count_before = 0;
  int count_after = 0;
  int parity_before = 0;
  int parity_after = 0;
  double exponent = 0.0;
  double prefactor = 0.0;
  int fit_points = 0;
  double fit_rms = 0.0;
  double fit_window_min = 0.0;  // bounds on |t - time| used by the fit
  double fit_window_max = 0.0;
  double exclusion_begin = 0.0;
  double exclusion_end = 0.0;
  std::string note;
};

/// Classifies count changes and fits separation (exchange) or component size
/// (birth/death) as C |t - T|^p with T refined around the bracketing snapshots.
std::vector<Event> detect_events(std::span<const CurveSet> sets, const EventOptions& options = {});

/// Least-squares fit of log y = log C + p log |t - T| for fixed T.
struct PowerFit {
  double exponent = 0.0;
  double prefactor = 0.0;
  double rms = 0.0;
  int points = 0;
};
PowerFit fit_power_law(std::span<const double> t, std::span<const double> y, double T);

/// Half the largest vertex-to-vertex distance in a component.
double component_radius(const Component& c);

}  // namespace vortexlab::vortex
