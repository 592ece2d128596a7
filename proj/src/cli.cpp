#include "vortexlab/cli.hpp"

#include <CLI11.hpp>

#include <chrono>
#include <cmath>
#include <exception>
#include <functional>
#include <iostream>
#include <numbers>

#include "version.hpp"
#include "vortexlab/config.hpp"
#include "vortexlab/errors.hpp"
#include "vortexlab/evolve.hpp"
#include "vortexlab/helmholtz.hpp"
#include "vortexlab/io.hpp"
#include "vortexlab/kernels.hpp"
#include "vortexlab/scenarios.hpp"
#include "vortexlab/schrod_approx.hpp"
#include "vortexlab/vortex.hpp"

namespace vortexlab::cli {

using nlohmann::json;
using config::get;

namespace {

constexpr double kPi = std::numbers::pi;

struct Subcommand {
  const char* name;
  const char* section;  // config key
  const char* help;
};

constexpr Subcommand kSubcommands[] = {
    {"helmholtz-runge", "helmholtz_runge", "Runge approximation of an exterior point source, per frequency"},
    {"schrod-approx", "schrod_approx", "Schwartz-datum approximation of a local Schrodinger solution"},
    {"gp-evolve", "gp_evolve", "Split-step Gross-Pitaevskii evolution with observables"},
    {"vortex-analyze", "vortex_analyze", "Zero-set extraction, timeline and events for stored snapshots"},
    {"scenario-run", "scenario_run", "Analytic preset: sample, extract, detect events"},
    {"torus-embed", "torus_embed", "Riemann-sum rationalization onto the 2 pi-torus"},
    {"selftest", "selftest", "Fast invariant suite over all modules"},
};

// One invocation: output bookkeeping shared by the subcommands.
struct Run {
  Options opt;
  json config;
  std::uint64_t seed = 0;
  fs::path config_dir;
  json files = json::array();
  json timings = json::object();

  const json& section(const char* key) const {
    static const json empty = json::object();
    return config.contains(key) ? config[key] : empty;
  }

  void emit(const std::string& rel, std::string_view content) {
    io::write_file(opt.out / rel, content);
    files.push_back({{"path", rel}, {"bytes", content.size()}, {"fnv1a", io::hex64(io::fnv1a(content))}});
  }

  void emit_snapshot(const std::string& stem, const ComplexField& u, double t) {
    emit(stem + ".bin", io::encode_snapshot(u, t));
    emit(stem + ".json", io::dump({{"format", std::string(io::kSnapshotMagic)},
                                   {"box", io::box_json(u.box())},
                                   {"t", t},
                                   {"precision", "complex64"}}));
  }

  template <class F>
  auto timed(const std::string& stage, F&& f) {
    const auto t0 = std::chrono::steady_clock::now();
    auto finish = [&] {
      timings[stage] = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    };
    if constexpr (std::is_void_v<decltype(f())>) {
      f();
      finish();
    } else {
      auto r = f();
      finish();
      return r;
    }
  }

  void say(const std::string& line) const {
    if (!opt.quiet) std::cout << line << '\n';
  }

  fs::path resolve(const std::string& p) const {
    const fs::path path(p);
    return path.is_absolute() || config_dir.empty() ? path : config_dir / path;
  }
};

std::string fmt(double x) { return io::format_number(x); }

std::string snapshot_stem(std::size_t n) {
  std::string digits = std::to_string(n);
  if (digits.size() < 4) digits.insert(0, 4 - digits.size(), '0');
  return "snapshots/snap_" + digits;
}

helmholtz::Domain ball_or(const json& c, const char* key, const helmholtz::Domain& fallback) {
  if (!c.contains(key)) return fallback;
  return helmholtz::Domain::ball(c[key]["center"].get<Vec3>(), c[key]["radius"].get<double>());
}

cplx complex_or(const json& c, const char* key, cplx fallback) {
  if (!c.contains(key)) return fallback;
  return {c[key][0].get<double>(), c[key][1].get<double>()};
}

// --- helmholtz-runge -------------------------------------------------------------------

int helmholtz_runge(Run& r) {
  using namespace helmholtz;
  const json& c = r.section("helmholtz_runge");
  const auto taus = get<std::vector<double>>(c, "taus", {-25.0, -1.0, 1.0, 25.0});
  const double eps = get(c, "epsilon", 1e-2);
  const Domain D = ball_or(c, "domain", Domain::ball({0, 0, 0}, 1.0));
  const Domain Y = ball_or(c, "source", Domain::ball({3, 0, 0}, 0.3));
  const Vec3 x0 = get<Vec3>(c, "source_point", {2, 0, 0});
  const Resolution res{get(c, "domain_nodes", 16), get(c, "source_nodes", 8)};
  RungeOptions ro;
  ro.residual_tol = get(c, "residual_tol", 0.1);
  if (const double margin = get(c, "interior_margin", 0.0); margin > 0.0) ro.interior = D.shrunk(margin);
  const int degree = get(c, "degree", 20);
  TruncationOptions to;
  to.outer_radius = get(c, "outer_radius", 1.2);
  const double norm_radius = get(c, "norm_radius", 10.0);

  json reports = json::array();
  io::Csv errors({"tau", "alpha", "relative_error", "modes"});
  for (double tau : taus) {
    const std::string tag = "tau=" + fmt(tau);
    const auto op = r.timed("operator " + tag, [&] { return SourceOperator::build(D, Y, {tau}, res); });
    const auto phi = op.domain().sample([&](const Vec3& x) { return cplx{op.green()(x - x0), 0.0}; });
    auto result = r.timed("runge " + tag, [&] { return runge_approximate(op, phi, eps, ro); });
    auto& rep = result.report;
    if (degree > 0) {
      r.timed("truncate " + tag, [&] {
        const auto psi = spherical_truncate([&](const Vec3& x) { return op.extend(result.sources, x); }, {tau}, degree, to);
        std::vector<cplx> diff(op.domain().size());
        for (std::size_t i = 0; i < diff.size(); ++i) diff[i] = psi(op.domain().nodes()[i]) - result.field[i];
        const double scale = op.domain().l2_norm(result.field);
        rep.truncation_error = scale > 0.0 ? op.domain().l2_norm(diff) / scale : 0.0;
        rep.truncation_degree = degree;
        if (tau != 0.0) {
          const auto n = global_norms(psi, norm_radius);
          rep.triple_seminorm = n.triple_seminorm;
          rep.weighted_sup = n.weighted_sup;
        } else {
          rep.weighted_sup = weighted_sup_norm(psi, norm_radius);
        }
      });
    }
    for (const auto& s : rep.trace) errors.row({tau, s.alpha, s.relative_error, static_cast<double>(s.modes)});
    json j = rep.to_json();
    j["source_bound_holds"] = rep.source_norm * rep.alpha <= rep.input_norm * (1.0 + 1e-12);
    reports.push_back(j);
    r.say(tag + ": alpha " + fmt(rep.alpha) + ", relative error " + fmt(rep.relative_error) + ", modes " +
          std::to_string(rep.modes_used));
  }
  r.emit("runge_report.json", io::dump(reports));
  r.emit("runge_errors.csv", errors.str());

  if (const int trials = get(c, "stability_trials", 0); trials > 0) {
    const auto st = r.timed("stability", [&] { return stability_probe({taus.front()}, {0.5, 1.0, 1.5}, trials, r.seed); });
    json rows = json::array();
    for (const auto& row : st.rows)
      rows.push_back({{"trial", row.trial}, {"inner", row.inner}, {"middle", row.middle}, {"outer", row.outer}});
    r.emit("stability.json", io::dump({{"tau", taus.front()},
                                       {"radii", {0.5, 1.0, 1.5}},
                                       {"constant", st.constant},
                                       {"theta", st.theta},
                                       {"holds", st.holds},
                                       {"excluded", st.excluded},
                                       {"rows", rows}}));
  }
  return kSuccess;
}

// --- schrod-approx ---------------------------------------------------------------------

int schrod_approx(Run& r) {
  using namespace schrod;
  const json& c = r.section("schrod_approx");
  const Domain D = ball_or(c, "domain", Domain::ball({0, 0, 0}, 1.0));
  const double T = get(c, "T", 0.5);
  const int nodes = get(c, "nodes_per_axis", 16);
  const int M = get(c, "time_samples", 64);
  const double eps = get(c, "epsilon", 0.05);

  json modes = c.contains("modes") ? c["modes"]
                                   : json::array({{{"kind", "point_source"}, {"tau", -2.0 * kPi}, {"point", {2.0, 0.0, 0.0}}}});
  std::vector<SpaceTimeFn> terms;
  for (const auto& m : modes) {
    const cplx amp = complex_or(m, "amplitude", 1.0);
    if (m["kind"] == "point_source") {
      const double tau = get(m, "tau", -2.0 * kPi);
      const Vec3 p = get<Vec3>(m, "point", {2, 0, 0});
      const helmholtz::FundamentalSolution G({tau});
      terms.push_back([=](const Vec3& x, double t) { return amp * G(x - p) * std::exp(cplx{0.0, tau * t}); });
    } else {
      if (!m.contains("xi")) throw ConfigError("schrod_approx: plane_wave mode needs 'xi'");
      const Vec3 xi = m["xi"].get<Vec3>();
      terms.push_back([=](const Vec3& x, double t) { return amp * std::exp(cplx{0.0, dot(xi, x) - dot(xi, xi) * t}); });
    }
  }
  const SpaceTimeFn v = [&](const Vec3& x, double t) {
    cplx s{0.0, 0.0};
    for (const auto& f : terms) s += f(x, t);
    return s;
  };

  SchwartzOptions so;
  so.sweep.source = ball_or(c, "source", so.sweep.source);
  so.sweep.resolution = {get(c, "domain_nodes", 16), get(c, "source_nodes", 8)};
  so.sweep.degree = get(c, "degree", 20);
  so.sweep.K = get(c, "K", -1.0);
  so.sweep.max_slices = get(c, "max_slices", 512);
  if (c.contains("sigma")) so.sweep.sigma = c["sigma"].get<double>();
  if (c.contains("epsilon_slice")) so.sweep.epsilon_slice = c["epsilon_slice"].get<double>();
  so.delta0 = get(c, "delta0", 0.5);
  so.delta_max = std::max(so.delta_max, so.delta0);
  so.max_halvings = get(c, "max_halvings", 20);
  so.sobolev_order = get(c, "sobolev_order", 0);
  if (const double margin = get(c, "interior_margin", 0.0); margin > 0.0) so.interior = D.shrunk(margin);

  const auto S = r.timed("sample", [&] { return SpacetimeSamples::sample(D, nodes, T, M, v); });
  const auto result = r.timed("pipeline", [&] { return build_schwartz_datum(S, eps, so); });
  const auto& rep = result.report;

  json report = rep.to_json();
  report["samples"] = {{"T", T}, {"time_samples", M}, {"nodes_per_axis", nodes}, {"voxels", S.voxel_count()},
                       {"residual", S.residual}, {"l2_norm", S.l2_norm()}};
  report["layers"] = result.datum.stack.layers.size();
  r.emit("schrod_report.json", io::dump(report));

  io::Csv trace({"delta", "relative_error"});
  for (const auto& s : rep.trace) trace.row({s.delta, s.relative_error});
  r.emit("delta_trace.csv", trace.str());
  io::Csv layers({"tau", "weight", "runge_error", "slice_error", "helmholtz_residual"});
  for (const auto& l : result.datum.stack.layers)
    layers.row({l.tau, l.weight, l.runge_error, l.slice_error, l.helmholtz_residual});
  r.emit("layers.csv", layers.str());

  r.say("layers " + std::to_string(result.datum.stack.layers.size()) + ", delta " + fmt(rep.delta) +
        ", relative error " + fmt(rep.relative_error) + (rep.target_met ? " (target met)" : " (target NOT met)"));
  if (!rep.target_met)
    std::cerr << "schrod-approx: best achieved error " << fmt(rep.relative_error) << " exceeds epsilon " << fmt(eps)
              << '\n';
  return kSuccess;
}

// --- gp-evolve -------------------------------------------------------------------------

int gp_evolve(Run& r) {
  const json& c = r.section("gp_evolve");
  evolve::EvolutionConfig cfg;
  cfg.kappa = get(c, "kappa", 1.0);
  cfg.dt = get(c, "dt", 1e-3);
  cfg.t_end = get(c, "t_end", 0.1);
  cfg.form = get<std::string>(c, "form", "gross_pitaevskii") == "defocusing_cubic" ? evolve::Nonlinearity::DefocusingCubic
                                                                                    : evolve::Nonlinearity::GrossPitaevskii;
  cfg.snapshot_times = get<std::vector<double>>(c, "snapshot_times", {});
  cfg.serial = get(c, "serial", false);

  BoxSpec box = BoxSpec::cube(get(c, "box_length", 16.0), get(c, "points", 32), true);
  const json init = c.contains("initial") ? c["initial"] : json{{"kind", "constant"}};
  const std::string kind = init["kind"];
  const cplx value = complex_or(init, "value", 1.0);
  ComplexField u0;
  if (kind == "constant") {
    u0 = ComplexField(box, value);
  } else if (kind == "plane_wave") {
    const auto k = get<std::array<int, 3>>(init, "wavevector", {1, 0, 0});
    const Vec3 kv{2 * kPi * k[0] / box.length[0], 2 * kPi * k[1] / box.length[1], 2 * kPi * k[2] / box.length[2]};
    u0 = ComplexField::sample(box, [&](const Vec3& x) { return value * std::exp(cplx{0.0, dot(kv, x)}); });
  } else if (kind == "gaussian_dip") {
    const double depth = get(init, "depth", 0.5), w = get(init, "width", 1.0);
    u0 = ComplexField::sample(box, [&](const Vec3& x) { return value * (1.0 - depth * std::exp(-dot(x, x) / (w * w))); });
  } else {
    if (!init.contains("path")) throw ConfigError("gp_evolve: snapshot initial state needs 'path'");
    auto snap = io::read_snapshot(r.resolve(init["path"].get<std::string>()));
    if (!snap.field.box().periodic) throw ConfigError("gp_evolve: the initial snapshot is not on a periodic box");
    u0 = std::move(snap.field);
  }

  const auto result = r.timed("evolve", [&] { return evolve::evolve(u0, cfg); });
  r.emit("observables.csv", io::observables_csv(result.series).str());

  json snaps = json::array();
  if (get(c, "write_snapshots", true)) {
    for (std::size_t n = 0; n < result.snapshots.size(); ++n) {
      const std::string stem = snapshot_stem(n);
      r.emit_snapshot(stem, result.snapshots[n], result.times[n]);
      snaps.push_back({{"t", result.times[n]}, {"path", stem + ".bin"}});
    }
  }
  const auto& s = result.series;
  auto rel_drift = [&](auto field) {
    double ref = std::abs(field(s.front())), m = 0.0;
    for (const auto& o : s) m = std::max(m, std::abs(field(o) - field(s.front())));
    return ref > 0.0 ? m / ref : m;
  };
  r.emit("evolve.json", io::dump({{"steps", result.steps},
                                  {"box", io::box_json(u0.box())},
                                  {"kappa", cfg.kappa},
                                  {"dt", cfg.dt},
                                  {"t_end", cfg.t_end},
                                  {"mass_drift_relative", rel_drift([](const auto& o) { return o.mass; })},
                                  {"hamiltonian_drift_relative", rel_drift([](const auto& o) { return o.hamiltonian; })},
                                  {"gl_energy_final", s.back().gl_energy},
                                  {"warnings", result.warnings},
                                  {"snapshots", snaps}}));
  r.say("steps " + std::to_string(result.steps) + ", final mass " + fmt(s.back().mass) + ", GL energy " +
        fmt(s.back().gl_energy));
  return kSuccess;
}

// --- zero sets ---------------------------------------------------------------------------

vortex::ExtractionOptions extraction_options(const json& c, const BoxSpec& box) {
  vortex::ExtractionOptions o;
  o.tol = get(c, "tol", o.tol);
  o.window = vortex::Window::central(box, get(c, "window_fraction", 0.8));
  o.merge_radius = get(c, "merge_radius", o.merge_radius);
  o.min_length = get(c, "min_length", o.min_length);
  o.newton_iterations = get(c, "newton_iterations", o.newton_iterations);
  return o;
}

vortex::EventOptions event_options(const json& c) {
  vortex::EventOptions o;
  o.min_snapshots_per_side = get(c, "min_snapshots_per_side", o.min_snapshots_per_side);
  o.fit_max = get(c, "fit_max", o.fit_max);
  o.fit_min_factor = get(c, "fit_min_factor", o.fit_min_factor);
  o.exclusion_snapshots = get(c, "exclusion_snapshots", o.exclusion_snapshots);
  o.max_exchange_run = get(c, "max_exchange_run", o.max_exchange_run);
  return o;
}

// Snapshots are independent; extraction runs concurrently, results land by index.
std::vector<vortex::CurveSet> extract_series(std::size_t n, const std::function<vortex::CurveSet(std::size_t)>& one) {
  std::vector<vortex::CurveSet> sets(n);
  std::exception_ptr failure;
#pragma omp parallel for schedule(dynamic)
  for (std::ptrdiff_t i = 0; i < static_cast<std::ptrdiff_t>(n); ++i) {
    try {
      sets[static_cast<std::size_t>(i)] = one(static_cast<std::size_t>(i));
    } catch (...) {
#pragma omp critical(vortexlab_cli_extract)
      if (!failure) failure = std::current_exception();
    }
  }
  if (failure) std::rethrow_exception(failure);
  return sets;
}

json analyze(Run& r, const std::vector<vortex::CurveSet>& sets, const vortex::EventOptions& eo) {
  const auto rows = vortex::component_timeline(sets);
  const auto events = r.timed("events", [&] { return vortex::detect_events(sets, eo); });
  r.emit("curves.csv", io::curves_csv(sets).str());
  r.emit("timeline.csv", io::timeline_csv(rows).str());
  r.emit("separation.csv", io::separation_csv(sets).str());
  const json ev = io::events_json(events);
  r.emit("events.json", io::dump(ev));

  json per = json::array();
  long degenerate = 0, unrefined = 0;
  for (const auto& s : sets) {
    degenerate += s.degenerate_cells;
    unrefined += s.unrefined_vertices;
    per.push_back({{"t", s.t},
                   {"count", s.count()},
                   {"degenerate_cells", s.degenerate_cells},
                   {"unrefined_vertices", s.unrefined_vertices},
                   {"discarded_specks", s.discarded_specks},
                   {"raw_residual", s.raw_residual},
                   {"refined_residual", s.refined_residual}});
  }
  r.say("snapshots " + std::to_string(sets.size()) + ", events " + std::to_string(events.size()) +
        ", degenerate cells " + std::to_string(degenerate));
  for (const auto& e : events)
    r.say("  " + scenarios::to_string(e.kind) + " at t = " + fmt(e.time) + ", exponent " + fmt(e.exponent) +
          ", prefactor " + fmt(e.prefactor) + ", parity " + std::to_string(e.parity_before) + " -> " +
          std::to_string(e.parity_after));
  return {{"snapshots", per}, {"degenerate_cells", degenerate}, {"unrefined_vertices", unrefined}, {"events", ev}};
}

int vortex_analyze(Run& r) {
  const json& c = r.section("vortex_analyze");
  if (!c.contains("snapshots")) throw ConfigError("vortex_analyze: 'snapshots' is required");
  const auto paths = c["snapshots"].get<std::vector<std::string>>();
  std::vector<io::Snapshot> snaps;
  r.timed("read", [&] {
    for (const auto& p : paths) snaps.push_back(io::read_snapshot(r.resolve(p)));
  });
  for (std::size_t i = 1; i < snaps.size(); ++i)
    if (!(snaps[i].t > snaps[i - 1].t)) throw ConfigError("vortex_analyze: snapshot times must increase");
  const json ec = c.contains("extraction") ? c["extraction"] : json::object();
  const auto sets = r.timed("extract", [&] {
    return extract_series(snaps.size(), [&](std::size_t i) {
      return vortex::extract_zero_set(snaps[i].field, snaps[i].t, extraction_options(ec, snaps[i].field.box()));
    });
  });
  json summary = analyze(r, sets, event_options(c.contains("events") ? c["events"] : json::object()));
  summary["inputs"] = paths;
  r.emit("analysis.json", io::dump(summary));
  return kSuccess;
}

int scenario_run(Run& r) {
  const json& c = r.section("scenario_run");
  const auto p = scenarios::preset(get<std::string>(c, "preset", "hyperbolic-exchange"), get(c, "radius", 0.5));
  const BoxSpec box = c.contains("points") ? scenarios::scenario_box(c["points"].get<int>()) : p.box;
  const auto times = scenarios::time_grid(get(c, "t_begin", p.t_begin), get(c, "t_end", p.t_end), get(c, "dt", p.dt));
  const bool exact = get<std::string>(c, "evaluator", "analytic") == "analytic";
  const json ec = c.contains("extraction") ? c["extraction"] : json::object();

  const auto sets = r.timed("extract", [&] {
    return extract_series(times.size(), [&](std::size_t i) {
      auto o = extraction_options(ec, box);
      if (exact) o.evaluator = vortex::analytic(p.solution, times[i]);
      return vortex::extract_zero_set(scenarios::sample(p.solution, box, times[i]), times[i], o);
    });
  });
  if (get(c, "write_snapshots", false))
    for (std::size_t i = 0; i < times.size(); ++i) {
      r.emit_snapshot(snapshot_stem(i), scenarios::sample(p.solution, box, times[i]), times[i]);
    }

  json summary = analyze(r, sets, event_options(c.contains("events") ? c["events"] : json::object()));
  json expected = json::array();
  for (const auto& e : p.events)
    expected.push_back({{"time", e.time},
                        {"kind", scenarios::to_string(e.kind)},
                        {"exponent", e.exponent},
                        {"prefactor", e.prefactor},
                        {"countBefore", e.count_before},
                        {"countAfter", e.count_after}});
  summary["scenario"] = {{"preset", p.name},
                         {"radius", p.radius},
                         {"notes", p.notes},
                         {"box", io::box_json(box)},
                         {"t_begin", times.front()},
                         {"t_end", times.back()},
                         {"dt", times.size() > 1 ? times[1] - times[0] : 0.0},
                         {"evaluator", exact ? "analytic" : "trilinear"},
                         {"expected_events", expected}};
  r.emit("scenario.json", io::dump(summary));
  return kSuccess;
}

// --- torus-embed -------------------------------------------------------------------------

int torus_embed(Run& r) {
  const json& c = r.section("torus_embed");
  const auto Js = get<std::vector<int>>(c, "J", {2, 3, 4});
  const long long q_max = get<long long>(c, "q_max", 8);
  const double w = get(c, "gaussian_width", 1.0);
  evolve::TorusOptions to;
  to.denominator_limit = get<long long>(c, "denominator_limit", to.denominator_limit);
  to.t_max = get(c, "t_max", to.t_max);
  to.reference_nodes = get(c, "reference_nodes", to.reference_nodes);
  // int e^{i xi.x - i|xi|^2 t} e^{-w|xi|^2} dxi in closed form
  to.reference = [w](const Vec3& x, double t) {
    const cplx a{w, t};
    return std::pow(kPi / a, 1.5) * std::exp(-dot(x, x) / (4.0 * a));
  };
  const auto v0 = [w](const Vec3& xi) { return cplx{std::exp(-w * dot(xi, xi)), 0.0}; };

  json rows = json::array();
  io::Csv csv({"J", "N", "riemann_error", "snapping_error", "periodicity_error"});
  double prev = std::numeric_limits<double>::infinity();
  bool monotone = true;
  for (int J : Js) {
    const auto d = r.timed("J=" + std::to_string(J), [&] { return evolve::torus_rationalize(v0, J, q_max, to); });
    double periodic = 0.0;
    for (const Vec3& x : {Vec3{0.3, -0.7, 1.1}, Vec3{-2.0, 0.4, 0.9}})
      for (double t : {0.0, 0.37}) {
        const cplx base = d.torus(x, t);
        for (int a = 0; a < 3; ++a) {
          Vec3 y = x;
          y[static_cast<std::size_t>(a)] += 2 * kPi;
          periodic = std::max(periodic, std::abs(d.torus(y, t) - base));
        }
        periodic = std::max(periodic, std::abs(d.torus(x, t + 2 * kPi) - base));
      }
    monotone = monotone && d.riemann_error < prev;
    prev = d.riemann_error;
    csv.row({static_cast<double>(J), static_cast<double>(d.N), d.riemann_error, d.snapping_error, periodic});
    rows.push_back({{"J", J},
                    {"N", d.N},
                    {"nodes", d.nodes.size()},
                    {"riemann_error", d.riemann_error},
                    {"snapping_error", d.snapping_error},
                    {"periodicity_error", periodic}});
    r.say("J=" + std::to_string(J) + ": N " + std::to_string(d.N) + ", riemann error " + fmt(d.riemann_error));
  }
  r.emit("torus_errors.csv", csv.str());
  r.emit("torus.json", io::dump({{"gaussian_width", w}, {"q_max", q_max}, {"t_max", to.t_max},
                                 {"monotone", monotone}, {"rows", rows}}));
  return kSuccess;
}

int run_selftest(Run& r) {
  const auto rep = r.timed("selftest", [&] { return selftest(r.seed, get(r.section("selftest"), "stability_trials", 12)); });
  r.emit("selftest.json", io::dump({{"passed", rep.passed}, {"failed", rep.failed}, {"checks", rep.checks}}));
  for (const auto& ch : rep.checks)
    r.say(std::string(ch["passed"].get<bool>() ? "ok   " : "FAIL ") + ch["name"].get<std::string>());
  r.say("passed " + std::to_string(rep.passed) + ", failed " + std::to_string(rep.failed));
  if (rep.failed > 0) throw NumericalError("selftest: " + std::to_string(rep.failed) + " invariant check(s) failed");
  return kSuccess;
}

int dispatch(Run& r) {
  const std::string& s = r.opt.subcommand;
  if (s == "helmholtz-runge") return helmholtz_runge(r);
  if (s == "schrod-approx") return schrod_approx(r);
  if (s == "gp-evolve") return gp_evolve(r);
  if (s == "vortex-analyze") return vortex_analyze(r);
  if (s == "scenario-run") return scenario_run(r);
  if (s == "torus-embed") return torus_embed(r);
  if (s == "selftest") return run_selftest(r);
  throw ConfigError("unknown subcommand '" + s + "'");
}

void write_manifest(Run& r, int status) {
  json resolved = r.config;
  resolved["seed"] = r.seed;
  const json manifest = {{"subcommand", r.opt.subcommand},
                         {"status", status},
                         {"seed", r.seed},
                         {"config", resolved},
                         {"config_hash", io::hex64(io::fnv1a(resolved.dump()))},
                         {"versions", io::versions()},
                         {"threads", kernels::configure_threads_from_env()},
                         {"timings_seconds", r.timings},
                         {"files", r.files}};
  io::write_file(r.opt.out / "manifest.json", io::dump(manifest));
}

int numerical_failure(Run& r, const std::exception& e, const char* type) {
  std::cerr << "vortexlab " << r.opt.subcommand << ": numerical failure: " << e.what() << '\n';
  json diag = {{"subcommand", r.opt.subcommand}, {"error", type}, {"message", e.what()}};
  if (const auto* ne = dynamic_cast<const NumericalError*>(&e)) {
    if (ne->achieved() >= 0.0) diag["achieved"] = ne->achieved();
    if (const auto* u = dynamic_cast<const UnreachableToleranceError*>(&e); u && u->slice() >= 0) diag["slice"] = u->slice();
    if (const auto* nf = dynamic_cast<const NonFiniteError*>(&e)) diag["step"] = nf->step();
  }
  try {
    r.emit("diagnostic.json", io::dump(diag));
    write_manifest(r, kNumericalFailure);
  } catch (const std::exception& io_error) {
    std::cerr << "vortexlab: cannot write diagnostics: " << io_error.what() << '\n';
    return kIoError;
  }
  return kNumericalFailure;
}

}  // namespace

std::vector<std::string> subcommands() {
  std::vector<std::string> names;
  for (const auto& s : kSubcommands) names.emplace_back(s.name);
  return names;
}

int run(const Options& options) {
  Run r;
  r.opt = options;
  kernels::configure_threads_from_env();

  // configuration errors are reported before anything is written
  try {
    r.config = json::object();
    if (options.config) {
      r.config = config::parse(io::read_file(*options.config));
      r.config_dir = options.config->parent_path();
    }
    r.seed = options.seed ? *options.seed : get<std::uint64_t>(r.config, "seed", 0);
    bool known = false;
    for (const auto& s : kSubcommands) {
      known = known || options.subcommand == s.name;
      if (options.subcommand != s.name && r.config.contains(s.section) && !options.quiet)
        std::cerr << "vortexlab: note: config section '" << s.section << "' is ignored by " << options.subcommand << '\n';
    }
    if (!known) throw ConfigError("unknown subcommand '" + options.subcommand + "'");
    std::error_code ec;
    fs::create_directories(options.out, ec);
    if (ec || !fs::is_directory(options.out))
      throw IoError("cannot create output directory " + options.out.string() + (ec ? ": " + ec.message() : ""));
  } catch (const ConfigError& e) {
    std::cerr << "vortexlab: config error: " << e.what() << '\n';
    return kConfigError;
  } catch (const IoError& e) {
    std::cerr << "vortexlab: I/O error: " << e.what() << '\n';
    return kIoError;
  }

  try {
    const int status = dispatch(r);
    write_manifest(r, status);
    return status;
  } catch (const ConfigError& e) {
    std::cerr << "vortexlab: config error: " << e.what() << '\n';
    return kConfigError;
  } catch (const GeometryError& e) {
    std::cerr << "vortexlab: config error (geometry): " << e.what() << '\n';
    return kConfigError;
  } catch (const RangeError& e) {
    std::cerr << "vortexlab: config error (range): " << e.what() << '\n';
    return kConfigError;
  } catch (const nlohmann::json::exception& e) {
    std::cerr << "vortexlab: config error: " << e.what() << '\n';
    return kConfigError;
  } catch (const IoError& e) {
    std::cerr << "vortexlab: I/O error: " << e.what() << '\n';
    return kIoError;
  } catch (const fs::filesystem_error& e) {
    std::cerr << "vortexlab: I/O error: " << e.what() << '\n';
    return kIoError;
  } catch (const NumericalError& e) {
    return numerical_failure(r, e, "numerical");
  } catch (const DomainError& e) {
    return numerical_failure(r, e, "domain");
  } catch (const std::exception& e) {
    return numerical_failure(r, e, "unexpected");
  }
}

int main(int argc, char** argv) {
  CLI::App app{"vortexlab: Runge approximation, Schrodinger/Gross-Pitaevskii evolution and vortex analytics"};
  app.set_version_flag("--version", VORTEXLAB_VERSION);
  Options o;
  std::string config_path;
  std::uint64_t seed = 0;
  app.add_option("--config", config_path, "JSON run configuration (see schemas/config.schema.json)");
  app.add_option("--out", o.out, "output directory")->capture_default_str();
  auto* seed_opt = app.add_option("--seed", seed, "seed for randomized probes (overrides the config)");
  app.add_flag("--quiet", o.quiet, "no progress output");
  bool print_schema = false;
  app.add_flag("--print-schema", print_schema, "print the configuration schema and exit");

  bool list_presets = false;
  for (const auto& s : kSubcommands) {
    auto* sub = app.add_subcommand(s.name, s.help);
    sub->fallthrough();
    if (std::string_view(s.name) == "scenario-run") sub->add_flag("--list-presets", list_presets, "list presets and exit");
  }
  app.require_subcommand(0, 1);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kSuccess : kConfigError;
  }
  if (print_schema) {
    std::cout << config::schema_text();
    return kSuccess;
  }
  if (app.get_subcommands().empty()) {
    std::cerr << app.help();
    return kConfigError;
  }
  o.subcommand = app.get_subcommands().front()->get_name();
  if (list_presets) {
    for (const auto& name : scenarios::preset_names())
      std::cout << name << ": " << scenarios::preset(name).notes << '\n';
    return kSuccess;
  }
  if (!config_path.empty()) o.config = config_path;
  if (*seed_opt) o.seed = seed;
  return run(o);
}

}  // namespace vortexlab::cli
