#include "vortexlab/vortex.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>
#include <unordered_map>
#include <unordered_set>

#include "vortexlab/errors.hpp"
#include "vortexlab/kernels.hpp"

namespace vortexlab::vortex {

double Polyline::length() const {
  double s = 0.0;
  for (std::size_t i = 1; i < points.size(); ++i) s += norm(points[i] - points[i - 1]);
  if (closed && points.size() > 2) s += norm(points.front() - points.back());
  return s;
}

std::size_t Component::vertex_count() const {
  std::size_t n = 0;
  for (const auto& p : pieces) n += p.points.size();
  return n;
}

Window Window::central(const BoxSpec& box, double fraction) {
  if (!(fraction > 0.0 && fraction <= 1.0)) throw ConfigError("window fraction must lie in (0, 1]");
  Window w;
  const Vec3 o = box.origin();
  for (std::size_t a = 0; a < 3; ++a) {
    const double lo = o[a];
    const double hi = o[a] + (box.points[a] - 1) * box.spacing(static_cast<int>(a));
    const double mid = 0.5 * (lo + hi), half = 0.5 * fraction * (hi - lo);
    w.lo[a] = mid - half;
    w.hi[a] = mid + half;
  }
  return w;
}

bool Window::contains(const Vec3& x) const {
  for (std::size_t a = 0; a < 3; ++a)
    if (x[a] < lo[a] || x[a] > hi[a]) return false;
  return true;
}

Evaluator trilinear(const ComplexField& u) {
  return [&u](const Vec3& x) {
    const BoxSpec& box = u.box();
    const Vec3 o = box.origin();
    std::array<int, 3> c{};
    Vec3 f{}, h{};
    for (std::size_t a = 0; a < 3; ++a) {
      h[a] = box.spacing(static_cast<int>(a));
      const double s = (x[a] - o[a]) / h[a];
      c[a] = std::clamp(static_cast<int>(std::floor(s)), 0, box.points[a] - 2);
      f[a] = s - c[a];
    }
    LocalJet jet{{0.0, 0.0}, {0.0, 0.0, 0.0}, {0.0, 0.0, 0.0}};
    for (int corner = 0; corner < 8; ++corner) {
      const std::array<int, 3> b{(corner >> 2) & 1, (corner >> 1) & 1, corner & 1};
      Vec3 w{}, dw{};
      for (std::size_t a = 0; a < 3; ++a) {
        w[a] = b[a] ? f[a] : 1.0 - f[a];
        dw[a] = (b[a] ? 1.0 : -1.0) / h[a];
      }
      const cplx v = u(c[0] + b[0], c[1] + b[1], c[2] + b[2]);
      jet.value += w[0] * w[1] * w[2] * v;
      const Vec3 g{dw[0] * w[1] * w[2], w[0] * dw[1] * w[2], w[0] * w[1] * dw[2]};
      for (std::size_t a = 0; a < 3; ++a) {
        jet.grad_re[a] += g[a] * v.real();
        jet.grad_im[a] += g[a] * v.imag();
      }
    }
    return jet;
  };
}

Evaluator analytic(const scenarios::QuadraticSolution& v, double t) {
  return [v, t](const Vec3& x) {
    const auto g = v.gradients(x);
    return LocalJet{v(x, t), g[0], g[1]};
  };
}

double segment_distance(const Vec3& p0, const Vec3& p1, const Vec3& q0, const Vec3& q1) {
  // closest points of two segments (clamped parametric solve)
  const Vec3 d1 = p1 - p0, d2 = q1 - q0, r = p0 - q0;
  const double a = dot(d1, d1), e = dot(d2, d2), f = dot(d2, r);
  constexpr double eps = 1e-300;
  double s = 0.0, t = 0.0;
  if (a <= eps && e <= eps) return norm(r);
  if (a <= eps) {
    t = std::clamp(f / e, 0.0, 1.0);
  } else {
    const double c = dot(d1, r);
    if (e <= eps) {
      s = std::clamp(-c / a, 0.0, 1.0);
    } else {
      const double b = dot(d1, d2), denom = a * e - b * b;
      s = denom > 0.0 ? std::clamp((b * f - c * e) / denom, 0.0, 1.0) : 0.0;
      t = (b * s + f) / e;
      if (t < 0.0) {
        t = 0.0;
        s = std::clamp(-c / a, 0.0, 1.0);
      } else if (t > 1.0) {
        t = 1.0;
        s = std::clamp((b - c) / a, 0.0, 1.0);
      }
    }
  }
  return norm((p0 + s * d1) - (q0 + t * d2));
}

namespace {

template <class F>
void for_each_segment(const Component& c, F&& f) {
  for (const auto& p : c.pieces) {
    const auto& v = p.points;
    if (v.size() == 1) f(v[0], v[0]);
    for (std::size_t i = 1; i < v.size(); ++i) f(v[i - 1], v[i]);
    if (p.closed && v.size() > 2) f(v.back(), v.front());
  }
}

struct Bounds {
  Vec3 lo{std::numeric_limits<double>::infinity(), std::numeric_limits<double>::infinity(),
          std::numeric_limits<double>::infinity()};
  Vec3 hi{-std::numeric_limits<double>::infinity(), -std::numeric_limits<double>::infinity(),
          -std::numeric_limits<double>::infinity()};
  void add(const Vec3& x) {
    for (std::size_t a = 0; a < 3; ++a) {
      lo[a] = std::min(lo[a], x[a]);
      hi[a] = std::max(hi[a], x[a]);
    }
  }
  double gap(const Bounds& o) const {
    double s = 0.0;
    for (std::size_t a = 0; a < 3; ++a) {
      const double g = std::max({0.0, o.lo[a] - hi[a], lo[a] - o.hi[a]});
      s += g * g;
    }
    return std::sqrt(s);
  }
};

Bounds bounds_of(const Component& c) {
  Bounds b;
  for (const auto& p : c.pieces)
    for (const auto& x : p.points) b.add(x);
  return b;
}

struct DisjointSet {
  std::vector<int> parent;
  explicit DisjointSet(std::size_t n) : parent(n) { std::iota(parent.begin(), parent.end(), 0); }
  int find(int x) {
    while (parent[static_cast<std::size_t>(x)] != x) {
      parent[static_cast<std::size_t>(x)] = parent[static_cast<std::size_t>(parent[static_cast<std::size_t>(x)])];
      x = parent[static_cast<std::size_t>(x)];
    }
    return x;
  }
  void unite(int a, int b) {
    a = find(a);
    b = find(b);
    if (a != b) parent[static_cast<std::size_t>(std::max(a, b))] = std::min(a, b);
  }
};

// A zero on a face is keyed by the vertices of the smallest simplex holding it,
// so neighbouring tetrahedra agree on it.
using Key = std::array<long long, 3>;
struct KeyHash {
  std::size_t operator()(const Key& k) const {
    std::size_t h = 1469598103934665603ull;
    for (long long v : k) h = (h ^ static_cast<std::size_t>(v)) * 1099511628211ull;
    return h;
  }
};

struct FaceZero {
  bool found = false;
  bool degenerate = false;
  Key key{-1, -1, -1};
  Vec3 x{};
};

// For (nearly) collinear values: does 0 lie in their convex hull?
bool zero_in_flat_triangle(cplx a, cplx b, cplx c) {
  cplx p = a, q = b;
  if (std::abs(c - a) > std::abs(q - p)) q = c;
  if (std::abs(c - b) > std::abs(q - p)) {
    p = b;
    q = c;
  }
  const cplx d = q - p;
  const double len = std::abs(d);
  const double mag = std::max({std::abs(a), std::abs(b), std::abs(c)});
  if (len == 0.0) return mag == 0.0;
  if (std::abs((std::conj(d) * (-p)).imag()) / len > 1e-12 * mag) return false;
  const double s = (std::conj(d) * (-p)).real() / (len * len);
  return s >= 0.0 && s <= 1.0;
}

void finalize(Component& c) {
  double len = 0.0;
  Vec3 acc{0.0, 0.0, 0.0};
  std::size_t nv = 0;
  Vec3 vsum{0.0, 0.0, 0.0};
  for_each_segment(c, [&](const Vec3& a, const Vec3& b) {
    const double l = norm(b - a);
    len += l;
    acc = acc + (0.5 * l) * (a + b);
  });
  for (const auto& p : c.pieces)
    for (const auto& x : p.points) {
      vsum = vsum + x;
      ++nv;
    }
  c.length = len;
  c.centroid = len > 0.0 ? (1.0 / len) * acc : (nv ? (1.0 / static_cast<double>(nv)) * vsum : Vec3{0.0, 0.0, 0.0});
}

}  // namespace

double component_distance(const Component& a, const Component& b) {
  double best = std::numeric_limits<double>::infinity();
  for_each_segment(a, [&](const Vec3& p0, const Vec3& p1) {
    for_each_segment(b, [&](const Vec3& q0, const Vec3& q1) { best = std::min(best, segment_distance(p0, p1, q0, q1)); });
  });
  return best;
}

CurveSet extract_zero_set(const ComplexField& u, double t, const ExtractionOptions& options) {
  const BoxSpec& box = u.box();
  const auto dims = box.points;
  const double h = std::max({box.spacing(0), box.spacing(1), box.spacing(2)});
  const Window window = options.window ? *options.window : Window::central(box);

  CurveSet out;
  out.t = t;
  out.h = h;
  out.merge_radius = options.merge_radius >= 0.0 ? options.merge_radius : 2.0 * h;
  const double min_length = options.min_length >= 0.0 ? options.min_length : h;

  const std::array<int, 3> cd{dims[0] - 1, dims[1] - 1, dims[2] - 1};
  std::vector<std::uint8_t> flags(static_cast<std::size_t>(cd[0]) * cd[1] * cd[2]);
  kernels::parallel::mark_zero_cells(u.values(), dims, flags);

  std::unordered_map<Key, FaceZero, KeyHash> faces;
  std::unordered_map<Key, int, KeyHash> node_of;
  std::vector<Vec3> nodes;
  std::vector<std::array<int, 2>> edges;
  std::unordered_set<long long> edge_seen;

  auto vertex_id = [&](int i, int j, int k) { return static_cast<long long>(u.index(i, j, k)); };
  auto vertex_pos = [&](long long id) {
    const long long nz = dims[2], ny = dims[1];
    const int k = static_cast<int>(id % nz), j = static_cast<int>((id / nz) % ny), i = static_cast<int>(id / (nz * ny));
    return u.point(i, j, k);
  };
  const auto values = u.values();

  auto face_zero = [&](Key f) -> const FaceZero& {
    std::sort(f.begin(), f.end());
    auto it = faces.find(f);
    if (it != faces.end()) return it->second;
    FaceZero z;
    const cplx u0 = values[static_cast<std::size_t>(f[0])];
    const cplx d1 = values[static_cast<std::size_t>(f[1])] - u0, d2 = values[static_cast<std::size_t>(f[2])] - u0;
    const double det = d1.real() * d2.imag() - d2.real() * d1.imag();
    const double scale = std::abs(d1) * std::abs(d2);
    if (!(std::abs(det) > 1e-14 * scale)) {
      z.degenerate = zero_in_flat_triangle(u0, values[static_cast<std::size_t>(f[1])], values[static_cast<std::size_t>(f[2])]);
    } else {
      const double l1 = (-u0.real() * d2.imag() + d2.real() * u0.imag()) / det;
      const double l2 = (-d1.real() * u0.imag() + u0.real() * d1.imag()) / det;
      std::array<double, 3> lam{1.0 - l1 - l2, l1, l2};
      constexpr double eps = 1e-12;
      if (lam[0] >= -eps && lam[1] >= -eps && lam[2] >= -eps) {
        double s = 0.0;
        for (auto& l : lam) s += (l = std::max(l, 0.0));
        z.found = true;
        int n = 0;
        z.x = {0.0, 0.0, 0.0};
        for (std::size_t a = 0; a < 3; ++a) {
          lam[a] /= s;
          if (lam[a] > eps) z.key[static_cast<std::size_t>(n++)] = f[a];
          z.x = z.x + lam[a] * vertex_pos(f[a]);
        }
        std::sort(z.key.begin(), z.key.begin() + n);
      }
    }
    return faces.emplace(f, z).first->second;
  };

  auto node = [&](const FaceZero& z) {
    auto [it, inserted] = node_of.emplace(z.key, static_cast<int>(nodes.size()));
    if (inserted) nodes.push_back(z.x);
    return it->second;
  };

  // Kuhn split: path 0 -> e_p0 -> e_p0 + e_p1 -> (1,1,1) for each axis permutation
  static constexpr std::array<std::array<int, 3>, 6> perms{
      {{0, 1, 2}, {0, 2, 1}, {1, 0, 2}, {1, 2, 0}, {2, 0, 1}, {2, 1, 0}}};

  for (int i = 0; i < cd[0]; ++i)
    for (int j = 0; j < cd[1]; ++j)
      for (int k = 0; k < cd[2]; ++k) {
        if (!flags[(static_cast<std::size_t>(i) * cd[1] + j) * cd[2] + k]) continue;
        bool cell_degenerate = false;
        for (const auto& p : perms) {
          std::array<int, 3> c{i, j, k};
          std::array<long long, 4> tet{};
          tet[0] = vertex_id(c[0], c[1], c[2]);
          for (std::size_t s = 0; s < 3; ++s) {
            ++c[static_cast<std::size_t>(p[s])];
            tet[s + 1] = vertex_id(c[0], c[1], c[2]);
          }
          std::array<int, 4> found{};
          int nfound = 0;
          for (std::size_t skip = 0; skip < 4; ++skip) {
            Key f{};
            std::size_t n = 0;
            for (std::size_t v = 0; v < 4; ++v)
              if (v != skip) f[n++] = tet[v];
            const FaceZero& z = face_zero(f);
            if (z.degenerate) cell_degenerate = true;
            if (!z.found) continue;
            const int id = node(z);
            if (std::find(found.begin(), found.begin() + nfound, id) == found.begin() + nfound) found[static_cast<std::size_t>(nfound++)] = id;
          }
          if (nfound == 2) {
            const int a = std::min(found[0], found[1]), b = std::max(found[0], found[1]);
            if (edge_seen.insert(static_cast<long long>(a) * (1ll << 31) + b).second) edges.push_back({a, b});
          } else if (nfound > 2) {
            cell_degenerate = true;
          }
        }
        if (cell_degenerate) ++out.degenerate_cells;
      }

  // Refinement (Newton with the minimum-norm step for 2 equations in 3 unknowns).
  const Evaluator eval = options.evaluator ? options.evaluator : trilinear(u);
  std::vector<Vec3> refined = nodes;
  for (std::size_t n = 0; n < nodes.size(); ++n) {
    const double raw = std::abs(eval(nodes[n]).value);
    out.raw_residual = std::max(out.raw_residual, raw);
    if (!options.refine) {
      out.refined_residual = std::max(out.refined_residual, raw);
      continue;
    }
    Vec3 x = nodes[n];
    double res = raw;
    for (int it = 0; it < options.newton_iterations && res >= 0.01 * options.tol; ++it) {
      const LocalJet jet = eval(x);
      const Vec3& g1 = jet.grad_re;
      const Vec3& g2 = jet.grad_im;
      const double a11 = dot(g1, g1), a12 = dot(g1, g2), a22 = dot(g2, g2);
      const double det = a11 * a22 - a12 * a12;
      if (!(det > 1e-24 * (a11 * a22))) break;
      const double r1 = jet.value.real(), r2 = jet.value.imag();
      const double y1 = (a22 * r1 - a12 * r2) / det, y2 = (a11 * r2 - a12 * r1) / det;
      x = x - (y1 * g1 + y2 * g2);
      res = std::abs(eval(x).value);
    }
    if (res < options.tol && norm(x - nodes[n]) <= 2.0 * h) {
      refined[n] = x;
      out.refined_residual = std::max(out.refined_residual, res);
    } else {
      ++out.unrefined_vertices;
      out.refined_residual = std::max(out.refined_residual, raw);
    }
  }

  // Clip to the window on the unrefined geometry (keeps the clip independent of the evaluator).
  std::vector<std::array<int, 2>> kept;
  for (const auto& e : edges)
    if (window.contains(nodes[static_cast<std::size_t>(e[0])]) && window.contains(nodes[static_cast<std::size_t>(e[1])]))
      kept.push_back(e);

  DisjointSet ds(nodes.size());
  std::vector<std::vector<int>> adj(nodes.size());
  for (std::size_t e = 0; e < kept.size(); ++e) {
    ds.unite(kept[e][0], kept[e][1]);
    adj[static_cast<std::size_t>(kept[e][0])].push_back(static_cast<int>(e));
    adj[static_cast<std::size_t>(kept[e][1])].push_back(static_cast<int>(e));
  }

  std::vector<int> comp_of_root(nodes.size(), -1);
  std::vector<std::vector<int>> comp_nodes;
  for (std::size_t n = 0; n < nodes.size(); ++n) {
    if (adj[n].empty()) continue;
    const int r = ds.find(static_cast<int>(n));
    int& c = comp_of_root[static_cast<std::size_t>(r)];
    if (c < 0) {
      c = static_cast<int>(comp_nodes.size());
      comp_nodes.emplace_back();
    }
    comp_nodes[static_cast<std::size_t>(c)].push_back(static_cast<int>(n));
  }

  std::vector<char> used(kept.size(), 0);
  auto walk = [&](int start) {
    Polyline line;
    line.points.push_back(refined[static_cast<std::size_t>(start)]);
    int cur = start;
    for (;;) {
      int next_edge = -1;
      for (int e : adj[static_cast<std::size_t>(cur)])
        if (!used[static_cast<std::size_t>(e)]) {
          next_edge = e;
          break;
        }
      if (next_edge < 0) break;
      used[static_cast<std::size_t>(next_edge)] = 1;
      const auto& e = kept[static_cast<std::size_t>(next_edge)];
      cur = e[0] == cur ? e[1] : e[0];
      if (cur == start) {
        line.closed = true;
        break;
      }
      line.points.push_back(refined[static_cast<std::size_t>(cur)]);
    }
    return line;
  };

  std::vector<Component> comps;
  for (const auto& members : comp_nodes) {
    Component c;
    for (int n : members)
      if (adj[static_cast<std::size_t>(n)].size() % 2 == 1)
        while (std::any_of(adj[static_cast<std::size_t>(n)].begin(), adj[static_cast<std::size_t>(n)].end(),
                           [&](int e) { return !used[static_cast<std::size_t>(e)]; }))
          c.pieces.push_back(walk(n));
    for (int n : members)
      while (std::any_of(adj[static_cast<std::size_t>(n)].begin(), adj[static_cast<std::size_t>(n)].end(),
                         [&](int e) { return !used[static_cast<std::size_t>(e)]; }))
        c.pieces.push_back(walk(n));
    finalize(c);
    if (c.length < min_length) {
      ++out.discarded_specks;
      continue;
    }
    comps.push_back(std::move(c));
  }

  // Merge components closer than the merge radius.
  DisjointSet merge(comps.size());
  std::vector<Bounds> bb;
  for (const auto& c : comps) bb.push_back(bounds_of(c));
  for (std::size_t a = 0; a < comps.size(); ++a)
    for (std::size_t b = a + 1; b < comps.size(); ++b)
      if (bb[a].gap(bb[b]) < out.merge_radius && component_distance(comps[a], comps[b]) < out.merge_radius)
        merge.unite(static_cast<int>(a), static_cast<int>(b));
  std::vector<int> slot(comps.size(), -1);
  for (std::size_t a = 0; a < comps.size(); ++a) {
    const int r = merge.find(static_cast<int>(a));
    if (slot[static_cast<std::size_t>(r)] < 0) {
      slot[static_cast<std::size_t>(r)] = static_cast<int>(out.components.size());
      out.components.push_back(std::move(comps[a]));
    } else {
      auto& dst = out.components[static_cast<std::size_t>(slot[static_cast<std::size_t>(r)])].pieces;
      for (auto& p : comps[a].pieces) dst.push_back(std::move(p));
    }
  }
  for (auto& c : out.components) finalize(c);
  return out;
}

std::optional<double> min_separation(const CurveSet& set) {
  if (set.components.size() < 2) return std::nullopt;
  double best = std::numeric_limits<double>::infinity();
  for (std::size_t a = 0; a < set.components.size(); ++a)
    for (std::size_t b = a + 1; b < set.components.size(); ++b)
      best = std::min(best, component_distance(set.components[a], set.components[b]));
  return best;
}

double min_separation(const CurveSet& set, std::size_t a, std::size_t b) {
  if (a >= set.components.size() || b >= set.components.size())
    throw DomainError("min_separation: component index out of range (" + std::to_string(set.components.size()) +
                      " components)");
  return component_distance(set.components[a], set.components[b]);
}

std::vector<TimelineRow> component_timeline(std::span<const CurveSet> sets) {
  std::vector<TimelineRow> rows;
  rows.reserve(sets.size());
  for (const auto& s : sets) {
    const int n = static_cast<int>(s.count());
    rows.push_back({s.t, n, n % 2});
  }
  return rows;
}

std::vector<int> link_components(const CurveSet& prev, const CurveSet& next, double max_jump) {
  std::vector<int> link(prev.count(), -1);
  std::vector<int> claimed(next.count(), 0);
  for (std::size_t i = 0; i < prev.count(); ++i) {
    double best = std::numeric_limits<double>::infinity(), second = best;
    int arg = -1;
    for (std::size_t j = 0; j < next.count(); ++j) {
      const double d = norm(prev.components[i].centroid - next.components[j].centroid);
      if (d < best) {
        second = best;
        best = d;
        arg = static_cast<int>(j);
      } else if (d < second) {
        second = d;
      }
    }
    // ambiguous when the runner-up is nearly as close
    if (arg >= 0 && best <= max_jump && !(second <= max_jump && second < 1.5 * best)) {
      link[i] = arg;
      ++claimed[static_cast<std::size_t>(arg)];
    }
  }
  for (auto& l : link)
    if (l >= 0 && claimed[static_cast<std::size_t>(l)] > 1) l = -1;
  return link;
}

double component_radius(const Component& c) {
  double d2 = 0.0;
  std::vector<Vec3> pts;
  for (const auto& p : c.pieces) pts.insert(pts.end(), p.points.begin(), p.points.end());
  for (std::size_t a = 0; a < pts.size(); ++a)
    for (std::size_t b = a + 1; b < pts.size(); ++b) d2 = std::max(d2, dot(pts[a] - pts[b], pts[a] - pts[b]));
  return 0.5 * std::sqrt(d2);
}

PowerFit fit_power_law(std::span<const double> t, std::span<const double> y, double T) {
  PowerFit fit;
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  int n = 0;
  for (std::size_t i = 0; i < t.size(); ++i) {
    const double dt = std::abs(t[i] - T);
    if (!(dt > 0.0) || !(y[i] > 0.0)) continue;
    const double lx = std::log(dt), ly = std::log(y[i]);
    sx += lx;
    sy += ly;
    sxx += lx * lx;
    sxy += lx * ly;
    ++n;
  }
  fit.points = n;
  if (n < 2) return fit;
  const double den = n * sxx - sx * sx;
  if (!(den > 0.0)) return fit;
  fit.exponent = (n * sxy - sx * sy) / den;
  const double logc = (sy - fit.exponent * sx) / n;
  fit.prefactor = std::exp(logc);
  double ss = 0.0;
  for (std::size_t i = 0; i < t.size(); ++i) {
    const double dt = std::abs(t[i] - T);
    if (!(dt > 0.0) || !(y[i] > 0.0)) continue;
    const double r = std::log(y[i]) - (logc + fit.exponent * std::log(dt));
    ss += r * r;
  }
  fit.rms = std::sqrt(ss / n);
  return fit;
}

namespace {

// Refine T over (lo, hi) by scanning, the data set fixed.
std::pair<double, PowerFit> refine_time(const std::vector<double>& t, const std::vector<double>& y, double lo, double hi) {
  double best_T = 0.5 * (lo + hi);
  PowerFit best = fit_power_law(t, y, best_T);
  constexpr int steps = 400;
  for (int s = 1; s < steps; ++s) {
    const double T = lo + (hi - lo) * s / steps;
    const PowerFit f = fit_power_law(t, y, T);
    if (f.points == best.points && f.rms < best.rms) {
      best = f;
      best_T = T;
    }
  }
  return {best_T, best};
}

}  // namespace

std::vector<Event> detect_events(std::span<const CurveSet> sets, const EventOptions& opt) {
  std::vector<Event> events;
  const std::size_t N = sets.size();
  if (N < 2) return events;
  std::vector<int> c(N);
  for (std::size_t n = 0; n < N; ++n) c[n] = static_cast<int>(sets[n].count());
  const double h = sets.front().h;
  const double fit_min = opt.fit_min_factor * h * h;

  std::size_t prev_end = 0;  // first snapshot after the previous event
  std::size_t n = 1;
  while (n < N) {
    if (c[n] == c[n - 1]) {
      ++n;
      continue;
    }
    const int k = c[n - 1];
    std::size_t first = n, last = n;
    Event ev;
    ev.count_before = k;
    ev.count_after = c[n];
    ev.parity_before = k % 2;
    ev.parity_after = c[n] % 2;

    std::size_t m = n;
    while (m < N && c[m] == c[n] && m - n < static_cast<std::size_t>(opt.max_exchange_run)) ++m;
    const bool exchange = c[n] == k - 1 && m < N && c[m] == k;
    if (exchange) {
      last = m - 1;
      ev.kind = EventKind::Exchange;
    } else if (c[n] - k == 1) {
      ev.kind = EventKind::Birth;
    } else if (c[n] - k == -1) {
      ev.kind = EventKind::Death;
    } else {
      ev.kind = EventKind::Unclassified;
      ev.note = "count jumped by more than one";
    }
    const double lo = sets[first - 1].t;
    const double hi = last + 1 < N ? sets[last + 1].t : sets[last].t;
    ev.time = exchange ? 0.5 * (lo + hi) : 0.5 * (lo + sets[first].t);

    // steady bracket on each side
    std::size_t after_end = last + 1;
    const int after_count = exchange ? k : c[n];
    while (after_end < N && c[after_end] == after_count) ++after_end;
    const std::size_t before = first - prev_end;
    const std::size_t after = exchange ? after_end - (last + 1) : after_end - first;
    if (ev.kind != EventKind::Unclassified &&
        (before < static_cast<std::size_t>(opt.min_snapshots_per_side) ||
         after < static_cast<std::size_t>(opt.min_snapshots_per_side))) {
      ev.kind = EventKind::Unclassified;
      ev.note = "fewer than " + std::to_string(opt.min_snapshots_per_side) + " snapshots on one side";
    }

    if (ev.kind != EventKind::Unclassified) {
      std::vector<double> ft, fy;
      auto take = [&](std::size_t i) {
        const double d = std::abs(sets[i].t - ev.time);
        if (d < fit_min || d > opt.fit_max) return;
        double y = 0.0;
        if (exchange) {
          const auto s = min_separation(sets[i]);
          if (!s) return;
          y = *s;
        } else {
          // the smallest component is the one being born or dying
          const auto& comps = sets[i].components;
          if (comps.empty()) return;
          const auto it = std::min_element(comps.begin(), comps.end(),
                                           [](const Component& a, const Component& b) { return a.length < b.length; });
          y = component_radius(*it);
        }
        ft.push_back(sets[i].t);
        fy.push_back(y);
      };
      for (std::size_t i = prev_end; i < first; ++i)
        if (exchange || ev.kind == EventKind::Death) take(i);
      for (std::size_t i = last + 1; i < after_end; ++i)
        if (exchange || ev.kind == EventKind::Birth) take(i);
      const double scan_hi = exchange ? hi : sets[first].t;
      if (ft.size() >= 3) {
        const auto [T, fit] = refine_time(ft, fy, lo, scan_hi);
        ev.time = T;
        ev.exponent = fit.exponent;
        ev.prefactor = fit.prefactor;
        ev.fit_points = fit.points;
        ev.fit_rms = fit.rms;
        ev.fit_window_min = fit_min;
        ev.fit_window_max = opt.fit_max;
      } else {
        ev.note = "too few snapshots inside the fit window";
      }
    }
    ev.exclusion_begin = sets[first >= static_cast<std::size_t>(opt.exclusion_snapshots) ? first - static_cast<std::size_t>(opt.exclusion_snapshots) : 0].t;
    ev.exclusion_end = sets[std::min(N - 1, last + static_cast<std::size_t>(opt.exclusion_snapshots))].t;
    events.push_back(ev);
    // an exchange ends with the return to k, which is not a separate event
    prev_end = exchange ? last + 1 : first;
    n = exchange ? last + 2 : first + 1;
  }
  return events;
}

}  // namespace vortexlab::vortex
