#pragma once

#include "mms/linear.hpp"
#include "mms/rational.hpp"

#include <algorithm>
#include <optional>
#include <stdexcept>
#include <vector>

namespace mms {

// Closed convex polytope in halfspace form: { x : A x <= b }.
struct Polytope {
  size_t dim = 0;
  std::vector<Vec> A;
  Vec b;

  size_t rows() const { return A.size(); }
};

// Validates and normalises rows.  A row with all-zero coefficients is either
// vacuous (bound >= 0, dropped) or unsatisfiable (bound < 0, rejected).
inline Polytope make_polytope(size_t dim, std::vector<Vec> a, Vec b) {
  if (a.size() != b.size()) throw std::invalid_argument("polytope rows/bounds mismatch");
  Polytope p;
  p.dim = dim;
  for (size_t i = 0; i < a.size(); ++i) {
    if (a[i].size() != dim) throw std::invalid_argument("polytope row arity mismatch");
    bool zero = true;
    for (const auto& c : a[i])
      if (c != 0) { zero = false; break; }
    if (zero) {
      if (b[i] < 0) throw std::invalid_argument("polytope zero row with negative bound");
      continue;
    }
    p.A.push_back(std::move(a[i]));
    p.b.push_back(std::move(b[i]));
  }
  return p;
}

// Axis-aligned box [lo_1, hi_1] x ... x [lo_n, hi_n].
inline Polytope box_polytope(const Vec& lo, const Vec& hi) {
  if (lo.size() != hi.size()) throw std::invalid_argument("box corner arity mismatch");
  const size_t n = lo.size();
  std::vector<Vec> a;
  Vec b;
  for (size_t j = 0; j < n; ++j) {
    if (lo[j] > hi[j]) throw std::invalid_argument("box with empty side");
    Vec up(n, Rat(0)), down(n, Rat(0));
    up[j] = 1;
    down[j] = -1;
    a.push_back(up);
    b.push_back(hi[j]);
    a.push_back(down);
    b.push_back(-lo[j]);
  }
  return make_polytope(n, std::move(a), std::move(b));
}

inline Rat dot(const Vec& a, const Vec& x) {
  if (a.size() != x.size()) throw std::invalid_argument("dot arity mismatch");
  Rat s = 0;
  for (size_t i = 0; i < a.size(); ++i) s += a[i] * x[i];
  return s;
}

inline bool contains(const Polytope& p, const Vec& x, bool strictly = false) {
  if (x.size() != p.dim) throw std::invalid_argument("point arity mismatch");
  for (size_t i = 0; i < p.rows(); ++i) {
    Rat lhs = dot(p.A[i], x);
    if (strictly ? lhs >= p.b[i] : lhs > p.b[i]) return false;
  }
  return true;
}

// The segment is parameterised x(s) = s p + (1 - s) q for s in [0, 1].
// Returns a parameter at which the segment meets the closed polytope, or
// nullopt when they are disjoint.  Grazing contact counts as meeting.
inline std::optional<Rat> segment_intersection_witness(const Polytope& poly, const Vec& p,
                                                       const Vec& q) {
  if (p.size() != poly.dim || q.size() != poly.dim)
    throw std::invalid_argument("segment arity mismatch");
  std::vector<IntervalAtom> atoms;
  for (size_t i = 0; i < poly.rows(); ++i) {
    // a . x(s) <= b  <=>  s * a . (p - q) <= b - a . q
    IntervalAtom at;
    at.slope = dot(poly.A[i], p) - dot(poly.A[i], q);
    at.bound = poly.b[i] - dot(poly.A[i], q);
    at.rel = Rel::Le;
    atoms.push_back(at);
  }
  auto r = interval_emptiness_1d(atoms, Rat(0), Rat(1));
  if (r.empty) return std::nullopt;
  return *r.witness;
}

inline bool segment_intersects(const Polytope& poly, const Vec& p, const Vec& q) {
  return segment_intersection_witness(poly, p, q).has_value();
}

// Exact L-infinity distance from the segment p-q to the closed polytope,
// via the LP  min d  s.t.  |x(s)_i - y_i| <= d, A y <= b, s in [0, 1].
// Returns nullopt when the polytope is empty (distance is +infinity).
inline std::optional<Rat> polytope_distance(const Polytope& poly, const Vec& p, const Vec& q) {
  if (p.size() != poly.dim || q.size() != poly.dim)
    throw std::invalid_argument("segment arity mismatch");
  const size_t n = poly.dim;
  // Variables: y_0..y_{n-1}, s, d.
  const size_t vs = n, vd = n + 1, nvars = n + 2;
  std::vector<LinearConstraint> cons;
  for (size_t i = 0; i < n; ++i) {
    LinearConstraint c1, c2;
    c1.coeffs.assign(nvars, Rat(0));
    c2.coeffs.assign(nvars, Rat(0));
    // x(s)_i - y_i <= d  with x(s)_i = q_i + s (p_i - q_i)
    c1.coeffs[vs] = p[i] - q[i];
    c1.coeffs[i] = -1;
    c1.coeffs[vd] = -1;
    c1.bound = -q[i];
    // y_i - x(s)_i <= d
    c2.coeffs[vs] = q[i] - p[i];
    c2.coeffs[i] = 1;
    c2.coeffs[vd] = -1;
    c2.bound = q[i];
    cons.push_back(c1);
    cons.push_back(c2);
  }
  for (size_t r = 0; r < poly.rows(); ++r) {
    LinearConstraint c;
    c.coeffs.assign(nvars, Rat(0));
    for (size_t j = 0; j < n; ++j) c.coeffs[j] = poly.A[r][j];
    c.bound = poly.b[r];
    cons.push_back(c);
  }
  LinearConstraint slo, shi;
  slo.coeffs.assign(nvars, Rat(0));
  slo.coeffs[vs] = -1;
  slo.bound = 0;
  shi.coeffs.assign(nvars, Rat(0));
  shi.coeffs[vs] = 1;
  shi.bound = 1;
  cons.push_back(slo);
  cons.push_back(shi);
  Vec obj(nvars, Rat(0));
  obj[vd] = 1;
  auto r = lp_optimize(nvars, obj, Sense::Min, cons);
  if (r.kind == LpResult::Kind::Infeasible) return std::nullopt;
  if (r.kind != LpResult::Kind::Bounded) throw std::logic_error("distance LP cannot be unbounded");
  return r.value;
}

// L-infinity distance from the segment to the boundary hyperplane of each
// facet of an enclosing polytope, assuming the segment lies inside it.  For a
// facet a . x <= b the distance of a point z is (b - a . z) / |a|_1, and the
// minimum over the segment is attained at an endpoint.
inline std::optional<Rat> facet_distance(const Polytope& enclosure, const Vec& p, const Vec& q) {
  std::optional<Rat> best;
  for (size_t i = 0; i < enclosure.rows(); ++i) {
    Rat norm1 = 0;
    for (const auto& c : enclosure.A[i]) norm1 += rat_abs(c);
    for (const Vec* z : {&p, &q}) {
      Rat d = (enclosure.b[i] - dot(enclosure.A[i], *z)) / norm1;
      if (!best || d < *best) best = d;
    }
  }
  return best;
}

// Minimum clearance of the segment p-q: distance to the nearest obstacle and
// to the workspace boundary.  nullopt means unobstructed (+infinity).
inline std::optional<Rat> segment_clearance(const std::vector<Polytope>& obstacles,
                                            const Polytope* workspace, const Vec& p,
                                            const Vec& q) {
  std::optional<Rat> best;
  auto fold = [&](const std::optional<Rat>& d) {
    if (d && (!best || *d < *best)) best = d;
  };
  for (const auto& ob : obstacles) fold(polytope_distance(ob, p, q));
  if (workspace) fold(facet_distance(*workspace, p, q));
  return best;
}

// Vertices of a two-dimensional polytope, in counter-clockwise order.
// Intended for bounded cells; unbounded directions simply yield no vertices
// beyond the intersections found.
inline std::vector<Vec> polytope_vertices_2d(const Polytope& p) {
  if (p.dim != 2) throw std::invalid_argument("vertex enumeration is 2-D only");
  std::vector<Vec> verts;
  for (size_t i = 0; i < p.rows(); ++i) {
    for (size_t j = i + 1; j < p.rows(); ++j) {
      Rat det = p.A[i][0] * p.A[j][1] - p.A[i][1] * p.A[j][0];
      if (det == 0) continue;
      Rat x = (p.b[i] * p.A[j][1] - p.A[i][1] * p.b[j]) / det;
      Rat y = (p.A[i][0] * p.b[j] - p.b[i] * p.A[j][0]) / det;
      Vec v = {x, y};
      if (!contains(p, v)) continue;
      bool dup = false;
      for (const auto& w : verts)
        if (w == v) { dup = true; break; }
      if (!dup) verts.push_back(v);
    }
  }
  if (verts.size() < 3) return verts;
  Rat cx = 0, cy = 0;
  for (const auto& v : verts) {
    cx += v[0];
    cy += v[1];
  }
  cx /= int(verts.size());
  cy /= int(verts.size());
  auto half = [&](const Vec& v) {
    Rat dx = v[0] - cx, dy = v[1] - cy;
    return (dy > 0 || (dy == 0 && dx > 0)) ? 0 : 1;
  };
  std::sort(verts.begin(), verts.end(), [&](const Vec& u, const Vec& v) {
    int hu = half(u), hv = half(v);
    if (hu != hv) return hu < hv;
    Rat cross = (u[0] - cx) * (v[1] - cy) - (u[1] - cy) * (v[0] - cx);
    if (cross != 0) return cross > 0;
    // Collinear with the centroid: nearer first for determinism.
    Rat du = rat_abs(u[0] - cx) + rat_abs(u[1] - cy);
    Rat dv = rat_abs(v[0] - cx) + rat_abs(v[1] - cy);
    return du < dv;
  });
  return verts;
}

}  // namespace mms
