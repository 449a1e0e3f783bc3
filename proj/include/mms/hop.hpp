#pragma once

#include "mms/geometry.hpp"
#include "mms/linear.hpp"
#include "mms/model.hpp"

#include <optional>
#include <stdexcept>
#include <vector>

namespace mms {

// Nonnegative dwell times per mode whose combined drift moves p to q, i.e. a
// feasible point of { t >= 0 : p + sum_m t_m rate_m = q }.  The order matches
// sys.modes.  nullopt when q is outside the reachable cone of p.
inline std::optional<Vec> reach_cone_times(const Mms& sys, const Vec& p, const Vec& q) {
  if (p.size() != sys.dim || q.size() != sys.dim)
    throw std::invalid_argument("cone endpoint arity mismatch");
  const size_t nm = sys.modes.size();
  std::vector<LinearConstraint> cons;
  for (size_t i = 0; i < sys.dim; ++i) {
    LinearConstraint c;
    c.coeffs.assign(nm, Rat(0));
    for (size_t m = 0; m < nm; ++m) c.coeffs[m] = sys.modes[m].rate[i];
    c.bound = q[i] - p[i];
    c.rel = Rel::Eq;
    cons.push_back(c);
  }
  for (size_t m = 0; m < nm; ++m) {
    LinearConstraint c;
    c.coeffs.assign(nm, Rat(0));
    c.coeffs[m] = -1;
    c.bound = 0;
    cons.push_back(c);
  }
  auto r = lp_feasible(nm, cons);
  if (r.kind != LpResult::Kind::Feasible) return std::nullopt;
  return r.witness;
}

// Time until x + tau * r first leaves the open interior of S, or nullopt when
// it never does.  Exact: for each facet gaining value, the crossing time is
// (b - a . x) / (a . r).
inline std::optional<Rat> ray_exit_time(const Polytope& S, const Vec& x, const Vec& r) {
  std::optional<Rat> first;
  for (size_t i = 0; i < S.rows(); ++i) {
    Rat speed = dot(S.A[i], r);
    if (speed <= 0) continue;
    Rat tau = (S.b[i] - dot(S.A[i], x)) / speed;
    if (!first || tau < *first) first = tau;
  }
  return first;
}

// Largest uniform dwell bound at x: the least exit time over all modes.
// Requires x strictly inside S.  nullopt means every mode can dwell forever.
inline std::optional<Rat> t_safe(const Mms& sys, const Polytope& S, const Vec& x) {
  if (!contains(S, x, /*strictly=*/true))
    throw std::invalid_argument("dwell point is not strictly inside the set");
  std::optional<Rat> best;
  for (const auto& m : sys.modes) {
    auto tau = ray_exit_time(S, x, m.rate);
    if (tau && (!best || *tau < *best)) best = tau;
  }
  return best;
}

namespace detail {

// One round-robin round: every positive dwell time, scaled by 1/l, in mode
// order.  Repeated l times this realises the full cone times while the state
// returns to the p-q segment at every round boundary.
inline Schedule round_robin(const Mms& sys, const Vec& times, const Int& l) {
  Schedule out;
  for (Int r = 0; r < l; ++r) {
    for (size_t m = 0; m < sys.modes.size(); ++m) {
      if (times[m] == 0) continue;
      out.push_back({sys.modes[m].name, Rat(times[m] / Rat(l))});
    }
  }
  return out;
}

}  // namespace detail

// Schedule from p to q that stays inside the open convex set S throughout.
// Both endpoints must be strictly inside S and q must be in the reachable
// cone of p.  The cone times are split into l equal round-robin rounds with
// round duration strictly below the dwell bound, which keeps every
// intermediate point inside S; this is verified exactly before returning.
inline Schedule reach_convex(const Mms& sys, const Polytope& S, const Vec& p, const Vec& q) {
  if (!contains(S, p, true) || !contains(S, q, true))
    throw std::invalid_argument("reach_convex endpoints must be strictly inside the set");
  auto times = reach_cone_times(sys, p, q);
  if (!times) throw std::invalid_argument("target point is outside the reachable cone");
  Rat total = 0;
  for (const auto& t : *times) total += t;
  if (total == 0) return {};
  auto tsp = t_safe(sys, S, p);
  auto tsq = t_safe(sys, S, q);
  std::optional<Rat> ts;
  if (tsp && (!ts || *tsp < *ts)) ts = tsp;
  if (tsq && (!ts || *tsq < *ts)) ts = tsq;
  Int l = ts ? Int(rat_floor(total / *ts) + 1) : Int(1);
  Schedule sched = detail::round_robin(sys, *times, l);
  Run run = simulate(sys, p, sched);
  if (run.states.back() != q) throw std::logic_error("round-robin endpoint drifted");
  for (const auto& s : run.states)
    if (!contains(S, s, true)) throw std::logic_error("round-robin left the convex set");
  return sched;
}

// Safety violations found in a run.  obstacle holds the index of the violated
// obstacle, or nullopt when the workspace was left.  lambda locates a contact
// on the segment from states[piece] to states[piece + 1], with the convention
// x(lambda) = lambda * states[piece] + (1 - lambda) * states[piece + 1].
struct Violation {
  size_t piece = 0;
  std::optional<size_t> obstacle;
  Rat lambda;
};

struct VerificationReport {
  bool ok = true;
  std::vector<Violation> violations;
};

// Exact check of a run against the instance: no piece may meet any closed
// obstacle (grazing counts as contact), and every breakpoint must lie in the
// closed workspace; convexity then covers the piece interiors.
inline VerificationReport verify_run(const Instance& inst, const Run& run) {
  VerificationReport rep;
  for (size_t i = 0; i + 1 < run.states.size(); ++i) {
    const Vec& a = run.states[i];
    const Vec& b = run.states[i + 1];
    for (size_t o = 0; o < inst.obstacles.size(); ++o) {
      auto w = segment_intersection_witness(inst.obstacles[o], a, b);
      if (w) {
        rep.ok = false;
        rep.violations.push_back({i, o, *w});
      }
    }
  }
  if (inst.workspace) {
    for (size_t i = 0; i < run.states.size(); ++i) {
      if (!contains(*inst.workspace, run.states[i])) {
        rep.ok = false;
        size_t piece = i == 0 ? 0 : i - 1;
        rep.violations.push_back({piece, std::nullopt, Rat(i == 0 ? 1 : 0)});
      }
    }
  }
  return rep;
}

// Schedule realising the straight hop p -> q with bounded deviation: the
// round count l is chosen so that the round-robin excursion stays strictly
// below the segment clearance, then the result is verified exactly and l is
// doubled on any failure.
inline Schedule hop_schedule(const Instance& inst, const Vec& p, const Vec& q) {
  auto times = reach_cone_times(inst.sys, p, q);
  if (!times) throw std::invalid_argument("hop target is outside the reachable cone");
  Rat total = 0;
  for (const auto& t : *times) total += t;
  if (total == 0) return {};
  Rat max_rate = 0;
  for (size_t m = 0; m < inst.sys.modes.size(); ++m) {
    if ((*times)[m] == 0) continue;
    for (const auto& c : inst.sys.modes[m].rate) {
      Rat a = rat_abs(c);
      if (a > max_rate) max_rate = a;
    }
  }
  auto eps = segment_clearance(inst.obstacles, inst.workspace ? &*inst.workspace : nullptr, p, q);
  Int l = 1;
  if (eps && max_rate > 0) {
    if (*eps <= 0) throw std::invalid_argument("hop segment has no clearance");
    l = rat_ceil(total * max_rate / *eps) + 1;
  }
  for (int attempt = 0; attempt < 40; ++attempt) {
    Schedule sched = detail::round_robin(inst.sys, *times, l);
    Run run = simulate(inst.sys, p, sched);
    if (run.states.back() == q && verify_run(inst, run).ok) return sched;
    l *= 2;
  }
  throw std::logic_error("round splitting failed to clear the hop");
}

// Greedy shortcutting: repeatedly jumps to the farthest later waypoint whose
// direct hop is cone-feasible and avoids every obstacle.  Keeps endpoints.
inline std::vector<Vec> simplify_waypoints(const Instance& inst, const std::vector<Vec>& pts) {
  if (pts.size() <= 2) return pts;
  std::vector<Vec> out;
  size_t i = 0;
  out.push_back(pts[0]);
  while (i + 1 < pts.size()) {
    size_t best = i + 1;
    for (size_t j = pts.size() - 1; j > i; --j) {
      bool free = true;
      for (const auto& ob : inst.obstacles)
        if (segment_intersects(ob, pts[i], pts[j])) { free = false; break; }
      if (free && reach_cone_times(inst.sys, pts[i], pts[j])) {
        best = j;
        break;
      }
    }
    out.push_back(pts[best]);
    i = best;
  }
  return out;
}

}  // namespace mms
