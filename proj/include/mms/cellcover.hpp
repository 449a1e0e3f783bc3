#pragma once

#include "mms/geometry.hpp"
#include "mms/hop.hpp"
#include "mms/linear.hpp"
#include "mms/model.hpp"

#include <algorithm>
#include <optional>
#include <stdexcept>
#include <vector>

namespace mms {

// Closed trapezoid produced by the vertical decomposition: the slab [u, v]
// between the affine floor lo(x) = lo_c + lo_d x and ceiling hi(x).
struct TrapezoidCell {
  size_t slab = 0;
  Rat u, v;
  Rat lo_c, lo_d;
  Rat hi_c, hi_d;
  Polytope poly;

  Rat lo_at(const Rat& x) const { return lo_c + lo_d * x; }
  Rat hi_at(const Rat& x) const { return hi_c + hi_d * x; }
};

namespace detail {

struct AffineBand {
  // lo(x) = lo_c + lo_d x, hi(x) = hi_c + hi_d x
  Rat lo_c, lo_d, hi_c, hi_d;
  Rat lo_at(const Rat& x) const { return lo_c + lo_d * x; }
  Rat hi_at(const Rat& x) const { return hi_c + hi_d * x; }
};

// Vertical section of a convex region at abscissa x0, as the active affine
// floor/ceiling rows.  The caller guarantees no facet-line crossing in the
// surrounding slab, so the rows active at x0 are active on the whole slab.
inline std::optional<AffineBand> section_at(const Polytope& p, const Rat& x0) {
  std::optional<AffineBand> band;
  bool have_lo = false, have_hi = false;
  AffineBand out;
  for (size_t r = 0; r < p.rows(); ++r) {
    const Rat& ax = p.A[r][0];
    const Rat& ay = p.A[r][1];
    const Rat& b = p.b[r];
    if (ay == 0) {
      if (ax * x0 > b) return std::nullopt;  // outside the region's x-range
      continue;
    }
    // ax x + ay y <= b  <=>  y <= (b - ax x)/ay   (ay > 0, ceiling)
    //                        y >= (b - ax x)/ay   (ay < 0, floor)
    Rat c = b / ay, d = -ax / ay;
    Rat val = c + d * x0;
    if (ay > 0) {
      if (!have_hi || val < out.hi_c + out.hi_d * x0) {
        out.hi_c = c;
        out.hi_d = d;
        have_hi = true;
      }
    } else {
      if (!have_lo || val > out.lo_c + out.lo_d * x0) {
        out.lo_c = c;
        out.lo_d = d;
        have_lo = true;
      }
    }
  }
  if (!have_lo || !have_hi) return std::nullopt;  // vertically unbounded: not a band
  if (out.lo_at(x0) > out.hi_at(x0)) return std::nullopt;
  band = out;
  return band;
}

inline void add_unique(std::vector<Rat>& xs, const Rat& x) {
  for (const auto& e : xs)
    if (e == x) return;
  xs.push_back(x);
}

}  // namespace detail

// Classic 2-D trapezoidation of the free space: vertical event lines through
// every obstacle and workspace vertex, plus every point where two facet lines
// cross inside both regions (a superset of the vertex events that keeps each
// slab crossing-free even for overlapping obstacles).  Within a slab the free
// gaps between obstacle bands become closed trapezoids.
inline std::vector<TrapezoidCell> vertical_decomposition(const Instance& inst) {
  if (inst.sys.dim != 2)
    throw std::invalid_argument("vertical decomposition is 2-D only");
  if (!inst.workspace) throw std::invalid_argument("vertical decomposition needs a workspace");
  const Polytope& ws = *inst.workspace;

  // Bounded workspace check, and its x-extent.
  Vec obj = {Rat(1), Rat(0)};
  std::vector<LinearConstraint> wsrows;
  for (size_t r = 0; r < ws.rows(); ++r) wsrows.push_back({ws.A[r], ws.b[r], Rel::Le});
  auto mnx = lp_optimize(2, obj, Sense::Min, wsrows);
  auto mxx = lp_optimize(2, obj, Sense::Max, wsrows);
  Vec objy = {Rat(0), Rat(1)};
  auto mny = lp_optimize(2, objy, Sense::Min, wsrows);
  auto mxy = lp_optimize(2, objy, Sense::Max, wsrows);
  if (mnx.kind != LpResult::Kind::Bounded || mxx.kind != LpResult::Kind::Bounded ||
      mny.kind != LpResult::Kind::Bounded || mxy.kind != LpResult::Kind::Bounded)
    throw std::invalid_argument("vertical decomposition needs a bounded workspace");
  Rat wx0 = mnx.value, wx1 = mxx.value;

  std::vector<Rat> events;
  detail::add_unique(events, wx0);
  detail::add_unique(events, wx1);
  std::vector<const Polytope*> regions;
  regions.push_back(&ws);
  for (const auto& ob : inst.obstacles) regions.push_back(&ob);
  for (const auto* reg : regions)
    for (const auto& v : polytope_vertices_2d(*reg)) detail::add_unique(events, v[0]);
  for (size_t a = 0; a < regions.size(); ++a) {
    for (size_t b = a + 1; b < regions.size(); ++b) {
      for (size_t i = 0; i < regions[a]->rows(); ++i) {
        for (size_t j = 0; j < regions[b]->rows(); ++j) {
          Rat det = regions[a]->A[i][0] * regions[b]->A[j][1] -
                    regions[a]->A[i][1] * regions[b]->A[j][0];
          if (det == 0) continue;
          Rat x = (regions[a]->b[i] * regions[b]->A[j][1] -
                   regions[a]->A[i][1] * regions[b]->b[j]) / det;
          Rat y = (regions[a]->A[i][0] * regions[b]->b[j] -
                   regions[a]->b[i] * regions[b]->A[j][0]) / det;
          Vec pt = {x, y};
          if (contains(*regions[a], pt) && contains(*regions[b], pt))
            detail::add_unique(events, x);
        }
      }
    }
  }
  std::sort(events.begin(), events.end());
  events.erase(std::remove_if(events.begin(), events.end(),
                              [&](const Rat& x) { return x < wx0 || x > wx1; }),
               events.end());

  std::vector<TrapezoidCell> cells;
  for (size_t s = 0; s + 1 < events.size(); ++s) {
    const Rat& u = events[s];
    const Rat& v = events[s + 1];
    if (u == v) continue;
    Rat mid = (u + v) / 2;
    auto wsband = detail::section_at(ws, mid);
    if (!wsband) continue;

    std::vector<detail::AffineBand> bands;
    for (const auto& ob : inst.obstacles) {
      auto band = detail::section_at(ob, mid);
      if (band) bands.push_back(*band);
    }
    std::sort(bands.begin(), bands.end(), [&](const detail::AffineBand& a,
                                              const detail::AffineBand& b) {
      return a.lo_at(mid) < b.lo_at(mid);
    });
    std::vector<detail::AffineBand> merged;
    for (const auto& band : bands) {
      if (!merged.empty() && band.lo_at(mid) <= merged.back().hi_at(mid)) {
        if (band.hi_at(mid) > merged.back().hi_at(mid)) {
          merged.back().hi_c = band.hi_c;
          merged.back().hi_d = band.hi_d;
        }
      } else {
        merged.push_back(band);
      }
    }

    auto emit = [&](const Rat& lc, const Rat& ld, const Rat& hc, const Rat& hd) {
      TrapezoidCell cell;
      cell.slab = s;
      cell.u = u;
      cell.v = v;
      cell.lo_c = lc;
      cell.lo_d = ld;
      cell.hi_c = hc;
      cell.hi_d = hd;
      std::vector<Vec> a = {{Rat(1), Rat(0)}, {Rat(-1), Rat(0)}, {ld, Rat(-1)}, {Rat(-hd), Rat(1)}};
      Vec b = {v, Rat(-u), Rat(-lc), hc};
      cell.poly = make_polytope(2, std::move(a), std::move(b));
      cells.push_back(std::move(cell));
    };

    Rat cur_c = wsband->lo_c, cur_d = wsband->lo_d;
    for (const auto& band : merged) {
      if (band.lo_at(mid) >= wsband->hi_at(mid)) break;
      if (band.hi_at(mid) <= cur_c + cur_d * mid) continue;
      if (band.lo_at(mid) > cur_c + cur_d * mid)
        emit(cur_c, cur_d, band.lo_c, band.lo_d);
      cur_c = band.hi_c;
      cur_d = band.hi_d;
    }
    if (cur_c + cur_d * mid < wsband->hi_at(mid))
      emit(cur_c, cur_d, wsband->hi_c, wsband->hi_d);
  }
  return cells;
}

namespace detail {

// Convex hull of 2-D points as a halfspace polytope (monotone chain).
inline Polytope hull_polytope(std::vector<Vec> pts) {
  std::sort(pts.begin(), pts.end(), [](const Vec& a, const Vec& b) {
    return a[0] < b[0] || (a[0] == b[0] && a[1] < b[1]);
  });
  pts.erase(std::unique(pts.begin(), pts.end()), pts.end());
  if (pts.size() < 3) throw std::logic_error("degenerate hull");
  auto cross = [](const Vec& o, const Vec& a, const Vec& b) {
    return (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0]);
  };
  std::vector<Vec> hull;
  for (const auto& p : pts) {  // lower chain
    while (hull.size() >= 2 && cross(hull[hull.size() - 2], hull.back(), p) <= 0)
      hull.pop_back();
    hull.push_back(p);
  }
  size_t lower = hull.size() + 1;
  for (auto it = pts.rbegin(); it != pts.rend(); ++it) {  // upper chain
    while (hull.size() >= lower && cross(hull[hull.size() - 2], hull.back(), *it) <= 0)
      hull.pop_back();
    hull.push_back(*it);
  }
  hull.pop_back();
  if (hull.size() < 3) throw std::logic_error("degenerate hull");
  std::vector<Vec> a;
  Vec b;
  for (size_t i = 0; i < hull.size(); ++i) {
    const Vec& p1 = hull[i];
    const Vec& p2 = hull[(i + 1) % hull.size()];
    // CCW polygon: outward normal of edge p1 -> p2.
    Rat nx = p2[1] - p1[1];
    Rat ny = p1[0] - p2[0];
    a.push_back({nx, ny});
    b.push_back(nx * p1[0] + ny * p1[1]);
  }
  return make_polytope(2, std::move(a), std::move(b));
}

// Closed obstacle section [lo, hi] on the vertical line x = x0, if any.
inline std::optional<std::pair<Rat, Rat>> section_interval_at(const Polytope& p, const Rat& x0) {
  std::optional<Rat> lo, hi;
  for (size_t r = 0; r < p.rows(); ++r) {
    const Rat& ax = p.A[r][0];
    const Rat& ay = p.A[r][1];
    const Rat& b = p.b[r];
    if (ay == 0) {
      if (ax * x0 > b) return std::nullopt;
      continue;
    }
    Rat val = (b - ax * x0) / ay;
    if (ay > 0) {
      if (!hi || val < *hi) hi = val;
    } else {
      if (!lo || val > *lo) lo = val;
    }
  }
  if (!lo || !hi || *lo > *hi) return std::nullopt;
  return std::make_pair(*lo, *hi);
}

// Interior of the hull avoids the closed obstacle (strict hull rows vs
// closed obstacle rows must be jointly infeasible).
inline bool interior_avoids(const Polytope& hull, const Polytope& obstacle) {
  std::vector<LinearConstraint> rows;
  for (size_t r = 0; r < hull.rows(); ++r) rows.push_back({hull.A[r], hull.b[r], Rel::Lt});
  for (size_t r = 0; r < obstacle.rows(); ++r)
    rows.push_back({obstacle.A[r], obstacle.b[r], Rel::Le});
  return lp_feasible(2, rows).kind == LpResult::Kind::Infeasible;
}

inline bool inside_closed(const Polytope& outer, const Polytope& hull) {
  for (const auto& v : polytope_vertices_2d(hull))
    if (!contains(outer, v)) return false;
  return true;
}

}  // namespace detail

// Open convex cover of the safety set.  Cell polytopes are stored as closed
// row systems; membership and adjacency use them strictly, so each cell is
// the open interior.
struct Cover {
  std::vector<Polytope> cells;
  std::vector<std::vector<size_t>> adjacency;

  size_t bound() const { return cells.size(); }
};

// Builds the cover: open trapezoid interiors, plus one fattened cell per free
// stretch of each shared vertical slab edge — the hull of the stretch's
// endpoints and a box of radius delta around its midpoint, delta = half the
// exact clearance from the midpoint to obstacles and workspace boundary.
// Each fattened cell's interior is re-checked exactly against every obstacle
// and the workspace, halving delta if needed.
inline Cover build_cover(const Instance& inst) {
  auto traps = vertical_decomposition(inst);
  const Polytope& ws = *inst.workspace;
  Cover cover;
  for (const auto& t : traps) cover.cells.push_back(t.poly);

  std::vector<Rat> boundaries;
  for (const auto& t : traps) {
    detail::add_unique(boundaries, t.u);
    detail::add_unique(boundaries, t.v);
  }
  std::sort(boundaries.begin(), boundaries.end());

  for (const auto& w : boundaries) {
    for (const auto& left : traps) {
      if (left.v != w) continue;
      for (const auto& right : traps) {
        if (right.u != w) continue;
        Rat ilo = std::max(left.lo_at(w), right.lo_at(w));
        Rat ihi = std::min(left.hi_at(w), right.hi_at(w));
        if (ilo >= ihi) continue;
        // Subtract closed obstacle sections on the boundary line.
        std::vector<std::pair<Rat, Rat>> blocked;
        for (const auto& ob : inst.obstacles) {
          auto sec = detail::section_interval_at(ob, w);
          if (sec) blocked.push_back(*sec);
        }
        std::sort(blocked.begin(), blocked.end(),
                  [](const auto& a, const auto& b) { return a.first < b.first; });
        std::vector<std::pair<Rat, Rat>> gaps;
        Rat cur = ilo;
        for (const auto& bk : blocked) {
          if (bk.first >= ihi) break;
          if (bk.second <= cur) continue;
          if (bk.first > cur) gaps.push_back({cur, bk.first});
          if (bk.second > cur) cur = bk.second;
        }
        if (cur < ihi) gaps.push_back({cur, ihi});

        for (const auto& g : gaps) {
          const Rat& c = g.first;
          const Rat& d = g.second;
          Rat my = (c + d) / 2;
          Vec mu = {w, my};
          std::optional<Rat> clearance = facet_distance(ws, mu, mu);
          for (const auto& ob : inst.obstacles) {
            auto dist = polytope_distance(ob, mu, mu);
            if (dist && (!clearance || *dist < *clearance)) clearance = dist;
          }
          if (!clearance || *clearance <= 0)
            throw std::logic_error("edge midpoint is not strictly safe");
          Rat delta = *clearance / 2;
          bool built = false;
          for (int attempt = 0; attempt < 25 && !built; ++attempt) {
            std::vector<Vec> pts = {{w, c},
                                    {w, d},
                                    {w - delta, my - delta},
                                    {w - delta, my + delta},
                                    {w + delta, my - delta},
                                    {w + delta, my + delta}};
            Polytope hex = detail::hull_polytope(pts);
            bool ok = detail::inside_closed(ws, hex);
            for (const auto& ob : inst.obstacles)
              ok = ok && detail::interior_avoids(hex, ob);
            if (ok) {
              cover.cells.push_back(std::move(hex));
              built = true;
            } else {
              delta /= 2;
            }
          }
          if (!built) {
            // Fallback for sharply sloped contacts: shrink the stretch by a
            // quarter at both ends so the whole fattened cell keeps a
            // positive clearance.
            Rat c2 = c + (d - c) / 4, d2 = d - (d - c) / 4;
            Vec p = {w, c2}, q = {w, d2};
            std::optional<Rat> eps = facet_distance(ws, p, q);
            for (const auto& ob : inst.obstacles) {
              auto dist = polytope_distance(ob, p, q);
              if (dist && (!eps || *dist < *eps)) eps = dist;
            }
            if (!eps || *eps <= 0) throw std::logic_error("shrunk edge is not strictly safe");
            Rat dd = std::min(Rat(*eps / 2), Rat((d - c) / 4));
            std::vector<Vec> pts = {p, q, {w - dd, my - dd}, {w - dd, my + dd},
                                    {w + dd, my - dd}, {w + dd, my + dd}};
            cover.cells.push_back(detail::hull_polytope(pts));
          }
        }
      }
    }
  }

  cover.adjacency.assign(cover.cells.size(), {});
  for (size_t i = 0; i < cover.cells.size(); ++i) {
    for (size_t j = i + 1; j < cover.cells.size(); ++j) {
      std::vector<LinearConstraint> rows;
      for (size_t r = 0; r < cover.cells[i].rows(); ++r)
        rows.push_back({cover.cells[i].A[r], cover.cells[i].b[r], Rel::Lt});
      for (size_t r = 0; r < cover.cells[j].rows(); ++r)
        rows.push_back({cover.cells[j].A[r], cover.cells[j].b[r], Rel::Lt});
      if (lp_feasible(2, rows).kind == LpResult::Kind::Feasible) {
        cover.adjacency[i].push_back(j);
        cover.adjacency[j].push_back(i);
      }
    }
  }
  return cover;
}

struct ChannelResult {
  bool reachable = false;
  std::vector<size_t> channel;
  std::vector<Vec> waypoints;  // full chain including start and target
};

namespace detail {

struct ChannelLp {
  const Instance* inst;
  const Cover* cover;

  // Feasibility of the waypoint system for the channel prefix; when
  // close_with_target is set, the last hop must land exactly on the target.
  LpResult solve(const std::vector<size_t>& channel, bool close_with_target) const {
    const size_t n = 2;
    const size_t nm = inst->sys.modes.size();
    const size_t N = channel.size();
    const size_t nwp = N - 1;
    const size_t nhops = close_with_target ? N : N - 1;
    const size_t nvars = nwp * n + nhops * nm;
    auto wp_var = [&](size_t i, size_t j) { return (i - 1) * n + j; };  // waypoint i in 1..nwp
    auto t_var = [&](size_t h, size_t m) { return nwp * n + (h - 1) * nm + m; };
    std::vector<LinearConstraint> rows;

    auto member_rows = [&](size_t wp, const Polytope& cell) {
      for (size_t r = 0; r < cell.rows(); ++r) {
        LinearConstraint c;
        c.coeffs.assign(nvars, Rat(0));
        for (size_t j = 0; j < n; ++j) c.coeffs[wp_var(wp, j)] = cell.A[r][j];
        c.bound = cell.b[r];
        c.rel = Rel::Lt;
        rows.push_back(c);
      }
    };
    for (size_t i = 1; i <= nwp; ++i) {
      member_rows(i, cover->cells[channel[i - 1]]);
      member_rows(i, cover->cells[channel[i]]);
    }
    for (size_t h = 1; h <= nhops; ++h) {
      // Hop h goes from point P_{h-1} to P_h, where P_0 = start,
      // P_i = waypoint i, P_N = target.
      for (size_t j = 0; j < n; ++j) {
        LinearConstraint c;
        c.coeffs.assign(nvars, Rat(0));
        Rat bound = 0;
        if (h - 1 == 0)
          bound -= inst->start[j];
        else
          c.coeffs[wp_var(h - 1, j)] = -1;
        if (h == N)
          bound += inst->target[j];
        else
          c.coeffs[wp_var(h, j)] += 1;
        for (size_t m = 0; m < nm; ++m) c.coeffs[t_var(h, m)] = -inst->sys.modes[m].rate[j];
        c.bound = bound;
        c.rel = Rel::Eq;
        rows.push_back(c);
      }
      for (size_t m = 0; m < nm; ++m) {
        LinearConstraint c;
        c.coeffs.assign(nvars, Rat(0));
        c.coeffs[t_var(h, m)] = -1;
        c.bound = 0;
        rows.push_back(c);
      }
    }
    return lp_feasible(nvars, rows);
  }
};

}  // namespace detail

// Complete 2-D decision procedure: depth-first enumeration of repeat-free
// channels from a start cell to a target cell, pruning on prefix-LP
// infeasibility and on graph reachability, solving the exact waypoint system
// for every complete channel.  The optional one-repeat mode exists purely to
// cross-check that allowing a single repeated cell never changes verdicts.
inline ChannelResult channel_decide(const Instance& inst, const Cover& cover,
                                    bool allow_one_repeat = false) {
  if (inst.sys.dim != 2) throw std::invalid_argument("channel decision is 2-D only");
  std::vector<size_t> start_cells, target_cells;
  std::vector<char> is_target(cover.cells.size(), 0);
  for (size_t i = 0; i < cover.cells.size(); ++i) {
    if (contains(cover.cells[i], inst.start, /*strictly=*/true)) start_cells.push_back(i);
    if (contains(cover.cells[i], inst.target, /*strictly=*/true)) {
      target_cells.push_back(i);
      is_target[i] = 1;
    }
  }
  if (start_cells.empty())
    throw std::invalid_argument("start point lies outside every cover cell");
  if (target_cells.empty())
    throw std::invalid_argument("target point lies outside every cover cell");

  // Cells from which some target cell is reachable in the adjacency graph.
  std::vector<char> can_reach(cover.cells.size(), 0);
  std::vector<size_t> queue = target_cells;
  for (auto t : target_cells) can_reach[t] = 1;
  while (!queue.empty()) {
    size_t c = queue.back();
    queue.pop_back();
    for (size_t nb : cover.adjacency[c])
      if (!can_reach[nb]) {
        can_reach[nb] = 1;
        queue.push_back(nb);
      }
  }

  detail::ChannelLp lp{&inst, &cover};
  std::vector<size_t> path;
  std::vector<char> on_path(cover.cells.size(), 0);
  ChannelResult result;

  auto dfs = [&](auto&& self, size_t cell, bool repeat_used) -> bool {
    path.push_back(cell);
    bool was_on_path = on_path[cell] != 0;
    on_path[cell] = 1;
    auto prefix = lp.solve(path, false);
    if (prefix.kind != LpResult::Kind::Feasible) {
      path.pop_back();
      if (!was_on_path) on_path[cell] = 0;
      return false;
    }
    if (is_target[cell]) {
      auto full = lp.solve(path, true);
      if (full.kind == LpResult::Kind::Feasible) {
        result.reachable = true;
        result.channel = path;
        result.waypoints.push_back(inst.start);
        for (size_t i = 1; i < path.size(); ++i)
          result.waypoints.push_back({full.witness[(i - 1) * 2], full.witness[(i - 1) * 2 + 1]});
        result.waypoints.push_back(inst.target);
        path.pop_back();
        if (!was_on_path) on_path[cell] = 0;
        return true;
      }
    }
    for (size_t nb : cover.adjacency[cell]) {
      if (!can_reach[nb]) continue;
      if (!on_path[nb]) {
        if (self(self, nb, repeat_used)) {
          path.pop_back();
          if (!was_on_path) on_path[cell] = 0;
          return true;
        }
      } else if (allow_one_repeat && !repeat_used) {
        if (self(self, nb, true)) {
          path.pop_back();
          if (!was_on_path) on_path[cell] = 0;
          return true;
        }
      }
    }
    path.pop_back();
    if (!was_on_path) on_path[cell] = 0;
    return false;
  };

  for (size_t sc : start_cells) {
    if (!can_reach[sc]) continue;
    if (dfs(dfs, sc, false)) return result;
  }
  return result;  // reachable == false
}

}  // namespace mms
