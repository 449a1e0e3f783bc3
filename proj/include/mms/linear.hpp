#pragma once

#include "mms/rational.hpp"

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <vector>

namespace mms {

enum class Rel { Le, Lt, Eq };

// One row: coeffs . x  rel  bound, over free (sign-unrestricted) variables.
struct LinearConstraint {
  Vec coeffs;
  Rat bound;
  Rel rel = Rel::Le;
};

struct LpResult {
  enum class Kind { Feasible, Infeasible, Bounded, Unbounded };
  Kind kind = Kind::Infeasible;
  Vec witness;             // Feasible and Bounded
  Rat value;               // Bounded only
  std::uint64_t pivots = 0;
};

enum class Sense { Max, Min };

namespace detail {

// Dense full-tableau simplex over exact rationals.  Entering and leaving
// variables both follow Bland's smallest-index rule, which rules out cycling,
// so every call terminates; `pivots` exposes the iteration count.
struct SimplexTab {
  size_t m = 0, n = 0;
  std::vector<Vec> A;        // m x n, current tableau B^{-1} A
  Vec b;                     // m, current basic values
  Vec z;                     // n, reduced costs for a maximisation
  Rat z0;                    // objective value at the current basis
  std::vector<size_t> basis; // basic variable of each row
  std::uint64_t pivots = 0;

  void pivot(size_t r, size_t col) {
    Rat piv = A[r][col];
    for (size_t j = 0; j < n; ++j) A[r][j] /= piv;
    b[r] /= piv;
    for (size_t i = 0; i < m; ++i) {
      if (i == r || A[i][col] == 0) continue;
      Rat f = A[i][col];
      for (size_t j = 0; j < n; ++j) A[i][j] -= f * A[r][j];
      b[i] -= f * b[r];
    }
    if (z[col] != 0) {
      Rat f = z[col];
      for (size_t j = 0; j < n; ++j) z[j] -= f * A[r][j];
      z0 += f * b[r];
    }
    basis[r] = col;
    ++pivots;
  }

  // Recomputes the reduced-cost row for objective c under the current basis.
  void set_objective(const Vec& c) {
    z = c;
    z0 = 0;
    for (size_t r = 0; r < m; ++r) {
      if (c[basis[r]] == 0) continue;
      Rat f = c[basis[r]];
      for (size_t j = 0; j < n; ++j) z[j] -= f * A[r][j];
      z0 += f * b[r];
    }
  }

  // Maximises over columns < ncols_allowed.  Returns false on unboundedness.
  bool run(size_t ncols_allowed) {
    const std::uint64_t cap = 2'000'000;
    while (true) {
      size_t enter = n;
      for (size_t j = 0; j < ncols_allowed; ++j)
        if (z[j] > 0) { enter = j; break; }
      if (enter == n) return true;
      size_t leave = m;
      for (size_t i = 0; i < m; ++i) {
        if (A[i][enter] <= 0) continue;
        if (leave == m) { leave = i; continue; }
        Rat cur = b[leave] / A[leave][enter];
        Rat cand = b[i] / A[i][enter];
        if (cand < cur || (cand == cur && basis[i] < basis[leave])) leave = i;
      }
      if (leave == m) return false;
      pivot(leave, enter);
      if (pivots > cap) throw std::logic_error("simplex iteration cap exceeded");
    }
  }
};

struct StandardLp {
  SimplexTab tab;
  size_t nvars = 0;        // original free variables
  size_t n_struct = 0;     // columns before artificials
  size_t strict_col = 0;   // column of the shared strict slack, if present
  bool has_strict = false;

  // Phase 1: append one artificial per row and drive their sum to zero.
  // Returns false if the system is infeasible.
  bool phase1() {
    size_t art0 = tab.n;
    tab.n += tab.m;
    for (size_t i = 0; i < tab.m; ++i) {
      if (tab.b[i] < 0) {
        for (auto& a : tab.A[i]) a = -a;
        tab.b[i] = -tab.b[i];
      }
    }
    for (size_t i = 0; i < tab.m; ++i) {
      tab.A[i].resize(tab.n, Rat(0));
      tab.A[i][art0 + i] = 1;
      tab.basis.push_back(art0 + i);
    }
    Vec c1(tab.n, Rat(0));
    for (size_t j = art0; j < tab.n; ++j) c1[j] = -1;
    tab.set_objective(c1);
    tab.run(tab.n);
    if (tab.z0 != 0) return false;
    // Pivot leftover artificials out; an all-zero row is redundant and dropped.
    for (size_t r = 0; r < tab.m;) {
      if (tab.basis[r] < art0) { ++r; continue; }
      size_t col = n_struct;
      for (size_t j = 0; j < n_struct; ++j)
        if (tab.A[r][j] != 0) { col = j; break; }
      if (col < n_struct) {
        tab.pivot(r, col);
        ++r;
      } else {
        tab.A.erase(tab.A.begin() + r);
        tab.b.erase(tab.b.begin() + r);
        tab.basis.erase(tab.basis.begin() + r);
        --tab.m;
      }
    }
    return true;
  }

  Vec extract_point() const {
    Vec full(n_struct, Rat(0));
    for (size_t r = 0; r < tab.m; ++r)
      if (tab.basis[r] < n_struct) full[tab.basis[r]] = tab.b[r];
    Vec x(nvars);
    for (size_t j = 0; j < nvars; ++j) x[j] = full[2 * j] - full[2 * j + 1];
    return x;
  }
};

// Builds the nonnegative standard form: x = u - v, slack per Le/Lt row, and
// for strict systems one shared slack s with a . x + s <= b and s <= 1, so
// that the strict rows hold strictly exactly when s can be made positive.
inline StandardLp build_standard(size_t nvars, const std::vector<LinearConstraint>& cons,
                                 bool allow_strict) {
  StandardLp lp;
  lp.nvars = nvars;
  bool any_strict = false;
  size_t n_ineq = 0;
  for (const auto& c : cons) {
    if (c.coeffs.size() != nvars)
      throw std::invalid_argument("constraint arity mismatch");
    if (c.rel == Rel::Lt) {
      if (!allow_strict) throw std::invalid_argument("strict row not allowed here");
      any_strict = true;
    }
    if (c.rel != Rel::Eq) ++n_ineq;
  }
  lp.has_strict = any_strict;
  size_t ncols = 2 * nvars + (any_strict ? 1 : 0) + n_ineq + (any_strict ? 1 : 0);
  lp.strict_col = 2 * nvars;
  lp.n_struct = ncols;
  lp.tab.n = ncols;
  size_t slack = 2 * nvars + (any_strict ? 1 : 0);
  for (const auto& c : cons) {
    Vec row(ncols, Rat(0));
    for (size_t j = 0; j < nvars; ++j) {
      row[2 * j] = c.coeffs[j];
      row[2 * j + 1] = -c.coeffs[j];
    }
    if (c.rel == Rel::Lt) row[lp.strict_col] = 1;
    if (c.rel != Rel::Eq) row[slack++] = 1;
    lp.tab.A.push_back(std::move(row));
    lp.tab.b.push_back(c.bound);
  }
  if (any_strict) {
    Vec row(ncols, Rat(0));
    row[lp.strict_col] = 1;
    row[slack++] = 1;
    lp.tab.A.push_back(std::move(row));
    lp.tab.b.push_back(Rat(1));
  }
  lp.tab.m = lp.tab.A.size();
  return lp;
}

}  // namespace detail

// Decides feasibility over free variables.  Rel::Lt rows must hold strictly;
// the returned witness then satisfies them strictly.
inline LpResult lp_feasible(size_t nvars, const std::vector<LinearConstraint>& cons) {
  detail::StandardLp lp = detail::build_standard(nvars, cons, true);
  LpResult res;
  if (!lp.phase1()) {
    res.kind = LpResult::Kind::Infeasible;
    res.pivots = lp.tab.pivots;
    return res;
  }
  if (lp.has_strict) {
    Vec c(lp.tab.n, Rat(0));
    c[lp.strict_col] = 1;
    lp.tab.set_objective(c);
    lp.tab.run(lp.n_struct);  // bounded: s <= 1 is part of the system
    if (lp.tab.z0 <= 0) {
      res.kind = LpResult::Kind::Infeasible;
      res.pivots = lp.tab.pivots;
      return res;
    }
  }
  res.kind = LpResult::Kind::Feasible;
  res.witness = lp.extract_point();
  res.pivots = lp.tab.pivots;
  return res;
}

// Optimises objective . x subject to Le/Eq rows (no strict rows here).
inline LpResult lp_optimize(size_t nvars, const Vec& objective, Sense sense,
                            const std::vector<LinearConstraint>& cons) {
  if (objective.size() != nvars) throw std::invalid_argument("objective arity mismatch");
  detail::StandardLp lp = detail::build_standard(nvars, cons, false);
  LpResult res;
  if (!lp.phase1()) {
    res.kind = LpResult::Kind::Infeasible;
    res.pivots = lp.tab.pivots;
    return res;
  }
  Vec c(lp.tab.n, Rat(0));
  for (size_t j = 0; j < nvars; ++j) {
    Rat cj = sense == Sense::Max ? objective[j] : Rat(-objective[j]);
    c[2 * j] = cj;
    c[2 * j + 1] = -cj;
  }
  lp.tab.set_objective(c);
  if (!lp.tab.run(lp.n_struct)) {
    res.kind = LpResult::Kind::Unbounded;
    res.pivots = lp.tab.pivots;
    return res;
  }
  res.kind = LpResult::Kind::Bounded;
  res.witness = lp.extract_point();
  res.value = sense == Sense::Max ? lp.tab.z0 : Rat(-lp.tab.z0);
  res.pivots = lp.tab.pivots;
  return res;
}

// One-variable atom: slope * t  rel  bound.
struct IntervalAtom {
  Rat slope;
  Rat bound;
  Rel rel = Rel::Le;
};

struct IntervalResult {
  bool empty = true;
  std::optional<Rat> witness;
};

// Decides emptiness of { t in [lo, hi] : all atoms hold } exactly, and
// returns an interior-as-possible witness when non-empty.
inline IntervalResult interval_emptiness_1d(const std::vector<IntervalAtom>& atoms,
                                            const Rat& lo, const Rat& hi) {
  if (lo > hi) throw std::invalid_argument("empty domain interval");
  Rat L = lo, H = hi;
  bool strict_l = false, strict_h = false;
  std::optional<Rat> pin;
  auto tighten_upper = [&](const Rat& v, bool strict) {
    if (v < H || (v == H && strict && !strict_h)) { H = v; strict_h = strict; }
  };
  auto tighten_lower = [&](const Rat& v, bool strict) {
    if (v > L || (v == L && strict && !strict_l)) { L = v; strict_l = strict; }
  };
  for (const auto& a : atoms) {
    if (a.slope == 0) {
      bool ok = a.rel == Rel::Le ? Rat(0) <= a.bound
              : a.rel == Rel::Lt ? Rat(0) < a.bound
                                 : Rat(0) == a.bound;
      if (!ok) return {true, std::nullopt};
      continue;
    }
    Rat v = a.bound / a.slope;
    if (a.rel == Rel::Eq) {
      if (pin && *pin != v) return {true, std::nullopt};
      pin = v;
    } else if (a.slope > 0) {
      tighten_upper(v, a.rel == Rel::Lt);
    } else {
      tighten_lower(v, a.rel == Rel::Lt);
    }
  }
  if (pin) {
    bool above = *pin > L || (*pin == L && !strict_l);
    bool below = *pin < H || (*pin == H && !strict_h);
    if (above && below) return {false, pin};
    return {true, std::nullopt};
  }
  if (L > H) return {true, std::nullopt};
  if (L == H) {
    if (strict_l || strict_h) return {true, std::nullopt};
    return {false, L};
  }
  return {false, Rat((L + H) / 2)};
}

}  // namespace mms
