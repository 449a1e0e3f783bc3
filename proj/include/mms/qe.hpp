#pragma once

#include "mms/geometry.hpp"
#include "mms/rational.hpp"

#include <optional>
#include <vector>

namespace mms {

// Linear expression over the 2n segment-endpoint coordinates (p then q),
// plus a constant term.
struct LinExpr {
  Vec coeffs;
  Rat constant;

  Rat eval(const Vec& p, const Vec& q) const {
    const size_t n = p.size();
    Rat s = constant;
    for (size_t i = 0; i < n; ++i) s += coeffs[i] * p[i];
    for (size_t i = 0; i < n; ++i) s += coeffs[n + i] * q[i];
    return s;
  }
};

// A value that is either linear or a product of two linear expressions.
struct ProdTerm {
  LinExpr a;
  std::optional<LinExpr> b;

  Rat eval(const Vec& p, const Vec& q) const {
    Rat v = a.eval(p, q);
    if (b) v *= b->eval(p, q);
    return v;
  }
};

enum class Cmp { Lt, Gt };

struct QAtom {
  ProdTerm lhs;
  Cmp cmp = Cmp::Gt;
  ProdTerm rhs;

  bool eval(const Vec& p, const Vec& q) const {
    Rat l = lhs.eval(p, q), r = rhs.eval(p, q);
    return cmp == Cmp::Gt ? l > r : l < r;
  }
};

struct QFormula {
  enum class Op { Atom, And, Or };
  Op op = Op::Atom;
  std::vector<QFormula> kids;
  QAtom atom;  // valid when op == Atom

  bool eval(const Vec& p, const Vec& q) const {
    switch (op) {
      case Op::Atom:
        return atom.eval(p, q);
      case Op::And:
        for (const auto& k : kids)
          if (!k.eval(p, q)) return false;
        return true;
      case Op::Or:
        for (const auto& k : kids)
          if (k.eval(p, q)) return true;
        return false;
    }
    return false;
  }
};

namespace detail {

inline LinExpr zero_expr(size_t n) { return LinExpr{Vec(2 * n, Rat(0)), Rat(0)}; }

inline QFormula atom_node(QAtom a) {
  QFormula f;
  f.op = QFormula::Op::Atom;
  f.atom = std::move(a);
  return f;
}

}  // namespace detail

// Quantifier-free formula over segment endpoints (p, q) that holds exactly
// when the closed segment between them misses the closed obstacle.
//
// Derivation: the segment meets { x : A x <= b } iff some s in [0, 1]
// satisfies s * alpha_j <= beta_j for every row j, where
// alpha_j = a_j . (p - q) and beta_j = b_j - a_j . q.  Eliminating s
// (Fourier-Motzkin over one variable, domain [0, 1]) leaves two kinds of
// certificates of emptiness:
//   E_j : both endpoints lie strictly beyond facet j, or
//   X_jk: rows j (alpha_j > 0) and k (alpha_k < 0) give an upper bound on s
//         below its lower bound: beta_j * alpha_k > beta_k * alpha_j.
// Rows with alpha_j = 0 and beta_j < 0, and bound crossings with the domain
// ends, are subsumed by the E_j disjuncts.
inline QFormula obstacle_free_formula(const Polytope& obstacle, size_t n) {
  if (obstacle.dim != n) throw std::invalid_argument("obstacle arity mismatch");
  const size_t m = obstacle.rows();
  QFormula out;
  out.op = QFormula::Op::Or;

  auto alpha = [&](size_t j) {
    LinExpr e = detail::zero_expr(n);
    for (size_t i = 0; i < n; ++i) {
      e.coeffs[i] = obstacle.A[j][i];
      e.coeffs[n + i] = -obstacle.A[j][i];
    }
    return e;
  };
  auto beta = [&](size_t j) {
    LinExpr e = detail::zero_expr(n);
    for (size_t i = 0; i < n; ++i) e.coeffs[n + i] = -obstacle.A[j][i];
    e.constant = obstacle.b[j];
    return e;
  };
  auto beyond_at_p = [&](size_t j) {
    // a_j . p - b_j > 0
    LinExpr e = detail::zero_expr(n);
    for (size_t i = 0; i < n; ++i) e.coeffs[i] = obstacle.A[j][i];
    e.constant = -obstacle.b[j];
    return e;
  };
  auto beyond_at_q = [&](size_t j) {
    LinExpr e = detail::zero_expr(n);
    for (size_t i = 0; i < n; ++i) e.coeffs[n + i] = obstacle.A[j][i];
    e.constant = -obstacle.b[j];
    return e;
  };
  const LinExpr zero = detail::zero_expr(n);

  for (size_t j = 0; j < m; ++j) {
    QFormula both;
    both.op = QFormula::Op::And;
    both.kids.push_back(detail::atom_node({{beyond_at_p(j), std::nullopt}, Cmp::Gt, {zero, std::nullopt}}));
    both.kids.push_back(detail::atom_node({{beyond_at_q(j), std::nullopt}, Cmp::Gt, {zero, std::nullopt}}));
    out.kids.push_back(std::move(both));
  }
  for (size_t j = 0; j < m; ++j) {
    for (size_t k = 0; k < m; ++k) {
      if (j == k) continue;
      QFormula cross;
      cross.op = QFormula::Op::And;
      cross.kids.push_back(detail::atom_node({{alpha(j), std::nullopt}, Cmp::Gt, {zero, std::nullopt}}));
      cross.kids.push_back(detail::atom_node({{alpha(k), std::nullopt}, Cmp::Lt, {zero, std::nullopt}}));
      cross.kids.push_back(detail::atom_node({{beta(j), alpha(k)}, Cmp::Gt, {beta(k), alpha(j)}}));
      out.kids.push_back(std::move(cross));
    }
  }
  return out;
}

// Flattens an Or-of-And formula into its disjuncts, each a conjunction of
// atoms.  A bare atom or conjunction counts as a single disjunct.
inline std::vector<std::vector<QAtom>> emit_atoms(const QFormula& f) {
  std::vector<std::vector<QAtom>> out;
  auto flatten_and = [](const QFormula& g, std::vector<QAtom>& into, auto&& self) -> void {
    switch (g.op) {
      case QFormula::Op::Atom:
        into.push_back(g.atom);
        break;
      case QFormula::Op::And:
        for (const auto& k : g.kids) self(k, into, self);
        break;
      case QFormula::Op::Or:
        throw std::invalid_argument("formula is not in or-of-and shape");
    }
  };
  if (f.op == QFormula::Op::Or) {
    for (const auto& k : f.kids) {
      std::vector<QAtom> conj;
      flatten_and(k, conj, flatten_and);
      out.push_back(std::move(conj));
    }
  } else {
    std::vector<QAtom> conj;
    flatten_and(f, conj, flatten_and);
    out.push_back(std::move(conj));
  }
  return out;
}

}  // namespace mms
