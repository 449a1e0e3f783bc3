#pragma once

#include "mms/rational.hpp"

#include <optional>
#include <string>
#include <vector>

namespace mms {

// Exact SMT-LIB2 numeral: nonnegative integers plain, negatives wrapped in
// (- ...), fractions as (/ p q).
inline std::string smt2_numeral(const Rat& r) {
  Int num = rat_num(r), den = rat_den(r);
  bool neg = num < 0;
  if (neg) num = -num;
  std::string core = den == 1 ? num.str() : "(/ " + num.str() + " " + den.str() + ")";
  return neg ? "(- " + core + ")" : core;
}

// Minimal s-expression tree.
struct Sexpr {
  std::string atom;          // non-empty iff leaf
  std::vector<Sexpr> kids;

  bool is_atom() const { return kids.empty() && !atom.empty(); }
};

namespace detail {

inline void skip_ws(const std::string& s, size_t& i) {
  while (i < s.size()) {
    if (s[i] == ';') {  // comment to end of line
      while (i < s.size() && s[i] != '\n') ++i;
    } else if (s[i] == ' ' || s[i] == '\t' || s[i] == '\n' || s[i] == '\r') {
      ++i;
    } else {
      break;
    }
  }
}

inline std::optional<Sexpr> parse_one(const std::string& s, size_t& i) {
  skip_ws(s, i);
  if (i >= s.size()) return std::nullopt;
  if (s[i] == '(') {
    ++i;
    Sexpr node;
    while (true) {
      skip_ws(s, i);
      if (i >= s.size()) return std::nullopt;  // unbalanced
      if (s[i] == ')') {
        ++i;
        return node;
      }
      auto kid = parse_one(s, i);
      if (!kid) return std::nullopt;
      node.kids.push_back(std::move(*kid));
    }
  }
  if (s[i] == ')') return std::nullopt;
  if (s[i] == '"') {  // string literal, kept verbatim without the quotes
    size_t j = i + 1;
    std::string val;
    while (j < s.size() && s[j] != '"') val += s[j++];
    i = j < s.size() ? j + 1 : j;
    Sexpr leaf;
    leaf.atom = val.empty() ? "\"\"" : val;
    return leaf;
  }
  size_t j = i;
  while (j < s.size() && s[j] != '(' && s[j] != ')' && s[j] != ' ' && s[j] != '\t' &&
         s[j] != '\n' && s[j] != '\r')
    ++j;
  Sexpr leaf;
  leaf.atom = s.substr(i, j - i);
  i = j;
  return leaf;
}

}  // namespace detail

// Parses a whole solver transcript into a sequence of top-level expressions;
// bare atoms such as "sat" appear as leaves.
inline std::vector<Sexpr> parse_sexprs(const std::string& text) {
  std::vector<Sexpr> out;
  size_t i = 0;
  while (true) {
    detail::skip_ws(text, i);
    if (i >= text.size()) break;
    auto e = detail::parse_one(text, i);
    if (!e) break;  // tolerate trailing garbage
    out.push_back(std::move(*e));
  }
  return out;
}

struct ModelValue {
  Rat value;
  bool exact = true;  // false when the solver marked the numeral approximate
};

// Converts a model value expression to a rational.  Handles plain numerals,
// decimals ("3.9", "2025.0"), unary minus, division, and the trailing '?'
// some solvers attach to approximated decimals.  Anything else (e.g. an
// algebraic root-obj) yields nullopt.
inline std::optional<ModelValue> rat_from_model(const Sexpr& e) {
  if (e.is_atom()) {
    std::string a = e.atom;
    bool approx = false;
    if (!a.empty() && a.back() == '?') {
      approx = true;
      a.pop_back();
    }
    try {
      return ModelValue{parse_rat(a), !approx};
    } catch (const std::exception&) {
      return std::nullopt;
    }
  }
  if (e.kids.empty()) return std::nullopt;
  const Sexpr& head = e.kids[0];
  if (head.is_atom() && head.atom == "-" && e.kids.size() == 2) {
    auto v = rat_from_model(e.kids[1]);
    if (!v) return std::nullopt;
    return ModelValue{Rat(-v->value), v->exact};
  }
  if (head.is_atom() && head.atom == "/" && e.kids.size() == 3) {
    auto a = rat_from_model(e.kids[1]);
    auto b = rat_from_model(e.kids[2]);
    if (!a || !b || b->value == 0) return std::nullopt;
    return ModelValue{Rat(a->value / b->value), a->exact && b->exact};
  }
  return std::nullopt;
}

}  // namespace mms
