#pragma once

#include <boost/multiprecision/gmp.hpp>

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace mms {

// All planner arithmetic is exact.  Rat is a GMP-backed rational, always kept
// in lowest terms with positive denominator.
using Int = boost::multiprecision::mpz_int;
using Rat = boost::multiprecision::mpq_rational;
using Vec = std::vector<Rat>;

inline Int rat_num(const Rat& r) { return boost::multiprecision::numerator(r); }
inline Int rat_den(const Rat& r) { return boost::multiprecision::denominator(r); }

// Largest integer <= r.
inline Int rat_floor(const Rat& r) {
  Int q = rat_num(r) / rat_den(r);
  if (rat_num(r) < 0 && q * rat_den(r) != rat_num(r)) --q;
  return q;
}

inline Int rat_ceil(const Rat& r) { return -rat_floor(-r); }

inline Rat rat_abs(const Rat& r) { return r < 0 ? Rat(-r) : r; }

inline double rat_to_double(const Rat& r) { return r.convert_to<double>(); }

// Canonical text form: "p" for integers, otherwise "p/q" with q > 0.
inline std::string rat_to_string(const Rat& r) { return r.str(); }

namespace detail {

inline bool all_digits(const std::string& s) {
  if (s.empty()) return false;
  for (char c : s)
    if (c < '0' || c > '9') return false;
  return true;
}

// Parses an optionally signed integer literal into an Int.
inline Int parse_int_literal(std::string s, const std::string& whole) {
  bool neg = false;
  if (!s.empty() && (s[0] == '+' || s[0] == '-')) {
    neg = s[0] == '-';
    s.erase(0, 1);
  }
  if (!all_digits(s)) throw std::invalid_argument("malformed rational: '" + whole + "'");
  Int v(s);
  return neg ? Int(-v) : v;
}

}  // namespace detail

// Accepts "3", "-7/2", "0.25", with optional surrounding whitespace.  The
// two-integer constructor is used deliberately: unlike the mpq string
// constructor it reduces to lowest terms and normalises the sign.
inline Rat parse_rat(const std::string& text) {
  std::string s = text;
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.erase(0, 1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t')) s.pop_back();
  if (s.empty()) throw std::invalid_argument("malformed rational: empty string");

  auto slash = s.find('/');
  if (slash != std::string::npos) {
    if (s.find('/', slash + 1) != std::string::npos || s.find('.') != std::string::npos)
      throw std::invalid_argument("malformed rational: '" + text + "'");
    Int num = detail::parse_int_literal(s.substr(0, slash), text);
    Int den = detail::parse_int_literal(s.substr(slash + 1), text);
    if (den == 0) throw std::invalid_argument("malformed rational: zero denominator in '" + text + "'");
    return Rat(num, den);
  }

  auto dot = s.find('.');
  if (dot != std::string::npos) {
    if (s.find('.', dot + 1) != std::string::npos)
      throw std::invalid_argument("malformed rational: '" + text + "'");
    std::string head = s.substr(0, dot);
    std::string frac = s.substr(dot + 1);
    if (!detail::all_digits(frac))
      throw std::invalid_argument("malformed rational: '" + text + "'");
    bool neg = false;
    if (!head.empty() && (head[0] == '+' || head[0] == '-')) {
      neg = head[0] == '-';
      head.erase(0, 1);
    }
    if (head.empty()) head = "0";
    if (!detail::all_digits(head))
      throw std::invalid_argument("malformed rational: '" + text + "'");
    Int scale = 1;
    for (size_t i = 0; i < frac.size(); ++i) scale *= 10;
    Int num = Int(head) * scale + Int(frac);
    Rat r(num, scale);
    return neg ? Rat(-r) : r;
  }

  return Rat(detail::parse_int_literal(s, text), Int(1));
}

// Best rational approximation to x with denominator <= max_den, via continued
// fraction convergents (the classic Stern-Brocot / mediant bound argument).
inline Rat rat_limit_denominator(const Rat& x, const Int& max_den) {
  if (max_den < 1) throw std::invalid_argument("max_den must be positive");
  if (rat_den(x) <= max_den) return x;
  Int p0 = 0, q0 = 1, p1 = 1, q1 = 0;
  Int n = rat_num(x), d = rat_den(x);
  while (true) {
    Int a = n / d;
    if (n < 0 && a * d != n) --a;  // floor division
    Int q2 = q0 + a * q1;
    if (q2 > max_den) break;
    Int p2 = p0 + a * p1;
    p0 = p1; q0 = q1; p1 = p2; q1 = q2;
    Int r = n - a * d;
    if (r == 0) break;
    n = d;
    d = r;
  }
  Int k = (max_den - q0) / q1;
  Rat bound1(p0 + k * p1, q0 + k * q1);
  Rat bound2(p1, q1);
  return rat_abs(bound1 - x) <= rat_abs(bound2 - x) ? bound1 : bound2;
}

// Exact conversion from double (doubles are dyadic rationals).
inline Rat rat_from_double(double v) { return Rat(v); }

inline std::string vec_to_string(const Vec& v) {
  std::string out = "(";
  for (size_t i = 0; i < v.size(); ++i) {
    if (i) out += ", ";
    out += rat_to_string(v[i]);
  }
  out += ")";
  return out;
}

}  // namespace mms
