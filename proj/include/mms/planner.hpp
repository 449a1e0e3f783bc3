#pragma once

#include "mms/geometry.hpp"
#include "mms/hop.hpp"
#include "mms/model.hpp"
#include "mms/qe.hpp"
#include "mms/smtlib.hpp"
#include "mms/subprocess.hpp"

#include <functional>
#include <map>
#include <optional>
#include <random>
#include <string>
#include <vector>

namespace mms {

enum class Verdict { Sat, Unsat, Unknown };

struct BackendResult {
  Verdict verdict = Verdict::Unknown;
  std::vector<Vec> waypoints;  // the k intermediate waypoints on Sat
  std::string info;
};

// A backend decides: does a safe plan with exactly k intermediate waypoints
// exist?  Sat must come with waypoints that pass exact re-verification; Unsat
// must be a proof of non-existence at this k.
using Backend = std::function<BackendResult(const Instance&, size_t)>;

// Exact validity of a waypoint chain (first entry start, last entry target):
// every consecutive pair must be cone-connected and its segment must avoid
// all closed obstacles; interior waypoints must lie strictly inside the
// workspace.  Segment interiors stay inside by convexity.
inline bool verify_waypoint_chain(const Instance& inst, const std::vector<Vec>& chain,
                                  std::string* why = nullptr) {
  auto fail = [&](const std::string& msg) {
    if (why) *why = msg;
    return false;
  };
  if (chain.size() < 2) return fail("chain needs at least start and target");
  for (size_t i = 1; i + 1 < chain.size(); ++i) {
    if (inst.workspace && !contains(*inst.workspace, chain[i], /*strictly=*/true))
      return fail("waypoint " + std::to_string(i) + " is not strictly inside the workspace");
  }
  for (size_t i = 0; i + 1 < chain.size(); ++i) {
    if (!reach_cone_times(inst.sys, chain[i], chain[i + 1]))
      return fail("hop " + std::to_string(i) + " is outside the reachable cone");
    for (size_t o = 0; o < inst.obstacles.size(); ++o)
      if (segment_intersects(inst.obstacles[o], chain[i], chain[i + 1]))
        return fail("hop " + std::to_string(i) + " meets obstacle " + std::to_string(o));
  }
  return true;
}

struct BmcScript {
  std::string script;
  std::vector<std::string> value_vars;  // waypoint variables, in declaration order
  size_t k = 0;
};

namespace detail {

struct CoordTerm {
  bool is_const = false;
  Rat value;
  std::string sym;
};

inline std::string emit_linexpr(const LinExpr& e, const std::vector<CoordTerm>& pq) {
  Rat cst = e.constant;
  std::vector<std::string> parts;
  for (size_t i = 0; i < pq.size(); ++i) {
    const Rat& c = e.coeffs[i];
    if (c == 0) continue;
    if (pq[i].is_const) {
      cst += c * pq[i].value;
    } else if (c == 1) {
      parts.push_back(pq[i].sym);
    } else {
      parts.push_back("(* " + smt2_numeral(c) + " " + pq[i].sym + ")");
    }
  }
  if (parts.empty()) return smt2_numeral(cst);
  if (cst != 0) parts.push_back(smt2_numeral(cst));
  if (parts.size() == 1) return parts[0];
  std::string out = "(+";
  for (const auto& p : parts) out += " " + p;
  return out + ")";
}

inline std::string emit_prodterm(const ProdTerm& t, const std::vector<CoordTerm>& pq) {
  std::string a = emit_linexpr(t.a, pq);
  if (!t.b) return a;
  return "(* " + a + " " + emit_linexpr(*t.b, pq) + ")";
}

inline std::string emit_qatom(const QAtom& at, const std::vector<CoordTerm>& pq) {
  std::string op = at.cmp == Cmp::Gt ? ">" : "<";
  return "(" + op + " " + emit_prodterm(at.lhs, pq) + " " + emit_prodterm(at.rhs, pq) + ")";
}

inline std::string emit_disjunction(const std::vector<std::vector<QAtom>>& dnf,
                                    const std::vector<CoordTerm>& pq) {
  std::vector<std::string> ds;
  for (const auto& conj : dnf) {
    if (conj.size() == 1) {
      ds.push_back(emit_qatom(conj[0], pq));
    } else {
      std::string s = "(and";
      for (const auto& at : conj) s += " " + emit_qatom(at, pq);
      ds.push_back(s + ")");
    }
  }
  if (ds.size() == 1) return ds[0];
  std::string out = "(or";
  for (const auto& d : ds) out += " " + d;
  return out + ")";
}

}  // namespace detail

// SMT-LIB2 script asking for a safe plan with exactly k intermediate
// waypoints: nonnegative dwell times realise each hop (so hops are
// cone-connected), each hop segment satisfies every obstacle's
// quantifier-eliminated avoidance formula, and intermediate waypoints lie
// strictly inside the workspace.
inline BmcScript encode_bmc(const Instance& inst, size_t k) {
  const size_t n = inst.sys.dim;
  const size_t nm = inst.sys.modes.size();
  BmcScript enc;
  enc.k = k;
  std::string& s = enc.script;
  s += "(set-logic QF_NRA)\n";

  auto xvar = [&](size_t i, size_t j) {
    return "x_" + std::to_string(i) + "_" + std::to_string(j);
  };
  auto tvar = [&](size_t h, size_t m) {
    return "t_" + std::to_string(h) + "_" + std::to_string(m);
  };
  for (size_t i = 1; i <= k; ++i)
    for (size_t j = 0; j < n; ++j) {
      s += "(declare-const " + xvar(i, j) + " Real)\n";
      enc.value_vars.push_back(xvar(i, j));
    }
  for (size_t h = 1; h <= k + 1; ++h)
    for (size_t m = 0; m < nm; ++m) s += "(declare-const " + tvar(h, m) + " Real)\n";
  for (size_t h = 1; h <= k + 1; ++h)
    for (size_t m = 0; m < nm; ++m) s += "(assert (>= " + tvar(h, m) + " 0))\n";

  // Coordinate terms of waypoint i, with 0 = start and k + 1 = target.
  auto coords = [&](size_t i) {
    std::vector<detail::CoordTerm> c(n);
    for (size_t j = 0; j < n; ++j) {
      if (i == 0) {
        c[j] = {true, inst.start[j], ""};
      } else if (i == k + 1) {
        c[j] = {true, inst.target[j], ""};
      } else {
        c[j] = {false, Rat(0), xvar(i, j)};
      }
    }
    return c;
  };

  for (size_t h = 1; h <= k + 1; ++h) {
    auto src = coords(h - 1);
    auto dst = coords(h);
    for (size_t j = 0; j < n; ++j) {
      std::vector<std::string> parts;
      if (src[j].is_const) {
        if (src[j].value != 0) parts.push_back(smt2_numeral(src[j].value));
      } else {
        parts.push_back(src[j].sym);
      }
      for (size_t m = 0; m < nm; ++m) {
        const Rat& r = inst.sys.modes[m].rate[j];
        if (r == 0) continue;
        if (r == 1)
          parts.push_back(tvar(h, m));
        else
          parts.push_back("(* " + smt2_numeral(r) + " " + tvar(h, m) + ")");
      }
      std::string lhs;
      if (parts.empty()) {
        lhs = "0";
      } else if (parts.size() == 1) {
        lhs = parts[0];
      } else {
        lhs = "(+";
        for (const auto& p : parts) lhs += " " + p;
        lhs += ")";
      }
      std::string rhs = dst[j].is_const ? smt2_numeral(dst[j].value) : dst[j].sym;
      s += "(assert (= " + lhs + " " + rhs + "))\n";
    }
  }

  if (inst.workspace) {
    for (size_t i = 1; i <= k; ++i) {
      auto c = coords(i);
      for (size_t r = 0; r < inst.workspace->rows(); ++r) {
        LinExpr row;
        row.coeffs.assign(2 * n, Rat(0));
        for (size_t j = 0; j < n; ++j) row.coeffs[j] = inst.workspace->A[r][j];
        row.constant = -inst.workspace->b[r];
        // Pad with target-side slots so emit_linexpr sees 2n coordinates.
        auto padded = c;
        padded.resize(2 * n, detail::CoordTerm{true, Rat(0), ""});
        s += "(assert (< " + detail::emit_linexpr(row, padded) + " 0))\n";
      }
    }
  }

  for (size_t o = 0; o < inst.obstacles.size(); ++o) {
    auto dnf = emit_atoms(obstacle_free_formula(inst.obstacles[o], n));
    for (size_t h = 1; h <= k + 1; ++h) {
      auto src = coords(h - 1);
      auto dst = coords(h);
      std::vector<detail::CoordTerm> pq = src;
      pq.insert(pq.end(), dst.begin(), dst.end());
      s += "(assert " + detail::emit_disjunction(dnf, pq) + ")\n";
    }
  }

  s += "(check-sat)\n";
  if (!enc.value_vars.empty()) {
    s += "(get-value (";
    for (size_t i = 0; i < enc.value_vars.size(); ++i) {
      if (i) s += " ";
      s += enc.value_vars[i];
    }
    s += "))\n";
  }
  return enc;
}

struct SmtConfig {
  std::string command;     // e.g. "z3 -in" or "node scripts/smt-z3-node.cjs"
  double timeout_s = 60;   // per check-sat call
};

namespace detail {

inline std::optional<Verdict> find_verdict(const std::vector<Sexpr>& exprs) {
  for (const auto& e : exprs) {
    if (!e.is_atom()) continue;
    if (e.atom == "sat") return Verdict::Sat;
    if (e.atom == "unsat") return Verdict::Unsat;
    if (e.atom == "unknown") return Verdict::Unknown;
  }
  return std::nullopt;
}

// Locates the ((var val) ...) association list in the solver output.
inline std::optional<std::map<std::string, Sexpr>> find_model(const std::vector<Sexpr>& exprs) {
  for (const auto& e : exprs) {
    if (e.is_atom() || e.kids.empty()) continue;
    bool shape = true;
    for (const auto& kid : e.kids)
      if (kid.kids.size() != 2 || !kid.kids[0].is_atom()) { shape = false; break; }
    if (!shape) continue;
    std::map<std::string, Sexpr> model;
    for (const auto& kid : e.kids) model[kid.kids[0].atom] = kid.kids[1];
    return model;
  }
  return std::nullopt;
}

inline std::string first_line(const std::string& s) {
  auto nl = s.find('\n');
  return nl == std::string::npos ? s : s.substr(0, nl);
}

}  // namespace detail

// Runs the external solver on the bounded encoding and re-verifies any model
// exactly.  Dwell times are never taken from the solver: once waypoints are
// fixed, exact cone LPs recover times, so only waypoint values need to be
// recovered from the model.  Approximate models go through a rounding ladder
// (exact parse, then denominators capped at 10^3, 10^6, 10^9) and each
// candidate is accepted only if the whole chain re-verifies.
inline BackendResult run_smt_backend(const Instance& inst, size_t k, const SmtConfig& cfg) {
  BmcScript enc = encode_bmc(inst, k);
  auto argv = split_command(cfg.command);
  if (argv.empty()) return {Verdict::Unknown, {}, "empty solver command"};

  auto attempt = [&](const std::string& script) { return run_process(argv, script, cfg.timeout_s); };
  ProcResult pr = attempt(enc.script);
  if (pr.timed_out) return {Verdict::Unknown, {}, "solver timeout"};
  if (pr.exit_code != 0)
    return {Verdict::Unknown, {},
            "solver failed (rc " + std::to_string(pr.exit_code) + "): " + detail::first_line(pr.err)};
  auto exprs = parse_sexprs(pr.out);
  auto verdict = detail::find_verdict(exprs);
  if (!verdict) return {Verdict::Unknown, {}, "no verdict in solver output"};
  if (*verdict == Verdict::Unsat) return {Verdict::Unsat, {}, ""};
  if (*verdict == Verdict::Unknown) return {Verdict::Unknown, {}, "solver returned unknown"};

  if (k == 0) {
    std::string why;
    if (verify_waypoint_chain(inst, {inst.start, inst.target}, &why))
      return {Verdict::Sat, {}, ""};
    return {Verdict::Unknown, {}, "solver said sat but the direct hop fails: " + why};
  }

  auto extract = [&](const std::vector<Sexpr>& es)
      -> std::optional<std::vector<ModelValue>> {
    auto model = detail::find_model(es);
    if (!model) return std::nullopt;
    std::vector<ModelValue> vals;
    for (const auto& name : enc.value_vars) {
      auto it = model->find(name);
      if (it == model->end()) return std::nullopt;
      auto v = rat_from_model(it->second);
      if (!v) return std::nullopt;
      vals.push_back(*v);
    }
    return vals;
  };

  auto vals = extract(exprs);
  if (!vals) {
    // Algebraic values (root-obj) defeat the exact printer; ask the solver
    // for decimal approximations instead and retry once.
    ProcResult pr2 = attempt("(set-option :pp.decimal true)\n" + enc.script);
    if (!pr2.timed_out && pr2.exit_code == 0) vals = extract(parse_sexprs(pr2.out));
    if (!vals) return {Verdict::Unknown, {}, "model has no rational presentation"};
  }

  const size_t n = inst.sys.dim;
  bool all_exact = true;
  for (const auto& v : *vals) all_exact = all_exact && v.exact;
  std::vector<Vec> exact_wps;
  for (size_t i = 0; i < k; ++i) {
    Vec w;
    for (size_t j = 0; j < n; ++j) w.push_back((*vals)[i * n + j].value);
    exact_wps.push_back(w);
  }
  std::vector<std::vector<Vec>> candidates = {exact_wps};
  if (!all_exact) {
    for (const Int& cap : {Int(1000), Int(1000000), Int(1000000000)}) {
      std::vector<Vec> rounded;
      for (const auto& w : exact_wps) {
        Vec r;
        for (const auto& c : w) r.push_back(rat_limit_denominator(c, cap));
        rounded.push_back(r);
      }
      candidates.push_back(rounded);
    }
  }
  for (const auto& cand : candidates) {
    std::vector<Vec> chain;
    chain.push_back(inst.start);
    for (const auto& w : cand) chain.push_back(w);
    chain.push_back(inst.target);
    if (verify_waypoint_chain(inst, chain)) return {Verdict::Sat, cand, ""};
  }
  return {Verdict::Unknown, {}, "model rounding failed"};
}

struct SamplingConfig {
  std::uint64_t seed = 1;
  size_t budget = 10000;  // waypoint tuples tried per k
};

// Randomised incomplete backend: samples waypoint tuples uniformly from the
// workspace bounding box on a 2^-16 grid and keeps the first tuple whose
// chain verifies exactly.  Never answers Unsat.
inline BackendResult sampling_backend(const Instance& inst, size_t k, const SamplingConfig& cfg) {
  if (k == 0) {
    if (verify_waypoint_chain(inst, {inst.start, inst.target}))
      return {Verdict::Sat, {}, ""};
    return {Verdict::Unknown, {}, "no direct hop; sampling cannot refute"};
  }
  if (!inst.workspace)
    return {Verdict::Unknown, {}, "sampling backend needs a bounded workspace"};
  const size_t n = inst.sys.dim;
  Vec lo(n), hi(n);
  for (size_t j = 0; j < n; ++j) {
    Vec obj(n, Rat(0));
    obj[j] = 1;
    std::vector<LinearConstraint> rows;
    for (size_t r = 0; r < inst.workspace->rows(); ++r)
      rows.push_back({inst.workspace->A[r], inst.workspace->b[r], Rel::Le});
    auto mn = lp_optimize(n, obj, Sense::Min, rows);
    auto mx = lp_optimize(n, obj, Sense::Max, rows);
    if (mn.kind != LpResult::Kind::Bounded || mx.kind != LpResult::Kind::Bounded)
      return {Verdict::Unknown, {}, "sampling backend needs a bounded workspace"};
    lo[j] = mn.value;
    hi[j] = mx.value;
  }
  // Distinct deterministic streams per k; plain mask keeps the draw identical
  // across standard library implementations.
  std::mt19937_64 rng(cfg.seed + 0x9e3779b97f4a7c15ULL * (k + 1));
  for (size_t trial = 0; trial < cfg.budget; ++trial) {
    std::vector<Vec> wps;
    for (size_t i = 0; i < k; ++i) {
      Vec w(n);
      for (size_t j = 0; j < n; ++j) {
        std::uint64_t u = rng() & 0xFFFFu;
        w[j] = lo[j] + (hi[j] - lo[j]) * Rat(long(u), 65536L);
      }
      wps.push_back(w);
    }
    std::vector<Vec> chain;
    chain.push_back(inst.start);
    for (const auto& w : wps) chain.push_back(w);
    chain.push_back(inst.target);
    if (verify_waypoint_chain(inst, chain)) return {Verdict::Sat, wps, ""};
  }
  return {Verdict::Unknown, {}, "sampling budget exhausted"};
}

inline Backend make_smt_backend(SmtConfig cfg) {
  return [cfg](const Instance& inst, size_t k) { return run_smt_backend(inst, k, cfg); };
}

inline Backend make_sampling_backend(SamplingConfig cfg) {
  return [cfg](const Instance& inst, size_t k) { return sampling_backend(inst, k, cfg); };
}

struct PlanOutcome {
  enum class Kind { Planned, Unreachable, Exhausted };
  Kind kind = Kind::Exhausted;
  std::optional<Plan> plan;
  size_t witness_length = 0;  // segments in the found plan (k + 1)
  size_t bound = 0;
  std::vector<Verdict> verdicts;  // per k = 0, 1, ..., as far as the loop ran
  std::string info;
};

// Iterative-deepening outer loop: try k = 0..max_bound intermediate
// waypoints.  The first Sat is assembled into a concrete schedule (round
// splitting per hop) and verified end to end.  Unreachable requires an Unsat
// at every k; otherwise exhaustion is reported honestly.
inline PlanOutcome plan(const Instance& inst, size_t max_bound, const Backend& backend) {
  PlanOutcome out;
  out.bound = max_bound;
  for (size_t k = 0; k <= max_bound; ++k) {
    BackendResult r = backend(inst, k);
    out.verdicts.push_back(r.verdict);
    if (!r.info.empty()) {
      if (!out.info.empty()) out.info += "; ";
      out.info += "k=" + std::to_string(k) + ": " + r.info;
    }
    if (r.verdict != Verdict::Sat) continue;
    std::vector<Vec> chain;
    chain.push_back(inst.start);
    for (const auto& w : r.waypoints) chain.push_back(w);
    chain.push_back(inst.target);
    std::string why;
    if (!verify_waypoint_chain(inst, chain, &why)) {
      out.info += "; backend waypoints failed re-verification at k=" + std::to_string(k) + ": " + why;
      continue;
    }
    Plan p;
    p.waypoints = chain;
    for (size_t i = 0; i + 1 < chain.size(); ++i) {
      Schedule hop = hop_schedule(inst, chain[i], chain[i + 1]);
      p.schedule.insert(p.schedule.end(), hop.begin(), hop.end());
    }
    Run run = simulate(inst.sys, inst.start, p.schedule);
    auto rep = verify_run(inst, run);
    if (!rep.ok || run.states.back() != inst.target) {
      out.kind = PlanOutcome::Kind::Exhausted;
      out.info += "; assembled schedule failed exact verification at k=" + std::to_string(k);
      return out;
    }
    p.verified = true;
    out.kind = PlanOutcome::Kind::Planned;
    out.plan = std::move(p);
    out.witness_length = k + 1;
    return out;
  }
  bool all_unsat = true;
  for (auto v : out.verdicts) all_unsat = all_unsat && v == Verdict::Unsat;
  out.kind = all_unsat ? PlanOutcome::Kind::Unreachable : PlanOutcome::Kind::Exhausted;
  return out;
}

}  // namespace mms
