#pragma once

#include "mms/linear.hpp"
#include "mms/model.hpp"

#include <map>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace mms {

// Two-counter (Minsky) machine.  Instructions are indexed from 0; the entry
// instruction must be an increment and there must be exactly one Halt.
struct CmInstruction {
  enum class Kind { Inc, Dec, IfZero, Halt };
  Kind kind = Kind::Halt;
  int counter = 0;  // 1 or 2
  int goto1 = -1;   // Inc/Dec successor; IfZero positive branch
  int goto2 = -1;   // IfZero zero branch
};

struct CounterMachine {
  std::vector<CmInstruction> instructions;
};

// Text format, one instruction per line:
//   inc c1 goto 3
//   dec c2 goto 0
//   ifz c2 pos 3 zero 0
//   halt
// Blank lines and lines starting with ';' are skipped.
inline CounterMachine parse_ccm(const std::string& text) {
  CounterMachine m;
  std::istringstream in(text);
  std::string line;
  size_t lineno = 0;
  auto fail = [&](const std::string& what) {
    throw std::invalid_argument("line " + std::to_string(lineno) + ": " + what);
  };
  while (std::getline(in, line)) {
    ++lineno;
    std::istringstream ls(line);
    std::string tok;
    if (!(ls >> tok) || tok[0] == ';') continue;
    CmInstruction ins;
    auto counter = [&]() {
      std::string c;
      if (!(ls >> c) || (c != "c1" && c != "c2")) fail("expected counter c1 or c2");
      return c == "c1" ? 1 : 2;
    };
    auto keyword = [&](const std::string& kw) {
      std::string k;
      if (!(ls >> k) || k != kw) fail("expected '" + kw + "'");
    };
    auto index = [&]() {
      int v;
      if (!(ls >> v) || v < 0) fail("expected instruction index");
      return v;
    };
    if (tok == "inc" || tok == "dec") {
      ins.kind = tok == "inc" ? CmInstruction::Kind::Inc : CmInstruction::Kind::Dec;
      ins.counter = counter();
      keyword("goto");
      ins.goto1 = index();
    } else if (tok == "ifz") {
      ins.kind = CmInstruction::Kind::IfZero;
      ins.counter = counter();
      keyword("pos");
      ins.goto1 = index();
      keyword("zero");
      ins.goto2 = index();
    } else if (tok == "halt") {
      ins.kind = CmInstruction::Kind::Halt;
    } else {
      fail("unknown instruction '" + tok + "'");
    }
    std::string extra;
    if (ls >> extra) fail("trailing token '" + extra + "'");
    m.instructions.push_back(ins);
  }
  return m;
}

inline void validate_machine(const CounterMachine& m) {
  const auto& ins = m.instructions;
  if (ins.empty()) throw std::invalid_argument("machine has no instructions");
  if (ins[0].kind != CmInstruction::Kind::Inc)
    throw std::invalid_argument("instruction 0 must be an increment");
  size_t halts = 0;
  for (size_t i = 0; i < ins.size(); ++i) {
    const auto& s = ins[i];
    if (s.kind == CmInstruction::Kind::Halt) {
      ++halts;
      continue;
    }
    auto check = [&](int t) {
      if (t < 0 || static_cast<size_t>(t) >= ins.size())
        throw std::invalid_argument("instruction " + std::to_string(i) +
                                    " jumps out of range");
    };
    check(s.goto1);
    if (s.kind == CmInstruction::Kind::IfZero) check(s.goto2);
  }
  if (halts != 1) throw std::invalid_argument("machine must have exactly one halt");
}

// One linear atom over the compiled variables: coeffs . v REL bound.
struct SafetyAtom {
  Vec coeffs;
  Rel rel = Rel::Le;
  Rat bound;
};

// "every guard variable > 0 implies every consequent atom"; the guard list is
// empty for the unguarded box clause.  All clauses have a single guard except
// the halt-sum clause, whose antecedent also requires w_halt > 0: the halt
// lemmas only ever invoke it with w_halt positive, and without that guard the
// clause would contradict the construction's own nominal run while the target
// variable ramps up.
struct GuardedClause {
  std::string name;
  std::vector<size_t> guards;
  std::vector<SafetyAtom> consequent;
};

struct CompiledSystem {
  Mms mms;
  std::vector<std::string> vars;
  std::vector<GuardedClause> safety;
  Vec start, target;

  // Bookkeeping for the induced schedule.
  size_t halt_pc = 0;
  size_t mode_init = 0, mode_halt = 0, mode_halt_c1 = 0, mode_halt_c2 = 0;
  std::vector<size_t> mode_main;                 // M_i for increments/decrements
  std::vector<size_t> mode_pos, mode_zero;       // M_i^1 / M_i^2 for zero checks
  std::map<std::pair<int, int>, size_t> mode_pair;  // M_ij
  size_t var_s0 = 0, var_c1 = 0, var_c2 = 0, var_whalt = 0;
  std::map<std::pair<int, int>, size_t> var_w, var_x;
  std::vector<size_t> var_z;  // per zero-check instruction, else npos
};

namespace detail {

inline std::string idx_pair_name(char prefix, int i, int j) {
  if (i < 10 && j < 10)
    return std::string(1, prefix) + std::to_string(i) + std::to_string(j);
  return std::string(1, prefix) + std::to_string(i) + "_" + std::to_string(j);
}

}  // namespace detail

// Compiles the machine into the multi-mode system with the guarded safety
// predicate.  Variable layout: s0, c1, c2, then per instruction its w/x/z
// variables in index order, then w_halt last.
inline CompiledSystem compile(const CounterMachine& m) {
  validate_machine(m);
  const auto& ins = m.instructions;
  const size_t npos = static_cast<size_t>(-1);
  CompiledSystem cs;
  for (size_t i = 0; i < ins.size(); ++i)
    if (ins[i].kind == CmInstruction::Kind::Halt) cs.halt_pc = i;
  const int halt = static_cast<int>(cs.halt_pc);

  auto add_var = [&](const std::string& name) {
    cs.vars.push_back(name);
    return cs.vars.size() - 1;
  };
  cs.var_s0 = add_var("s0");
  cs.var_c1 = add_var("c1");
  cs.var_c2 = add_var("c2");
  cs.var_z.assign(ins.size(), npos);
  for (size_t i = 0; i < ins.size(); ++i) {
    const auto& s = ins[i];
    int ii = static_cast<int>(i);
    if (s.kind == CmInstruction::Kind::Inc || s.kind == CmInstruction::Kind::Dec) {
      cs.var_w[{ii, s.goto1}] = add_var(detail::idx_pair_name('w', ii, s.goto1));
      cs.var_x[{ii, s.goto1}] = add_var(detail::idx_pair_name('x', ii, s.goto1));
    } else if (s.kind == CmInstruction::Kind::IfZero) {
      cs.var_z[i] = add_var("z" + std::to_string(i) + "#");
      if (!cs.var_x.count({ii, s.goto1}))
        cs.var_x[{ii, s.goto1}] = add_var(detail::idx_pair_name('x', ii, s.goto1));
      if (!cs.var_x.count({ii, s.goto2}))
        cs.var_x[{ii, s.goto2}] = add_var(detail::idx_pair_name('x', ii, s.goto2));
    }
  }
  cs.var_whalt = add_var("w_halt");
  const size_t nv = cs.vars.size();

  auto zero_rate = [&]() { return Vec(nv, Rat(0)); };
  auto add_mode = [&](const std::string& name, Vec rate) {
    cs.mms.modes.push_back({name, std::move(rate)});
    return cs.mms.modes.size() - 1;
  };

  // Successor variable grown while sitting at instruction j: w_{j,succ} for
  // non-zero-check j, z_j# for zero checks; w_halt handled by rule 5.
  auto grow_next = [&](Vec& rate, int j) {
    const auto& sj = ins[j];
    if (sj.kind == CmInstruction::Kind::IfZero)
      rate[cs.var_z[j]] = 1;
    else if (sj.kind != CmInstruction::Kind::Halt)
      rate[cs.var_w[{j, sj.goto1}]] = 1;
  };

  {
    Vec r = zero_rate();
    r[cs.var_s0] = -1;
    r[cs.var_w[{0, ins[0].goto1}]] = 1;
    cs.mode_init = add_mode("I", std::move(r));
  }
  cs.mode_main.assign(ins.size(), npos);
  cs.mode_pos.assign(ins.size(), npos);
  cs.mode_zero.assign(ins.size(), npos);
  for (size_t i = 0; i < ins.size(); ++i) {
    const auto& s = ins[i];
    int ii = static_cast<int>(i);
    if (s.kind == CmInstruction::Kind::Inc || s.kind == CmInstruction::Kind::Dec) {
      Vec r = zero_rate();
      r[cs.var_w[{ii, s.goto1}]] = -1;
      r[cs.var_x[{ii, s.goto1}]] = 1;
      r[s.counter == 1 ? cs.var_c1 : cs.var_c2] = s.kind == CmInstruction::Kind::Inc ? 1 : -1;
      cs.mode_main[i] = add_mode("M" + std::to_string(i), std::move(r));
    } else if (s.kind == CmInstruction::Kind::IfZero) {
      Vec r1 = zero_rate();
      r1[cs.var_z[i]] = -1;
      r1[cs.var_x[{ii, s.goto1}]] = 1;
      cs.mode_pos[i] = add_mode("M" + std::to_string(i) + "^1", std::move(r1));
      Vec r2 = zero_rate();
      r2[cs.var_z[i]] = -1;
      r2[cs.var_x[{ii, s.goto2}]] = 1;
      cs.mode_zero[i] = add_mode("M" + std::to_string(i) + "^2", std::move(r2));
    }
  }
  for (const auto& [key, xvar] : cs.var_x) {
    Vec r = zero_rate();
    r[xvar] = -1;
    if (key.second == halt)
      r[cs.var_whalt] = 1;
    else
      grow_next(r, key.second);
    cs.mode_pair[key] = add_mode(detail::idx_pair_name('M', key.first, key.second), std::move(r));
  }
  {
    Vec r = zero_rate();
    r[cs.var_whalt] = -1;
    cs.mode_halt = add_mode("M" + std::to_string(halt), std::move(r));
    Vec r1 = zero_rate();
    r1[cs.var_c1] = -1;
    r1[cs.var_whalt] = 1;
    cs.mode_halt_c1 = add_mode("M" + std::to_string(halt) + "^c1", std::move(r1));
    Vec r2 = zero_rate();
    r2[cs.var_c2] = -1;
    r2[cs.var_whalt] = 1;
    cs.mode_halt_c2 = add_mode("M" + std::to_string(halt) + "^c2", std::move(r2));
  }
  cs.mms.dim = nv;

  cs.start = Vec(nv, Rat(0));
  cs.start[cs.var_s0] = 1;
  cs.target = Vec(nv, Rat(0));
  cs.target[cs.var_whalt] = 1;

  // Safety clauses.  Families: W = w_ij, X = x_ij, Z = z_i#, X_halt the
  // x_{i,halt} subset.
  std::vector<size_t> wvars, xvars, zvars, xhalt;
  for (const auto& [key, v] : cs.var_w) wvars.push_back(v);
  for (const auto& [key, v] : cs.var_x) {
    xvars.push_back(v);
    if (key.second == halt) xhalt.push_back(v);
  }
  for (size_t i = 0; i < ins.size(); ++i)
    if (cs.var_z[i] != npos) zvars.push_back(cs.var_z[i]);

  // upper: v <= bound; otherwise v >= bound encoded as -v <= -bound.
  auto unit_atom = [&](size_t var, bool upper, int bound) {
    SafetyAtom a;
    a.coeffs = Vec(nv, Rat(0));
    a.coeffs[var] = upper ? Rat(1) : Rat(-1);
    a.rel = Rel::Le;
    a.bound = upper ? Rat(bound) : Rat(-bound);
    return a;
  };
  auto eq_zero = [&](size_t var) {
    SafetyAtom a;
    a.coeffs = Vec(nv, Rat(0));
    a.coeffs[var] = 1;
    a.rel = Rel::Eq;
    a.bound = 0;
    return a;
  };

  {
    GuardedClause box;
    box.name = "phi_a";
    for (size_t v = 0; v < nv; ++v) {
      box.consequent.push_back(unit_atom(v, false, 0));
      if (v != cs.var_whalt && v != cs.var_c1 && v != cs.var_c2)
        box.consequent.push_back(unit_atom(v, true, 1));
    }
    cs.safety.push_back(std::move(box));
  }
  for (size_t xv : xvars) {
    GuardedClause c;
    c.name = "phi_b(" + cs.vars[xv] + ")";
    c.guards = {xv};
    for (size_t other : xvars)
      if (other != xv) c.consequent.push_back(eq_zero(other));
    cs.safety.push_back(std::move(c));
  }
  for (size_t wv : wvars) {
    GuardedClause c;
    c.name = "phi_c(" + cs.vars[wv] + ")";
    c.guards = {wv};
    for (size_t other : wvars)
      if (other != wv) c.consequent.push_back(eq_zero(other));
    for (size_t zv : zvars) c.consequent.push_back(eq_zero(zv));
    cs.safety.push_back(std::move(c));
  }
  for (size_t zv : zvars) {
    GuardedClause c;
    c.name = "phi_d(" + cs.vars[zv] + ")";
    c.guards = {zv};
    for (size_t other : zvars)
      if (other != zv) c.consequent.push_back(eq_zero(other));
    for (size_t wv : wvars) c.consequent.push_back(eq_zero(wv));
    cs.safety.push_back(std::move(c));
  }
  {
    GuardedClause c;
    c.name = "phi_e";
    c.guards = {cs.var_s0};
    for (size_t xv : xvars) c.consequent.push_back(eq_zero(xv));
    cs.safety.push_back(std::move(c));
  }
  {
    GuardedClause c;
    c.name = "phi_f";
    c.guards = {cs.var_whalt};
    c.consequent.push_back(eq_zero(cs.var_s0));
    for (size_t wv : wvars) c.consequent.push_back(eq_zero(wv));
    for (size_t zv : zvars) c.consequent.push_back(eq_zero(zv));
    for (size_t xv : xvars) {
      bool is_halt = false;
      for (size_t h : xhalt) is_halt = is_halt || h == xv;
      if (!is_halt) c.consequent.push_back(eq_zero(xv));
    }
    cs.safety.push_back(std::move(c));
  }
  for (size_t xv : xhalt) {
    GuardedClause c;
    c.name = "phi_g(" + cs.vars[xv] + ")";
    c.guards = {xv, cs.var_whalt};
    SafetyAtom sum;
    sum.coeffs = Vec(nv, Rat(0));
    sum.coeffs[xv] = 1;
    sum.coeffs[cs.var_whalt] = 1;
    sum.rel = Rel::Eq;
    sum.bound = 1;
    c.consequent.push_back(std::move(sum));
    cs.safety.push_back(std::move(c));
  }
  return cs;
}

struct SafetyViolation {
  std::string clause;
  Rat tau;  // violation time along the segment (0 for point checks)
};

// Safety of a single point: every clause holds exactly.
inline std::optional<SafetyViolation> point_violation(const CompiledSystem& cs, const Vec& v) {
  if (v.size() != cs.vars.size()) throw std::invalid_argument("valuation dimension mismatch");
  auto atom_holds = [&](const SafetyAtom& a) {
    Rat lhs = 0;
    for (size_t i = 0; i < v.size(); ++i) lhs += a.coeffs[i] * v[i];
    return a.rel == Rel::Eq ? lhs == a.bound : lhs <= a.bound;
  };
  for (const auto& c : cs.safety) {
    bool armed = true;
    for (size_t g : c.guards) armed = armed && v[g] > 0;
    if (!armed) continue;
    for (const auto& a : c.consequent)
      if (!atom_holds(a)) return SafetyViolation{c.name, Rat(0)};
  }
  return std::nullopt;
}

inline bool safety_holds(const CompiledSystem& cs, const Vec& v) {
  return !point_violation(cs, v);
}

// Safety along the linear piece from `from` under `mode` for `duration`:
// each guarded clause reduces to 1-D emptiness of its violation set
// (strict antecedent atom plus one negated consequent atom) over the time
// interval, decided exactly.
inline std::optional<SafetyViolation> segment_violation(const CompiledSystem& cs, const Vec& from,
                                                        size_t mode, const Rat& duration) {
  if (from.size() != cs.vars.size()) throw std::invalid_argument("valuation dimension mismatch");
  if (mode >= cs.mms.modes.size()) throw std::invalid_argument("mode index out of range");
  if (duration < 0) throw std::invalid_argument("negative duration");
  const Vec& rate = cs.mms.modes[mode].rate;

  auto affine = [&](const Vec& coeffs) {
    Rat offset = 0, slope = 0;
    for (size_t i = 0; i < from.size(); ++i) {
      offset += coeffs[i] * from[i];
      slope += coeffs[i] * rate[i];
    }
    return std::make_pair(offset, slope);
  };
  auto nonempty = [&](const std::vector<IntervalAtom>& atoms) -> std::optional<Rat> {
    auto res = interval_emptiness_1d(atoms, Rat(0), duration);
    if (res.empty) return std::nullopt;
    return *res.witness;
  };

  // Earliest witness across all clauses, so the reported clause is the first
  // thing that goes wrong along the piece.
  std::optional<SafetyViolation> best;
  for (const auto& c : cs.safety) {
    std::vector<IntervalAtom> guard_atoms;
    // from[g] + tau rate[g] > 0  <=>  -rate[g] tau < from[g]
    for (size_t g : c.guards) guard_atoms.push_back({-rate[g], from[g], Rel::Lt});
    for (const auto& a : c.consequent) {
      auto [offset, slope] = affine(a.coeffs);
      // Violation of "expr REL bound" along the piece.
      std::vector<std::vector<IntervalAtom>> systems;
      if (a.rel == Rel::Eq) {
        systems.push_back({{slope, a.bound - offset, Rel::Lt}});      // expr < bound
        systems.push_back({{-slope, offset - a.bound, Rel::Lt}});     // expr > bound
      } else {
        systems.push_back({{-slope, offset - a.bound, Rel::Lt}});     // expr > bound
      }
      for (auto& sys : systems) {
        for (const auto& g : guard_atoms) sys.push_back(g);
        auto tau = nonempty(sys);
        if (tau && (!best || *tau < best->tau)) best = SafetyViolation{c.name, *tau};
      }
    }
  }
  return best;
}

inline bool segment_safe(const CompiledSystem& cs, const Vec& from, size_t mode,
                         const Rat& duration) {
  return !segment_violation(cs, from, mode, duration);
}

// Exact machine run: deterministic small-step semantics; decrementing a zero
// counter clamps at zero and sets the flag (the construction leaves that case
// undefined).
struct MachineConfig {
  int pc = 0;
  Int c1 = 0, c2 = 0;
};

struct MachineRun {
  std::vector<MachineConfig> configs;
  bool halted = false;
  bool clamped = false;
};

inline MachineRun simulate_machine(const CounterMachine& m, size_t max_steps) {
  validate_machine(m);
  MachineRun run;
  MachineConfig cfg;
  run.configs.push_back(cfg);
  for (size_t step = 0; step < max_steps; ++step) {
    const auto& s = m.instructions[cfg.pc];
    if (s.kind == CmInstruction::Kind::Halt) {
      run.halted = true;
      break;
    }
    Int& c = s.counter == 1 ? cfg.c1 : cfg.c2;
    switch (s.kind) {
      case CmInstruction::Kind::Inc:
        c += 1;
        cfg.pc = s.goto1;
        break;
      case CmInstruction::Kind::Dec:
        if (c == 0)
          run.clamped = true;
        else
          c -= 1;
        cfg.pc = s.goto1;
        break;
      case CmInstruction::Kind::IfZero:
        cfg.pc = c > 0 ? s.goto1 : s.goto2;
        break;
      case CmInstruction::Kind::Halt:
        break;
    }
    run.configs.push_back(cfg);
  }
  if (!run.halted && m.instructions[cfg.pc].kind == CmInstruction::Kind::Halt)
    run.halted = true;
  return run;
}

// Per-step record of the alternatives the safety predicate rejects.
struct PerturbationCheck {
  enum class Kind { Duration, Mode } kind = Kind::Duration;
  std::string detail;  // perturbed duration or wrong mode name
  bool rejected = false;
  std::string clause;  // first violated clause when rejected
};

struct InducedStep {
  size_t mode = 0;
  Rat duration;
  Vec from;
  std::vector<PerturbationCheck> checks;
};

struct InducedRun {
  std::vector<InducedStep> steps;
  Vec final_state;
  bool machine_halted = false;
  bool clamped = false;
  bool reached_target = false;
};

// Executes the unique safe schedule induced by the machine run: I for one
// unit, then per machine step the instruction mode (or the branch mode picked
// by the counter test) followed by the pair mode, one unit each; after the
// machine halts, "decrement one counter then one halt-mode unit" pairs drive
// the counters to zero and w_halt back to one.  Every nominal segment is
// asserted safe and every even boundary is asserted to encode the machine
// configuration; mode and duration deviations are checked against the safety
// predicate and reported.
inline InducedRun simulate_induced(const CompiledSystem& cs, const CounterMachine& m,
                                   size_t max_mode_steps) {
  validate_machine(m);
  const size_t npos = static_cast<size_t>(-1);
  InducedRun out;
  Vec state = cs.start;

  // Nominal mode sequence, bounded by the step cap.
  std::vector<size_t> schedule;
  {
    MachineConfig cfg;
    bool halted = false;
    schedule.push_back(cs.mode_init);
    while (schedule.size() < max_mode_steps && !halted) {
      const auto& s = m.instructions[cfg.pc];
      if (s.kind == CmInstruction::Kind::Halt) {
        halted = true;
        break;
      }
      int ii = cfg.pc;
      Int& c = s.counter == 1 ? cfg.c1 : cfg.c2;
      int next = -1;
      size_t first_mode = npos;
      switch (s.kind) {
        case CmInstruction::Kind::Inc:
          first_mode = cs.mode_main[ii];
          next = s.goto1;
          c += 1;
          break;
        case CmInstruction::Kind::Dec:
          if (c == 0) {
            out.clamped = true;  // rates would push the counter negative
          } else {
            c -= 1;
          }
          first_mode = cs.mode_main[ii];
          next = s.goto1;
          break;
        case CmInstruction::Kind::IfZero:
          if (c > 0) {
            first_mode = cs.mode_pos[ii];
            next = s.goto1;
          } else {
            first_mode = cs.mode_zero[ii];
            next = s.goto2;
          }
          break;
        case CmInstruction::Kind::Halt:
          break;
      }
      if (out.clamped) break;  // the induced schedule would go unsafe
      schedule.push_back(first_mode);
      if (schedule.size() >= max_mode_steps) break;
      schedule.push_back(cs.mode_pair.at({ii, next}));
      cfg.pc = next;
    }
    out.machine_halted = halted;
    if (halted && !out.clamped) {
      // Halt phase: c1 pairs then c2 pairs.
      for (Int k = 0; k < cfg.c1 && schedule.size() + 1 < max_mode_steps + 1; k += 1) {
        schedule.push_back(cs.mode_halt_c1);
        schedule.push_back(cs.mode_halt);
      }
      for (Int k = 0; k < cfg.c2 && schedule.size() + 1 < max_mode_steps + 1; k += 1) {
        schedule.push_back(cs.mode_halt_c2);
        schedule.push_back(cs.mode_halt);
      }
      if (schedule.size() > max_mode_steps) schedule.resize(max_mode_steps);
    }
  }

  // Mirror machine run for the bisimulation assertions.
  MachineRun mrun = simulate_machine(m, 2 * max_mode_steps + 2);

  for (size_t idx = 0; idx < schedule.size(); ++idx) {
    InducedStep step;
    step.mode = schedule[idx];
    step.duration = 1;
    step.from = state;

    if (auto bad = segment_violation(cs, state, step.mode, Rat(1)))
      throw std::logic_error("nominal schedule violates " + bad->clause + " at step " +
                             std::to_string(idx));

    // Duration deviations: run the perturbed piece, then the nominal
    // successor mode for one unit; rejected if either goes unsafe.
    for (const char* dtxt : {"1/2", "3/2"}) {
      PerturbationCheck chk;
      chk.kind = PerturbationCheck::Kind::Duration;
      chk.detail = dtxt;
      Rat d = parse_rat(dtxt);
      if (auto bad = segment_violation(cs, state, step.mode, d)) {
        chk.rejected = true;
        chk.clause = bad->clause;
      } else if (idx + 1 < schedule.size()) {
        Vec perturbed = state;
        for (size_t i = 0; i < perturbed.size(); ++i)
          perturbed[i] += d * cs.mms.modes[step.mode].rate[i];
        if (auto bad2 = segment_violation(cs, perturbed, schedule[idx + 1], Rat(1))) {
          chk.rejected = true;
          chk.clause = bad2->clause;
        }
      }
      step.checks.push_back(std::move(chk));
    }
    // Wrong-mode deviations: any other mode taken now for one unit.
    for (size_t u = 0; u < cs.mms.modes.size(); ++u) {
      if (u == step.mode) continue;
      PerturbationCheck chk;
      chk.kind = PerturbationCheck::Kind::Mode;
      chk.detail = cs.mms.modes[u].name;
      if (auto bad = segment_violation(cs, state, u, Rat(1))) {
        chk.rejected = true;
        chk.clause = bad->clause;
      }
      step.checks.push_back(std::move(chk));
    }

    for (size_t i = 0; i < state.size(); ++i) state[i] += cs.mms.modes[step.mode].rate[i];
    out.steps.push_back(std::move(step));

    // Bisimulation at even boundaries: after I and after each completed
    // instruction pair the state encodes the machine configuration.
    size_t boundary = idx + 1;
    if (boundary % 2 == 1 && boundary / 2 < mrun.configs.size() &&
        schedule[idx] != cs.mode_halt && schedule[idx] != cs.mode_halt_c1 &&
        schedule[idx] != cs.mode_halt_c2) {
      const MachineConfig& cfg = mrun.configs[boundary / 2];
      bool ok = state[cs.var_c1] == Rat(cfg.c1) && state[cs.var_c2] == Rat(cfg.c2) &&
                state[cs.var_s0] == 0;
      const auto& s = m.instructions[cfg.pc];
      size_t marker = npos;
      if (s.kind == CmInstruction::Kind::Halt)
        marker = cs.var_whalt;
      else if (s.kind == CmInstruction::Kind::IfZero)
        marker = cs.var_z[cfg.pc];
      else
        marker = cs.var_w.at({cfg.pc, s.goto1});
      for (size_t v = 0; v < state.size(); ++v) {
        if (v == cs.var_c1 || v == cs.var_c2 || v == cs.var_s0) continue;
        ok = ok && state[v] == (v == marker ? Rat(1) : Rat(0));
      }
      if (!ok)
        throw std::logic_error("bisimulation mismatch at mode boundary " +
                               std::to_string(boundary));
    }
  }

  out.final_state = state;
  out.reached_target = state == cs.target;
  return out;
}

// JSON view of the compiled system for the command-line tool: variables,
// per-mode nonzero rates, clause texts, start and target points.
inline Json compiled_to_json(const CompiledSystem& cs) {
  Json j;
  j["variables"] = cs.vars;
  Json modes = Json::array();
  for (const auto& mode : cs.mms.modes) {
    Json jm;
    jm["name"] = mode.name;
    Json rates = Json::object();
    for (size_t v = 0; v < cs.vars.size(); ++v)
      if (mode.rate[v] != 0) rates[cs.vars[v]] = rat_to_string(mode.rate[v]);
    jm["rates"] = std::move(rates);
    modes.push_back(std::move(jm));
  }
  j["modes"] = std::move(modes);

  auto atom_text = [&](const SafetyAtom& a) {
    std::string lhs;
    for (size_t v = 0; v < cs.vars.size(); ++v) {
      if (a.coeffs[v] == 0) continue;
      if (!lhs.empty()) lhs += a.coeffs[v] > 0 ? " + " : " - ";
      else if (a.coeffs[v] < 0) lhs += "-";
      Rat mag = rat_abs(a.coeffs[v]);
      if (mag != 1) lhs += rat_to_string(mag) + " ";
      lhs += cs.vars[v];
    }
    const char* rel = a.rel == Rel::Eq ? " = " : " <= ";
    return lhs + rel + rat_to_string(a.bound);
  };
  Json clauses = Json::array();
  for (const auto& c : cs.safety) {
    Json jc;
    jc["name"] = c.name;
    if (!c.guards.empty()) {
      std::string g;
      for (size_t v : c.guards) g += (g.empty() ? "" : " & ") + cs.vars[v] + " > 0";
      jc["guard"] = g;
    }
    Json atoms = Json::array();
    for (const auto& a : c.consequent) atoms.push_back(atom_text(a));
    jc["requires"] = std::move(atoms);
    clauses.push_back(std::move(jc));
  }
  j["safety"] = std::move(clauses);

  Json st = Json::object(), tg = Json::object();
  for (size_t v = 0; v < cs.vars.size(); ++v) {
    if (cs.start[v] != 0) st[cs.vars[v]] = rat_to_string(cs.start[v]);
    if (cs.target[v] != 0) tg[cs.vars[v]] = rat_to_string(cs.target[v]);
  }
  j["start"] = std::move(st);
  j["target"] = std::move(tg);
  return j;
}

}  // namespace mms
