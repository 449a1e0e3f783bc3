#include "mms/planner.hpp"

#include <catch2/catch_amalgamated.hpp>

#include <filesystem>
#include <fstream>

using namespace mms;

namespace {

Mms three_modes() {
  Mms sys;
  sys.dim = 2;
  sys.modes = {{"m1", {Rat(1), Rat(1)}}, {"m2", {Rat(0), Rat(-1)}}, {"m3", {Rat(-1), Rat(1)}}};
  return sys;
}

// Single box blocking the diagonal from (1/2, 1/2) to (3, 3).
Instance boxed() {
  Instance inst;
  inst.sys = three_modes();
  inst.workspace = box_polytope({Rat(0), Rat(0)}, {Rat(4), Rat(4)});
  inst.obstacles.push_back(box_polytope({Rat(1), Rat(1)}, {Rat(2), Rat(2)}));
  inst.start = {parse_rat("1/2"), parse_rat("1/2")};
  inst.target = {Rat(3), Rat(3)};
  return inst;
}

Instance open_instance() {
  Instance inst = boxed();
  inst.obstacles.clear();
  return inst;
}

size_t count_occurrences(const std::string& text, const std::string& needle) {
  size_t n = 0;
  for (size_t pos = text.find(needle); pos != std::string::npos;
       pos = text.find(needle, pos + needle.size()))
    ++n;
  return n;
}

// Writes an executable stub standing in for an SMT solver process.
std::string write_stub(const std::string& name, const std::string& body) {
  namespace fs = std::filesystem;
  fs::path dir = fs::temp_directory_path() / "mms_planner_stubs";
  fs::create_directories(dir);
  fs::path path = dir / name;
  {
    std::ofstream out(path);
    out << "#!/bin/sh\n" << body << "\n";
  }
  fs::permissions(path, fs::perms::owner_all | fs::perms::group_read | fs::perms::others_read);
  return path.string();
}

BackendResult run_stub(const Instance& inst, size_t k, const std::string& cmd,
                       double timeout_s = 10) {
  return run_smt_backend(inst, k, SmtConfig{cmd, timeout_s});
}

}  // namespace

TEST_CASE("waypoint chain verification", "[planner]") {
  auto inst = boxed();
  SECTION("valid detour chain") {
    std::vector<Vec> chain = {inst.start, {parse_rat("5/2"), parse_rat("1/2")}, inst.target};
    CHECK(verify_waypoint_chain(inst, chain));
  }
  SECTION("rejections carry a reason") {
    std::string why;
    CHECK_FALSE(verify_waypoint_chain(inst, {inst.start}, &why));
    CHECK_THAT(why, Catch::Matchers::ContainsSubstring("at least"));
    CHECK_FALSE(verify_waypoint_chain(inst, {inst.start, inst.target}, &why));
    CHECK_THAT(why, Catch::Matchers::ContainsSubstring("obstacle 0"));
    CHECK_FALSE(verify_waypoint_chain(inst, {inst.start, {Rat(4), Rat(2)}, inst.target}, &why));
    CHECK_THAT(why, Catch::Matchers::ContainsSubstring("strictly inside"));
    Instance mono = inst;
    mono.sys.modes = {{"ne", {Rat(1), Rat(1)}}};
    CHECK_FALSE(
        verify_waypoint_chain(mono, {mono.start, {parse_rat("5/2"), parse_rat("1/2")}, mono.target}, &why));
    CHECK_THAT(why, Catch::Matchers::ContainsSubstring("cone"));
  }
}

TEST_CASE("bounded encoding structure", "[planner]") {
  auto inst = boxed();
  SECTION("no intermediate waypoints") {
    auto enc = encode_bmc(inst, 0);
    CHECK(enc.k == 0);
    CHECK(enc.value_vars.empty());
    CHECK_THAT(enc.script, Catch::Matchers::StartsWith("(set-logic QF_NRA)"));
    CHECK(count_occurrences(enc.script, "declare-const") == 3);   // t_1_0 .. t_1_2
    CHECK(count_occurrences(enc.script, "(check-sat)") == 1);
    CHECK(count_occurrences(enc.script, "get-value") == 0);
    // One avoidance disjunction for the single hop, 16 disjuncts inside.
    CHECK(count_occurrences(enc.script, "(or ") == 1);
  }
  SECTION("one intermediate waypoint") {
    auto enc = encode_bmc(inst, 1);
    CHECK(enc.value_vars == std::vector<std::string>{"x_1_0", "x_1_1"});
    CHECK(count_occurrences(enc.script, "declare-const") == 8);   // 2 coords + 6 dwell times
    CHECK(count_occurrences(enc.script, "(assert (>= t_") == 6);  // dwell nonnegativity
    CHECK(count_occurrences(enc.script, "(assert (= ") == 4);     // 2 hops x 2 dims
    CHECK(count_occurrences(enc.script, "(assert (< ") == 4);     // strict workspace rows
    CHECK(count_occurrences(enc.script, "(assert (or ") == 2);    // avoidance per hop
    CHECK(count_occurrences(enc.script, "(get-value (x_1_0 x_1_1))") == 1);
    // Numerals stay exact rationals.
    CHECK_THAT(enc.script, Catch::Matchers::ContainsSubstring("(/ 1 2)"));
    CHECK_THAT(enc.script, !Catch::Matchers::ContainsSubstring("0.5"));
  }
  SECTION("hop equations chain through shared waypoints") {
    auto enc = encode_bmc(open_instance(), 2);
    CHECK(enc.value_vars.size() == 4);
    CHECK(count_occurrences(enc.script, "(assert (= ") == 6);
    // No obstacles, no workspace violation for the boxed start/target only:
    // strict workspace rows appear for both intermediate waypoints.
    CHECK(count_occurrences(enc.script, "(assert (< ") == 8);
  }
}

TEST_CASE("external solver transcript handling", "[planner]") {
  auto inst = boxed();
  SECTION("unsat and unknown pass through") {
    auto r = run_stub(inst, 0, write_stub("unsat.sh", "echo unsat"));
    CHECK(r.verdict == Verdict::Unsat);
    r = run_stub(inst, 0, write_stub("unknown.sh", "echo unknown"));
    CHECK(r.verdict == Verdict::Unknown);
    CHECK_THAT(r.info, Catch::Matchers::ContainsSubstring("unknown"));
  }
  SECTION("process failures are reported") {
    auto r = run_stub(inst, 0, write_stub("fail.sh", "echo broken >&2; exit 3"));
    CHECK(r.verdict == Verdict::Unknown);
    CHECK_THAT(r.info, Catch::Matchers::ContainsSubstring("rc 3"));
    r = run_stub(inst, 0, write_stub("garbage.sh", "echo no verdict here"));
    CHECK(r.verdict == Verdict::Unknown);
    CHECK_THAT(r.info, Catch::Matchers::ContainsSubstring("no verdict"));
    r = run_smt_backend(inst, 0, SmtConfig{"", 1});
    CHECK_THAT(r.info, Catch::Matchers::ContainsSubstring("empty solver command"));
  }
  SECTION("hung solver is killed at the timeout") {
    auto r = run_stub(inst, 0, write_stub("slow.sh", "sleep 5\necho sat"), 0.2);
    CHECK(r.verdict == Verdict::Unknown);
    CHECK_THAT(r.info, Catch::Matchers::ContainsSubstring("timeout"));
  }
  SECTION("sat claims are never trusted blindly") {
    // Direct hop is blocked, so a bare sat at k = 0 downgrades to Unknown.
    auto r = run_stub(inst, 0, write_stub("sat.sh", "echo sat"));
    CHECK(r.verdict == Verdict::Unknown);
    CHECK_THAT(r.info, Catch::Matchers::ContainsSubstring("direct hop fails"));
    // With a free diagonal it is accepted.
    r = run_stub(open_instance(), 0, write_stub("sat.sh", "echo sat"));
    CHECK(r.verdict == Verdict::Sat);
    CHECK(r.waypoints.empty());
  }
  SECTION("exact model waypoints verify and are returned") {
    auto stub = write_stub("model.sh", "printf 'sat\\n((x_1_0 (/ 5 2)) (x_1_1 (/ 1 2)))\\n'");
    auto r = run_stub(inst, 1, stub);
    REQUIRE(r.verdict == Verdict::Sat);
    REQUIRE(r.waypoints.size() == 1);
    CHECK(r.waypoints[0] == Vec{parse_rat("5/2"), parse_rat("1/2")});
  }
  SECTION("model waypoints inside an obstacle are rejected") {
    auto stub = write_stub("bad.sh", "printf 'sat\\n((x_1_0 (/ 3 2)) (x_1_1 (/ 3 2)))\\n'");
    auto r = run_stub(inst, 1, stub);
    CHECK(r.verdict == Verdict::Unknown);
    CHECK_THAT(r.info, Catch::Matchers::ContainsSubstring("rounding failed"));
  }
  SECTION("sat without a model downgrades") {
    auto r = run_stub(inst, 1, write_stub("nomodel.sh", "echo sat"));
    CHECK(r.verdict == Verdict::Unknown);
    CHECK_THAT(r.info, Catch::Matchers::ContainsSubstring("no rational presentation"));
  }
  SECTION("approximate decimals go through the rounding ladder") {
    // Single diagonal mode: a chain verifies only if every hop lies exactly
    // on the diagonal, so the truncated decimal must be repaired to 1/3.
    Instance diag;
    diag.sys.dim = 2;
    diag.sys.modes = {{"ne", {Rat(1), Rat(1)}}};
    diag.start = {Rat(0), Rat(0)};
    diag.target = {Rat(1), Rat(1)};
    auto stub = write_stub(
        "approx.sh", "printf 'sat\\n((x_1_0 0.3333333333?) (x_1_1 (/ 1.0 3.0)))\\n'");
    auto r = run_stub(diag, 1, stub);
    REQUIRE(r.verdict == Verdict::Sat);
    REQUIRE(r.waypoints.size() == 1);
    CHECK(r.waypoints[0] == Vec{parse_rat("1/3"), parse_rat("1/3")});
  }
}

TEST_CASE("sampling backend", "[planner]") {
  auto inst = boxed();
  SECTION("direct hop needs no samples") {
    auto r = sampling_backend(open_instance(), 0, SamplingConfig{});
    CHECK(r.verdict == Verdict::Sat);
    r = sampling_backend(inst, 0, SamplingConfig{});
    CHECK(r.verdict == Verdict::Unknown);
  }
  SECTION("finds a one waypoint detour deterministically") {
    SamplingConfig cfg;
    cfg.seed = 7;
    cfg.budget = 5000;
    auto r1 = sampling_backend(inst, 1, cfg);
    REQUIRE(r1.verdict == Verdict::Sat);
    REQUIRE(r1.waypoints.size() == 1);
    std::vector<Vec> chain = {inst.start, r1.waypoints[0], inst.target};
    CHECK(verify_waypoint_chain(inst, chain));
    auto r2 = sampling_backend(inst, 1, cfg);
    CHECK(r2.waypoints == r1.waypoints);  // same seed, same draw
  }
  SECTION("cannot refute and says so") {
    Instance sealed = inst;
    sealed.obstacles.clear();
    sealed.obstacles.push_back(box_polytope({Rat(0), Rat(2)}, {Rat(4), parse_rat("5/2")}));
    SamplingConfig cfg;
    cfg.budget = 50;
    auto r = sampling_backend(sealed, 1, cfg);
    CHECK(r.verdict == Verdict::Unknown);
    CHECK_THAT(r.info, Catch::Matchers::ContainsSubstring("budget"));
    Instance nows = inst;
    nows.workspace.reset();
    r = sampling_backend(nows, 1, SamplingConfig{});
    CHECK(r.verdict == Verdict::Unknown);
    CHECK_THAT(r.info, Catch::Matchers::ContainsSubstring("bounded workspace"));
  }
}

TEST_CASE("iterative deepening outer loop", "[planner]") {
  auto inst = boxed();
  Vec detour = {parse_rat("5/2"), parse_rat("1/2")};

  SECTION("first sat bound wins and is assembled into a verified plan") {
    auto backend = [&](const Instance&, size_t k) -> BackendResult {
      if (k < 1) return {Verdict::Unsat, {}, ""};
      return {Verdict::Sat, {detour}, ""};
    };
    auto out = plan(inst, 3, backend);
    REQUIRE(out.kind == PlanOutcome::Kind::Planned);
    CHECK(out.witness_length == 2);
    CHECK(out.verdicts == std::vector<Verdict>{Verdict::Unsat, Verdict::Sat});
    REQUIRE(out.plan);
    CHECK(out.plan->verified);
    CHECK(out.plan->waypoints == std::vector<Vec>{inst.start, detour, inst.target});
    auto run = simulate(inst.sys, inst.start, out.plan->schedule);
    CHECK(run.states.back() == inst.target);
    CHECK(verify_run(inst, run).ok);
  }
  SECTION("unsat everywhere proves unreachability") {
    auto backend = [](const Instance&, size_t) -> BackendResult {
      return {Verdict::Unsat, {}, ""};
    };
    auto out = plan(inst, 2, backend);
    CHECK(out.kind == PlanOutcome::Kind::Unreachable);
    CHECK(out.verdicts.size() == 3);
  }
  SECTION("unknown anywhere blocks the unreachability claim") {
    auto backend = [](const Instance&, size_t k) -> BackendResult {
      if (k == 1) return {Verdict::Unknown, {}, "gave up"};
      return {Verdict::Unsat, {}, ""};
    };
    auto out = plan(inst, 2, backend);
    CHECK(out.kind == PlanOutcome::Kind::Exhausted);
    CHECK_THAT(out.info, Catch::Matchers::ContainsSubstring("gave up"));
  }
  SECTION("a lying backend is caught by re-verification") {
    auto backend = [&](const Instance&, size_t k) -> BackendResult {
      if (k == 0) return {Verdict::Sat, {{Rat(1), Rat(1)}}, ""};  // wrong arity of lies
      return {Verdict::Unsat, {}, ""};
    };
    auto out = plan(inst, 1, backend);
    CHECK(out.kind == PlanOutcome::Kind::Exhausted);
    CHECK_THAT(out.info, Catch::Matchers::ContainsSubstring("failed re-verification"));
  }
  SECTION("sampling backend end to end") {
    SamplingConfig cfg;
    cfg.seed = 11;
    cfg.budget = 5000;
    auto out = plan(inst, 2, make_sampling_backend(cfg));
    REQUIRE(out.kind == PlanOutcome::Kind::Planned);
    CHECK(out.witness_length >= 1);
    auto run = simulate(inst.sys, inst.start, out.plan->schedule);
    CHECK(run.states.back() == inst.target);
    CHECK(verify_run(inst, run).ok);
  }
}

TEST_CASE("live solver end to end", "[planner][smt]") {
  SmtConfig cfg{MMS_DEFAULT_SMT_CMD, 120};

  SECTION("one dimensional corridor is provably blocked") {
    Instance wall;
    wall.sys.dim = 1;
    wall.sys.modes = {{"fwd", {Rat(1)}}, {"back", {Rat(-1)}}};
    wall.workspace = box_polytope({Rat(0)}, {Rat(10)});
    wall.obstacles.push_back(box_polytope({Rat(4)}, {Rat(6)}));
    wall.start = {Rat(1)};
    wall.target = {Rat(9)};
    auto out = plan(wall, 1, make_smt_backend(cfg));
    CHECK(out.kind == PlanOutcome::Kind::Unreachable);
    CHECK(out.verdicts == std::vector<Verdict>{Verdict::Unsat, Verdict::Unsat});
  }
  SECTION("boxed diagonal needs exactly one waypoint") {
    auto inst = boxed();
    auto out = plan(inst, 2, make_smt_backend(cfg));
    REQUIRE(out.kind == PlanOutcome::Kind::Planned);
    CHECK(out.witness_length == 2);
    CHECK(out.verdicts.front() == Verdict::Unsat);
    REQUIRE(out.plan);
    auto run = simulate(inst.sys, inst.start, out.plan->schedule);
    CHECK(run.states.back() == inst.target);
    CHECK(verify_run(inst, run).ok);
  }
}
