#include "mms/hop.hpp"

#include <catch2/catch_amalgamated.hpp>

using namespace mms;

namespace {

Mms three_modes() {
  Mms sys;
  sys.dim = 2;
  sys.modes = {{"m1", {Rat(1), Rat(1)}}, {"m2", {Rat(0), Rat(-1)}}, {"m3", {Rat(-1), Rat(1)}}};
  return sys;
}

Mms quadrant_modes() {
  Mms sys;
  sys.dim = 2;
  sys.modes = {{"east", {Rat(1), Rat(0)}}, {"north", {Rat(0), Rat(1)}}};
  return sys;
}

}  // namespace

TEST_CASE("reachability cone dwell times", "[hop]") {
  auto sys = three_modes();
  SECTION("fixed displacement") {
    // t1 - t3 = 3 and t1 - t2 + t3 = 1 admit the vertex (3, 2, 0).
    auto t = reach_cone_times(sys, {Rat(0), Rat(0)}, {Rat(3), Rat(1)});
    REQUIRE(t);
    CHECK(*t == Vec{Rat(3), Rat(2), Rat(0)});
  }
  SECTION("these three rates positively span the plane") {
    auto t = reach_cone_times(sys, {Rat(0), Rat(0)}, {Rat(-1), Rat(-2)});
    REQUIRE(t);
    CHECK(*t == Vec{Rat(0), Rat(3), Rat(1)});
  }
  SECTION("zero displacement needs no time") {
    auto t = reach_cone_times(sys, {Rat(1), Rat(1)}, {Rat(1), Rat(1)});
    REQUIRE(t);
    CHECK(*t == Vec{Rat(0), Rat(0), Rat(0)});
  }
  SECTION("outside the cone") {
    CHECK_FALSE(reach_cone_times(quadrant_modes(), {Rat(0), Rat(0)}, {Rat(-1), Rat(0)}));
    CHECK_FALSE(reach_cone_times(quadrant_modes(), {Rat(2), Rat(2)}, {Rat(2), Rat(1)}));
  }
  SECTION("arity guard") {
    CHECK_THROWS_AS(reach_cone_times(sys, {Rat(0)}, {Rat(1), Rat(1)}), std::invalid_argument);
  }
}

TEST_CASE("ray exit and dwell bound", "[hop]") {
  auto ws = box_polytope({Rat(0), Rat(0)}, {Rat(4), Rat(4)});
  SECTION("first facet crossed wins") {
    auto tau = ray_exit_time(ws, {Rat(1), Rat(1)}, {Rat(1), Rat(0)});
    REQUIRE(tau);
    CHECK(*tau == Rat(3));
    tau = ray_exit_time(ws, {Rat(1), Rat(1)}, {Rat(-1), Rat(-2)});
    REQUIRE(tau);
    CHECK(*tau == parse_rat("1/2"));
  }
  SECTION("zero rate never exits") {
    CHECK_FALSE(ray_exit_time(ws, {Rat(1), Rat(1)}, {Rat(0), Rat(0)}));
  }
  SECTION("dwell bound is the least exit time over modes") {
    auto sys = three_modes();
    auto ts = t_safe(sys, ws, {parse_rat("1/10"), parse_rat("1/10")});
    REQUIRE(ts);
    CHECK(*ts == parse_rat("1/10"));
    ts = t_safe(sys, ws, {Rat(2), Rat(2)});
    REQUIRE(ts);
    CHECK(*ts == Rat(2));
    CHECK_THROWS_AS(t_safe(sys, ws, {Rat(0), Rat(1)}), std::invalid_argument);
  }
}

TEST_CASE("convex set traversal", "[hop]") {
  auto sys = three_modes();
  auto ws = box_polytope({Rat(0), Rat(0)}, {Rat(4), Rat(4)});
  Vec p = {parse_rat("1/10"), parse_rat("1/10")};
  Vec q = {Rat(1), Rat(3)};

  SECTION("round robin lands exactly and stays inside") {
    auto sched = reach_convex(sys, ws, p, q);
    CHECK(sched.size() == 60);
    auto run = simulate(sys, p, sched);
    CHECK(run.states.back() == q);
    for (const auto& s : run.states) CHECK(contains(ws, s, /*strictly=*/true));
  }
  SECTION("coincident endpoints yield the empty schedule") {
    CHECK(reach_convex(sys, ws, p, p).empty());
  }
  SECTION("endpoints must be strictly inside") {
    CHECK_THROWS_AS(reach_convex(sys, ws, {Rat(0), Rat(0)}, q), std::invalid_argument);
    CHECK_THROWS_AS(reach_convex(sys, ws, p, {Rat(4), Rat(1)}), std::invalid_argument);
  }
  SECTION("cone infeasibility is reported") {
    CHECK_THROWS_AS(reach_convex(quadrant_modes(), ws, {Rat(2), Rat(2)}, {Rat(1), Rat(2)}),
                    std::invalid_argument);
  }
}

TEST_CASE("run verification is exact", "[hop]") {
  Instance inst;
  inst.sys = three_modes();
  inst.workspace = box_polytope({Rat(0), Rat(0)}, {Rat(4), Rat(4)});
  inst.obstacles.push_back(box_polytope({Rat(1), Rat(1)}, {Rat(2), Rat(2)}));
  inst.start = {parse_rat("1/2"), parse_rat("1/2")};
  inst.target = {Rat(3), Rat(3)};

  SECTION("clean run passes") {
    // Stays below and left of the obstacle box.
    Schedule sched = {{"m2", parse_rat("1/4")}, {"m1", parse_rat("1/2")}};
    auto run = simulate(inst.sys, inst.start, sched);
    CHECK(run.states.back() == Vec{Rat(1), parse_rat("3/4")});
    CHECK(verify_run(inst, run).ok);
  }
  SECTION("crossing the obstacle is caught with a witness") {
    Schedule sched = {{"m1", parse_rat("5/2")}};
    auto run = simulate(inst.sys, inst.start, sched);
    auto rep = verify_run(inst, run);
    REQUIRE_FALSE(rep.ok);
    REQUIRE(rep.violations.size() == 1);
    CHECK(rep.violations[0].piece == 0);
    REQUIRE(rep.violations[0].obstacle);
    CHECK(*rep.violations[0].obstacle == 0);
    // The lambda parameterisation points back into the contact.
    const auto& v = rep.violations[0];
    Vec a = run.states[0], b = run.states[1];
    Vec x(2);
    for (size_t i = 0; i < 2; ++i) x[i] = v.lambda * a[i] + (1 - v.lambda) * b[i];
    CHECK(contains(inst.obstacles[0], x));
  }
  SECTION("grazing the obstacle corner counts as contact") {
    Instance graze = inst;
    graze.start = {parse_rat("1/2"), parse_rat("3/2")};
    // From (1/2, 3/2) mode m1 reaches exactly the corner (1, 2) after 1/2.
    Schedule sched = {{"m1", parse_rat("1/2")}};
    auto run = simulate(graze.sys, graze.start, sched);
    CHECK_FALSE(verify_run(graze, run).ok);
  }
  SECTION("leaving the workspace is caught") {
    Schedule sched = {{"m2", Rat(1)}};
    auto run = simulate(inst.sys, inst.start, sched);
    auto rep = verify_run(inst, run);
    REQUIRE_FALSE(rep.ok);
    CHECK_FALSE(rep.violations[0].obstacle);
  }
}

TEST_CASE("clearance bounded hop", "[hop]") {
  SECTION("diagonal hop across the open workspace") {
    Instance inst;
    inst.sys = three_modes();
    inst.workspace = box_polytope({Rat(0), Rat(0)}, {Rat(4), Rat(4)});
    inst.start = {parse_rat("1/10"), parse_rat("1/10")};
    inst.target = {parse_rat("39/10"), parse_rat("39/10")};
    auto sched = hop_schedule(inst, inst.start, inst.target);
    // Clearance 1/10, one active mode for total time 19/5: 39 rounds.
    REQUIRE(sched.size() == 39);
    CHECK(sched[0].mode == "m1");
    CHECK(sched[0].duration == parse_rat("19/195"));
    auto run = simulate(inst.sys, inst.start, sched);
    CHECK(run.states.back() == inst.target);
    CHECK(verify_run(inst, run).ok);
  }
  SECTION("corridor hop splits rounds against the nearest obstacle") {
    Instance inst;
    inst.sys = three_modes();
    inst.workspace = box_polytope({Rat(0), Rat(0)}, {Rat(4), Rat(4)});
    inst.obstacles.push_back(
        box_polytope({parse_rat("0.15"), parse_rat("0.25")}, {parse_rat("3.75"), Rat(1)}));
    inst.start = {parse_rat("1/10"), parse_rat("1/10")};
    inst.target = {parse_rat("1/10"), parse_rat("39/10")};
    auto sched = hop_schedule(inst, inst.start, inst.target);
    // Clearance 1/20 against the box, dwell times (19/10, 0, 19/10): 77
    // rounds of two active modes.
    CHECK(sched.size() == 154);
    auto run = simulate(inst.sys, inst.start, sched);
    CHECK(run.states.back() == inst.target);
    CHECK(verify_run(inst, run).ok);
  }
  SECTION("zero hop") {
    Instance inst;
    inst.sys = three_modes();
    inst.start = {Rat(1), Rat(1)};
    inst.target = inst.start;
    CHECK(hop_schedule(inst, inst.start, inst.target).empty());
  }
  SECTION("hop through an obstacle has no clearance") {
    Instance inst;
    inst.sys = three_modes();
    inst.obstacles.push_back(box_polytope({Rat(1), Rat(1)}, {Rat(2), Rat(2)}));
    inst.start = {Rat(0), Rat(0)};
    inst.target = {Rat(3), Rat(3)};
    CHECK_THROWS_AS(hop_schedule(inst, inst.start, inst.target), std::invalid_argument);
  }
}

TEST_CASE("waypoint shortcutting", "[hop]") {
  Instance inst;
  inst.sys = three_modes();
  inst.workspace = box_polytope({Rat(0), Rat(0)}, {Rat(4), Rat(4)});
  inst.obstacles.push_back(box_polytope({Rat(1), Rat(1)}, {Rat(2), Rat(2)}));

  std::vector<Vec> detour = {{parse_rat("1/2"), parse_rat("1/2")},
                             {parse_rat("1/2"), parse_rat("5/2")},
                             {parse_rat("3/2"), parse_rat("5/2")},
                             {Rat(3), Rat(3)}};
  SECTION("blocked direct hop keeps a detour point") {
    auto out = simplify_waypoints(inst, detour);
    CHECK(out.size() == 3);
    CHECK(out.front() == detour.front());
    CHECK(out.back() == detour.back());
  }
  SECTION("free chain collapses to its endpoints") {
    Instance open = inst;
    open.obstacles.clear();
    auto out = simplify_waypoints(open, detour);
    CHECK(out == std::vector<Vec>{detour.front(), detour.back()});
  }
  SECTION("short chains pass through") {
    std::vector<Vec> two = {detour.front(), detour.back()};
    CHECK(simplify_waypoints(inst, two) == two);
  }
}
