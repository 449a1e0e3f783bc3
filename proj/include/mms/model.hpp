#pragma once

#include "mms/geometry.hpp"
#include "mms/rational.hpp"

#include <nlohmann/json.hpp>

#include <fstream>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

namespace mms {

using Json = nlohmann::ordered_json;

struct Mode {
  std::string name;
  Vec rate;
};

// Multi-mode system with constant rates: in mode m the state moves along
// rate(m), and mode switches are free.
struct Mms {
  size_t dim = 0;
  std::vector<Mode> modes;

  size_t mode_index(const std::string& name) const {
    for (size_t i = 0; i < modes.size(); ++i)
      if (modes[i].name == name) return i;
    throw std::invalid_argument("unknown mode '" + name + "'");
  }
  bool has_mode(const std::string& name) const {
    for (const auto& m : modes)
      if (m.name == name) return true;
    return false;
  }
};

struct TimedAction {
  std::string mode;
  Rat duration;  // nonnegative
};

using Schedule = std::vector<TimedAction>;

struct Run {
  Vec start;
  Schedule schedule;
  std::vector<Vec> states;  // schedule.size() + 1 entries, states.front() == start
};

inline Run simulate(const Mms& sys, const Vec& start, const Schedule& schedule) {
  if (start.size() != sys.dim) throw std::invalid_argument("start arity mismatch");
  Run run;
  run.start = start;
  run.schedule = schedule;
  run.states.push_back(start);
  for (const auto& act : schedule) {
    if (act.duration < 0) throw std::invalid_argument("negative duration");
    const Mode& m = sys.modes[sys.mode_index(act.mode)];
    Vec next = run.states.back();
    for (size_t i = 0; i < sys.dim; ++i) next[i] += act.duration * m.rate[i];
    run.states.push_back(std::move(next));
  }
  return run;
}

// Reach-avoid planning instance.  Obstacles are closed; the safety set is the
// open complement (within the open interior of the workspace when present),
// so grazing an obstacle or the workspace boundary is a violation for the
// endpoints.
struct Instance {
  Mms sys;
  std::vector<Polytope> obstacles;
  std::optional<Polytope> workspace;
  Vec start;
  Vec target;
};

inline bool point_in_safety_set(const Instance& inst, const Vec& x) {
  if (inst.workspace && !contains(*inst.workspace, x, /*strictly=*/true)) return false;
  for (const auto& ob : inst.obstacles)
    if (contains(ob, x)) return false;
  return true;
}

struct Plan {
  std::vector<Vec> waypoints;  // includes start and target
  Schedule schedule;
  bool verified = false;
};

namespace detail {

inline Rat json_to_rat(const Json& j, const std::string& where) {
  if (j.is_string()) return parse_rat(j.get<std::string>());
  if (j.is_number_integer()) return Rat(j.get<long long>());
  if (j.is_number_unsigned()) return Rat(j.get<unsigned long long>());
  if (j.is_number_float())
    throw std::invalid_argument(where + ": write non-integer rationals as strings, e.g. \"3/10\"");
  throw std::invalid_argument(where + ": expected a rational");
}

inline Vec json_to_vec(const Json& j, const std::string& where) {
  if (!j.is_array()) throw std::invalid_argument(where + ": expected an array");
  Vec v;
  for (const auto& e : j) v.push_back(json_to_rat(e, where));
  return v;
}

inline Json vec_to_json(const Vec& v) {
  Json out = Json::array();
  for (const auto& r : v) out.push_back(rat_to_string(r));
  return out;
}

inline Polytope json_to_polytope(const Json& j, size_t dim, const std::string& where) {
  if (!j.is_object() || !j.contains("A") || !j.contains("b"))
    throw std::invalid_argument(where + ": expected {\"A\": [...], \"b\": [...]}");
  std::vector<Vec> a;
  for (const auto& rowj : j.at("A")) a.push_back(json_to_vec(rowj, where + ".A"));
  Vec b = json_to_vec(j.at("b"), where + ".b");
  return make_polytope(dim, std::move(a), std::move(b));
}

inline Json polytope_to_json(const Polytope& p) {
  Json out = Json::object();
  out["A"] = Json::array();
  for (const auto& row : p.A) out["A"].push_back(vec_to_json(row));
  out["b"] = vec_to_json(p.b);
  return out;
}

}  // namespace detail

inline Instance instance_from_json(const Json& j) {
  if (!j.is_object()) throw std::invalid_argument("instance: expected an object");
  Instance inst;
  if (!j.contains("dimension") || !j.at("dimension").is_number_integer())
    throw std::invalid_argument("instance: missing integer 'dimension'");
  long long dim = j.at("dimension").get<long long>();
  if (dim < 1) throw std::invalid_argument("instance: dimension must be at least 1");
  inst.sys.dim = size_t(dim);
  if (!j.contains("modes") || !j.at("modes").is_array() || j.at("modes").empty())
    throw std::invalid_argument("instance: 'modes' must be a non-empty array");
  for (const auto& mj : j.at("modes")) {
    if (!mj.is_object() || !mj.contains("name") || !mj.contains("rate"))
      throw std::invalid_argument("instance: each mode needs 'name' and 'rate'");
    Mode m;
    m.name = mj.at("name").get<std::string>();
    if (m.name.empty()) throw std::invalid_argument("instance: empty mode name");
    m.rate = detail::json_to_vec(mj.at("rate"), "mode '" + m.name + "' rate");
    if (m.rate.size() != inst.sys.dim)
      throw std::invalid_argument("instance: rate arity mismatch in mode '" + m.name + "'");
    if (inst.sys.has_mode(m.name))
      throw std::invalid_argument("instance: duplicate mode name '" + m.name + "'");
    inst.sys.modes.push_back(std::move(m));
  }
  if (j.contains("obstacles")) {
    size_t i = 0;
    for (const auto& oj : j.at("obstacles"))
      inst.obstacles.push_back(
          detail::json_to_polytope(oj, inst.sys.dim, "obstacle " + std::to_string(i++)));
  }
  if (j.contains("workspace"))
    inst.workspace = detail::json_to_polytope(j.at("workspace"), inst.sys.dim, "workspace");
  if (!j.contains("start") || !j.contains("target"))
    throw std::invalid_argument("instance: 'start' and 'target' are required");
  inst.start = detail::json_to_vec(j.at("start"), "start");
  inst.target = detail::json_to_vec(j.at("target"), "target");
  if (inst.start.size() != inst.sys.dim || inst.target.size() != inst.sys.dim)
    throw std::invalid_argument("instance: start/target arity mismatch");
  if (!point_in_safety_set(inst, inst.start))
    throw std::invalid_argument("start not in safety set");
  if (!point_in_safety_set(inst, inst.target))
    throw std::invalid_argument("target not in safety set");
  return inst;
}

inline Json instance_to_json(const Instance& inst) {
  Json out = Json::object();
  out["dimension"] = inst.sys.dim;
  out["modes"] = Json::array();
  for (const auto& m : inst.sys.modes) {
    Json mj = Json::object();
    mj["name"] = m.name;
    mj["rate"] = detail::vec_to_json(m.rate);
    out["modes"].push_back(mj);
  }
  out["obstacles"] = Json::array();
  for (const auto& ob : inst.obstacles) out["obstacles"].push_back(detail::polytope_to_json(ob));
  if (inst.workspace) out["workspace"] = detail::polytope_to_json(*inst.workspace);
  out["start"] = detail::vec_to_json(inst.start);
  out["target"] = detail::vec_to_json(inst.target);
  return out;
}

inline Plan plan_from_json(const Json& j) {
  if (!j.is_object()) throw std::invalid_argument("plan: expected an object");
  Plan plan;
  if (j.contains("waypoints"))
    for (const auto& wj : j.at("waypoints"))
      plan.waypoints.push_back(detail::json_to_vec(wj, "waypoint"));
  if (!j.contains("schedule") || !j.at("schedule").is_array())
    throw std::invalid_argument("plan: 'schedule' array is required");
  for (const auto& sj : j.at("schedule")) {
    if (!sj.is_array() || sj.size() != 2)
      throw std::invalid_argument("plan: schedule entries are [mode, duration] pairs");
    TimedAction act;
    act.mode = sj.at(0).get<std::string>();
    act.duration = detail::json_to_rat(sj.at(1), "schedule duration");
    if (act.duration < 0) throw std::invalid_argument("plan: negative duration");
    plan.schedule.push_back(std::move(act));
  }
  plan.verified = j.value("verified", false);
  return plan;
}

inline Json plan_to_json(const Plan& plan) {
  Json out = Json::object();
  out["waypoints"] = Json::array();
  for (const auto& w : plan.waypoints) out["waypoints"].push_back(detail::vec_to_json(w));
  out["schedule"] = Json::array();
  for (const auto& act : plan.schedule) {
    Json e = Json::array();
    e.push_back(act.mode);
    e.push_back(rat_to_string(act.duration));
    out["schedule"].push_back(e);
  }
  out["verified"] = plan.verified;
  return out;
}

inline Json load_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::invalid_argument("cannot open '" + path + "'");
  Json j;
  try {
    j = Json::parse(in);
  } catch (const std::exception& e) {
    throw std::invalid_argument("cannot parse '" + path + "': " + e.what());
  }
  return j;
}

inline Instance load_instance(const std::string& path) {
  return instance_from_json(load_json_file(path));
}

inline Plan load_plan(const std::string& path) { return plan_from_json(load_json_file(path)); }

inline void save_json_file(const std::string& path, const Json& j) {
  std::ofstream out(path);
  if (!out) throw std::invalid_argument("cannot write '" + path + "'");
  out << j.dump(2) << "\n";
}

inline void save_instance(const std::string& path, const Instance& inst) {
  save_json_file(path, instance_to_json(inst));
}

inline void save_plan(const std::string& path, const Plan& plan) {
  save_json_file(path, plan_to_json(plan));
}

}  // namespace mms
