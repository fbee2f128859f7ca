#include "avstress/scenario_io.hpp"

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <istream>
#include <ostream>
#include <stdexcept>

#include <nlohmann/json.hpp>

#include "avstress/errors.hpp"

namespace avs {

namespace {

using nlohmann::json;

std::string checksum_hex(std::uint64_t sum) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx",
                static_cast<unsigned long long>(sum));
  return buf;
}

std::uint64_t checksum_from_hex(const std::string& hex) {
  if (hex.size() != 16) throw std::runtime_error("bad checksum field");
  return std::stoull(hex, nullptr, 16);
}

json scene_to_json(const Scene& s) {
  json vehicles = json::array();
  for (const VehicleState& v : s.vehicles) {
    vehicles.push_back({v.id, v.lane, v.lon, v.lat, v.speed, v.heading});
  }
  return json{{"time", s.time}, {"cav_id", s.cav_id}, {"vehicles", vehicles}};
}

Scene scene_from_json(const json& j, double veh_length, double veh_width) {
  Scene s;
  s.time = j.at("time").get<double>();
  s.cav_id = j.at("cav_id").get<int>();
  for (const json& row : j.at("vehicles")) {
    if (!row.is_array() || row.size() != 6) {
      throw std::runtime_error("scene vehicle row must have 6 entries");
    }
    VehicleState v;
    v.id = row[0].get<int>();
    v.lane = row[1].get<int>();
    v.lon = row[2].get<double>();
    v.lat = row[3].get<double>();
    v.speed = row[4].get<double>();
    v.heading = row[5].get<double>();
    v.length = veh_length;
    v.width = veh_width;
    s.vehicles.push_back(v);
  }
  return s;
}

json crash_to_json(const CrashEvent& c) {
  return json{{"time", c.time},
              {"vehicle_a", c.vehicle_a},
              {"vehicle_b", c.vehicle_b},
              {"relative_heading", c.relative_heading},
              {"contact_lon", c.contact_lon},
              {"contact_lat", c.contact_lat}};
}

CrashEvent crash_from_json(const json& j) {
  CrashEvent c;
  c.time = j.at("time").get<double>();
  c.vehicle_a = j.at("vehicle_a").get<int>();
  c.vehicle_b = j.at("vehicle_b").get<int>();
  c.relative_heading = j.at("relative_heading").get<double>();
  c.contact_lon = j.at("contact_lon").get<double>();
  c.contact_lat = j.at("contact_lat").get<double>();
  return c;
}

json env_to_json(const EnvConfig& e) {
  return json{
      {"road",
       {{"lane_count", e.road.lane_count},
        {"lane_width", e.road.lane_width},
        {"length", e.road.length}}},
      {"bv_count", e.bv_count},
      {"spawn_speed_lo", e.spawn_speed_lo},
      {"spawn_speed_hi", e.spawn_speed_hi},
      {"horizon", e.horizon},
      {"dt", e.dt},
      {"sub_dt", e.sub_dt},
      {"maneuver_duration", e.maneuver_duration},
      {"spawn_headway", e.spawn_headway},
      {"despawn_range", e.despawn_range},
      {"cav_idm",
       {{"v0", e.cav_idm.v0},
        {"T", e.cav_idm.T},
        {"a_max", e.cav_idm.a_max},
        {"b", e.cav_idm.b},
        {"s0", e.cav_idm.s0},
        {"delta", e.cav_idm.delta}}},
      {"cav_mobil",
       {{"politeness", e.cav_mobil.politeness},
        {"b_safe", e.cav_mobil.b_safe},
        {"a_thr", e.cav_mobil.a_thr},
        {"bias", e.cav_mobil.bias}}}};
}

EnvConfig env_from_json(const json& j) {
  EnvConfig e;
  const json& road = j.at("road");
  e.road.lane_count = road.at("lane_count").get<int>();
  e.road.lane_width = road.at("lane_width").get<double>();
  e.road.length = road.at("length").get<double>();
  e.bv_count = j.at("bv_count").get<int>();
  e.spawn_speed_lo = j.at("spawn_speed_lo").get<double>();
  e.spawn_speed_hi = j.at("spawn_speed_hi").get<double>();
  e.horizon = j.at("horizon").get<int>();
  e.dt = j.at("dt").get<double>();
  e.sub_dt = j.at("sub_dt").get<double>();
  e.maneuver_duration = j.at("maneuver_duration").get<double>();
  e.spawn_headway = j.at("spawn_headway").get<double>();
  e.despawn_range = j.at("despawn_range").get<double>();
  const json& idm = j.at("cav_idm");
  e.cav_idm.v0 = idm.at("v0").get<double>();
  e.cav_idm.T = idm.at("T").get<double>();
  e.cav_idm.a_max = idm.at("a_max").get<double>();
  e.cav_idm.b = idm.at("b").get<double>();
  e.cav_idm.s0 = idm.at("s0").get<double>();
  e.cav_idm.delta = idm.at("delta").get<double>();
  const json& mobil = j.at("cav_mobil");
  e.cav_mobil.politeness = mobil.at("politeness").get<double>();
  e.cav_mobil.b_safe = mobil.at("b_safe").get<double>();
  e.cav_mobil.a_thr = mobil.at("a_thr").get<double>();
  e.cav_mobil.bias = mobil.at("bias").get<double>();
  return e;
}

json scenario_to_json(const Scenario& s) {
  json actions = json::array();
  for (const ActionRecord& a : s.actions) {
    actions.push_back({a.time, a.controlled_id, a.action, a.mask});
  }
  json scenes = json::array();
  for (const Scene& sc : s.scenes) scenes.push_back(scene_to_json(sc));

  json j{{"version", s.version},
         {"seed", s.seed},
         {"mode", s.mode},
         {"ndd_checksum", checksum_hex(s.ndd_checksum)},
         {"env", env_to_json(s.env)},
         {"vehicle_length", s.vehicle_length},
         {"vehicle_width", s.vehicle_width},
         {"scenes", scenes},
         {"actions", actions}};
  if (s.crash.has_value()) j["crash"] = crash_to_json(*s.crash);
  return j;
}

Scenario scenario_from_json(const json& j) {
  Scenario s;
  s.version = j.at("version").get<std::uint32_t>();
  if (s.version != 1) {
    throw std::runtime_error("unsupported scenario version");
  }
  s.seed = j.at("seed").get<std::uint64_t>();
  s.mode = j.at("mode").get<std::string>();
  if (s.mode != "unbounded" && s.mode != "ndd_bounded" && s.mode != "nde") {
    throw std::runtime_error("unknown scenario mode: " + s.mode);
  }
  s.ndd_checksum = checksum_from_hex(j.at("ndd_checksum").get<std::string>());
  s.env = env_from_json(j.at("env"));
  s.vehicle_length = j.at("vehicle_length").get<double>();
  s.vehicle_width = j.at("vehicle_width").get<double>();
  for (const json& sc : j.at("scenes")) {
    s.scenes.push_back(scene_from_json(sc, s.vehicle_length, s.vehicle_width));
  }
  for (const json& row : j.at("actions")) {
    if (!row.is_array() || row.size() != 4) {
      throw std::runtime_error("action row must have 4 entries");
    }
    ActionRecord a;
    a.time = row[0].get<double>();
    a.controlled_id = row[1].get<int>();
    a.action = row[2].get<int>();
    a.mask = row[3].get<std::uint64_t>();
    s.actions.push_back(a);
  }
  if (j.contains("crash")) s.crash = crash_from_json(j.at("crash"));

  if (s.scenes.empty() || s.scenes.size() != s.actions.size() + 1) {
    throw std::runtime_error("scenario needs scenes = actions + 1");
  }
  return s;
}

json record_to_json(const CornerCaseRecord& r) {
  json j = scenario_to_json(r.scenario);
  j["crash_event"] = crash_to_json(r.crash);
  j["critical_bv"] = r.critical_bv;
  j["crash_type"] = r.crash_type;
  return j;
}

CornerCaseRecord record_from_json(const json& j) {
  CornerCaseRecord r;
  r.scenario = scenario_from_json(j);
  r.crash = crash_from_json(j.at("crash_event"));
  r.critical_bv = j.at("critical_bv").get<int>();
  r.crash_type = j.at("crash_type").get<int>();
  if (!r.scenario.crash.has_value()) {
    throw std::runtime_error("corner case without a crash in its scenario");
  }
  if (r.crash_type < 1 || r.crash_type > 5) {
    throw std::runtime_error("crash_type must be in 1..5");
  }
  if (r.critical_bv == r.scenario.scenes.front().cav_id) {
    throw std::runtime_error("critical_bv cannot be the vehicle under test");
  }
  return r;
}

template <typename T, typename Parse>
std::vector<T> read_lines(std::istream& in, Parse parse) {
  std::vector<T> out;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    json j;
    try {
      j = json::parse(line);
      out.push_back(parse(j));
    } catch (const std::exception& e) {
      throw std::runtime_error("line " + std::to_string(lineno) + ": " +
                               e.what());
    }
  }
  return out;
}

}  // namespace

void append_scenario(std::ostream& out, const Scenario& s) {
  out << scenario_to_json(s).dump() << '\n';
}

std::vector<Scenario> read_scenarios(std::istream& in) {
  return read_lines<Scenario>(in, scenario_from_json);
}

void append_corner_case(std::ostream& out, const CornerCaseRecord& r) {
  out << record_to_json(r).dump() << '\n';
}

std::vector<CornerCaseRecord> read_corner_cases(std::istream& in) {
  return read_lines<CornerCaseRecord>(in, record_from_json);
}

std::vector<CornerCaseRecord> load_corner_cases(const std::string& path) {
  if (!std::filesystem::exists(path)) {
    throw MissingInputError("no such corner-case library: " + path);
  }
  std::ifstream in(path, std::ios::binary);
  if (!in) throw MissingInputError("cannot open: " + path);
  return read_corner_cases(in);
}

std::vector<Scenario> load_scenarios(const std::string& path) {
  if (!std::filesystem::exists(path)) {
    throw MissingInputError("no such scenario log: " + path);
  }
  std::ifstream in(path, std::ios::binary);
  if (!in) throw MissingInputError("cannot open: " + path);
  return read_scenarios(in);
}

}  // namespace avs
