#include <unistd.h>

#include <algorithm>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "avstress/errors.hpp"
#include "avstress/scenario_io.hpp"
#include "doctest.h"

using namespace avs;

namespace {

Scenario sample_scenario(std::uint64_t seed) {
  Scenario s;
  s.seed = seed;
  s.mode = "unbounded";
  s.ndd_checksum = 0xdeadbeefcafef00dULL;
  s.env.road.lane_count = 3;
  s.env.road.lane_width = 4.0;
  s.env.road.length = 400.0;
  s.env.bv_count = 2;
  s.env.horizon = 5;
  s.vehicle_length = 5.0;
  s.vehicle_width = 2.0;

  for (int step = 0; step < 3; ++step) {
    Scene scene;
    scene.time = step * 1.0 + 1.0 / 3.0;  // awkward double on purpose
    scene.cav_id = 0;
    for (int id = 0; id < 3; ++id) {
      VehicleState v;
      v.id = id;
      v.lane = id % 3;
      v.lon = 100.0 + 17.77 * id + 29.3 * step + 0.1;
      v.lat = s.env.road.lane_center(v.lane);
      v.speed = 20.0 + id * 3.3333333333333335;
      v.heading = id == 1 ? 0.12345678901234567 : 0.0;
      scene.vehicles.push_back(v);
    }
    s.scenes.push_back(scene);
  }
  for (int step = 0; step < 2; ++step) {
    ActionRecord a;
    a.time = step * 1.0 + 1.0 / 3.0;
    a.controlled_id = 1 + step;
    a.action = 20 + step;
    a.mask = 0x1ffffffffULL;
    s.actions.push_back(a);
  }
  return s;
}

void check_equal(const Scenario& got, const Scenario& want) {
  CHECK(got.version == want.version);
  CHECK(got.seed == want.seed);
  CHECK(got.mode == want.mode);
  CHECK(got.ndd_checksum == want.ndd_checksum);
  CHECK(got.vehicle_length == want.vehicle_length);
  CHECK(got.vehicle_width == want.vehicle_width);
  CHECK(got.env.road.lane_count == want.env.road.lane_count);
  CHECK(got.env.road.lane_width == want.env.road.lane_width);
  CHECK(got.env.road.length == want.env.road.length);
  CHECK(got.env.bv_count == want.env.bv_count);
  CHECK(got.env.horizon == want.env.horizon);
  CHECK(got.env.dt == want.env.dt);
  CHECK(got.env.sub_dt == want.env.sub_dt);
  CHECK(got.env.spawn_headway == want.env.spawn_headway);
  CHECK(got.env.cav_idm.v0 == want.env.cav_idm.v0);
  CHECK(got.env.cav_idm.T == want.env.cav_idm.T);
  CHECK(got.env.cav_mobil.politeness == want.env.cav_mobil.politeness);
  CHECK(got.env.cav_mobil.bias == want.env.cav_mobil.bias);

  REQUIRE(got.scenes.size() == want.scenes.size());
  for (std::size_t i = 0; i < want.scenes.size(); ++i) {
    const Scene& g = got.scenes[i];
    const Scene& w = want.scenes[i];
    CHECK(g.time == w.time);  // doubles round-trip exactly
    CHECK(g.cav_id == w.cav_id);
    REQUIRE(g.vehicles.size() == w.vehicles.size());
    for (std::size_t k = 0; k < w.vehicles.size(); ++k) {
      CHECK(g.vehicles[k].id == w.vehicles[k].id);
      CHECK(g.vehicles[k].lane == w.vehicles[k].lane);
      CHECK(g.vehicles[k].lon == w.vehicles[k].lon);
      CHECK(g.vehicles[k].lat == w.vehicles[k].lat);
      CHECK(g.vehicles[k].speed == w.vehicles[k].speed);
      CHECK(g.vehicles[k].heading == w.vehicles[k].heading);
      // Body size comes from the scenario-level constants.
      CHECK(g.vehicles[k].length == want.vehicle_length);
      CHECK(g.vehicles[k].width == want.vehicle_width);
    }
  }
  REQUIRE(got.actions.size() == want.actions.size());
  for (std::size_t i = 0; i < want.actions.size(); ++i) {
    CHECK(got.actions[i].time == want.actions[i].time);
    CHECK(got.actions[i].controlled_id == want.actions[i].controlled_id);
    CHECK(got.actions[i].action == want.actions[i].action);
    CHECK(got.actions[i].mask == want.actions[i].mask);
  }
  CHECK(got.crash.has_value() == want.crash.has_value());
  if (want.crash.has_value()) {
    CHECK(got.crash->time == want.crash->time);
    CHECK(got.crash->vehicle_a == want.crash->vehicle_a);
    CHECK(got.crash->vehicle_b == want.crash->vehicle_b);
    CHECK(got.crash->relative_heading == want.crash->relative_heading);
    CHECK(got.crash->contact_lon == want.crash->contact_lon);
    CHECK(got.crash->contact_lat == want.crash->contact_lat);
  }
}

std::filesystem::path temp_path(const char* stem) {
  return std::filesystem::temp_directory_path() /
         (std::string(stem) + std::to_string(::getpid()) + ".jsonl");
}

}  // namespace

TEST_CASE("scenario logs round-trip line by line") {
  Scenario plain = sample_scenario(17);
  Scenario crashed = sample_scenario(18);
  CrashEvent ev;
  ev.time = crashed.scenes.back().time;
  ev.vehicle_a = 0;
  ev.vehicle_b = 2;
  ev.relative_heading = -0.0625;
  ev.contact_lon = 4.4;
  ev.contact_lat = -0.3;
  crashed.crash = ev;

  std::ostringstream out;
  append_scenario(out, plain);
  append_scenario(out, crashed);
  // One JSON object per line.
  CHECK(std::count(out.str().begin(), out.str().end(), '\n') == 2);

  std::istringstream in(out.str());
  const std::vector<Scenario> got = read_scenarios(in);
  REQUIRE(got.size() == 2);
  check_equal(got[0], plain);
  check_equal(got[1], crashed);
}

TEST_CASE("serialization is deterministic") {
  const Scenario s = sample_scenario(99);
  std::ostringstream a, b;
  append_scenario(a, s);
  append_scenario(b, s);
  CHECK(a.str() == b.str());
}

TEST_CASE("corner-case records round-trip with their classification") {
  CornerCaseRecord rec;
  rec.scenario = sample_scenario(7);
  CrashEvent ev;
  ev.time = rec.scenario.scenes.back().time;
  ev.vehicle_a = 0;
  ev.vehicle_b = 1;
  ev.relative_heading = 0.25;
  ev.contact_lon = -4.75;
  ev.contact_lat = 0.125;
  rec.scenario.crash = ev;
  rec.crash = ev;
  rec.critical_bv = 1;
  rec.crash_type = 4;

  std::ostringstream out;
  append_corner_case(out, rec);
  append_corner_case(out, rec);
  std::istringstream in(out.str());
  const std::vector<CornerCaseRecord> got = read_corner_cases(in);
  REQUIRE(got.size() == 2);
  for (const CornerCaseRecord& g : got) {
    check_equal(g.scenario, rec.scenario);
    CHECK(g.critical_bv == 1);
    CHECK(g.crash_type == 4);
    CHECK(g.crash.time == ev.time);
    CHECK(g.crash.contact_lon == ev.contact_lon);
  }
}

TEST_CASE("structural violations are rejected on read") {
  // Scenario whose action count does not match its scene count.
  Scenario bad_counts = sample_scenario(1);
  bad_counts.actions.pop_back();
  std::ostringstream out1;
  append_scenario(out1, bad_counts);
  std::istringstream in1(out1.str());
  CHECK_THROWS_AS(read_scenarios(in1), std::runtime_error);

  // Unknown mode label.
  Scenario bad_mode = sample_scenario(2);
  bad_mode.mode = "offroad";
  std::ostringstream out2;
  append_scenario(out2, bad_mode);
  std::istringstream in2(out2.str());
  CHECK_THROWS_AS(read_scenarios(in2), std::runtime_error);

  // Unsupported version.
  Scenario versioned = sample_scenario(3);
  std::ostringstream out3;
  append_scenario(out3, versioned);
  std::string text = out3.str();
  const auto pos = text.find("\"version\":1");
  REQUIRE(pos != std::string::npos);
  text.replace(pos, 11, "\"version\":9");
  std::istringstream in3(text);
  CHECK_THROWS_AS(read_scenarios(in3), std::runtime_error);

  // Corner case whose scenario never crashed.
  CornerCaseRecord rec;
  rec.scenario = sample_scenario(4);
  rec.critical_bv = 1;
  rec.crash_type = 2;
  std::ostringstream out4;
  append_corner_case(out4, rec);
  std::istringstream in4(out4.str());
  CHECK_THROWS_AS(read_corner_cases(in4), std::runtime_error);

  // Crash type outside the taxonomy.
  CornerCaseRecord typed = rec;
  typed.scenario.crash = CrashEvent{};
  typed.crash_type = 6;
  std::ostringstream out5;
  append_corner_case(out5, typed);
  std::istringstream in5(out5.str());
  CHECK_THROWS_AS(read_corner_cases(in5), std::runtime_error);

  // The tracked background vehicle cannot be the vehicle under test.
  CornerCaseRecord self = rec;
  self.scenario.crash = CrashEvent{};
  self.crash_type = 1;
  self.critical_bv = self.scenario.scenes.front().cav_id;
  std::ostringstream out6;
  append_corner_case(out6, self);
  std::istringstream in6(out6.str());
  CHECK_THROWS_AS(read_corner_cases(in6), std::runtime_error);
}

TEST_CASE("parse errors carry the line number") {
  std::istringstream in("this is not json\n");
  try {
    read_scenarios(in);
    FAIL("expected a parse failure");
  } catch (const std::runtime_error& e) {
    CHECK(std::string(e.what()).find("line 1") != std::string::npos);
  }

  // A valid line followed by a broken one points at line 2.
  std::ostringstream out;
  append_scenario(out, sample_scenario(5));
  std::string text = out.str() + "{\"truncated\":\n";
  std::istringstream in2(text);
  try {
    read_scenarios(in2);
    FAIL("expected a parse failure");
  } catch (const std::runtime_error& e) {
    CHECK(std::string(e.what()).find("line 2") != std::string::npos);
  }
}

TEST_CASE("file loaders distinguish missing inputs from bad content") {
  CHECK_THROWS_AS(load_scenarios("/nonexistent/scenarios.jsonl"),
                  MissingInputError);
  CHECK_THROWS_AS(load_corner_cases("/nonexistent/cases.jsonl"),
                  MissingInputError);

  const auto path = temp_path("avs_scenarios_");
  {
    std::ofstream out(path);
    append_scenario(out, sample_scenario(21));
    append_scenario(out, sample_scenario(22));
  }
  const std::vector<Scenario> got = load_scenarios(path.string());
  REQUIRE(got.size() == 2);
  CHECK(got[0].seed == 21);
  CHECK(got[1].seed == 22);
  std::filesystem::remove(path);
}
