#include "compnav/world.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <set>

namespace compnav {
namespace {

json minimal_doc() {
  json doc;
  doc["grid"] = {{"width", 10}, {"height", 10}, {"cell_size", 0.25}, {"obstacles", json::array()}};
  json inst;
  inst["id"] = "cabinet-0";
  inst["category"] = "cabinet";
  inst["footprint"] = {{5, 5}};
  inst["attributes"] = {{{"attribute", "color"},
                         {"value", "blue"},
                         {"phrase", "a blue finish"},
                         {"visible_sectors", {0, 1, 2, 3, 4, 5, 6, 7}}}};
  inst["is_target"] = true;
  doc["instances"] = {inst};
  doc["start"] = {{"x", 0.375}, {"y", 0.375}, {"heading_deg", 0.0}};
  doc["horizon"] = 500;
  doc["success_radius_m"] = 1.0;
  return doc;
}

InstanceSpec make_instance(const std::string& id, std::vector<Cell> cells, bool target,
                           const std::string& category = "cabinet") {
  InstanceSpec inst;
  inst.id = id;
  inst.category = category;
  std::sort(cells.begin(), cells.end());
  inst.footprint = std::move(cells);
  InstanceAttribute a;
  a.value = {"color", "blue", "a blue finish"};
  a.visible_mask = 0xff;
  inst.attributes.push_back(a);
  inst.is_target = target;
  return inst;
}

Scenario open_room(int w, int h, std::vector<InstanceSpec> instances, Vec2 start,
                   double heading_deg = 0.0) {
  Scenario s;
  s.grid = OccupancyGrid(w, h, 0.25);
  s.instances = std::move(instances);
  s.start = {start, deg_to_rad(heading_deg)};
  s.horizon = 500;
  s.success_radius = 1.0;
  return s;
}

TEST(ScenarioIO, MinimalSingleInstance) {
  Scenario s = load_scenario(minimal_doc());
  EXPECT_EQ(s.instances.size(), 1u);
  EXPECT_EQ(s.target().id, "cabinet-0");
  int same_category = 0;
  for (const auto& inst : s.instances)
    if (inst.category == s.target_category()) ++same_category;
  EXPECT_EQ(same_category, 1);  // |O_c| = 1, no distractors
}

TEST(ScenarioIO, MultipleTargetsRejected) {
  json doc = minimal_doc();
  json second = doc["instances"][0];
  second["id"] = "cabinet-1";
  second["footprint"] = {{7, 7}};
  doc["instances"].push_back(second);
  try {
    load_scenario(doc);
    FAIL() << "expected ScenarioError";
  } catch (const ScenarioError& e) {
    EXPECT_NE(std::string(e.what()).find("multiple targets"), std::string::npos);
  }
}

TEST(ScenarioIO, ZeroTargetsRejected) {
  json doc = minimal_doc();
  doc["instances"][0]["is_target"] = false;
  EXPECT_THROW(load_scenario(doc), ScenarioError);
}

TEST(ScenarioIO, FootprintOutOfBoundsRejected) {
  json doc = minimal_doc();
  doc["instances"][0]["footprint"] = {{12, 5}};
  EXPECT_THROW(load_scenario(doc), ScenarioError);
}

TEST(ScenarioIO, StartInObstacleRejected) {
  json doc = minimal_doc();
  doc["grid"]["obstacles"] = {{1, 1}};
  EXPECT_THROW(load_scenario(doc), ScenarioError);
}

TEST(ScenarioIO, LongPhraseRejected) {
  json doc = minimal_doc();
  doc["instances"][0]["attributes"][0]["phrase"] = "one two three four five six seven eight nine ten eleven";
  EXPECT_THROW(load_scenario(doc), ScenarioError);
}

TEST(ScenarioIO, RoundTrip) {
  Scenario s = open_room(16, 12,
                         {make_instance("a", {{4, 4}, {5, 4}}, true),
                          make_instance("b", {{10, 8}}, false)},
                         {0.625, 0.625}, 30.0);
  s.grid.set({8, 3}, CellState::Obstacle);
  s.grid.set({8, 4}, CellState::Obstacle);
  Scenario back = load_scenario(save_scenario(s));
  EXPECT_TRUE(back == s);
}

TEST(Environment, TurnPairRestoresHeading) {
  Scenario s = open_room(10, 10, {make_instance("a", {{8, 8}}, true)}, {0.625, 0.625});
  Environment env(s);
  const double h0 = env.pose().heading;
  env.step(Action::TurnLeft);
  env.step(Action::TurnRight);
  EXPECT_EQ(env.pose().heading, h0);
}

TEST(Environment, BlockedMoveKeepsPose) {
  Scenario s = open_room(10, 10, {make_instance("a", {{8, 8}}, true)}, {1.375, 1.375});
  s.grid.set({6, 5}, CellState::Obstacle);  // agent cell is (5,5), facing +x
  Environment env(s);
  const Vec2 before = env.pose().position;
  Observation obs = env.step(Action::MoveForward);
  EXPECT_EQ(env.pose().position, before);
  EXPECT_FALSE(obs.revealed_obstacle.empty());
  EXPECT_EQ(env.known_map().at({6, 5}), CellState::Obstacle);
}

TEST(Environment, HorizonTermination) {
  Scenario s = open_room(10, 10, {make_instance("a", {{8, 8}}, true)}, {0.625, 0.625});
  Environment env(s);
  for (int i = 0; i < 500; ++i) env.step(Action::TurnLeft);
  EXPECT_EQ(env.status(), EpisodeStatus::HorizonReached);
  EXPECT_THROW(env.step(Action::TurnLeft), std::logic_error);
}

TEST(Environment, SenseDetectsAhead) {
  Scenario s = open_room(20, 12, {make_instance("a", {{10, 4}, {11, 4}}, true)},
                         {1.125, 1.125});  // cell (4,4), facing +x
  Environment env(s);
  Observation obs = env.observe();
  ASSERT_EQ(obs.detections.size(), 1u);
  EXPECT_EQ(obs.detections[0].instance_id, "a");
  EXPECT_FALSE(obs.detections[0].cells.empty());
}

TEST(Environment, SenseMissesOutsideCone) {
  Scenario s = open_room(20, 20, {make_instance("a", {{4, 10}}, true)},
                         {1.125, 1.125});  // instance is 90 degrees off the +x heading
  Environment env(s);
  Observation obs = env.observe();
  EXPECT_TRUE(obs.detections.empty());
}

TEST(Environment, SenseOccludedByWall) {
  // Hand-constructed 12x12 map: wall column at x=7 covering the ray fan.
  Scenario s = open_room(20, 12, {make_instance("a", {{10, 4}}, true)}, {1.125, 1.125});
  for (int y = 2; y <= 7; ++y) s.grid.set({7, y}, CellState::Obstacle);
  Environment env(s);
  Observation obs = env.observe();
  EXPECT_TRUE(obs.detections.empty());
  bool wall_revealed = false;
  for (const Cell& c : obs.revealed_obstacle)
    if (c.x == 7) wall_revealed = true;
  EXPECT_TRUE(wall_revealed);
}

TEST(Environment, AdjudicateWithinRadius) {
  // Target footprint cell (10,10): center (2.625, 2.625).
  Scenario s = open_room(20, 20, {make_instance("a", {{10, 10}}, true)}, {3.125, 2.625});
  Environment env(s);
  env.step(Action::Stop);
  EXPECT_TRUE(env.adjudicate());  // 0.5 m away
}

TEST(Environment, AdjudicateClosedBoundary) {
  Scenario s = open_room(20, 20, {make_instance("a", {{10, 10}}, true)}, {3.625, 2.625});
  Environment env(s);
  env.step(Action::Stop);
  EXPECT_TRUE(env.adjudicate());  // exactly r = 1.0 m
}

TEST(Environment, HorizonEndIsFailure) {
  Scenario s = open_room(10, 10, {make_instance("a", {{8, 8}}, true)}, {2.125, 2.125});
  s.horizon = 3;
  Environment env(s);
  env.step(Action::TurnLeft);
  env.step(Action::TurnLeft);
  env.step(Action::TurnLeft);
  EXPECT_EQ(env.status(), EpisodeStatus::HorizonReached);
  EXPECT_FALSE(env.adjudicate());
}

TEST(Environment, AdjudicateMatchesBruteForce) {
  Scenario s = open_room(24, 24,
                         {make_instance("a", {{12, 12}, {13, 12}, {12, 13}}, true)},
                         {0.625, 0.625});
  SplitMix64 rng(7);
  for (int trial = 0; trial < 200; ++trial) {
    Vec2 p{rng.uniform01() * 6.0, rng.uniform01() * 6.0};
    double best = std::numeric_limits<double>::infinity();
    for (const Cell& c : s.target().footprint)
      best = std::min(best, distance(p, s.grid.center_of(c)));
    EXPECT_EQ(Environment::within_success_radius(p, s), best <= s.success_radius);
  }
}

TEST(ShortestPath, CorridorHandCount) {
  // 14x3 corridor along y=1; start cell (2,1), target cell (8,1), r=0.25:
  // nearest goal cell is (7,1), five orthogonal moves from the start.
  Scenario s;
  s.grid = OccupancyGrid(14, 3, 0.25, CellState::Obstacle);
  for (int x = 1; x <= 12; ++x) s.grid.set({x, 1}, CellState::Free);
  s.instances = {make_instance("a", {{8, 1}}, true)};
  s.start = {{0.625, 0.375}, 0.0};
  s.horizon = 500;
  s.success_radius = 0.25;
  auto len = shortest_path_length(s, s.start);
  ASSERT_TRUE(len.has_value());
  EXPECT_NEAR(*len, 1.25, 1e-12);
}

TEST(ShortestPath, AlreadyWithinRadius) {
  Scenario s = open_room(20, 20, {make_instance("a", {{10, 10}}, true)}, {2.375, 2.625});
  auto len = shortest_path_length(s, s.start);
  ASSERT_TRUE(len.has_value());
  EXPECT_EQ(*len, 0.0);
}

TEST(ShortestPath, WalledOffUnreachable) {
  Scenario s;
  s.grid = OccupancyGrid(14, 3, 0.25, CellState::Obstacle);
  for (int x = 1; x <= 12; ++x) s.grid.set({x, 1}, CellState::Free);
  s.grid.set({5, 1}, CellState::Obstacle);
  s.instances = {make_instance("a", {{8, 1}}, true)};
  s.start = {{0.625, 0.375}, 0.0};
  s.horizon = 500;
  s.success_radius = 0.25;
  EXPECT_FALSE(shortest_path_length(s, s.start).has_value());
}

TEST(Environment, DeterministicObservationStream) {
  Scenario s = open_room(20, 20,
                         {make_instance("a", {{10, 10}}, true), make_instance("b", {{4, 14}}, false)},
                         {1.125, 1.125});
  auto run = [&]() {
    Environment env(s);
    json all = json::array();
    auto dump = [&](const Observation& o) {
      json j;
      j["nfree"] = o.revealed_free.size();
      j["nobst"] = o.revealed_obstacle.size();
      for (const auto& d : o.detections) {
        json jd = {{"id", d.instance_id}, {"sector", d.sector}};
        for (const Cell& c : d.cells) jd["cells"].push_back({c.x, c.y});
        j["det"].push_back(jd);
      }
      all.push_back(j);
    };
    dump(env.observe());
    const Action script[] = {Action::MoveForward, Action::TurnLeft, Action::MoveForward,
                             Action::MoveForward, Action::TurnRight, Action::MoveForward};
    for (Action a : script)
      for (int rep = 0; rep < 8; ++rep) dump(env.step(a));
    return all.dump();
  };
  EXPECT_EQ(run(), run());
}

TEST(Environment, KnownMapMonotone) {
  Scenario s = open_room(20, 20, {make_instance("a", {{10, 10}}, true)}, {1.125, 1.125});
  Environment env(s);
  env.observe();
  OccupancyGrid prev = env.known_map();
  SplitMix64 rng(3);
  for (int i = 0; i < 120; ++i) {
    Action a = static_cast<Action>(rng.below(3));
    env.step(a);
    const OccupancyGrid& now = env.known_map();
    for (int y = 0; y < now.height(); ++y)
      for (int x = 0; x < now.width(); ++x) {
        if (prev.at({x, y}) != CellState::Unknown)
          ASSERT_EQ(prev.at({x, y}), now.at({x, y}));
      }
    prev = now;
  }
}

// Independent line-of-sight oracle: fine-step marching along a ray, returns
// the first non-free cell or nullopt.
std::optional<Cell> march_first_hit(const Scenario& s, const Environment& env, Vec2 from,
                                    double angle, double range) {
  const double step = 0.001;
  const Cell start = s.grid.cell_of(from);
  for (double t = step; t <= range; t += step) {
    Vec2 p{from.x + t * std::cos(angle), from.y + t * std::sin(angle)};
    Cell c = s.grid.cell_of(p);
    if (!s.grid.in_bounds(c)) return std::nullopt;
    if (c == start) continue;
    if (s.grid.at(c) == CellState::Obstacle || env.instance_index_at(c) >= 0) return c;
  }
  return std::nullopt;
}

TEST(Environment, FovSoundnessAudit) {
  SplitMix64 rng(11);
  for (int map_i = 0; map_i < 6; ++map_i) {
    Scenario s = open_room(20, 20, {}, {0, 0});
    for (int k = 0; k < 30; ++k)
      s.grid.set({rng.range(0, 19), rng.range(0, 19)}, CellState::Obstacle);
    std::vector<Cell> inst_cells;
    auto place = [&]() {
      while (true) {
        Cell c{rng.range(2, 17), rng.range(2, 17)};
        if (s.grid.at(c) == CellState::Free &&
            std::find(inst_cells.begin(), inst_cells.end(), c) == inst_cells.end()) {
          inst_cells.push_back(c);
          return c;
        }
      }
    };
    s.instances = {make_instance("a", {place()}, true), make_instance("b", {place()}, false)};
    while (true) {
      Cell c{rng.range(0, 19), rng.range(0, 19)};
      if (s.grid.at(c) == CellState::Free &&
          std::find(inst_cells.begin(), inst_cells.end(), c) == inst_cells.end()) {
        s.start = {s.grid.center_of(c), 0.0};
        break;
      }
    }
    Environment env(s);

    for (int pose_i = 0; pose_i < 10; ++pose_i) {
      AgentPose pose{s.start.position, deg_to_rad(rng.range(0, 11) * 30.0)};
      Observation obs = env.sense(pose);
      for (const auto& det : obs.detections) {
        const InstanceSpec* inst = nullptr;
        for (const auto& i : s.instances)
          if (i.id == det.instance_id) inst = &i;
        ASSERT_NE(inst, nullptr);
        EXPECT_EQ(det.sector, bearing_sector(inst->centroid(0.25), pose.position));
        for (const Cell& c : det.cells) {
          ASSERT_TRUE(std::find(inst->footprint.begin(), inst->footprint.end(), c) !=
                      inst->footprint.end());
          bool witnessed = false;
          for (int d = -15; d <= 15 && !witnessed; ++d)
            for (double off : {-0.01, 0.0, 0.01}) {
              auto hit = march_first_hit(s, env, pose.position,
                                         pose.heading + deg_to_rad(d + off), 5.0);
              if (hit && *hit == c) {
                witnessed = true;
                break;
              }
            }
          EXPECT_TRUE(witnessed) << "cell (" << c.x << "," << c.y << ") not witnessed";
        }
      }
    }
  }
}

}  // namespace
}  // namespace compnav
