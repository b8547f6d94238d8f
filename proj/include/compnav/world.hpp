#pragma once

#include <algorithm>
#include <map>
#include <optional>
#include <queue>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "compnav/geometry.hpp"

namespace compnav {

using json = nlohmann::ordered_json;

enum class CellState : std::uint8_t { Free = 0, Obstacle = 1, Unknown = 2 };

class ScenarioError : public std::runtime_error {
 public:
  explicit ScenarioError(const std::string& what) : std::runtime_error(what) {}
};

class OccupancyGrid {
 public:
  OccupancyGrid() = default;
  OccupancyGrid(int width, int height, double cell_size, CellState fill = CellState::Free)
      : width_(width), height_(height), cell_size_(cell_size),
        cells_(static_cast<std::size_t>(width) * height, fill) {
    if (width < 1 || height < 1) throw ScenarioError("grid dimensions must be >= 1");
    if (cell_size <= 0.0) throw ScenarioError("cell_size must be > 0");
  }

  int width() const { return width_; }
  int height() const { return height_; }
  double cell_size() const { return cell_size_; }

  bool in_bounds(const Cell& c) const {
    return c.x >= 0 && c.y >= 0 && c.x < width_ && c.y < height_;
  }

  CellState at(const Cell& c) const { return cells_[index(c)]; }
  void set(const Cell& c, CellState s) { cells_[index(c)] = s; }

  Cell cell_of(const Vec2& p) const {
    return {static_cast<int>(std::floor(p.x / cell_size_)),
            static_cast<int>(std::floor(p.y / cell_size_))};
  }
  Vec2 center_of(const Cell& c) const {
    return {(c.x + 0.5) * cell_size_, (c.y + 0.5) * cell_size_};
  }

  std::size_t count(CellState s) const {
    return static_cast<std::size_t>(std::count(cells_.begin(), cells_.end(), s));
  }

  bool operator==(const OccupancyGrid& o) const {
    return width_ == o.width_ && height_ == o.height_ && cell_size_ == o.cell_size_ &&
           cells_ == o.cells_;
  }

 private:
  std::size_t index(const Cell& c) const {
    if (!in_bounds(c)) throw ScenarioError("cell out of bounds");
    return static_cast<std::size_t>(c.y) * width_ + c.x;
  }

  int width_ = 0;
  int height_ = 0;
  double cell_size_ = 0.25;
  std::vector<CellState> cells_;
};

struct AttributeValue {
  std::string attribute;
  std::string value;
  std::string phrase;

  bool operator==(const AttributeValue& o) const {
    return attribute == o.attribute && value == o.value && phrase == o.phrase;
  }
  bool operator<(const AttributeValue& o) const {
    if (attribute != o.attribute) return attribute < o.attribute;
    if (value != o.value) return value < o.value;
    return phrase < o.phrase;
  }
  std::string token() const { return attribute + "=" + value; }
};

inline bool same_pair(const AttributeValue& a, const AttributeValue& b) {
  return a.attribute == b.attribute && a.value == b.value;
}

inline int count_words(const std::string& s) {
  std::istringstream in(s);
  std::string w;
  int n = 0;
  while (in >> w) ++n;
  return n;
}

inline constexpr int kSectors = 8;

struct InstanceAttribute {
  AttributeValue value;
  std::uint8_t visible_mask = 0xff;  // bit per bearing sector

  bool visible_from(int sector) const { return (visible_mask >> sector) & 1; }
  bool operator==(const InstanceAttribute& o) const {
    return value == o.value && visible_mask == o.visible_mask;
  }
};

struct InstanceSpec {
  std::string id;
  std::string category;
  std::vector<Cell> footprint;  // sorted
  std::vector<InstanceAttribute> attributes;
  bool is_target = false;

  Vec2 centroid(double cell_size) const {
    Vec2 s{0, 0};
    for (const Cell& c : footprint) {
      s.x += (c.x + 0.5) * cell_size;
      s.y += (c.y + 0.5) * cell_size;
    }
    s.x /= footprint.size();
    s.y /= footprint.size();
    return s;
  }

  std::vector<AttributeValue> attribute_values() const {
    std::vector<AttributeValue> out;
    out.reserve(attributes.size());
    for (const auto& a : attributes) out.push_back(a.value);
    return out;
  }

  bool operator==(const InstanceSpec& o) const {
    return id == o.id && category == o.category && footprint == o.footprint &&
           attributes == o.attributes && is_target == o.is_target;
  }
};

struct AgentPose {
  Vec2 position;
  double heading = 0.0;  // radians, 0 = +x, counter-clockwise
};

enum class Action { MoveForward, TurnLeft, TurnRight, Stop };

inline const char* action_name(Action a) {
  switch (a) {
    case Action::MoveForward: return "move_forward";
    case Action::TurnLeft: return "turn_left";
    case Action::TurnRight: return "turn_right";
    case Action::Stop: return "stop";
  }
  return "?";
}

enum class EpisodeStatus { Active, StoppedByAgent, HorizonReached };

// Bearing sector of the agent as seen from the instance centroid, quantized
// into 8 slices of 45 degrees.
inline int bearing_sector(const Vec2& instance_centroid, const Vec2& agent_pos) {
  double theta = std::atan2(agent_pos.y - instance_centroid.y, agent_pos.x - instance_centroid.x);
  if (theta < 0) theta += 2.0 * kPi;
  int s = static_cast<int>(std::floor(theta / (kPi / 4.0)));
  return std::min(s, kSectors - 1);
}

struct Detection {
  std::string instance_id;
  std::string category;
  std::vector<Cell> cells;  // visible footprint cells, sorted
  int sector = 0;
  std::vector<AttributeValue> revealed;  // attributes visible from this sector
};

struct Observation {
  std::vector<Detection> detections;          // ordered by instance id
  std::vector<Cell> revealed_free;            // sorted
  std::vector<Cell> revealed_obstacle;        // sorted (includes instance cells)
};

struct Scenario {
  OccupancyGrid grid;
  std::vector<InstanceSpec> instances;
  AgentPose start;
  int horizon = 500;
  double success_radius = 1.0;

  const InstanceSpec& target() const {
    for (const auto& inst : instances)
      if (inst.is_target) return inst;
    throw ScenarioError("scenario has no target");
  }

  std::string target_category() const { return target().category; }

  bool operator==(const Scenario& o) const {
    return grid == o.grid && instances == o.instances &&
           start.position == o.start.position && start.heading == o.start.heading &&
           horizon == o.horizon && success_radius == o.success_radius;
  }
};

struct WorldConfig {
  double stride_m = 0.25;
  double turn_increment_deg = 30.0;
  double sensing_range_m = 5.0;
  double fov_deg = 30.0;
};

// ---------------------------------------------------------------------------
// Scenario document I/O
// ---------------------------------------------------------------------------

inline json save_scenario(const Scenario& s) {
  json doc;
  json grid;
  grid["width"] = s.grid.width();
  grid["height"] = s.grid.height();
  grid["cell_size"] = s.grid.cell_size();
  json obstacles = json::array();
  for (int y = 0; y < s.grid.height(); ++y)
    for (int x = 0; x < s.grid.width(); ++x)
      if (s.grid.at({x, y}) == CellState::Obstacle) obstacles.push_back({x, y});
  grid["obstacles"] = std::move(obstacles);
  doc["grid"] = std::move(grid);

  json instances = json::array();
  for (const auto& inst : s.instances) {
    json ji;
    ji["id"] = inst.id;
    ji["category"] = inst.category;
    json fp = json::array();
    for (const Cell& c : inst.footprint) fp.push_back({c.x, c.y});
    ji["footprint"] = std::move(fp);
    json attrs = json::array();
    for (const auto& a : inst.attributes) {
      json ja;
      ja["attribute"] = a.value.attribute;
      ja["value"] = a.value.value;
      ja["phrase"] = a.value.phrase;
      json sectors = json::array();
      for (int sct = 0; sct < kSectors; ++sct)
        if (a.visible_from(sct)) sectors.push_back(sct);
      ja["visible_sectors"] = std::move(sectors);
      attrs.push_back(std::move(ja));
    }
    ji["attributes"] = std::move(attrs);
    ji["is_target"] = inst.is_target;
    instances.push_back(std::move(ji));
  }
  doc["instances"] = std::move(instances);

  json start;
  start["x"] = s.start.position.x;
  start["y"] = s.start.position.y;
  start["heading_deg"] = rad_to_deg(s.start.heading);
  doc["start"] = std::move(start);
  doc["horizon"] = s.horizon;
  doc["success_radius_m"] = s.success_radius;
  return doc;
}

inline Scenario load_scenario(const json& doc) {
  auto require = [&](const json& j, const char* key) -> const json& {
    if (!j.contains(key)) throw ScenarioError(std::string("missing field: ") + key);
    return j.at(key);
  };

  Scenario s;
  const json& jg = require(doc, "grid");
  const int w = require(jg, "width").get<int>();
  const int h = require(jg, "height").get<int>();
  const double cs = require(jg, "cell_size").get<double>();
  if (w < 1 || h < 1) throw ScenarioError("grid dimensions must be >= 1");
  if (cs <= 0.0) throw ScenarioError("cell_size must be > 0");
  s.grid = OccupancyGrid(w, h, cs);

  for (const auto& jo : require(jg, "obstacles")) {
    Cell c{jo.at(0).get<int>(), jo.at(1).get<int>()};
    if (!s.grid.in_bounds(c)) throw ScenarioError("obstacle out of bounds");
    s.grid.set(c, CellState::Obstacle);
  }

  std::set<Cell> occupied;
  int targets = 0;
  for (const auto& ji : require(doc, "instances")) {
    InstanceSpec inst;
    inst.id = require(ji, "id").get<std::string>();
    inst.category = require(ji, "category").get<std::string>();
    for (const auto& jc : require(ji, "footprint")) {
      Cell c{jc.at(0).get<int>(), jc.at(1).get<int>()};
      if (!s.grid.in_bounds(c))
        throw ScenarioError("footprint out of bounds for instance " + inst.id);
      if (s.grid.at(c) == CellState::Obstacle)
        throw ScenarioError("footprint overlaps an obstacle for instance " + inst.id);
      if (!occupied.insert(c).second)
        throw ScenarioError("footprint overlaps another instance at " + inst.id);
      inst.footprint.push_back(c);
    }
    if (inst.footprint.empty()) throw ScenarioError("empty footprint for instance " + inst.id);
    std::sort(inst.footprint.begin(), inst.footprint.end());

    for (const auto& ja : require(ji, "attributes")) {
      InstanceAttribute a;
      a.value.attribute = require(ja, "attribute").get<std::string>();
      a.value.value = require(ja, "value").get<std::string>();
      a.value.phrase = require(ja, "phrase").get<std::string>();
      if (a.value.attribute.empty() || a.value.value.empty())
        throw ScenarioError("attribute and value must be non-empty");
      if (count_words(a.value.phrase) > 10)
        throw ScenarioError("attribute phrase longer than 10 words: " + a.value.phrase);
      a.visible_mask = 0;
      for (const auto& js : require(ja, "visible_sectors")) {
        int sct = js.get<int>();
        if (sct < 0 || sct >= kSectors) throw ScenarioError("visible sector out of range");
        a.visible_mask |= static_cast<std::uint8_t>(1u << sct);
      }
      inst.attributes.push_back(std::move(a));
    }
    inst.is_target = require(ji, "is_target").get<bool>();
    targets += inst.is_target ? 1 : 0;
    s.instances.push_back(std::move(inst));
  }
  if (targets == 0) throw ScenarioError("no target instance");
  if (targets > 1) throw ScenarioError("multiple targets");

  const json& jst = require(doc, "start");
  s.start.position = {require(jst, "x").get<double>(), require(jst, "y").get<double>()};
  s.start.heading = deg_to_rad(require(jst, "heading_deg").get<double>());
  s.horizon = require(doc, "horizon").get<int>();
  if (s.horizon < 1) throw ScenarioError("horizon must be >= 1");
  s.success_radius = require(doc, "success_radius_m").get<double>();
  if (s.success_radius <= 0.0) throw ScenarioError("success radius must be > 0");

  Cell start_cell = s.grid.cell_of(s.start.position);
  if (!s.grid.in_bounds(start_cell)) throw ScenarioError("start pose out of bounds");
  if (s.grid.at(start_cell) == CellState::Obstacle || occupied.count(start_cell))
    throw ScenarioError("start pose in obstacle");
  return s;
}

// ---------------------------------------------------------------------------
// Environment
// ---------------------------------------------------------------------------

class Environment {
 public:
  explicit Environment(Scenario scenario, WorldConfig cfg = {})
      : scn_(std::move(scenario)), cfg_(cfg),
        known_(scn_.grid.width(), scn_.grid.height(), scn_.grid.cell_size(), CellState::Unknown),
        instance_at_(static_cast<std::size_t>(scn_.grid.width()) * scn_.grid.height(), -1) {
    for (std::size_t i = 0; i < scn_.instances.size(); ++i)
      for (const Cell& c : scn_.instances[i].footprint)
        instance_at_[static_cast<std::size_t>(c.y) * scn_.grid.width() + c.x] =
            static_cast<int>(i);
    pose_ = scn_.start;
  }

  const Scenario& scenario() const { return scn_; }
  const WorldConfig& config() const { return cfg_; }
  const OccupancyGrid& known_map() const { return known_; }
  const AgentPose& pose() const { return pose_; }
  int steps() const { return steps_; }
  EpisodeStatus status() const { return status_; }
  double traveled_length() const { return traveled_; }

  int instance_index_at(const Cell& c) const {
    if (!scn_.grid.in_bounds(c)) return -1;
    return instance_at_[static_cast<std::size_t>(c.y) * scn_.grid.width() + c.x];
  }

  bool traversable(const Cell& c) const {
    return scn_.grid.in_bounds(c) && scn_.grid.at(c) == CellState::Free &&
           instance_index_at(c) < 0;
  }

  // Casts rays over the field-of-view cone at 1 degree resolution; pure.
  Observation sense(const AgentPose& pose) const {
    Observation obs;
    std::set<Cell> free_cells, obstacle_cells;
    std::map<int, std::set<Cell>> hits;  // instance index -> visible cells

    const int half = static_cast<int>(cfg_.fov_deg / 2.0);
    const Cell origin_cell = scn_.grid.cell_of(pose.position);
    for (int d = -half; d <= half; ++d) {
      const double angle = pose.heading + deg_to_rad(d);
      raycast(pose.position, angle, cfg_.sensing_range_m, scn_.grid.cell_size(),
              [&](const Cell& c, double) {
                if (!scn_.grid.in_bounds(c)) return false;
                if (c == origin_cell) return true;
                const int inst = instance_index_at(c);
                if (inst >= 0) {
                  hits[inst].insert(c);
                  obstacle_cells.insert(c);
                  return false;
                }
                if (scn_.grid.at(c) == CellState::Obstacle) {
                  obstacle_cells.insert(c);
                  return false;
                }
                free_cells.insert(c);
                return true;
              });
    }

    for (const auto& [idx, cells] : hits) {
      const InstanceSpec& inst = scn_.instances[idx];
      Detection det;
      det.instance_id = inst.id;
      det.category = inst.category;
      det.cells.assign(cells.begin(), cells.end());
      det.sector = bearing_sector(inst.centroid(scn_.grid.cell_size()), pose.position);
      for (const auto& a : inst.attributes)
        if (a.visible_from(det.sector)) det.revealed.push_back(a.value);
      std::sort(det.revealed.begin(), det.revealed.end());
      obs.detections.push_back(std::move(det));
    }
    std::sort(obs.detections.begin(), obs.detections.end(),
              [](const Detection& a, const Detection& b) { return a.instance_id < b.instance_id; });

    obs.revealed_free.assign(free_cells.begin(), free_cells.end());
    obs.revealed_obstacle.assign(obstacle_cells.begin(), obstacle_cells.end());
    return obs;
  }

  // Applies an observation to the agent-known map. Cells only ever go from
  // unknown to free/obstacle (monotone refinement).
  void integrate(const Observation& obs) {
    for (const Cell& c : obs.revealed_free)
      if (known_.at(c) == CellState::Unknown) known_.set(c, CellState::Free);
    for (const Cell& c : obs.revealed_obstacle)
      if (known_.at(c) == CellState::Unknown) known_.set(c, CellState::Obstacle);
    Cell here = known_.cell_of(pose_.position);
    if (known_.at(here) == CellState::Unknown) known_.set(here, CellState::Free);
  }

  // Sense at the current pose and fold the result into the known map.
  Observation observe() {
    Observation obs = sense(pose_);
    integrate(obs);
    return obs;
  }

  Observation step(Action action) {
    if (status_ != EpisodeStatus::Active)
      throw std::logic_error("step() called after episode termination");

    switch (action) {
      case Action::MoveForward: {
        const Vec2 dir{std::cos(pose_.heading), std::sin(pose_.heading)};
        const Vec2 next = pose_.position + dir * cfg_.stride_m;
        bool blocked = false;
        Cell block_cell{};
        raycast(pose_.position, pose_.heading, cfg_.stride_m, scn_.grid.cell_size(),
                [&](const Cell& c, double) {
                  if (c == scn_.grid.cell_of(pose_.position)) return true;
                  if (!traversable(c)) {
                    blocked = true;
                    block_cell = c;
                    return false;
                  }
                  return true;
                });
        if (!blocked && !traversable(scn_.grid.cell_of(next))) {
          blocked = true;
          block_cell = scn_.grid.cell_of(next);
        }
        if (blocked) {
          // Bump feedback: the blocking cell becomes known.
          if (scn_.grid.in_bounds(block_cell) && known_.at(block_cell) == CellState::Unknown)
            known_.set(block_cell, CellState::Obstacle);
        } else {
          pose_.position = next;
          traveled_ += cfg_.stride_m;
        }
        break;
      }
      case Action::TurnLeft:
        pose_.heading = wrap_angle(pose_.heading + deg_to_rad(cfg_.turn_increment_deg));
        break;
      case Action::TurnRight:
        pose_.heading = wrap_angle(pose_.heading - deg_to_rad(cfg_.turn_increment_deg));
        break;
      case Action::Stop:
        status_ = EpisodeStatus::StoppedByAgent;
        break;
    }

    ++steps_;
    if (status_ == EpisodeStatus::Active && steps_ >= scn_.horizon)
      status_ = EpisodeStatus::HorizonReached;
    return observe();
  }

  // Success adjudication for the final pose; only meaningful once the agent
  // stopped. Distance is measured to the nearest target footprint cell center.
  bool adjudicate() const {
    if (status_ != EpisodeStatus::StoppedByAgent) return false;
    return within_success_radius(pose_.position, scn_);
  }

  static bool within_success_radius(const Vec2& p, const Scenario& s) {
    const InstanceSpec& target = s.target();
    for (const Cell& c : target.footprint)
      if (distance(p, s.grid.center_of(c)) <= s.success_radius) return true;
    return false;
  }

 private:
  Scenario scn_;
  WorldConfig cfg_;
  OccupancyGrid known_;
  std::vector<int> instance_at_;
  AgentPose pose_;
  int steps_ = 0;
  double traveled_ = 0.0;
  EpisodeStatus status_ = EpisodeStatus::Active;
};

// Shortest 8-connected path (diagonal cost sqrt(2) * cell_size) from the
// start pose to the nearest free cell whose center lies within the success
// radius of the target footprint. Returns nullopt when unreachable.
inline std::optional<double> shortest_path_length(const Scenario& s, const AgentPose& from) {
  const OccupancyGrid& g = s.grid;
  const int w = g.width(), h = g.height();
  std::vector<char> blocked(static_cast<std::size_t>(w) * h, 0);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x)
      if (g.at({x, y}) == CellState::Obstacle) blocked[static_cast<std::size_t>(y) * w + x] = 1;
  for (const auto& inst : s.instances)
    for (const Cell& c : inst.footprint) blocked[static_cast<std::size_t>(c.y) * w + c.x] = 1;

  auto is_free = [&](int x, int y) {
    return x >= 0 && y >= 0 && x < w && y < h && !blocked[static_cast<std::size_t>(y) * w + x];
  };

  const InstanceSpec& target = s.target();
  std::vector<char> goal(static_cast<std::size_t>(w) * h, 0);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      if (!is_free(x, y)) continue;
      const Vec2 p = g.center_of({x, y});
      for (const Cell& c : target.footprint)
        if (distance(p, g.center_of(c)) <= s.success_radius) {
          goal[static_cast<std::size_t>(y) * w + x] = 1;
          break;
        }
    }

  const Cell start = g.cell_of(from.position);
  if (!is_free(start.x, start.y)) return std::nullopt;
  if (goal[static_cast<std::size_t>(start.y) * w + start.x]) return 0.0;

  const double inf = std::numeric_limits<double>::infinity();
  std::vector<double> dist(static_cast<std::size_t>(w) * h, inf);
  using Entry = std::pair<double, std::pair<int, int>>;
  std::priority_queue<Entry, std::vector<Entry>, std::greater<>> pq;
  dist[static_cast<std::size_t>(start.y) * w + start.x] = 0.0;
  pq.push({0.0, {start.x, start.y}});
  const double cs = g.cell_size();
  const double diag = std::sqrt(2.0) * cs;

  while (!pq.empty()) {
    auto [d, xy] = pq.top();
    pq.pop();
    auto [x, y] = xy;
    const std::size_t idx = static_cast<std::size_t>(y) * w + x;
    if (d > dist[idx]) continue;
    if (goal[idx]) return d;
    for (int dy = -1; dy <= 1; ++dy)
      for (int dx = -1; dx <= 1; ++dx) {
        if (dx == 0 && dy == 0) continue;
        const int nx = x + dx, ny = y + dy;
        if (!is_free(nx, ny)) continue;
        if (dx != 0 && dy != 0 && (!is_free(x + dx, y) || !is_free(x, y + dy))) continue;
        const double nd = d + ((dx != 0 && dy != 0) ? diag : cs);
        const std::size_t nidx = static_cast<std::size_t>(ny) * w + nx;
        if (nd < dist[nidx]) {
          dist[nidx] = nd;
          pq.push({nd, {nx, ny}});
        }
      }
  }
  return std::nullopt;
}

}  // namespace compnav
