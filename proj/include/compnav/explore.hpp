#pragma once

#include <algorithm>
#include <map>
#include <optional>
#include <queue>
#include <vector>

#include "compnav/world.hpp"

namespace compnav {

struct ExploreConfig {
  double alpha = 0.1;               // EMA rate for the loopness statistics
  double spread_floor = 1e-6;       // m^2; keeps the loopness ratio defined
  double loop_threshold = 0.9;
  int loop_streak = 5;              // consecutive high-loopness steps before blacklisting
  int blacklist_ttl = 50;           // steps a blacklisted frontier cell stays ineligible
  double openness_threshold = 0.1;
  double rotation_min_dist_m = 1.0;
};

// ---------------------------------------------------------------------------
// Frontiers
// ---------------------------------------------------------------------------

struct FrontierMap {
  std::vector<Cell> frontiers;       // sorted (row-major order)
  std::map<Cell, int> blacklist;     // cell -> expiry step

  bool eligible(const Cell& c, int step) const {
    auto it = blacklist.find(c);
    return it == blacklist.end() || step >= it->second;
  }
};

// A frontier is a known-free cell with at least one unknown 4-neighbor.
inline bool is_frontier_cell(const OccupancyGrid& known, const Cell& c) {
  if (known.at(c) != CellState::Free) return false;
  const Cell n4[] = {{c.x + 1, c.y}, {c.x - 1, c.y}, {c.x, c.y + 1}, {c.x, c.y - 1}};
  for (const Cell& n : n4)
    if (known.in_bounds(n) && known.at(n) == CellState::Unknown) return true;
  return false;
}

inline FrontierMap detect_frontiers(const OccupancyGrid& known, const FrontierMap* previous,
                                    int step) {
  FrontierMap out;
  for (int y = 0; y < known.height(); ++y)
    for (int x = 0; x < known.width(); ++x)
      if (is_frontier_cell(known, {x, y})) out.frontiers.push_back({x, y});
  if (previous) {
    for (const auto& [cell, expiry] : previous->blacklist)
      if (step < expiry) out.blacklist.emplace(cell, expiry);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Loop detection (EMA position statistics)
// ---------------------------------------------------------------------------

struct LoopState {
  Vec2 center;               // c_t
  double spread = 1e-6;      // s_t, floored
  double last_loopness = 0.0;
  int consecutive_high = 0;

  static LoopState init(const Vec2& start, const ExploreConfig& cfg) {
    LoopState s;
    s.center = start;
    s.spread = cfg.spread_floor;
    return s;
  }
};

// Center is updated first; the spread then uses the new center.
inline double update_loopness(LoopState& state, const Vec2& pos, const ExploreConfig& cfg) {
  const double a = cfg.alpha;
  state.center = pos * a + state.center * (1.0 - a);
  const double dev_sq = (pos - state.center).norm_sq();
  state.spread = std::max(cfg.spread_floor, a * dev_sq + (1.0 - a) * state.spread);
  state.last_loopness = std::exp(-dev_sq / state.spread);
  return state.last_loopness;
}

// Call while the agent is moving toward target_frontier. Fires after
// loop_streak consecutive high-loopness steps and blacklists the frontier's
// grid cell until step + blacklist_ttl.
inline void maybe_blacklist(LoopState& state, const Cell& target_frontier, FrontierMap& frontiers,
                            int step, const ExploreConfig& cfg) {
  if (state.last_loopness >= cfg.loop_threshold) {
    ++state.consecutive_high;
  } else {
    state.consecutive_high = 0;
  }
  if (state.consecutive_high >= cfg.loop_streak) {
    frontiers.blacklist[target_frontier] = step + cfg.blacklist_ttl;
    state.consecutive_high = 0;
  }
}

// ---------------------------------------------------------------------------
// Openness / line-of-sight rotation
// ---------------------------------------------------------------------------

// Fraction of 360 one-degree bins whose ray does not hit a known obstacle
// within sensing range. Unknown cells do not occlude. Heading-independent.
inline double compute_openness(const Vec2& pos, const OccupancyGrid& known, double range_m) {
  int occluded = 0;
  const Cell origin = known.cell_of(pos);
  for (int b = 0; b < 360; ++b) {
    bool hit = false;
    raycast(pos, deg_to_rad(static_cast<double>(b)), range_m, known.cell_size(),
            [&](const Cell& c, double) {
              if (!known.in_bounds(c)) return false;
              if (c == origin) return true;
              if (known.at(c) == CellState::Obstacle) {
                hit = true;
                return false;
              }
              return true;
            });
    if (hit) ++occluded;
  }
  return 1.0 - occluded / 360.0;
}

struct RotationState {
  std::optional<Vec2> last_rotation_position;
};

inline bool should_rotate(double openness, const Vec2& pos, const RotationState& state,
                          const ExploreConfig& cfg) {
  if (openness < cfg.openness_threshold) return false;
  if (!state.last_rotation_position) return true;
  return distance(pos, *state.last_rotation_position) >= cfg.rotation_min_dist_m;
}

// ---------------------------------------------------------------------------
// Path planning on the agent-known map
// ---------------------------------------------------------------------------

struct PathField {
  int width = 0;
  int height = 0;
  double cell_size = 0.25;
  std::vector<double> dist;   // row-major; +inf unreachable
  std::vector<int> parent;    // row-major index of predecessor, -1 none

  double at(const Cell& c) const { return dist[static_cast<std::size_t>(c.y) * width + c.x]; }

  std::vector<Cell> path_to(Cell goal) const {
    std::vector<Cell> path;
    if (!std::isfinite(at(goal))) return path;
    int idx = goal.y * width + goal.x;
    while (idx >= 0) {
      path.push_back({idx % width, idx / width});
      idx = parent[idx];
    }
    std::reverse(path.begin(), path.end());
    return path;
  }
};

// Dijkstra over traversable cells. With optimistic=true unknown cells count
// as traversable (standard frontier-exploration assumption); diagonal moves
// require both orthogonal neighbors traversable.
inline PathField plan_field(const OccupancyGrid& known, const Cell& start, bool optimistic) {
  PathField f;
  f.width = known.width();
  f.height = known.height();
  f.cell_size = known.cell_size();
  const std::size_t n = static_cast<std::size_t>(f.width) * f.height;
  f.dist.assign(n, std::numeric_limits<double>::infinity());
  f.parent.assign(n, -1);

  auto traversable = [&](int x, int y) {
    if (x < 0 || y < 0 || x >= f.width || y >= f.height) return false;
    const CellState s = known.at({x, y});
    return s == CellState::Free || (optimistic && s == CellState::Unknown);
  };
  if (!traversable(start.x, start.y)) return f;

  using Entry = std::pair<double, int>;
  std::priority_queue<Entry, std::vector<Entry>, std::greater<>> pq;
  const int start_idx = start.y * f.width + start.x;
  f.dist[start_idx] = 0.0;
  pq.push({0.0, start_idx});
  const double cs = known.cell_size();
  const double diag = std::sqrt(2.0) * cs;

  while (!pq.empty()) {
    auto [d, idx] = pq.top();
    pq.pop();
    if (d > f.dist[idx]) continue;
    const int x = idx % f.width, y = idx / f.width;
    for (int dy = -1; dy <= 1; ++dy)
      for (int dx = -1; dx <= 1; ++dx) {
        if (dx == 0 && dy == 0) continue;
        const int nx = x + dx, ny = y + dy;
        if (!traversable(nx, ny)) continue;
        if (dx != 0 && dy != 0 && (!traversable(x + dx, y) || !traversable(x, y + dy))) continue;
        const double nd = d + ((dx != 0 && dy != 0) ? diag : cs);
        const int nidx = ny * f.width + nx;
        if (nd < f.dist[nidx]) {
          f.dist[nidx] = nd;
          f.parent[nidx] = idx;
          pq.push({nd, nidx});
        }
      }
  }
  return f;
}

// ---------------------------------------------------------------------------
// Exploration policy
// ---------------------------------------------------------------------------

struct NavGoal {
  std::vector<Cell> cells;  // reaching any of these completes the goal
};

struct ExplorerDecision {
  Action action = Action::TurnLeft;
  bool exploration_exhausted = false;
  bool no_path = false;
};

class Explorer {
 public:
  Explorer(ExploreConfig cfg, WorldConfig world_cfg, const AgentPose& start)
      : cfg_(cfg), world_cfg_(world_cfg), loop_(LoopState::init(start.position, cfg)) {}

  const FrontierMap& frontiers() const { return fmap_; }
  FrontierMap& frontiers_mut() { return fmap_; }
  LoopState& loop_state() { return loop_; }
  RotationState& rotation_state() { return rot_; }
  std::optional<Cell> current_target() const { return target_; }

  ExplorerDecision next_action(const OccupancyGrid& known, const AgentPose& pose, int step,
                               const NavGoal* goal = nullptr) {
    ExplorerDecision out;
    update_loopness(loop_, pose.position, cfg_);

    if (goal) {
      pending_rotation_ = 0;
      target_.reset();
      loop_.consecutive_high = 0;
      PathField field = plan_field(known, known.cell_of(pose.position), /*optimistic=*/true);
      const Cell* best = nullptr;
      double best_d = std::numeric_limits<double>::infinity();
      for (const Cell& g : goal->cells) {
        if (!known.in_bounds(g)) continue;
        const double d = field.at(g);
        if (d < best_d) {
          best_d = d;
          best = &g;
        }
      }
      if (!best) {
        out.no_path = true;
        out.action = Action::TurnLeft;
        return out;
      }
      out.action = steer_along(field, *best, pose, known);
      return out;
    }

    fmap_ = detect_frontiers(known, &fmap_, step);

    if (pending_rotation_ > 0) {
      --pending_rotation_;
      loop_.consecutive_high = 0;
      target_.reset();
      out.action = Action::TurnLeft;
      return out;
    }

    const double openness = compute_openness(pose.position, known, world_cfg_.sensing_range_m);
    if (should_rotate(openness, pose.position, rot_, cfg_)) {
      rot_.last_rotation_position = pose.position;
      begin_rotation();
      --pending_rotation_;
      loop_.consecutive_high = 0;
      target_.reset();
      out.action = Action::TurnLeft;
      return out;
    }

    PathField field = plan_field(known, known.cell_of(pose.position), /*optimistic=*/true);
    const Cell* chosen = nullptr;
    double best_d = std::numeric_limits<double>::infinity();
    bool any_blacklisted = false;
    for (const Cell& fcell : fmap_.frontiers) {  // sorted: ties fall to lowest cell index
      if (!fmap_.eligible(fcell, step)) {
        any_blacklisted = true;
        continue;
      }
      const double d = field.at(fcell);
      if (d < best_d) {
        best_d = d;
        chosen = &fcell;
      }
    }

    if (!chosen) {
      loop_.consecutive_high = 0;
      target_.reset();
      if (any_blacklisted) {
        // A frontier will become eligible again; idle one step.
        out.action = Action::TurnLeft;
        return out;
      }
      if (!exhaust_rotation_done_) {
        exhaust_rotation_done_ = true;
        begin_rotation();
        --pending_rotation_;
        out.action = Action::TurnLeft;
        return out;
      }
      out.exploration_exhausted = true;
      out.action = Action::TurnLeft;
      return out;
    }
    exhaust_rotation_done_ = false;

    target_ = *chosen;
    maybe_blacklist(loop_, *chosen, fmap_, step, cfg_);
    if (!fmap_.eligible(*chosen, step)) {
      // Just blacklisted; redirect next step.
      target_.reset();
      out.action = Action::TurnLeft;
      return out;
    }
    out.action = steer_along(field, *chosen, pose, known);
    return out;
  }

 private:
  void begin_rotation() {
    pending_rotation_ = static_cast<int>(std::lround(360.0 / world_cfg_.turn_increment_deg));
  }

  Action steer_along(const PathField& field, const Cell& goal, const AgentPose& pose,
                     const OccupancyGrid& known) {
    const Cell here = known.cell_of(pose.position);
    std::vector<Cell> path = field.path_to(goal);
    Vec2 waypoint;
    if (path.size() >= 2) {
      waypoint = known.center_of(path[1]);
    } else {
      // Standing on the goal cell: nudge toward an unknown neighbor if any.
      Cell aim = goal;
      const Cell n4[] = {{here.x + 1, here.y}, {here.x - 1, here.y},
                         {here.x, here.y + 1}, {here.x, here.y - 1}};
      for (const Cell& n : n4)
        if (known.in_bounds(n) && known.at(n) == CellState::Unknown) {
          aim = n;
          break;
        }
      if (aim == here) return Action::TurnLeft;
      waypoint = known.center_of(aim);
    }
    return steer(pose, waypoint);
  }

  Action steer(const AgentPose& pose, const Vec2& waypoint) const {
    const double bearing = std::atan2(waypoint.y - pose.position.y, waypoint.x - pose.position.x);
    const double delta = wrap_angle(bearing - pose.heading);
    const double half_turn = deg_to_rad(world_cfg_.turn_increment_deg) / 2.0 + 1e-9;
    if (std::abs(delta) <= half_turn) return Action::MoveForward;
    return delta > 0 ? Action::TurnLeft : Action::TurnRight;
  }

  ExploreConfig cfg_;
  WorldConfig world_cfg_;
  FrontierMap fmap_;
  LoopState loop_;
  RotationState rot_;
  std::optional<Cell> target_;
  int pending_rotation_ = 0;
  bool exhaust_rotation_done_ = false;
};

}  // namespace compnav
