#pragma once

#include <cstdlib>
#include <string>

#include "compnav/explore.hpp"
#include "compnav/judge.hpp"
#include "compnav/oracle.hpp"
#include "compnav/pool.hpp"
#include "compnav/world.hpp"

namespace compnav {

struct BaselinesConfig {
  double theta_match = 0.9;  // independent matcher's stop threshold
};

enum class Strategy { Comparative, Independent, Pooled };
enum class EvalMode { CoinLike, TextNavLike };

inline const char* strategy_name(Strategy s) {
  switch (s) {
    case Strategy::Comparative: return "comparative";
    case Strategy::Independent: return "independent";
    case Strategy::Pooled: return "pooled";
  }
  return "?";
}

inline Strategy parse_strategy(const std::string& s) {
  if (s == "comparative") return Strategy::Comparative;
  if (s == "independent") return Strategy::Independent;
  if (s == "pooled") return Strategy::Pooled;
  throw std::invalid_argument("unknown strategy: " + s);
}

inline const char* mode_name(EvalMode m) {
  return m == EvalMode::CoinLike ? "interactive-sim" : "textnav";
}

inline EvalMode parse_mode(const std::string& s) {
  if (s == "interactive-sim" || s == "coin") return EvalMode::CoinLike;
  if (s == "textnav") return EvalMode::TextNavLike;
  throw std::invalid_argument("unknown mode: " + s);
}

struct RunConfig {
  WorldConfig world;
  ExploreConfig explore;
  PoolConfig pool;
  JudgeConfig judge;
  OracleConfig oracle;
  BaselinesConfig baselines;
  int horizon = 500;
  double stop_radius_m = 0.5;  // navigate-and-stop distance to the chosen candidate
};

// Suite presets: interactive-sim bakes in horizon 500 / fallback 400 /
// budget 4; textnav uses horizon 1000 / fallback 600 and no questions.
inline void apply_mode(RunConfig& cfg, EvalMode mode) {
  if (mode == EvalMode::CoinLike) {
    cfg.horizon = 500;
    cfg.pool.fallback_step = 400;
    cfg.judge.question_budget = 4;
  } else {
    cfg.horizon = 1000;
    cfg.pool.fallback_step = 600;
  }
}

inline RunConfig config_from_json(const json& j) {
  RunConfig c;
  if (j.contains("world")) {
    const json& w = j.at("world");
    c.world.stride_m = w.value("stride_m", c.world.stride_m);
    c.world.turn_increment_deg = w.value("turn_increment_deg", c.world.turn_increment_deg);
    c.world.sensing_range_m = w.value("sensing_range_m", c.world.sensing_range_m);
    c.world.fov_deg = w.value("fov_deg", c.world.fov_deg);
  }
  if (j.contains("explore")) {
    const json& e = j.at("explore");
    c.explore.alpha = e.value("alpha", c.explore.alpha);
    c.explore.spread_floor = e.value("spread_floor", c.explore.spread_floor);
    c.explore.loop_threshold = e.value("loop_threshold", c.explore.loop_threshold);
    c.explore.loop_streak = e.value("loop_streak", c.explore.loop_streak);
    c.explore.blacklist_ttl = e.value("blacklist_ttl", c.explore.blacklist_ttl);
    c.explore.openness_threshold = e.value("openness_threshold", c.explore.openness_threshold);
    c.explore.rotation_min_dist_m = e.value("rotation_min_dist_m", c.explore.rotation_min_dist_m);
  }
  if (j.contains("pool")) {
    const json& p = j.at("pool");
    c.pool.n_min = p.value("n_min", c.pool.n_min);
    c.pool.fallback_step = p.value("fallback_step", c.pool.fallback_step);
    c.pool.k_views = p.value("k_views", c.pool.k_views);
    c.pool.overlap_threshold = p.value("overlap_threshold", c.pool.overlap_threshold);
    c.pool.epsilon_m = p.value("epsilon_m", c.pool.epsilon_m);
    c.pool.use_first_view_only = p.value("use_first_view_only", c.pool.use_first_view_only);
  }
  if (j.contains("judge")) {
    const json& jj = j.at("judge");
    c.judge.tau = jj.value("tau", c.judge.tau);
    c.judge.question_budget = jj.value("question_budget", c.judge.question_budget);
    c.judge.min_contrast = jj.value("min_contrast", c.judge.min_contrast);
    c.judge.use_refinement = jj.value("use_refinement", c.judge.use_refinement);
  }
  if (j.contains("oracle")) {
    const json& o = j.at("oracle");
    c.oracle.error_rate = o.value("error_rate", c.oracle.error_rate);
    c.oracle.reveal_k = o.value("reveal_k", c.oracle.reveal_k);
    c.oracle.sidecar_url = o.value("sidecar_url", c.oracle.sidecar_url);
    c.oracle.sidecar_timeout_ms = o.value("sidecar_timeout_ms", c.oracle.sidecar_timeout_ms);
  }
  if (j.contains("baselines")) {
    const json& b = j.at("baselines");
    c.baselines.theta_match = b.value("theta_match", c.baselines.theta_match);
  }
  c.horizon = j.value("horizon", c.horizon);
  c.stop_radius_m = j.value("stop_radius_m", c.stop_radius_m);
  return c;
}

inline json config_to_json(const RunConfig& c) {
  json j;
  j["world"] = {{"stride_m", c.world.stride_m},
                {"turn_increment_deg", c.world.turn_increment_deg},
                {"sensing_range_m", c.world.sensing_range_m},
                {"fov_deg", c.world.fov_deg}};
  j["explore"] = {{"alpha", c.explore.alpha},
                  {"spread_floor", c.explore.spread_floor},
                  {"loop_threshold", c.explore.loop_threshold},
                  {"loop_streak", c.explore.loop_streak},
                  {"blacklist_ttl", c.explore.blacklist_ttl},
                  {"openness_threshold", c.explore.openness_threshold},
                  {"rotation_min_dist_m", c.explore.rotation_min_dist_m}};
  j["pool"] = {{"n_min", c.pool.n_min},
               {"fallback_step", c.pool.fallback_step},
               {"k_views", c.pool.k_views},
               {"overlap_threshold", c.pool.overlap_threshold},
               {"epsilon_m", c.pool.epsilon_m},
               {"use_first_view_only", c.pool.use_first_view_only}};
  j["judge"] = {{"tau", c.judge.tau},
                {"question_budget", c.judge.question_budget},
                {"min_contrast", c.judge.min_contrast},
                {"use_refinement", c.judge.use_refinement}};
  j["oracle"] = {{"error_rate", c.oracle.error_rate},
                 {"reveal_k", c.oracle.reveal_k},
                 {"sidecar_url", c.oracle.sidecar_url},
                 {"sidecar_timeout_ms", c.oracle.sidecar_timeout_ms}};
  j["baselines"] = {{"theta_match", c.baselines.theta_match}};
  j["horizon"] = c.horizon;
  j["stop_radius_m"] = c.stop_radius_m;
  return j;
}

// The sidecar endpoint can come from config or from the environment.
inline void resolve_sidecar_url(RunConfig& cfg) {
  if (!cfg.oracle.sidecar_url.empty()) return;
  if (const char* env = std::getenv("COMPNAV_SIDECAR_URL")) cfg.oracle.sidecar_url = env;
}

}  // namespace compnav
