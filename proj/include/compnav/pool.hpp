#pragma once

#include <algorithm>
#include <set>
#include <string>
#include <vector>

#include "compnav/embed.hpp"
#include "compnav/world.hpp"

namespace compnav {

struct View {
  int sector = 0;
  std::vector<AttributeValue> revealed;  // sorted
  AgentPose pose;
};

inline std::vector<std::string> view_tokens(const View& v) {
  std::vector<std::string> toks;
  toks.push_back("sector:" + std::to_string(v.sector));
  for (const auto& a : v.revealed) toks.push_back(std::to_string(v.sector) + "|" + a.token());
  return toks;
}

// Image-side embedding stand-in: hashed bag of (sector, revealed attribute)
// tokens for one view.
inline Embedding embed_view(const View& v) { return embed_tokens(view_tokens(v)); }

struct PoolConfig {
  int n_min = 5;
  int fallback_step = 400;      // judgment starts here regardless of pool size
  int k_views = 6;
  double overlap_threshold = 0.3;
  double epsilon_m = 0.03;      // neighbor radius of the overlap test
  bool use_first_view_only = false;  // ablation: no multi-view aggregation
};

// Share of cells in one region having a neighbor in the other within
// eps_cells (Chebyshev); the symmetric ratio takes the max of the two
// directed fractions.
inline double overlap_ratio(const std::vector<Cell>& a, const std::vector<Cell>& b,
                            int eps_cells) {
  if (a.empty() || b.empty()) throw std::invalid_argument("overlap_ratio: empty region");
  auto directed = [&](const std::vector<Cell>& from, const std::vector<Cell>& to) {
    int hits = 0;
    for (const Cell& c : from) {
      bool near = false;
      for (int dy = -eps_cells; dy <= eps_cells && !near; ++dy)
        for (int dx = -eps_cells; dx <= eps_cells; ++dx)
          if (std::binary_search(to.begin(), to.end(), Cell{c.x + dx, c.y + dy})) {
            near = true;
            break;
          }
      if (near) ++hits;
    }
    return static_cast<double>(hits) / static_cast<double>(from.size());
  };
  std::vector<Cell> sa = a, sb = b;
  std::sort(sa.begin(), sa.end());
  std::sort(sb.begin(), sb.end());
  return std::max(directed(sa, sb), directed(sb, sa));
}

// Deterministic k-means over view embeddings; returns the representative view
// indices (ascending), one per non-empty cluster, each the member nearest to
// its centroid (ties: lowest view index).
inline std::vector<int> cluster_views(const std::vector<View>& views, int k, std::uint64_t seed) {
  const int n = static_cast<int>(views.size());
  if (n == 0) return {};
  if (n <= k) {
    std::vector<int> all(n);
    for (int i = 0; i < n; ++i) all[i] = i;
    return all;
  }

  std::vector<Embedding> pts;
  pts.reserve(n);
  for (const View& v : views) pts.push_back(embed_view(v));
  auto dist_sq = [&](const Embedding& a, const Embedding& b) {
    double s = 0.0;
    for (int i = 0; i < kEmbedDim; ++i) {
      const double d = a[i] - b[i];
      s += d * d;
    }
    return s;
  };

  // Farthest-point init, first center picked by the seed.
  std::vector<Embedding> centers;
  centers.push_back(pts[seed % n]);
  while (static_cast<int>(centers.size()) < k) {
    int far_idx = 0;
    double far_d = -1.0;
    for (int i = 0; i < n; ++i) {
      double nearest = std::numeric_limits<double>::infinity();
      for (const auto& c : centers) nearest = std::min(nearest, dist_sq(pts[i], c));
      if (nearest > far_d) {
        far_d = nearest;
        far_idx = i;
      }
    }
    centers.push_back(pts[far_idx]);
  }

  std::vector<int> assign(n, -1);
  for (int iter = 0; iter < 50; ++iter) {
    bool changed = false;
    for (int i = 0; i < n; ++i) {
      int best = 0;
      double best_d = dist_sq(pts[i], centers[0]);
      for (int c = 1; c < k; ++c) {
        const double d = dist_sq(pts[i], centers[c]);
        if (d < best_d) {
          best_d = d;
          best = c;
        }
      }
      if (assign[i] != best) {
        assign[i] = best;
        changed = true;
      }
    }
    if (!changed) break;

    for (int c = 0; c < k; ++c) {
      Embedding mean{};
      int count = 0;
      for (int i = 0; i < n; ++i)
        if (assign[i] == c) {
          for (int d = 0; d < kEmbedDim; ++d) mean[d] += pts[i][d];
          ++count;
        }
      if (count == 0) {
        // Reseed an empty cluster with the point farthest from its center.
        int far_idx = 0;
        double far_d = -1.0;
        for (int i = 0; i < n; ++i) {
          const double d = dist_sq(pts[i], centers[assign[i]]);
          if (d > far_d) {
            far_d = d;
            far_idx = i;
          }
        }
        centers[c] = pts[far_idx];
        continue;
      }
      for (int d = 0; d < kEmbedDim; ++d) mean[d] /= count;
      centers[c] = mean;
    }
  }

  std::vector<int> reps;
  for (int c = 0; c < k; ++c) {
    int best = -1;
    double best_d = std::numeric_limits<double>::infinity();
    for (int i = 0; i < n; ++i) {
      if (assign[i] != c) continue;
      const double d = dist_sq(pts[i], centers[c]);
      if (d < best_d) {
        best_d = d;
        best = i;
      }
    }
    if (best >= 0) reps.push_back(best);
  }
  std::sort(reps.begin(), reps.end());
  return reps;
}

struct Candidate {
  int id = -1;
  std::vector<Cell> region;          // sorted, unique
  std::vector<View> views;
  std::vector<int> representatives;  // indices into views
  std::vector<AttributeValue> description;  // canonical order
  std::string text;
  Cell location{};
  std::vector<std::string> source_instances;  // ground-truth ids, diagnostics only
  bool finalized = false;
  Embedding text_embedding{};
  Embedding image_embedding{};
};

inline std::string render_description(const std::vector<AttributeValue>& description) {
  std::string text = "The instance has ";
  for (std::size_t i = 0; i < description.size(); ++i) {
    if (i > 0) text += ", ";
    text += description[i].phrase;
  }
  text += ".";
  return text;
}

// Union of the attribute sets revealed by the representative views (first
// view only under the multi-view-aggregation ablation).
inline void synthesize_description(Candidate& cand, bool use_first_view_only) {
  std::vector<int> reps = cand.representatives;
  if (use_first_view_only && !cand.views.empty()) reps = {0};
  std::vector<AttributeValue> desc;
  for (int r : reps)
    for (const auto& a : cand.views[r].revealed) desc.push_back(a);
  std::sort(desc.begin(), desc.end());
  desc.erase(std::unique(desc.begin(), desc.end(),
                         [](const AttributeValue& a, const AttributeValue& b) {
                           return same_pair(a, b);
                         }),
             desc.end());
  cand.description = std::move(desc);
  cand.text = render_description(cand.description);
}

class CandidatePool {
 public:
  CandidatePool() = default;
  CandidatePool(PoolConfig cfg, double cell_size) : cfg_(cfg), cell_size_(cell_size) {}

  const PoolConfig& config() const { return cfg_; }
  int size() const { return static_cast<int>(candidates_.size()); }
  const std::vector<Candidate>& candidates() const { return candidates_; }
  std::vector<Candidate>& candidates() { return candidates_; }
  const Candidate& by_id(int id) const { return candidates_.at(static_cast<std::size_t>(id)); }

  int eps_cells() const {
    return std::max(1, static_cast<int>(std::ceil(cfg_.epsilon_m / cell_size_)));
  }

  bool ready(int step) const { return size() >= cfg_.n_min || step >= cfg_.fallback_step; }

  // Assigns a detection to the candidate with the highest overlap at or above
  // the threshold (ties: lowest id), or seeds a new candidate from it.
  int assign_detection(const Detection& det, const AgentPose& agent_pose) {
    int best = -1;
    double best_ov = 0.0;
    for (const Candidate& cand : candidates_) {
      const double ov = overlap_ratio(det.cells, cand.region, eps_cells());
      if (ov >= cfg_.overlap_threshold && ov > best_ov) {
        best_ov = ov;
        best = cand.id;
      }
    }
    if (best < 0) {
      Candidate cand;
      cand.id = size();
      cand.region = det.cells;
      std::sort(cand.region.begin(), cand.region.end());
      cand.views.push_back(View{det.sector, det.revealed, agent_pose});
      cand.source_instances.push_back(det.instance_id);
      cand.location = region_centroid(cand.region);
      candidates_.push_back(std::move(cand));
      return size() - 1;
    }

    Candidate& cand = candidates_[static_cast<std::size_t>(best)];
    std::vector<Cell> merged = cand.region;
    merged.insert(merged.end(), det.cells.begin(), det.cells.end());
    std::sort(merged.begin(), merged.end());
    merged.erase(std::unique(merged.begin(), merged.end()), merged.end());
    cand.region = std::move(merged);
    cand.location = region_centroid(cand.region);
    bool sector_seen = false;
    for (const View& v : cand.views)
      if (v.sector == det.sector) sector_seen = true;
    if (!sector_seen) {
      cand.views.push_back(View{det.sector, det.revealed, agent_pose});
      cand.finalized = false;
    }
    if (std::find(cand.source_instances.begin(), cand.source_instances.end(), det.instance_id) ==
        cand.source_instances.end())
      cand.source_instances.push_back(det.instance_id);
    return best;
  }

  void finalize_all() {
    for (Candidate& cand : candidates_) finalize(cand);
  }

  void finalize(Candidate& cand) {
    if (cand.finalized) return;
    cand.representatives =
        cluster_views(cand.views, cfg_.k_views, static_cast<std::uint64_t>(cand.id));
    synthesize_description(cand, cfg_.use_first_view_only);
    cand.text_embedding = embed_text(cand.description);
    std::vector<std::string> img_tokens;
    std::vector<int> reps = cand.representatives;
    if (cfg_.use_first_view_only && !cand.views.empty()) reps = {0};
    for (int r : reps)
      for (std::string& t : view_tokens(cand.views[r])) img_tokens.push_back(std::move(t));
    cand.image_embedding =
        img_tokens.empty() ? cand.text_embedding : embed_tokens(img_tokens);
    cand.finalized = true;
  }

  json dump() const {
    json doc;
    json arr = json::array();
    for (const Candidate& cand : candidates_) {
      json jc;
      jc["id"] = cand.id;
      json region = json::array();
      for (const Cell& c : cand.region) region.push_back({c.x, c.y});
      jc["region"] = std::move(region);
      json attrs = json::array();
      for (const auto& a : cand.description)
        attrs.push_back({{"attribute", a.attribute}, {"value", a.value}, {"phrase", a.phrase}});
      jc["attributes"] = std::move(attrs);
      jc["text"] = cand.text;
      arr.push_back(std::move(jc));
    }
    doc["candidates"] = std::move(arr);
    return doc;
  }

  // Ingestion for judge-only runs: candidates arrive already described; the
  // visual embedding degenerates to the text embedding (no views on disk).
  static CandidatePool from_dump(const json& doc, PoolConfig cfg, double cell_size = 0.25) {
    CandidatePool pool(cfg, cell_size);
    for (const auto& jc : doc.at("candidates")) {
      Candidate cand;
      cand.id = pool.size();
      for (const auto& rc : jc.at("region"))
        cand.region.push_back({rc.at(0).get<int>(), rc.at(1).get<int>()});
      std::sort(cand.region.begin(), cand.region.end());
      for (const auto& ja : jc.at("attributes")) {
        AttributeValue a;
        a.attribute = ja.at("attribute").get<std::string>();
        a.value = ja.at("value").get<std::string>();
        a.phrase = ja.value("phrase", a.attribute + " " + a.value);
        cand.description.push_back(a);
      }
      std::sort(cand.description.begin(), cand.description.end());
      cand.text = jc.contains("text") ? jc.at("text").get<std::string>()
                                      : render_description(cand.description);
      cand.location = region_centroid(cand.region);
      cand.text_embedding = embed_text(cand.description);
      cand.image_embedding = cand.text_embedding;
      cand.finalized = true;
      pool.candidates_.push_back(std::move(cand));
    }
    return pool;
  }

 private:
  static Cell region_centroid(const std::vector<Cell>& region) {
    double sx = 0, sy = 0;
    for (const Cell& c : region) {
      sx += c.x;
      sy += c.y;
    }
    return {static_cast<int>(std::lround(sx / region.size())),
            static_cast<int>(std::lround(sy / region.size()))};
  }

  PoolConfig cfg_;
  double cell_size_ = 0.25;
  std::vector<Candidate> candidates_;
};

inline bool pool_ready(const CandidatePool& pool, int step) { return pool.ready(step); }

}  // namespace compnav
