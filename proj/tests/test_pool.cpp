#include "compnav/pool.hpp"

#include <gtest/gtest.h>

namespace compnav {
namespace {

AttributeValue av(const std::string& key, const std::string& value) {
  return {key, value, "a " + value + " " + key};
}

std::vector<Cell> cells(std::initializer_list<std::pair<int, int>> xs) {
  std::vector<Cell> out;
  for (auto [x, y] : xs) out.push_back({x, y});
  std::sort(out.begin(), out.end());
  return out;
}

Detection make_detection(const std::string& id, std::vector<Cell> where, int sector,
                         std::vector<AttributeValue> revealed = {}) {
  Detection d;
  d.instance_id = id;
  d.category = "cabinet";
  std::sort(where.begin(), where.end());
  d.cells = std::move(where);
  d.sector = sector;
  std::sort(revealed.begin(), revealed.end());
  d.revealed = std::move(revealed);
  return d;
}

TEST(OverlapRatio, IdenticalRegions) {
  auto r = cells({{3, 3}, {4, 3}, {3, 4}, {4, 4}});
  EXPECT_EQ(overlap_ratio(r, r, 1), 1.0);
}

TEST(OverlapRatio, FarDisjointRegions) {
  EXPECT_EQ(overlap_ratio(cells({{0, 0}, {1, 0}}), cells({{10, 10}, {11, 10}}), 1), 0.0);
}

TEST(OverlapRatio, AsymmetricTakesMax) {
  // A has 4 cells, B = A plus 4 far cells: directed(A->B) = 1.0,
  // directed(B->A) = 0.5, so the symmetric ratio is 1.0.
  auto a = cells({{3, 3}, {4, 3}, {3, 4}, {4, 4}});
  auto b = cells({{3, 3}, {4, 3}, {3, 4}, {4, 4}, {20, 20}, {21, 20}, {20, 21}, {21, 21}});
  EXPECT_EQ(overlap_ratio(a, b, 1), 1.0);
}

TEST(OverlapRatio, EmptyRegionRejected) {
  EXPECT_THROW(overlap_ratio({}, cells({{0, 0}}), 1), std::invalid_argument);
}

TEST(AssignDetection, RedetectionFromNewAngleMerges) {
  CandidatePool pool({}, 0.25);
  AgentPose pose{{1, 1}, 0};
  int id0 = pool.assign_detection(make_detection("a", cells({{5, 5}, {6, 5}}), 0), pose);
  int id1 = pool.assign_detection(make_detection("a", cells({{5, 5}, {5, 6}}), 3), pose);
  EXPECT_EQ(id0, id1);
  EXPECT_EQ(pool.size(), 1);
  EXPECT_EQ(pool.by_id(id0).views.size(), 2u);
  EXPECT_EQ(pool.by_id(id0).region.size(), 3u);
}

TEST(AssignDetection, DistantDetectionSeedsNewCandidate) {
  CandidatePool pool({}, 0.25);
  AgentPose pose{{1, 1}, 0};
  pool.assign_detection(make_detection("a", cells({{5, 5}}), 0), pose);
  int id1 = pool.assign_detection(make_detection("b", cells({{40, 40}}), 2), pose);
  EXPECT_EQ(id1, 1);
  EXPECT_EQ(pool.size(), 2);
}

TEST(AssignDetection, ExactThresholdMerges) {
  // Candidate region: 20-cell row at y=0. Detection: 3 cells adjacent to it
  // at y=1 plus 7 far cells: directed(det->region) = 0.3 exactly,
  // directed(region->det) = 4/20 = 0.2; closed threshold keeps the merge.
  CandidatePool pool({}, 0.25);
  AgentPose pose{{1, 1}, 0};
  std::vector<Cell> row;
  for (int x = 0; x < 20; ++x) row.push_back({x, 0});
  pool.assign_detection(make_detection("a", row, 0), pose);

  std::vector<Cell> det = {{0, 1}, {1, 1}, {2, 1}};
  for (int i = 0; i < 7; ++i) det.push_back({30 + i, 30});
  EXPECT_EQ(overlap_ratio(det, pool.by_id(0).region, 1), 0.3);
  int id = pool.assign_detection(make_detection("a", det, 1), pose);
  EXPECT_EQ(id, 0);
  EXPECT_EQ(pool.size(), 1);
}

TEST(AssignDetection, IdempotentOnIdenticalDetection) {
  CandidatePool pool({}, 0.25);
  AgentPose pose{{1, 1}, 0};
  Detection d = make_detection("a", cells({{5, 5}, {6, 5}}), 0);
  int id0 = pool.assign_detection(d, pose);
  std::size_t region_before = pool.by_id(id0).region.size();
  int id1 = pool.assign_detection(d, pose);
  EXPECT_EQ(id0, id1);
  EXPECT_EQ(pool.size(), 1);
  EXPECT_EQ(pool.by_id(id0).region.size(), region_before);
}

TEST(AssignDetection, RegionGrowthMonotone) {
  CandidatePool pool({}, 0.25);
  AgentPose pose{{1, 1}, 0};
  SplitMix64 rng(3);
  std::size_t prev = 0;
  pool.assign_detection(make_detection("a", cells({{5, 5}}), 0), pose);
  for (int i = 0; i < 30; ++i) {
    std::vector<Cell> det = pool.by_id(0).region;
    det.push_back({5 + rng.range(-1, 1), 5 + rng.range(-1, 1)});
    std::sort(det.begin(), det.end());
    det.erase(std::unique(det.begin(), det.end()), det.end());
    pool.assign_detection(make_detection("a", det, static_cast<int>(rng.below(8))), pose);
    ASSERT_GE(pool.by_id(0).region.size(), prev);
    prev = pool.by_id(0).region.size();
    ASSERT_EQ(pool.size(), 1);
  }
}

TEST(ClusterViews, FewerViewsThanKAllRepresent) {
  std::vector<View> views;
  for (int s = 0; s < 3; ++s) views.push_back({s, {av("color", "blue")}, {}});
  EXPECT_EQ(cluster_views(views, 6, 0), (std::vector<int>{0, 1, 2}));
}

TEST(ClusterViews, PlantedGroupsYieldOneRepEach) {
  // Twelve views in six tight groups (identical embeddings within a group).
  std::vector<View> views;
  for (int g = 0; g < 6; ++g) {
    View v{g, {av("color", "blue")}, {}};
    views.push_back(v);
    views.push_back(v);
  }
  std::vector<int> reps = cluster_views(views, 6, 17);
  ASSERT_EQ(reps.size(), 6u);
  // One representative per group; ties resolve to the lower view index.
  std::set<int> sectors;
  for (int r : reps) sectors.insert(views[r].sector);
  EXPECT_EQ(sectors.size(), 6u);
  EXPECT_EQ(reps, (std::vector<int>{0, 2, 4, 6, 8, 10}));
}

TEST(ClusterViews, AllIdenticalCollapseToOne) {
  std::vector<View> views(9, View{2, {av("color", "red")}, {}});
  std::vector<int> reps = cluster_views(views, 6, 5);
  ASSERT_EQ(reps.size(), 1u);
  EXPECT_EQ(reps[0], 0);
}

Candidate two_view_candidate() {
  Candidate cand;
  cand.id = 0;
  cand.region = cells({{5, 5}});
  cand.views.push_back({0, {av("color", "blue")}, {}});
  cand.views.push_back({4, {av("color", "blue"), av("nearby", "tv")}, {}});
  cand.representatives = {0, 1};
  return cand;
}

TEST(SynthesizeDescription, UnionAcrossViews) {
  Candidate cand = two_view_candidate();
  synthesize_description(cand, false);
  ASSERT_EQ(cand.description.size(), 2u);
  EXPECT_TRUE(same_pair(cand.description[0], av("color", "blue")));
  EXPECT_TRUE(same_pair(cand.description[1], av("nearby", "tv")));
}

TEST(SynthesizeDescription, SingleViewIsItsOwnUnion) {
  Candidate cand = two_view_candidate();
  cand.views.pop_back();
  cand.representatives = {0};
  synthesize_description(cand, false);
  ASSERT_EQ(cand.description.size(), 1u);
  EXPECT_TRUE(same_pair(cand.description[0], av("color", "blue")));
}

TEST(SynthesizeDescription, FirstViewOnlyIsSubset) {
  Candidate cand = two_view_candidate();
  synthesize_description(cand, false);
  auto full = cand.description;
  synthesize_description(cand, true);
  for (const auto& a : cand.description)
    EXPECT_TRUE(std::find(full.begin(), full.end(), a) != full.end());
  EXPECT_LT(cand.description.size(), full.size());
}

TEST(PoolReady, ThresholdAndFallback) {
  PoolConfig cfg;  // n_min = 5, fallback 400
  CandidatePool pool(cfg, 0.25);
  AgentPose pose{{1, 1}, 0};
  for (int i = 0; i < 5; ++i)
    pool.assign_detection(make_detection("i" + std::to_string(i), cells({{10 * i, 40}}), 0), pose);
  EXPECT_TRUE(pool.ready(120));

  CandidatePool two(cfg, 0.25);
  two.assign_detection(make_detection("a", cells({{0, 0}}), 0), pose);
  two.assign_detection(make_detection("b", cells({{30, 30}}), 0), pose);
  EXPECT_TRUE(two.ready(400));   // fallback step reached
  EXPECT_FALSE(two.ready(399));

  CandidatePool four(cfg, 0.25);
  for (int i = 0; i < 4; ++i)
    four.assign_detection(make_detection("i" + std::to_string(i), cells({{10 * i, 0}}), 0), pose);
  EXPECT_FALSE(four.ready(150));
}

TEST(Pool, DistinctInstancesNeverMerge) {
  // Footprints separated by more than the neighbor radius stay distinct.
  CandidatePool pool({}, 0.25);
  AgentPose pose{{1, 1}, 0};
  SplitMix64 rng(9);
  for (int round = 0; round < 40; ++round) {
    const int which = static_cast<int>(rng.below(3));
    const int bx = 4 + which * 6;  // gap of 5 cells between instance regions
    std::vector<Cell> det = {{bx, 4}, {bx + 1, 4}};
    pool.assign_detection(
        make_detection("inst" + std::to_string(which), det, static_cast<int>(rng.below(8))), pose);
  }
  EXPECT_EQ(pool.size(), 3);
  for (const auto& cand : pool.candidates()) EXPECT_EQ(cand.source_instances.size(), 1u);
}

TEST(Pool, SaturatedViewsRecoverFullAttributeSet) {
  // Attributes on contiguous arcs of >= 3 sectors; with views from all 8
  // sectors and K = 6 representatives, every attribute stays covered.
  std::vector<InstanceAttribute> attrs;
  for (int i = 0; i < 5; ++i) {
    InstanceAttribute a;
    a.value = av("key" + std::to_string(i), "v" + std::to_string(i));
    a.visible_mask = 0;
    for (int s = 0; s < 3 + (i % 2); ++s)
      a.visible_mask |= static_cast<std::uint8_t>(1u << ((i + s) % kSectors));
    attrs.push_back(a);
  }
  InstanceAttribute base;
  base.value = av("shape", "boxy");
  base.visible_mask = 0xff;
  attrs.push_back(base);

  CandidatePool pool({}, 0.25);
  AgentPose pose{{1, 1}, 0};
  for (int s = 0; s < kSectors; ++s) {
    std::vector<AttributeValue> revealed;
    for (const auto& a : attrs)
      if (a.visible_from(s)) revealed.push_back(a.value);
    pool.assign_detection(make_detection("a", cells({{5, 5}, {6, 5}}), s, revealed), pose);
  }
  pool.finalize_all();
  const Candidate& cand = pool.by_id(0);
  ASSERT_EQ(cand.representatives.size(), 6u);
  EXPECT_EQ(cand.description.size(), attrs.size());
}

TEST(Pool, DumpRoundTripsThroughIngestion) {
  CandidatePool pool({}, 0.25);
  AgentPose pose{{1, 1}, 0};
  pool.assign_detection(make_detection("a", cells({{5, 5}}), 0, {av("color", "blue")}), pose);
  pool.assign_detection(make_detection("b", cells({{30, 30}}), 2, {av("color", "red")}), pose);
  pool.finalize_all();
  json doc = pool.dump();
  CandidatePool back = CandidatePool::from_dump(doc, {}, 0.25);
  ASSERT_EQ(back.size(), pool.size());
  for (int i = 0; i < pool.size(); ++i) {
    EXPECT_EQ(back.by_id(i).region, pool.by_id(i).region);
    EXPECT_EQ(back.by_id(i).description, pool.by_id(i).description);
    EXPECT_EQ(back.by_id(i).text, pool.by_id(i).text);
  }
}

}  // namespace
}  // namespace compnav
