#include <gtest/gtest.h>

#include "test_support.hpp"

using namespace statetrack;
using statetrack::testing::box_mask;

namespace {

ObjectSpec rect(std::string id, int cls, std::string label, int x0, int y0, int x1, int y1, int frame = 0) {
  return {std::move(id), cls, std::move(label), Shape::rectangle, {family::key(frame, {x0, y0, x1, y1})}};
}

Scenario two_boxes() {
  Scenario s;
  s.name = "two-boxes";
  s.size = {32, 24};
  s.num_frames = 6;
  s.prompt_object = "a";
  s.objects = {rect("a", 0, "apple", 2, 2, 10, 10), rect("b", 1, "bowl", 20, 4, 30, 20)};
  return s;
}

// Apple cut at frame 3; a 4-px slice appears just right of the remnant.
Scenario cut_scene() {
  Scenario s;
  s.name = "cut";
  s.size = {40, 30};
  s.num_frames = 8;
  s.grace = 2;
  s.prompt_object = "apple";
  auto apple = rect("apple", 0, "apple", 5, 5, 20, 20);
  apple.keyframes = {family::key(0, {5, 5, 20, 20}), family::key(2, {5, 5, 20, 20}), family::key(3, {5, 5, 14, 20})};
  s.objects = {apple};
  SplitEvent sp;
  sp.frame = 3;
  sp.parent = "apple";
  sp.verb = "cut";
  sp.parent_label_after = "apple piece";
  sp.fragments = {rect("slice", 0, "apple piece", 16, 5, 20, 20, 3)};
  s.events.emplace_back(sp);
  return s;
}

}  // namespace

TEST(Simulator, EntitiesMatchRasterizedShapes) {
  SimulatorBackend b(two_boxes(), 0);
  const auto ents = b.segment_entities(0);
  ASSERT_EQ(ents.size(), 2u);
  EXPECT_EQ(ents[0], box_mask(b.frame_size(), 20, 4, 30, 20));  // larger first
  EXPECT_EQ(ents[1], box_mask(b.frame_size(), 2, 2, 10, 10));
  EXPECT_THROW(b.segment_entities(6), ValidationError);
}

TEST(Simulator, EmptySceneHasNoEntities) {
  auto s = two_boxes();
  s.objects.push_back(rect("late", 2, "late", 12, 12, 16, 16));
  s.events.emplace_back(NewObjectEvent{4, "late"});
  SimulatorBackend b(s, 0);
  EXPECT_EQ(b.segment_entities(0).size(), 2u);
  EXPECT_EQ(b.segment_entities(4).size(), 3u);
}

TEST(Simulator, OverlapGoesToLargerObject) {
  auto s = two_boxes();
  s.objects[0] = rect("a", 0, "apple", 16, 2, 24, 10);  // overlaps b on x 20..24, y 4..10
  SimulatorBackend b(s, 0);
  const auto& a = b.visible_mask("a", 0);
  const auto& big = b.visible_mask("b", 0);
  EXPECT_EQ(intersection_area(a, big), 0u);
  EXPECT_EQ(big, box_mask(b.frame_size(), 20, 4, 30, 20));
  EXPECT_EQ(a.area(), 64u - 24u);
}

TEST(Simulator, TrackWithoutEventsEqualsGroundTruth) {
  SimulatorBackend b(two_boxes(), 0);
  const auto gt = b.ground_truth();
  const auto t = b.track(0, gt.prompt_mask);
  ASSERT_EQ(t.primary_masks.size(), 6u);
  for (int f = 0; f < 6; ++f) EXPECT_EQ(*t.mask_at(f), gt.lineage_masks[static_cast<std::size_t>(f)]);
  EXPECT_TRUE(gt.annotation.transformations.empty());
}

TEST(Simulator, TrackerFollowsOnlyTheRemnantAfterASplit) {
  SimulatorBackend b(cut_scene(), 0);
  const auto t = b.track(0, b.visible_mask("apple", 0));
  for (int f = 3; f < 8; ++f) {
    EXPECT_EQ(intersection_area(*t.mask_at(f), b.visible_mask("slice", f)), 0u);
    EXPECT_EQ(*t.mask_at(f), b.visible_mask("apple", f));
  }
}

TEST(Simulator, CandidatesAreNestedDilations) {
  SimulatorBackend b(cut_scene(), 0);
  const auto t = b.track(0, b.visible_mask("apple", 0));
  ASSERT_TRUE(t.has_candidates());
  for (int f = 0; f < 8; ++f) {
    const auto& c = *t.candidates_at(f);
    EXPECT_EQ(c[0], *t.mask_at(f));
    EXPECT_EQ(c[1], dilate(c[0], 3));
    EXPECT_EQ(c[2], dilate(c[0], 9));
    EXPECT_EQ((c[0] - c[1]).area(), 0u);
    EXPECT_EQ((c[1] - c[2]).area(), 0u);
  }
}

TEST(Simulator, AppearanceChangeLosesEarlierTracks) {
  auto s = two_boxes();
  s.events.emplace_back(AppearanceChangeEvent{3, "a"});
  SimulatorBackend b(s, 0);
  const auto t = b.track(0, b.visible_mask("a", 0));
  EXPECT_FALSE(t.mask_at(2)->empty());
  EXPECT_TRUE(t.mask_at(3)->empty());
  const auto later = b.track(3, b.visible_mask("a", 3));
  EXPECT_EQ(*later.mask_at(5), b.visible_mask("a", 5));
}

TEST(Simulator, EmbeddingsAreUnitAndClassSeparated) {
  SimulatorBackend b(two_boxes(), 0);
  const auto a0 = b.embed(0, b.visible_mask("a", 0));
  const auto a1 = b.embed(1, b.visible_mask("a", 1));
  const auto b0 = b.embed(0, b.visible_mask("b", 0));
  EXPECT_NEAR(a0.norm(), 1.0, 1e-12);
  EXPECT_GE(a0.dot(a1), 0.95);
  EXPECT_LE(a0.dot(b0), 0.3);
  EXPECT_THROW(b.embed(0, BinaryMask(b.frame_size())), ValidationError);
}

TEST(Simulator, NoiseFreeEmbeddingIsTheClassBasis) {
  auto s = two_boxes();
  s.embed_sigma = 0;
  SimulatorBackend b(s, 0);
  const auto e = b.embed(0, b.visible_mask("b", 0));
  std::vector<double> expect(8, 0.0);
  expect[1] = 1.0;
  EXPECT_EQ(e.values, expect);
}

TEST(Simulator, DescribeCopiesSplitMetadata) {
  SimulatorBackend b(cut_scene(), 0);
  const std::vector<BinaryMask> before{b.visible_mask("apple", 0)};
  const std::vector<BinaryMask> after{b.visible_mask("apple", 3), b.visible_mask("slice", 3)};
  const auto d = b.describe(0, 3, before, after);
  EXPECT_EQ(d.action_verb, "cut");
  EXPECT_EQ(d.objects, (std::vector<std::pair<int, std::string>>{{0, "apple piece"}, {1, "apple piece"}}));
}

TEST(Simulator, DescribeFallsBackToClassNames) {
  SimulatorBackend b(two_boxes(), 0);
  const std::vector<BinaryMask> before{b.visible_mask("a", 0)};
  const std::vector<BinaryMask> after{b.visible_mask("b", 2)};
  const auto d = b.describe(0, 2, before, after);
  EXPECT_EQ(d.action_verb, "unknown");
  EXPECT_EQ(d.objects, (std::vector<std::pair<int, std::string>>{{0, "bowl"}}));
  EXPECT_THROW(b.describe(2, 2, before, after), ValidationError);
}

TEST(Simulator, GroundTruthForOneSplit) {
  const auto sim = simulate(cut_scene(), 0);
  const auto& ann = sim.truth.annotation;
  ASSERT_EQ(ann.transformations.size(), 1u);
  const auto& tr = ann.transformations[0];
  EXPECT_EQ(tr.t_s, 3);
  EXPECT_EQ(tr.t_e, 5);
  EXPECT_EQ(tr.verb, "cut");
  ASSERT_EQ(tr.resulting_objects.size(), 2u);
  EXPECT_EQ(tr.resulting_objects[0].mask, sim.backend->visible_mask("apple", 5));
  EXPECT_EQ(tr.resulting_objects[1].text, "apple piece");
  EXPECT_EQ(sim.truth.lineage_masks[5], sim.backend->visible_mask("apple", 5) | sim.backend->visible_mask("slice", 5));
}

TEST(Simulator, DeterministicForSameSeed) {
  const auto s = make_family_scenario("split-adjacent-same-class", 4);
  SimulatorBackend a(s, 9), b(s, 9), c(s, 10);
  const auto m = a.visible_mask("apple", 2);
  EXPECT_EQ(a.embed(2, m).values, b.embed(2, m).values);
  EXPECT_NE(a.embed(2, m).values, c.embed(2, m).values);
}

TEST(Simulator, RejectsInvalidScenarios) {
  auto s = cut_scene();
  s.events.emplace_back(NewObjectEvent{8, "apple"});
  EXPECT_THROW(SimulatorBackend(s, 0), ValidationError);

  auto far = cut_scene();
  std::get<SplitEvent>(far.events[0]).fragments[0] = rect("slice", 0, "apple piece", 34, 25, 38, 29, 3);
  EXPECT_THROW(SimulatorBackend(far, 0), ValidationError);

  auto dup = two_boxes();
  dup.objects.push_back(rect("a", 0, "apple", 0, 0, 2, 2));
  EXPECT_THROW(SimulatorBackend(dup, 0), ValidationError);

  auto missing = two_boxes();
  missing.prompt_object = "zzz";
  EXPECT_THROW(SimulatorBackend(missing, 0), ValidationError);
}

TEST(Scenario, JsonRoundTrip) {
  const auto s = make_family_scenario("two-split", 2);
  const auto j = scenario_to_json(s);
  EXPECT_EQ(scenario_to_json(scenario_from_json(j)).dump(), j.dump());
}

TEST(Scenario, FamiliesAreValidAndDeterministic) {
  for (const auto& name : family_names()) {
    for (std::uint64_t seed = 0; seed < 30; ++seed) {
      const auto s = make_family_scenario(name, seed);
      EXPECT_EQ(scenario_to_json(s).dump(), scenario_to_json(make_family_scenario(name, seed)).dump());
      EXPECT_NO_THROW(simulate(s)) << name << " seed " << seed;
    }
  }
  EXPECT_THROW(make_family_scenario("nope", 0), ValidationError);
}
