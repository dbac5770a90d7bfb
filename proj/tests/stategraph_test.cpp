#include <gtest/gtest.h>

#include "test_support.hpp"

using namespace statetrack;

namespace {

// Delegates everything but describe(), which always throws.
class BrokenDescriber final : public Backend {
 public:
  explicit BrokenDescriber(const Backend& inner) : inner_(inner) {}
  FrameSize frame_size() const override { return inner_.frame_size(); }
  int num_frames() const override { return inner_.num_frames(); }
  int embed_dim() const override { return inner_.embed_dim(); }
  std::vector<BinaryMask> segment_entities(int f) const override { return inner_.segment_entities(f); }
  Tubelet track(int s, const BinaryMask& m) const override { return inner_.track(s, m); }
  Embedding embed(int f, const BinaryMask& m) const override { return inner_.embed(f, m); }
  Description describe(int, int, std::span<const BinaryMask>, std::span<const BinaryMask>) const override {
    throw Error("service unavailable");
  }

 private:
  const Backend& inner_;
};

PipelineResult run_family(const std::string& name, std::uint64_t seed) {
  auto sim = simulate(make_family_scenario(name, seed));
  return run_on_backend(*sim.backend, sim.truth.prompt_mask, {});
}

}  // namespace

TEST(StateGraph, NoEventsGivesOnePromptNode) {
  const auto r = run_family("no-event", 1);
  ASSERT_EQ(r.graph.nodes.size(), 1u);
  EXPECT_EQ(r.graph.nodes[0].id, "prompt#0");
  EXPECT_EQ(r.graph.nodes[0].label, "prompt object");
  EXPECT_TRUE(r.graph.edges.empty());
}

TEST(StateGraph, SingleSplitGivesOneCutEdge) {
  const auto s = make_family_scenario("split-adjacent-same-class", 2);
  const int k = std::get<SplitEvent>(s.events[0]).frame;
  auto sim = simulate(s);
  const auto r = run_on_backend(*sim.backend, sim.truth.prompt_mask, {});
  ASSERT_EQ(r.graph.nodes.size(), 3u);
  ASSERT_EQ(r.graph.edges.size(), 1u);
  const auto& e = r.graph.edges[0];
  EXPECT_EQ(e.change.t, k);
  EXPECT_EQ(e.change.description.action_verb, "cut");
  EXPECT_EQ(e.pre_nodes, (std::vector<std::string>{"prompt#0"}));
  EXPECT_EQ(e.post_nodes, (std::vector<std::string>{"prompt#1", e.change.new_track_id + "#0"}));
  EXPECT_EQ(r.graph.node("prompt#1")->label, "apple piece");
  EXPECT_EQ(r.graph.node(e.post_nodes[1])->label, "apple piece");
  EXPECT_EQ(r.graph.node(e.post_nodes[1])->start_frame, k);
  EXPECT_TRUE(e.diagnostic.empty());
}

TEST(StateGraph, TwoSplitsAreOrderedAndChained) {
  const auto s = make_family_scenario("two-split", 4);
  const int k1 = std::get<SplitEvent>(s.events[0]).frame;
  const int k2 = std::get<SplitEvent>(s.events[1]).frame;
  auto sim = simulate(s);
  const auto r = run_on_backend(*sim.backend, sim.truth.prompt_mask, {});
  ASSERT_EQ(r.graph.edges.size(), 2u);
  EXPECT_EQ(r.graph.edges[0].change.t, k1);
  EXPECT_EQ(r.graph.edges[1].change.t, k2);
  EXPECT_EQ(r.graph.edges[0].change.description.action_verb, "cut");
  EXPECT_EQ(r.graph.edges[1].change.description.action_verb, "slice");
  // The first fragment's track is carried into the second transformation.
  const auto& second = r.graph.edges[1];
  EXPECT_EQ(second.change.pre_track_ids.size(), 2u);
  EXPECT_EQ(second.change.post_track_ids.size(), 3u);
  EXPECT_EQ(second.pre_nodes[0], "prompt#1");
  EXPECT_EQ(second.post_nodes[0], "prompt#2");
  EXPECT_EQ(r.graph.nodes.size(), 6u);
}

TEST(StateGraph, SameFrameEventsOrderByAreaThenHash) {
  const FrameSize size{16, 16};
  auto tube = [&](const std::string& id, const BinaryMask& m) {
    PoolTubelet p;
    p.tubelet = Tubelet{id, 2, {m, m}, {}};
    p.origin = Origin::late_emergent;
    p.seed = m;
    p.seed_hash = mask_hash(m);
    return p;
  };
  const auto small_a = tube("a", statetrack::testing::box_mask(size, 0, 0, 2, 2));
  const auto small_b = tube("b", statetrack::testing::box_mask(size, 4, 4, 6, 6));
  const auto big = tube("c", statetrack::testing::box_mask(size, 8, 8, 12, 12));
  const auto events = detect_state_changes({&small_a, &small_b, &big});
  ASSERT_EQ(events.size(), 3u);
  EXPECT_EQ(events[0].tubelet, &big);
  const bool a_first = small_a.seed_hash < small_b.seed_hash;
  EXPECT_EQ(events[1].tubelet, a_first ? &small_a : &small_b);
  EXPECT_EQ(detect_state_changes({&small_b, &big, &small_a})[1].tubelet, events[1].tubelet);
}

TEST(StateGraph, DescriberFailureKeepsTheEdge) {
  auto sim = simulate(make_family_scenario("split-adjacent-same-class", 3));
  BrokenDescriber broken(*sim.backend);
  const auto r = run_on_backend(broken, sim.truth.prompt_mask, {});
  ASSERT_EQ(r.graph.edges.size(), 1u);
  EXPECT_EQ(r.graph.edges[0].change.description.action_verb, "unknown");
  EXPECT_NE(r.graph.edges[0].diagnostic.find("service unavailable"), std::string::npos);
  // Labels fall back to the previous state's label.
  EXPECT_EQ(r.graph.node("prompt#1")->label, "prompt object");
}

TEST(StateGraph, JsonRoundTripOfTwoEdges) {
  const auto r = run_family("two-split", 1);
  ASSERT_EQ(r.graph.edges.size(), 2u);
  const auto text = serialize_graph(r.graph);
  const auto back = parse_graph(text);
  EXPECT_EQ(serialize_graph(back), text);
  EXPECT_EQ(back.nodes, r.graph.nodes);
}

TEST(StateGraph, ParseRejectsBrokenDocuments) {
  EXPECT_THROW(parse_graph("{"), ValidationError);
  EXPECT_THROW(parse_graph(R"({"nodes":[]})"), ValidationError);
  EXPECT_THROW(parse_graph(R"({"nodes":[{"id":"p#0","label":"x","start_frame":0}],
    "edges":[{"t":1,"pre":["p#0"],"post":["q#0"],"verb":"cut","objects":[]}]})"),
               ValidationError);
  EXPECT_THROW(parse_graph(R"({"nodes":[{"id":"p#0","label":"x","start_frame":0}],
    "edges":[{"t":2,"pre":["p#0"],"post":["p#0"],"verb":"cut","objects":[]},
             {"t":1,"pre":["p#0"],"post":["p#0"],"verb":"cut","objects":[]}]})"),
               ValidationError);
}

TEST(StateGraph, TemporallyConsistentAcrossFamilies) {
  for (const auto& name : family_names()) {
    for (std::uint64_t seed = 0; seed < 4; ++seed) {
      const auto r = run_family(name, seed);
      for (std::size_t i = 1; i < r.graph.edges.size(); ++i) {
        EXPECT_LE(r.graph.edges[i - 1].change.t, r.graph.edges[i].change.t);
      }
      for (const auto& e : r.graph.edges) {
        for (const auto& id : e.pre_nodes) EXPECT_LE(r.graph.node(id)->start_frame, e.change.t);
        for (const auto& id : e.post_nodes) EXPECT_EQ(r.graph.node(id)->start_frame, e.change.t);
        EXPECT_EQ(e.post_nodes.size(), e.pre_nodes.size() + 1);
      }
    }
  }
}

TEST(StateGraph, ListingNamesEveryEdge) {
  const auto r = run_family("two-split", 0);
  const auto text = graph_listing(r.graph);
  EXPECT_NE(text.find("cut"), std::string::npos);
  EXPECT_NE(text.find("slice"), std::string::npos);
}
