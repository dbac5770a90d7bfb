#include <gtest/gtest.h>

#include "test_support.hpp"

using namespace statetrack;
using statetrack::testing::scratch_dir;
using statetrack::testing::snapshot_dir;

namespace {

std::filesystem::path write_scenario(const std::filesystem::path& dir, const Scenario& s) {
  const auto path = dir / "scenario.json";
  write_json_file(path, scenario_to_json(s));
  return path;
}

RunConfig simulate_run(const std::filesystem::path& scenario, const std::filesystem::path& out) {
  RunConfig cfg;
  cfg.backend_spec = "simulate:" + scenario.string();
  cfg.out_dir = out;
  return cfg;
}

}  // namespace

TEST(Pipeline, SplitSceneEndToEnd) {
  const auto dir = scratch_dir("pipe-split");
  const auto cfg = simulate_run(write_scenario(dir, make_family_scenario("split-adjacent-same-class", 0)), dir / "out");
  const auto out = run_pipeline(cfg);
  ASSERT_EQ(out.tracks.size(), 2u);
  EXPECT_EQ(out.tracks[0].id, "prompt");
  EXPECT_EQ(out.result.graph.edges.size(), 1u);
  for (const char* f : {"tracks.json", "graph.json", "scores.json", "partition.json", "manifest.json"}) {
    EXPECT_TRUE(std::filesystem::exists(dir / "out" / f)) << f;
  }
  const auto back = tracks_from_json(read_json_file(dir / "out" / "tracks.json"));
  ASSERT_EQ(back.size(), 2u);
  EXPECT_EQ(back[1].primary_masks, out.tracks[1].primary_masks);
  EXPECT_EQ(parse_graph(read_text_file(dir / "out" / "graph.json")).edges.size(), 1u);
}

TEST(Pipeline, NoEventSceneKeepsOnlyThePrompt) {
  const auto dir = scratch_dir("pipe-none");
  const auto out = run_pipeline(simulate_run(write_scenario(dir, make_family_scenario("no-event", 5)), {}));
  ASSERT_EQ(out.tracks.size(), 1u);
  EXPECT_TRUE(out.result.graph.edges.empty());
  auto sim = simulate(make_family_scenario("no-event", 5));
  EXPECT_EQ(out.tracks[0].primary_masks, base_tracker(*sim.backend, sim.truth.prompt_mask).primary_masks);
}

TEST(Pipeline, RepeatedRunsAreByteIdentical) {
  const auto dir = scratch_dir("pipe-determinism");
  const auto scenario = write_scenario(dir, make_family_scenario("two-split", 8));
  run_pipeline(simulate_run(scenario, dir / "a"));
  run_pipeline(simulate_run(scenario, dir / "b"));
  EXPECT_EQ(snapshot_dir(dir / "a"), snapshot_dir(dir / "b"));
}

TEST(Pipeline, ReplayReproducesTheSimulatorRun) {
  const auto dir = scratch_dir("pipe-replay");
  const auto scene = make_family_scenario("adjacent-different-class", 4);
  write_simulation(scene, {}, dir / "sim");
  const auto direct = run_pipeline(simulate_run(dir / "sim" / "scenario.json", dir / "direct"));

  RunConfig rc;
  rc.backend_spec = "replay:" + (dir / "sim" / "bundle").string();
  rc.prompt = {PromptSource::Kind::file, (dir / "sim" / "prompt.json").string()};
  rc.out_dir = dir / "replay";
  run_pipeline(rc);
  run_pipeline(rc);
  for (const char* f : {"tracks.json", "graph.json", "scores.json", "partition.json"}) {
    EXPECT_EQ(read_text_file(dir / "direct" / f), read_text_file(dir / "replay" / f)) << f;
  }
  EXPECT_EQ(direct.manifest["prompt_hash"], read_json_file(dir / "replay" / "manifest.json")["prompt_hash"]);
}

TEST(Pipeline, ReplayNeedsAnExplicitPrompt) {
  const auto dir = scratch_dir("pipe-replay-prompt");
  write_simulation(make_family_scenario("no-event", 0), {}, dir);
  RunConfig rc;
  rc.backend_spec = "replay:" + (dir / "bundle").string();
  EXPECT_THROW(run_pipeline(rc), ValidationError);
  rc.prompt = {PromptSource::Kind::rle, "3,3:0,9"};
  EXPECT_THROW(run_pipeline(rc), ValidationError);
}

TEST(Pipeline, SimulationOutputsEvaluateToPerfectTas) {
  const auto dir = scratch_dir("pipe-eval");
  const auto scene = make_family_scenario("split-adjacent-same-class", 9);
  write_simulation(scene, {}, dir / "sim");
  run_pipeline(simulate_run(dir / "sim" / "scenario.json", dir / "pred"));
  const auto r = evaluate_dirs(dir / "pred", dir / "sim" / "truth", RuleBasedJudge{}, dir / "report.json");
  EXPECT_EQ(r.tas.T_R, 1.0);
  EXPECT_EQ(r.tas.H_ST, 1.0);
  EXPECT_EQ(r.tas.H, 1.0);
  EXPECT_GT(r.tracking.J, 0.95);
  EXPECT_TRUE(std::filesystem::exists(dir / "report.json"));
  EXPECT_NE(format_report_table(r).find("H_ST"), std::string::npos);
}

TEST(Pipeline, SelfEvaluationOfTruthIsPerfect) {
  auto sim = simulate(make_family_scenario("two-split", 2));
  const auto p = statetrack::testing::prediction_from_truth(sim.truth.annotation, sim.truth.lineage_masks);
  const auto r = evaluate_prediction(p.tracks, p.graph, sim.truth.annotation, sim.truth.lineage_masks, RuleBasedJudge{});
  EXPECT_EQ(r.tracking.J, 1.0);
  EXPECT_EQ(r.tracking.J_tr, 1.0);
  EXPECT_EQ(r.tracking.P, 1.0);
  EXPECT_EQ(r.tracking.R, 1.0);
  EXPECT_EQ(r.tas.T_P, 1.0);
  EXPECT_EQ(r.tas.T_R, 1.0);
  EXPECT_EQ(*r.tas.A_V, 1.0);
  EXPECT_EQ(*r.tas.A_O, 1.0);
  EXPECT_EQ(r.tas.H_ST, 1.0);
  EXPECT_EQ(r.tas.H, 1.0);
}

TEST(Pipeline, EvaluateReportsMissingFiles) {
  const auto dir = scratch_dir("pipe-missing");
  write_simulation(make_family_scenario("no-event", 1), {}, dir / "sim");
  run_pipeline(simulate_run(dir / "sim" / "scenario.json", dir / "pred"));
  std::filesystem::remove(dir / "pred" / "graph.json");
  EXPECT_THROW(evaluate_dirs(dir / "pred", dir / "sim" / "truth", RuleBasedJudge{}, {}), ValidationError);
}

TEST(Pipeline, EvaluateRejectsShortTracks) {
  auto sim = simulate(make_family_scenario("no-event", 1));
  std::vector<Tubelet> tracks{base_tracker(*sim.backend, sim.truth.prompt_mask)};
  tracks[0].primary_masks.pop_back();
  EXPECT_THROW(evaluate_prediction(tracks, {}, sim.truth.annotation, sim.truth.lineage_masks, RuleBasedJudge{}),
               ValidationError);
}

TEST(Config, JsonOverridesDefaults) {
  const auto c = config_from_json(json::parse(R"({"reasoning":{"tau_sem":0.5,"use_proximity":false}})"));
  EXPECT_EQ(c.reasoning.tau_sem, 0.5);
  EXPECT_FALSE(c.reasoning.use_proximity);
  EXPECT_EQ(c.reasoning.tau_prox, 0.3);
  EXPECT_EQ(c.partition.tau_coverage, 0.25);
  EXPECT_EQ(config_to_json(config_from_json(config_to_json(c))).dump(), config_to_json(c).dump());
  EXPECT_THROW(config_from_json(json::parse(R"({"partition":{"tau_coverage":"high"}})")), ValidationError);
  EXPECT_THROW(config_from_json(json::parse(R"({"reasoning":{"tau_prox":2}})")), ValidationError);
}

TEST(Config, BackendSpecs) {
  EXPECT_EQ(BackendSpec::parse("simulate:a.json").kind, BackendSpec::Kind::simulate);
  EXPECT_EQ(BackendSpec::parse("replay:/tmp/b").path, "/tmp/b");
  EXPECT_THROW(BackendSpec::parse("camera:0"), ValidationError);
  EXPECT_THROW(BackendSpec::parse("replay:"), ValidationError);
  EXPECT_THROW(BackendSpec::parse("bundle"), ValidationError);
}

TEST(Sweep, GridAndCsv) {
  EXPECT_EQ(grid(0.1, 0.5, 0.1), (std::vector<double>{0.1, 0.2, 0.3, 0.4, 0.5}));
  EXPECT_EQ(grid(0.5, 0.5, 0.1), (std::vector<double>{0.5}));
  EXPECT_THROW(grid(0.5, 0.1, 0.1), ValidationError);

  std::vector<SweepScene> scenes;
  for (std::uint64_t seed = 0; seed < 2; ++seed) {
    auto sim = simulate(make_family_scenario("adjacent-different-class", seed));
    scenes.push_back({sim.backend, sim.truth.prompt_mask, sim.truth.lineage_masks});
  }
  const auto rows = sweep(scenes, grid(0.1, 0.5, 0.1), grid(0.5, 0.9, 0.1), {});
  ASSERT_EQ(rows.size(), 25u);
  const auto csv = sweep_csv(rows);
  EXPECT_EQ(csv.substr(0, csv.find('\n')), "tau_prox,tau_sem,J,J_tr,P,R,accepted");
  EXPECT_EQ(std::count(csv.begin(), csv.end(), '\n'), 26);
  EXPECT_EQ(csv.substr(csv.find('\n') + 1, 10), "0.10,0.50,");

  // The default grid point matches a full pipeline run.
  for (const auto& row : rows) {
    if (std::abs(row.tau_prox - 0.3) > 1e-9 || std::abs(row.tau_sem - 0.7) > 1e-9) continue;
    double j = 0;
    for (const auto& s : scenes) {
      const auto r = run_on_backend(*s.backend, s.prompt, {});
      j += tracking_scores(r.tracks(), s.gt_masks, default_eval_frames(static_cast<int>(s.gt_masks.size()))).J;
    }
    EXPECT_NEAR(row.J, j / 2, 1e-12);
  }
}
