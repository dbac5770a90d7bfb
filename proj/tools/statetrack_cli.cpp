// statetrack command-line driver.
//
//   statetrack run       --backend simulate:scene.json --out runs/a
//   statetrack simulate  --family split-adjacent-same-class --family-seed 3 --out sim/
//   statetrack evaluate  --pred runs/a --truth sim/truth
//   statetrack sweep     --family split-adjacent-same-class --seeds 10 --out grid.csv
//   statetrack generate  --family two-split --family-seed 1 --out scene.json
//
// Exit codes: 0 ok, 1 other error, 2 invalid input, 3 bundle incomplete, 4 I/O.

#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "http_judge.hpp"
#include "statetrack.hpp"

namespace st = statetrack;

namespace {

// Command-line overrides; unset fields leave the config file (or the
// defaults) alone.
struct ConfigFlags {
  std::string config_file;
  std::optional<double> tau_coverage, tau_remove, min_area_fraction, tau_prox, tau_sem;
  std::optional<int> processing_stride, embed_stride;
  bool no_semantic = false, no_proximity = false, accept_all = false, chain_anchors = false;
  std::optional<std::uint64_t> seed;
  std::optional<int> dilation_r1, dilation_r2, grace;

  void attach(CLI::App* app) {
    app->add_option("--config", config_file, "JSON config with \"partition\" and \"reasoning\" sections")
        ->check(CLI::ExistingFile);
    app->add_option("--tau-coverage", tau_coverage, "coverage threshold for starting a new track");
    app->add_option("--tau-remove", tau_remove, "initial-frame cover above which an entity is dropped");
    app->add_option("--min-area-fraction", min_area_fraction, "ignore entities smaller than this share of the frame");
    app->add_option("--processing-stride", processing_stride, "process every n-th frame");
    app->add_option("--tau-prox", tau_prox, "spatial proximity threshold");
    app->add_option("--tau-sem", tau_sem, "semantic consistency threshold");
    app->add_option("--embed-stride", embed_stride, "frame stride for embedding pairs");
    app->add_flag("--no-semantic", no_semantic, "disable the semantic filter");
    app->add_flag("--no-proximity", no_proximity, "disable the proximity filter");
    app->add_flag("--accept-all-candidates", accept_all, "accept every late-emergent track");
    app->add_flag("--chain-anchors", chain_anchors, "also compare candidates against accepted tracks");
    app->add_option("--seed", seed, "simulator seed (overrides the scenario)");
    app->add_option("--dilation-r1", dilation_r1, "simulator candidate dilation radius 1");
    app->add_option("--dilation-r2", dilation_r2, "simulator candidate dilation radius 2");
    app->add_option("--grace", grace, "simulator annotation interval length");
  }

  st::PipelineConfig pipeline() const {
    st::PipelineConfig c;
    if (!config_file.empty()) c = st::config_from_json(st::read_json_file(config_file), c, config_file);
    auto& p = c.partition;
    auto& r = c.reasoning;
    if (tau_coverage) p.tau_coverage = *tau_coverage;
    if (tau_remove) p.tau_remove = *tau_remove;
    if (min_area_fraction) p.min_area_fraction = *min_area_fraction;
    if (processing_stride) p.processing_stride = *processing_stride;
    if (tau_prox) r.tau_prox = *tau_prox;
    if (tau_sem) r.tau_sem = *tau_sem;
    if (embed_stride) r.embed_stride = *embed_stride;
    if (no_semantic || accept_all) r.use_semantic = false;
    if (no_proximity || accept_all) r.use_proximity = false;
    if (chain_anchors) r.chain_anchors = true;
    st::validate(p);
    st::validate(r);
    return c;
  }

  st::ScenarioOverrides overrides() const { return {seed, dilation_r1, dilation_r2, grace}; }
};

// Scenario from a file or from a family generator.
struct ScenarioFlags {
  std::vector<std::string> files;
  std::string family;
  std::uint64_t first_seed = 0;
  int count = 1;

  void attach(CLI::App* app, bool many) {
    auto* f = app->add_option("--scenario", files, "scenario JSON file")->check(CLI::ExistingFile);
    auto* fam = app->add_option("--family", family, "scenario family name")->excludes(f);
    if (many) {
      app->add_option("--first-seed", first_seed, "first family seed");
      app->add_option("--seeds", count, "number of family seeds")->check(CLI::PositiveNumber);
    } else {
      app->add_option("--family-seed", first_seed, "family seed");
      f->expected(1);
    }
    (void)fam;
  }

  std::vector<st::Scenario> load(const st::ScenarioOverrides& ov) const {
    std::vector<st::Scenario> out;
    if (!family.empty()) {
      for (int i = 0; i < count; ++i) {
        auto s = st::make_family_scenario(family, first_seed + static_cast<std::uint64_t>(i));
        ov.apply(s);
        st::validate_scenario(s);
        out.push_back(std::move(s));
      }
    } else {
      for (const auto& f : files) out.push_back(st::load_scenario(f, ov));
    }
    if (out.empty()) throw st::ValidationError("give --scenario or --family");
    return out;
  }
};

std::vector<double> parse_range(const std::string& text, const char* what) {
  std::vector<double> v;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    try {
      v.push_back(std::stod(item));
    } catch (const std::exception&) {
      throw st::ValidationError(std::string(what) + ": '" + item + "' is not a number");
    }
  }
  if (v.size() != 3) throw st::ValidationError(std::string(what) + " must be lo,hi,step");
  return st::grid(v[0], v[1], v[2]);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"State-change-aware object tracking"};
  app.require_subcommand(1);
  app.set_version_flag("--version", st::kVersion);

  // run
  auto* run = app.add_subcommand("run", "track the prompt object and build the state graph");
  std::string backend_spec, out_dir, prompt_object, prompt_rle, prompt_file;
  bool print_graph = false;
  ConfigFlags run_cfg;
  run->add_option("--backend", backend_spec, "simulate:<scenario.json> or replay:<bundle dir>")->required();
  run->add_option("--out", out_dir, "output directory")->required();
  auto* po = run->add_option("--prompt-object", prompt_object, "prompt by scenario object id");
  auto* pr = run->add_option("--prompt-rle", prompt_rle, "prompt mask as RLE text")->excludes(po);
  run->add_option("--prompt-file", prompt_file, "prompt.json with an \"rle\" field")->excludes(po)->excludes(pr);
  run->add_flag("--print-graph", print_graph, "print the state graph");
  run_cfg.attach(run);

  // simulate
  auto* sim = app.add_subcommand("simulate", "record a replay bundle and ground truth from a scenario");
  ScenarioFlags sim_scene;
  ConfigFlags sim_cfg;
  std::string sim_out;
  sim_scene.attach(sim, false);
  sim->add_option("--out", sim_out, "output directory")->required();
  sim_cfg.attach(sim);

  // evaluate
  auto* ev = app.add_subcommand("evaluate", "score a run against ground truth");
  std::string pred_dir, truth_dir, report_path, judge_kind = "rule", synonyms, judge_url = "https://api.openai.com",
                                              judge_model = "gpt-4";
  bool skip_empty = false;
  ev->add_option("--pred", pred_dir, "run output directory")->required();
  ev->add_option("--truth", truth_dir, "directory with tas.json and gt_masks.json")->required();
  ev->add_option("--report", report_path, "report path (default <pred>/report.json)");
  ev->add_option("--judge", judge_kind, "rule or external")->check(CLI::IsMember({"rule", "external"}));
  ev->add_option("--synonyms", synonyms, "extra synonym tables for the rule judge")->check(CLI::ExistingFile);
  ev->add_option("--judge-url", judge_url, "external judge base URL");
  ev->add_option("--judge-model", judge_model, "external judge model name");
  ev->add_flag("--skip-empty-gt-frames", skip_empty, "leave frames with empty ground truth out of J");

  // sweep
  auto* sw = app.add_subcommand("sweep", "grid over tau_prox x tau_sem");
  ScenarioFlags sw_scene;
  ConfigFlags sw_cfg;
  std::string sw_out, prox_range = "0.1,0.5,0.1", sem_range = "0.5,0.9,0.1";
  sw_scene.attach(sw, true);
  sw->add_option("--tau-prox-range", prox_range, "lo,hi,step");
  sw->add_option("--tau-sem-range", sem_range, "lo,hi,step");
  sw->add_option("--out", sw_out, "CSV path (default stdout)");
  sw_cfg.attach(sw);

  // generate
  auto* gen = app.add_subcommand("generate", "write a family scenario as JSON");
  std::string gen_family, gen_out;
  std::uint64_t gen_seed = 0;
  gen->add_option("--family", gen_family, "family name")->required();
  gen->add_option("--family-seed", gen_seed, "family seed");
  gen->add_option("--out", gen_out, "output path (default stdout)");

  app.add_subcommand("families", "list scenario families");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (run->parsed()) {
      st::RunConfig cfg;
      cfg.backend_spec = backend_spec;
      cfg.pipeline = run_cfg.pipeline();
      cfg.overrides = run_cfg.overrides();
      cfg.out_dir = out_dir;
      if (!prompt_object.empty()) cfg.prompt = {st::PromptSource::Kind::object_id, prompt_object};
      if (!prompt_rle.empty()) cfg.prompt = {st::PromptSource::Kind::rle, prompt_rle};
      if (!prompt_file.empty()) cfg.prompt = {st::PromptSource::Kind::file, prompt_file};
      const auto out = st::run_pipeline(cfg);
      std::cout << "tracks: " << out.tracks.size() << ", candidates: " << out.result.scores.size()
                << ", accepted: " << out.result.valid.size() << ", edges: " << out.result.graph.edges.size() << "\n";
      if (print_graph) std::cout << st::graph_listing(out.result.graph);
    } else if (sim->parsed()) {
      const auto scenes = sim_scene.load(sim_cfg.overrides());
      st::write_simulation(scenes.front(), sim_cfg.pipeline(), sim_out);
      std::cout << "wrote " << sim_out << "\n";
    } else if (ev->parsed()) {
      std::unique_ptr<st::Judge> judge;
      if (judge_kind == "external") {
        judge = st::cli::make_http_judge(judge_url, judge_model);
      } else if (!synonyms.empty()) {
        judge = std::make_unique<st::RuleBasedJudge>(st::RuleBasedJudge::from_json(st::read_json_file(synonyms), synonyms));
      } else {
        judge = std::make_unique<st::RuleBasedJudge>();
      }
      const std::filesystem::path report = report_path.empty() ? std::filesystem::path(pred_dir) / "report.json"
                                                               : std::filesystem::path(report_path);
      const auto r = st::evaluate_dirs(pred_dir, truth_dir, *judge, report, {!skip_empty});
      std::cout << st::format_report_table(r);
    } else if (sw->parsed()) {
      const auto cfg = sw_cfg.pipeline();
      std::vector<st::SweepScene> scenes;
      for (const auto& s : sw_scene.load(sw_cfg.overrides())) {
        auto simulation = st::simulate(s);
        scenes.push_back({simulation.backend, simulation.truth.prompt_mask, simulation.truth.lineage_masks});
      }
      const auto rows = st::sweep(scenes, parse_range(prox_range, "--tau-prox-range"),
                                  parse_range(sem_range, "--tau-sem-range"), cfg);
      const auto csv = st::sweep_csv(rows);
      if (sw_out.empty()) {
        std::cout << csv;
      } else {
        st::write_file_atomic(sw_out, csv);
      }
    } else if (gen->parsed()) {
      const auto doc = st::scenario_to_json(st::make_family_scenario(gen_family, gen_seed)).dump(2) + "\n";
      if (gen_out.empty()) {
        std::cout << doc;
      } else {
        st::write_file_atomic(gen_out, doc);
      }
    } else {
      for (const auto& n : st::family_names()) std::cout << n << "\n";
    }
  } catch (const st::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return e.exit_code();
  } catch (const std::filesystem::filesystem_error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 4;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
