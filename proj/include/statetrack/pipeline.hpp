#pragma once

// End-to-end orchestration: partition -> candidate filtering -> state graph,
// plus the artifact files a run writes and the evaluation and sweep drivers.

#include <filesystem>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "statetrack/annotation.hpp"
#include "statetrack/metrics.hpp"
#include "statetrack/partition.hpp"
#include "statetrack/reasoning.hpp"
#include "statetrack/replay.hpp"
#include "statetrack/scenario.hpp"
#include "statetrack/simulator.hpp"
#include "statetrack/stategraph.hpp"

namespace statetrack {

inline constexpr const char* kVersion = "0.1.0";

struct PipelineConfig {
  PartitionConfig partition;
  ReasoningConfig reasoning;
};

struct PipelineResult {
  PartitionPool pool;
  std::vector<CandidateScore> scores;
  std::vector<const PoolTubelet*> valid;  // points into pool
  StateGraph graph;

  // Output tracks: the prompt track, then accepted candidates in pool order.
  std::vector<Tubelet> tracks() const {
    std::vector<Tubelet> out{pool.prompt.tubelet};
    for (const auto* v : valid) out.push_back(v->tubelet);
    return out;
  }
};

inline PipelineResult run_on_backend(const Backend& backend, const BinaryMask& prompt, const PipelineConfig& cfg) {
  validate(cfg.reasoning);
  PipelineResult r;
  r.pool = build_partition(backend, prompt, cfg.partition);
  EmbeddingCache cache(backend);
  auto filtered = filter_candidates(r.pool, cache, cfg.reasoning);
  r.scores = std::move(filtered.scores);
  r.valid = std::move(filtered.valid);
  r.graph = build_state_graph(r.pool.prompt, r.valid, backend);
  return r;
}

// The tracker alone, seeded with the prompt.
inline Tubelet base_tracker(const Backend& backend, const BinaryMask& prompt) {
  auto t = backend.track(0, prompt);
  t.id = "prompt";
  return t;
}

// ---------------------------------------------------------------------------
// tracks.json

inline json tracks_to_json(const std::vector<Tubelet>& tracks) {
  json arr = json::array();
  for (const auto& t : tracks) {
    json masks = json::array();
    for (const auto& m : t.primary_masks) masks.push_back(to_rle_text(m));
    arr.push_back(json{{"id", t.id}, {"start_frame", t.start_frame}, {"masks", std::move(masks)}});
  }
  return json{{"tracks", std::move(arr)}};
}

inline std::vector<Tubelet> tracks_from_json(const json& doc, const std::string& where = "tracks.json") {
  JsonReader r(doc, where);
  std::vector<Tubelet> out;
  const auto& arr = r.array("tracks");
  for (std::size_t i = 0; i < arr.size(); ++i) {
    JsonReader t(arr[i], where + ".tracks[" + std::to_string(i) + "]");
    Tubelet tub;
    tub.id = t.get<std::string>("id");
    tub.start_frame = t.get<int>("start_frame");
    if (tub.start_frame < 0) throw ValidationError(t.where() + ": start_frame must be >= 0");
    const auto& masks = t.array("masks");
    for (std::size_t j = 0; j < masks.size(); ++j) tub.primary_masks.push_back(t.mask(masks[j], "masks[" + std::to_string(j) + "]"));
    if (tub.primary_masks.empty()) throw ValidationError(t.where() + ": track has no masks");
    for (const auto& m : tub.primary_masks) {
      if (m.size() != tub.primary_masks.front().size()) throw ValidationError(t.where() + ": mask sizes differ");
    }
    out.push_back(std::move(tub));
  }
  return out;
}

// ---------------------------------------------------------------------------
// Configuration echo

inline json config_to_json(const PipelineConfig& c) {
  const auto& p = c.partition;
  const auto& r = c.reasoning;
  return json{{"partition",
               {{"tau_coverage", p.tau_coverage},
                {"tau_remove", p.tau_remove},
                {"min_area_fraction", p.min_area_fraction},
                {"processing_stride", p.processing_stride}}},
              {"reasoning",
               {{"tau_prox", r.tau_prox},
                {"tau_sem", r.tau_sem},
                {"embed_stride", r.embed_stride},
                {"use_proximity", r.use_proximity},
                {"use_semantic", r.use_semantic},
                {"chain_anchors", r.chain_anchors}}}};
}

// Fields present in `doc` override `base`.
inline PipelineConfig config_from_json(const json& doc, PipelineConfig base = {}, const std::string& where = "config") {
  JsonReader r(doc, where);
  if (r.has("partition")) {
    auto p = r.child("partition");
    auto& c = base.partition;
    c.tau_coverage = p.get_or("tau_coverage", c.tau_coverage);
    c.tau_remove = p.get_or("tau_remove", c.tau_remove);
    c.min_area_fraction = p.get_or("min_area_fraction", c.min_area_fraction);
    c.processing_stride = p.get_or("processing_stride", c.processing_stride);
  }
  if (r.has("reasoning")) {
    auto q = r.child("reasoning");
    auto& c = base.reasoning;
    c.tau_prox = q.get_or("tau_prox", c.tau_prox);
    c.tau_sem = q.get_or("tau_sem", c.tau_sem);
    c.embed_stride = q.get_or("embed_stride", c.embed_stride);
    c.use_proximity = q.get_or("use_proximity", c.use_proximity);
    c.use_semantic = q.get_or("use_semantic", c.use_semantic);
    c.chain_anchors = q.get_or("chain_anchors", c.chain_anchors);
  }
  validate(base.partition);
  validate(base.reasoning);
  return base;
}

// ---------------------------------------------------------------------------
// Backend specs: "simulate:<scenario.json>" or "replay:<bundle dir>"

struct ScenarioOverrides {
  std::optional<std::uint64_t> seed;
  std::optional<int> dilation_r1, dilation_r2, grace;

  void apply(Scenario& s) const {
    if (seed) s.seed = *seed;
    if (dilation_r1) s.dilation_r1 = *dilation_r1;
    if (dilation_r2) s.dilation_r2 = *dilation_r2;
    if (grace) s.grace = *grace;
  }

  json to_json() const {
    json j = json::object();
    if (seed) j["seed"] = *seed;
    if (dilation_r1) j["dilation_r1"] = *dilation_r1;
    if (dilation_r2) j["dilation_r2"] = *dilation_r2;
    if (grace) j["grace"] = *grace;
    return j;
  }
};

struct BackendSpec {
  enum class Kind { simulate, replay } kind = Kind::simulate;
  std::filesystem::path path;

  static BackendSpec parse(const std::string& spec) {
    const auto colon = spec.find(':');
    if (colon == std::string::npos || colon + 1 == spec.size()) {
      throw ValidationError("backend spec must be simulate:<scenario> or replay:<bundle>, got '" + spec + "'");
    }
    const auto kind = spec.substr(0, colon);
    BackendSpec b;
    b.path = spec.substr(colon + 1);
    if (kind == "simulate") {
      b.kind = Kind::simulate;
    } else if (kind == "replay") {
      b.kind = Kind::replay;
    } else {
      throw ValidationError("unknown backend kind '" + kind + "'");
    }
    return b;
  }

  std::string str() const { return (kind == Kind::simulate ? "simulate:" : "replay:") + path.string(); }
};

inline Scenario load_scenario(const std::filesystem::path& path, const ScenarioOverrides& overrides = {}) {
  auto s = scenario_from_json(read_json_file(path), path.string());
  overrides.apply(s);
  validate_scenario(s);
  return s;
}

struct OpenedBackend {
  std::shared_ptr<const Backend> backend;
  std::optional<Simulation> simulation;  // set for simulate: specs
};

inline OpenedBackend open_backend(const BackendSpec& spec, const ScenarioOverrides& overrides = {}) {
  if (spec.kind == BackendSpec::Kind::replay) return {load_replay_bundle(spec.path), std::nullopt};
  auto sim = simulate(load_scenario(spec.path, overrides));
  auto backend = sim.backend;
  return {std::move(backend), std::move(sim)};
}

// ---------------------------------------------------------------------------
// Prompt sources

struct PromptSource {
  enum class Kind { scenario_default, object_id, rle, file } kind = Kind::scenario_default;
  std::string value;

  json to_json() const {
    static const char* names[] = {"scenario_default", "object_id", "rle", "file"};
    return json{{"kind", names[static_cast<int>(kind)]}, {"value", value}};
  }
};

// prompt.json: {"rle": "W,H:..."}
inline json prompt_to_json(const BinaryMask& m) { return json{{"rle", to_rle_text(m)}}; }

inline BinaryMask resolve_prompt(const PromptSource& src, const OpenedBackend& opened) {
  BinaryMask m;
  switch (src.kind) {
    case PromptSource::Kind::scenario_default:
    case PromptSource::Kind::object_id: {
      if (!opened.simulation) throw ValidationError("a prompt object id needs a simulate: backend; pass an RLE or file");
      const auto& sim = *opened.simulation->backend;
      const auto id = src.kind == PromptSource::Kind::object_id ? src.value : sim.scenario().prompt_object;
      m = sim.visible_mask(id, 0);
      break;
    }
    case PromptSource::Kind::rle:
      m = mask_from_rle_text(src.value);
      break;
    case PromptSource::Kind::file: {
      const auto doc = read_json_file(src.value);
      JsonReader r(doc, src.value);
      m = r.mask(r.at("rle"), "rle");
      break;
    }
  }
  if (m.size() != opened.backend->frame_size()) {
    throw ValidationError("prompt mask is " + m.size().str() + " but the video is " + opened.backend->frame_size().str());
  }
  if (m.empty()) throw ValidationError("prompt mask is empty at frame 0");
  return m;
}

// ---------------------------------------------------------------------------
// run

struct RunConfig {
  std::string backend_spec;
  PromptSource prompt;
  PipelineConfig pipeline;
  ScenarioOverrides overrides;
  std::filesystem::path out_dir;
};

struct RunOutput {
  PipelineResult result;
  std::vector<Tubelet> tracks;
  json manifest;
};

inline json make_manifest(const RunConfig& cfg, const BinaryMask& prompt, const Backend& backend,
                          const PipelineResult& r) {
  return json{{"tool", "statetrack"},
              {"version", kVersion},
              {"backend", cfg.backend_spec},
              {"scenario_overrides", cfg.overrides.to_json()},
              {"prompt", cfg.prompt.to_json()},
              {"prompt_hash", mask_hash(prompt).hex()},
              {"video", {{"width", backend.frame_size().width},
                         {"height", backend.frame_size().height},
                         {"num_frames", backend.num_frames()},
                         {"embed_dim", backend.embed_dim()}}},
              {"config", config_to_json(cfg.pipeline)},
              {"counts",
               {{"tubelets", 1 + r.pool.others.size()},
                {"late_emergent", r.pool.late_emergent().size()},
                {"accepted", r.valid.size()},
                {"edges", r.graph.edges.size()}}}};
}

inline void write_run_output(const std::filesystem::path& dir, const RunOutput& out) {
  write_json_file(dir / "tracks.json", tracks_to_json(out.tracks));
  write_json_file(dir / "graph.json", graph_to_json(out.result.graph));
  write_json_file(dir / "scores.json", scores_to_json(out.result.scores));
  write_json_file(dir / "partition.json", partition_to_json(out.result.pool));
  write_json_file(dir / "manifest.json", out.manifest);
}

inline RunOutput run_with_backend(const RunConfig& cfg, const OpenedBackend& opened) {
  const auto prompt = resolve_prompt(cfg.prompt, opened);
  RunOutput out;
  out.result = run_on_backend(*opened.backend, prompt, cfg.pipeline);
  out.tracks = out.result.tracks();
  out.manifest = make_manifest(cfg, prompt, *opened.backend, out.result);
  if (!cfg.out_dir.empty()) write_run_output(cfg.out_dir, out);
  return out;
}

inline RunOutput run_pipeline(const RunConfig& cfg) {
  validate(cfg.pipeline.partition);
  validate(cfg.pipeline.reasoning);
  const auto opened = open_backend(BackendSpec::parse(cfg.backend_spec), cfg.overrides);
  return run_with_backend(cfg, opened);
}

// ---------------------------------------------------------------------------
// simulate: record a bundle plus ground truth

// Layout under `dir`: bundle/ (replay bundle), truth/tas.json,
// truth/gt_masks.json, prompt.json, scenario.json. The bundle holds every
// query the pipeline makes under `cfg`.
inline void write_simulation(const Scenario& scenario, const PipelineConfig& cfg, const std::filesystem::path& dir) {
  auto sim = simulate(scenario);
  auto recorder = std::make_shared<RecordingBackend>(sim.backend);
  const auto& prompt = sim.truth.prompt_mask;
  run_on_backend(*recorder, prompt, cfg);
  recorder->write_bundle(dir / "bundle", json{{"source", "simulator"},
                                              {"scenario", scenario.name},
                                              {"seed", scenario.seed},
                                              {"recorded_with", config_to_json(cfg)}});
  write_json_file(dir / "truth" / "tas.json", annotation_to_json(sim.truth.annotation));
  write_json_file(dir / "truth" / "gt_masks.json", gt_masks_to_json(sim.truth.lineage_masks));
  write_json_file(dir / "prompt.json", prompt_to_json(prompt));
  write_json_file(dir / "scenario.json", scenario_to_json(scenario));
}

// ---------------------------------------------------------------------------
// evaluate

struct EvaluationReport {
  TrackingReport tracking;
  TasReport tas;
};

inline EvaluationReport evaluate_prediction(const std::vector<Tubelet>& tracks, const StateGraph& graph,
                                            const TasAnnotation& annotation, const std::vector<BinaryMask>& gt_masks,
                                            const Judge& judge, const TrackingConfig& tcfg = {}) {
  for (const auto& t : tracks) {
    if (t.end_frame() != static_cast<int>(gt_masks.size()) - 1) {
      throw ValidationError("track '" + t.id + "' does not end at the last ground-truth frame");
    }
    if (t.seed().size() != gt_masks.front().size()) throw ValidationError("track '" + t.id + "' mask size mismatch");
  }
  EvaluationReport r;
  r.tracking = tracking_scores(tracks, gt_masks, default_eval_frames(static_cast<int>(gt_masks.size())), tcfg);
  r.tas = evaluate_tas(graph, tracks, annotation, judge);
  return r;
}

inline json report_to_json(const EvaluationReport& r) {
  return json{{"tracking", tracking_to_json(r.tracking)}, {"tas", tas_to_json(r.tas)}};
}

// Reads tracks.json and graph.json from `pred_dir`, tas.json and
// gt_masks.json from `truth_dir`, and writes report.json to `report_path`.
inline EvaluationReport evaluate_dirs(const std::filesystem::path& pred_dir, const std::filesystem::path& truth_dir,
                                      const Judge& judge, const std::filesystem::path& report_path,
                                      const TrackingConfig& tcfg = {}) {
  auto need = [](const std::filesystem::path& p) {
    if (!std::filesystem::exists(p)) throw ValidationError("missing " + p.string());
    return read_json_file(p);
  };
  const auto tracks = tracks_from_json(need(pred_dir / "tracks.json"), (pred_dir / "tracks.json").string());
  const auto graph = graph_from_json(need(pred_dir / "graph.json"), (pred_dir / "graph.json").string());
  const auto annotation = annotation_from_json(need(truth_dir / "tas.json"), (truth_dir / "tas.json").string());
  const auto gt = gt_masks_from_json(need(truth_dir / "gt_masks.json"), (truth_dir / "gt_masks.json").string());
  auto report = evaluate_prediction(tracks, graph, annotation, gt, judge, tcfg);
  if (!report_path.empty()) write_json_file(report_path, report_to_json(report));
  return report;
}

inline std::string format_report_table(const EvaluationReport& r) {
  std::ostringstream out;
  auto opt = [](const std::optional<double>& v) {
    if (!v) return std::string("n/a");
    std::ostringstream s;
    s.setf(std::ios::fixed);
    s.precision(4);
    s << *v;
    return s.str();
  };
  auto row = [&](const char* name, const std::string& value) {
    out << "  " << name << std::string(8 - std::char_traits<char>::length(name), ' ') << value << "\n";
  };
  auto num = [&](double v) { return opt(v); };
  out << "tracking\n";
  row("J", num(r.tracking.J));
  row("J_tr", num(r.tracking.J_tr));
  row("P", num(r.tracking.P));
  row("R", num(r.tracking.R));
  out << "track-any-state\n";
  row("T_P", num(r.tas.T_P));
  row("T_R", num(r.tas.T_R));
  row("A_V", opt(r.tas.A_V));
  row("A_O", opt(r.tas.A_O));
  row("H_ST", num(r.tas.H_ST));
  row("H", num(r.tas.H));
  const auto& c = r.tas.counts;
  out << "  TP=" << c.tp << " FP=" << c.fp << " FN=" << c.fn << " (gt " << c.num_gt << ", pred " << c.num_pred << ")\n";
  return out.str();
}

// ---------------------------------------------------------------------------
// sweep over (tau_prox, tau_sem)

struct SweepScene {
  std::shared_ptr<const Backend> backend;
  BinaryMask prompt;
  std::vector<BinaryMask> gt_masks;
};

struct SweepRow {
  double tau_prox = 0, tau_sem = 0;
  double J = 0, J_tr = 0, P = 0, R = 0;  // means over scenes
  std::size_t accepted = 0;              // total over scenes
};

// Partition and scores are computed once per scene; each grid point only
// re-thresholds them.
inline std::vector<SweepRow> sweep(const std::vector<SweepScene>& scenes, const std::vector<double>& tau_prox,
                                   const std::vector<double>& tau_sem, const PipelineConfig& base) {
  if (scenes.empty()) throw ValidationError("sweep needs at least one scene");
  struct Prepared {
    PartitionPool pool;
    std::vector<CandidateScore> scores;
  };
  std::vector<Prepared> prepared;
  for (const auto& s : scenes) {
    Prepared p;
    p.pool = build_partition(*s.backend, s.prompt, base.partition);
    auto cfg = base.reasoning;
    cfg.use_proximity = cfg.use_semantic = true;
    p.scores = filter_candidates(p.pool, *s.backend, cfg).scores;
    prepared.push_back(std::move(p));
  }
  std::vector<SweepRow> rows;
  for (double tp : tau_prox) {
    for (double ts : tau_sem) {
      SweepRow row{tp, ts};
      auto cfg = base.reasoning;
      cfg.tau_prox = tp;
      cfg.tau_sem = ts;
      validate(cfg);
      for (std::size_t i = 0; i < scenes.size(); ++i) {
        auto scores = prepared[i].scores;
        const auto valid = accept_with(prepared[i].pool, scores, cfg);
        std::vector<Tubelet> tracks{prepared[i].pool.prompt.tubelet};
        for (const auto* v : valid) tracks.push_back(v->tubelet);
        const auto rep =
            tracking_scores(tracks, scenes[i].gt_masks, default_eval_frames(static_cast<int>(scenes[i].gt_masks.size())));
        row.J += rep.J;
        row.J_tr += rep.J_tr;
        row.P += rep.P;
        row.R += rep.R;
        row.accepted += valid.size();
      }
      const auto n = static_cast<double>(scenes.size());
      row.J /= n;
      row.J_tr /= n;
      row.P /= n;
      row.R /= n;
      rows.push_back(row);
    }
  }
  return rows;
}

inline std::string sweep_csv(const std::vector<SweepRow>& rows) {
  std::ostringstream out;
  out.setf(std::ios::fixed);
  out << "tau_prox,tau_sem,J,J_tr,P,R,accepted\n";
  for (const auto& r : rows) {
    out.precision(2);
    out << r.tau_prox << "," << r.tau_sem << ",";
    out.precision(6);
    out << r.J << "," << r.J_tr << "," << r.P << "," << r.R << "," << r.accepted << "\n";
  }
  return out.str();
}

// {lo, lo+step, ..., hi} computed from integer steps.
inline std::vector<double> grid(double lo, double hi, double step) {
  if (!(step > 0) || hi < lo) throw ValidationError("grid needs step > 0 and hi >= lo");
  std::vector<double> out;
  const auto n = static_cast<int>(std::floor((hi - lo) / step + 1e-9));
  for (int i = 0; i <= n; ++i) out.push_back(std::round((lo + step * i) * 1e9) / 1e9);
  return out;
}

}  // namespace statetrack
