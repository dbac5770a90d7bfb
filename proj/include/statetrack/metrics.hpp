#pragma once

// Tracking metrics (J, J_tr, pixel P/R) and state-graph evaluation against
// transformation annotations: temporal bipartite matching, object matching
// by IoU, judge-based semantic accuracy, and the combined recalls.

#include <cmath>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "statetrack/annotation.hpp"
#include "statetrack/backend.hpp"
#include "statetrack/hungarian.hpp"
#include "statetrack/judge.hpp"
#include "statetrack/stategraph.hpp"

namespace statetrack {

inline double ratio_or_zero(double num, double den) { return den > 0 ? num / den : 0.0; }

// ---------------------------------------------------------------------------
// Tracking

struct TrackingConfig {
  // Frames where GT and prediction are both empty count as IoU 1. When
  // false, frames with empty GT are left out of J entirely.
  bool credit_empty_frames = true;
};

struct TrackingReport {
  double J = 0, J_tr = 0, P = 0, R = 0;
  std::vector<int> frames;  // frames contributing to J, ascending
  std::vector<double> per_frame_iou;
};

inline std::vector<int> default_eval_frames(int num_frames) {
  std::vector<int> f;
  for (int t = 1; t < num_frames; ++t) f.push_back(t);
  return f;
}

inline BinaryMask union_at(std::span<const Tubelet> tracks, int frame, FrameSize size) {
  BinaryMask u(size);
  for (const auto& t : tracks) {
    if (const auto* m = t.mask_at(frame)) u |= *m;
  }
  return u;
}

inline TrackingReport tracking_scores(std::span<const Tubelet> pred_tracks, const std::vector<BinaryMask>& gt_masks,
                                      const std::vector<int>& eval_frames, const TrackingConfig& cfg = {}) {
  if (eval_frames.empty()) throw ValidationError("tracking_scores: no evaluation frames");
  if (gt_masks.empty()) throw ValidationError("tracking_scores: no ground-truth masks");
  const auto size = gt_masks.front().size();
  TrackingReport rep;
  double inter_sum = 0, pred_sum = 0, gt_sum = 0;
  for (int f : eval_frames) {
    if (f <= 0 || f >= static_cast<int>(gt_masks.size())) {
      throw ValidationError("tracking_scores: evaluation frame " + std::to_string(f) + " invalid (frame 0 is the prompt)");
    }
    const auto& gt = gt_masks[static_cast<std::size_t>(f)];
    const auto pred = union_at(pred_tracks, f, size);
    const auto inter = static_cast<double>(intersection_area(pred, gt));
    inter_sum += inter;
    pred_sum += static_cast<double>(pred.area());
    gt_sum += static_cast<double>(gt.area());
    if (!cfg.credit_empty_frames && gt.empty()) continue;
    rep.frames.push_back(f);
    rep.per_frame_iou.push_back(iou(pred, gt));
  }
  rep.P = ratio_or_zero(inter_sum, pred_sum);
  rep.R = ratio_or_zero(inter_sum, gt_sum);
  const auto n = rep.per_frame_iou.size();
  if (n > 0) {
    double s = 0;
    for (double v : rep.per_frame_iou) s += v;
    rep.J = s / static_cast<double>(n);
    const auto tail = static_cast<std::size_t>(std::ceil(0.25 * static_cast<double>(n)));
    double st = 0;
    for (std::size_t i = n - tail; i < n; ++i) st += rep.per_frame_iou[i];
    rep.J_tr = st / static_cast<double>(tail);
  }
  return rep;
}

// ---------------------------------------------------------------------------
// Matching

struct TemporalMatch {
  int tp = 0, fp = 0, fn = 0;
  std::vector<std::pair<std::size_t, std::size_t>> matched;  // (gt interval, prediction), zero-cost pairs only
};

// Cost 0 when the predicted time falls inside the interval, 1 otherwise.
inline TemporalMatch temporal_match(const std::vector<int>& pred_times, const std::vector<std::pair<int, int>>& gt_intervals) {
  TemporalMatch m;
  CostMatrix cost(gt_intervals.size(), pred_times.size(), 1.0);
  for (std::size_t i = 0; i < gt_intervals.size(); ++i) {
    for (std::size_t j = 0; j < pred_times.size(); ++j) {
      if (gt_intervals[i].first <= pred_times[j] && pred_times[j] <= gt_intervals[i].second) cost(i, j) = 0.0;
    }
  }
  for (const auto& [i, j] : hungarian(cost).pairs) {
    if (cost(i, j) == 0.0) m.matched.emplace_back(i, j);
  }
  m.tp = static_cast<int>(m.matched.size());
  m.fp = static_cast<int>(pred_times.size()) - m.tp;
  m.fn = static_cast<int>(gt_intervals.size()) - m.tp;
  return m;
}

struct ObjectPair {
  std::size_t pred = 0;
  std::size_t gt = 0;
  double iou = 0;
};

// Maximum-total-IoU assignment, keeping pairs with IoU strictly above the
// threshold.
inline std::vector<ObjectPair> object_match(const std::vector<BinaryMask>& pred_masks,
                                            const std::vector<BinaryMask>& gt_masks, double iou_threshold = 0.5) {
  std::vector<ObjectPair> out;
  if (pred_masks.empty() || gt_masks.empty()) return out;
  CostMatrix ious(pred_masks.size(), gt_masks.size());
  CostMatrix cost(pred_masks.size(), gt_masks.size());
  for (std::size_t p = 0; p < pred_masks.size(); ++p) {
    for (std::size_t g = 0; g < gt_masks.size(); ++g) {
      ious(p, g) = iou(pred_masks[p], gt_masks[g]);
      cost(p, g) = 1.0 - ious(p, g);
    }
  }
  for (const auto& [p, g] : hungarian(cost).pairs) {
    if (ious(p, g) > iou_threshold) out.push_back({p, g, ious(p, g)});
  }
  return out;
}

// ---------------------------------------------------------------------------
// Track-any-state evaluation

struct TransformationDiagnostic {
  std::size_t gt_index = 0;
  std::optional<std::size_t> edge_index;  // matched edge, if any
  int verb_score = 0;
  std::size_t objects_total = 0;    // K_i
  std::size_t objects_matched = 0;  // pairs with IoU > 0.5
  std::vector<int> object_scores;
  bool spatiotemporal = false;
  bool fully_correct = false;
  std::vector<std::string> notes;
};

struct TasCounts {
  int num_gt = 0, num_pred = 0;
  int tp = 0, fp = 0, fn = 0;
  int verb_total = 0, verb_correct = 0;
  int object_total = 0, object_correct = 0;
  int spatiotemporal = 0, fully_correct = 0;

  TasCounts& operator+=(const TasCounts& o) {
    num_gt += o.num_gt;
    num_pred += o.num_pred;
    tp += o.tp;
    fp += o.fp;
    fn += o.fn;
    verb_total += o.verb_total;
    verb_correct += o.verb_correct;
    object_total += o.object_total;
    object_correct += o.object_correct;
    spatiotemporal += o.spatiotemporal;
    fully_correct += o.fully_correct;
    return *this;
  }
};

struct TasReport {
  double T_P = 0, T_R = 0, H_ST = 0, H = 0;
  std::optional<double> A_V, A_O;  // absent when nothing was matched
  TasCounts counts;
  std::vector<TransformationDiagnostic> diagnostics;
};

inline TasReport finalize(const TasCounts& c) {
  TasReport r;
  r.counts = c;
  r.T_P = ratio_or_zero(c.tp, c.tp + c.fp);
  r.T_R = ratio_or_zero(c.tp, c.tp + c.fn);
  if (c.verb_total > 0) r.A_V = static_cast<double>(c.verb_correct) / c.verb_total;
  if (c.object_total > 0) r.A_O = static_cast<double>(c.object_correct) / c.object_total;
  r.H_ST = ratio_or_zero(c.spatiotemporal, c.num_gt);
  r.H = ratio_or_zero(c.fully_correct, c.num_gt);
  return r;
}

// Micro-average over several videos.
inline TasReport combine(const std::vector<TasReport>& reports) {
  TasCounts c;
  for (const auto& r : reports) c += r.counts;
  return finalize(c);
}

inline TasReport evaluate_tas(const StateGraph& graph, std::span<const Tubelet> pred_tracks,
                              const TasAnnotation& annotation, const Judge& judge) {
  validate_annotation(annotation);
  std::map<std::string, const Tubelet*> by_id;
  for (const auto& t : pred_tracks) by_id[t.id] = &t;
  std::optional<FrameSize> size;
  for (const auto& tr : annotation.transformations) size = tr.resulting_objects.front().mask.size();

  std::vector<std::size_t> edge_of_pred;
  std::vector<int> pred_times;
  for (std::size_t e = 0; e < graph.edges.size(); ++e) {
    const int t = graph.edges[e].change.t;
    if (t >= annotation.t_start && t <= annotation.t_end) {
      pred_times.push_back(t);
      edge_of_pred.push_back(e);
    }
  }
  std::vector<std::pair<int, int>> intervals;
  for (const auto& tr : annotation.transformations) intervals.emplace_back(tr.t_s, tr.t_e);
  const auto tm = temporal_match(pred_times, intervals);

  TasCounts c;
  c.num_gt = static_cast<int>(intervals.size());
  c.num_pred = static_cast<int>(pred_times.size());
  c.tp = tm.tp;
  c.fp = tm.fp;
  c.fn = tm.fn;

  std::vector<TransformationDiagnostic> diags(annotation.transformations.size());
  for (std::size_t i = 0; i < diags.size(); ++i) {
    diags[i].gt_index = i;
    diags[i].objects_total = annotation.transformations[i].resulting_objects.size();
  }

  auto safe_judge = [](auto&& fn, std::vector<std::string>& notes) {
    try {
      return fn();
    } catch (const JudgeProtocolError& e) {
      notes.push_back(e.what());
      return 0;
    }
  };

  for (const auto& [gi, pj] : tm.matched) {
    const auto& tr = annotation.transformations[gi];
    const auto& edge = graph.edges[edge_of_pred[pj]];
    auto& d = diags[gi];
    d.edge_index = edge_of_pred[pj];

    const auto& pred_verb = edge.change.description.action_verb;
    if (pred_verb.empty() || tr.verb.empty()) {
      d.notes.push_back("empty verb text");
    } else {
      d.verb_score = safe_judge([&] { return judge.judge_verb(tr.verb, pred_verb); }, d.notes);
    }
    ++c.verb_total;
    if (d.verb_score == 1) ++c.verb_correct;

    std::vector<BinaryMask> pred_masks;
    std::vector<std::string> pred_texts;
    for (std::size_t k = 0; k < edge.change.post_track_ids.size(); ++k) {
      const auto& id = edge.change.post_track_ids[k];
      auto it = by_id.find(id);
      const BinaryMask* m = it != by_id.end() ? it->second->mask_at(tr.t_e) : nullptr;
      if (!m) d.notes.push_back("track '" + id + "' has no mask at frame " + std::to_string(tr.t_e));
      pred_masks.push_back(m ? *m : BinaryMask(*size));
      const StateNode* node = k < edge.post_nodes.size() ? graph.node(edge.post_nodes[k]) : nullptr;
      pred_texts.push_back(node ? node->label : std::string());
    }
    std::vector<BinaryMask> gt_masks;
    for (const auto& o : tr.resulting_objects) gt_masks.push_back(o.mask);
    const auto pairs = object_match(pred_masks, gt_masks, 0.5);
    d.objects_matched = pairs.size();
    bool all_objects_correct = true;
    for (const auto& p : pairs) {
      int s = 0;
      const auto& gt_text = tr.resulting_objects[p.gt].text;
      if (pred_texts[p.pred].empty() || gt_text.empty()) {
        d.notes.push_back("empty object text");
      } else {
        s = safe_judge([&] { return judge.judge_object(gt_text, pred_texts[p.pred]); }, d.notes);
      }
      d.object_scores.push_back(s);
      ++c.object_total;
      if (s == 1) ++c.object_correct;
      all_objects_correct &= s == 1;
    }
    d.spatiotemporal = pairs.size() == tr.resulting_objects.size();
    d.fully_correct = d.spatiotemporal && d.verb_score == 1 && all_objects_correct;
    if (d.spatiotemporal) ++c.spatiotemporal;
    if (d.fully_correct) ++c.fully_correct;
  }

  auto report = finalize(c);
  report.diagnostics = std::move(diags);
  return report;
}

// ---------------------------------------------------------------------------
// report.json pieces

inline json tracking_to_json(const TrackingReport& r) {
  json frames = json::array();
  for (std::size_t i = 0; i < r.frames.size(); ++i) frames.push_back(json{{"frame", r.frames[i]}, {"iou", r.per_frame_iou[i]}});
  return json{{"J", r.J}, {"J_tr", r.J_tr}, {"P", r.P}, {"R", r.R}, {"per_frame", std::move(frames)}};
}

inline json tas_to_json(const TasReport& r) {
  const auto& c = r.counts;
  json diags = json::array();
  for (const auto& d : r.diagnostics) {
    diags.push_back(json{{"gt_index", d.gt_index},
                         {"edge_index", d.edge_index ? json(*d.edge_index) : json(nullptr)},
                         {"verb_score", d.verb_score},
                         {"objects_total", d.objects_total},
                         {"objects_matched", d.objects_matched},
                         {"object_scores", d.object_scores},
                         {"spatiotemporal", d.spatiotemporal},
                         {"fully_correct", d.fully_correct},
                         {"notes", d.notes}});
  }
  return json{{"T_P", r.T_P},
              {"T_R", r.T_R},
              {"A_V", r.A_V ? json(*r.A_V) : json(nullptr)},
              {"A_O", r.A_O ? json(*r.A_O) : json(nullptr)},
              {"H_ST", r.H_ST},
              {"H", r.H},
              {"counts",
               {{"num_gt", c.num_gt},
                {"num_pred", c.num_pred},
                {"TP", c.tp},
                {"FP", c.fp},
                {"FN", c.fn},
                {"verb_total", c.verb_total},
                {"verb_correct", c.verb_correct},
                {"object_total", c.object_total},
                {"object_correct", c.object_correct},
                {"spatiotemporal", c.spatiotemporal},
                {"fully_correct", c.fully_correct}}},
              {"transformations", std::move(diags)}};
}

}  // namespace statetrack
