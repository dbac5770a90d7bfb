#pragma once

// Deterministic scripted-scene backend.
//
// Every frame is rendered up front. Overlapping shapes are resolved by
// descending raw area (larger keeps contested pixels), so the per-object
// visible masks are pairwise disjoint and double as entity segmentation.
//
// The simulated tracker follows the object whose visible mask at the start
// frame overlaps the query most. It never picks up fragments that split off
// later, and it loses an object for good at an appearance change that
// happens after the track began. These two rules produce the false negatives
// the pipeline is meant to repair.

#include <algorithm>
#include <cmath>
#include <map>
#include <memory>
#include <numbers>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "statetrack/annotation.hpp"
#include "statetrack/backend.hpp"
#include "statetrack/scenario.hpp"

namespace statetrack {

struct GroundTruth {
  BinaryMask prompt_mask;                // prompt object at frame 0
  std::vector<BinaryMask> lineage_masks;  // prompt plus every fragment derived from it, per frame
  TasAnnotation annotation;
};

class SimulatorBackend final : public Backend {
 public:
  SimulatorBackend(Scenario scenario, std::uint64_t seed) : scenario_(std::move(scenario)), seed_(seed) {
    validate_scenario(scenario_);
    build_object_table();
    render();
    validate_geometry();
  }
  SimulatorBackend(const SimulatorBackend&) = delete;
  SimulatorBackend& operator=(const SimulatorBackend&) = delete;

  FrameSize frame_size() const override { return scenario_.size; }
  int num_frames() const override { return scenario_.num_frames; }
  int embed_dim() const override { return scenario_.embed_dim; }

  const Scenario& scenario() const { return scenario_; }
  std::uint64_t seed() const { return seed_; }

  std::vector<BinaryMask> segment_entities(int frame) const override {
    check_frame(frame);
    std::vector<BinaryMask> out;
    for (auto idx : priority_[static_cast<std::size_t>(frame)]) {
      const auto& m = visible(idx, frame);
      if (!m.empty()) out.push_back(m);
    }
    return out;
  }

  Tubelet track(int start_frame, const BinaryMask& mask) const override {
    check_frame(start_frame);
    check_mask(mask);
    if (mask.empty()) throw ValidationError("track() requires a nonempty seed mask");
    Tubelet t;
    t.start_frame = start_frame;
    const auto target = best_overlap(start_frame, mask);
    if (!target) {
      // Nothing to follow: the seed itself, then lost.
      t.id = "sim:none@" + std::to_string(start_frame);
      for (int f = start_frame; f < num_frames(); ++f) {
        t.primary_masks.push_back(f == start_frame ? mask : BinaryMask(frame_size()));
      }
    } else {
      const auto& obj = objects_[*target];
      t.id = "sim:" + obj.spec.id + "@" + std::to_string(start_frame);
      int lost_from = num_frames();
      for (int c : obj.appearance_changes) {
        if (c > start_frame) lost_from = std::min(lost_from, c);
      }
      for (int f = start_frame; f < num_frames(); ++f) {
        t.primary_masks.push_back(f < lost_from ? visible(*target, f) : BinaryMask(frame_size()));
      }
    }
    for (const auto& m : t.primary_masks) {
      t.candidates.push_back(make_dilation_candidates(m, scenario_.dilation_r1, scenario_.dilation_r2));
    }
    return t;
  }

  // Mask-pooled class basis vectors plus seeded noise of norm sigma.
  Embedding embed(int frame, const BinaryMask& mask) const override {
    check_frame(frame);
    check_mask(mask);
    const std::size_t area = mask.area();
    if (area == 0) throw ValidationError("embed() of an empty mask");
    const auto d = static_cast<std::size_t>(scenario_.embed_dim);
    std::vector<double> pooled(d, 0.0);
    std::size_t assigned = 0;
    for (std::size_t i = 0; i < objects_.size(); ++i) {
      const auto n = intersection_area(mask, visible(i, frame));
      pooled[static_cast<std::size_t>(objects_[i].spec.class_id)] += static_cast<double>(n);
      assigned += n;
    }
    pooled[d - 1] += static_cast<double>(area - assigned);
    normalize(pooled);
    if (scenario_.embed_sigma > 0) {
      const auto noise = unit_noise(frame, mask);
      for (std::size_t k = 0; k < d; ++k) pooled[k] += scenario_.embed_sigma * noise[k];
      normalize(pooled);
    }
    return Embedding{std::move(pooled)};
  }

  Description describe(int before_frame, int after_frame, std::span<const BinaryMask> before_contours,
                       std::span<const BinaryMask> after_contours) const override {
    check_frame(before_frame);
    check_frame(after_frame);
    if (after_frame <= before_frame) throw ValidationError("describe() requires after_frame > before_frame");
    if (before_contours.empty() || after_contours.empty()) throw ValidationError("describe() needs contours");
    for (const auto& m : before_contours) check_mask(m);
    for (const auto& m : after_contours) check_mask(m);

    BinaryMask after_union(frame_size());
    for (const auto& m : after_contours) after_union |= m;

    // The most recent split whose fragments show up in the after contours;
    // earlier splits in the window are old news.
    Description desc{"unknown", {}};
    std::pair<int, std::size_t> best{-1, 0};
    for (const auto& e : scenario_.events) {
      const auto* sp = std::get_if<SplitEvent>(&e);
      if (!sp || sp->frame <= before_frame || sp->frame > after_frame) continue;
      std::size_t score = 0;
      for (const auto& f : sp->fragments) score += intersection_area(after_union, visible(index_of(f.id), after_frame));
      if (score > 0 && std::make_pair(sp->frame, score) > best) {
        best = {sp->frame, score};
        desc.action_verb = sp->verb;
      }
    }
    for (std::size_t i = 0; i < after_contours.size(); ++i) {
      const auto obj = best_overlap(after_frame, after_contours[i]);
      desc.objects.emplace_back(static_cast<int>(i), obj ? label_at(*obj, after_frame) : std::string("unknown object"));
    }
    return desc;
  }

  // Visible mask of a named object; empty before it appears.
  const BinaryMask& visible_mask(const std::string& object_id, int frame) const {
    check_frame(frame);
    return visible(index_of(object_id), frame);
  }

  std::vector<std::string> object_ids() const {
    std::vector<std::string> ids;
    for (const auto& o : objects_) ids.push_back(o.spec.id);
    return ids;
  }

  const std::vector<std::string>& lineage_ids() const { return lineage_; }

  GroundTruth ground_truth() const {
    GroundTruth gt;
    gt.prompt_mask = visible_mask(scenario_.prompt_object, 0);
    for (int f = 0; f < num_frames(); ++f) {
      BinaryMask m(frame_size());
      for (const auto& id : lineage_) m |= visible_mask(id, f);
      gt.lineage_masks.push_back(std::move(m));
    }
    gt.annotation.t_start = 0;
    gt.annotation.t_end = num_frames() - 1;
    for (const auto* sp : lineage_splits_) {
      Transformation tr;
      tr.t_s = sp->frame;
      tr.t_e = std::min(sp->frame + scenario_.grace, num_frames() - 1);
      tr.verb = sp->verb;
      auto add = [&](const std::string& id, const std::string& text) {
        const auto& m = visible_mask(id, tr.t_e);
        if (!m.empty()) tr.resulting_objects.push_back({m, text});
      };
      add(sp->parent, label_at(index_of(sp->parent), sp->frame));
      for (const auto& f : sp->fragments) add(f.id, f.label);
      if (tr.resulting_objects.empty()) {
        throw ValidationError("scenario '" + scenario_.name + "': split of '" + sp->parent +
                              "' leaves no visible resulting object at frame " + std::to_string(tr.t_e));
      }
      gt.annotation.transformations.push_back(std::move(tr));
    }
    validate_annotation(gt.annotation);
    return gt;
  }

 private:
  struct SimObject {
    ObjectSpec spec;
    int appear_frame = 0;
    std::vector<int> appearance_changes;
    std::vector<std::pair<int, std::string>> labels;  // (from frame, label), ascending
  };

  void build_object_table() {
    for (const auto& o : scenario_.objects) objects_.push_back({o, 0, {}, {{0, o.label}}});
    std::vector<const Event*> ordered;
    for (const auto& e : scenario_.events) ordered.push_back(&e);
    std::stable_sort(ordered.begin(), ordered.end(),
                     [](const Event* a, const Event* b) { return event_frame(*a) < event_frame(*b); });
    for (const auto* e : ordered) {
      if (const auto* sp = std::get_if<SplitEvent>(e)) {
        for (const auto& f : sp->fragments) objects_.push_back({f, sp->frame, {}, {{sp->frame, f.label}}});
      }
    }
    for (std::size_t i = 0; i < objects_.size(); ++i) index_[objects_[i].spec.id] = i;
    lineage_.push_back(scenario_.prompt_object);
    for (const auto* e : ordered) {
      if (const auto* sp = std::get_if<SplitEvent>(e)) {
        auto& parent = objects_[index_of(sp->parent)];
        if (!sp->parent_label_after.empty()) parent.labels.emplace_back(sp->frame, sp->parent_label_after);
        if (std::find(lineage_.begin(), lineage_.end(), sp->parent) != lineage_.end()) {
          for (const auto& f : sp->fragments) lineage_.push_back(f.id);
          lineage_splits_.push_back(sp);
        }
      } else if (const auto* ac = std::get_if<AppearanceChangeEvent>(e)) {
        objects_[index_of(ac->object)].appearance_changes.push_back(ac->frame);
      } else if (const auto* no = std::get_if<NewObjectEvent>(e)) {
        objects_[index_of(no->object)].appear_frame = no->frame;
      }
    }
  }

  void render() {
    const auto n = objects_.size();
    visible_.assign(n * static_cast<std::size_t>(num_frames()), BinaryMask(frame_size()));
    priority_.resize(static_cast<std::size_t>(num_frames()));
    for (int f = 0; f < num_frames(); ++f) {
      std::vector<std::pair<std::size_t, BinaryMask>> raw;
      for (std::size_t i = 0; i < n; ++i) {
        if (objects_[i].appear_frame <= f) raw.emplace_back(i, rasterize(objects_[i].spec, f, frame_size()));
      }
      std::vector<std::size_t> area(raw.size());
      for (std::size_t k = 0; k < raw.size(); ++k) area[k] = raw[k].second.area();
      std::vector<std::size_t> order(raw.size());
      for (std::size_t k = 0; k < order.size(); ++k) order[k] = k;
      std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return area[a] > area[b]; });
      BinaryMask taken(frame_size());
      for (auto k : order) {
        const auto idx = raw[k].first;
        auto& vis = visible_[slot(idx, f)];
        vis = raw[k].second - taken;
        taken |= raw[k].second;
        priority_[static_cast<std::size_t>(f)].push_back(idx);
      }
    }
  }

  void validate_geometry() const {
    auto fail = [&](const std::string& msg) { throw ValidationError("scenario '" + scenario_.name + "': " + msg); };
    if (visible_mask(scenario_.prompt_object, 0).empty()) fail("prompt object is not visible at frame 0");
    for (const auto& e : scenario_.events) {
      const auto* sp = std::get_if<SplitEvent>(&e);
      if (!sp) continue;
      const auto& parent = objects_[index_of(sp->parent)];
      if (parent.appear_frame >= sp->frame) fail("split parent '" + sp->parent + "' is not present before the split");
      const auto reach = dilate(rasterize(parent.spec, sp->frame, frame_size()), scenario_.dilation_r2);
      for (const auto& frag : sp->fragments) {
        const auto m = rasterize(frag, sp->frame, frame_size());
        if (m.empty()) fail("fragment '" + frag.id + "' is empty at its split frame");
        if (intersection_area(m, reach) == 0) {
          fail("fragment '" + frag.id + "' spawns farther than dilation_r2 from '" + sp->parent + "'");
        }
      }
    }
  }

  std::size_t slot(std::size_t idx, int frame) const {
    return static_cast<std::size_t>(frame) * objects_.size() + idx;
  }
  const BinaryMask& visible(std::size_t idx, int frame) const { return visible_[slot(idx, frame)]; }

  std::size_t index_of(const std::string& id) const {
    auto it = index_.find(id);
    if (it == index_.end()) throw ValidationError("unknown scenario object '" + id + "'");
    return it->second;
  }

  std::string label_at(std::size_t idx, int frame) const {
    std::string label = objects_[idx].labels.front().second;
    for (const auto& [from, text] : objects_[idx].labels) {
      if (from <= frame) label = text;
    }
    return label;
  }

  std::optional<std::size_t> best_overlap(int frame, const BinaryMask& mask) const {
    std::optional<std::size_t> best;
    std::size_t best_n = 0;
    for (std::size_t i = 0; i < objects_.size(); ++i) {
      const auto n = intersection_area(mask, visible(i, frame));
      if (n > best_n) {
        best_n = n;
        best = i;
      }
    }
    return best;
  }

  static void normalize(std::vector<double>& v) {
    double s = 0.0;
    for (double x : v) s += x * x;
    s = std::sqrt(s);
    for (double& x : v) x /= s;
  }

  // Uniform direction on the unit sphere, seeded by (seed, frame, mask hash).
  std::vector<double> unit_noise(int frame, const BinaryMask& mask) const {
    const auto key = std::to_string(seed_) + ":" + std::to_string(frame) + ":" + mask_hash(mask).hex();
    std::mt19937_64 rng(sha256(key).prefix64());
    auto uniform = [&rng] { return static_cast<double>(rng() >> 11) * 0x1.0p-53; };
    const auto d = static_cast<std::size_t>(scenario_.embed_dim);
    std::vector<double> v(d);
    double norm = 0.0;
    while (norm < 1e-12) {
      for (std::size_t k = 0; k < d; ++k) {
        const double u1 = 1.0 - uniform();  // (0, 1]
        const double u2 = uniform();
        v[k] = std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
      }
      norm = 0.0;
      for (double x : v) norm += x * x;
    }
    normalize(v);
    return v;
  }

  Scenario scenario_;
  std::uint64_t seed_;
  std::vector<SimObject> objects_;
  std::map<std::string, std::size_t> index_;
  std::vector<BinaryMask> visible_;                // [frame * objects + idx]
  std::vector<std::vector<std::size_t>> priority_;  // per frame, descending raw area
  std::vector<std::string> lineage_;
  std::vector<const SplitEvent*> lineage_splits_;
};

struct Simulation {
  std::shared_ptr<const SimulatorBackend> backend;
  GroundTruth truth;
};

inline Simulation simulate(const Scenario& scenario, std::uint64_t seed) {
  auto backend = std::make_shared<const SimulatorBackend>(scenario, seed);
  auto truth = backend->ground_truth();
  return {std::move(backend), std::move(truth)};
}

inline Simulation simulate(const Scenario& scenario) { return simulate(scenario, scenario.seed); }

}  // namespace statetrack
