#pragma once

// Spatiotemporal partition of a video into tubelets: the prompt track, a
// track for every initial-frame entity (after resolving overlap with the
// prompt), and a late-emergent track for every later entity that existing
// tracks leave mostly uncovered.

#include <algorithm>
#include <future>
#include <set>
#include <string>
#include <vector>

#include "statetrack/backend.hpp"
#include "statetrack/io.hpp"
#include "statetrack/replay.hpp"

namespace statetrack {

struct PartitionConfig {
  double tau_coverage = 0.25;
  double tau_remove = 0.9;
  double min_area_fraction = 1.0 / 625.0;  // 1/25^2 of the frame
  int processing_stride = 1;
};

inline void validate(const PartitionConfig& c) {
  if (!(0.0 < c.tau_coverage && c.tau_coverage < c.tau_remove && c.tau_remove <= 1.0)) {
    throw ValidationError("partition config: require 0 < tau_coverage < tau_remove <= 1");
  }
  if (!(c.min_area_fraction >= 0.0 && c.min_area_fraction < 1.0)) {
    throw ValidationError("partition config: min_area_fraction must be in [0, 1)");
  }
  if (c.processing_stride < 1) throw ValidationError("partition config: processing_stride must be >= 1");
}

enum class Origin { prompt, initial_frame, late_emergent };

inline const char* origin_name(Origin o) {
  switch (o) {
    case Origin::prompt: return "prompt";
    case Origin::initial_frame: return "initial_frame";
    case Origin::late_emergent: return "late_emergent";
  }
  return "?";
}

inline Origin origin_from_name(const std::string& s) {
  if (s == "prompt") return Origin::prompt;
  if (s == "initial_frame") return Origin::initial_frame;
  if (s == "late_emergent") return Origin::late_emergent;
  throw ValidationError("unknown tubelet origin '" + s + "'");
}

struct PoolTubelet {
  Tubelet tubelet;
  Origin origin = Origin::initial_frame;
  BinaryMask seed;  // the entity mask the track was prompted with
  MaskHash seed_hash;
};

struct PartitionPool {
  PoolTubelet prompt;
  std::vector<PoolTubelet> others;

  std::vector<const PoolTubelet*> late_emergent() const {
    std::vector<const PoolTubelet*> out;
    for (const auto& t : others) {
      if (t.origin == Origin::late_emergent) out.push_back(&t);
    }
    return out;
  }

  // Union of every tubelet's primary mask at `frame`.
  BinaryMask coverage(int frame) const {
    BinaryMask u(prompt.seed.size());
    if (const auto* m = prompt.tubelet.mask_at(frame)) u |= *m;
    for (const auto& t : others) {
      if (const auto* m = t.tubelet.mask_at(frame)) u |= *m;
    }
    return u;
  }
};

// Splits the initial-frame entities against the prompt: entities mostly
// outside it are kept, partially covered ones lose the overlap, and
// near-duplicates of the prompt are dropped.
inline std::vector<BinaryMask> resolve_initial_overlaps(const std::vector<BinaryMask>& entities,
                                                        const BinaryMask& prompt, const PartitionConfig& cfg) {
  if (prompt.empty()) throw ValidationError("prompt mask is empty");
  std::vector<BinaryMask> out;
  for (const auto& e : entities) {
    e.check_same(prompt);
    if (e.empty()) continue;
    const double c = cover(e, prompt);
    BinaryMask kept;
    if (c < cfg.tau_coverage) {
      kept = e;
    } else if (c < cfg.tau_remove) {
      kept = e - prompt;
    } else {
      continue;
    }
    if (kept.empty() || area_fraction(kept) < cfg.min_area_fraction) continue;
    out.push_back(std::move(kept));
  }
  return out;
}

// 1 - cover(entity, union of pool primary masks at frame).
inline double untracked_fraction(const BinaryMask& entity, const PartitionPool& pool, int frame) {
  return 1.0 - cover(entity, pool.coverage(frame));
}

namespace detail {

inline PoolTubelet make_pool_tubelet(Tubelet t, std::string id, Origin origin, const BinaryMask& seed) {
  t.id = std::move(id);
  return {std::move(t), origin, seed, mask_hash(seed)};
}

inline std::string late_id(int frame, std::size_t k) { return "t" + frame_key(frame) + "-" + std::to_string(k); }

}  // namespace detail

inline PartitionPool build_partition(const Backend& backend, const BinaryMask& prompt, const PartitionConfig& cfg) {
  validate(cfg);
  if (prompt.size() != backend.frame_size()) throw ValidationError("prompt mask size does not match the video");
  if (prompt.empty()) throw ValidationError("prompt mask is empty");
  const int num_frames = backend.num_frames();

  auto entities0 = backend.segment_entities(0);
  const auto initial = resolve_initial_overlaps(entities0, prompt, cfg);

  // Initial-frame tracks are independent of one another.
  auto prompt_future = std::async(std::launch::async, [&] { return backend.track(0, prompt); });
  std::vector<std::future<Tubelet>> futures;
  futures.reserve(initial.size());
  for (const auto& e : initial) {
    futures.push_back(std::async(std::launch::async, [&backend, &e] { return backend.track(0, e); }));
  }
  PartitionPool pool;
  pool.prompt = detail::make_pool_tubelet(prompt_future.get(), "prompt", Origin::prompt, prompt);
  for (std::size_t i = 0; i < initial.size(); ++i) {
    pool.others.push_back(
        detail::make_pool_tubelet(futures[i].get(), "init-" + std::to_string(i), Origin::initial_frame, initial[i]));
  }

  std::set<std::pair<int, MaskHash>> seeds;
  seeds.insert({0, pool.prompt.seed_hash});
  for (const auto& t : pool.others) seeds.insert({0, t.seed_hash});

  for (int f = cfg.processing_stride; f < num_frames; f += cfg.processing_stride) {
    auto entities = backend.segment_entities(f);
    std::vector<std::pair<BinaryMask, MaskHash>> ordered;
    for (auto& e : entities) {
      if (e.size() != backend.frame_size()) throw ValidationError("entity mask size does not match the video");
      if (e.empty() || area_fraction(e) < cfg.min_area_fraction) continue;
      auto h = mask_hash(e);
      ordered.emplace_back(std::move(e), h);
    }
    std::stable_sort(ordered.begin(), ordered.end(), [](const auto& a, const auto& b) {
      const auto aa = a.first.area();
      const auto ba = b.first.area();
      return aa != ba ? aa > ba : a.second < b.second;
    });
    BinaryMask covered = pool.coverage(f);
    std::size_t k = 0;
    for (const auto& [e, h] : ordered) {
      // New track when strictly less than tau_coverage of the entity is covered.
      const auto area = static_cast<double>(e.area());
      const auto hit = static_cast<double>(intersection_area(e, covered));
      if (!(hit < cfg.tau_coverage * area)) continue;
      if (!seeds.insert({f, h}).second) continue;
      auto t = detail::make_pool_tubelet(backend.track(f, e), detail::late_id(f, k++), Origin::late_emergent, e);
      if (const auto* m = t.tubelet.mask_at(f)) covered |= *m;
      pool.others.push_back(std::move(t));
    }
  }
  return pool;
}

// ---------------------------------------------------------------------------
// partition.json

inline json pool_tubelet_to_json(const PoolTubelet& t) {
  json masks = json::array();
  for (const auto& m : t.tubelet.primary_masks) masks.push_back(to_rle_text(m));
  return json{{"id", t.tubelet.id},
              {"origin", origin_name(t.origin)},
              {"start_frame", t.tubelet.start_frame},
              {"seed_hash", t.seed_hash.hex()},
              {"masks", std::move(masks)}};
}

inline json partition_to_json(const PartitionPool& pool) {
  json arr = json::array();
  arr.push_back(pool_tubelet_to_json(pool.prompt));
  for (const auto& t : pool.others) arr.push_back(pool_tubelet_to_json(t));
  return json{{"tubelets", std::move(arr)}};
}

}  // namespace statetrack
