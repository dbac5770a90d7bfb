#pragma once

// Decides which late-emergent tubelets continue the prompt object: a
// candidate must start close to the prompt track's candidate masks and look
// like the prompt did before the candidate appeared.

#include <algorithm>
#include <limits>
#include <map>
#include <mutex>
#include <string>
#include <vector>

#include "statetrack/backend.hpp"
#include "statetrack/io.hpp"
#include "statetrack/partition.hpp"

namespace statetrack {

struct ReasoningConfig {
  double tau_prox = 0.3;
  double tau_sem = 0.7;
  int embed_stride = 1;
  bool use_proximity = true;
  bool use_semantic = true;
  // Off by default: candidates are compared against the prompt track only.
  // When on, accepted candidates become additional comparison anchors.
  bool chain_anchors = false;
};

inline void validate(const ReasoningConfig& c) {
  if (!(c.tau_prox >= 0.0 && c.tau_prox <= 1.0)) throw ValidationError("reasoning config: tau_prox must be in [0, 1]");
  if (!(c.tau_sem >= -1.0 && c.tau_sem <= 1.0)) throw ValidationError("reasoning config: tau_sem must be in [-1, 1]");
  if (c.embed_stride < 1) throw ValidationError("reasoning config: embed_stride must be >= 1");
}

struct CandidateScore {
  std::string tubelet_id;
  double s_prox = 0.0;
  double s_sem = -1.0;
  bool accepted = false;
};

inline bool passes(const CandidateScore& s, const ReasoningConfig& cfg) {
  return (!cfg.use_proximity || s.s_prox > cfg.tau_prox) && (!cfg.use_semantic || s.s_sem > cfg.tau_sem);
}

// Memoizes backend embeddings by (frame, mask hash). Thread-safe.
class EmbeddingCache {
 public:
  explicit EmbeddingCache(const Backend& backend) : backend_(backend) {}

  Embedding get(int frame, const BinaryMask& mask) const {
    const auto key = std::make_pair(frame, mask_hash(mask));
    {
      std::lock_guard lock(mu_);
      auto it = cache_.find(key);
      if (it != cache_.end()) return it->second;
    }
    auto e = backend_.embed(frame, mask);
    std::lock_guard lock(mu_);
    return cache_.emplace(key, std::move(e)).first->second;
  }

  const Backend& backend() const { return backend_; }

 private:
  const Backend& backend_;
  mutable std::mutex mu_;
  mutable std::map<std::pair<int, MaskHash>, Embedding> cache_;
};

// Max over the three candidate masks at the candidate's start frame of
// |c_s ∩ m| / |c_s|.
inline double spatial_proximity(const Tubelet& candidate, const Tubelet& prompt) {
  const int s = candidate.start_frame;
  if (s <= 0) throw ValidationError("spatial_proximity: candidate must start after frame 0");
  const auto& seed = candidate.seed();
  const auto area = seed.area();
  if (area == 0) throw ValidationError("spatial_proximity: candidate mask at its start frame is empty");
  const auto* triple = prompt.candidates_at(s);
  if (!triple) throw ValidationError("spatial_proximity: prompt track has no candidate masks at frame " + std::to_string(s));
  std::size_t best = 0;
  for (const auto& m : *triple) best = std::max(best, intersection_area(seed, m));
  return static_cast<double>(best) / static_cast<double>(area);
}

// Frames of `t` in [from, to) with nonempty masks, taking every stride-th
// frame counted from `from` (which is always considered).
inline std::vector<int> sampled_frames(const Tubelet& t, int from, int to, int stride) {
  std::vector<int> out;
  for (int f = from; f < to; f += stride) {
    const auto* m = t.mask_at(f);
    if (m && !m->empty()) out.push_back(f);
  }
  return out;
}

// Max over prompt frames before the candidate's start and candidate frames
// from its start on of the embedding dot product.
inline double semantic_consistency(const Tubelet& candidate, const Tubelet& prompt, const EmbeddingCache& cache,
                                   const ReasoningConfig& cfg) {
  const int s = candidate.start_frame;
  if (s < 1) throw ValidationError("semantic_consistency: candidate must start after frame 0");
  const int num_frames = cache.backend().num_frames();
  const auto pre = sampled_frames(prompt, prompt.start_frame, s, cfg.embed_stride);
  if (pre.empty()) throw ValidationError("semantic_consistency: prompt track is empty before frame " + std::to_string(s));
  const auto post = sampled_frames(candidate, s, num_frames, cfg.embed_stride);
  std::vector<Embedding> post_embeds;
  post_embeds.reserve(post.size());
  for (int j : post) post_embeds.push_back(cache.get(j, *candidate.mask_at(j)));
  double best = -std::numeric_limits<double>::infinity();
  for (int i : pre) {
    const auto p = cache.get(i, *prompt.mask_at(i));
    for (const auto& c : post_embeds) best = std::max(best, p.dot(c));
  }
  return best;
}

inline double semantic_consistency(const Tubelet& candidate, const Tubelet& prompt, const Backend& backend,
                                   const ReasoningConfig& cfg) {
  EmbeddingCache cache(backend);
  return semantic_consistency(candidate, prompt, cache, cfg);
}

struct FilterResult {
  std::vector<const PoolTubelet*> valid;  // points into the pool
  std::vector<CandidateScore> scores;     // one per late-emergent tubelet, pool order
};

inline FilterResult filter_candidates(const PartitionPool& pool, const EmbeddingCache& cache,
                                      const ReasoningConfig& cfg) {
  validate(cfg);
  FilterResult result;
  std::vector<const Tubelet*> anchors{&pool.prompt.tubelet};
  for (const auto* cand : pool.late_emergent()) {
    const auto& c = cand->tubelet;
    CandidateScore score{c.id, spatial_proximity(c, pool.prompt.tubelet),
                         semantic_consistency(c, pool.prompt.tubelet, cache, cfg), false};
    if (cfg.chain_anchors) {
      for (std::size_t a = 1; a < anchors.size(); ++a) {
        const auto* anchor = anchors[a];
        if (anchor->start_frame >= c.start_frame) continue;
        if (anchor->candidates_at(c.start_frame)) score.s_prox = std::max(score.s_prox, spatial_proximity(c, *anchor));
        if (!sampled_frames(*anchor, anchor->start_frame, c.start_frame, cfg.embed_stride).empty()) {
          score.s_sem = std::max(score.s_sem, semantic_consistency(c, *anchor, cache, cfg));
        }
      }
    }
    score.accepted = passes(score, cfg);
    if (score.accepted) {
      result.valid.push_back(cand);
      anchors.push_back(&c);
    }
    result.scores.push_back(std::move(score));
  }
  return result;
}

inline FilterResult filter_candidates(const PartitionPool& pool, const Backend& backend, const ReasoningConfig& cfg) {
  EmbeddingCache cache(backend);
  return filter_candidates(pool, cache, cfg);
}

// Re-thresholds precomputed scores (prompt anchor only). Used by sweeps.
inline std::vector<const PoolTubelet*> accept_with(const PartitionPool& pool, std::vector<CandidateScore>& scores,
                                                   const ReasoningConfig& cfg) {
  std::vector<const PoolTubelet*> valid;
  const auto late = pool.late_emergent();
  for (std::size_t i = 0; i < late.size(); ++i) {
    scores[i].accepted = passes(scores[i], cfg);
    if (scores[i].accepted) valid.push_back(late[i]);
  }
  return valid;
}

inline json scores_to_json(const std::vector<CandidateScore>& scores) {
  json arr = json::array();
  for (const auto& s : scores) {
    arr.push_back(json{{"tubelet_id", s.tubelet_id}, {"s_prox", s.s_prox}, {"s_sem", s.s_sem}, {"accepted", s.accepted}});
  }
  return arr;
}

}  // namespace statetrack
