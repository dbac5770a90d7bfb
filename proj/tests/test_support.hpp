#pragma once

#include <algorithm>
#include <filesystem>
#include <limits>
#include <random>
#include <string>
#include <vector>

#include "statetrack.hpp"

namespace statetrack::testing {

inline BinaryMask box_mask(FrameSize size, int x0, int y0, int x1, int y1) {
  BinaryMask m(size);
  for (int y = y0; y < y1; ++y) {
    for (int x = x0; x < x1; ++x) m.set(x, y);
  }
  return m;
}

inline BinaryMask random_mask(std::mt19937_64& rng, FrameSize size, double density) {
  std::bernoulli_distribution bit(density);
  BinaryMask m(size);
  for (int y = 0; y < size.height; ++y) {
    for (int x = 0; x < size.width; ++x) {
      if (bit(rng)) m.set(x, y);
    }
  }
  return m;
}

// Fresh, empty directory under the system temp dir.
inline std::filesystem::path scratch_dir(const std::string& name) {
  auto dir = std::filesystem::temp_directory_path() / ("statetrack-test-" + name);
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

// Every file under `dir` as (relative path, bytes), sorted.
inline std::vector<std::pair<std::string, std::string>> snapshot_dir(const std::filesystem::path& dir) {
  std::vector<std::pair<std::string, std::string>> out;
  for (const auto& e : std::filesystem::recursive_directory_iterator(dir)) {
    if (!e.is_regular_file()) continue;
    out.emplace_back(std::filesystem::relative(e.path(), dir).string(), read_text_file(e.path()));
  }
  std::sort(out.begin(), out.end());
  return out;
}

// Minimum assignment cost by enumerating all injections of the smaller side.
inline double brute_force_assignment(const CostMatrix& c) {
  const bool t = c.rows() > c.cols();
  const std::size_t n = t ? c.cols() : c.rows();
  const std::size_t m = t ? c.rows() : c.cols();
  if (n == 0) return 0.0;
  std::vector<std::size_t> cols(m);
  for (std::size_t j = 0; j < m; ++j) cols[j] = j;
  double best = std::numeric_limits<double>::infinity();
  // Permutations of all m columns; the first n positions give an injection.
  do {
    double s = 0;
    for (std::size_t i = 0; i < n; ++i) s += t ? c(cols[i], i) : c(i, cols[i]);
    best = std::min(best, s);
  } while (std::next_permutation(cols.begin(), cols.end()));
  return best;
}

// Direct pixel count over each of the three candidates.
inline double proximity_oracle(const Tubelet& cand, const Tubelet& prompt) {
  const int s = cand.start_frame;
  const auto& c = *cand.mask_at(s);
  const auto& triple = *prompt.candidates_at(s);
  std::size_t area = 0;
  for (int y = 0; y < c.size().height; ++y) {
    for (int x = 0; x < c.size().width; ++x) area += c.at(x, y);
  }
  double best = 0;
  for (const auto& m : triple) {
    std::size_t hit = 0;
    for (int y = 0; y < c.size().height; ++y) {
      for (int x = 0; x < c.size().width; ++x) hit += c.at(x, y) && m.at(x, y);
    }
    best = std::max(best, static_cast<double>(hit) / static_cast<double>(area));
  }
  return best;
}

// Every (i < s, j >= s) pair with nonempty masks, fresh backend calls.
inline double semantic_oracle(const Tubelet& cand, const Tubelet& prompt, const Backend& backend) {
  const int s = cand.start_frame;
  double best = -std::numeric_limits<double>::infinity();
  for (int i = 0; i < s; ++i) {
    const auto* p = prompt.mask_at(i);
    if (!p || p->empty()) continue;
    const auto ep = backend.embed(i, *p);
    for (int j = s; j < backend.num_frames(); ++j) {
      const auto* c = cand.mask_at(j);
      if (!c || c->empty()) continue;
      const auto ec = backend.embed(j, *c);
      double dot = 0;
      for (std::size_t k = 0; k < ep.values.size(); ++k) dot += ep.values[k] * ec.values[k];
      best = std::max(best, dot);
    }
  }
  return best;
}

// A prediction that restates the annotation: one lineage track with the GT
// masks, one track per resulting object, one edge per transformation.
struct OraclePrediction {
  std::vector<Tubelet> tracks;
  StateGraph graph;
};

inline OraclePrediction prediction_from_truth(const TasAnnotation& a, const std::vector<BinaryMask>& gt_masks) {
  OraclePrediction p;
  const int num_frames = static_cast<int>(gt_masks.size());
  const auto size = gt_masks.front().size();
  p.tracks.push_back(Tubelet{"lineage", 0, gt_masks, {}});
  p.graph.nodes.push_back({"lineage#0", "lineage", "prompt object", 0});
  for (std::size_t i = 0; i < a.transformations.size(); ++i) {
    const auto& tr = a.transformations[i];
    StateEdge e;
    e.change.t = tr.t_s;
    e.change.description.action_verb = tr.verb;
    for (std::size_t k = 0; k < tr.resulting_objects.size(); ++k) {
      const auto id = "gt-" + std::to_string(i) + "-" + std::to_string(k);
      Tubelet t{id, tr.t_e, {}, {}};
      for (int f = tr.t_e; f < num_frames; ++f) {
        t.primary_masks.push_back(f == tr.t_e ? tr.resulting_objects[k].mask : BinaryMask(size));
      }
      p.tracks.push_back(std::move(t));
      p.graph.nodes.push_back({id + "#0", id, tr.resulting_objects[k].text, tr.t_s});
      e.post_nodes.push_back(id + "#0");
      e.change.post_track_ids.push_back(id);
      e.change.description.objects.emplace_back(static_cast<int>(k), tr.resulting_objects[k].text);
    }
    p.graph.edges.push_back(std::move(e));
  }
  std::stable_sort(p.graph.edges.begin(), p.graph.edges.end(),
                   [](const StateEdge& x, const StateEdge& y) { return x.change.t < y.change.t; });
  return p;
}

}  // namespace statetrack::testing
