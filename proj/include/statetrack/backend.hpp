#pragma once

// The perception-backend contract. A backend answers four kinds of query:
// entity segmentation of a frame, promptable tracking from a seed mask,
// mask-pooled embedding, and a description of a transformation between two
// frames. Implementations must be safe to call concurrently.

#include <array>
#include <cmath>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "statetrack/error.hpp"
#include "statetrack/mask.hpp"

namespace statetrack {

// Alternative segmentations of a tracked object at one frame.
using CandidateMasks = std::array<BinaryMask, 3>;

struct Tubelet {
  std::string id;
  int start_frame = 0;
  std::vector<BinaryMask> primary_masks;   // frames start_frame .. T-1
  std::vector<CandidateMasks> candidates;  // same length as primary_masks; empty for deserialized output tracks

  int end_frame() const { return start_frame + static_cast<int>(primary_masks.size()) - 1; }
  bool covers(int frame) const { return frame >= start_frame && frame <= end_frame(); }
  bool has_candidates() const { return !candidates.empty(); }

  // Primary mask at `frame`, or nullptr outside the tubelet's span.
  const BinaryMask* mask_at(int frame) const {
    if (!covers(frame)) return nullptr;
    return &primary_masks[static_cast<std::size_t>(frame - start_frame)];
  }
  const CandidateMasks* candidates_at(int frame) const {
    if (!covers(frame) || !has_candidates()) return nullptr;
    return &candidates[static_cast<std::size_t>(frame - start_frame)];
  }
  const BinaryMask& seed() const { return primary_masks.front(); }
};

inline void validate_tubelet(const Tubelet& t, FrameSize size, int num_frames, bool require_candidates) {
  if (t.start_frame < 0 || t.start_frame >= num_frames) {
    throw ValidationError("tubelet " + t.id + " start frame out of range");
  }
  if (static_cast<int>(t.primary_masks.size()) != num_frames - t.start_frame) {
    throw ValidationError("tubelet " + t.id + " must span its start frame through the last frame");
  }
  if (require_candidates && t.candidates.size() != t.primary_masks.size()) {
    throw ValidationError("tubelet " + t.id + " lacks a candidate triple per frame");
  }
  for (const auto& m : t.primary_masks) {
    if (m.size() != size) throw ValidationError("tubelet " + t.id + " mask size mismatch");
  }
  for (const auto& c : t.candidates) {
    for (const auto& m : c) {
      if (m.size() != size) throw ValidationError("tubelet " + t.id + " candidate size mismatch");
    }
  }
}

// Unit-normalized feature vector.
struct Embedding {
  std::vector<double> values;

  double dot(const Embedding& other) const {
    if (values.size() != other.values.size()) throw ValidationError("embedding dimension mismatch");
    double s = 0.0;
    for (std::size_t i = 0; i < values.size(); ++i) s += values[i] * other.values[i];
    return s;
  }
  double norm() const { return std::sqrt(dot(*this)); }
};

// Structured description of a transformation. Region indices refer to the
// after-frame contour list of the query.
struct Description {
  std::string action_verb;
  std::vector<std::pair<int, std::string>> objects;

  bool operator==(const Description&) const = default;
};

class Backend {
 public:
  virtual ~Backend() = default;

  virtual FrameSize frame_size() const = 0;
  virtual int num_frames() const = 0;
  virtual int embed_dim() const = 0;

  virtual std::vector<BinaryMask> segment_entities(int frame) const = 0;
  virtual Tubelet track(int start_frame, const BinaryMask& mask) const = 0;
  virtual Embedding embed(int frame, const BinaryMask& mask) const = 0;
  virtual Description describe(int before_frame, int after_frame, std::span<const BinaryMask> before_contours,
                               std::span<const BinaryMask> after_contours) const = 0;

 protected:
  void check_frame(int frame) const {
    if (frame < 0 || frame >= num_frames()) {
      throw ValidationError("frame " + std::to_string(frame) + " out of range [0, " + std::to_string(num_frames()) + ")");
    }
  }
  void check_mask(const BinaryMask& mask) const {
    if (mask.size() != frame_size()) {
      throw ValidationError("mask size " + mask.size().str() + " does not match frame size " + frame_size().str());
    }
  }
};

// Key of a describe() query: SHA-256 over the concatenated, sorted hex
// hashes of every contour mask (before and after).
inline std::string describe_query_hash(std::span<const BinaryMask> before_contours,
                                       std::span<const BinaryMask> after_contours) {
  std::vector<std::string> hashes;
  hashes.reserve(before_contours.size() + after_contours.size());
  for (const auto& m : before_contours) hashes.push_back(mask_hash(m).hex());
  for (const auto& m : after_contours) hashes.push_back(mask_hash(m).hex());
  std::sort(hashes.begin(), hashes.end());
  std::string joined;
  for (const auto& h : hashes) joined += h;
  return sha256_hex(joined);
}

inline CandidateMasks make_dilation_candidates(const BinaryMask& primary, int r1, int r2) {
  return {primary, dilate(primary, r1), dilate(primary, r2)};
}

}  // namespace statetrack
