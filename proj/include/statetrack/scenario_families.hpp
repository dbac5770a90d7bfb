#pragma once

// Seeded generators for the synthetic scene families used by tests, sweeps
// and samples. All draws go through mt19937_64 with explicit arithmetic, so
// a (family, seed) pair yields the same scene on every platform.

#include <cstdint>
#include <random>
#include <string>
#include <string_view>
#include <vector>

#include "statetrack/hash.hpp"
#include "statetrack/scenario.hpp"

namespace statetrack {

namespace family {

inline constexpr std::string_view kNoEvent = "no-event";
inline constexpr std::string_view kSplitAdjacentSameClass = "split-adjacent-same-class";
inline constexpr std::string_view kAdjacentDifferentClass = "adjacent-different-class";
inline constexpr std::string_view kTwoSplit = "two-split";
inline constexpr std::string_view kFarNewObject = "far-new-object";

enum ClassId { apple = 0, bowl = 1, knife = 2, hand = 3 };

class Rng {
 public:
  Rng(std::string_view name, std::uint64_t seed)
      : g_(sha256(std::string(name) + ":" + std::to_string(seed)).prefix64()) {}

  // Inclusive range.
  int uniform(int lo, int hi) { return lo + static_cast<int>(g_() % static_cast<std::uint64_t>(hi - lo + 1)); }
  bool coin() { return (g_() >> 63) != 0; }

 private:
  std::mt19937_64 g_;
};

// Axis-aligned box [x0, x1) x [y0, y1) in pixels; rasterizes to exactly
// that pixel range.
struct Box {
  int x0, y0, x1, y1;
};

inline Keyframe key(int frame, const Box& b) {
  return {frame, (b.x0 + b.x1) / 2.0, (b.y0 + b.y1) / 2.0, (b.x1 - b.x0) / 2.0, (b.y1 - b.y0) / 2.0};
}

inline Box shifted(Box b, int dx, int dy) { return {b.x0 + dx, b.y0 + dy, b.x1 + dx, b.y1 + dy}; }

inline ObjectSpec object(std::string id, int class_id, std::string label, Shape shape, std::vector<Keyframe> kfs) {
  return {std::move(id), class_id, std::move(label), shape, std::move(kfs)};
}

inline Scenario base(std::string_view name, std::uint64_t seed) {
  Scenario s;
  s.name = std::string(name) + "-" + std::to_string(seed);
  s.size = {96, 72};
  s.num_frames = 20;
  s.seed = seed;
  s.prompt_object = "apple";
  return s;
}

// A bowl moving down the left column and a knife sliding along the top
// strip. Neither ever comes near the central working area.
inline void add_distractors(Scenario& s, Rng& rng) {
  const int last = s.num_frames - 1;
  const int by0 = rng.uniform(4, 12);
  const int by1 = rng.uniform(44, 56);
  s.objects.push_back(object("bowl", bowl, "bowl", Shape::ellipse,
                             {key(0, {2, by0, 18, by0 + 14}), key(last, {2, by1, 18, by1 + 14})}));
  const int kx0 = rng.uniform(24, 36);
  const int kx1 = rng.uniform(56, 70);
  s.objects.push_back(object("knife", knife, "knife", Shape::rectangle,
                             {key(0, {kx0, 3, kx0 + 22, 11}), key(last, {kx1, 3, kx1 + 22, 11})}));
}

inline Box apple_box(Rng& rng, int min_width, int max_width) {
  const int w = rng.uniform(min_width, max_width);
  const int h = rng.uniform(16, 22);
  const int x0 = rng.uniform(26, 62 - w);
  const int y0 = rng.uniform(22, 28);
  return {x0, y0, x0 + w, y0 + h};
}

inline ObjectSpec fragment(const std::string& id, Box at_split, int split_frame, int last, int drift) {
  return object(id, apple, "apple piece", Shape::rectangle,
                {key(split_frame, at_split), key(last, shifted(at_split, drift, 0))});
}

// The apple is cut at frame k: a slice on the right detaches with a gap of
// one or two pixels and drifts away, the rest stays put.
inline Scenario split_adjacent_same_class(std::uint64_t seed, std::string_view name = kSplitAdjacentSameClass) {
  Rng rng(name, seed);
  auto s = base(name, seed);
  const int last = s.num_frames - 1;
  const Box a = apple_box(rng, 20, 28);
  const int k = rng.uniform(5, 10);
  const int fw = rng.uniform(6, 9);
  const int gap = rng.uniform(1, 2);
  const Box remnant{a.x0, a.y0, a.x1 - fw - gap, a.y1};
  const Box slice{a.x1 - fw, a.y0 + 1, a.x1, a.y1 - 1};
  s.objects.push_back(object("apple", apple, "apple", Shape::rectangle, {key(0, a), key(k - 1, a), key(k, remnant)}));
  add_distractors(s, rng);
  SplitEvent sp;
  sp.frame = k;
  sp.parent = "apple";
  sp.verb = "cut";
  sp.parent_label_after = "apple piece";
  sp.fragments.push_back(fragment("apple-slice", slice, k, last, rng.uniform(2, 8)));
  s.events.emplace_back(std::move(sp));
  return s;
}

// As above, plus a hand that shows up right below the apple.
inline Scenario adjacent_different_class(std::uint64_t seed) {
  auto s = split_adjacent_same_class(seed, kAdjacentDifferentClass);
  Rng rng(std::string(kAdjacentDifferentClass) + ":hand", seed);
  const auto& a = s.objects.front().keyframes.front();
  const int ax0 = static_cast<int>(a.cx - a.rx);
  const int ay1 = static_cast<int>(a.cy + a.ry);
  const int w = rng.uniform(10, 16);
  const int h = rng.uniform(8, 12);
  const int gap = rng.uniform(1, 2);
  const int x0 = ax0 + rng.uniform(0, 4);
  const Box hand_box{x0, ay1 + gap, x0 + w, ay1 + gap + h};
  const int appear = rng.uniform(3, 14);
  s.objects.push_back(object("hand", hand, "hand", Shape::rectangle, {key(appear, hand_box)}));
  s.events.emplace_back(NewObjectEvent{appear, "hand"});
  return s;
}

// Two cuts: a slice leaves on the right, later another on the left.
inline Scenario two_split(std::uint64_t seed) {
  Rng rng(kTwoSplit, seed);
  auto s = base(kTwoSplit, seed);
  const int last = s.num_frames - 1;
  const Box a = apple_box(rng, 26, 30);
  const int k1 = rng.uniform(4, 7);
  const int k2 = k1 + rng.uniform(4, 6);
  const int fw1 = rng.uniform(5, 7);
  const int fw2 = rng.uniform(5, 7);
  const int g1 = rng.uniform(1, 2);
  const int g2 = rng.uniform(1, 2);
  const Box rem1{a.x0, a.y0, a.x1 - fw1 - g1, a.y1};
  const Box rem2{a.x0 + fw2 + g2, a.y0, rem1.x1, a.y1};
  const Box slice1{a.x1 - fw1, a.y0 + 1, a.x1, a.y1 - 1};
  const Box slice2{a.x0, a.y0 + 1, a.x0 + fw2, a.y1 - 1};
  s.objects.push_back(object("apple", apple, "apple", Shape::rectangle,
                             {key(0, a), key(k1 - 1, a), key(k1, rem1), key(k2 - 1, rem1), key(k2, rem2)}));
  add_distractors(s, rng);
  SplitEvent first;
  first.frame = k1;
  first.parent = "apple";
  first.verb = "cut";
  first.parent_label_after = "apple piece";
  first.fragments.push_back(fragment("apple-slice-1", slice1, k1, last, rng.uniform(2, 6)));
  SplitEvent second;
  second.frame = k2;
  second.parent = "apple";
  second.verb = "slice";
  second.fragments.push_back(fragment("apple-slice-2", slice2, k2, last, -rng.uniform(1, 4)));
  s.events.emplace_back(std::move(first));
  s.events.emplace_back(std::move(second));
  return s;
}

// Another apple enters in the far corner; it looks like the prompt but is
// nowhere near it.
inline Scenario far_new_object(std::uint64_t seed) {
  Rng rng(kFarNewObject, seed);
  auto s = base(kFarNewObject, seed);
  const Box a = apple_box(rng, 16, 22);
  s.objects.push_back(object("apple", apple, "apple", Shape::rectangle, {key(0, a)}));
  add_distractors(s, rng);
  const int appear = rng.uniform(4, 12);
  const int x0 = rng.uniform(74, 78);
  const int y0 = rng.uniform(50, 54);
  s.objects.push_back(object("other-apple", apple, "apple", Shape::ellipse, {key(appear, {x0, y0, x0 + 16, y0 + 14})}));
  s.events.emplace_back(NewObjectEvent{appear, "other-apple"});
  return s;
}

inline Scenario no_event(std::uint64_t seed) {
  Rng rng(kNoEvent, seed);
  auto s = base(kNoEvent, seed);
  const Box a = apple_box(rng, 16, 24);
  const Box end = shifted(a, rng.uniform(-3, 3), rng.uniform(-3, 3));
  const Shape shape = rng.coin() ? Shape::ellipse : Shape::rectangle;
  s.objects.push_back(object("apple", apple, "apple", shape, {key(0, a), key(s.num_frames - 1, end)}));
  add_distractors(s, rng);
  return s;
}

}  // namespace family

inline std::vector<std::string> family_names() {
  return {std::string(family::kNoEvent), std::string(family::kSplitAdjacentSameClass),
          std::string(family::kAdjacentDifferentClass), std::string(family::kTwoSplit),
          std::string(family::kFarNewObject)};
}

inline Scenario make_family_scenario(std::string_view name, std::uint64_t seed) {
  Scenario s;
  if (name == family::kNoEvent) {
    s = family::no_event(seed);
  } else if (name == family::kSplitAdjacentSameClass) {
    s = family::split_adjacent_same_class(seed);
  } else if (name == family::kAdjacentDifferentClass) {
    s = family::adjacent_different_class(seed);
  } else if (name == family::kTwoSplit) {
    s = family::two_split(seed);
  } else if (name == family::kFarNewObject) {
    s = family::far_new_object(seed);
  } else {
    throw ValidationError("unknown scenario family '" + std::string(name) + "'");
  }
  validate_scenario(s);
  return s;
}

}  // namespace statetrack
