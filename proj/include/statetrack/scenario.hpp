#pragma once

// Scripted scenes for the simulator backend. Objects are axis-aligned
// rectangles or ellipses whose centre and half-extents are linearly
// interpolated between keyframes. See docs/scenario_schema.md.

#include <cmath>
#include <cstdint>
#include <set>
#include <string>
#include <variant>
#include <vector>

#include "statetrack/error.hpp"
#include "statetrack/io.hpp"
#include "statetrack/mask.hpp"

namespace statetrack {

enum class Shape { rectangle, ellipse };

struct Keyframe {
  int frame = 0;
  double cx = 0, cy = 0;  // centre, pixels
  double rx = 1, ry = 1;  // half-extents, pixels
};

struct ObjectSpec {
  std::string id;
  int class_id = 0;
  std::string label;
  Shape shape = Shape::rectangle;
  std::vector<Keyframe> keyframes;
};

struct SplitEvent {
  int frame = 0;
  std::string parent;
  std::string verb;
  std::string parent_label_after;  // empty keeps the parent's label
  std::vector<ObjectSpec> fragments;
};

// The tracker loses the object from this frame on (tracks seeded earlier).
struct AppearanceChangeEvent {
  int frame = 0;
  std::string object;
};

// The object is absent before this frame.
struct NewObjectEvent {
  int frame = 0;
  std::string object;
};

using Event = std::variant<SplitEvent, AppearanceChangeEvent, NewObjectEvent>;

inline int event_frame(const Event& e) {
  return std::visit([](const auto& v) { return v.frame; }, e);
}

struct Scenario {
  std::string name = "scenario";
  FrameSize size{64, 48};
  int num_frames = 10;
  std::uint64_t seed = 0;
  int embed_dim = 8;
  double embed_sigma = 0.1;
  int dilation_r1 = 3;
  int dilation_r2 = 9;
  int grace = 5;
  std::string prompt_object;
  std::vector<ObjectSpec> objects;
  std::vector<Event> events;
};

// Shape geometry at `frame`, clamped to the first/last keyframe.
inline Keyframe interpolate(const ObjectSpec& obj, int frame) {
  const auto& kf = obj.keyframes;
  if (frame <= kf.front().frame) return kf.front();
  if (frame >= kf.back().frame) return kf.back();
  for (std::size_t i = 1; i < kf.size(); ++i) {
    if (frame <= kf[i].frame) {
      const auto& a = kf[i - 1];
      const auto& b = kf[i];
      const double w = static_cast<double>(frame - a.frame) / static_cast<double>(b.frame - a.frame);
      auto lerp = [w](double x, double y) { return x + (y - x) * w; };
      return {frame, lerp(a.cx, b.cx), lerp(a.cy, b.cy), lerp(a.rx, b.rx), lerp(a.ry, b.ry)};
    }
  }
  return kf.back();
}

// Pixel (x, y) is inside when its centre (x+0.5, y+0.5) is.
inline BinaryMask rasterize(const ObjectSpec& obj, int frame, FrameSize size) {
  const auto g = interpolate(obj, frame);
  BinaryMask m(size);
  const int x0 = std::max(0, static_cast<int>(std::floor(g.cx - g.rx)) - 1);
  const int x1 = std::min(size.width - 1, static_cast<int>(std::ceil(g.cx + g.rx)) + 1);
  const int y0 = std::max(0, static_cast<int>(std::floor(g.cy - g.ry)) - 1);
  const int y1 = std::min(size.height - 1, static_cast<int>(std::ceil(g.cy + g.ry)) + 1);
  for (int y = y0; y <= y1; ++y) {
    for (int x = x0; x <= x1; ++x) {
      const double dx = (x + 0.5 - g.cx) / g.rx;
      const double dy = (y + 0.5 - g.cy) / g.ry;
      const bool inside = obj.shape == Shape::rectangle ? (std::abs(dx) <= 1.0 && std::abs(dy) <= 1.0)
                                                         : (dx * dx + dy * dy <= 1.0);
      if (inside) m.set(x, y);
    }
  }
  return m;
}

// Structural checks; geometric checks happen when the simulator renders.
inline void validate_scenario(const Scenario& s) {
  auto fail = [&](const std::string& msg) { throw ValidationError("scenario '" + s.name + "': " + msg); };
  if (!s.size.valid()) fail("invalid frame size");
  if (s.num_frames < 1) fail("num_frames must be >= 1");
  if (s.embed_dim < 2) fail("embed_dim must be >= 2");
  if (s.embed_sigma < 0) fail("embed_sigma must be >= 0");
  if (s.dilation_r1 < 0 || s.dilation_r2 < s.dilation_r1) fail("require 0 <= dilation_r1 <= dilation_r2");
  if (s.grace < 0) fail("grace must be >= 0");

  std::set<std::string> ids;
  auto check_object = [&](const ObjectSpec& o) {
    if (o.id.empty()) fail("object with empty id");
    if (!ids.insert(o.id).second) fail("duplicate object id '" + o.id + "'");
    // The last basis direction is reserved for background pixels.
    if (o.class_id < 0 || o.class_id >= s.embed_dim - 1) fail("object '" + o.id + "' class_id out of range");
    if (o.keyframes.empty()) fail("object '" + o.id + "' has no keyframes");
    for (std::size_t i = 0; i < o.keyframes.size(); ++i) {
      const auto& k = o.keyframes[i];
      if (k.rx <= 0 || k.ry <= 0) fail("object '" + o.id + "' has non-positive extent");
      if (i > 0 && k.frame <= o.keyframes[i - 1].frame) fail("object '" + o.id + "' keyframes not ascending");
    }
  };
  for (const auto& o : s.objects) check_object(o);
  for (const auto& e : s.events) {
    if (const auto* sp = std::get_if<SplitEvent>(&e)) {
      for (const auto& f : sp->fragments) check_object(f);
    }
  }

  std::set<std::string> introduced;
  for (const auto& e : s.events) {
    const int f = event_frame(e);
    if (f < 1 || f > s.num_frames - 1) fail("event frame " + std::to_string(f) + " outside [1, T-1]");
    std::visit(
        [&](const auto& ev) {
          using T = std::decay_t<decltype(ev)>;
          if constexpr (std::is_same_v<T, SplitEvent>) {
            if (!ids.count(ev.parent)) fail("split parent '" + ev.parent + "' unknown");
            if (ev.fragments.empty()) fail("split of '" + ev.parent + "' has no fragments");
            if (ev.verb.empty()) fail("split of '" + ev.parent + "' has an empty verb");
          } else if constexpr (std::is_same_v<T, AppearanceChangeEvent>) {
            if (!ids.count(ev.object)) fail("appearance_change object '" + ev.object + "' unknown");
          } else {
            bool top_level = false;
            for (const auto& o : s.objects) top_level |= o.id == ev.object;
            if (!top_level) fail("new_object '" + ev.object + "' must be a top-level object");
            if (!introduced.insert(ev.object).second) fail("object '" + ev.object + "' introduced twice");
          }
        },
        e);
  }
  bool prompt_found = false;
  for (const auto& o : s.objects) prompt_found |= o.id == s.prompt_object;
  if (!prompt_found) fail("prompt_object '" + s.prompt_object + "' is not a top-level object");
  if (introduced.count(s.prompt_object)) fail("prompt object must be present at frame 0");
}

// ---------------------------------------------------------------------------
// JSON mapping

inline json object_to_json(const ObjectSpec& o) {
  json kfs = json::array();
  for (const auto& k : o.keyframes) {
    kfs.push_back(json{{"frame", k.frame}, {"cx", k.cx}, {"cy", k.cy}, {"rx", k.rx}, {"ry", k.ry}});
  }
  return json{{"id", o.id},
              {"class_id", o.class_id},
              {"label", o.label},
              {"shape", o.shape == Shape::rectangle ? "rectangle" : "ellipse"},
              {"keyframes", std::move(kfs)}};
}

inline ObjectSpec object_from_json(const JsonReader& r) {
  ObjectSpec o;
  o.id = r.get<std::string>("id");
  o.class_id = r.get<int>("class_id");
  o.label = r.get_or<std::string>("label", o.id);
  const auto shape = r.get_or<std::string>("shape", "rectangle");
  if (shape == "rectangle") {
    o.shape = Shape::rectangle;
  } else if (shape == "ellipse") {
    o.shape = Shape::ellipse;
  } else {
    throw ValidationError(r.where() + ": unknown shape '" + shape + "'");
  }
  const auto& kfs = r.array("keyframes");
  for (std::size_t i = 0; i < kfs.size(); ++i) {
    JsonReader k(kfs[i], r.where() + ".keyframes[" + std::to_string(i) + "]");
    o.keyframes.push_back({k.get<int>("frame"), k.get<double>("cx"), k.get<double>("cy"), k.get<double>("rx"),
                           k.get<double>("ry")});
  }
  return o;
}

inline json scenario_to_json(const Scenario& s) {
  json doc;
  doc["name"] = s.name;
  doc["width"] = s.size.width;
  doc["height"] = s.size.height;
  doc["num_frames"] = s.num_frames;
  doc["seed"] = s.seed;
  doc["embed_dim"] = s.embed_dim;
  doc["embed_sigma"] = s.embed_sigma;
  doc["dilation_r1"] = s.dilation_r1;
  doc["dilation_r2"] = s.dilation_r2;
  doc["grace"] = s.grace;
  doc["prompt_object"] = s.prompt_object;
  json objs = json::array();
  for (const auto& o : s.objects) objs.push_back(object_to_json(o));
  doc["objects"] = std::move(objs);
  json events = json::array();
  for (const auto& e : s.events) {
    std::visit(
        [&](const auto& ev) {
          using T = std::decay_t<decltype(ev)>;
          if constexpr (std::is_same_v<T, SplitEvent>) {
            json frags = json::array();
            for (const auto& f : ev.fragments) frags.push_back(object_to_json(f));
            events.push_back(json{{"type", "split"},
                                  {"frame", ev.frame},
                                  {"parent", ev.parent},
                                  {"verb", ev.verb},
                                  {"parent_label_after", ev.parent_label_after},
                                  {"fragments", std::move(frags)}});
          } else if constexpr (std::is_same_v<T, AppearanceChangeEvent>) {
            events.push_back(json{{"type", "appearance_change"}, {"frame", ev.frame}, {"object", ev.object}});
          } else {
            events.push_back(json{{"type", "new_object"}, {"frame", ev.frame}, {"object", ev.object}});
          }
        },
        e);
  }
  doc["events"] = std::move(events);
  return doc;
}

inline Scenario scenario_from_json(const json& doc, const std::string& where = "scenario") {
  JsonReader r(doc, where);
  Scenario s;
  s.name = r.get_or<std::string>("name", "scenario");
  s.size = {r.get<int>("width"), r.get<int>("height")};
  s.num_frames = r.get<int>("num_frames");
  s.seed = r.get_or<std::uint64_t>("seed", 0);
  s.embed_dim = r.get_or<int>("embed_dim", 8);
  s.embed_sigma = r.get_or<double>("embed_sigma", 0.1);
  s.dilation_r1 = r.get_or<int>("dilation_r1", 3);
  s.dilation_r2 = r.get_or<int>("dilation_r2", 9);
  s.grace = r.get_or<int>("grace", 5);
  s.prompt_object = r.get<std::string>("prompt_object");
  const auto& objs = r.array("objects");
  for (std::size_t i = 0; i < objs.size(); ++i) {
    s.objects.push_back(object_from_json(JsonReader(objs[i], where + ".objects[" + std::to_string(i) + "]")));
  }
  if (r.has("events")) {
    const auto& events = r.array("events");
    for (std::size_t i = 0; i < events.size(); ++i) {
      JsonReader e(events[i], where + ".events[" + std::to_string(i) + "]");
      const auto type = e.get<std::string>("type");
      const int frame = e.get<int>("frame");
      if (type == "split") {
        SplitEvent sp;
        sp.frame = frame;
        sp.parent = e.get<std::string>("parent");
        sp.verb = e.get<std::string>("verb");
        sp.parent_label_after = e.get_or<std::string>("parent_label_after", "");
        const auto& frags = e.array("fragments");
        for (std::size_t j = 0; j < frags.size(); ++j) {
          sp.fragments.push_back(
              object_from_json(JsonReader(frags[j], e.where() + ".fragments[" + std::to_string(j) + "]")));
        }
        s.events.emplace_back(std::move(sp));
      } else if (type == "appearance_change") {
        s.events.emplace_back(AppearanceChangeEvent{frame, e.get<std::string>("object")});
      } else if (type == "new_object") {
        s.events.emplace_back(NewObjectEvent{frame, e.get<std::string>("object")});
      } else {
        throw ValidationError(e.where() + ": unknown event type '" + type + "'");
      }
    }
  }
  validate_scenario(s);
  return s;
}

}  // namespace statetrack
