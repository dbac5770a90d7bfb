#pragma once

// Ground-truth transformation records (tas.json) and per-frame GT masks.

#include <filesystem>
#include <string>
#include <vector>

#include "statetrack/error.hpp"
#include "statetrack/io.hpp"
#include "statetrack/mask.hpp"

namespace statetrack {

struct ResultingObject {
  BinaryMask mask;  // at the transformation's end frame
  std::string text;
};

struct Transformation {
  int t_s = 0;
  int t_e = 0;
  std::string verb;
  std::vector<ResultingObject> resulting_objects;
};

struct TasAnnotation {
  int t_start = 0;
  int t_end = 0;
  std::vector<Transformation> transformations;
};

inline void validate_annotation(const TasAnnotation& a) {
  if (a.t_start < 0 || a.t_end < a.t_start) throw ValidationError("annotation: require 0 <= t_start <= t_end");
  for (std::size_t i = 0; i < a.transformations.size(); ++i) {
    const auto& tr = a.transformations[i];
    const auto where = "annotation: transformation " + std::to_string(i);
    if (!(a.t_start <= tr.t_s && tr.t_s <= tr.t_e && tr.t_e <= a.t_end)) {
      throw ValidationError(where + ": require t_start <= t_s <= t_e <= t_end");
    }
    if (tr.resulting_objects.empty()) throw ValidationError(where + ": no resulting objects");
    for (const auto& o : tr.resulting_objects) {
      if (o.mask.size() != tr.resulting_objects.front().mask.size()) {
        throw ValidationError(where + ": resulting-object masks differ in size");
      }
    }
  }
}

inline json annotation_to_json(const TasAnnotation& a) {
  json doc;
  doc["t_start"] = a.t_start;
  doc["t_end"] = a.t_end;
  json items = json::array();
  for (const auto& tr : a.transformations) {
    json t;
    t["t_s"] = tr.t_s;
    t["t_e"] = tr.t_e;
    t["verb"] = tr.verb;
    json objs = json::array();
    for (const auto& o : tr.resulting_objects) objs.push_back(json{{"mask", to_rle_text(o.mask)}, {"text", o.text}});
    t["objects"] = std::move(objs);
    items.push_back(std::move(t));
  }
  doc["transformations"] = std::move(items);
  return doc;
}

inline TasAnnotation annotation_from_json(const json& doc, const std::string& where = "tas.json") {
  JsonReader r(doc, where);
  TasAnnotation a;
  a.t_start = r.get<int>("t_start");
  a.t_end = r.get<int>("t_end");
  const auto& items = r.array("transformations");
  for (std::size_t i = 0; i < items.size(); ++i) {
    JsonReader t(items[i], where + ".transformations[" + std::to_string(i) + "]");
    Transformation tr;
    tr.t_s = t.get<int>("t_s");
    tr.t_e = t.get<int>("t_e");
    tr.verb = t.get<std::string>("verb");
    const auto& objs = t.array("objects");
    for (std::size_t j = 0; j < objs.size(); ++j) {
      JsonReader o(objs[j], t.where() + ".objects[" + std::to_string(j) + "]");
      tr.resulting_objects.push_back({o.mask(o.at("mask"), "mask"), o.get<std::string>("text")});
    }
    a.transformations.push_back(std::move(tr));
  }
  validate_annotation(a);
  return a;
}

// gt_masks.json: {"masks":[rle per frame]}
inline json gt_masks_to_json(const std::vector<BinaryMask>& masks) {
  json arr = json::array();
  for (const auto& m : masks) arr.push_back(to_rle_text(m));
  return json{{"masks", std::move(arr)}};
}

inline std::vector<BinaryMask> gt_masks_from_json(const json& doc, const std::string& where = "gt_masks.json") {
  JsonReader r(doc, where);
  std::vector<BinaryMask> out;
  const auto& arr = r.array("masks");
  for (std::size_t i = 0; i < arr.size(); ++i) out.push_back(r.mask(arr[i], "masks[" + std::to_string(i) + "]"));
  for (const auto& m : out) {
    if (m.size() != out.front().size()) throw ValidationError(where + ": masks differ in frame size");
  }
  return out;
}

}  // namespace statetrack
