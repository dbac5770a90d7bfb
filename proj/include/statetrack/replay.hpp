#pragma once

// File-replay backend and the recorder that produces replay bundles.
//
// Bundle layout:
//   meta.json
//   entities/<frame:06d>.json
//   tracks/<start:06d>_<mask_hash>.json
//   embeds/<frame:06d>_<mask_hash>.json
//   descriptions/<before:06d>_<after:06d>_<query_hash>.json
//   frames/<frame:06d>.png            (optional, ignored here)

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <string>
#include <tuple>
#include <vector>

#include "statetrack/backend.hpp"
#include "statetrack/io.hpp"

namespace statetrack {

inline constexpr int kBundleFormatVersion = 1;

inline std::string frame_key(int frame) {
  char buf[16];
  std::snprintf(buf, sizeof buf, "%06d", frame);
  return buf;
}

inline std::string entities_key(int frame) { return "entities/" + frame_key(frame) + ".json"; }
inline std::string track_key(int start, const std::string& hash) {
  return "tracks/" + frame_key(start) + "_" + hash + ".json";
}
inline std::string embed_key(int frame, const std::string& hash) {
  return "embeds/" + frame_key(frame) + "_" + hash + ".json";
}
inline std::string description_key(int before, int after, const std::string& query_hash) {
  return "descriptions/" + frame_key(before) + "_" + frame_key(after) + "_" + query_hash + ".json";
}

struct BundleMeta {
  FrameSize size;
  int num_frames = 0;
  int embed_dim = 0;
  json extras = json::object();  // anything beyond the required fields, echoed back on write
};

// ---------------------------------------------------------------------------
// Record (de)serialization shared by reader and writer.

namespace bundle {

inline json entities_to_json(const std::vector<BinaryMask>& masks) {
  json arr = json::array();
  for (const auto& m : masks) arr.push_back(json{{"rle", to_rle_text(m)}});
  return arr;
}

inline json track_to_json(const Tubelet& t) {
  json primary = json::array();
  json candidates = json::array();
  for (const auto& m : t.primary_masks) primary.push_back(to_rle_text(m));
  for (const auto& c : t.candidates) {
    candidates.push_back(json::array({to_rle_text(c[0]), to_rle_text(c[1]), to_rle_text(c[2])}));
  }
  return json{{"primary", std::move(primary)}, {"candidates", std::move(candidates)}};
}

inline json embed_to_json(const Embedding& e) { return json{{"v", e.values}}; }

inline json description_to_json(const Description& d) {
  json objs = json::array();
  for (const auto& [idx, text] : d.objects) objs.push_back(json::array({idx, text}));
  return json{{"action_verb", d.action_verb}, {"objects", std::move(objs)}};
}

inline Description description_from_json(const JsonReader& r) {
  Description d;
  d.action_verb = r.get<std::string>("action_verb");
  const auto& objs = r.array("objects");
  for (const auto& o : objs) {
    if (!o.is_array() || o.size() != 2 || !o[0].is_number_integer() || !o[1].is_string()) {
      throw ValidationError(r.where() + ": objects entries must be [int, string]");
    }
    d.objects.emplace_back(o[0].get<int>(), o[1].get<std::string>());
  }
  return d;
}

inline json meta_to_json(const BundleMeta& m) {
  json doc{{"width", m.size.width},
           {"height", m.size.height},
           {"num_frames", m.num_frames},
           {"embed_dim", m.embed_dim},
           {"format_version", kBundleFormatVersion}};
  for (auto it = m.extras.begin(); it != m.extras.end(); ++it) doc[it.key()] = it.value();
  return doc;
}

// Parses "<frame>" / "<frame>_<hash>" / "<a>_<b>_<hash>" record names.
inline std::vector<std::string> split_stem(const std::string& stem) {
  std::vector<std::string> parts;
  std::size_t pos = 0;
  while (true) {
    auto next = stem.find('_', pos);
    parts.push_back(stem.substr(pos, next - pos));
    if (next == std::string::npos) break;
    pos = next + 1;
  }
  return parts;
}

inline int parse_frame_field(const std::string& s, const std::string& file) {
  if (s.size() != 6 || s.find_first_not_of("0123456789") != std::string::npos) {
    throw ValidationError(file + ": malformed frame field in record name");
  }
  return std::stoi(s);
}

inline void check_hash_field(const std::string& s, const std::string& file) {
  if (s.size() != 64 || s.find_first_not_of("0123456789abcdef") != std::string::npos) {
    throw ValidationError(file + ": malformed hash field in record name");
  }
}

}  // namespace bundle

// ---------------------------------------------------------------------------

class ReplayBackend final : public Backend {
 public:
  static std::shared_ptr<const ReplayBackend> load(const std::filesystem::path& dir) {
    return std::shared_ptr<const ReplayBackend>(new ReplayBackend(dir));
  }

  FrameSize frame_size() const override { return meta_.size; }
  int num_frames() const override { return meta_.num_frames; }
  int embed_dim() const override { return meta_.embed_dim; }
  const BundleMeta& meta() const { return meta_; }

  std::vector<BinaryMask> segment_entities(int frame) const override {
    check_frame(frame);
    auto it = entities_.find(frame);
    if (it == entities_.end()) throw BundleIncompleteError(entities_key(frame));
    return it->second;
  }

  Tubelet track(int start_frame, const BinaryMask& mask) const override {
    check_frame(start_frame);
    check_mask(mask);
    if (mask.empty()) throw ValidationError("track() requires a nonempty seed mask");
    const auto hash = mask_hash(mask).hex();
    auto it = tracks_.find({start_frame, hash});
    if (it == tracks_.end()) throw BundleIncompleteError(track_key(start_frame, hash));
    Tubelet t = it->second;
    t.id = "replay:" + frame_key(start_frame) + "_" + hash.substr(0, 12);
    return t;
  }

  Embedding embed(int frame, const BinaryMask& mask) const override {
    check_frame(frame);
    check_mask(mask);
    if (mask.empty()) throw ValidationError("embed() of an empty mask");
    const auto hash = mask_hash(mask).hex();
    auto it = embeds_.find({frame, hash});
    if (it == embeds_.end()) throw BundleIncompleteError(embed_key(frame, hash));
    return it->second;
  }

  Description describe(int before_frame, int after_frame, std::span<const BinaryMask> before_contours,
                       std::span<const BinaryMask> after_contours) const override {
    check_frame(before_frame);
    check_frame(after_frame);
    const auto q = describe_query_hash(before_contours, after_contours);
    auto it = descriptions_.find({before_frame, after_frame, q});
    if (it == descriptions_.end()) throw BundleIncompleteError(description_key(before_frame, after_frame, q));
    return it->second;
  }

 private:
  explicit ReplayBackend(const std::filesystem::path& dir) {
    namespace fs = std::filesystem;
    if (!fs::is_directory(dir)) throw IoError("replay bundle " + dir.string() + " is not a directory");
    const auto meta_path = dir / "meta.json";
    if (!fs::exists(meta_path)) throw ValidationError(dir.string() + ": not a replay bundle (no meta.json)");
    load_meta(meta_path);
    for_each_record(dir / "entities", [&](const fs::path& p, const std::vector<std::string>& parts) {
      if (parts.size() != 1) throw ValidationError(p.string() + ": bad record name");
      const int frame = frame_in_range(bundle::parse_frame_field(parts[0], p.string()), p);
      const auto doc = read_json_file(p);
      if (!doc.is_array()) throw ValidationError(p.string() + ": expected an array");
      std::vector<BinaryMask> masks;
      for (std::size_t i = 0; i < doc.size(); ++i) {
        JsonReader r(doc[i], p.string() + "[" + std::to_string(i) + "]");
        masks.push_back(sized(r.mask(r.at("rle"), "rle"), p));
      }
      entities_[frame] = std::move(masks);
    });
    for_each_record(dir / "tracks", [&](const fs::path& p, const std::vector<std::string>& parts) {
      if (parts.size() != 2) throw ValidationError(p.string() + ": bad record name");
      const int start = frame_in_range(bundle::parse_frame_field(parts[0], p.string()), p);
      bundle::check_hash_field(parts[1], p.string());
      const auto doc = read_json_file(p);
      JsonReader r(doc, p.string());
      Tubelet t;
      t.start_frame = start;
      const auto& primary = r.array("primary");
      const auto& candidates = r.array("candidates");
      for (std::size_t i = 0; i < primary.size(); ++i) {
        t.primary_masks.push_back(sized(r.mask(primary[i], "primary[" + std::to_string(i) + "]"), p));
      }
      for (std::size_t i = 0; i < candidates.size(); ++i) {
        const auto& c = candidates[i];
        if (!c.is_array() || c.size() != 3) throw ValidationError(p.string() + ": candidates entries must hold 3 RLEs");
        CandidateMasks triple;
        for (std::size_t j = 0; j < 3; ++j) triple[j] = sized(r.mask(c[j], "candidates"), p);
        t.candidates.push_back(std::move(triple));
      }
      validate_tubelet(t, meta_.size, meta_.num_frames, true);
      tracks_[{start, parts[1]}] = std::move(t);
    });
    for_each_record(dir / "embeds", [&](const fs::path& p, const std::vector<std::string>& parts) {
      if (parts.size() != 2) throw ValidationError(p.string() + ": bad record name");
      const int frame = frame_in_range(bundle::parse_frame_field(parts[0], p.string()), p);
      bundle::check_hash_field(parts[1], p.string());
      const auto doc = read_json_file(p);
      JsonReader r(doc, p.string());
      Embedding e{r.get<std::vector<double>>("v")};
      if (static_cast<int>(e.values.size()) != meta_.embed_dim) {
        throw ValidationError(p.string() + ": embedding dimension differs from meta embed_dim");
      }
      if (std::abs(e.norm() - 1.0) > 1e-6) throw ValidationError(p.string() + ": embedding is not unit-norm");
      embeds_[{frame, parts[1]}] = std::move(e);
    });
    for_each_record(dir / "descriptions", [&](const fs::path& p, const std::vector<std::string>& parts) {
      if (parts.size() != 3) throw ValidationError(p.string() + ": bad record name");
      const int before = frame_in_range(bundle::parse_frame_field(parts[0], p.string()), p);
      const int after = frame_in_range(bundle::parse_frame_field(parts[1], p.string()), p);
      bundle::check_hash_field(parts[2], p.string());
      const auto doc = read_json_file(p);
      descriptions_[{before, after, parts[2]}] = bundle::description_from_json(JsonReader(doc, p.string()));
    });
  }

  void load_meta(const std::filesystem::path& path) {
    const auto doc = read_json_file(path);
    JsonReader r(doc, path.string());
    meta_.size = {r.get<int>("width"), r.get<int>("height")};
    meta_.num_frames = r.get<int>("num_frames");
    meta_.embed_dim = r.get<int>("embed_dim");
    const int version = r.get<int>("format_version");
    if (version != kBundleFormatVersion) throw ValidationError(path.string() + ": unsupported format_version");
    if (!meta_.size.valid() || meta_.num_frames < 1 || meta_.embed_dim < 1) {
      throw ValidationError(path.string() + ": invalid dimensions");
    }
    for (auto it = doc.begin(); it != doc.end(); ++it) {
      const auto& k = it.key();
      if (k != "width" && k != "height" && k != "num_frames" && k != "embed_dim" && k != "format_version") {
        meta_.extras[k] = it.value();
      }
    }
  }

  template <typename F>
  static void for_each_record(const std::filesystem::path& sub, F&& fn) {
    namespace fs = std::filesystem;
    if (!fs::is_directory(sub)) return;
    std::vector<fs::path> files;
    for (const auto& entry : fs::directory_iterator(sub)) {
      if (entry.is_regular_file() && entry.path().extension() == ".json") files.push_back(entry.path());
    }
    std::sort(files.begin(), files.end());
    for (const auto& p : files) fn(p, bundle::split_stem(p.stem().string()));
  }

  int frame_in_range(int frame, const std::filesystem::path& p) const {
    if (frame >= meta_.num_frames) throw ValidationError(p.string() + ": frame index beyond num_frames");
    return frame;
  }

  BinaryMask sized(BinaryMask m, const std::filesystem::path& p) const {
    if (m.size() != meta_.size) {
      throw ValidationError(p.string() + ": RLE frame size " + m.size().str() + " differs from meta " +
                            meta_.size.str());
    }
    return m;
  }

  BundleMeta meta_;
  std::map<int, std::vector<BinaryMask>> entities_;
  std::map<std::pair<int, std::string>, Tubelet> tracks_;
  std::map<std::pair<int, std::string>, Embedding> embeds_;
  std::map<std::tuple<int, int, std::string>, Description> descriptions_;
};

inline std::shared_ptr<const ReplayBackend> load_replay_bundle(const std::filesystem::path& dir) {
  return ReplayBackend::load(dir);
}

// ---------------------------------------------------------------------------

// Forwards every call to an inner backend and keeps the answers so they can
// be written out as a replay bundle.
class RecordingBackend final : public Backend {
 public:
  explicit RecordingBackend(std::shared_ptr<const Backend> inner) : inner_(std::move(inner)) {}

  FrameSize frame_size() const override { return inner_->frame_size(); }
  int num_frames() const override { return inner_->num_frames(); }
  int embed_dim() const override { return inner_->embed_dim(); }

  std::vector<BinaryMask> segment_entities(int frame) const override {
    auto out = inner_->segment_entities(frame);
    std::lock_guard lock(mu_);
    records_[entities_key(frame)] = bundle::entities_to_json(out);
    return out;
  }

  Tubelet track(int start_frame, const BinaryMask& mask) const override {
    auto out = inner_->track(start_frame, mask);
    std::lock_guard lock(mu_);
    records_[track_key(start_frame, mask_hash(mask).hex())] = bundle::track_to_json(out);
    return out;
  }

  Embedding embed(int frame, const BinaryMask& mask) const override {
    auto out = inner_->embed(frame, mask);
    std::lock_guard lock(mu_);
    records_[embed_key(frame, mask_hash(mask).hex())] = bundle::embed_to_json(out);
    return out;
  }

  Description describe(int before_frame, int after_frame, std::span<const BinaryMask> before_contours,
                       std::span<const BinaryMask> after_contours) const override {
    auto out = inner_->describe(before_frame, after_frame, before_contours, after_contours);
    std::lock_guard lock(mu_);
    records_[description_key(before_frame, after_frame, describe_query_hash(before_contours, after_contours))] =
        bundle::description_to_json(out);
    return out;
  }

  std::size_t record_count() const {
    std::lock_guard lock(mu_);
    return records_.size();
  }

  // Writes meta.json plus every recorded answer. The target must be absent,
  // empty, or an earlier bundle (which is replaced).
  void write_bundle(const std::filesystem::path& dir, json extras = json::object()) const {
    namespace fs = std::filesystem;
    std::error_code ec;
    if (fs::exists(dir)) {
      if (!fs::is_directory(dir)) throw IoError(dir.string() + " exists and is not a directory");
      const bool is_bundle = fs::exists(dir / "meta.json");
      if (!is_bundle && !fs::is_empty(dir)) {
        throw IoError(dir.string() + " is not empty and does not hold a bundle; refusing to overwrite");
      }
      for (const char* sub : {"entities", "tracks", "embeds", "descriptions"}) fs::remove_all(dir / sub, ec);
    }
    BundleMeta meta{frame_size(), num_frames(), embed_dim(), std::move(extras)};
    std::lock_guard lock(mu_);
    write_json_file(dir / "meta.json", bundle::meta_to_json(meta));
    for (const auto& [key, doc] : records_) write_file_atomic(dir / key, doc.dump() + "\n");
  }

 private:
  std::shared_ptr<const Backend> inner_;
  mutable std::mutex mu_;
  mutable std::map<std::string, json> records_;
};

}  // namespace statetrack
