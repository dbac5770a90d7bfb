#pragma once

#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include "json.hpp"
#include "statetrack/error.hpp"
#include "statetrack/mask.hpp"

namespace statetrack {

using json = nlohmann::ordered_json;

inline std::string read_text_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  if (in.bad()) throw IoError("read failed for " + path.string());
  return ss.str();
}

// Parse errors become ValidationError naming the file.
inline json read_json_file(const std::filesystem::path& path) {
  const auto text = read_text_file(path);
  try {
    return json::parse(text);
  } catch (const json::parse_error& e) {
    throw ValidationError(path.string() + ": invalid JSON: " + e.what());
  }
}

// Writes to a sibling temp file and renames over the destination.
inline void write_file_atomic(const std::filesystem::path& path, const std::string& content) {
  std::error_code ec;
  if (path.has_parent_path()) {
    std::filesystem::create_directories(path.parent_path(), ec);
    if (ec) throw IoError("cannot create directory " + path.parent_path().string() + ": " + ec.message());
  }
  auto tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot write " + tmp.string());
    out << content;
    out.flush();
    if (!out) throw IoError("write failed for " + tmp.string());
  }
  std::filesystem::rename(tmp, path, ec);
  if (ec) throw IoError("cannot rename " + tmp.string() + " to " + path.string() + ": " + ec.message());
}

inline void write_json_file(const std::filesystem::path& path, const json& doc) {
  write_file_atomic(path, doc.dump(2) + "\n");
}

// Typed field access that reports the file and field on failure.
class JsonReader {
 public:
  JsonReader(const json& node, std::string where) : node_(node), where_(std::move(where)) {}

  const json& node() const { return node_; }
  const std::string& where() const { return where_; }

  bool has(const char* key) const { return node_.is_object() && node_.contains(key); }

  const json& at(const char* key) const {
    if (!node_.is_object()) throw ValidationError(where_ + ": expected an object");
    auto it = node_.find(key);
    if (it == node_.end()) throw ValidationError(where_ + ": missing field '" + key + "'");
    return *it;
  }

  template <typename T>
  T get(const char* key) const {
    const auto& v = at(key);
    try {
      return v.get<T>();
    } catch (const json::exception&) {
      throw ValidationError(where_ + ": field '" + key + "' has the wrong type");
    }
  }

  template <typename T>
  T get_or(const char* key, T fallback) const {
    return has(key) ? get<T>(key) : fallback;
  }

  const json& array(const char* key) const {
    const auto& v = at(key);
    if (!v.is_array()) throw ValidationError(where_ + ": field '" + key + "' must be an array");
    return v;
  }

  JsonReader child(const char* key) const { return {at(key), where_ + "." + key}; }

  BinaryMask mask(const json& v, const std::string& field) const {
    if (!v.is_string()) throw ValidationError(where_ + ": " + field + " must be an RLE string");
    try {
      return mask_from_rle_text(v.get<std::string>());
    } catch (const ValidationError& e) {
      throw ValidationError(where_ + ": " + field + ": " + e.what());
    }
  }

 private:
  const json& node_;
  std::string where_;
};

}  // namespace statetrack
