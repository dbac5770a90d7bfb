#pragma once

// Binary masks, the run-length text codec, and the set measures everything
// else is built on. All geometry is integer pixels, row-major.

#include <algorithm>
#include <charconv>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "statetrack/error.hpp"
#include "statetrack/hash.hpp"

namespace statetrack {

struct FrameSize {
  int width = 0;
  int height = 0;

  std::size_t pixels() const { return static_cast<std::size_t>(width) * static_cast<std::size_t>(height); }
  bool valid() const { return width >= 1 && height >= 1; }
  bool operator==(const FrameSize&) const = default;

  std::string str() const { return std::to_string(width) + "x" + std::to_string(height); }
};

inline void require_valid(FrameSize size) {
  if (!size.valid()) throw ValidationError("invalid frame size " + size.str());
}

class BinaryMask {
 public:
  BinaryMask() = default;

  explicit BinaryMask(FrameSize size) : size_(size) {
    require_valid(size);
    bits_.assign(size.pixels(), 0);
  }

  BinaryMask(FrameSize size, std::vector<std::uint8_t> bits) : size_(size), bits_(std::move(bits)) {
    require_valid(size);
    if (bits_.size() != size.pixels()) {
      throw ValidationError("mask bit count " + std::to_string(bits_.size()) + " does not match " + size.str());
    }
    for (auto& b : bits_) b = b ? 1 : 0;
  }

  static BinaryMask full(FrameSize size) {
    BinaryMask m(size);
    std::fill(m.bits_.begin(), m.bits_.end(), std::uint8_t{1});
    return m;
  }

  FrameSize size() const { return size_; }
  int width() const { return size_.width; }
  int height() const { return size_.height; }

  bool test(std::size_t index) const { return bits_[index] != 0; }
  bool at(int x, int y) const { return bits_[index_of(x, y)] != 0; }
  void set(int x, int y, bool value = true) { bits_[index_of(x, y)] = value ? 1 : 0; }
  void set_index(std::size_t index, bool value = true) { bits_[index] = value ? 1 : 0; }

  std::span<const std::uint8_t> bits() const { return bits_; }

  std::size_t area() const {
    return static_cast<std::size_t>(std::count(bits_.begin(), bits_.end(), std::uint8_t{1}));
  }
  bool empty() const { return std::none_of(bits_.begin(), bits_.end(), [](std::uint8_t b) { return b != 0; }); }

  // In-place union / intersection / difference with a same-sized mask.
  BinaryMask& operator|=(const BinaryMask& other) {
    check_same(other);
    for (std::size_t i = 0; i < bits_.size(); ++i) bits_[i] |= other.bits_[i];
    return *this;
  }
  BinaryMask& operator&=(const BinaryMask& other) {
    check_same(other);
    for (std::size_t i = 0; i < bits_.size(); ++i) bits_[i] &= other.bits_[i];
    return *this;
  }
  BinaryMask& subtract(const BinaryMask& other) {
    check_same(other);
    for (std::size_t i = 0; i < bits_.size(); ++i) bits_[i] &= static_cast<std::uint8_t>(!other.bits_[i]);
    return *this;
  }

  bool operator==(const BinaryMask&) const = default;

  void check_same(const BinaryMask& other) const {
    if (size_ != other.size_) {
      throw ValidationError("mask size mismatch: " + size_.str() + " vs " + other.size_.str());
    }
  }

 private:
  std::size_t index_of(int x, int y) const {
    return static_cast<std::size_t>(y) * static_cast<std::size_t>(size_.width) + static_cast<std::size_t>(x);
  }

  FrameSize size_{};
  std::vector<std::uint8_t> bits_;
};

inline BinaryMask operator|(BinaryMask a, const BinaryMask& b) { return a |= b; }
inline BinaryMask operator&(BinaryMask a, const BinaryMask& b) { return a &= b; }
inline BinaryMask operator-(BinaryMask a, const BinaryMask& b) { return a.subtract(b); }

inline std::size_t intersection_area(const BinaryMask& a, const BinaryMask& b) {
  a.check_same(b);
  auto x = a.bits();
  auto y = b.bits();
  std::size_t n = 0;
  for (std::size_t i = 0; i < x.size(); ++i) n += x[i] & y[i];
  return n;
}

inline std::size_t union_area(const BinaryMask& a, const BinaryMask& b) {
  a.check_same(b);
  auto x = a.bits();
  auto y = b.bits();
  std::size_t n = 0;
  for (std::size_t i = 0; i < x.size(); ++i) n += x[i] | y[i];
  return n;
}

// |a ∩ b| / |a ∪ b|; two empty masks score 1.
inline double iou(const BinaryMask& a, const BinaryMask& b) {
  const std::size_t u = union_area(a, b);
  if (u == 0) return 1.0;
  return static_cast<double>(intersection_area(a, b)) / static_cast<double>(u);
}

// Fraction of `a` covered by `b`. `a` must be nonempty.
inline double cover(const BinaryMask& a, const BinaryMask& b) {
  a.check_same(b);
  const std::size_t area = a.area();
  if (area == 0) throw ValidationError("cover() of an empty mask is undefined");
  return static_cast<double>(intersection_area(a, b)) / static_cast<double>(area);
}

inline double area_fraction(const BinaryMask& mask) {
  return static_cast<double>(mask.area()) / static_cast<double>(mask.size().pixels());
}

// Morphological dilation by a (2r+1)x(2r+1) square, clipped to the frame.
inline BinaryMask dilate(const BinaryMask& mask, int radius) {
  if (radius < 0) throw ValidationError("negative dilation radius");
  if (radius == 0) return mask;
  const int w = mask.width();
  const int h = mask.height();
  std::vector<std::uint8_t> horiz(mask.size().pixels(), 0);
  std::vector<int> prefix(static_cast<std::size_t>(std::max(w, h)) + 1);
  auto bits = mask.bits();
  for (int y = 0; y < h; ++y) {
    prefix[0] = 0;
    for (int x = 0; x < w; ++x) prefix[x + 1] = prefix[x] + bits[static_cast<std::size_t>(y) * w + x];
    for (int x = 0; x < w; ++x) {
      const int lo = std::max(0, x - radius);
      const int hi = std::min(w - 1, x + radius);
      horiz[static_cast<std::size_t>(y) * w + x] = (prefix[hi + 1] - prefix[lo]) > 0;
    }
  }
  BinaryMask out(mask.size());
  for (int x = 0; x < w; ++x) {
    prefix[0] = 0;
    for (int y = 0; y < h; ++y) prefix[y + 1] = prefix[y] + horiz[static_cast<std::size_t>(y) * w + x];
    for (int y = 0; y < h; ++y) {
      const int lo = std::max(0, y - radius);
      const int hi = std::min(h - 1, y + radius);
      if (prefix[hi + 1] - prefix[lo] > 0) out.set(x, y);
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Run-length codec

// Alternating run lengths, row-major, beginning with a (possibly empty)
// false-run. The canonical form has no zero-length runs after the first.
struct RleMask {
  FrameSize size{};
  std::vector<std::uint32_t> runs;

  bool operator==(const RleMask&) const = default;
};

inline RleMask encode_rle(const BinaryMask& mask) {
  RleMask rle{mask.size(), {}};
  auto bits = mask.bits();
  std::uint8_t current = 0;
  std::uint32_t run = 0;
  for (auto b : bits) {
    if (b != current) {
      rle.runs.push_back(run);
      run = 0;
      current = b;
    }
    ++run;
  }
  rle.runs.push_back(run);
  return rle;
}

inline BinaryMask decode_rle(const RleMask& rle) {
  require_valid(rle.size);
  std::uint64_t total = 0;
  for (auto r : rle.runs) total += r;
  if (total != rle.size.pixels()) {
    throw ValidationError("RLE run sum " + std::to_string(total) + " does not match " + rle.size.str());
  }
  std::vector<std::uint8_t> bits;
  bits.reserve(rle.size.pixels());
  std::uint8_t value = 0;
  for (auto r : rle.runs) {
    bits.insert(bits.end(), r, value);
    value ^= 1;
  }
  return BinaryMask(rle.size, std::move(bits));
}

// "W,H:r0,r1,..." with no whitespace.
inline std::string to_text(const RleMask& rle) {
  std::string out = std::to_string(rle.size.width) + "," + std::to_string(rle.size.height) + ":";
  for (std::size_t i = 0; i < rle.runs.size(); ++i) {
    if (i) out += ',';
    out += std::to_string(rle.runs[i]);
  }
  return out;
}

inline std::string to_rle_text(const BinaryMask& mask) { return to_text(encode_rle(mask)); }

namespace detail {

inline std::uint64_t parse_uint(std::string_view s, std::string_view whole) {
  std::uint64_t v = 0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (s.empty() || ec != std::errc() || ptr != s.data() + s.size()) {
    throw ValidationError("malformed RLE text '" + std::string(whole.substr(0, 64)) + "'");
  }
  return v;
}

}  // namespace detail

inline RleMask parse_rle_text(std::string_view text) {
  const auto colon = text.find(':');
  if (colon == std::string_view::npos) throw ValidationError("RLE text lacks ':' separator");
  const auto head = text.substr(0, colon);
  const auto comma = head.find(',');
  if (comma == std::string_view::npos) throw ValidationError("RLE text lacks 'W,H' header");
  RleMask rle;
  const auto w = detail::parse_uint(head.substr(0, comma), text);
  const auto h = detail::parse_uint(head.substr(comma + 1), text);
  if (w == 0 || h == 0 || w > (1u << 20) || h > (1u << 20)) throw ValidationError("RLE frame size out of range");
  rle.size = {static_cast<int>(w), static_cast<int>(h)};
  auto body = text.substr(colon + 1);
  while (true) {
    const auto next = body.find(',');
    const auto v = detail::parse_uint(body.substr(0, next), text);
    if (v > 0xffffffffu) throw ValidationError("RLE run too long");
    rle.runs.push_back(static_cast<std::uint32_t>(v));
    if (next == std::string_view::npos) break;
    body = body.substr(next + 1);
  }
  return rle;
}

inline BinaryMask mask_from_rle_text(std::string_view text) { return decode_rle(parse_rle_text(text)); }

// ---------------------------------------------------------------------------
// Canonical hash: SHA-256 of the canonical RLE text.

struct MaskHash {
  Digest digest;

  std::string hex() const { return digest.hex(); }
  auto operator<=>(const MaskHash&) const = default;
};

inline MaskHash mask_hash(const BinaryMask& mask) { return MaskHash{sha256(to_rle_text(mask))}; }

}  // namespace statetrack
