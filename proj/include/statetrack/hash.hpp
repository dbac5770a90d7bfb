#pragma once

#include <openssl/evp.h>

#include <array>
#include <compare>
#include <cstdint>
#include <string>
#include <string_view>

#include "statetrack/error.hpp"

namespace statetrack {

// 32-byte SHA-256 digest with lowercase hex rendering.
struct Digest {
  std::array<std::uint8_t, 32> bytes{};

  std::string hex() const {
    static constexpr char kHex[] = "0123456789abcdef";
    std::string out(64, '0');
    for (std::size_t i = 0; i < bytes.size(); ++i) {
      out[2 * i] = kHex[bytes[i] >> 4];
      out[2 * i + 1] = kHex[bytes[i] & 0x0f];
    }
    return out;
  }

  // First eight bytes read big-endian; handy as an RNG seed.
  std::uint64_t prefix64() const {
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v = (v << 8) | bytes[i];
    return v;
  }

  auto operator<=>(const Digest&) const = default;
};

inline Digest sha256(std::string_view data) {
  Digest d;
  unsigned int len = 0;
  if (EVP_Digest(data.data(), data.size(), d.bytes.data(), &len, EVP_sha256(), nullptr) != 1 ||
      len != d.bytes.size()) {
    throw Error("SHA-256 computation failed");
  }
  return d;
}

inline std::string sha256_hex(std::string_view data) { return sha256(data).hex(); }

}  // namespace statetrack
