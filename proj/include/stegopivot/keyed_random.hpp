#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "stegopivot/hashing.hpp"

namespace stegopivot {

/// Secret key material. A passphrase's UTF-8 bytes are used verbatim.
class SecretKey {
 public:
  SecretKey() = default;
  explicit SecretKey(std::vector<std::uint8_t> bytes) : bytes_(std::move(bytes)) {}
  static SecretKey from_passphrase(std::string_view passphrase);

  std::span<const std::uint8_t> bytes() const noexcept { return bytes_; }

  /// Hex of the first 8 bytes of derive("fingerprint"). Safe to publish.
  std::string fingerprint() const;

  /// SHA-256("stegopivot/v1/" || label || 0x00 || key): independent sub-keys per use.
  Digest derive(std::string_view label) const;

 private:
  std::vector<std::uint8_t> bytes_;
};

/// Portable keyed pseudorandom stream: SHA-256 in counter mode over a derived
/// sub-key. Block i is SHA-256(subkey || be64(i)), read as four big-endian
/// 64-bit words. Same key and label give the same stream on every platform.
class KeyedStream {
 public:
  KeyedStream(const SecretKey& key, std::string_view label);

  std::uint64_t next_u64();

  /// Uniform in [0, bound) by rejection sampling; bound must be > 0.
  std::uint64_t uniform(std::uint64_t bound);

  /// Fisher-Yates, drawing j = uniform(i + 1) for i from the back.
  template <typename T>
  void shuffle(std::vector<T>& items) {
    for (std::size_t i = items.size(); i > 1; --i) {
      const auto j = static_cast<std::size_t>(uniform(i));
      std::swap(items[i - 1], items[j]);
    }
  }

 private:
  void refill();

  Digest subkey_;
  std::uint64_t counter_ = 0;
  Digest block_{};
  std::size_t used_ = 4;
};

}  // namespace stegopivot
