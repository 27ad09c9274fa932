#include "stegopivot/keyed_random.hpp"

#include <limits>
#include <stdexcept>

namespace stegopivot {

SecretKey SecretKey::from_passphrase(std::string_view passphrase) {
  return SecretKey(std::vector<std::uint8_t>(passphrase.begin(), passphrase.end()));
}

Digest SecretKey::derive(std::string_view label) const {
  std::vector<std::uint8_t> material;
  constexpr std::string_view kPrefix = "stegopivot/v1/";
  material.insert(material.end(), kPrefix.begin(), kPrefix.end());
  material.insert(material.end(), label.begin(), label.end());
  material.push_back(0);
  material.insert(material.end(), bytes_.begin(), bytes_.end());
  return sha256(material);
}

std::string SecretKey::fingerprint() const {
  const auto digest = derive("fingerprint");
  return to_hex(std::span(digest.data(), 8));
}

KeyedStream::KeyedStream(const SecretKey& key, std::string_view label) : subkey_(key.derive(label)) {}

void KeyedStream::refill() {
  std::uint8_t input[40];
  std::copy(subkey_.begin(), subkey_.end(), input);
  for (int b = 0; b < 8; ++b) input[32 + b] = static_cast<std::uint8_t>(counter_ >> (56 - 8 * b));
  ++counter_;
  block_ = sha256(std::span<const std::uint8_t>(input, sizeof input));
  used_ = 0;
}

std::uint64_t KeyedStream::next_u64() {
  if (used_ == 4) refill();
  std::uint64_t v = 0;
  for (int b = 0; b < 8; ++b) v = (v << 8) | block_[used_ * 8 + b];
  ++used_;
  return v;
}

std::uint64_t KeyedStream::uniform(std::uint64_t bound) {
  if (bound == 0) throw std::invalid_argument("uniform bound must be positive");
  if (bound == 1) return 0;
  // 2^64 mod bound; the top `excess` values would bias the modulo.
  constexpr std::uint64_t kMax = std::numeric_limits<std::uint64_t>::max();
  const std::uint64_t excess = (kMax % bound + 1) % bound;
  for (;;) {
    const std::uint64_t x = next_u64();
    if (excess == 0 || x <= kMax - excess) return x % bound;
  }
}

}  // namespace stegopivot
