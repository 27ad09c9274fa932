#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "stegopivot/bins.hpp"
#include "stegopivot/keyed_random.hpp"
#include "stegopivot/lm.hpp"
#include "stegopivot/tokenizer.hpp"

namespace stegopivot {

/// Secret bits, one 0/1 value per element.
using Bits = std::vector<std::uint8_t>;

Bits bytes_to_bits(std::span<const std::uint8_t> bytes);  // MSB first
std::vector<std::uint8_t> bits_to_bytes(const Bits& bits);  // size must be a multiple of 8
Bits bits_from_string(std::string_view text);               // "0101"
std::string bits_to_string(const Bits& bits);

enum class Framing {
  Header32,  // 32-bit big-endian payload length, zero fill to a frame boundary, payload
  Raw,       // payload only; the receiver is told the length out of band
};

std::string_view framing_name(Framing framing) noexcept;
Framing parse_framing(std::string_view name);

struct StegoParams {
  /// Embed at every step-th generated token; nullopt means "never" (zero-bit).
  std::optional<unsigned> step = 3;
  unsigned bits_per_token = 1;
  Framing framing = Framing::Header32;
  std::size_t max_tokens = 256;
  /// When set, must match the fingerprint recorded in the bin assignment.
  std::optional<SecretKey> key;

  bool zero_bit() const noexcept { return !step.has_value(); }
  static StegoParams zero_bit_mode(std::size_t max_tokens);
  /// Throws ParamMismatch unless (step == inf) <=> (l == 0) and max_tokens >= 1.
  void validate() const;
};

/// Reads consecutive l-bit frames; the final frame is padded with zeros.
class BitStream {
 public:
  explicit BitStream(Bits bits) : bits_(std::move(bits)) {}

  std::size_t size() const noexcept { return bits_.size(); }
  std::size_t cursor() const noexcept { return cursor_; }
  bool exhausted() const noexcept { return cursor_ >= bits_.size(); }
  Bits peek_frame(unsigned width) const;
  Bits next_frame(unsigned width);

 private:
  Bits bits_;
  std::size_t cursor_ = 0;
};

/// Payload as it travels through the channel, before padding to a multiple of
/// l. Header32 prepends the 32-bit big-endian length, zero-filled up to a
/// whole number of `width`-bit frames so the payload starts on a frame.
Bits frame_payload(const Bits& payload, Framing framing, unsigned width = 1);

struct StegoText {
  TokenSeq tokens;  // ends with <eos>
  std::string surface;
  std::size_t embedded_bit_count = 0;
  std::vector<std::size_t> carrying_positions;  // 0-based indices into tokens
  std::size_t framed_bit_count = 0;
  bool truncated = false;  // hit max_tokens after the payload was placed
};

/// Longest run of NONE picks at consecutive carrying positions; the next
/// carrying position then takes a bin token. Keeps a model that cycles
/// through common tokens from stalling. Extraction does not depend on it.
inline constexpr std::size_t kMaxNoneRun = 3;

/// Generates a stego text carrying `payload`.
///
/// Carrying positions start at the first generated token and follow every
/// step tokens after the previous carrying position; in common-token mode a
/// NONE token chosen at a carrying position carries nothing and the next
/// position carries instead, at most kMaxNoneRun times in a row. While bits
/// remain, <eos> is never chosen.
/// Once the payload is placed the text continues greedily until <eos> or
/// max_tokens.
StegoText embed(std::string_view cover, const Bits& payload, const StegoParams& params,
                const BinAssignment& bins, DistributionProvider& provider, const BpeModel& tokenizer);

/// Recovers the payload from the text alone.
Bits extract(std::string_view stego_surface, const StegoParams& params, const BinAssignment& bins,
             const BpeModel& tokenizer, std::optional<std::size_t> declared_bit_length = std::nullopt);

/// Pure greedy generation.
StegoText generate_zero_bit(std::string_view cover, DistributionProvider& provider, const BpeModel& tokenizer,
                            std::size_t max_tokens);

}  // namespace stegopivot
