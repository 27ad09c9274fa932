#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "stegopivot/keyed_random.hpp"
#include "stegopivot/synonyms.hpp"
#include "stegopivot/tokenizer.hpp"

namespace stegopivot {

enum class BinScheme { SaBins, Bins, BinsCommon };

std::string_view scheme_name(BinScheme scheme) noexcept;
BinScheme parse_scheme(std::string_view name);

/// Per-token labels. Non-negative values are bin indices.
namespace bin_label {
inline constexpr std::int32_t kEos = -1;
/// Carries no bits but may be emitted at a carrying position (common tokens).
inline constexpr std::int32_t kNone = -2;
/// Carries no bits and is never a candidate (<unk>).
inline constexpr std::int32_t kExcluded = -3;
}  // namespace bin_label

/// The token -> bit-string mapping shared by hider and receiver.
///
/// Tokens in bin i (0 <= i < 2^l) map to the l-bit big-endian rendering of
/// i; <eos> sits alone in the extra bin and maps to the empty string, as do
/// NONE tokens. Construction validates the partition.
class BinAssignment {
 public:
  BinAssignment(BinScheme scheme, unsigned bits_per_token, std::vector<std::string> tokens,
                std::vector<std::int32_t> labels, std::string key_fingerprint);

  BinScheme scheme() const noexcept { return scheme_; }
  unsigned bits_per_token() const noexcept { return bits_; }
  std::uint32_t bin_count() const noexcept { return std::uint32_t{1} << bits_; }
  std::size_t size() const noexcept { return labels_.size(); }
  const std::string& key_fingerprint() const noexcept { return fingerprint_; }
  const std::vector<std::string>& tokens() const noexcept { return tokens_; }
  std::span<const std::int32_t> labels() const noexcept { return labels_; }
  std::int32_t label(TokenId token) const;

  /// Common-token mode: NONE tokens are extra candidates at carrying positions.
  bool selectable_none() const noexcept { return scheme_ == BinScheme::BinsCommon; }

  std::optional<std::uint32_t> bin_of(TokenId token) const;
  std::string bits_of(TokenId token) const;
  std::vector<TokenId> members(std::uint32_t bin) const;

  void save(std::ostream& out) const;
  static BinAssignment load(std::istream& in);
  void save_file(const std::string& path) const;
  static BinAssignment load_file(const std::string& path);

  bool operator==(const BinAssignment&) const = default;

 private:
  BinScheme scheme_;
  unsigned bits_;
  std::vector<std::string> tokens_;
  std::vector<std::int32_t> labels_;
  std::string fingerprint_;
};

/// l-bit big-endian rendering of `index`.
std::string index_bits(std::uint32_t index, unsigned bits);
/// Inverse of index_bits; throws ParamMismatch on non-binary input.
std::uint32_t bits_index(std::string_view bits);

/// Construction log for SaBins: tokens in processing order and every chunk
/// with the bins its tokens were placed in.
struct SabinsTrace {
  struct Chunk {
    TokenId anchor;
    std::vector<TokenId> tokens;
    std::vector<std::uint32_t> bins;
  };
  std::vector<TokenId> order;
  std::vector<Chunk> chunks;
};

BinAssignment build_sabins(const BpeModel& vocab, const FrequencyTable& freqs, const SynonymDB& synonyms,
                           unsigned bits_per_token, const SecretKey& key, SabinsTrace* trace = nullptr);

BinAssignment build_bins_random(const BpeModel& vocab, unsigned bits_per_token, const SecretKey& key);

BinAssignment build_bins_common(const BpeModel& vocab, const FrequencyTable& freqs, unsigned bits_per_token,
                                const SecretKey& key, std::size_t common_count);

}  // namespace stegopivot
