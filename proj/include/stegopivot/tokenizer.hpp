#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace stegopivot {

using TokenId = std::uint32_t;
using TokenSeq = std::vector<TokenId>;

inline constexpr std::string_view kEosToken = "<eos>";
inline constexpr std::string_view kUnkToken = "<unk>";
inline constexpr std::string_view kDefaultMarker = "@@";

/// Word-final symbols carry this suffix inside merge rules (never in vocab).
inline constexpr std::string_view kEndOfWord = "</w>";

enum class Segmentation { Subword, Word };

/// What encode() does with a word it cannot represent.
enum class UnknownPolicy { MapToUnk, Strict };

struct MergeRule {
  std::string left;
  std::string right;

  bool operator==(const MergeRule&) const = default;
};

struct BpeTrainOptions {
  std::string marker{kDefaultMarker};
  Segmentation segmentation = Segmentation::Subword;
};

/// Ordered merge rules plus a dense vocabulary.
///
/// Token strings follow the "@@" convention: a subword that does not end a
/// word carries the continuation marker as a suffix, a word-final subword
/// carries nothing. Ids 0 and 1 are always <eos> and <unk>; the remaining
/// ids are ordered by descending training-corpus frequency, ties by token
/// string.
class BpeModel {
 public:
  /// Validates dense unique ids and the presence of exactly one <eos>.
  BpeModel(std::vector<MergeRule> merges, std::vector<std::string> vocab, std::string marker,
           Segmentation segmentation);

  std::size_t size() const noexcept { return vocab_.size(); }
  const std::string& token(TokenId id) const;
  std::optional<TokenId> find(std::string_view token) const;
  TokenId eos_id() const noexcept { return eos_id_; }
  std::optional<TokenId> unk_id() const noexcept { return unk_id_; }
  const std::string& marker() const noexcept { return marker_; }
  Segmentation segmentation() const noexcept { return segmentation_; }
  const std::vector<MergeRule>& merges() const noexcept { return merges_; }
  const std::vector<std::string>& vocab() const noexcept { return vocab_; }

  /// True for subword pieces that do not end a word.
  bool is_continuation(TokenId id) const;
  bool is_special(TokenId id) const noexcept;

  /// Never emits <eos>. Input whitespace is collapsed.
  TokenSeq encode(std::string_view text, UnknownPolicy policy = UnknownPolicy::MapToUnk) const;

  /// Strips <eos>; separates words with single spaces.
  std::string decode(std::span<const TokenId> tokens) const;

  void save(std::ostream& out) const;
  static BpeModel load(std::istream& in);
  void save_file(const std::string& path) const;
  static BpeModel load_file(const std::string& path);

  /// Lowercase hex SHA-256 over every token string followed by '\n', in id
  /// order. The bridge handshake reports the same digest.
  std::string vocab_hash() const;

 private:
  std::vector<std::string> segment_word(std::string_view word) const;

  std::vector<MergeRule> merges_;
  std::vector<std::string> vocab_;
  std::string marker_;
  Segmentation segmentation_;
  std::unordered_map<std::string, TokenId> ids_;
  std::unordered_map<std::string, std::size_t> merge_rank_;
  TokenId eos_id_ = 0;
  std::optional<TokenId> unk_id_;
};

/// Learns min(num_merges, available) merges by repeatedly joining the most
/// frequent adjacent symbol pair; equal counts go to the lexicographically
/// smallest (left, right) pair. In word mode merges are not learned and the
/// vocabulary is the set of corpus words.
BpeModel train_bpe(const std::vector<std::string>& corpus, std::size_t num_merges,
                   const BpeTrainOptions& options = {});

struct FrequencyTable {
  std::vector<std::uint64_t> counts;

  std::uint64_t total() const noexcept;
  void save(std::ostream& out) const;
  static FrequencyTable load(std::istream& in, std::size_t vocab_size);
};

/// Occurrences of each token in the encoded corpus (no <eos> per line).
FrequencyTable count_frequencies(const BpeModel& model, const std::vector<std::string>& corpus);

/// Single spaces between words, no leading or trailing whitespace.
std::string normalize_whitespace(std::string_view text);

/// Whitespace-separated words of `text`.
std::vector<std::string> split_words(std::string_view text);

/// Splits UTF-8 into code points; throws UnrepresentableInput on malformed input.
std::vector<std::string> utf8_code_points(std::string_view text);

std::vector<std::string> read_lines(const std::string& path);

}  // namespace stegopivot
