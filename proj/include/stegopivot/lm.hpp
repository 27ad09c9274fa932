#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "stegopivot/bins.hpp"
#include "stegopivot/tokenizer.hpp"

namespace stegopivot {

/// One generation step's probability vector over the vocabulary.
///
/// A distribution built from a sparse (top-k) response records which ids
/// were listed explicitly; the remaining mass is spread evenly over the
/// rest, so argmax among unlisted ids is not meaningful.
struct Distribution {
  std::vector<double> probs;
  std::vector<TokenId> listed;  // empty for dense responses

  bool is_sparse() const noexcept { return !listed.empty(); }
  std::size_t size() const noexcept { return probs.size(); }

  /// Throws InvariantViolation on NaN, negative entries, or |sum - 1| > tol.
  void validate(double tolerance = 1e-9) const;
};

struct GenerationContext {
  std::string source;  // pivot/cover text for conditional providers
  TokenSeq prefix;     // tokens generated so far
};

class DistributionProvider {
 public:
  virtual ~DistributionProvider() = default;

  virtual std::size_t vocab_size() const = 0;
  virtual Distribution next_distribution(const GenerationContext& ctx) = 0;

  /// Full dense vector for the same step. Providers that only ever answer
  /// densely need not override.
  virtual Distribution dense_distribution(const GenerationContext& ctx) { return next_distribution(ctx); }
};

struct NgramOptions {
  unsigned order = 3;
  double add_k = 0.1;
  std::size_t max_prefix = 1U << 16;
};

/// Add-k smoothed n-gram model. The highest order whose context has been
/// seen is used: P(w | h) = (c(h, w) + k) / (c(h) + k m). Unseen contexts
/// back off to shorter histories, ending at the smoothed unigram.
/// Sentences are padded on the left with a virtual start symbol and end
/// with <eos>. The generation source text is ignored.
class NgramProvider final : public DistributionProvider {
 public:
  /// Untrained model: every distribution is uniform.
  NgramProvider(std::size_t vocab_size, NgramOptions options = {});

  std::size_t vocab_size() const override { return vocab_size_; }
  Distribution next_distribution(const GenerationContext& ctx) override;
  Distribution distribution_for(std::span<const TokenId> prefix) const;

  const NgramOptions& options() const noexcept { return options_; }

  /// Adds one encoded sentence (no <eos>; it is appended here).
  void add_sentence(std::span<const TokenId> tokens, TokenId eos);

  /// Raw count of `next` after `history` (history length < order).
  std::uint64_t count(std::span<const TokenId> history, TokenId next) const;

  bool operator==(const NgramProvider& other) const;

 private:
  struct ContextStats {
    std::uint64_t total = 0;
    std::unordered_map<TokenId, std::uint64_t> next;
    bool operator==(const ContextStats&) const = default;
  };
  struct KeyHash {
    std::size_t operator()(const std::vector<TokenId>& key) const noexcept;
  };
  using Table = std::unordered_map<std::vector<TokenId>, ContextStats, KeyHash>;

  TokenId start_symbol() const noexcept { return static_cast<TokenId>(vocab_size_); }

  std::size_t vocab_size_;
  NgramOptions options_;
  std::vector<Table> tables_;  // tables_[o] keyed by histories of length o
};

/// Trains on every corpus line. Throws EmptyCorpus when no line encodes to
/// at least one token.
NgramProvider train_ngram(const BpeModel& tokenizer, const std::vector<std::string>& corpus,
                          NgramOptions options = {});

/// Highest-probability token, lowest id on ties.
TokenId greedy_token(const Distribution& dist);

/// Greedy choice that never returns `excluded` (used to keep <eos> out while
/// bits remain). Requires at least two entries.
TokenId greedy_token_excluding(const Distribution& dist, TokenId excluded);
/// Same, skipping every id in `excluded` (ascending, duplicates allowed).
TokenId greedy_token_excluding(const Distribution& dist, std::span<const TokenId> excluded);

/// Highest-probability token whose bit-string equals `bits`, lowest id on
/// ties. In common-token mode, NONE tokens are candidates too unless
/// `allow_none` is false.
TokenId constrained_token(const Distribution& dist, const BinAssignment& bins, std::string_view bits);
TokenId constrained_token(const Distribution& dist, const BinAssignment& bins, std::uint32_t bin,
                          bool allow_none = true);

}  // namespace stegopivot
