#include "stegopivot/lm.hpp"

#include <algorithm>
#include <cmath>

#include "stegopivot/errors.hpp"
#include "stegopivot/kernels.hpp"

namespace stegopivot {

void Distribution::validate(double tolerance) const {
  if (probs.empty()) throw Error(ErrorCode::InvariantViolation, "empty distribution");
  for (double p : probs) {
    if (std::isnan(p) || p < 0.0 || p > 1.0) throw Error(ErrorCode::InvariantViolation, "probability out of [0,1]");
  }
  const double total = kernels::sum(probs);
  if (std::fabs(total - 1.0) > tolerance)
    throw Error(ErrorCode::InvariantViolation, "probabilities sum to " + std::to_string(total));
}

// --- n-gram ----------------------------------------------------------------------

std::size_t NgramProvider::KeyHash::operator()(const std::vector<TokenId>& key) const noexcept {
  std::uint64_t h = 1469598103934665603ULL;
  for (TokenId t : key) {
    h ^= t;
    h *= 1099511628211ULL;
  }
  return static_cast<std::size_t>(h);
}

NgramProvider::NgramProvider(std::size_t vocab_size, NgramOptions options)
    : vocab_size_(vocab_size), options_(options) {
  if (vocab_size_ == 0) throw Error(ErrorCode::ParamMismatch, "empty vocabulary");
  if (options_.order < 1 || options_.order > 5) throw Error(ErrorCode::ParamMismatch, "n-gram order must be 1..5");
  if (!(options_.add_k > 0.0)) throw Error(ErrorCode::ParamMismatch, "add-k must be positive");
  tables_.resize(options_.order);
}

void NgramProvider::add_sentence(std::span<const TokenId> tokens, TokenId eos) {
  const std::size_t pad = options_.order - 1;
  std::vector<TokenId> padded(pad, start_symbol());
  padded.insert(padded.end(), tokens.begin(), tokens.end());
  padded.push_back(eos);
  for (std::size_t i = pad; i < padded.size(); ++i) {
    for (std::size_t o = 0; o < options_.order; ++o) {
      std::vector<TokenId> history(padded.begin() + static_cast<std::ptrdiff_t>(i - o),
                                   padded.begin() + static_cast<std::ptrdiff_t>(i));
      auto& stats = tables_[o][history];
      ++stats.total;
      ++stats.next[padded[i]];
    }
  }
}

std::uint64_t NgramProvider::count(std::span<const TokenId> history, TokenId next) const {
  if (history.size() >= tables_.size()) return 0;
  auto it = tables_[history.size()].find(std::vector<TokenId>(history.begin(), history.end()));
  if (it == tables_[history.size()].end()) return 0;
  auto jt = it->second.next.find(next);
  return jt == it->second.next.end() ? 0 : jt->second;
}

Distribution NgramProvider::distribution_for(std::span<const TokenId> prefix) const {
  if (prefix.size() > options_.max_prefix)
    throw Error(ErrorCode::ContextTooLong, std::to_string(prefix.size()) + " tokens");
  for (TokenId t : prefix) {
    if (t >= vocab_size_) throw Error(ErrorCode::UnknownTokenId, std::to_string(t));
  }
  const std::size_t pad = options_.order - 1;
  std::vector<TokenId> window(pad, start_symbol());
  window.insert(window.end(), prefix.begin(), prefix.end());

  const double k = options_.add_k;
  const double m = static_cast<double>(vocab_size_);
  for (std::size_t o = pad + 1; o-- > 0;) {
    std::vector<TokenId> history(window.end() - static_cast<std::ptrdiff_t>(o), window.end());
    auto it = tables_[o].find(history);
    if (o > 0 && it == tables_[o].end()) continue;
    const double total = it == tables_[o].end() ? 0.0 : static_cast<double>(it->second.total);
    const double denom = total + k * m;
    Distribution dist{std::vector<double>(vocab_size_, k / denom), {}};
    if (it != tables_[o].end()) {
      for (const auto& [next, c] : it->second.next) dist.probs[next] = (static_cast<double>(c) + k) / denom;
    }
    return dist;
  }
  return {std::vector<double>(vocab_size_, 1.0 / m), {}};
}

Distribution NgramProvider::next_distribution(const GenerationContext& ctx) {
  return distribution_for(ctx.prefix);
}

bool NgramProvider::operator==(const NgramProvider& other) const {
  return vocab_size_ == other.vocab_size_ && options_.order == other.options_.order &&
         options_.add_k == other.options_.add_k && tables_ == other.tables_;
}

NgramProvider train_ngram(const BpeModel& tokenizer, const std::vector<std::string>& corpus,
                          NgramOptions options) {
  NgramProvider model(tokenizer.size(), options);
  std::size_t sentences = 0;
  for (const auto& line : corpus) {
    auto tokens = tokenizer.encode(line);
    if (tokens.empty()) continue;
    model.add_sentence(tokens, tokenizer.eos_id());
    ++sentences;
  }
  if (sentences == 0) throw Error(ErrorCode::EmptyCorpus, "no trainable sentence");
  return model;
}

// --- token selection -------------------------------------------------------------

TokenId greedy_token(const Distribution& dist) {
  const auto best = kernels::argmax(dist.probs);
  if (best == kernels::npos) throw Error(ErrorCode::InvariantViolation, "empty distribution");
  return static_cast<TokenId>(best);
}

TokenId greedy_token_excluding(const Distribution& dist, std::span<const TokenId> excluded) {
  std::span<const double> all(dist.probs);
  std::size_t best = kernels::npos;
  std::size_t begin = 0;
  auto scan = [&](std::size_t end) {
    if (end <= begin) return;
    auto j = kernels::argmax(all.subspan(begin, end - begin));
    if (j == kernels::npos) return;
    j += begin;
    // Segments arrive in id order, so strict > keeps the lowest-id tie.
    if (best == kernels::npos || all[j] > all[best]) best = j;
  };
  for (TokenId x : excluded) {
    if (x >= all.size()) break;
    if (x + 1 == begin) continue;
    if (x < begin) throw Error(ErrorCode::InvariantViolation, "excluded ids must be ascending");
    scan(x);
    begin = x + 1;
  }
  scan(all.size());
  if (best == kernels::npos) throw Error(ErrorCode::EmptyBin, "every token is excluded");
  return static_cast<TokenId>(best);
}

TokenId greedy_token_excluding(const Distribution& dist, TokenId excluded) {
  const TokenId one[] = {excluded};
  return greedy_token_excluding(dist, one);
}

TokenId constrained_token(const Distribution& dist, const BinAssignment& bins, std::uint32_t bin, bool allow_none) {
  if (dist.size() != bins.size()) throw Error(ErrorCode::ParamMismatch, "distribution/bins size mismatch");
  if (bin >= bins.bin_count()) throw Error(ErrorCode::ParamMismatch, "bin index out of range");
  const std::int32_t alt = allow_none && bins.selectable_none() ? bin_label::kNone : kernels::kNoLabel;
  const auto best = kernels::masked_argmax(dist.probs, bins.labels(), static_cast<std::int32_t>(bin), alt);
  if (best == kernels::npos) throw Error(ErrorCode::EmptyBin, "bin " + std::to_string(bin));
  return static_cast<TokenId>(best);
}

TokenId constrained_token(const Distribution& dist, const BinAssignment& bins, std::string_view bits) {
  if (bits.size() != bins.bits_per_token())
    throw Error(ErrorCode::ParamMismatch, "expected " + std::to_string(bins.bits_per_token()) + " bits");
  return constrained_token(dist, bins, bits_index(bits));
}

}  // namespace stegopivot
