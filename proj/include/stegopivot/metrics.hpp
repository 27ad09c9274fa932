#pragma once

#include <cstddef>
#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

#include "stegopivot/lm.hpp"
#include "stegopivot/tokenizer.hpp"

namespace stegopivot {

/// Embedded bits per cover token (cover tokens exclude <eos>).
double bpw(std::size_t embedded_bits, std::string_view cover, const BpeModel& tokenizer);

struct BleuStats {
  std::vector<std::size_t> matches;  // clipped n-gram matches, n = 1..max_n
  std::vector<std::size_t> totals;   // candidate n-grams
  std::size_t candidate_length = 0;
  std::size_t reference_length = 0;
};

inline constexpr double kBleuEpsilon = 1e-9;

/// Clipped n-gram counts over whitespace-separated words.
BleuStats bleu_stats(const std::vector<std::string>& candidate, const std::vector<std::string>& reference,
                     std::size_t max_n = 4);

/// Geometric mean of clipped precisions times the brevity penalty. Orders
/// the candidate is too short to contain are left out of the mean; a zero
/// precision is replaced by kBleuEpsilon when `smooth` is set.
double bleu_from_stats(const BleuStats& stats, bool smooth = true);

/// Sentence BLEU of candidate against reference, in [0, 1].
double bleu(std::string_view candidate, std::string_view reference, std::size_t max_n = 4);

/// exp of the mean negative log-probability of encode(text) followed by <eos>.
double perplexity(std::string_view text, DistributionProvider& provider, const BpeModel& tokenizer,
                  std::string_view source = {});

/// PPL of an explicit token sequence (the last event should be <eos>).
double perplexity_of_tokens(std::span<const TokenId> tokens, DistributionProvider& provider,
                            std::string_view source = {});

struct EvalRow {
  std::size_t cover_tokens = 0;
  std::size_t stego_tokens = 0;  // excluding <eos>
  std::size_t embedded_bits = 0;
  double bpw = 0.0;
  double bleu = 0.0;
  double ppl = 0.0;
};

EvalRow evaluate_pair(std::string_view cover, std::string_view stego, std::size_t embedded_bits,
                      DistributionProvider& provider, const BpeModel& tokenizer);

/// Header row, one row per text, then a "mean" row averaging every column.
void write_eval_report(std::ostream& out, const std::vector<EvalRow>& rows);

inline constexpr std::string_view kEvalHeader = "index\tcover_tokens\tstego_tokens\tembedded_bits\tbpw\tbleu\tppl";

}  // namespace stegopivot
