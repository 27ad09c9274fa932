#include "stegopivot/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <ostream>

#include <fmt/format.h>

#include "stegopivot/errors.hpp"

namespace stegopivot {

double bpw(std::size_t embedded_bits, std::string_view cover, const BpeModel& tokenizer) {
  const auto tokens = tokenizer.encode(cover);
  if (tokens.empty()) throw Error(ErrorCode::EmptyCover, "cover has no tokens");
  return static_cast<double>(embedded_bits) / static_cast<double>(tokens.size());
}

BleuStats bleu_stats(const std::vector<std::string>& candidate, const std::vector<std::string>& reference,
                     std::size_t max_n) {
  BleuStats stats;
  stats.candidate_length = candidate.size();
  stats.reference_length = reference.size();
  for (std::size_t n = 1; n <= max_n; ++n) {
    std::map<std::vector<std::string>, std::size_t> ref_counts;
    for (std::size_t i = 0; i + n <= reference.size(); ++i)
      ++ref_counts[std::vector<std::string>(reference.begin() + static_cast<std::ptrdiff_t>(i),
                                            reference.begin() + static_cast<std::ptrdiff_t>(i + n))];
    std::map<std::vector<std::string>, std::size_t> cand_counts;
    std::size_t total = 0;
    for (std::size_t i = 0; i + n <= candidate.size(); ++i, ++total)
      ++cand_counts[std::vector<std::string>(candidate.begin() + static_cast<std::ptrdiff_t>(i),
                                             candidate.begin() + static_cast<std::ptrdiff_t>(i + n))];
    std::size_t matched = 0;
    for (const auto& [gram, count] : cand_counts) {
      auto it = ref_counts.find(gram);
      if (it != ref_counts.end()) matched += std::min(count, it->second);
    }
    stats.matches.push_back(matched);
    stats.totals.push_back(total);
  }
  return stats;
}

double bleu_from_stats(const BleuStats& stats, bool smooth) {
  if (stats.candidate_length == 0 || stats.reference_length == 0)
    throw Error(ErrorCode::EmptyInput, "BLEU needs non-empty candidate and reference");
  double log_sum = 0.0;
  std::size_t orders = 0;
  for (std::size_t n = 0; n < stats.totals.size(); ++n) {
    if (stats.totals[n] == 0) continue;
    ++orders;
    if (stats.matches[n] == 0) {
      if (!smooth) return 0.0;
      log_sum += std::log(kBleuEpsilon);
    } else {
      log_sum += std::log(static_cast<double>(stats.matches[n]) / static_cast<double>(stats.totals[n]));
    }
  }
  const double c = static_cast<double>(stats.candidate_length);
  const double r = static_cast<double>(stats.reference_length);
  const double brevity = c < r ? std::exp(1.0 - r / c) : 1.0;
  return brevity * std::exp(log_sum / static_cast<double>(orders));
}

double bleu(std::string_view candidate, std::string_view reference, std::size_t max_n) {
  return bleu_from_stats(bleu_stats(split_words(candidate), split_words(reference), max_n));
}

double perplexity_of_tokens(std::span<const TokenId> tokens, DistributionProvider& provider,
                            std::string_view source) {
  if (tokens.empty()) throw Error(ErrorCode::EmptyInput, "no tokens to score");
  GenerationContext ctx{std::string(source), {}};
  double nll = 0.0;
  for (TokenId t : tokens) {
    const auto dist = provider.dense_distribution(ctx);
    if (t >= dist.size()) throw Error(ErrorCode::UnknownTokenId, std::to_string(t));
    const double p = dist.probs[t];
    if (!(p > 0.0)) throw Error(ErrorCode::ZeroProbabilityToken, "token " + std::to_string(t));
    nll -= std::log(p);
    ctx.prefix.push_back(t);
  }
  return std::exp(nll / static_cast<double>(tokens.size()));
}

double perplexity(std::string_view text, DistributionProvider& provider, const BpeModel& tokenizer,
                  std::string_view source) {
  auto tokens = tokenizer.encode(text);
  tokens.push_back(tokenizer.eos_id());
  return perplexity_of_tokens(tokens, provider, source);
}

EvalRow evaluate_pair(std::string_view cover, std::string_view stego, std::size_t embedded_bits,
                      DistributionProvider& provider, const BpeModel& tokenizer) {
  EvalRow row;
  row.cover_tokens = tokenizer.encode(cover).size();
  row.stego_tokens = tokenizer.encode(stego).size();
  row.embedded_bits = embedded_bits;
  row.bpw = bpw(embedded_bits, cover, tokenizer);
  row.bleu = bleu(stego, cover);
  row.ppl = perplexity(stego, provider, tokenizer, cover);
  return row;
}

void write_eval_report(std::ostream& out, const std::vector<EvalRow>& rows) {
  out << kEvalHeader << '\n';
  EvalRow sum;
  double cover = 0, stego = 0, bits = 0;
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const auto& r = rows[i];
    out << fmt::format("{}\t{}\t{}\t{}\t{:.6f}\t{:.6f}\t{:.6f}\n", i, r.cover_tokens, r.stego_tokens,
                       r.embedded_bits, r.bpw, r.bleu, r.ppl);
    cover += static_cast<double>(r.cover_tokens);
    stego += static_cast<double>(r.stego_tokens);
    bits += static_cast<double>(r.embedded_bits);
    sum.bpw += r.bpw;
    sum.bleu += r.bleu;
    sum.ppl += r.ppl;
  }
  const double n = rows.empty() ? 1.0 : static_cast<double>(rows.size());
  out << fmt::format("mean\t{:.6f}\t{:.6f}\t{:.6f}\t{:.6f}\t{:.6f}\t{:.6f}\n", cover / n, stego / n, bits / n,
                     sum.bpw / n, sum.bleu / n, sum.ppl / n);
}

}  // namespace stegopivot
