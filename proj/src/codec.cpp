#include "stegopivot/codec.hpp"

#include <algorithm>

#include "stegopivot/errors.hpp"

namespace stegopivot {
namespace {

constexpr std::size_t kHeaderBits = 32;
constexpr std::uint64_t kMaxHeaderLength = std::uint64_t{1} << 24;

void check_compatible(const StegoParams& params, const BinAssignment* bins, const BpeModel& tokenizer) {
  params.validate();
  if (params.zero_bit() || bins == nullptr) return;
  if (bins->bits_per_token() != params.bits_per_token)
    throw Error(ErrorCode::ParamMismatch, "bins use l=" + std::to_string(bins->bits_per_token()) +
                                              ", params use l=" + std::to_string(params.bits_per_token));
  if (bins->tokens() != tokenizer.vocab())
    throw Error(ErrorCode::ParamMismatch, "bins were built for a different vocabulary");
  if (params.key && params.key->fingerprint() != bins->key_fingerprint())
    throw Error(ErrorCode::ParamMismatch, "key does not match the bins fingerprint");
}

// True when a sparse response lists at least one candidate for `bin`.
bool sparse_covers(const Distribution& dist, const BinAssignment& bins, std::uint32_t bin, bool allow_none) {
  for (TokenId id : dist.listed) {
    const auto lab = bins.labels()[id];
    if (lab == static_cast<std::int32_t>(bin) || (allow_none && bins.selectable_none() && lab == bin_label::kNone))
      return true;
  }
  return false;
}

void check_round_trip(const StegoText& text, const BpeModel& tokenizer) {
  TokenSeq body(text.tokens.begin(), text.tokens.end());
  if (!body.empty() && body.back() == tokenizer.eos_id()) body.pop_back();
  const auto again = tokenizer.encode(text.surface);
  if (again != body) {
    throw Error(ErrorCode::RoundTripUnsafe,
                "surface re-encodes to " + std::to_string(again.size()) + " tokens instead of " +
                    std::to_string(body.size()));
  }
}

std::uint32_t frame_value(const Bits& frame) {
  std::uint32_t v = 0;
  for (auto b : frame) v = (v << 1) | b;
  return v;
}

}  // namespace

Bits bytes_to_bits(std::span<const std::uint8_t> bytes) {
  Bits out;
  out.reserve(bytes.size() * 8);
  for (auto byte : bytes) {
    for (int b = 7; b >= 0; --b) out.push_back(static_cast<std::uint8_t>((byte >> b) & 1U));
  }
  return out;
}

std::vector<std::uint8_t> bits_to_bytes(const Bits& bits) {
  if (bits.size() % 8 != 0) throw Error(ErrorCode::ParamMismatch, "bit count is not a multiple of 8");
  std::vector<std::uint8_t> out(bits.size() / 8, 0);
  for (std::size_t i = 0; i < bits.size(); ++i) {
    if (bits[i]) out[i / 8] |= static_cast<std::uint8_t>(0x80U >> (i % 8));
  }
  return out;
}

Bits bits_from_string(std::string_view text) {
  Bits out;
  for (char c : text) {
    if (c != '0' && c != '1') throw Error(ErrorCode::ParseError, "bit string must be 0/1");
    out.push_back(static_cast<std::uint8_t>(c == '1'));
  }
  return out;
}

std::string bits_to_string(const Bits& bits) {
  std::string out;
  for (auto b : bits) out.push_back(b ? '1' : '0');
  return out;
}

std::string_view framing_name(Framing framing) noexcept {
  return framing == Framing::Header32 ? "header32" : "raw";
}

Framing parse_framing(std::string_view name) {
  if (name == "header32") return Framing::Header32;
  if (name == "raw") return Framing::Raw;
  throw Error(ErrorCode::ParseError, "unknown framing '" + std::string(name) + "'");
}

StegoParams StegoParams::zero_bit_mode(std::size_t max_tokens) {
  StegoParams p;
  p.step.reset();
  p.bits_per_token = 0;
  p.framing = Framing::Raw;
  p.max_tokens = max_tokens;
  return p;
}

void StegoParams::validate() const {
  if (step && *step < 1) throw Error(ErrorCode::ParamMismatch, "step must be >= 1");
  if (zero_bit() != (bits_per_token == 0))
    throw Error(ErrorCode::ParamMismatch, "step = inf exactly when l = 0");
  if (max_tokens < 1) throw Error(ErrorCode::ParamMismatch, "max_tokens must be >= 1");
}

Bits BitStream::peek_frame(unsigned width) const {
  Bits frame(width, 0);
  for (unsigned b = 0; b < width && cursor_ + b < bits_.size(); ++b) frame[b] = bits_[cursor_ + b];
  return frame;
}

Bits BitStream::next_frame(unsigned width) {
  Bits frame(width, 0);
  for (unsigned b = 0; b < width && cursor_ < bits_.size(); ++b) frame[b] = bits_[cursor_++];
  return frame;
}

std::size_t header_span(unsigned width) {
  if (width == 0) return kHeaderBits;
  return (kHeaderBits + width - 1) / width * width;
}

Bits frame_payload(const Bits& payload, Framing framing, unsigned width) {
  if (framing == Framing::Raw) return payload;
  if (payload.size() > kMaxHeaderLength) throw Error(ErrorCode::PayloadTooLarge, "payload exceeds 2^24 bits");
  Bits out;
  out.reserve(header_span(width) + payload.size());
  const auto length = static_cast<std::uint32_t>(payload.size());
  for (int b = 31; b >= 0; --b) out.push_back(static_cast<std::uint8_t>((length >> b) & 1U));
  out.resize(header_span(width), 0);
  out.insert(out.end(), payload.begin(), payload.end());
  return out;
}

StegoText embed(std::string_view cover, const Bits& payload, const StegoParams& params,
                const BinAssignment& bins, DistributionProvider& provider, const BpeModel& tokenizer) {
  check_compatible(params, &bins, tokenizer);
  if (params.zero_bit()) {
    if (!payload.empty()) throw Error(ErrorCode::ParamMismatch, "zero-bit mode cannot carry a payload");
    return generate_zero_bit(cover, provider, tokenizer, params.max_tokens);
  }
  if (provider.vocab_size() != tokenizer.size())
    throw Error(ErrorCode::ParamMismatch, "provider vocabulary size differs from tokenizer");

  const unsigned width = params.bits_per_token;
  const std::size_t step = *params.step;
  Bits framed = frame_payload(payload, params.framing, width);
  StegoText out;
  out.framed_bit_count = framed.size();
  BitStream stream(std::move(framed));

  const TokenId eos = tokenizer.eos_id();
  // <unk> never appears in generated text; <eos> is held back while bits remain.
  std::vector<TokenId> unk_only;
  if (tokenizer.unk_id()) unk_only.push_back(*tokenizer.unk_id());
  std::vector<TokenId> held = unk_only;
  held.push_back(eos);
  std::sort(held.begin(), held.end());
  GenerationContext ctx{std::string(cover), {}};
  std::size_t next_carry = 0;
  std::size_t none_run = 0;
  bool finished = false;
  while (ctx.prefix.size() < params.max_tokens) {
    const std::size_t i = ctx.prefix.size();
    Distribution dist = provider.next_distribution(ctx);
    if (dist.size() != tokenizer.size()) throw Error(ErrorCode::ParamMismatch, "distribution has wrong length");
    TokenId token = 0;
    if (!stream.exhausted() && i == next_carry) {
      const auto bin = frame_value(stream.peek_frame(width));
      const bool allow_none = none_run < kMaxNoneRun;
      if (dist.is_sparse() && !sparse_covers(dist, bins, bin, allow_none)) dist = provider.dense_distribution(ctx);
      token = constrained_token(dist, bins, bin, allow_none);
      if (bins.label(token) == bin_label::kNone) {
        ++none_run;
        next_carry = i + 1;
      } else {
        none_run = 0;
        stream.next_frame(width);
        out.embedded_bit_count += width;
        out.carrying_positions.push_back(i);
        next_carry = i + step;
      }
    } else if (!stream.exhausted()) {
      token = greedy_token_excluding(dist, held);
    } else {
      token = greedy_token_excluding(dist, unk_only);
    }
    ctx.prefix.push_back(token);
    if (token == eos) {
      finished = true;
      break;
    }
  }
  if (!finished) {
    if (!stream.exhausted())
      throw Error(ErrorCode::PayloadTooLarge, std::to_string(stream.size() - stream.cursor()) +
                                                   " bits left after " + std::to_string(params.max_tokens) +
                                                   " tokens");
    ctx.prefix.push_back(eos);
    out.truncated = true;
  }
  out.tokens = std::move(ctx.prefix);
  out.surface = tokenizer.decode(out.tokens);
  check_round_trip(out, tokenizer);
  return out;
}

Bits extract(std::string_view stego_surface, const StegoParams& params, const BinAssignment& bins,
             const BpeModel& tokenizer, std::optional<std::size_t> declared_bit_length) {
  check_compatible(params, &bins, tokenizer);
  if (params.framing == Framing::Raw && !declared_bit_length)
    throw Error(ErrorCode::MissingLength, "raw framing needs the declared bit length");
  if (params.zero_bit()) {
    if (params.framing == Framing::Raw && *declared_bit_length != 0)
      throw Error(ErrorCode::TruncatedPayload, "zero-bit text carries no bits");
    return {};
  }

  const auto tokens = tokenizer.encode(stego_surface);
  const unsigned width = params.bits_per_token;
  const std::size_t step = *params.step;
  std::optional<std::size_t> needed;
  if (params.framing == Framing::Raw) needed = *declared_bit_length;

  Bits got;
  std::size_t next_carry = 0;
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    if (needed && got.size() >= *needed) break;
    if (i != next_carry) continue;
    const auto lab = bins.label(tokens[i]);
    if (lab >= 0) {
      const auto frame = index_bits(static_cast<std::uint32_t>(lab), width);
      for (char c : frame) got.push_back(static_cast<std::uint8_t>(c == '1'));
      next_carry = i + step;
    } else if (lab == bin_label::kNone && bins.selectable_none()) {
      next_carry = i + 1;
    } else {
      throw Error(ErrorCode::InvalidStegoToken,
                  "token '" + tokenizer.token(tokens[i]) + "' at carrying position " + std::to_string(i));
    }
    if (!needed && got.size() >= header_span(width)) {
      std::uint64_t length = 0;
      for (std::size_t b = 0; b < kHeaderBits; ++b) length = (length << 1) | got[b];
      if (length > kMaxHeaderLength) throw Error(ErrorCode::BadHeader, "declared length " + std::to_string(length));
      for (std::size_t b = kHeaderBits; b < header_span(width); ++b)
        if (got[b]) throw Error(ErrorCode::BadHeader, "non-zero header padding");
      needed = header_span(width) + length;
    }
  }
  if (!needed) throw Error(ErrorCode::BadHeader, "text ends inside the length header");
  if (got.size() < *needed)
    throw Error(ErrorCode::TruncatedPayload,
                "recovered " + std::to_string(got.size()) + " of " + std::to_string(*needed) + " bits");
  const std::size_t offset = params.framing == Framing::Header32 ? header_span(width) : 0;
  return Bits(got.begin() + static_cast<std::ptrdiff_t>(offset),
              got.begin() + static_cast<std::ptrdiff_t>(*needed));
}

StegoText generate_zero_bit(std::string_view cover, DistributionProvider& provider, const BpeModel& tokenizer,
                            std::size_t max_tokens) {
  if (max_tokens < 1) throw Error(ErrorCode::ParamMismatch, "max_tokens must be >= 1");
  GenerationContext ctx{std::string(cover), {}};
  StegoText out;
  bool finished = false;
  while (ctx.prefix.size() < max_tokens) {
    const TokenId token = greedy_token(provider.next_distribution(ctx));
    ctx.prefix.push_back(token);
    if (token == tokenizer.eos_id()) {
      finished = true;
      break;
    }
  }
  if (!finished) {
    ctx.prefix.push_back(tokenizer.eos_id());
    out.truncated = true;
  }
  out.tokens = std::move(ctx.prefix);
  out.surface = tokenizer.decode(out.tokens);
  check_round_trip(out, tokenizer);
  return out;
}

}  // namespace stegopivot
