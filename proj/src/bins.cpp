#include "stegopivot/bins.hpp"

#include <algorithm>
#include <fstream>
#include <istream>
#include <numeric>
#include <ostream>
#include <set>

#include "stegopivot/errors.hpp"

namespace stegopivot {
namespace {

constexpr unsigned kMaxBits = 30;

void check_bits(unsigned bits) {
  if (bits < 1 || bits > kMaxBits)
    throw Error(ErrorCode::ParamMismatch, "bits per token must be in [1, 30], got " + std::to_string(bits));
}

// Tokens that can carry bits: everything except <eos> and <unk>.
std::vector<TokenId> eligible_tokens(const BpeModel& vocab) {
  std::vector<TokenId> out;
  for (TokenId id = 0; id < vocab.size(); ++id) {
    if (!vocab.is_special(id)) out.push_back(id);
  }
  return out;
}

std::vector<std::int32_t> initial_labels(const BpeModel& vocab, std::int32_t fill) {
  std::vector<std::int32_t> labels(vocab.size(), fill);
  labels[vocab.eos_id()] = bin_label::kEos;
  if (vocab.unk_id()) labels[*vocab.unk_id()] = bin_label::kExcluded;
  return labels;
}

void require_capacity(std::size_t available, unsigned bits) {
  const std::uint64_t bins = std::uint64_t{1} << bits;
  if (available < bins)
    throw Error(ErrorCode::BinUnderfilled, std::to_string(bins) + " bins but only " +
                                               std::to_string(available) + " carrying tokens");
}

// Descending frequency, ascending id on ties.
std::vector<TokenId> by_frequency(const BpeModel& vocab, const FrequencyTable& freqs) {
  if (freqs.counts.size() != vocab.size())
    throw Error(ErrorCode::ParamMismatch, "frequency table does not match vocabulary size");
  std::vector<TokenId> order(vocab.size());
  std::iota(order.begin(), order.end(), TokenId{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](TokenId a, TokenId b) { return freqs.counts[a] > freqs.counts[b]; });
  return order;
}

// Even keyed partition of `tokens` (ascending ids) into 2^bits bins.
void partition_evenly(std::vector<TokenId> tokens, unsigned bits, const SecretKey& key,
                      std::vector<std::int32_t>& labels) {
  KeyedStream stream(key, "bins");
  stream.shuffle(tokens);
  const std::uint32_t bins = std::uint32_t{1} << bits;
  for (std::size_t i = 0; i < tokens.size(); ++i) labels[tokens[i]] = static_cast<std::int32_t>(i % bins);
}

}  // namespace

std::string_view scheme_name(BinScheme scheme) noexcept {
  switch (scheme) {
    case BinScheme::SaBins: return "sabins";
    case BinScheme::Bins: return "bins";
    case BinScheme::BinsCommon: return "bins-common";
  }
  return "?";
}

BinScheme parse_scheme(std::string_view name) {
  if (name == "sabins") return BinScheme::SaBins;
  if (name == "bins") return BinScheme::Bins;
  if (name == "bins-common") return BinScheme::BinsCommon;
  throw Error(ErrorCode::ParseError, "unknown scheme '" + std::string(name) + "'");
}

std::string index_bits(std::uint32_t index, unsigned bits) {
  std::string out(bits, '0');
  for (unsigned b = 0; b < bits; ++b) {
    if ((index >> (bits - 1 - b)) & 1U) out[b] = '1';
  }
  return out;
}

std::uint32_t bits_index(std::string_view bits) {
  if (bits.empty() || bits.size() > kMaxBits) throw Error(ErrorCode::ParamMismatch, "bad bit-string length");
  std::uint32_t v = 0;
  for (char c : bits) {
    if (c != '0' && c != '1') throw Error(ErrorCode::ParamMismatch, "bit-string must be 0/1");
    v = (v << 1) | static_cast<std::uint32_t>(c == '1');
  }
  return v;
}

// --- BinAssignment -------------------------------------------------------------

BinAssignment::BinAssignment(BinScheme scheme, unsigned bits_per_token, std::vector<std::string> tokens,
                             std::vector<std::int32_t> labels, std::string key_fingerprint)
    : scheme_(scheme),
      bits_(bits_per_token),
      tokens_(std::move(tokens)),
      labels_(std::move(labels)),
      fingerprint_(std::move(key_fingerprint)) {
  auto violation = [](const std::string& what) { throw Error(ErrorCode::InvariantViolation, what); };
  if (bits_ < 1 || bits_ > kMaxBits) violation("l out of range");
  if (tokens_.size() != labels_.size()) violation("token/label count mismatch");
  std::size_t eos_count = 0;
  std::vector<std::size_t> fill(bin_count(), 0);
  for (std::size_t id = 0; id < labels_.size(); ++id) {
    const auto lab = labels_[id];
    const bool is_eos_token = tokens_[id] == kEosToken;
    if (lab == bin_label::kEos) {
      if (!is_eos_token) violation("token '" + tokens_[id] + "' in the <eos> bin");
      ++eos_count;
    } else if (is_eos_token) {
      violation("<eos> outside its reserved bin");
    } else if (tokens_[id] == kUnkToken) {
      if (lab != bin_label::kExcluded) violation("<unk> must carry nothing");
    } else if (lab == bin_label::kNone) {
      if (scheme_ != BinScheme::BinsCommon) violation("NONE token in a non-common scheme");
    } else if (lab < 0 || static_cast<std::uint32_t>(lab) >= bin_count()) {
      violation("bin index out of range for token '" + tokens_[id] + "'");
    } else {
      ++fill[static_cast<std::size_t>(lab)];
    }
  }
  if (eos_count != 1) violation("<eos> bin must hold exactly one token");
  for (std::uint32_t b = 0; b < bin_count(); ++b) {
    if (fill[b] == 0) violation("bin " + std::to_string(b) + " is empty");
  }
}

std::int32_t BinAssignment::label(TokenId token) const {
  if (token >= labels_.size()) throw Error(ErrorCode::UnknownTokenId, std::to_string(token));
  return labels_[token];
}

std::optional<std::uint32_t> BinAssignment::bin_of(TokenId token) const {
  const auto lab = label(token);
  if (lab < 0) return std::nullopt;
  return static_cast<std::uint32_t>(lab);
}

std::string BinAssignment::bits_of(TokenId token) const {
  auto bin = bin_of(token);
  return bin ? index_bits(*bin, bits_) : std::string{};
}

std::vector<TokenId> BinAssignment::members(std::uint32_t bin) const {
  std::vector<TokenId> out;
  for (TokenId id = 0; id < labels_.size(); ++id) {
    if (labels_[id] == static_cast<std::int32_t>(bin)) out.push_back(id);
  }
  return out;
}

void BinAssignment::save(std::ostream& out) const {
  out << "bins-v1 scheme=" << scheme_name(scheme_) << " l=" << bits_ << " key=" << fingerprint_ << '\n';
  for (std::size_t id = 0; id < tokens_.size(); ++id) {
    out << tokens_[id] << '\t';
    const auto lab = labels_[id];
    if (lab == bin_label::kEos) out << "EOS";
    else if (lab < 0) out << "NONE";
    else out << lab;
    out << '\n';
  }
}

BinAssignment BinAssignment::load(std::istream& in) {
  std::string line;
  std::size_t line_no = 1;
  auto fail = [&](const std::string& why) {
    throw Error(ErrorCode::ParseError, "line " + std::to_string(line_no) + ": " + why);
  };
  if (!std::getline(in, line)) throw Error(ErrorCode::ParseError, "empty bins file");
  auto fields = split_words(line);
  if (fields.size() != 4 || fields[0] != "bins-v1") fail("expected 'bins-v1 scheme=.. l=.. key=..'");
  if (fields[1].rfind("scheme=", 0) != 0 || fields[2].rfind("l=", 0) != 0 || fields[3].rfind("key=", 0) != 0)
    fail("malformed header");
  const auto scheme = parse_scheme(fields[1].substr(7));
  unsigned bits = 0;
  try {
    std::size_t used = 0;
    bits = static_cast<unsigned>(std::stoul(fields[2].substr(2), &used));
    if (used != fields[2].size() - 2) fail("bad l");
  } catch (const std::logic_error&) {
    fail("bad l");
  }
  std::string fingerprint = fields[3].substr(4);

  std::vector<std::string> tokens;
  std::vector<std::int32_t> labels;
  std::set<std::string> seen;
  while (std::getline(in, line)) {
    ++line_no;
    const auto tab = line.find('\t');
    if (tab == std::string::npos || tab == 0 || line.find('\t', tab + 1) != std::string::npos)
      fail("expected '<token>\\t<label>'");
    std::string token = line.substr(0, tab);
    std::string value = line.substr(tab + 1);
    if (!seen.insert(token).second) fail("duplicate token '" + token + "'");
    std::int32_t lab = 0;
    if (value == "EOS") {
      lab = bin_label::kEos;
    } else if (value == "NONE") {
      lab = token == kUnkToken ? bin_label::kExcluded : bin_label::kNone;
    } else {
      if (value.empty() || value.find_first_not_of("0123456789") != std::string::npos || value.size() > 10)
        fail("bad bin label '" + value + "'");
      const auto parsed = std::stoull(value);
      if (parsed > static_cast<unsigned long long>(INT32_MAX)) fail("bin label too large");
      lab = static_cast<std::int32_t>(parsed);
    }
    tokens.push_back(std::move(token));
    labels.push_back(lab);
  }
  return BinAssignment(scheme, bits, std::move(tokens), std::move(labels), std::move(fingerprint));
}

void BinAssignment::save_file(const std::string& path) const {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::IoError, "cannot write " + path);
  save(out);
}

BinAssignment BinAssignment::load_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::IoError, "cannot open " + path);
  return load(in);
}

// --- builders --------------------------------------------------------------------

BinAssignment build_sabins(const BpeModel& vocab, const FrequencyTable& freqs, const SynonymDB& synonyms,
                           unsigned bits_per_token, const SecretKey& key, SabinsTrace* trace) {
  check_bits(bits_per_token);
  require_capacity(eligible_tokens(vocab).size(), bits_per_token);
  const auto order = by_frequency(vocab, freqs);
  const std::uint32_t bins = std::uint32_t{1} << bits_per_token;

  constexpr std::int32_t kUnassigned = INT32_MIN;
  auto labels = initial_labels(vocab, kUnassigned);
  std::vector<std::size_t> fill(bins, 0);
  KeyedStream stream(key, "sabins");
  if (trace) trace->order = order;

  for (TokenId anchor : order) {
    if (anchor == vocab.eos_id()) continue;
    // Unprocessed members of the substitution set, ascending ids.
    std::vector<TokenId> pending;
    for (TokenId t : substitution_set(synonyms, vocab, anchor).members) {
      if (labels[t] == kUnassigned) pending.push_back(t);
    }
    while (!pending.empty()) {
      const std::size_t chunk = std::min<std::size_t>(pending.size(), bins);

      // Draw order: tokens, then bins, then the bijection between them.
      std::vector<TokenId> picked;
      for (std::size_t k = 0; k < chunk; ++k) {
        const auto at = static_cast<std::size_t>(stream.uniform(pending.size()));
        picked.push_back(pending[at]);
        pending.erase(pending.begin() + static_cast<std::ptrdiff_t>(at));
      }
      // Bins: uniform among the least-filled bins not yet used by this chunk.
      std::vector<std::uint32_t> chosen;
      std::vector<bool> used(bins, false);
      for (std::size_t k = 0; k < chunk; ++k) {
        std::size_t lowest = SIZE_MAX;
        std::vector<std::uint32_t> candidates;
        for (std::uint32_t b = 0; b < bins; ++b) {
          if (used[b]) continue;
          if (fill[b] < lowest) {
            lowest = fill[b];
            candidates.clear();
          }
          if (fill[b] == lowest) candidates.push_back(b);
        }
        const auto b = candidates[static_cast<std::size_t>(stream.uniform(candidates.size()))];
        used[b] = true;
        chosen.push_back(b);
      }
      stream.shuffle(chosen);
      for (std::size_t k = 0; k < chunk; ++k) {
        labels[picked[k]] = static_cast<std::int32_t>(chosen[k]);
        ++fill[chosen[k]];
      }
      if (trace) trace->chunks.push_back({anchor, picked, chosen});
    }
  }
  for (auto& lab : labels) {
    if (lab == kUnassigned) throw Error(ErrorCode::InvariantViolation, "token left unassigned");
  }
  std::vector<std::string> tokens(vocab.vocab());
  return BinAssignment(BinScheme::SaBins, bits_per_token, std::move(tokens), std::move(labels),
                       key.fingerprint());
}

BinAssignment build_bins_random(const BpeModel& vocab, unsigned bits_per_token, const SecretKey& key) {
  check_bits(bits_per_token);
  auto tokens = eligible_tokens(vocab);
  require_capacity(tokens.size(), bits_per_token);
  auto labels = initial_labels(vocab, bin_label::kExcluded);
  partition_evenly(std::move(tokens), bits_per_token, key, labels);
  return BinAssignment(BinScheme::Bins, bits_per_token, vocab.vocab(), std::move(labels), key.fingerprint());
}

BinAssignment build_bins_common(const BpeModel& vocab, const FrequencyTable& freqs, unsigned bits_per_token,
                                const SecretKey& key, std::size_t common_count) {
  check_bits(bits_per_token);
  auto eligible = eligible_tokens(vocab);
  if (common_count >= vocab.size() - 1)
    throw Error(ErrorCode::ParamMismatch, "common token count must be below m - 1");
  auto labels = initial_labels(vocab, bin_label::kExcluded);
  std::size_t marked = 0;
  for (TokenId t : by_frequency(vocab, freqs)) {
    if (marked == common_count) break;
    if (vocab.is_special(t)) continue;
    labels[t] = bin_label::kNone;
    ++marked;
  }
  std::vector<TokenId> rest;
  for (TokenId t : eligible) {
    if (labels[t] != bin_label::kNone) rest.push_back(t);
  }
  require_capacity(rest.size(), bits_per_token);
  partition_evenly(std::move(rest), bits_per_token, key, labels);
  return BinAssignment(BinScheme::BinsCommon, bits_per_token, vocab.vocab(), std::move(labels),
                       key.fingerprint());
}

}  // namespace stegopivot
