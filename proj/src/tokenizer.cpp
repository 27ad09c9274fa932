#include "stegopivot/tokenizer.hpp"

#include <algorithm>
#include <fstream>
#include <istream>
#include <map>
#include <ostream>
#include <set>
#include <sstream>

#include "stegopivot/errors.hpp"
#include "stegopivot/hashing.hpp"

namespace stegopivot {
namespace {

bool ends_with(std::string_view s, std::string_view suffix) {
  return s.size() >= suffix.size() && s.substr(s.size() - suffix.size()) == suffix;
}

bool is_space(char c) {
  return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' || c == '\v';
}

std::string pair_key(std::string_view left, std::string_view right) {
  std::string key;
  key.reserve(left.size() + right.size() + 1);
  key.append(left);
  key.push_back('\x1f');
  key.append(right);
  return key;
}

// Internal symbol -> vocabulary token string.
std::string render_symbol(const std::string& symbol, std::string_view marker) {
  if (ends_with(symbol, kEndOfWord)) return symbol.substr(0, symbol.size() - kEndOfWord.size());
  return symbol + std::string(marker);
}

bool is_reserved_word(std::string_view word, std::string_view marker) {
  return word == kEosToken || word == kUnkToken || ends_with(word, marker);
}

std::vector<std::string> initial_symbols(std::string_view word) {
  auto symbols = utf8_code_points(word);
  if (!symbols.empty()) symbols.back() += kEndOfWord;
  return symbols;
}

// Specials first, then by descending count, ties by token string.
std::vector<std::string> order_vocab(const std::map<std::string, std::uint64_t>& counts) {
  std::vector<std::pair<std::string, std::uint64_t>> entries(counts.begin(), counts.end());
  std::stable_sort(entries.begin(), entries.end(),
                   [](const auto& a, const auto& b) { return a.second > b.second; });
  std::vector<std::string> vocab{std::string(kEosToken), std::string(kUnkToken)};
  for (auto& [token, count] : entries) vocab.push_back(token);
  return vocab;
}

}  // namespace

std::string normalize_whitespace(std::string_view text) {
  std::string out;
  out.reserve(text.size());
  bool pending_space = false;
  for (char c : text) {
    if (is_space(c)) {
      pending_space = !out.empty();
      continue;
    }
    if (pending_space) out.push_back(' ');
    pending_space = false;
    out.push_back(c);
  }
  return out;
}

std::vector<std::string> split_words(std::string_view text) {
  std::vector<std::string> words;
  std::size_t i = 0;
  while (i < text.size()) {
    while (i < text.size() && is_space(text[i])) ++i;
    std::size_t start = i;
    while (i < text.size() && !is_space(text[i])) ++i;
    if (i > start) words.emplace_back(text.substr(start, i - start));
  }
  return words;
}

std::vector<std::string> utf8_code_points(std::string_view text) {
  std::vector<std::string> out;
  std::size_t i = 0;
  while (i < text.size()) {
    const auto lead = static_cast<unsigned char>(text[i]);
    std::size_t len = 0;
    if (lead < 0x80) len = 1;
    else if ((lead >> 5) == 0x6) len = 2;
    else if ((lead >> 4) == 0xE) len = 3;
    else if ((lead >> 3) == 0x1E) len = 4;
    else throw Error(ErrorCode::UnrepresentableInput, "malformed UTF-8 lead byte");
    if (i + len > text.size()) throw Error(ErrorCode::UnrepresentableInput, "truncated UTF-8 sequence");
    for (std::size_t k = 1; k < len; ++k) {
      if ((static_cast<unsigned char>(text[i + k]) >> 6) != 0x2)
        throw Error(ErrorCode::UnrepresentableInput, "malformed UTF-8 continuation byte");
    }
    out.emplace_back(text.substr(i, len));
    i += len;
  }
  return out;
}

std::vector<std::string> read_lines(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::IoError, "cannot open " + path);
  std::vector<std::string> lines;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    lines.push_back(std::move(line));
  }
  return lines;
}

// --- BpeModel --------------------------------------------------------------

BpeModel::BpeModel(std::vector<MergeRule> merges, std::vector<std::string> vocab, std::string marker,
                   Segmentation segmentation)
    : merges_(std::move(merges)),
      vocab_(std::move(vocab)),
      marker_(std::move(marker)),
      segmentation_(segmentation) {
  if (marker_.empty()) throw Error(ErrorCode::InvariantViolation, "empty continuation marker");
  bool have_eos = false;
  for (TokenId id = 0; id < vocab_.size(); ++id) {
    const auto& tok = vocab_[id];
    if (tok.empty()) throw Error(ErrorCode::InvariantViolation, "empty token string");
    if (!ids_.emplace(tok, id).second)
      throw Error(ErrorCode::InvariantViolation, "duplicate token '" + tok + "'");
    if (tok == kEosToken) {
      eos_id_ = id;
      have_eos = true;
    } else if (tok == kUnkToken) {
      unk_id_ = id;
    }
  }
  if (!have_eos) throw Error(ErrorCode::MissingEos, "vocabulary has no <eos>");
  for (std::size_t rank = 0; rank < merges_.size(); ++rank) {
    merge_rank_.emplace(pair_key(merges_[rank].left, merges_[rank].right), rank);
  }
}

const std::string& BpeModel::token(TokenId id) const {
  if (id >= vocab_.size()) throw Error(ErrorCode::UnknownTokenId, std::to_string(id));
  return vocab_[id];
}

std::optional<TokenId> BpeModel::find(std::string_view token) const {
  auto it = ids_.find(std::string(token));
  if (it == ids_.end()) return std::nullopt;
  return it->second;
}

bool BpeModel::is_special(TokenId id) const noexcept {
  return id == eos_id_ || (unk_id_ && id == *unk_id_);
}

bool BpeModel::is_continuation(TokenId id) const {
  if (segmentation_ != Segmentation::Subword || is_special(id)) return false;
  const auto& tok = token(id);
  return tok.size() > marker_.size() && ends_with(tok, marker_);
}

std::vector<std::string> BpeModel::segment_word(std::string_view word) const {
  auto symbols = initial_symbols(word);
  while (symbols.size() > 1) {
    std::size_t best_rank = merges_.size();
    for (std::size_t i = 0; i + 1 < symbols.size(); ++i) {
      auto it = merge_rank_.find(pair_key(symbols[i], symbols[i + 1]));
      if (it != merge_rank_.end() && it->second < best_rank) best_rank = it->second;
    }
    if (best_rank == merges_.size()) break;
    const auto& rule = merges_[best_rank];
    std::vector<std::string> next;
    next.reserve(symbols.size());
    for (std::size_t i = 0; i < symbols.size(); ++i) {
      if (i + 1 < symbols.size() && symbols[i] == rule.left && symbols[i + 1] == rule.right) {
        next.push_back(symbols[i] + symbols[i + 1]);
        ++i;
      } else {
        next.push_back(std::move(symbols[i]));
      }
    }
    symbols = std::move(next);
  }
  return symbols;
}

TokenSeq BpeModel::encode(std::string_view text, UnknownPolicy policy) const {
  TokenSeq out;
  auto unknown = [&](const std::string& word) {
    if (policy == UnknownPolicy::Strict || !unk_id_)
      throw Error(ErrorCode::UnrepresentableInput, "cannot represent '" + word + "'");
    out.push_back(*unk_id_);
  };
  for (const auto& word : split_words(text)) {
    if (word == kUnkToken && unk_id_) {
      out.push_back(*unk_id_);
      continue;
    }
    if (word == kEosToken) {
      unknown(word);
      continue;
    }
    if (segmentation_ == Segmentation::Word) {
      auto id = find(word);
      if (id) out.push_back(*id);
      else unknown(word);
      continue;
    }
    std::vector<std::string> symbols;
    try {
      symbols = segment_word(word);
    } catch (const Error&) {
      unknown(word);
      continue;
    }
    TokenSeq pieces;
    bool ok = true;
    for (const auto& sym : symbols) {
      auto id = find(render_symbol(sym, marker_));
      if (!id || is_special(*id)) {
        ok = false;
        break;
      }
      pieces.push_back(*id);
    }
    if (ok) out.insert(out.end(), pieces.begin(), pieces.end());
    else unknown(word);
  }
  return out;
}

std::string BpeModel::decode(std::span<const TokenId> tokens) const {
  std::string out;
  bool in_word = false;
  for (TokenId id : tokens) {
    const auto& tok = token(id);
    if (id == eos_id_) continue;
    if (!in_word && !out.empty()) out.push_back(' ');
    if (is_continuation(id)) {
      out.append(tok, 0, tok.size() - marker_.size());
      in_word = true;
    } else {
      out.append(tok);
      in_word = false;
    }
  }
  return out;
}

void BpeModel::save(std::ostream& out) const {
  out << "bpe-v1 marker=" << marker_;
  if (segmentation_ == Segmentation::Word) out << " mode=word";
  out << '\n';
  for (const auto& rule : merges_) out << rule.left << '\t' << rule.right << '\n';
  out << "#vocab\n";
  for (TokenId id = 0; id < vocab_.size(); ++id) out << vocab_[id] << '\t' << id << '\n';
}

BpeModel BpeModel::load(std::istream& in) {
  std::string line;
  std::size_t line_no = 1;
  auto fail = [&](const std::string& why) {
    throw Error(ErrorCode::ParseError, "line " + std::to_string(line_no) + ": " + why);
  };
  if (!std::getline(in, line)) throw Error(ErrorCode::EmptyFile, "empty BPE model");
  std::string marker;
  auto segmentation = Segmentation::Subword;
  {
    auto fields = split_words(line);
    if (fields.empty() || fields[0] != "bpe-v1") fail("expected 'bpe-v1' header");
    for (std::size_t i = 1; i < fields.size(); ++i) {
      if (fields[i].rfind("marker=", 0) == 0) marker = fields[i].substr(7);
      else if (fields[i] == "mode=word") segmentation = Segmentation::Word;
      else if (fields[i] == "mode=subword") segmentation = Segmentation::Subword;
      else fail("unknown header field '" + fields[i] + "'");
    }
    if (marker.empty()) fail("missing marker");
  }
  std::vector<MergeRule> merges;
  bool in_vocab = false;
  std::map<TokenId, std::string> by_id;
  while (std::getline(in, line)) {
    ++line_no;
    if (!in_vocab) {
      if (line == "#vocab") {
        in_vocab = true;
        continue;
      }
      auto tab = line.find('\t');
      if (tab == std::string::npos || tab == 0 || tab + 1 == line.size()) fail("bad merge rule");
      merges.push_back({line.substr(0, tab), line.substr(tab + 1)});
      continue;
    }
    auto tab = line.rfind('\t');
    if (tab == std::string::npos || tab == 0) fail("bad vocab line");
    TokenId id = 0;
    try {
      std::size_t used = 0;
      auto parsed = std::stoul(line.substr(tab + 1), &used);
      if (used != line.size() - tab - 1) fail("bad token id");
      id = static_cast<TokenId>(parsed);
    } catch (const std::logic_error&) {
      fail("bad token id");
    }
    if (!by_id.emplace(id, line.substr(0, tab)).second) fail("duplicate token id");
  }
  if (!in_vocab) fail("missing #vocab section");
  std::vector<std::string> vocab;
  vocab.reserve(by_id.size());
  for (const auto& [id, tok] : by_id) {
    if (id != vocab.size()) throw Error(ErrorCode::ParseError, "token ids are not dense");
    vocab.push_back(tok);
  }
  try {
    return BpeModel(std::move(merges), std::move(vocab), std::move(marker), segmentation);
  } catch (const Error& e) {
    if (e.code() == ErrorCode::MissingEos) throw;
    throw Error(ErrorCode::ParseError, e.what());
  }
}

void BpeModel::save_file(const std::string& path) const {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::IoError, "cannot write " + path);
  save(out);
}

BpeModel BpeModel::load_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::IoError, "cannot open " + path);
  return load(in);
}

std::string BpeModel::vocab_hash() const {
  std::string joined;
  for (const auto& tok : vocab_) {
    joined += tok;
    joined.push_back('\n');
  }
  return to_hex(sha256(joined));
}

// --- training ----------------------------------------------------------------

BpeModel train_bpe(const std::vector<std::string>& corpus, std::size_t num_merges,
                   const BpeTrainOptions& options) {
  std::map<std::string, std::uint64_t> word_counts;
  for (const auto& line : corpus) {
    for (auto& word : split_words(line)) {
      if (is_reserved_word(word, options.marker)) continue;
      ++word_counts[word];
    }
  }
  if (word_counts.empty()) throw Error(ErrorCode::EmptyCorpus, "corpus has no words");

  if (options.segmentation == Segmentation::Word) {
    return BpeModel({}, order_vocab(word_counts), options.marker, Segmentation::Word);
  }

  struct WordEntry {
    std::vector<std::string> symbols;
    std::uint64_t count;
  };
  std::vector<WordEntry> words;
  std::set<std::string> symbol_set;
  for (const auto& [word, count] : word_counts) {
    auto symbols = initial_symbols(word);
    for (const auto& cp : utf8_code_points(word)) {
      symbol_set.insert(cp);
      symbol_set.insert(cp + std::string(kEndOfWord));
    }
    words.push_back({std::move(symbols), count});
  }

  std::vector<MergeRule> merges;
  while (merges.size() < num_merges) {
    std::map<std::pair<std::string, std::string>, std::uint64_t> pairs;
    for (const auto& w : words) {
      for (std::size_t i = 0; i + 1 < w.symbols.size(); ++i) pairs[{w.symbols[i], w.symbols[i + 1]}] += w.count;
    }
    if (pairs.empty()) break;
    // std::map iterates in lexicographic pair order, so the first maximum
    // is the smallest pair among equal counts.
    auto best = pairs.begin();
    for (auto it = pairs.begin(); it != pairs.end(); ++it) {
      if (it->second > best->second) best = it;
    }
    const auto [left, right] = best->first;
    for (auto& w : words) {
      std::vector<std::string> next;
      next.reserve(w.symbols.size());
      for (std::size_t i = 0; i < w.symbols.size(); ++i) {
        if (i + 1 < w.symbols.size() && w.symbols[i] == left && w.symbols[i + 1] == right) {
          next.push_back(left + right);
          ++i;
        } else {
          next.push_back(std::move(w.symbols[i]));
        }
      }
      w.symbols = std::move(next);
    }
    symbol_set.insert(left + right);
    merges.push_back({left, right});
  }

  // Provisional ids to count encoded frequencies, then the final ordering.
  std::vector<std::string> provisional{std::string(kEosToken), std::string(kUnkToken)};
  std::set<std::string> rendered;
  for (const auto& sym : symbol_set) rendered.insert(render_symbol(sym, options.marker));
  provisional.insert(provisional.end(), rendered.begin(), rendered.end());
  BpeModel draft(merges, provisional, options.marker, Segmentation::Subword);
  auto freqs = count_frequencies(draft, corpus);

  std::map<std::string, std::uint64_t> token_counts;
  for (TokenId id = 0; id < draft.size(); ++id) {
    if (!draft.is_special(id)) token_counts[draft.token(id)] = freqs.counts[id];
  }
  return BpeModel(std::move(merges), order_vocab(token_counts), options.marker, Segmentation::Subword);
}

// --- frequencies -------------------------------------------------------------

std::uint64_t FrequencyTable::total() const noexcept {
  std::uint64_t t = 0;
  for (auto c : counts) t += c;
  return t;
}

void FrequencyTable::save(std::ostream& out) const {
  for (std::size_t id = 0; id < counts.size(); ++id) out << id << '\t' << counts[id] << '\n';
}

FrequencyTable FrequencyTable::load(std::istream& in, std::size_t vocab_size) {
  FrequencyTable table{std::vector<std::uint64_t>(vocab_size, 0)};
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    std::istringstream fields(line);
    std::uint64_t id = 0;
    std::uint64_t count = 0;
    char tab = 0;
    if (!(fields >> id) || !fields.get(tab) || tab != '\t' || !(fields >> count) || id >= vocab_size)
      throw Error(ErrorCode::ParseError, "frequency line " + std::to_string(line_no));
    table.counts[id] = count;
  }
  return table;
}

FrequencyTable count_frequencies(const BpeModel& model, const std::vector<std::string>& corpus) {
  FrequencyTable table{std::vector<std::uint64_t>(model.size(), 0)};
  for (const auto& line : corpus) {
    for (TokenId id : model.encode(line)) ++table.counts[id];
  }
  return table;
}

}  // namespace stegopivot
