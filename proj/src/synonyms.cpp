#include "stegopivot/synonyms.hpp"

#include <algorithm>
#include <fstream>
#include <istream>
#include <ostream>

#include "stegopivot/errors.hpp"

namespace stegopivot {

SynonymDB::SynonymDB(std::vector<std::vector<std::string>> synsets) : synsets_(std::move(synsets)) {
  for (std::size_t s = 0; s < synsets_.size(); ++s) {
    auto& set = synsets_[s];
    if (set.empty()) throw Error(ErrorCode::InvariantViolation, "empty synset");
    // Dedup keeping first occurrence order.
    std::vector<std::string> unique;
    for (auto& w : set) {
      if (std::find(unique.begin(), unique.end(), w) == unique.end()) unique.push_back(std::move(w));
    }
    set = std::move(unique);
    for (const auto& w : set) index_[w].push_back(s);
  }
}

const std::vector<std::size_t>& SynonymDB::synsets_of(const std::string& word) const {
  static const std::vector<std::size_t> kNone;
  auto it = index_.find(word);
  return it == index_.end() ? kNone : it->second;
}

void SynonymDB::save(std::ostream& out) const {
  for (const auto& set : synsets_) {
    for (std::size_t i = 0; i < set.size(); ++i) out << (i ? " " : "") << set[i];
    out << '\n';
  }
}

SynonymDB parse_synsets(std::istream& in) {
  std::vector<std::vector<std::string>> synsets;
  std::string line;
  std::size_t line_no = 0;
  bool any_line = false;
  while (std::getline(in, line)) {
    ++line_no;
    any_line = true;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    for (char c : line) {
      const auto u = static_cast<unsigned char>(c);
      if (u < 0x20 && c != ' ' && c != '\t')
        throw Error(ErrorCode::ParseError, "line " + std::to_string(line_no) + ": control character");
    }
    std::vector<std::string> members;
    try {
      for (auto& w : split_words(line)) {
        utf8_code_points(w);
        if (w.find('_') != std::string::npos) continue;
        members.push_back(std::move(w));
      }
    } catch (const Error&) {
      throw Error(ErrorCode::ParseError, "line " + std::to_string(line_no) + ": invalid UTF-8");
    }
    if (!members.empty()) synsets.push_back(std::move(members));
  }
  if (!any_line || synsets.empty()) throw Error(ErrorCode::EmptyFile, "no synonym sets");
  return SynonymDB(std::move(synsets));
}

SynonymDB load_synsets(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::IoError, "cannot open " + path);
  return parse_synsets(in);
}

SubstitutionSet substitution_set(const SynonymDB& db, const BpeModel& model, TokenId token) {
  const auto& surface = model.token(token);
  SubstitutionSet out{token, {token}};
  if (model.is_special(token) || model.is_continuation(token)) return out;
  for (std::size_t s : db.synsets_of(surface)) {
    for (const auto& word : db.synsets()[s]) {
      auto id = model.find(word);
      if (!id || model.is_special(*id) || model.is_continuation(*id)) continue;
      out.members.push_back(*id);
    }
  }
  std::sort(out.members.begin(), out.members.end());
  out.members.erase(std::unique(out.members.begin(), out.members.end()), out.members.end());
  return out;
}

}  // namespace stegopivot
