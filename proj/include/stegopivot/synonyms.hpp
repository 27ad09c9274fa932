#pragma once

#include <iosfwd>
#include <string>
#include <unordered_map>
#include <vector>

#include "stegopivot/tokenizer.hpp"

namespace stegopivot {

/// Synonym sets over surface strings. One set per line in the file format,
/// members separated by spaces; members containing '_' are multiword
/// lemmas and are dropped.
class SynonymDB {
 public:
  SynonymDB() = default;
  explicit SynonymDB(std::vector<std::vector<std::string>> synsets);

  const std::vector<std::vector<std::string>>& synsets() const noexcept { return synsets_; }

  /// Indices of the synsets containing `word` (exact, case-sensitive match).
  const std::vector<std::size_t>& synsets_of(const std::string& word) const;

  void save(std::ostream& out) const;

 private:
  std::vector<std::vector<std::string>> synsets_;
  std::unordered_map<std::string, std::vector<std::size_t>> index_;
};

SynonymDB parse_synsets(std::istream& in);
SynonymDB load_synsets(const std::string& path);

struct SubstitutionSet {
  TokenId anchor = 0;
  std::vector<TokenId> members;  // ascending, always contains anchor
};

/// Every vocabulary token sharing a synset with `token`, plus the token.
/// Subword pieces and special tokens get singleton sets.
SubstitutionSet substitution_set(const SynonymDB& db, const BpeModel& model, TokenId token);

}  // namespace stegopivot
