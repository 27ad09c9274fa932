#pragma once

#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

namespace stegopivot {

/// Synthetic English-like sentences from a small synonym-rich grammar. The
/// output depends only on (lines, seed).
std::vector<std::string> toy_corpus(std::size_t lines, std::string_view seed = "toy-corpus");

/// Synonym sets matching the toy grammar's word groups, in synset file
/// format (one set per line). Includes a few overlapping sets and
/// multiword lemmas.
std::string toy_synsets();

}  // namespace stegopivot
