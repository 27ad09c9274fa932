#pragma once
// Generated by gen_oracles.py. Do not edit.
#include <string_view>
#include <utility>
#include <vector>

namespace oracle {

// {low:5, lower:2, newest:6, widest:3}, 10 merges, tie -> smallest pair.
inline const std::vector<std::pair<std::string_view, std::string_view>> kToyMerges = {
    {"e", "s"},  // count 9
    {"es", "t</w>"},  // count 9
    {"l", "o"},  // count 7
    {"e", "w"},  // count 6
    {"ew", "est</w>"},  // count 6
    {"n", "ewest</w>"},  // count 6
    {"lo", "w</w>"},  // count 5
    {"d", "est</w>"},  // count 3
    {"i", "dest</w>"},  // count 3
    {"w", "idest</w>"},  // count 3
};
inline const std::vector<std::string_view> kLowestSegments = {"lo@@", "w@@", "est"};

}  // namespace oracle
