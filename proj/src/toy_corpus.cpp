#include "stegopivot/toy_corpus.hpp"

#include <array>

#include "stegopivot/keyed_random.hpp"

namespace stegopivot {
namespace {

using Group = std::vector<std::string_view>;

// Each inner group is one synonym set; classes are lists of groups.
const std::vector<Group> kAdjectives = {
    {"big", "large", "huge", "vast"},      {"small", "little", "tiny"},
    {"old", "ancient", "aged"},            {"new", "fresh", "modern"},
    {"quick", "fast", "rapid", "swift"},   {"slow", "sluggish"},
    {"happy", "glad", "cheerful"},         {"quiet", "silent", "calm"},
    {"beautiful", "lovely", "pretty"},     {"dark", "gloomy", "dim"},
    {"bright", "shiny", "brilliant"},      {"strong", "powerful", "sturdy"},
};
const std::vector<Group> kNouns = {
    {"man", "person", "fellow"},       {"woman", "lady"},
    {"child", "kid", "youngster"},     {"dog", "hound"},
    {"cat", "kitten"},                 {"house", "home", "dwelling"},
    {"road", "route", "path", "way"},  {"lake", "pond"},
    {"hill", "mound", "slope"},        {"car", "automobile", "vehicle"},
    {"bike", "bicycle", "cycle"},      {"town", "village", "city"},
    {"teacher", "instructor", "tutor"}, {"doctor", "physician"},
    {"river", "stream"},               {"forest", "woods"},
};
const std::vector<Group> kVerbs = {
    {"sees", "watches", "observes", "views"}, {"likes", "enjoys", "loves"},
    {"finds", "discovers", "locates"},        {"visits", "tours"},
    {"builds", "constructs", "makes"},        {"crosses", "traverses"},
    {"follows", "tracks", "trails"},          {"helps", "assists", "aids"},
};
const std::vector<Group> kIntransitive = {
    {"arrives", "comes"}, {"leaves", "departs", "exits"}, {"sleeps", "rests"},
    {"waits", "stays", "remains"}, {"runs", "sprints"}, {"laughs", "giggles"},
};
const std::vector<Group> kAdverbs = {
    {"quickly", "rapidly", "swiftly"}, {"slowly", "gradually"}, {"often", "frequently"},
    {"today", "now"}, {"happily", "gladly"}, {"quietly", "silently", "softly"},
};
const std::vector<std::string_view> kPlaces = {
    "Illmensee", "Konstanz", "Ravensburg", "Lindau", "Ueberlingen", "Friedrichshafen",
    "Meersburg", "Tettnang", "Wangen", "Bregenz", "Sigmaringen", "Pfullendorf",
};
const std::vector<std::string_view> kDeterminers = {"the", "the", "the", "a", "this", "that", "every"};
const std::vector<std::string_view> kPrepositions = {"near", "by", "across", "over", "along", "beside"};
const std::vector<std::string_view> kWeather = {"fine", "nice", "good", "bad", "cold", "warm"};
const std::vector<std::string_view> kNumbers = {"two", "three", "five", "ten", "twelve", "214", "40"};

class Picker {
 public:
  explicit Picker(std::string_view seed) : stream_(SecretKey::from_passphrase(seed), "toy-corpus") {}

  std::string_view one(const std::vector<std::string_view>& items) {
    return items[static_cast<std::size_t>(stream_.uniform(items.size()))];
  }
  std::string_view word(const std::vector<Group>& groups) {
    // Zipf-ish: the first member of each group is the common one.
    const auto& g = groups[static_cast<std::size_t>(stream_.uniform(groups.size()))];
    const auto roll = stream_.uniform(10);
    if (roll < 6 || g.size() == 1) return g[0];
    return g[1 + static_cast<std::size_t>(stream_.uniform(g.size() - 1))];
  }
  bool chance(unsigned percent) { return stream_.uniform(100) < percent; }
  std::uint64_t pick(std::uint64_t n) { return stream_.uniform(n); }

 private:
  KeyedStream stream_;
};

void append(std::string& out, std::string_view w) {
  if (!out.empty()) out.push_back(' ');
  out.append(w);
}

void noun_phrase(Picker& p, std::string& out) {
  append(out, p.one(kDeterminers));
  if (p.chance(50)) append(out, p.word(kAdjectives));
  append(out, p.word(kNouns));
}

void sentence(Picker& p, std::string& s) {
  switch (p.pick(5)) {
    case 0:
      noun_phrase(p, s);
      append(s, p.word(kVerbs));
      noun_phrase(p, s);
      if (p.chance(40)) {
        append(s, p.one(kPrepositions));
        noun_phrase(p, s);
      }
      break;
    case 1:
      noun_phrase(p, s);
      append(s, p.word(kIntransitive));
      if (p.chance(60)) append(s, p.word(kAdverbs));
      break;
    case 2:
      append(s, "in");
      append(s, p.one(kWeather));
      append(s, "weather");
      append(s, ",");
      append(s, p.one(kNumbers));
      append(s, p.chance(50) ? "cyclists" : "riders");
      append(s, p.word(kIntransitive));
      append(s, "in");
      append(s, p.one(kPlaces));
      break;
    case 3:
      noun_phrase(p, s);
      append(s, p.word(kVerbs));
      append(s, "the");
      append(s, p.word(kNouns));
      append(s, "in");
      append(s, p.one(kPlaces));
      if (p.chance(30)) append(s, p.word(kAdverbs));
      break;
    default:
      noun_phrase(p, s);
      append(s, "and");
      noun_phrase(p, s);
      append(s, p.word(kIntransitive));
      append(s, p.one(kPrepositions));
      noun_phrase(p, s);
      break;
  }
  append(s, ".");
}

}  // namespace

std::vector<std::string> toy_corpus(std::size_t lines, std::string_view seed) {
  Picker p(seed);
  std::vector<std::string> out;
  out.reserve(lines);
  for (std::size_t i = 0; i < lines; ++i) {
    std::string s;
    sentence(p, s);
    // Roughly a quarter of the lines run on into further sentences.
    const auto roll = p.pick(100);
    if (roll < 25) sentence(p, s);
    if (roll < 5) sentence(p, s);
    out.push_back(std::move(s));
  }
  return out;
}

std::string toy_synsets() {
  std::string out;
  auto emit_groups = [&](const std::vector<Group>& groups) {
    for (const auto& g : groups) {
      std::string line;
      for (auto w : g) append(line, w);
      out += line + "\n";
    }
  };
  emit_groups(kAdjectives);
  emit_groups(kNouns);
  emit_groups(kVerbs);
  emit_groups(kIntransitive);
  emit_groups(kAdverbs);
  // Overlapping sets and multiword lemmas, as in WordNet exports.
  out += "way manner method\n";
  out += "sees look_at understands\n";
  out += "fine nice good\n";
  out += "cycle bicycle bike motorbike\n";
  return out;
}

}  // namespace stegopivot
