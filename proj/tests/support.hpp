#pragma once

#include <memory>
#include <sstream>
#include <string>
#include <vector>

#include "stegopivot/bins.hpp"
#include "stegopivot/lm.hpp"
#include "stegopivot/synonyms.hpp"
#include "stegopivot/tokenizer.hpp"
#include "stegopivot/toy_corpus.hpp"

namespace testsupport {

using namespace stegopivot;

// 10k toy lines: first 9000 train, last 1000 held out. Built once.
struct Toy {
  std::vector<std::string> corpus, train, held;
  BpeModel bpe;
  FrequencyTable freqs;
  SynonymDB synonyms;
  NgramProvider lm;

  static const Toy& get() {
    static const Toy toy;
    return toy;
  }

 private:
  Toy()
      : corpus(toy_corpus(10000)),
        train(corpus.begin(), corpus.begin() + 9000),
        held(corpus.begin() + 9000, corpus.end()),
        bpe(train_bpe(train, 8000)),
        freqs(count_frequencies(bpe, train)),
        synonyms(parse_toy_synsets()),
        lm(train_ngram(bpe, train, NgramOptions{})) {}

  static SynonymDB parse_toy_synsets() {
    std::istringstream in(toy_synsets());
    return parse_synsets(in);
  }
};

// Returns queued distributions in order, then one-hot <eos> (id 0).
class ScriptedProvider final : public DistributionProvider {
 public:
  explicit ScriptedProvider(std::vector<std::vector<double>> steps) : steps_(std::move(steps)) {}
  std::size_t vocab_size() const override { return steps_.front().size(); }
  Distribution next_distribution(const GenerationContext& ctx) override {
    ++calls;
    if (ctx.prefix.size() < steps_.size()) return {steps_[ctx.prefix.size()], {}};
    std::vector<double> p(vocab_size(), 0.0);
    p[0] = 1.0;
    return {p, {}};
  }
  int calls = 0;

 private:
  std::vector<std::vector<double>> steps_;
};

// V = {<eos>, a, b, c, d} at word level; bins {a,c} -> "0", {b,d} -> "1".
inline BpeModel abcd_model() { return BpeModel({}, {"<eos>", "a", "b", "c", "d"}, "@@", Segmentation::Word); }
inline BinAssignment abcd_bins() {
  return BinAssignment(BinScheme::Bins, 1, abcd_model().vocab(), {bin_label::kEos, 0, 1, 0, 1}, "0000000000000000");
}

// abcd plus a common token "e" (NONE) in bins-common mode.
inline BpeModel abcde_model() { return BpeModel({}, {"<eos>", "a", "b", "c", "d", "e"}, "@@", Segmentation::Word); }
inline BinAssignment abcde_common_bins() {
  return BinAssignment(BinScheme::BinsCommon, 1, abcde_model().vocab(), {bin_label::kEos, 0, 1, 0, 1, bin_label::kNone},
                       "0000000000000000");
}

// Vocabulary of <eos>, <unk> and n whole words w0..w{n-1}.
inline BpeModel word_model(std::size_t n) {
  std::vector<std::string> vocab{"<eos>", "<unk>"};
  for (std::size_t i = 0; i < n; ++i) vocab.push_back("w" + std::to_string(i));
  return BpeModel({}, vocab, "@@", Segmentation::Word);
}

}  // namespace testsupport
