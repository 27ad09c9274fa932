#include <doctest.h>

#include <algorithm>
#include <numeric>
#include <sstream>

#include "oracles/bpe_cases.hpp"
#include "stegopivot/errors.hpp"
#include "stegopivot/hashing.hpp"
#include "support.hpp"

using namespace stegopivot;
using testsupport::Toy;

namespace {

std::vector<std::string> toy_word_counts() {
  std::vector<std::string> lines;
  for (int i = 0; i < 5; ++i) lines.push_back("low");
  for (int i = 0; i < 2; ++i) lines.push_back("lower");
  for (int i = 0; i < 6; ++i) lines.push_back("newest");
  for (int i = 0; i < 3; ++i) lines.push_back("widest");
  return lines;
}

std::vector<std::string> pieces(const BpeModel& m, std::string_view text) {
  std::vector<std::string> out;
  for (auto id : m.encode(text)) out.push_back(m.token(id));
  return out;
}

}  // namespace

TEST_SUITE("tokenizer") {
  TEST_CASE("merge list matches the pair-counting reference") {
    const auto model = train_bpe(toy_word_counts(), 10);
    REQUIRE(model.merges().size() == oracle::kToyMerges.size());
    for (std::size_t i = 0; i < model.merges().size(); ++i) {
      CHECK(model.merges()[i].left == oracle::kToyMerges[i].first);
      CHECK(model.merges()[i].right == oracle::kToyMerges[i].second);
    }
  }

  TEST_CASE("'lowest' follows the hand merge trace") {
    const auto model = train_bpe(toy_word_counts(), 10);
    const auto got = pieces(model, "lowest");
    REQUIRE(got.size() == oracle::kLowestSegments.size());
    for (std::size_t i = 0; i < got.size(); ++i) CHECK(got[i] == oracle::kLowestSegments[i]);
    CHECK(model.decode(model.encode("lowest")) == "lowest");
  }

  TEST_CASE("single dominant pair") {
    const auto model = train_bpe({"ab ab ab"}, 1);
    REQUIRE(model.merges().size() == 1);
    CHECK(model.merges()[0].left == "a");
    CHECK(model.merges()[0].right == std::string("b") + std::string(kEndOfWord));
    CHECK(pieces(model, "ab") == std::vector<std::string>{"ab"});
  }

  TEST_CASE("zero merges gives a character vocabulary") {
    const auto model = train_bpe({"hello world"}, 0);
    CHECK(model.merges().empty());
    for (TokenId id = 0; id < model.size(); ++id) {
      if (model.is_special(id)) continue;
      std::string t = model.token(id);
      if (t.size() > 2 && t.substr(t.size() - 2) == "@@") t.resize(t.size() - 2);
      CHECK(utf8_code_points(t).size() == 1);
    }
    CHECK(model.find("<eos>") == TokenId{0});
    CHECK(model.find("<unk>") == TokenId{1});
  }

  TEST_CASE("merge count honored until symbols run out") {
    const auto few = train_bpe(toy_word_counts(), 3);
    CHECK(few.merges().size() == 3);
    const auto all = train_bpe(toy_word_counts(), 1000);
    CHECK(all.merges().size() < 1000);
    // Every word ends as a single symbol.
    for (std::string_view w : {"low", "lower", "newest", "widest"}) CHECK(all.encode(w).size() == 1);
  }

  TEST_CASE("empty corpus") {
    CHECK_THROWS_AS(train_bpe({}, 5), Error);
    try {
      train_bpe({"", "   "}, 5);
      FAIL("expected EmptyCorpus");
    } catch (const Error& e) {
      CHECK(e.code() == ErrorCode::EmptyCorpus);
    }
  }

  TEST_CASE("encode and decode edge cases") {
    const auto& toy = Toy::get();
    CHECK(toy.bpe.encode("").empty());
    CHECK(toy.bpe.decode(TokenSeq{}).empty());
    CHECK(toy.bpe.decode(TokenSeq{toy.bpe.eos_id()}).empty());
    CHECK_THROWS_AS(toy.bpe.decode(TokenSeq{static_cast<TokenId>(toy.bpe.size())}), Error);
    const auto ids = toy.bpe.encode("the   man\t runs .");
    CHECK(std::find(ids.begin(), ids.end(), toy.bpe.eos_id()) == ids.end());
    CHECK(toy.bpe.decode(ids) == "the man runs .");
  }

  TEST_CASE("unknown characters") {
    const auto model = train_bpe({"abc abd"}, 2);
    const auto ids = model.encode("abz");
    REQUIRE(ids.size() == 1);
    CHECK(ids[0] == *model.unk_id());
    try {
      (void)model.encode("abz", UnknownPolicy::Strict);
      FAIL("expected UnrepresentableInput");
    } catch (const Error& e) {
      CHECK(e.code() == ErrorCode::UnrepresentableInput);
    }
  }

  TEST_CASE("round trip over 1000 corpus lines") {
    const auto& toy = Toy::get();
    std::size_t checked = 0;
    for (std::size_t i = 0; i < toy.corpus.size() && checked < 1000; i += 10, ++checked) {
      const auto& line = toy.corpus[i];
      CHECK(toy.bpe.decode(toy.bpe.encode(line)) == normalize_whitespace(line));
    }
    CHECK(checked == 1000);
  }

  TEST_CASE("subword round trip for unseen words") {
    const auto& toy = Toy::get();
    for (std::string_view w : {"lakes", "Bregenzer", "rivers hills", "townhouse"}) {
      CHECK(toy.bpe.decode(toy.bpe.encode(w)) == w);
    }
  }

  TEST_CASE("training is deterministic and save/load is lossless") {
    const auto& toy = Toy::get();
    std::ostringstream a, b;
    train_bpe(toy.train, 300).save(a);
    train_bpe(toy.train, 300).save(b);
    CHECK(a.str() == b.str());
    std::istringstream in(a.str());
    const auto loaded = BpeModel::load(in);
    std::ostringstream c;
    loaded.save(c);
    CHECK(c.str() == a.str());
    CHECK(a.str().rfind("bpe-v1 marker=@@\n", 0) == 0);
  }

  TEST_CASE("malformed model files") {
    for (std::string bad : {"", "bpe-v2 marker=@@\n#vocab\n<eos>\t0\n", "bpe-v1 marker=@@\na\n#vocab\n<eos>\t0\n",
                            "bpe-v1 marker=@@\n#vocab\n<eos>\t0\nx\t5\n"}) {
      std::istringstream in(bad);
      CHECK_THROWS_AS(BpeModel::load(in), Error);
    }
  }

  TEST_CASE("word-level mode") {
    BpeTrainOptions opts;
    opts.segmentation = Segmentation::Word;
    const auto model = train_bpe({"the man runs .", "the dog runs ."}, 100, opts);
    CHECK(model.merges().empty());
    CHECK(model.segmentation() == Segmentation::Word);
    CHECK(model.encode("the dog").size() == 2);
    CHECK(model.encode("cat") == TokenSeq{*model.unk_id()});
    std::ostringstream out;
    model.save(out);
    std::istringstream in(out.str());
    CHECK(BpeModel::load(in).segmentation() == Segmentation::Word);
  }

  TEST_CASE("frequency table") {
    const auto model = train_bpe({"a a a"}, 0);
    const auto freqs = count_frequencies(model, {"a a a", ""});
    CHECK(freqs.counts[*model.find("a")] == 3);
    const auto& toy = Toy::get();
    std::uint64_t total = 0;
    for (const auto& line : toy.train) total += toy.bpe.encode(line).size();
    CHECK(toy.freqs.total() == total);
    CHECK(toy.freqs.counts.size() == toy.bpe.size());
    std::ostringstream out;
    toy.freqs.save(out);
    std::istringstream in(out.str());
    CHECK(FrequencyTable::load(in, toy.bpe.size()).counts == toy.freqs.counts);
  }

  TEST_CASE("vocab ids follow corpus frequency") {
    const auto& toy = Toy::get();
    for (TokenId id = 3; id < toy.bpe.size(); ++id) CHECK(toy.freqs.counts[id - 1] >= toy.freqs.counts[id]);
  }

  TEST_CASE("vocab hash is sha256 over newline-terminated tokens") {
    const auto model = train_bpe({"ab ab ab"}, 1);
    std::string all;
    for (const auto& t : model.vocab()) all += t + "\n";
    const auto d = sha256(all);
    CHECK(model.vocab_hash() == to_hex(d));
  }
}
