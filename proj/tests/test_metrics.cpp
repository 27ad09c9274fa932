#include <doctest.h>

#include <cmath>
#include <random>
#include <sstream>

#include "oracles/bleu_cases.hpp"
#include "stegopivot/codec.hpp"
#include "stegopivot/errors.hpp"
#include "stegopivot/metrics.hpp"
#include "support.hpp"

using namespace stegopivot;
using testsupport::abcd_model;
using testsupport::ScriptedProvider;
using testsupport::Toy;

TEST_SUITE("metrics") {
  TEST_CASE("bits per word") {
    const auto& toy = Toy::get();
    const std::string cover = "the man sees the dog .";
    const auto n = static_cast<double>(toy.bpe.encode(cover).size());
    CHECK(bpw(0, cover, toy.bpe) == 0.0);
    CHECK(bpw(10, cover, toy.bpe) == doctest::Approx(10.0 / n));
    CHECK(bpw(20, cover, toy.bpe) == doctest::Approx(2 * bpw(10, cover, toy.bpe)));
    const auto twenty = train_bpe({"a b c d e f g h i j k l m n o p q r s t"}, 0);
    CHECK(bpw(10, "a b c d e f g h i j k l m n o p q r s t", twenty) == 0.5);
    try {
      bpw(3, "   ", toy.bpe);
      FAIL("expected EmptyCover");
    } catch (const Error& e) {
      CHECK(e.code() == ErrorCode::EmptyCover);
    }
  }

  TEST_CASE("BLEU matches the brute-force reference on 50 pairs") {
    for (const auto& c : oracle::kBleuCases) {
      const auto stats = bleu_stats(split_words(c.candidate), split_words(c.reference));
      for (std::size_t n = 0; n < 4; ++n) {
        CHECK(stats.matches[n] == c.matches[n]);
        CHECK(stats.totals[n] == c.totals[n]);
      }
      // Same formula, same operation order: agreement to the last few ulps.
      CHECK(bleu(c.candidate, c.reference) == doctest::Approx(c.bleu).epsilon(1e-12));
    }
  }

  TEST_CASE("BLEU basics") {
    CHECK(bleu("the man runs .", "the man runs .") == 1.0);
    CHECK(bleu("a", "a") == 1.0);
    const auto none = bleu_stats(split_words("x y z"), split_words("a b c"));
    CHECK(bleu_from_stats(none, false) == 0.0);
    CHECK(bleu_from_stats(none, true) == doctest::Approx(kBleuEpsilon));
    CHECK(bleu("the man", "the man runs fast") < 1.0);  // brevity
    CHECK(bleu("the man runs fast", "the man") != bleu("the man", "the man runs fast"));
    CHECK_THROWS_AS(bleu("", "a"), Error);
    CHECK_THROWS_AS(bleu("a", " "), Error);
  }

  TEST_CASE("uniform provider has perplexity m") {
    const auto& toy = Toy::get();
    NgramProvider uniform(toy.bpe.size(), {2, 1.0});
    for (std::size_t i = 0; i < 10; ++i) {
      const double ppl = perplexity(toy.held[i], uniform, toy.bpe);
      CHECK(std::abs(ppl - static_cast<double>(toy.bpe.size())) / static_cast<double>(toy.bpe.size()) <= 1e-9);
    }
  }

  TEST_CASE("one-hot provider on its own output") {
    const auto model = abcd_model();
    auto hot = [](std::size_t j) {
      std::vector<double> p(5, 0.0);
      p[j] = 1.0;
      return p;
    };
    ScriptedProvider provider({hot(2), hot(3), hot(0)});
    const auto st = generate_zero_bit("", provider, model, 10);
    CHECK(perplexity(st.surface, provider, model) == 1.0);
    CHECK_THROWS_AS(perplexity("a", provider, model), Error);  // "a" has probability 0
  }

  TEST_CASE("perplexity never rises when the realized token gains mass") {
    const auto model = abcd_model();
    std::mt19937_64 rng(4);
    std::uniform_real_distribution<double> u(0.05, 1.0);
    for (int rep = 0; rep < 50; ++rep) {
      std::vector<std::vector<double>> steps(3, std::vector<double>(5));
      for (auto& s : steps) {
        double t = 0;
        for (auto& p : s) t += (p = u(rng));
        for (auto& p : s) p /= t;
      }
      const TokenSeq realized{1, 4, 0};
      ScriptedProvider base(steps);
      const double before = perplexity_of_tokens(realized, base);
      const auto step = static_cast<std::size_t>(rep % 3);
      auto sharper = steps;
      const double boost = 0.5 * (1.0 - sharper[step][realized[step]]);
      for (std::size_t j = 0; j < 5; ++j) {
        if (j == realized[step]) sharper[step][j] += boost;
        else sharper[step][j] *= 1.0 - boost / (1.0 - steps[step][realized[step]]);
      }
      ScriptedProvider sharp(sharper);
      CHECK(perplexity_of_tokens(realized, sharp) <= before + 1e-12);
    }
  }

  TEST_CASE("eval report layout") {
    const auto& toy = Toy::get();
    auto lm = toy.lm;
    std::vector<EvalRow> rows{evaluate_pair(toy.held[0], toy.held[0], 0, lm, toy.bpe),
                              evaluate_pair(toy.held[1], "the man runs .", 4, lm, toy.bpe)};
    CHECK(rows[0].bleu == 1.0);
    std::ostringstream out;
    write_eval_report(out, rows);
    std::istringstream in(out.str());
    std::string header, r0, r1, mean, extra;
    std::getline(in, header);
    std::getline(in, r0);
    std::getline(in, r1);
    std::getline(in, mean);
    CHECK(!std::getline(in, extra));
    CHECK(header == "index\tcover_tokens\tstego_tokens\tembedded_bits\tbpw\tbleu\tppl");
    CHECK(r0.rfind("0\t", 0) == 0);
    CHECK(r0.find("\t1.000000\t") != std::string::npos);
    CHECK(mean.rfind("mean\t", 0) == 0);
    // Aggregate = column means.
    std::istringstream m(mean);
    std::string label;
    double cover, stego, bits, b, bl, p;
    m >> label >> cover >> stego >> bits >> b >> bl >> p;
    CHECK(bits == doctest::Approx(2.0));
    CHECK(bl == doctest::Approx((rows[0].bleu + rows[1].bleu) / 2).epsilon(1e-6));
    CHECK(p == doctest::Approx((rows[0].ppl + rows[1].ppl) / 2).epsilon(1e-6));
  }
}
