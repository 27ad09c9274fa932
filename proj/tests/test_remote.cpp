#include <doctest.h>

#include <algorithm>
#include <numeric>
#include <random>
#include <sstream>

#include "cli.hpp"
#include "stegopivot/codec.hpp"
#include "stegopivot/errors.hpp"
#include "stegopivot/remote.hpp"
#include "stub_bridge.hpp"
#include "support.hpp"

using namespace stegopivot;
using nlohmann::json;
using testsupport::StubBridge;

namespace {

template <typename F>
ErrorCode code_of(F&& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("no error raised");
  return ErrorCode::IoError;
}

// Serves a fixed distribution over a vocabulary of size m.
struct FixedBridge {
  std::vector<double> probs;
  std::string hash = "h0";
  int opened = 0;

  json operator()(const json& req) {
    const auto op = req.at("op").get<std::string>();
    if (op == "hello") return {{"vocab_size", probs.size()}, {"vocab_hash", hash}, {"version", 1}};
    if (op == "open") return {{"session", "s" + std::to_string(++opened)}, {"pivot", "p:" + req.at("source").get<std::string>()}};
    if (op == "close") return {{"ok", true}};
    if (req.at("mode") == "dense") return {{"probs", probs}};
    return {{"top", json::array({json::array({2, probs[2]})})}, {"rest_mass", 1.0 - probs[2]}};
  }
};

// Serves the toy model; sparse answers list the top k ids.
struct ToyBridge {
  NgramProvider lm = testsupport::Toy::get().lm;
  std::string hash = testsupport::Toy::get().bpe.vocab_hash();
  std::size_t k = 3;
  std::string source;

  json operator()(const json& req) {
    const auto op = req.at("op").get<std::string>();
    if (op == "hello") return {{"vocab_size", lm.vocab_size()}, {"vocab_hash", hash}};
    if (op == "open") {
      source = req.at("source").get<std::string>();
      return {{"session", 7}};
    }
    if (op == "close") return {{"ok", true}};
    GenerationContext ctx{source, req.at("prefix").get<TokenSeq>()};
    const auto dense = lm.next_distribution(ctx);
    if (req.at("mode") == "dense") return {{"probs", dense.probs}};
    std::vector<TokenId> ids(dense.size());
    std::iota(ids.begin(), ids.end(), TokenId{0});
    std::stable_sort(ids.begin(), ids.end(), [&](TokenId a, TokenId b) { return dense.probs[a] > dense.probs[b]; });
    json top = json::array();
    double listed = 0.0;
    for (std::size_t i = 0; i < k; ++i) {
      top.push_back(json::array({ids[i], dense.probs[ids[i]]}));
      listed += dense.probs[ids[i]];
    }
    return {{"top", top}, {"rest_mass", 1.0 - listed}};
  }
};

}  // namespace

TEST_SUITE("remote") {
  TEST_CASE("address parsing") {
    const auto a = parse_bridge_address("localhost:8765");
    CHECK(a.host == "localhost");
    CHECK(a.port == 8765);
    CHECK(parse_bridge_address("[::1]:9").host == "::1");
    for (const char* bad : {"localhost", ":80", "host:", "host:8x", "host:70000"})
      CHECK(code_of([&] { parse_bridge_address(bad); }) == ErrorCode::ParseError);
  }

  TEST_CASE("dense round trip and the exact request lines") {
    StubBridge stub(FixedBridge{{0.5, 0.25, 0.125, 0.125}});
    {
      RemoteProvider remote(parse_bridge_address(stub.address()));
      CHECK(remote.vocab_size() == 4);
      CHECK(remote.hello().vocab_hash == "h0");
      const auto d = remote.next_distribution({"a b", {}});
      CHECK(d.probs == std::vector<double>{0.5, 0.25, 0.125, 0.125});
      CHECK_FALSE(d.is_sparse());
      CHECK(remote.pivot() == "p:a b");
      remote.next_distribution({"a b", {3, 1}});
      remote.next_distribution({"c", {}});
    }
    const std::vector<std::string> expected{
        R"({"op":"hello","version":1})",
        R"({"op":"open","source":"a b"})",
        R"({"mode":"dense","op":"dist","prefix":[],"session":"s1"})",
        R"({"mode":"dense","op":"dist","prefix":[3,1],"session":"s1"})",
        R"({"op":"close","session":"s1"})",
        R"({"op":"open","source":"c"})",
        R"({"mode":"dense","op":"dist","prefix":[],"session":"s2"})",
        R"({"op":"close","session":"s2"})",
    };
    CHECK(stub.requests() == expected);
  }

  TEST_CASE("sparse responses spread the rest mass") {
    StubBridge stub(FixedBridge{{0.5, 0.25, 0.125, 0.125}});
    RemoteOptions opts;
    opts.mode = SparseMode::Sparse;
    opts.top_k = 1;
    RemoteProvider remote(parse_bridge_address(stub.address()), opts);
    const auto d = remote.next_distribution({"x", {}});
    CHECK(d.listed == std::vector<TokenId>{2});
    CHECK(d.probs[2] == doctest::Approx(0.125));
    for (TokenId id : {0u, 1u, 3u}) CHECK(d.probs[id] == doctest::Approx(0.875 / 3));
    CHECK(remote.dense_distribution({"x", {}}).probs[0] == 0.5);
    CHECK(stub.requests()[2] == R"({"k":1,"mode":"sparse","op":"dist","prefix":[],"session":"s1"})");
  }

  TEST_CASE("codec through a sparse bridge matches the dense model") {
    const auto& toy = testsupport::Toy::get();
    const auto bins = build_sabins(toy.bpe, toy.freqs, toy.synonyms, 2, SecretKey::from_passphrase("remote"));
    StubBridge stub(ToyBridge{});
    RemoteOptions opts;
    opts.mode = SparseMode::Sparse;
    opts.top_k = 3;
    opts.expected_vocab_size = toy.bpe.size();
    opts.expected_vocab_hash = toy.bpe.vocab_hash();
    RemoteProvider remote(parse_bridge_address(stub.address()), opts);
    auto local = toy.lm;
    StegoParams p;
    p.step = 1;
    p.bits_per_token = 2;
    p.framing = Framing::Header32;
    const auto payload = bits_from_string("1100101001110001");
    const auto a = embed(toy.held[2], payload, p, bins, remote, toy.bpe);
    const auto b = embed(toy.held[2], payload, p, bins, local, toy.bpe);
    CHECK(a.tokens == b.tokens);
    CHECK(extract(a.surface, p, bins, toy.bpe) == payload);
    const auto reqs = stub.requests();
    CHECK(std::any_of(reqs.begin(), reqs.end(), [](const std::string& r) { return r.find("\"dense\"") != std::string::npos; }));
  }

  TEST_CASE("vocabulary mismatch") {
    StubBridge stub(FixedBridge{{0.5, 0.5}});
    RemoteOptions size_opts;
    size_opts.expected_vocab_size = 3;
    CHECK(code_of([&] { RemoteProvider r(parse_bridge_address(stub.address()), size_opts); }) == ErrorCode::VocabMismatch);
    RemoteOptions hash_opts;
    hash_opts.expected_vocab_size = 2;
    hash_opts.expected_vocab_hash = "other";
    CHECK(code_of([&] { RemoteProvider r(parse_bridge_address(stub.address()), hash_opts); }) == ErrorCode::VocabMismatch);
  }

  TEST_CASE("protocol errors") {
    SUBCASE("error object") {
      StubBridge stub([](const json& req) -> json {
        if (req["op"] == "hello") return {{"vocab_size", 2}, {"vocab_hash", "h"}};
        return {{"error", "overloaded"}, {"message", "try later"}};
      });
      RemoteProvider remote(parse_bridge_address(stub.address()));
      CHECK(code_of([&] { remote.next_distribution({"x", {}}); }) == ErrorCode::ProtocolError);
    }
    SUBCASE("wrong version") {
      StubBridge stub([](const json&) -> json { return {{"vocab_size", 2}, {"vocab_hash", "h"}, {"version", 2}}; });
      CHECK(code_of([&] { RemoteProvider r(parse_bridge_address(stub.address())); }) == ErrorCode::ProtocolError);
    }
    SUBCASE("handshake without hash") {
      StubBridge stub([](const json&) -> json { return {{"vocab_size", 2}}; });
      CHECK(code_of([&] { RemoteProvider r(parse_bridge_address(stub.address())); }) == ErrorCode::ProtocolError);
    }
    SUBCASE("garbage line") {
      StubBridge stub([](const json&) -> json { return "not json"; });
      CHECK(code_of([&] { RemoteProvider r(parse_bridge_address(stub.address())); }) == ErrorCode::ProtocolError);
    }
    SUBCASE("bad sum and bad length") {
      FixedBridge bad{{0.5, 0.6}};
      StubBridge stub(bad);
      RemoteProvider remote(parse_bridge_address(stub.address()));
      CHECK(code_of([&] { remote.next_distribution({"x", {}}); }) == ErrorCode::ProtocolError);
      StubBridge stub2([](const json& req) -> json {
        if (req["op"] == "hello") return {{"vocab_size", 3}, {"vocab_hash", "h"}};
        if (req["op"] == "open") return {{"session", "a"}};
        return {{"probs", {0.5, 0.5}}};
      });
      RemoteProvider remote2(parse_bridge_address(stub2.address()));
      CHECK(code_of([&] { remote2.next_distribution({"x", {}}); }) == ErrorCode::ProtocolError);
    }
  }

  TEST_CASE("no server") {
    int port = 0;
    {
      StubBridge stub(FixedBridge{{1.0}});
      port = parse_bridge_address(stub.address()).port;
    }
    BridgeAddress addr{"127.0.0.1", static_cast<std::uint16_t>(port)};
    CHECK(code_of([&] { RemoteProvider r(addr); }) == ErrorCode::ProviderUnavailable);
  }

  TEST_CASE("bridge-check command") {
    StubBridge good(FixedBridge{{0.5, 0.25, 0.25}});
    std::ostringstream out, err;
    CHECK(cli::run({"bridge-check", "--provider", "remote:" + good.address()}, out, err) == cli::kExitOk);
    CHECK(out.str().find("vocab_size=3") != std::string::npos);
    CHECK(out.str().find("vocab_hash=h0") != std::string::npos);

    StubBridge bad(FixedBridge{{0.5, 0.25, 0.5}});
    std::ostringstream out2, err2;
    CHECK(cli::run({"bridge-check", "--provider", "remote:" + bad.address()}, out2, err2) == cli::kExitRuntime);
  }
}
