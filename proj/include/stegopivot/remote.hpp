#pragma once

// Client side of the bridge wire protocol: newline-delimited JSON objects
// over a TCP stream.
//
//   {"op":"hello","version":1}                -> {"vocab_size":m,"vocab_hash":"..."}
//   {"op":"open","source":"..."}              -> {"session":"..","pivot":".."}
//   {"op":"dist","session":..,"prefix":[..],"mode":"dense"}           -> {"probs":[..]}
//   {"op":"dist","session":..,"prefix":[..],"mode":"sparse","k":50}   -> {"top":[[id,p],..],"rest_mass":r}
//   {"op":"close","session":..}               -> {"ok":true}
//
// Any response may instead be {"error":"<code>","message":".."}.

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>

#include "stegopivot/lm.hpp"

namespace stegopivot {

inline constexpr int kBridgeProtocolVersion = 1;

struct BridgeAddress {
  std::string host;
  std::uint16_t port = 0;
};

/// Parses "host:port" (the part after "remote:").
BridgeAddress parse_bridge_address(std::string_view text);

enum class SparseMode { Dense, Sparse };

struct RemoteOptions {
  SparseMode mode = SparseMode::Dense;
  std::size_t top_k = 50;
  int timeout_ms = 10000;
  /// When set, the handshake must report exactly this vocabulary.
  std::optional<std::size_t> expected_vocab_size;
  std::optional<std::string> expected_vocab_hash;
};

struct BridgeHello {
  std::size_t vocab_size = 0;
  std::string vocab_hash;
};

/// One stateful session against a bridge server. Not thread-safe: one
/// outstanding request at a time. A new source text opens a new session.
class RemoteProvider final : public DistributionProvider {
 public:
  /// Connects and performs the handshake. Throws ProviderUnavailable when
  /// the server cannot be reached, VocabMismatch when the vocabulary differs.
  RemoteProvider(const BridgeAddress& address, RemoteOptions options = {});
  ~RemoteProvider() override;
  RemoteProvider(const RemoteProvider&) = delete;
  RemoteProvider& operator=(const RemoteProvider&) = delete;

  const BridgeHello& hello() const noexcept { return hello_; }
  std::size_t vocab_size() const override { return hello_.vocab_size; }

  Distribution next_distribution(const GenerationContext& ctx) override;
  Distribution dense_distribution(const GenerationContext& ctx) override;

  /// Pivot text of the current session, empty before the first request.
  const std::string& pivot() const noexcept { return pivot_; }

 private:
  std::string request(const std::string& line);
  void ensure_session(const std::string& source);
  Distribution fetch(const GenerationContext& ctx, SparseMode mode);

  int fd_ = -1;
  RemoteOptions options_;
  BridgeHello hello_;
  std::string buffer_;
  std::optional<std::string> session_;
  std::string session_source_;
  std::string pivot_;
};

}  // namespace stegopivot
