#include "stegopivot/remote.hpp"

#include <netdb.h>
#include <poll.h>
#include <sys/socket.h>
#include <unistd.h>

#include <cerrno>
#include <cstring>
#include <json.hpp>

#include "stegopivot/errors.hpp"

namespace stegopivot {
namespace {

using nlohmann::json;

int connect_tcp(const BridgeAddress& address) {
  addrinfo hints{};
  hints.ai_family = AF_UNSPEC;
  hints.ai_socktype = SOCK_STREAM;
  addrinfo* found = nullptr;
  const auto port = std::to_string(address.port);
  if (getaddrinfo(address.host.c_str(), port.c_str(), &hints, &found) != 0 || found == nullptr)
    throw Error(ErrorCode::ProviderUnavailable, "cannot resolve " + address.host);
  int fd = -1;
  for (addrinfo* ai = found; ai != nullptr; ai = ai->ai_next) {
    fd = ::socket(ai->ai_family, ai->ai_socktype, ai->ai_protocol);
    if (fd < 0) continue;
    if (::connect(fd, ai->ai_addr, ai->ai_addrlen) == 0) break;
    ::close(fd);
    fd = -1;
  }
  freeaddrinfo(found);
  if (fd < 0)
    throw Error(ErrorCode::ProviderUnavailable,
                "cannot connect to " + address.host + ":" + port + " (" + std::strerror(errno) + ")");
  return fd;
}

json parse_response(const std::string& line) {
  json body;
  try {
    body = json::parse(line);
  } catch (const json::exception& e) {
    throw Error(ErrorCode::ProtocolError, std::string("unparseable response: ") + e.what());
  }
  if (!body.is_object()) throw Error(ErrorCode::ProtocolError, "response is not an object");
  if (body.contains("error")) {
    throw Error(ErrorCode::ProtocolError,
                body["error"].dump() + (body.contains("message") ? " " + body["message"].dump() : ""));
  }
  return body;
}

}  // namespace

BridgeAddress parse_bridge_address(std::string_view text) {
  const auto colon = text.rfind(':');
  if (colon == std::string_view::npos || colon == 0 || colon + 1 == text.size())
    throw Error(ErrorCode::ParseError, "bridge address must be host:port");
  BridgeAddress out;
  out.host = std::string(text.substr(0, colon));
  if (out.host.size() > 2 && out.host.front() == '[' && out.host.back() == ']')
    out.host = out.host.substr(1, out.host.size() - 2);
  const auto port_text = text.substr(colon + 1);
  unsigned long port = 0;
  for (char c : port_text) {
    if (c < '0' || c > '9') throw Error(ErrorCode::ParseError, "bad port");
    port = port * 10 + static_cast<unsigned long>(c - '0');
    if (port > 65535) throw Error(ErrorCode::ParseError, "bad port");
  }
  out.port = static_cast<std::uint16_t>(port);
  return out;
}

RemoteProvider::RemoteProvider(const BridgeAddress& address, RemoteOptions options)
    : options_(std::move(options)) {
  fd_ = connect_tcp(address);
  try {
    auto body = parse_response(request(json{{"op", "hello"}, {"version", kBridgeProtocolVersion}}.dump()));
    if (!body.contains("vocab_size") || !body["vocab_size"].is_number_unsigned() || !body.contains("vocab_hash") ||
        !body["vocab_hash"].is_string())
      throw Error(ErrorCode::ProtocolError, "handshake lacks vocab_size/vocab_hash");
    if (body.contains("version") && body["version"] != kBridgeProtocolVersion)
      throw Error(ErrorCode::ProtocolError, "protocol version mismatch");
    hello_.vocab_size = body["vocab_size"].get<std::size_t>();
    hello_.vocab_hash = body["vocab_hash"].get<std::string>();
    if (hello_.vocab_size == 0) throw Error(ErrorCode::ProtocolError, "empty vocabulary");
    if (options_.expected_vocab_size && *options_.expected_vocab_size != hello_.vocab_size)
      throw Error(ErrorCode::VocabMismatch, "bridge reports " + std::to_string(hello_.vocab_size) + " tokens");
    if (options_.expected_vocab_hash && *options_.expected_vocab_hash != hello_.vocab_hash)
      throw Error(ErrorCode::VocabMismatch, "bridge vocabulary hash differs");
  } catch (...) {
    ::close(fd_);
    fd_ = -1;
    throw;
  }
}

RemoteProvider::~RemoteProvider() {
  if (fd_ < 0) return;
  if (session_) {
    try {
      request(json{{"op", "close"}, {"session", *session_}}.dump());
    } catch (const Error&) {
    }
  }
  ::close(fd_);
}

std::string RemoteProvider::request(const std::string& line) {
  std::string out = line + "\n";
  std::size_t sent = 0;
  while (sent < out.size()) {
    const auto n = ::send(fd_, out.data() + sent, out.size() - sent, MSG_NOSIGNAL);
    if (n <= 0) throw Error(ErrorCode::ProviderUnavailable, "connection lost while sending");
    sent += static_cast<std::size_t>(n);
  }
  for (;;) {
    const auto nl = buffer_.find('\n');
    if (nl != std::string::npos) {
      std::string response = buffer_.substr(0, nl);
      buffer_.erase(0, nl + 1);
      return response;
    }
    pollfd pfd{fd_, POLLIN, 0};
    const int ready = ::poll(&pfd, 1, options_.timeout_ms);
    if (ready <= 0) throw Error(ErrorCode::ProviderUnavailable, "bridge did not answer in time");
    char chunk[65536];
    const auto n = ::recv(fd_, chunk, sizeof chunk, 0);
    if (n <= 0) throw Error(ErrorCode::ProviderUnavailable, "connection closed by bridge");
    buffer_.append(chunk, static_cast<std::size_t>(n));
  }
}

void RemoteProvider::ensure_session(const std::string& source) {
  if (session_ && session_source_ == source) return;
  if (session_) {
    parse_response(request(json{{"op", "close"}, {"session", *session_}}.dump()));
    session_.reset();
  }
  auto body = parse_response(request(json{{"op", "open"}, {"source", source}}.dump()));
  if (!body.contains("session")) throw Error(ErrorCode::ProtocolError, "open response lacks session");
  session_ = body["session"].is_string() ? body["session"].get<std::string>() : body["session"].dump();
  session_source_ = source;
  pivot_ = body.contains("pivot") && body["pivot"].is_string() ? body["pivot"].get<std::string>() : "";
}

Distribution RemoteProvider::fetch(const GenerationContext& ctx, SparseMode mode) {
  ensure_session(ctx.source);
  json req{{"op", "dist"}, {"session", *session_}, {"prefix", ctx.prefix}};
  if (mode == SparseMode::Sparse) {
    req["mode"] = "sparse";
    req["k"] = options_.top_k;
  } else {
    req["mode"] = "dense";
  }
  auto body = parse_response(request(req.dump()));
  const std::size_t m = hello_.vocab_size;
  Distribution dist;
  try {
    if (body.contains("probs")) {
      dist.probs = body["probs"].get<std::vector<double>>();
      if (dist.probs.size() != m) throw Error(ErrorCode::ProtocolError, "dense response has wrong length");
    } else if (body.contains("top")) {
      dist.probs.assign(m, 0.0);
      std::vector<bool> seen(m, false);
      double listed_mass = 0.0;
      for (const auto& entry : body["top"]) {
        const auto id = entry.at(0).get<std::size_t>();
        const auto p = entry.at(1).get<double>();
        if (id >= m || seen[id]) throw Error(ErrorCode::ProtocolError, "bad sparse entry");
        seen[id] = true;
        dist.probs[id] = p;
        dist.listed.push_back(static_cast<TokenId>(id));
        listed_mass += p;
      }
      const double rest = body.value("rest_mass", 1.0 - listed_mass);
      const std::size_t unlisted = m - dist.listed.size();
      if (unlisted > 0) {
        const double share = rest / static_cast<double>(unlisted);
        for (std::size_t id = 0; id < m; ++id) {
          if (!seen[id]) dist.probs[id] = share;
        }
      }
      if (dist.listed.size() == m) dist.listed.clear();
    } else {
      throw Error(ErrorCode::ProtocolError, "dist response has neither probs nor top");
    }
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::ProtocolError, e.what());
  }
  try {
    dist.validate(1e-6);
  } catch (const Error& e) {
    throw Error(ErrorCode::ProtocolError, e.what());
  }
  return dist;
}

Distribution RemoteProvider::next_distribution(const GenerationContext& ctx) {
  return fetch(ctx, options_.mode);
}

Distribution RemoteProvider::dense_distribution(const GenerationContext& ctx) {
  return fetch(ctx, SparseMode::Dense);
}

}  // namespace stegopivot
