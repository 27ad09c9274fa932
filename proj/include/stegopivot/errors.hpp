#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace stegopivot {

enum class ErrorCode {
  EmptyCorpus,
  UnrepresentableInput,
  UnknownTokenId,
  ParseError,
  EmptyFile,
  BinUnderfilled,
  MissingEos,
  InvariantViolation,
  ProviderUnavailable,
  ContextTooLong,
  EmptyBin,
  PayloadTooLarge,
  RoundTripUnsafe,
  ParamMismatch,
  TruncatedPayload,
  MissingLength,
  BadHeader,
  InvalidStegoToken,
  EmptyCover,
  EmptyInput,
  ZeroProbabilityToken,
  VocabMismatch,
  ProtocolError,
  IoError,
};

std::string_view error_name(ErrorCode code) noexcept;

/// Every failure raised by the library. The code is stable and is what tests
/// and the CLI dispatch on; the message is for humans.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& detail);

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace stegopivot
