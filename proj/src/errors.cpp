#include "stegopivot/errors.hpp"

namespace stegopivot {

std::string_view error_name(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::EmptyCorpus: return "EmptyCorpus";
    case ErrorCode::UnrepresentableInput: return "UnrepresentableInput";
    case ErrorCode::UnknownTokenId: return "UnknownTokenId";
    case ErrorCode::ParseError: return "ParseError";
    case ErrorCode::EmptyFile: return "EmptyFile";
    case ErrorCode::BinUnderfilled: return "BinUnderfilled";
    case ErrorCode::MissingEos: return "MissingEos";
    case ErrorCode::InvariantViolation: return "InvariantViolation";
    case ErrorCode::ProviderUnavailable: return "ProviderUnavailable";
    case ErrorCode::ContextTooLong: return "ContextTooLong";
    case ErrorCode::EmptyBin: return "EmptyBin";
    case ErrorCode::PayloadTooLarge: return "PayloadTooLarge";
    case ErrorCode::RoundTripUnsafe: return "RoundTripUnsafe";
    case ErrorCode::ParamMismatch: return "ParamMismatch";
    case ErrorCode::TruncatedPayload: return "TruncatedPayload";
    case ErrorCode::MissingLength: return "MissingLength";
    case ErrorCode::BadHeader: return "BadHeader";
    case ErrorCode::InvalidStegoToken: return "InvalidStegoToken";
    case ErrorCode::EmptyCover: return "EmptyCover";
    case ErrorCode::EmptyInput: return "EmptyInput";
    case ErrorCode::ZeroProbabilityToken: return "ZeroProbabilityToken";
    case ErrorCode::VocabMismatch: return "VocabMismatch";
    case ErrorCode::ProtocolError: return "ProtocolError";
    case ErrorCode::IoError: return "IoError";
  }
  return "Unknown";
}

Error::Error(ErrorCode code, const std::string& detail)
    : std::runtime_error(std::string(error_name(code)) + ": " + detail), code_(code) {}

}  // namespace stegopivot
