#include "cqms/error.hpp"

namespace cqms {

std::string_view error_code_name(ErrorCode code) {
  switch (code) {
    case ErrorCode::kSyntaxError: return "SyntaxError";
    case ErrorCode::kUnsupportedFeature: return "UnsupportedFeature";
    case ErrorCode::kInvalidWeights: return "InvalidWeights";
    case ErrorCode::kInvalidArgument: return "InvalidArgument";
    case ErrorCode::kInvalidMetaQuery: return "InvalidMetaQuery";
    case ErrorCode::kDanglingReference: return "DanglingReference";
    case ErrorCode::kNotFound: return "NotFound";
    case ErrorCode::kPermissionDenied: return "PermissionDenied";
    case ErrorCode::kDeleted: return "Deleted";
    case ErrorCode::kNoSchema: return "NoSchema";
    case ErrorCode::kEmptyQuery: return "EmptyQuery";
    case ErrorCode::kFileNotFound: return "FileNotFound";
    case ErrorCode::kStoreCorrupt: return "StoreCorrupt";
    case ErrorCode::kIoFailure: return "IOFailure";
    case ErrorCode::kBindFailure: return "BindFailure";
  }
  return "Unknown";
}

bool Error::is_user_error() const noexcept {
  switch (code_) {
    case ErrorCode::kStoreCorrupt:
    case ErrorCode::kIoFailure:
    case ErrorCode::kBindFailure:
      return false;
    default:
      return true;
  }
}

namespace {

std::string describe(std::size_t position, const std::vector<std::string>& expected,
                     const std::string& detail) {
  std::string msg = "syntax error at offset " + std::to_string(position);
  if (!expected.empty()) {
    msg += ": expected ";
    for (std::size_t i = 0; i < expected.size(); ++i) {
      if (i) msg += i + 1 == expected.size() ? " or " : ", ";
      msg += expected[i];
    }
  }
  if (!detail.empty()) msg += " (" + detail + ")";
  return msg;
}

}  // namespace

SyntaxError::SyntaxError(std::size_t position, std::vector<std::string> expected,
                         const std::string& detail)
    : Error(ErrorCode::kSyntaxError, describe(position, expected, detail)),
      position_(position),
      expected_(std::move(expected)) {}

}  // namespace cqms
