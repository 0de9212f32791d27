#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace cqms {

enum class ErrorCode {
  kSyntaxError,
  kUnsupportedFeature,
  kInvalidWeights,
  kInvalidArgument,
  kInvalidMetaQuery,
  kDanglingReference,
  kNotFound,
  kPermissionDenied,
  kDeleted,
  kNoSchema,
  kEmptyQuery,
  kFileNotFound,
  kStoreCorrupt,
  kIoFailure,
  kBindFailure,
};

std::string_view error_code_name(ErrorCode code);

/// Base class for every error raised by the engine. The code is what the
/// service and CLI layers map onto HTTP status codes and exit codes.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(message), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

  /// True for errors caused by the caller's input rather than by the
  /// environment (I/O, corrupt store, bind failures).
  bool is_user_error() const noexcept;

 private:
  ErrorCode code_;
};

class SyntaxError : public Error {
 public:
  SyntaxError(std::size_t position, std::vector<std::string> expected,
              const std::string& detail = {});

  std::size_t position() const noexcept { return position_; }
  const std::vector<std::string>& expected() const noexcept { return expected_; }

 private:
  std::size_t position_;
  std::vector<std::string> expected_;
};

class UnsupportedFeature : public Error {
 public:
  explicit UnsupportedFeature(std::string feature)
      : Error(ErrorCode::kUnsupportedFeature, "unsupported SQL feature: " + feature),
        feature_(std::move(feature)) {}

  const std::string& feature() const noexcept { return feature_; }

 private:
  std::string feature_;
};

}  // namespace cqms
