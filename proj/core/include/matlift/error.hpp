#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace matlift {

enum class ErrorCode {
  kInvalidArgument,
  kEmptyInput,
  kParse,
  kIndexOutOfRange,
  kNotFound,
  kIo,
  kUnselectable,
  kBackgroundClick,
  kConflict,
};

std::string_view to_string(ErrorCode code);

/// Single exception type for the engine; `code()` lets callers map failures
/// to exit codes or HTTP statuses without string matching.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(message), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

[[noreturn]] inline void fail(ErrorCode code, const std::string& message) {
  throw Error(code, message);
}

}  // namespace matlift
