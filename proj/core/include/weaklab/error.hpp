#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace weaklab {

// Failure categories surface unchanged on the command line as
// "error: <category>: <message>", so names here are part of the CLI contract.
enum class ErrorCategory {
  kConfig,      // invalid or missing configuration
  kIo,          // filesystem failures
  kFormat,      // malformed container or text record
  kData,        // input violates an operation precondition
  kDivergence,  // non-finite loss during training
  kConflict,    // annotation already finalized
  kNotFound,
};

std::string_view category_name(ErrorCategory category);
int exit_code(ErrorCategory category);

class Error : public std::runtime_error {
 public:
  Error(ErrorCategory category, const std::string& message)
      : std::runtime_error(message), category_(category) {}

  ErrorCategory category() const { return category_; }

 private:
  ErrorCategory category_;
};

[[noreturn]] inline void fail(ErrorCategory category, const std::string& message) {
  throw Error(category, message);
}

inline void require(bool condition, ErrorCategory category, const std::string& message) {
  if (!condition) fail(category, message);
}

}  // namespace weaklab
