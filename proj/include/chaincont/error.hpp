#pragma once

#include <stdexcept>
#include <string>

namespace chaincont {

enum class ErrorCode {
  kOk = 0,
  kInvalidArgument = 1,
  kInsufficientData = 2,
  kOutOfDomain = 3,
  kDegenerateInterval = 4,
  kTruncationFailure = 5,
  kEnumerationOverflow = 6,
  kIo = 7,
};

const char* to_string(ErrorCode code);

// Every failure raised by the library carries one of the codes above so the
// C API can hand it across the boundary without string matching.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace chaincont
