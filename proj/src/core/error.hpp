#pragma once

#include <stdexcept>
#include <string>

namespace pql {

enum class ErrorCode {
  InvalidArgument = 1,
  Domain = 2,
  Precondition = 3,
  Numerical = 4,
  Configuration = 5,
  Io = 6,
  Usage = 7,
  RankDeficient = 8,
  PoleProximity = 9,
  FamilyDeficient = 10,
  DataTooLarge = 11,
  EmptyTable = 12,
};

const char* error_code_name(ErrorCode code);

/// Every failure raised by the library carries one of the codes above.
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

inline void require(bool condition, ErrorCode code, const std::string& message) {
  if (!condition) fail(code, message);
}

}  // namespace pql
