#pragma once

#include <stdexcept>
#include <string>

namespace optlab {

// Error taxonomy shared by the C++ core and the C API surface.
enum class Status {
  Ok = 0,
  ArgumentError,    // bad sizes, unknown names, invalid options
  DomainError,      // non-finite or out-of-domain numeric input
  ConfigError,      // malformed or unknown config keys/values
  CheckpointError,  // unreadable/corrupt checkpoint or archive
  DataError,        // incomplete or inconsistent result data
  NumericError,     // invariant violated at runtime (NaN, broken audit)
  IoError,          // filesystem failures
  InternalError,
};

class Error : public std::runtime_error {
 public:
  Error(Status status, const std::string& msg)
      : std::runtime_error(msg), status_(status) {}
  Status status() const { return status_; }

 private:
  Status status_;
};

[[noreturn]] inline void fail(Status status, const std::string& msg) {
  throw Error(status, msg);
}

inline void require(bool cond, Status status, const std::string& msg) {
  if (!cond) fail(status, msg);
}

}  // namespace optlab
