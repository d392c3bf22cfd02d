// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <stdexcept>
#include <string>

namespace cmag {

/// Failure categories shared by the C++ core and the C API status codes.
enum class ErrorCode {
  domain = 1,       // argument outside the mathematical domain of an operation
  configuration,    // inconsistent or infeasible user configuration
  resource,         // request exceeds a size or enumeration budget
  numeric,          // non-finite intermediate or failed factorization
  infeasible,       // constraint set is empty
  unsupported,      // operation not defined for the given model
  check_failure,    // a verification or bound check did not hold
  io,               // file could not be read, written or parsed
  oracle_failure,   // the exact LP oracle gave up (cycling guard)
};

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what) : std::runtime_error(what), code_(code) {}
  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

[[noreturn]] inline void fail(ErrorCode code, const std::string& what) { throw Error(code, what); }

inline void require(bool cond, ErrorCode code, const std::string& what) {
  if (!cond) fail(code, what);
}

}  // namespace cmag
