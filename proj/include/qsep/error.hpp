#pragma once

#include <stdexcept>
#include <string>

namespace qsep {

// Failure categories surfaced by the library. Each maps to one documented
// error condition of the public operations.
enum class ErrorCode {
  InvalidMatrix,    // non-finite entries or malformed dimensions
  DimMismatch,      // operands of incompatible dimension
  NotPsd,           // matrix required to be PSD has a significant negative eigenvalue
  SingularSystem,   // linear system numerically singular
  RankMismatch,     // operation requires a specific rank
  InvalidParam,     // scalar parameter out of its documented range
  ProductGamma,     // entangled-kernel encoder called with a product kernel
  EntangledGamma,   // product-kernel encoder called with an entangled kernel
  UnsupportedRank,  // input rank outside the supported dispatch set
  SeparableInput,   // operation undefined for separable decompositions
  WrongCase,        // verifier check applied to the wrong case tag
  InfeasibleStart,  // user-supplied starting point not strictly interior
  CannotCenter,     // no strictly interior point found by the centering search
  NumericalFailure, // solver or extraction failed beyond recoverable tolerance
  IoError,          // file or format problem at the CLI boundary
};

const char* error_code_name(ErrorCode code);

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(std::string(error_code_name(code)) + ": " + message),
        code_(code) {}

  ErrorCode code() const { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace qsep
