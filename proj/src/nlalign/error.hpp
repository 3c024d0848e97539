#pragma once

#include <stdexcept>
#include <string>

namespace nlalign {

enum class ErrorCode {
  Domain = 1,         // argument outside the mathematical domain (r < 0, x0 <= 0, ...)
  Parameter,          // invalid model parameter (p <= 1, beta out of range, ...)
  WrongScenario,      // operation called outside the (p, alpha) range it is valid for
  Singular,           // evaluation at a singular point of a power law
  NoTailClass,        // tail constants requested for a kernel without a power tail
  Integration,        // step-size underflow or step budget exhausted
  Config,             // malformed configuration text or sweep config
  Coordinates,        // trajectory / region coordinate mismatch
  Io,                 // file could not be read or written
  Fit,                // not enough usable samples for a rate fit
};

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what) : std::runtime_error(what), code_(code) {}
  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace nlalign
