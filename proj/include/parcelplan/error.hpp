#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace parcelplan {

enum class ErrorCode {
  Parse,
  Validation,
  Config,
  Lookup,
  Domain,
  Aggregation,
  Contract,
  Dimension,
  MissingModel,
  Io,
};

// Stable identifier printed by the CLI ("E_PARSE", "E_CONFIG", ...).
std::string_view error_code_name(ErrorCode code);

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

}  // namespace parcelplan
