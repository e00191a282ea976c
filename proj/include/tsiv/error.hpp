#pragma once

#include <stdexcept>
#include <string>

namespace tsiv {

enum class ErrorCode {
  InvalidInput,
  DegenerateMoments,
  NonPositiveDefiniteWeight,
  OmegaSingular,
  UnsupportedDimension,
  LdNotPsd,
  NoCompliers,
  MonotonicityViolated,
  NoMatches,
  SimulationAborted,
};

const char* to_string(ErrorCode code);

// Every failure the library reports is a tsiv::Error carrying one of the
// codes above; the CLI maps codes onto exit statuses.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(std::string(to_string(code)) + ": " + what),
        code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace tsiv
