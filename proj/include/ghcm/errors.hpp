#pragma once

#include <stdexcept>
#include <string>

namespace ghcm {

enum class ErrorCode {
  kInvalidSpec,
  kKindMismatch,
  kDomainError,
  kTooManyCommunities,
  kDegenerateGrid,
  kInfeasibleRegime,
  kDisconnected,
  kEmptyReference,
  kDistinctnessViolated,
  kMapBudgetExceeded,
  kNotBernoulli,
  kMonotonicityViolated,
  kNotTwoCommunities,
  kFormat,
  kIo,
};

const char* to_string(ErrorCode code);

// Single exception type; callers branch on code().
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace ghcm
