#pragma once

#include <stdexcept>
#include <string>

namespace gibbs {

enum class ErrorCode {
  InvalidArgument,
  UnsupportedKind,
  ResolutionTooSmall,
  DiagonalSingularity,
  UnresolvableTestFunction,
  MismatchedSpaces,
  OffSpacePoint,
  HypothesisViolated,
  IntegrabilityFailure,
  DivergentIntegral,
  StepSizeFailure,
  TrappedChain,
  CacheIncoherent,
  CapExceeded,
  Infeasible,
  LowEffectiveSampleSize,
  Unavailable,
  Format,
  Io,
};

const char* to_string(ErrorCode code);

/// Every failure raised by the library carries one of the codes above so
/// callers (the CLI in particular) can map them without string matching.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

[[noreturn]] inline void fail(ErrorCode code, const std::string& what) {
  throw Error(code, what);
}

inline void require(bool ok, ErrorCode code, const std::string& what) {
  if (!ok) throw Error(code, what);
}

}  // namespace gibbs
