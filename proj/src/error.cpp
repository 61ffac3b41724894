#include "gibbslab/error.hpp"

namespace gibbs {

const char* to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::InvalidArgument: return "invalid-argument";
    case ErrorCode::UnsupportedKind: return "unsupported-kind";
    case ErrorCode::ResolutionTooSmall: return "resolution-too-small";
    case ErrorCode::DiagonalSingularity: return "diagonal-singularity";
    case ErrorCode::UnresolvableTestFunction: return "unresolvable-test-function";
    case ErrorCode::MismatchedSpaces: return "mismatched-spaces";
    case ErrorCode::OffSpacePoint: return "off-space-point";
    case ErrorCode::HypothesisViolated: return "hypothesis-violated";
    case ErrorCode::IntegrabilityFailure: return "integrability-failure";
    case ErrorCode::DivergentIntegral: return "divergent-integral";
    case ErrorCode::StepSizeFailure: return "step-size-failure";
    case ErrorCode::TrappedChain: return "trapped-chain";
    case ErrorCode::CacheIncoherent: return "cache-incoherent";
    case ErrorCode::CapExceeded: return "cap-exceeded";
    case ErrorCode::Infeasible: return "infeasible";
    case ErrorCode::LowEffectiveSampleSize: return "low-effective-sample-size";
    case ErrorCode::Unavailable: return "unavailable";
    case ErrorCode::Format: return "format";
    case ErrorCode::Io: return "io";
  }
  return "unknown";
}

}  // namespace gibbs
