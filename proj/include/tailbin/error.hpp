#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace tailbin {

enum class ErrorCode {
  kInvalidParameter,
  kEmptyData,
  kInsufficientData,
  kInsufficientTail,
  kDegenerateTail,
  kDomain,
  kInfeasible,
  kConeViolation,
  kDegenerateVariance,
  kFlatLikelihood,
  kEffectiveSample,
  kMissingUnit,
  kAlignment,
  kDegenerateOutcome,
  kDegenerateDesign,
  kDegenerateData,
  kNoContributingUnits,
};

std::string_view to_string(ErrorCode code);

// Estimation-layer failure. The CLI maps these to exit code 4.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

inline std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::kInvalidParameter: return "invalid parameter";
    case ErrorCode::kEmptyData: return "empty data";
    case ErrorCode::kInsufficientData: return "insufficient data";
    case ErrorCode::kInsufficientTail: return "insufficient tail";
    case ErrorCode::kDegenerateTail: return "degenerate tail";
    case ErrorCode::kDomain: return "domain error";
    case ErrorCode::kInfeasible: return "infeasible";
    case ErrorCode::kConeViolation: return "cone violation";
    case ErrorCode::kDegenerateVariance: return "degenerate variance";
    case ErrorCode::kFlatLikelihood: return "flat likelihood";
    case ErrorCode::kEffectiveSample: return "effective sample";
    case ErrorCode::kMissingUnit: return "missing unit";
    case ErrorCode::kAlignment: return "alignment error";
    case ErrorCode::kDegenerateOutcome: return "degenerate outcome";
    case ErrorCode::kDegenerateDesign: return "degenerate design";
    case ErrorCode::kDegenerateData: return "degenerate data";
    case ErrorCode::kNoContributingUnits: return "no contributing units";
  }
  return "error";
}

}  // namespace tailbin
