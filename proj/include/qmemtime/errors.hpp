#pragma once

#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace qmemtime {

enum class ErrorKind {
  kDimension,
  kValidation,
  kDomain,
  kNotPsd,
  kRank,
  kGrid,
  kPole,
  kTrivialCase,
  kUnphysicalState,
  kNoIsolation,
  kInfeasibleIsolation,
  kInapplicableAsymptote,
  kPrecondition,
  kOptimalityViolation,
  kParse,
  kIo,
};

inline std::string_view to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::kDimension: return "dimension";
    case ErrorKind::kValidation: return "validation";
    case ErrorKind::kDomain: return "domain";
    case ErrorKind::kNotPsd: return "not_psd";
    case ErrorKind::kRank: return "rank";
    case ErrorKind::kGrid: return "grid";
    case ErrorKind::kPole: return "pole";
    case ErrorKind::kTrivialCase: return "trivial_case";
    case ErrorKind::kUnphysicalState: return "unphysical_state";
    case ErrorKind::kNoIsolation: return "no_isolation";
    case ErrorKind::kInfeasibleIsolation: return "infeasible_isolation";
    case ErrorKind::kInapplicableAsymptote: return "inapplicable_asymptote";
    case ErrorKind::kPrecondition: return "precondition";
    case ErrorKind::kOptimalityViolation: return "optimality_violation";
    case ErrorKind::kParse: return "parse";
    case ErrorKind::kIo: return "io";
  }
  return "unknown";
}

/// Every library failure is reported as an Error carrying a kind and,
/// optionally, a list of individual issues (scenario validation collects
/// all of them rather than stopping at the first).
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& message,
        std::vector<std::string> details = {})
      : std::runtime_error(message), kind_(kind), details_(std::move(details)) {}

  ErrorKind kind() const noexcept { return kind_; }
  const std::vector<std::string>& details() const noexcept { return details_; }

 private:
  ErrorKind kind_;
  std::vector<std::string> details_;
};

/// Process exit codes of the command line tool.
namespace exit_code {
inline constexpr int kOk = 0;
inline constexpr int kValidation = 2;
inline constexpr int kNumeric = 3;
inline constexpr int kInfeasibleIsolation = 4;
}  // namespace exit_code

inline int exit_code_for(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::kDimension:
    case ErrorKind::kValidation:
    case ErrorKind::kDomain:
    case ErrorKind::kTrivialCase:
    case ErrorKind::kUnphysicalState:
    case ErrorKind::kParse:
    case ErrorKind::kIo:
      return exit_code::kValidation;
    case ErrorKind::kNoIsolation:
    case ErrorKind::kInfeasibleIsolation:
      return exit_code::kInfeasibleIsolation;
    default:
      return exit_code::kNumeric;
  }
}

}  // namespace qmemtime
