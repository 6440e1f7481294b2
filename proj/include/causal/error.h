#ifndef CAUSAL_ERROR_H_
#define CAUSAL_ERROR_H_

#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace causal {

// Stable error codes. The names returned by error_code_name() are part of the
// CLI JSON output and the HTTP API contract.
enum class ErrorCode {
  kCycleDetected,
  kUnknownEndpoint,
  kDuplicateNode,
  kRoleViolation,
  kUnknownNode,
  kOverlappingArguments,
  kInvalidQuery,
  kInvalidSelectionNode,
  kParseError,
  kRankDeficient,
  kInsufficientData,
  kSeparation,
  kNonNumericColumn,
  kNonCategoricalColumn,
  kEmptyStratum,
  kLengthMismatch,
  kZeroTotal,
  kInvalidArgument,
  kMalformedCsv,
  kEmptyTable,
  kUnknownSchemaColumn,
  kSchemaMismatch,
  kNotCategorical,
  kMissingColumn,
  kNotIdentifiable,
  kMissingStratumColumn,
  kInvalidRatio,
  kPositivityViolation,
  kMethodMismatch,
  kProvenanceMismatch,
  kInvalidSpec,
  kIoError,
};

std::string_view error_code_name(ErrorCode code);

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message,
        std::vector<std::string> subjects = {})
      : std::runtime_error(message),
        code_(code),
        subjects_(std::move(subjects)) {}

  ErrorCode code() const { return code_; }
  std::string_view code_name() const { return error_code_name(code_); }

  // Names the error is about, e.g. the nodes of a detected cycle (first node
  // repeated at the end) or the collinear columns of a rank-deficient fit.
  const std::vector<std::string>& subjects() const { return subjects_; }

 private:
  ErrorCode code_;
  std::vector<std::string> subjects_;
};

}  // namespace causal

#endif  // CAUSAL_ERROR_H_
