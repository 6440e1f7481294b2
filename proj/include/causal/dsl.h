#ifndef CAUSAL_DSL_H_
#define CAUSAL_DSL_H_

#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "causal/core.h"
#include "causal/error.h"

namespace causal {

struct AdjustmentResult;

namespace dsl {

// 1-based line/column (byte offsets within the line) and a length >= 1.
struct SourceSpan {
  int line = 1;
  int column = 1;
  int length = 1;

  friend bool operator==(const SourceSpan&, const SourceSpan&) = default;
};

enum class ParseErrorKind { kLexical, kSyntax, kSemantic };

std::string_view parse_error_kind_name(ParseErrorKind kind);

// Parse failure. Semantic errors carry the ErrorCode reported by build_dag
// (e.g. kCycleDetected) as semantic_code().
class ParseError : public Error {
 public:
  ParseError(ParseErrorKind kind, SourceSpan span, const std::string& message,
             ErrorCode semantic_code = ErrorCode::kParseError,
             std::vector<std::string> subjects = {});

  ParseErrorKind kind() const { return kind_; }
  const SourceSpan& span() const { return span_; }
  ErrorCode semantic_code() const { return semantic_code_; }
  // Message without the location prefix.
  const std::string& detail() const { return detail_; }

 private:
  ParseErrorKind kind_;
  SourceSpan span_;
  ErrorCode semantic_code_;
  std::string detail_;
};

struct Warning {
  SourceSpan span;
  std::string message;
};

struct ParseResult {
  CausalDag dag;
  std::vector<Warning> warnings;
};

// Grammar:
//   dag       := "dag" IDENT "{" stmt* "}"
//   stmt      := node_decl | edge_decl      (separated by newline or ';')
//   node_decl := "node" IDENT attr*
//   attr      := "role" "=" ROLE | "restricted" | "label" "=" STRING
//   edge_decl := IDENT "->" IDENT
// '#' starts a line comment. Nodes referenced only by edges are declared
// implicitly as measured, with a warning. Throws ParseError.
ParseResult parse_dag(std::string_view source);

// Canonical text: nodes (by name) then edges (by from, to), LF line endings.
std::string serialize_dag(const CausalDag& dag);

// Graphviz DOT. Latent nodes dashed, treatment double circle, outcome bold,
// restricted nodes boxed, and members of the first adjustment set (plus
// mediators) filled when a highlight is given.
std::string to_dot(const CausalDag& dag,
                   const AdjustmentResult* highlight = nullptr);

// Reads a .dag file. Throws Error(kIoError) when unreadable.
ParseResult parse_dag_file(const std::string& path);

}  // namespace dsl
}  // namespace causal

#endif  // CAUSAL_DSL_H_
