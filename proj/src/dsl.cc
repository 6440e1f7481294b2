#include "causal/dsl.h"

#include <algorithm>
#include <cstdint>
#include <fstream>
#include <map>
#include <sstream>

#include <fmt/format.h>

#include "causal/ident.h"

namespace causal::dsl {

std::string_view parse_error_kind_name(ParseErrorKind kind) {
  switch (kind) {
    case ParseErrorKind::kLexical: return "Lexical";
    case ParseErrorKind::kSyntax: return "Syntax";
    case ParseErrorKind::kSemantic: return "Semantic";
  }
  return "Syntax";
}

ParseError::ParseError(ParseErrorKind kind, SourceSpan span,
                       const std::string& message, ErrorCode semantic_code,
                       std::vector<std::string> subjects)
    : Error(ErrorCode::kParseError,
            fmt::format("{}:{}: {} error: {}", span.line, span.column,
                        parse_error_kind_name(kind), message),
            std::move(subjects)),
      kind_(kind),
      span_(span),
      semantic_code_(semantic_code),
      detail_(message) {}

namespace {

enum class Tok { kIdent, kArrow, kLBrace, kRBrace, kEquals, kSemicolon,
                 kNewline, kString, kEnd };

struct Token {
  Tok kind;
  std::string text;  // identifier name or decoded string literal
  SourceSpan span;
};

std::string describe(const Token& t) {
  switch (t.kind) {
    case Tok::kIdent: return fmt::format("'{}'", t.text);
    case Tok::kArrow: return "'->'";
    case Tok::kLBrace: return "'{'";
    case Tok::kRBrace: return "'}'";
    case Tok::kEquals: return "'='";
    case Tok::kSemicolon: return "';'";
    case Tok::kNewline: return "end of line";
    case Tok::kString: return "string literal";
    case Tok::kEnd: return "end of input";
  }
  return "token";
}

// Length in bytes of a valid UTF-8 sequence starting at s[i], or 0.
std::size_t utf8_sequence_length(std::string_view s, std::size_t i) {
  auto byte = [&](std::size_t k) { return static_cast<unsigned char>(s[k]); };
  unsigned char c = byte(i);
  std::size_t len;
  std::uint32_t cp;
  if (c < 0x80) return 1;
  if ((c & 0xE0) == 0xC0) { len = 2; cp = c & 0x1F; }
  else if ((c & 0xF0) == 0xE0) { len = 3; cp = c & 0x0F; }
  else if ((c & 0xF8) == 0xF0) { len = 4; cp = c & 0x07; }
  else return 0;
  if (i + len > s.size()) return 0;
  for (std::size_t k = 1; k < len; ++k) {
    if ((byte(i + k) & 0xC0) != 0x80) return 0;
    cp = (cp << 6) | (byte(i + k) & 0x3F);
  }
  static constexpr std::uint32_t kMin[] = {0, 0, 0x80, 0x800, 0x10000};
  if (cp < kMin[len] || cp > 0x10FFFF || (cp >= 0xD800 && cp <= 0xDFFF)) {
    return 0;
  }
  return len;
}

class Lexer {
 public:
  explicit Lexer(std::string_view src) : src_(src) {}

  std::vector<Token> run() {
    std::vector<Token> out;
    for (;;) {
      Token t = next();
      out.push_back(t);
      if (t.kind == Tok::kEnd) break;
    }
    return out;
  }

 private:
  Token next() {
    for (;;) {
      if (pos_ >= src_.size()) return make(Tok::kEnd, 0);
      char c = src_[pos_];
      if (c == ' ' || c == '\t' || c == '\r') {
        advance(1);
      } else if (c == '#') {
        while (pos_ < src_.size() && src_[pos_] != '\n') advance(1);
      } else {
        break;
      }
    }
    char c = src_[pos_];
    if (c == '\n') {
      Token t = make(Tok::kNewline, 1);
      ++pos_;
      ++line_;
      col_ = 1;
      return t;
    }
    if (c == '{') return take(Tok::kLBrace, 1);
    if (c == '}') return take(Tok::kRBrace, 1);
    if (c == '=') return take(Tok::kEquals, 1);
    if (c == ';') return take(Tok::kSemicolon, 1);
    if (c == '-') {
      if (pos_ + 1 < src_.size() && src_[pos_ + 1] == '>') {
        return take(Tok::kArrow, 2);
      }
      fail(1, "unexpected '-' (did you mean '->'?)");
    }
    if (c == '"') return string_literal();
    if (is_ident_start(c)) {
      std::size_t end = pos_ + 1;
      while (end < src_.size() && is_ident_char(src_[end])) ++end;
      Token t = make(Tok::kIdent, static_cast<int>(end - pos_));
      t.text = std::string(src_.substr(pos_, end - pos_));
      advance(end - pos_);
      return t;
    }
    unsigned char u = static_cast<unsigned char>(c);
    if (u >= 0x80) {
      fail(1, fmt::format("non-ASCII byte 0x{:02X} outside a label string", u));
    }
    if (u < 0x20 || u == 0x7F) {
      fail(1, fmt::format("unexpected control character 0x{:02X}", u));
    }
    fail(1, fmt::format("unexpected character '{}'", c));
  }

  Token string_literal() {
    const int start_col = col_;
    std::size_t i = pos_ + 1;
    std::string value;
    for (;;) {
      if (i >= src_.size() || src_[i] == '\n') {
        fail(static_cast<int>(i - pos_), "unterminated string literal");
      }
      char c = src_[i];
      if (c == '"') break;
      if (c == '\\') {
        if (i + 1 >= src_.size()) {
          fail(static_cast<int>(i - pos_), "unterminated string literal");
        }
        char e = src_[i + 1];
        switch (e) {
          case '"': value += '"'; break;
          case '\\': value += '\\'; break;
          case 'n': value += '\n'; break;
          case 't': value += '\t'; break;
          default:
            col_ = start_col + static_cast<int>(i - pos_);
            fail(2, fmt::format("invalid escape sequence '\\{}'",
                                e >= 0x20 && e < 0x7F ? std::string(1, e)
                                                      : std::string("?")));
        }
        i += 2;
        continue;
      }
      std::size_t len = utf8_sequence_length(src_, i);
      if (len == 0) {
        col_ = start_col + static_cast<int>(i - pos_);
        fail(1, "invalid UTF-8 in string literal");
      }
      if (len == 1 && (static_cast<unsigned char>(c) < 0x20 || c == 0x7F) &&
          c != '\t') {
        col_ = start_col + static_cast<int>(i - pos_);
        fail(1, "control character in string literal");
      }
      value.append(src_.substr(i, len));
      i += len;
    }
    Token t = make(Tok::kString, static_cast<int>(i + 1 - pos_));
    t.text = std::move(value);
    advance(i + 1 - pos_);
    return t;
  }

  static bool is_ident_start(char c) {
    return (c >= 'A' && c <= 'Z') || (c >= 'a' && c <= 'z') || c == '_';
  }
  static bool is_ident_char(char c) {
    return is_ident_start(c) || (c >= '0' && c <= '9');
  }

  Token make(Tok kind, int length) const {
    return Token{kind, {}, SourceSpan{line_, col_, std::max(length, 1)}};
  }
  Token take(Tok kind, int length) {
    Token t = make(kind, length);
    advance(static_cast<std::size_t>(length));
    return t;
  }
  void advance(std::size_t n) {
    pos_ += n;
    col_ += static_cast<int>(n);
  }
  [[noreturn]] void fail(int length, const std::string& message) const {
    throw ParseError(ParseErrorKind::kLexical,
                     SourceSpan{line_, col_, std::max(length, 1)}, message);
  }

  std::string_view src_;
  std::size_t pos_ = 0;
  int line_ = 1;
  int col_ = 1;
};

struct NodeDecl {
  NodeSpec spec;
  SourceSpan span;
};

struct EdgeDecl {
  Edge edge;
  SourceSpan span;
  SourceSpan from_span;
  SourceSpan to_span;
};

class Parser {
 public:
  explicit Parser(std::vector<Token> tokens) : toks_(std::move(tokens)) {}

  ParseResult run() {
    skip_separators();
    const Token& kw = peek();
    if (kw.kind != Tok::kIdent || kw.text != "dag") {
      syntax(kw, fmt::format("expected 'dag', found {}", describe(kw)));
    }
    ++pos_;
    skip_newlines();
    const Token& name = expect(Tok::kIdent, "a graph name");
    name_span_ = name.span;
    std::string graph_name = name.text;
    skip_newlines();
    expect(Tok::kLBrace, "'{'");
    for (;;) {
      skip_separators();
      const Token& t = peek();
      if (t.kind == Tok::kRBrace) {
        ++pos_;
        break;
      }
      if (t.kind == Tok::kEnd) syntax(t, "expected '}' before end of input");
      statement();
      const Token& after = peek();
      if (after.kind != Tok::kNewline && after.kind != Tok::kSemicolon &&
          after.kind != Tok::kRBrace) {
        syntax(after, fmt::format("expected newline or ';' after statement, "
                                  "found {}",
                                  describe(after)));
      }
    }
    skip_separators();
    if (peek().kind != Tok::kEnd) {
      syntax(peek(), fmt::format("unexpected {} after closing '}}'",
                                 describe(peek())));
    }
    return finish(std::move(graph_name));
  }

 private:
  void statement() {
    const Token& first = peek();
    if (first.kind != Tok::kIdent) {
      syntax(first, fmt::format("expected a node declaration or an edge, "
                                "found {}",
                                describe(first)));
    }
    const Token& second = peek(1);
    if (first.text == "node" && second.kind == Tok::kIdent) {
      node_decl();
    } else if (second.kind == Tok::kArrow) {
      edge_decl();
    } else {
      syntax(second, fmt::format("expected '->' after '{}', found {}",
                                 first.text, describe(second)));
    }
  }

  void node_decl() {
    const Token& kw = toks_[pos_++];
    const Token& name = toks_[pos_++];
    NodeDecl decl;
    decl.spec.name = name.text;
    decl.span = name.span;
    bool seen_role = false, seen_restricted = false, seen_label = false;
    for (;;) {
      const Token& t = peek();
      if (t.kind != Tok::kIdent) break;
      if (t.text == "role") {
        if (seen_role) syntax(t, "duplicate attribute 'role'");
        seen_role = true;
        ++pos_;
        expect(Tok::kEquals, "'=' after 'role'");
        const Token& value = expect(Tok::kIdent, "a role name");
        auto role = parse_role(value.text);
        if (!role) {
          syntax(value, fmt::format("unknown role '{}' (expected treatment, "
                                    "outcome, guardrail, latent or measured)",
                                    value.text));
        }
        decl.spec.role = *role;
      } else if (t.text == "restricted") {
        if (seen_restricted) syntax(t, "duplicate attribute 'restricted'");
        seen_restricted = true;
        ++pos_;
        decl.spec.restricted = true;
      } else if (t.text == "label") {
        if (seen_label) syntax(t, "duplicate attribute 'label'");
        seen_label = true;
        ++pos_;
        expect(Tok::kEquals, "'=' after 'label'");
        decl.spec.label = expect(Tok::kString, "a quoted label").text;
      } else {
        syntax(t, fmt::format("unknown attribute '{}' (expected role, "
                              "restricted or label)",
                              t.text));
      }
    }
    (void)kw;
    nodes_.push_back(std::move(decl));
  }

  void edge_decl() {
    const Token& from = toks_[pos_++];
    ++pos_;  // arrow
    const Token& to = expect(Tok::kIdent, "a node name after '->'");
    EdgeDecl e;
    e.edge = Edge{from.text, to.text};
    e.from_span = from.span;
    e.to_span = to.span;
    e.span = from.span;
    if (to.span.line == from.span.line) {
      e.span.length = to.span.column + to.span.length - from.span.column;
    }
    edges_.push_back(std::move(e));
  }

  ParseResult finish(std::string graph_name) {
    ParseResult result;
    std::map<std::string, const NodeDecl*> declared;
    const NodeDecl* treatment = nullptr;
    const NodeDecl* outcome = nullptr;
    for (const auto& d : nodes_) {
      auto [it, inserted] = declared.emplace(d.spec.name, &d);
      if (!inserted) {
        semantic(d.span, ErrorCode::kDuplicateNode,
                 fmt::format("node '{}' declared twice (first at line {})",
                             d.spec.name, it->second->span.line),
                 {d.spec.name});
      }
      if (d.spec.restricted && (d.spec.role == NodeRole::kTreatment ||
                                d.spec.role == NodeRole::kLatent)) {
        semantic(d.span, ErrorCode::kRoleViolation,
                 fmt::format("{} node '{}' cannot be restricted",
                             role_name(d.spec.role), d.spec.name),
                 {d.spec.name});
      }
      for (auto [role, slot] : {std::pair{NodeRole::kTreatment, &treatment},
                                std::pair{NodeRole::kOutcome, &outcome}}) {
        if (d.spec.role != role) continue;
        if (*slot) {
          semantic(d.span, ErrorCode::kRoleViolation,
                   fmt::format("second {} node '{}' (already '{}')",
                               role_name(role), d.spec.name,
                               (*slot)->spec.name),
                   {d.spec.name});
        }
        *slot = &d;
      }
    }

    std::vector<NodeSpec> specs;
    for (const auto& d : nodes_) specs.push_back(d.spec);
    std::map<std::string, bool> implicit;
    std::map<Edge, SourceSpan> seen_edges;
    std::vector<Edge> edges;
    for (const auto& e : edges_) {
      for (const auto& [name, span] : {std::pair{e.edge.from, e.from_span},
                                       std::pair{e.edge.to, e.to_span}}) {
        if (declared.count(name) || implicit.count(name)) continue;
        implicit[name] = true;
        specs.push_back(NodeSpec{name, NodeRole::kMeasured, false, {}});
        result.warnings.push_back(
            {span, fmt::format("node '{}' implicitly declared with "
                               "role=measured",
                               name)});
      }
      if (!seen_edges.emplace(e.edge, e.span).second) {
        result.warnings.push_back(
            {e.span, fmt::format("duplicate edge {} -> {} ignored", e.edge.from,
                                 e.edge.to)});
      }
      edges.push_back(e.edge);
    }

    try {
      result.dag = build_dag(std::move(specs), std::move(edges),
                             std::move(graph_name));
    } catch (const Error& err) {
      SourceSpan span = name_span_;
      const auto& subj = err.subjects();
      if (err.code() == ErrorCode::kCycleDetected && subj.size() >= 2) {
        auto it = seen_edges.find(Edge{subj[0], subj[1]});
        if (it != seen_edges.end()) span = it->second;
      } else if (!subj.empty()) {
        auto it = declared.find(subj[0]);
        if (it != declared.end()) span = it->second->span;
      }
      semantic(span, err.code(), err.what(), subj);
    }
    return result;
  }

  const Token& peek(std::size_t ahead = 0) const {
    return toks_[std::min(pos_ + ahead, toks_.size() - 1)];
  }
  void skip_newlines() {
    while (peek().kind == Tok::kNewline) ++pos_;
  }
  void skip_separators() {
    while (peek().kind == Tok::kNewline || peek().kind == Tok::kSemicolon) {
      ++pos_;
    }
  }
  const Token& expect(Tok kind, const char* what) {
    const Token& t = peek();
    if (t.kind != kind) {
      syntax(t, fmt::format("expected {}, found {}", what, describe(t)));
    }
    ++pos_;
    return t;
  }
  [[noreturn]] void syntax(const Token& at, const std::string& message) const {
    throw ParseError(ParseErrorKind::kSyntax, at.span, message);
  }
  [[noreturn]] void semantic(SourceSpan span, ErrorCode code,
                             const std::string& message,
                             std::vector<std::string> subjects) const {
    throw ParseError(ParseErrorKind::kSemantic, span, message, code,
                     std::move(subjects));
  }

  std::vector<Token> toks_;
  std::size_t pos_ = 0;
  SourceSpan name_span_;
  std::vector<NodeDecl> nodes_;
  std::vector<EdgeDecl> edges_;
};

std::string quote(std::string_view text) {
  std::string out = "\"";
  for (char c : text) {
    switch (c) {
      case '"': out += "\\\""; break;
      case '\\': out += "\\\\"; break;
      case '\n': out += "\\n"; break;
      case '\t': out += "\\t"; break;
      default: out += c;
    }
  }
  out += '"';
  return out;
}

}  // namespace

ParseResult parse_dag(std::string_view source) {
  return Parser(Lexer(source).run()).run();
}

ParseResult parse_dag_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw Error(ErrorCode::kIoError, fmt::format("cannot read '{}'", path));
  }
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_dag(buf.str());
}

std::string serialize_dag(const CausalDag& dag) {
  std::string out = fmt::format(
      "dag {} {{\n", is_identifier(dag.name()) ? dag.name() : "dag");
  for (const auto& n : dag.nodes()) {
    out += "  node " + n.name;
    if (n.role != NodeRole::kMeasured) {
      out += fmt::format(" role={}", role_name(n.role));
    }
    if (n.restricted) out += " restricted";
    if (n.label) out += " label=" + quote(*n.label);
    out += '\n';
  }
  for (const auto& e : dag.edges()) {
    out += fmt::format("  {} -> {}\n", e.from, e.to);
  }
  out += "}\n";
  return out;
}

std::string to_dot(const CausalDag& dag, const AdjustmentResult* highlight) {
  NameSet adjusted;
  NameSet mediators;
  if (highlight) {
    if (!highlight->minimal_sets.empty()) adjusted = highlight->minimal_sets[0];
    mediators = highlight->mediators;
  }
  std::string out = fmt::format("digraph {} {{\n", quote(dag.name()));
  for (const auto& n : dag.nodes()) {
    std::vector<std::string> attrs;
    std::vector<std::string> styles;
    if (n.role == NodeRole::kTreatment) attrs.push_back("shape=doublecircle");
    if (n.restricted) attrs.push_back("shape=box");
    if (n.role == NodeRole::kOutcome) {
      styles.push_back("bold");
      attrs.push_back("penwidth=2");
    }
    if (n.role == NodeRole::kLatent) styles.push_back("dashed");
    if (adjusted.count(n.name)) {
      styles.push_back("filled");
      attrs.push_back("fillcolor=lightblue");
    } else if (mediators.count(n.name)) {
      styles.push_back("filled");
      attrs.push_back("fillcolor=lightyellow");
    }
    if (!styles.empty()) {
      attrs.push_back("style=" + quote(fmt::format("{}", fmt::join(styles, ","))));
    }
    if (n.label) attrs.push_back("label=" + quote(n.name + "\n" + *n.label));
    out += "  " + quote(n.name);
    if (!attrs.empty()) out += fmt::format(" [{}]", fmt::join(attrs, ", "));
    out += ";\n";
  }
  for (const auto& e : dag.edges()) {
    out += fmt::format("  {} -> {};\n", quote(e.from), quote(e.to));
  }
  out += "}\n";
  return out;
}

}  // namespace causal::dsl
