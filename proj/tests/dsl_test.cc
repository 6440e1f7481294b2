#include <random>

#include <gtest/gtest.h>

#include "causal/dsl.h"
#include "causal/ident.h"
#include "test_support.h"

namespace causal::dsl {
namespace {

using testing_support::fixture_path;

ParseError parse_failure(std::string_view source) {
  try {
    parse_dag(source);
  } catch (const ParseError& e) {
    return e;
  }
  ADD_FAILURE() << "parsed without error: " << source;
  return ParseError(ParseErrorKind::kSyntax, {}, "none");
}

TEST(Parse, ClimateFixture) {
  auto result = parse_dag_file(fixture_path("climate.dag"));
  const auto& dag = result.dag;
  EXPECT_TRUE(result.warnings.empty());
  EXPECT_EQ(dag.name(), "climate");
  EXPECT_EQ(dag.size(), 7u);
  EXPECT_EQ(dag.edges().size(), 11u);
  EXPECT_EQ(dag.treatment(), "SW");
  EXPECT_EQ(dag.outcome(), "EC");
  EXPECT_TRUE(dag.node(dag.index_of("VV")).restricted);
  EXPECT_FALSE(dag.node(dag.index_of("Pref")).observed());
  EXPECT_EQ(dag.node(dag.index_of("VV")).label, "vehicle variant");
}

TEST(Parse, SemicolonsCommentsAndCrLf) {
  auto r = parse_dag("# leading comment\r\ndag g { node T role=treatment; node Y "
                     "role=outcome; T -> Y } # trailing\r\n");
  EXPECT_EQ(r.dag.name(), "g");
  EXPECT_TRUE(r.dag.has_edge("T", "Y"));
}

TEST(Parse, ImplicitNodesWarn) {
  auto r = parse_dag("dag g {\n  A -> B\n}\n");
  ASSERT_EQ(r.warnings.size(), 2u);
  EXPECT_EQ(r.warnings[0].span.line, 2);
  EXPECT_EQ(r.warnings[0].span.column, 3);
  EXPECT_EQ(r.warnings[1].span.column, 8);
  EXPECT_EQ(r.dag.node(0).role, NodeRole::kMeasured);
}

TEST(Parse, DuplicateEdgeWarns) {
  auto r = parse_dag("dag g {\n node A\n node B\n A -> B\n A -> B\n}");
  ASSERT_EQ(r.warnings.size(), 1u);
  EXPECT_EQ(r.warnings[0].span.line, 5);
  EXPECT_EQ(r.dag.edges().size(), 1u);
}

TEST(Parse, StringEscapesAndUtf8Labels) {
  auto r = parse_dag("dag g { node A label=\"say \\\"hi\\\"\\n\\tok\\\\\"; node B "
                     "label=\"Temperatur \xC2\xB0" "C\" }");
  EXPECT_EQ(r.dag.node(0).label, "say \"hi\"\n\tok\\");
  EXPECT_EQ(r.dag.node(1).label, "Temperatur \xC2\xB0" "C");
}

TEST(ParseErrors, CycleIsSemanticWithEdgeSpan) {
  auto e = parse_failure("dag g {\n A -> B\n B -> C\n C -> A\n}");
  EXPECT_EQ(e.kind(), ParseErrorKind::kSemantic);
  EXPECT_EQ(e.semantic_code(), ErrorCode::kCycleDetected);
  EXPECT_EQ(e.code(), ErrorCode::kParseError);
  EXPECT_GE(e.span().line, 2);
  EXPECT_LE(e.span().line, 4);
  EXPECT_EQ(e.subjects().front(), e.subjects().back());
}

TEST(ParseErrors, SyntaxAndLexical) {
  auto missing_brace = parse_failure("dag g {\n A -> B\n");
  EXPECT_EQ(missing_brace.kind(), ParseErrorKind::kSyntax);
  EXPECT_EQ(missing_brace.span().line, 3);

  auto bad_arrow = parse_failure("dag g { A - B }");
  EXPECT_EQ(bad_arrow.kind(), ParseErrorKind::kLexical);
  EXPECT_EQ(bad_arrow.span().column, 11);

  auto open_string = parse_failure("dag g { node A label=\"abc\n }");
  EXPECT_EQ(open_string.kind(), ParseErrorKind::kLexical);

  auto bad_role = parse_failure("dag g { node A role=boss }");
  EXPECT_EQ(bad_role.kind(), ParseErrorKind::kSyntax);
  EXPECT_NE(std::string(bad_role.what()).find("boss"), std::string::npos);

  auto not_dag = parse_failure("graph g { }");
  EXPECT_EQ(not_dag.span().line, 1);
  EXPECT_EQ(not_dag.span().column, 1);

  auto bad_utf8 = parse_failure("dag g { node A label=\"\xC3\x28\" }");
  EXPECT_EQ(bad_utf8.kind(), ParseErrorKind::kLexical);
}

TEST(ParseErrors, SemanticRoles) {
  auto two_treatments =
      parse_failure("dag g { node A role=treatment; node B role=treatment }");
  EXPECT_EQ(two_treatments.semantic_code(), ErrorCode::kRoleViolation);
  auto restricted_latent = parse_failure("dag g { node A role=latent restricted }");
  EXPECT_EQ(restricted_latent.semantic_code(), ErrorCode::kRoleViolation);
  auto dup = parse_failure("dag g {\n node A\n node A\n}");
  EXPECT_EQ(dup.semantic_code(), ErrorCode::kDuplicateNode);
  EXPECT_EQ(dup.span().line, 3);
}

TEST(ParseErrors, MessageCarriesLocation) {
  auto e = parse_failure("dag g {\n  A -> \n}");
  EXPECT_EQ(std::string(e.what()).rfind("2:", 0), 0u) << e.what();
}

TEST(ParseErrors, MissingFileIsIoError) {
  try {
    parse_dag_file("/nonexistent/file.dag");
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kIoError);
  }
}

TEST(Serialize, CanonicalForm) {
  auto dag = parse_dag("dag g { B -> A; node A role=outcome label=\"x\"; node C "
                       "restricted; node B role=treatment }")
                 .dag;
  EXPECT_EQ(serialize_dag(dag),
            "dag g {\n"
            "  node A role=outcome label=\"x\"\n"
            "  node B role=treatment\n"
            "  node C restricted\n"
            "  B -> A\n"
            "}\n");
}

TEST(Serialize, RoundTripsAllFixtures) {
  for (const char* name : {"climate.dag", "climate_transport.dag",
                           "unidentifiable.dag"}) {
    auto dag = parse_dag_file(fixture_path(name)).dag;
    const std::string text = serialize_dag(dag);
    EXPECT_EQ(parse_dag(text).dag, dag) << name;
    EXPECT_EQ(serialize_dag(parse_dag(text).dag), text) << name;
  }
}

TEST(Serialize, RoundTripsRandomDags) {
  std::mt19937_64 rng(11);
  std::uniform_int_distribution<int> role(0, 4);
  for (int rep = 0; rep < 300; ++rep) {
    auto g = testing_support::random_graph(rng, 1 + rep % 9, 0.35);
    std::vector<NodeSpec> nodes;
    bool t = false, y = false;
    for (std::size_t i = 0; i < g.n; ++i) {
      NodeSpec n;
      n.name = testing_support::letter(i);
      switch (role(rng)) {
        case 0: if (!t) { n.role = NodeRole::kTreatment; t = true; } break;
        case 1: if (!y) { n.role = NodeRole::kOutcome; y = true; } break;
        case 2: n.role = NodeRole::kLatent; break;
        case 3: n.restricted = true; break;
        default: n.label = "label \"" + n.name + "\"\n"; break;
      }
      nodes.push_back(n);
    }
    std::vector<Edge> edges;
    for (auto [a, b] : g.edges) {
      edges.push_back({testing_support::letter(a), testing_support::letter(b)});
    }
    auto dag = build_dag(nodes, edges, "r" + std::to_string(rep));
    EXPECT_EQ(parse_dag(serialize_dag(dag)).dag, dag);
  }
}

TEST(Fuzz, RandomInputYieldsDagOrParseError) {
  std::mt19937_64 rng(99);
  int parsed = 0;
  for (int i = 0; i < 10000; ++i) {
    const std::string src = testing_support::random_source(rng);
    try {
      auto dag = parse_dag(src).dag;
      ++parsed;
      EXPECT_EQ(parse_dag(serialize_dag(dag)).dag, dag);
    } catch (const ParseError&) {
    } catch (const std::exception& e) {
      ADD_FAILURE() << "non-parse error " << e.what() << " on input #" << i;
    }
  }
  EXPECT_GT(parsed, 0);
}

TEST(Dot, MarksRolesAndHighlights) {
  auto dag = testing_support::climate();
  auto adj = adjustment_sets(dag, default_query(dag, EffectKind::kControlledDirect));
  const std::string dot = to_dot(dag, &adj);
  EXPECT_EQ(dot.rfind("digraph \"climate\" {\n", 0), 0u);
  EXPECT_NE(dot.find("\"SW\" [shape=doublecircle"), std::string::npos);
  EXPECT_NE(dot.find("\"Pref\" [style=\"dashed\""), std::string::npos);
  EXPECT_NE(dot.find("\"VV\" [shape=box, fillcolor=lightblue, style=\"filled\""),
            std::string::npos)
      << dot;
  EXPECT_NE(dot.find("fillcolor=lightyellow"), std::string::npos);
  EXPECT_NE(dot.find("  \"SW\" -> \"EC\";\n"), std::string::npos);
  EXPECT_EQ(dot.back(), '\n');
}

}  // namespace
}  // namespace causal::dsl
