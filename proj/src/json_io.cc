#include "causal/json_io.h"

#include <cmath>

#include <fmt/format.h>

namespace causal::json_io {

namespace {

json set_json(const NameSet& s) { return json(std::vector<std::string>(s.begin(), s.end())); }

// NaN and infinities have no JSON spelling; they become null.
json number(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

[[noreturn]] void malformed(const std::string& message) {
  throw Error(ErrorCode::kInvalidArgument, "malformed dag JSON: " + message);
}

}  // namespace

json to_json(const CausalDag& dag) {
  json nodes = json::array();
  for (const auto& n : dag.nodes()) {
    json node{{"name", n.name},
              {"role", role_name(n.role)},
              {"restricted", n.restricted}};
    if (n.label) node["label"] = *n.label;
    nodes.push_back(std::move(node));
  }
  json edges = json::array();
  for (const auto& e : dag.edges()) edges.push_back({e.from, e.to});
  return {{"name", dag.name()}, {"nodes", nodes}, {"edges", edges}};
}

CausalDag dag_from_json(const json& doc) {
  if (!doc.is_object()) malformed("expected an object");
  std::vector<NodeSpec> nodes;
  std::vector<Edge> edges;
  std::string name = "dag";
  try {
    if (doc.contains("name")) name = doc.at("name").get<std::string>();
    if (!doc.contains("nodes") || !doc.at("nodes").is_array()) {
      malformed("\"nodes\" array is required");
    }
    for (const auto& n : doc.at("nodes")) {
      NodeSpec spec;
      spec.name = n.at("name").get<std::string>();
      const std::string role = n.value("role", "measured");
      auto parsed = parse_role(role);
      if (!parsed) malformed(fmt::format("unknown role '{}'", role));
      spec.role = *parsed;
      spec.restricted = n.value("restricted", false);
      if (n.contains("label") && !n.at("label").is_null()) {
        spec.label = n.at("label").get<std::string>();
      }
      nodes.push_back(std::move(spec));
    }
    if (doc.contains("edges")) {
      for (const auto& e : doc.at("edges")) {
        if (e.is_array() && e.size() == 2) {
          edges.push_back({e[0].get<std::string>(), e[1].get<std::string>()});
        } else if (e.is_object()) {
          edges.push_back({e.at("from").get<std::string>(),
                           e.at("to").get<std::string>()});
        } else {
          malformed("edges must be [from, to] pairs");
        }
      }
    }
  } catch (const json::exception& e) {
    malformed(e.what());
  }
  return build_dag(std::move(nodes), std::move(edges), name);
}

json to_json(const dsl::SourceSpan& span) {
  return {{"line", span.line}, {"column", span.column}, {"length", span.length}};
}

json to_json(const std::vector<dsl::Warning>& warnings) {
  json out = json::array();
  for (const auto& w : warnings) {
    out.push_back({{"message", w.message}, {"span", to_json(w.span)}});
  }
  return out;
}

json error_to_json(const Error& error) {
  json out;
  if (const auto* pe = dynamic_cast<const dsl::ParseError*>(&error)) {
    out["code"] = std::string(error_code_name(pe->semantic_code()));
    out["kind"] = std::string(dsl::parse_error_kind_name(pe->kind()));
    out["message"] = pe->detail();
    out["span"] = to_json(pe->span());
  } else {
    out["code"] = std::string(error.code_name());
    out["message"] = error.what();
  }
  if (!error.subjects().empty()) out["subjects"] = error.subjects();
  return out;
}

json to_json(const EffectQuery& query) {
  return {{"treatment", query.treatment},
          {"outcome", query.outcome},
          {"effect", effect_kind_name(query.kind)}};
}

json to_json(const PathReport& path) {
  return {{"path", path.to_string()},
          {"nodes", path.nodes},
          {"kind", path_kind_name(path.kind)},
          {"open", path.open()},
          {"blocked_by", set_json(path.blocked_by)}};
}

json to_json(const AdjustmentResult& result) {
  json sets = json::array();
  for (const auto& s : result.minimal_sets) sets.push_back(set_json(s));
  json out{{"query", to_json(result.query)},
           {"identifiable", result.identifiable},
           {"minimal_sets", sets},
           {"truncated", result.truncated}};
  if (result.query.kind == EffectKind::kControlledDirect) {
    out["mediators"] = set_json(result.mediators);
    out["conditioning_set"] = result.identifiable
                                  ? set_json(result.conditioning_set())
                                  : json(nullptr);
  }
  return out;
}

json to_json(const std::vector<ImpliedIndependence>& implications) {
  json out = json::array();
  for (const auto& i : implications) {
    out.push_back({{"x", i.x},
                   {"y", i.y},
                   {"given", set_json(i.given)},
                   {"text", i.to_string()}});
  }
  return out;
}

json to_json(const TransportVerdict& verdict) {
  json out{{"verdict", transport_verdict_name(verdict)}};
  if (const auto* a = std::get_if<TransportableByAdjustment>(&verdict)) {
    out["adjustment"] = set_json(a->adjustment);
  }
  return out;
}

json to_json(const stats::TestResult& result) {
  return {{"statistic", number(result.statistic)},
          {"p_value", number(result.p_value)},
          {"dof_or_n", result.dof_or_n},
          {"method", stats::test_method_name(result.method)},
          {"warnings", result.warnings}};
}

json to_json(const LoadReport& report) {
  return {{"rows_read", report.rows_read},
          {"dropped", report.dropped},
          {"decisions", report.decisions},
          {"warnings", report.warnings}};
}

json schema_json(const DataTable& table) {
  json out = json::array();
  for (const auto& c : table.columns()) {
    json col{{"name", c.name}, {"type", column_type_name(c.type)}};
    if (c.categorical()) col["levels"] = c.levels;
    out.push_back(std::move(col));
  }
  return out;
}

json to_json(const design::AssignmentPlan& plan) {
  return {{"query", to_json(plan.query)},
          {"strata_by", set_json(plan.strata_by)},
          {"adjustment", set_json(plan.adjustment)},
          {"ratio", {plan.ratio.treatment, plan.ratio.control}},
          {"seed", plan.seed}};
}

json to_json(const design::ValidityReport& report) {
  json outcomes = json::array();
  for (const auto& o : report.outcomes) {
    json row{{"kind", design::check_kind_name(o.check.kind)},
             {"target", o.check.target},
             {"expected", o.check.expected},
             {"executed", o.executed}};
    if (!o.stratum.empty()) row["stratum"] = o.stratum;
    if (o.executed) {
      row["result"] = to_json(o.result);
      row["adjusted_p"] = number(o.adjusted_p);
      row["passed"] = o.passed;
    } else {
      row["skipped_reason"] = o.skipped_reason;
    }
    outcomes.push_back(std::move(row));
  }
  return {{"alpha", report.alpha},
          {"passed", report.passed},
          {"failures", report.failures},
          {"checks", outcomes}};
}

json to_json(const design::PositivityReport& report) {
  json strata = json::array();
  for (const auto& s : report.strata) {
    strata.push_back(
        {{"stratum", s.stratum}, {"treated", s.treated}, {"control", s.control}});
  }
  return {{"passed", report.passed()},
          {"strata", strata},
          {"violations", report.violations},
          {"warnings", report.warnings}};
}

json to_json(const analysis::EffectEstimate& e) {
  json out{{"effect", analysis::estimate_kind_name(e.kind)},
           {"estimate", number(e.estimate)},
           {"std_error", e.std_error ? number(*e.std_error) : json(nullptr)},
           {"method", analysis::method_name(e.method)},
           {"adjustment", set_json(e.adjustment)},
           {"n_used", e.n_used},
           {"provenance", fmt::format("{:016x}", e.provenance)},
           {"warnings", e.warnings}};
  if (e.kind != analysis::EstimateKind::kTotal) {
    out["mediators"] = set_json(e.mediators);
  }
  if (e.method == analysis::Method::kIpw) out["clipped"] = e.clipped;
  return out;
}

json to_json(const analysis::MapValidationReport& report) {
  json checks = json::array();
  for (const auto& c : report.checks) {
    json row{{"x", c.implication.x},
             {"y", c.implication.y},
             {"given", set_json(c.implication.given)},
             {"text", c.implication.to_string()},
             {"verdict", analysis::verdict_name(c.verdict)}};
    if (c.result) {
      row["result"] = to_json(*c.result);
      row["adjusted_p"] = number(c.adjusted_p);
    } else {
      row["reason"] = c.reason;
    }
    checks.push_back(std::move(row));
  }
  return {{"alpha", report.alpha},
          {"summary",
           {{"consistent", report.consistent},
            {"violated", report.violated},
            {"untestable", report.untestable}}},
          {"checks", checks}};
}

}  // namespace causal::json_io
