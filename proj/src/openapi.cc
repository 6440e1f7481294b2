#include "causal/service.h"

namespace causal::service {

using nlohmann::json;

namespace {

json ref(const std::string& name) {
  return {{"$ref", "#/components/schemas/" + name}};
}

json json_body(json schema) {
  return {{"required", true},
          {"content", {{"application/json", {{"schema", std::move(schema)}}}}}};
}

json reply(const std::string& description, json schema) {
  return {{"description", description},
          {"content", {{"application/json", {{"schema", std::move(schema)}}}}}};
}

json error_replies(std::initializer_list<int> statuses) {
  json out = json::object();
  for (int s : statuses) {
    const char* text = s == 400   ? "Malformed request"
                       : s == 404 ? "Unknown dataset or route"
                       : s == 413 ? "Dataset too large"
                                  : "Operation failed";
    out[std::to_string(s)] = reply(text, ref("ApiError"));
  }
  return out;
}

json operation(const std::string& summary, json request, json ok,
               std::initializer_list<int> errors) {
  json responses = error_replies(errors);
  responses["200"] = reply("Success", std::move(ok));
  json op{{"summary", summary}, {"responses", responses}};
  if (!request.is_null()) op["requestBody"] = json_body(std::move(request));
  return op;
}

json object(json properties, std::vector<std::string> required = {}) {
  json out{{"type", "object"}, {"properties", std::move(properties)}};
  if (!required.empty()) out["required"] = required;
  return out;
}

const json kString = {{"type", "string"}};
const json kNumber = {{"type", "number"}};
const json kInteger = {{"type", "integer"}};
const json kBool = {{"type", "boolean"}};
const json kNames = {{"type", "array"}, {"items", {{"type", "string"}}}};

}  // namespace

json openapi() {
  const json dag_field = {
      {"oneOf", {{{"type", "string"}, {"description", "DAG source text"}},
                 ref("Dag")}}};
  const json query_fields = {{"dag", dag_field},
                             {"treatment", kString},
                             {"outcome", kString}};

  json schemas;
  schemas["ApiError"] = object(
      {{"code", {{"type", "string"},
                 {"description",
                  "Module error name (CycleDetected, UnknownNode, ...) or "
                  "BadRequest, UnknownDataset, TooLarge, NotFound"}}},
       {"message", kString},
       {"kind", kString},
       {"subjects", kNames},
       {"span", ref("Span")}},
      {"code", "message"});
  schemas["Span"] = object(
      {{"line", kInteger}, {"column", kInteger}, {"length", kInteger}});
  schemas["Dag"] = object(
      {{"name", kString},
       {"nodes",
        {{"type", "array"},
         {"items",
          object({{"name", kString},
                  {"role", {{"type", "string"},
                            {"enum", {"treatment", "outcome", "guardrail",
                                      "latent", "measured"}}}},
                  {"restricted", kBool},
                  {"label", kString}},
                 {"name"})}}},
       {"edges",
        {{"type", "array"},
         {"items", {{"type", "array"}, {"items", kString},
                    {"minItems", 2}, {"maxItems", 2}}}}}},
      {"nodes"});
  schemas["TestResult"] = object({{"statistic", kNumber},
                                  {"p_value", kNumber},
                                  {"dof_or_n", kInteger},
                                  {"method", kString},
                                  {"warnings", kNames}});
  schemas["EffectEstimate"] = object({{"effect", kString},
                                      {"estimate", kNumber},
                                      {"std_error", kNumber},
                                      {"method", kString},
                                      {"adjustment", kNames},
                                      {"mediators", kNames},
                                      {"n_used", kInteger},
                                      {"clipped", kInteger},
                                      {"provenance", kString},
                                      {"warnings", kNames}});

  json identify_fields = query_fields;
  identify_fields["effect"] = {{"type", "string"}, {"enum", {"total", "direct"}}};
  json implications_fields = {{"dag", dag_field}, {"max_conditioning", kInteger}};
  json transport_fields = query_fields;
  transport_fields["selection"] = kNames;
  json validate_fields = {{"dag", dag_field},
                          {"dataset_id", kString},
                          {"max_conditioning", kInteger},
                          {"alpha", kNumber}};
  json estimate_fields = query_fields;
  estimate_fields["dataset_id"] = kString;
  estimate_fields["effect"] = {{"type", "string"},
                               {"enum", {"total", "direct", "indirect"}}};
  estimate_fields["method"] = {{"type", "string"},
                               {"enum", {"linear", "stratified", "ipw"}}};
  estimate_fields["adjustment"] = kNames;

  json paths;
  paths["/api/health"]["get"] = operation(
      "Liveness and version", nullptr,
      object({{"status", kString}, {"version", kString}}), {});
  paths["/api/parse"]["post"] = operation(
      "Parse DAG source", object({{"source", kString}}, {"source"}),
      object({{"dag", ref("Dag")},
              {"warnings", {{"type", "array"}, {"items", object({{"message", kString},
                                                                 {"span", ref("Span")}})}}},
              {"source", kString}}),
      {400, 422});
  paths["/api/identify"]["post"] = operation(
      "Minimal adjustment sets", object(identify_fields, {"dag"}),
      object({{"query", {{"type", "object"}}},
              {"identifiable", kBool},
              {"minimal_sets", {{"type", "array"}, {"items", kNames}}},
              {"mediators", kNames},
              {"conditioning_set", kNames},
              {"truncated", kBool},
              {"open_backdoor_paths", {{"type", "array"}}}}),
      {400, 422});
  paths["/api/implications"]["post"] = operation(
      "Testable implications", object(implications_fields, {"dag"}),
      object({{"max_conditioning", kInteger},
              {"implications",
               {{"type", "array"},
                {"items", object({{"x", kString}, {"y", kString},
                                  {"given", kNames}, {"text", kString}})}}}}),
      {400, 422});
  paths["/api/transport"]["post"] = operation(
      "Transportability verdict", object(transport_fields, {"dag", "selection"}),
      object({{"verdict", kString}, {"adjustment", kNames}}), {400, 422});
  paths["/api/dataset"]["post"] = {
      {"summary", "Upload a CSV dataset"},
      {"requestBody",
       {{"required", true},
        {"content",
         {{"multipart/form-data",
           {{"schema", object({{"file", {{"type", "string"}, {"format", "binary"}}}},
                              {"file"})}}},
          {"text/csv", {{"schema", kString}}}}}}},
      {"responses", error_replies({400, 413, 422})}};
  paths["/api/dataset"]["post"]["responses"]["200"] = reply(
      "Stored", object({{"dataset_id", kString},
                        {"rows", kInteger},
                        {"schema", {{"type", "array"}}},
                        {"load_report", {{"type", "object"}}}}));
  paths["/api/validate"]["post"] = operation(
      "Check the DAG's implications against a dataset",
      object(validate_fields, {"dag", "dataset_id"}),
      object({{"alpha", kNumber},
              {"summary", object({{"consistent", kInteger},
                                  {"violated", kInteger},
                                  {"untestable", kInteger}})},
              {"checks", {{"type", "array"}}}}),
      {400, 404, 422});
  paths["/api/estimate"]["post"] = operation(
      "Estimate a causal effect", object(estimate_fields, {"dag", "dataset_id"}),
      {{"oneOf",
        {ref("EffectEstimate"),
         object({{"total", ref("EffectEstimate")},
                 {"direct", ref("EffectEstimate")},
                 {"indirect", ref("EffectEstimate")}})}}},
      {400, 404, 422});
  paths["/api/srm"]["post"] = operation(
      "Sample-ratio-mismatch test",
      object({{"counts", {{"type", "array"}, {"items", kInteger}}},
              {"dataset_id", kString},
              {"column", kString},
              {"ratio", {{"type", "array"}, {"items", kNumber}}},
              {"alpha", kNumber}}),
      {{"allOf", {ref("TestResult"),
                  object({{"counts", {{"type", "array"}}},
                          {"ratio", {{"type", "array"}}},
                          {"alpha", kNumber},
                          {"passed", kBool}})}}},
      {400, 404, 422});

  return {{"openapi", "3.0.3"},
          {"info", {{"title", "causal workbench API"}, {"version", kVersion}}},
          {"paths", paths},
          {"components", {{"schemas", schemas}}}};
}

}  // namespace causal::service
