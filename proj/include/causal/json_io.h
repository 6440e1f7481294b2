#ifndef CAUSAL_JSON_IO_H_
#define CAUSAL_JSON_IO_H_

// JSON views of the library types, shared by the CLI (--json) and the HTTP
// service so both emit the same schema.

#include <vector>

#include <json.hpp>

#include "causal/analysis.h"
#include "causal/core.h"
#include "causal/design.h"
#include "causal/dsl.h"
#include "causal/error.h"
#include "causal/ident.h"
#include "causal/stats.h"
#include "causal/tabular.h"

namespace causal::json_io {

using nlohmann::json;

// {"name", "nodes": [{"name", "role", "restricted", "label"?}],
//  "edges": [["A", "B"], ...]}
json to_json(const CausalDag& dag);
// Inverse of to_json(CausalDag); validates through build_dag.
// Errors: kInvalidArgument for malformed documents, build_dag errors.
CausalDag dag_from_json(const json& doc);

json to_json(const std::vector<dsl::Warning>& warnings);
json to_json(const dsl::SourceSpan& span);
// {"code", "message", "subjects"?, "span"?, "kind"?}. Parse errors report
// the semantic code (e.g. CycleDetected) when there is one.
json error_to_json(const Error& error);

json to_json(const EffectQuery& query);
json to_json(const AdjustmentResult& result);
json to_json(const PathReport& path);
json to_json(const std::vector<ImpliedIndependence>& implications);
json to_json(const TransportVerdict& verdict);

json to_json(const stats::TestResult& result);

json to_json(const LoadReport& report);
json schema_json(const DataTable& table);

json to_json(const design::AssignmentPlan& plan);
json to_json(const design::ValidityReport& report);
json to_json(const design::PositivityReport& report);

json to_json(const analysis::EffectEstimate& estimate);
json to_json(const analysis::MapValidationReport& report);

}  // namespace causal::json_io

#endif  // CAUSAL_JSON_IO_H_
