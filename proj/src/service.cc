#include "causal/service.h"

#include <fmt/format.h>
#include <httplib.h>

#include "causal/analysis.h"
#include "causal/dsl.h"
#include "causal/error.h"
#include "causal/ident.h"
#include "causal/json_io.h"
#include "causal/stats.h"

namespace causal::service {

using nlohmann::json;

namespace {

// Request problems detected before any module runs.
struct ApiError {
  int status;
  std::string code;
  std::string message;
};

[[noreturn]] void bad_request(const std::string& message) {
  throw ApiError{400, "BadRequest", message};
}

Response error_response(int status, json body) {
  return {status, std::move(body)};
}

json parse_body(std::string_view body) {
  if (body.empty()) bad_request("request body is empty");
  json doc = json::parse(body, nullptr, /*allow_exceptions=*/false);
  if (doc.is_discarded()) bad_request("request body is not valid JSON");
  if (!doc.is_object()) bad_request("request body must be a JSON object");
  return doc;
}

template <typename T>
T field(const json& doc, const char* key, T fallback) {
  if (!doc.contains(key) || doc.at(key).is_null()) return fallback;
  try {
    return doc.at(key).get<T>();
  } catch (const json::exception&) {
    bad_request(fmt::format("field \"{}\" has the wrong type", key));
  }
}

std::string required_string(const json& doc, const char* key) {
  if (!doc.contains(key) || !doc.at(key).is_string()) {
    bad_request(fmt::format("string field \"{}\" is required", key));
  }
  return doc.at(key).get<std::string>();
}

// "dag" holds DSL text or the JSON graph form.
CausalDag read_dag(const json& doc) {
  if (!doc.contains("dag")) bad_request("field \"dag\" is required");
  const json& d = doc.at("dag");
  if (d.is_string()) return dsl::parse_dag(d.get<std::string>()).dag;
  if (d.is_object()) return json_io::dag_from_json(d);
  bad_request("field \"dag\" must be DSL text or a graph object");
}

NameSet read_names(const json& doc, const char* key) {
  const auto names = field<std::vector<std::string>>(doc, key, {});
  return NameSet(names.begin(), names.end());
}

EffectQuery read_query(const CausalDag& dag, const json& doc, EffectKind kind) {
  EffectQuery q;
  q.kind = kind;
  q.treatment = field<std::string>(doc, "treatment", "");
  q.outcome = field<std::string>(doc, "outcome", "");
  if (q.treatment.empty() || q.outcome.empty()) {
    const EffectQuery roles = default_query(dag, kind);
    if (q.treatment.empty()) q.treatment = roles.treatment;
    if (q.outcome.empty()) q.outcome = roles.outcome;
  }
  validate_query(dag, q);
  return q;
}

EffectKind read_effect(const json& doc) {
  const std::string effect = field<std::string>(doc, "effect", "total");
  if (effect == "total") return EffectKind::kTotal;
  if (effect == "direct") return EffectKind::kControlledDirect;
  bad_request(fmt::format("unknown effect '{}' (total or direct)", effect));
}

}  // namespace

std::shared_ptr<const StoredDataset> DatasetStore::put(LoadedTable loaded) {
  const std::size_t size = loaded.table.byte_size();
  if (size > max_bytes_) return nullptr;
  auto entry = std::make_shared<StoredDataset>();
  entry->id = fmt::format("{:016x}", loaded.table.fingerprint());
  entry->table = std::move(loaded.table);
  entry->report = std::move(loaded.report);

  std::lock_guard lock(mu_);
  for (auto it = entries_.begin(); it != entries_.end(); ++it) {
    if (it->data->id == entry->id) {
      entries_.splice(entries_.begin(), entries_, it);
      return it->data;
    }
  }
  entries_.push_front({entry, size});
  bytes_ += size;
  evict_locked();
  return entry;
}

std::shared_ptr<const StoredDataset> DatasetStore::get(const std::string& id) {
  std::lock_guard lock(mu_);
  for (auto it = entries_.begin(); it != entries_.end(); ++it) {
    if (it->data->id == id) {
      entries_.splice(entries_.begin(), entries_, it);
      return it->data;
    }
  }
  return nullptr;
}

std::size_t DatasetStore::size() const {
  std::lock_guard lock(mu_);
  return entries_.size();
}

std::size_t DatasetStore::bytes() const {
  std::lock_guard lock(mu_);
  return bytes_;
}

void DatasetStore::evict_locked() {
  while (entries_.size() > 1 &&
         (entries_.size() > max_datasets_ || bytes_ > max_bytes_)) {
    bytes_ -= entries_.back().bytes;
    entries_.pop_back();
  }
}

Response Api::health() const {
  return {200, {{"status", "ok"}, {"version", kVersion}}};
}

Response Api::upload(std::string_view csv) {
  try {
    if (csv.empty()) bad_request("no CSV data in the request");
    auto stored = store_.put(load_csv(csv));
    if (!stored) {
      return error_response(
          413, {{"code", "TooLarge"},
                {"message", fmt::format("dataset exceeds the {} MB store cap",
                                        kMaxStoreBytes >> 20)}});
    }
    return {200,
            {{"dataset_id", stored->id},
             {"rows", stored->table.n_rows()},
             {"schema", json_io::schema_json(stored->table)},
             {"load_report", json_io::to_json(stored->report)}}};
  } catch (const ApiError& e) {
    return error_response(e.status, {{"code", e.code}, {"message", e.message}});
  } catch (const Error& e) {
    return error_response(422, json_io::error_to_json(e));
  } catch (const std::exception& e) {
    return error_response(500, {{"code", "InternalError"}, {"message", e.what()}});
  }
}

Response Api::post(std::string_view route, std::string_view body) {
  try {
    const json doc = parse_body(body);

    auto dataset = [&]() -> std::shared_ptr<const StoredDataset> {
      const std::string id = required_string(doc, "dataset_id");
      auto stored = store_.get(id);
      if (!stored) {
        throw ApiError{404, "UnknownDataset",
                       fmt::format("no dataset with id '{}'", id)};
      }
      return stored;
    };

    if (route == "parse") {
      auto parsed = dsl::parse_dag(required_string(doc, "source"));
      return {200,
              {{"dag", json_io::to_json(parsed.dag)},
               {"warnings", json_io::to_json(parsed.warnings)},
               {"source", dsl::serialize_dag(parsed.dag)}}};
    }
    if (route == "identify") {
      const CausalDag dag = read_dag(doc);
      const EffectQuery q = read_query(dag, doc, read_effect(doc));
      const AdjustmentResult result = adjustment_sets(dag, q);
      json out = json_io::to_json(result);
      if (!result.identifiable) {
        json open = json::array();
        EffectQuery total = q;
        total.kind = EffectKind::kTotal;
        for (const auto& p : enumerate_paths(dag, total, {})) {
          if (p.kind == PathKind::kBackdoor && p.open()) {
            open.push_back(json_io::to_json(p));
          }
        }
        out["open_backdoor_paths"] = open;
      }
      return {200, out};
    }
    if (route == "implications") {
      const CausalDag dag = read_dag(doc);
      const int k = field<int>(doc, "max_conditioning", kDefaultMaxConditioning);
      if (k < 0) bad_request("max_conditioning must be >= 0");
      return {200,
              {{"max_conditioning", k},
               {"implications",
                json_io::to_json(implied_independencies(dag, k))}}};
    }
    if (route == "transport") {
      const CausalDag dag = read_dag(doc);
      const EffectQuery q = read_query(dag, doc, EffectKind::kTotal);
      return {200, json_io::to_json(check_transportability(
                       dag, read_names(doc, "selection"), q))};
    }
    if (route == "validate") {
      const CausalDag dag = read_dag(doc);
      auto data = dataset();
      const int k = field<int>(doc, "max_conditioning", kDefaultMaxConditioning);
      if (k < 0) bad_request("max_conditioning must be >= 0");
      const double alpha = field<double>(doc, "alpha", 0.05);
      return {200, json_io::to_json(analysis::validate_map(
                       dag, data->table, static_cast<std::size_t>(k), alpha))};
    }
    if (route == "estimate") {
      const CausalDag dag = read_dag(doc);
      auto data = dataset();
      const std::string effect = field<std::string>(doc, "effect", "total");
      const std::string method_text = field<std::string>(doc, "method", "linear");
      auto method = analysis::parse_method(method_text);
      if (!method) bad_request(fmt::format("unknown method '{}'", method_text));
      analysis::EstimateOptions options;
      if (doc.contains("adjustment") && !doc.at("adjustment").is_null()) {
        options.adjustment = read_names(doc, "adjustment");
      }
      const EffectQuery q = read_query(dag, doc, EffectKind::kTotal);
      if (effect == "total") {
        return {200, json_io::to_json(analysis::estimate_total(
                         dag, data->table, q, *method, options))};
      }
      if (effect == "direct") {
        return {200, json_io::to_json(
                         analysis::estimate_direct(dag, data->table, q, options))};
      }
      if (effect == "indirect") {
        const auto total =
            analysis::estimate_total(dag, data->table, q, *method, options);
        const auto direct = analysis::estimate_direct(dag, data->table, q, options);
        return {200,
                {{"total", json_io::to_json(total)},
                 {"direct", json_io::to_json(direct)},
                 {"indirect",
                  json_io::to_json(analysis::estimate_indirect(total, direct))}}};
      }
      bad_request(fmt::format("unknown effect '{}'", effect));
    }
    if (route == "srm") {
      std::vector<long long> counts;
      if (doc.contains("counts")) {
        counts = field<std::vector<long long>>(doc, "counts", {});
      } else {
        auto data = dataset();
        const std::string column = field<std::string>(doc, "column", "_arm");
        const Column& arm = data->table.column(column);
        counts.assign(2, 0);
        for (double v : arm.values) {
          if (v != 0.0 && v != 1.0) {
            throw Error(ErrorCode::kInvalidArgument,
                        fmt::format("column '{}' must be 0/1", column), {column});
          }
          ++counts[v == 1.0 ? 0 : 1];
        }
      }
      const auto ratio =
          field<std::vector<double>>(doc, "ratio", std::vector<double>(counts.size(), 1.0));
      const double alpha = field<double>(doc, "alpha", 0.05);
      const stats::TestResult r = stats::chi_square_gof(counts, ratio);
      json out = json_io::to_json(r);
      out["counts"] = counts;
      out["ratio"] = ratio;
      out["alpha"] = alpha;
      out["passed"] = r.p_value >= alpha;
      return {200, out};
    }
    return error_response(404, {{"code", "NotFound"},
                                {"message", fmt::format("no route /api/{}", route)}});
  } catch (const ApiError& e) {
    return error_response(e.status, {{"code", e.code}, {"message", e.message}});
  } catch (const Error& e) {
    return error_response(422, json_io::error_to_json(e));
  } catch (const std::exception& e) {
    return error_response(500, {{"code", "InternalError"}, {"message", e.what()}});
  }
}

void mount(httplib::Server& server, Api& api, const std::string& static_dir) {
  auto send = [](httplib::Response& res, const Response& r) {
    res.status = r.status;
    res.set_content(r.body.dump(), "application/json");
  };
  server.set_payload_max_length(kMaxStoreBytes + (1u << 20));
  server.Get("/api/health", [&api, send](const httplib::Request&,
                                         httplib::Response& res) {
    send(res, api.health());
  });
  server.Post("/api/dataset", [&api, send](const httplib::Request& req,
                                           httplib::Response& res) {
    if (req.is_multipart_form_data()) {
      if (!req.has_file("file")) {
        send(res, {400, {{"code", "BadRequest"},
                         {"message", "multipart upload needs a \"file\" part"}}});
        return;
      }
      send(res, api.upload(req.get_file_value("file").content));
    } else {
      send(res, api.upload(req.body));
    }
  });
  server.Post(R"(/api/(parse|identify|implications|transport|validate|estimate|srm))",
              [&api, send](const httplib::Request& req, httplib::Response& res) {
                send(res, api.post(req.matches[1].str(), req.body));
              });
  if (!static_dir.empty()) server.set_mount_point("/", static_dir);
  server.set_error_handler([](const httplib::Request& req, httplib::Response& res) {
    if (res.status == 404 && res.body.empty()) {
      res.set_content(json{{"code", "NotFound"},
                           {"message", fmt::format("no route {}", req.path)}}
                          .dump(),
                      "application/json");
    } else if (res.status == 413 && res.body.empty()) {
      res.set_content(json{{"code", "TooLarge"},
                           {"message", "request body exceeds the upload cap"}}
                          .dump(),
                      "application/json");
    }
  });
}

}  // namespace causal::service
