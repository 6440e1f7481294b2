#include "causal/scm.h"

#include <cmath>
#include <fstream>
#include <random>
#include <sstream>

#include <fmt/format.h>
#include <json.hpp>

#include "causal/error.h"

namespace causal::scm {

namespace {

[[noreturn]] void invalid(const std::string& message) {
  throw Error(ErrorCode::kInvalidSpec, message);
}

double sigmoid(double eta) {
  if (eta >= 0) return 1.0 / (1.0 + std::exp(-eta));
  const double e = std::exp(eta);
  return e / (1.0 + e);
}

}  // namespace

double ScmSpec::coefficient(std::string_view from, std::string_view to) const {
  auto it = coefficients.find({std::string(from), std::string(to)});
  return it == coefficients.end() ? 0.0 : it->second;
}

void validate(const ScmSpec& spec) {
  const CausalDag& dag = spec.dag;
  for (const auto& e : dag.edges()) {
    if (!spec.coefficients.count({e.from, e.to})) {
      invalid(fmt::format("missing coefficient for edge {}->{}", e.from, e.to));
    }
  }
  for (const auto& [edge, value] : spec.coefficients) {
    if (!dag.has_edge(edge.first, edge.second)) {
      invalid(fmt::format("coefficient given for {}->{}, which is not an edge",
                          edge.first, edge.second));
    }
    if (!std::isfinite(value)) {
      invalid(fmt::format("coefficient {}->{} is not finite", edge.first,
                          edge.second));
    }
  }
  for (const auto& n : dag.nodes()) {
    auto it = spec.noise_std.find(n.name);
    if (it == spec.noise_std.end()) {
      invalid(fmt::format("missing noise_std for node '{}'", n.name));
    }
    if (!(it->second >= 0) || !std::isfinite(it->second)) {
      invalid(fmt::format("noise_std for '{}' must be finite and >= 0", n.name));
    }
  }
  auto treatment = dag.treatment();
  for (const auto& [name, p] : spec.binary_roots) {
    auto idx = dag.find(name);
    if (!idx) invalid(fmt::format("binary root '{}' is not a node", name));
    if (!dag.adjacency().parents[*idx].empty()) {
      invalid(fmt::format("binary root '{}' has parents", name));
    }
    if (treatment && *treatment == name) {
      invalid(fmt::format("'{}' is the treatment; use the treatment mechanism",
                          name));
    }
    if (!(p >= 0 && p <= 1)) {
      invalid(fmt::format("binary root '{}' probability outside [0, 1]", name));
    }
  }
  if (const auto* b = std::get_if<Bernoulli>(&spec.treatment_mechanism)) {
    if (!(b->p >= 0 && b->p <= 1)) invalid("treatment p outside [0, 1]");
  }
}

DataTable simulate(const ScmSpec& spec, std::size_t n) {
  validate(spec);
  const CausalDag& dag = spec.dag;
  const auto order = topological_order(dag);
  const auto treatment = dag.treatment();
  std::mt19937_64 rng(spec.seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::uniform_real_distribution<double> uniform(0.0, 1.0);

  std::vector<std::vector<double>> values(dag.size(), std::vector<double>(n));
  // Per node: parent indices and their coefficients.
  std::vector<std::vector<std::pair<std::size_t, double>>> inputs(dag.size());
  for (std::size_t v = 0; v < dag.size(); ++v) {
    for (std::size_t p : dag.adjacency().parents[v]) {
      inputs[v].emplace_back(p, spec.coefficient(dag.node(p).name,
                                                 dag.node(v).name));
    }
  }
  std::vector<std::size_t> order_idx;
  for (const auto& name : order) order_idx.push_back(dag.index_of(name));

  // Row-major draws so a prefix of a larger simulation matches a smaller one.
  for (std::size_t row = 0; row < n; ++row) {
    for (std::size_t v : order_idx) {
      const NodeSpec& node = dag.node(v);
      double score = 0;
      for (const auto& [p, c] : inputs[v]) score += c * values[p][row];
      double value;
      if (treatment && node.name == *treatment) {
        double prob;
        if (const auto* l = std::get_if<Logistic>(&spec.treatment_mechanism)) {
          prob = sigmoid(l->intercept + l->scale * score);
        } else {
          prob = std::get<Bernoulli>(spec.treatment_mechanism).p;
        }
        value = uniform(rng) < prob ? 1.0 : 0.0;
      } else if (auto it = spec.binary_roots.find(node.name);
                 it != spec.binary_roots.end()) {
        value = uniform(rng) < it->second ? 1.0 : 0.0;
      } else {
        value = score + spec.noise_std.at(node.name) * normal(rng);
      }
      values[v][row] = value;
    }
  }

  std::vector<Column> columns;
  for (std::size_t v = 0; v < dag.size(); ++v) {
    const std::string& name = dag.node(v).name;
    const bool binary = (treatment && name == *treatment) ||
                        spec.binary_roots.count(name);
    columns.push_back(binary ? binary_column(name, std::move(values[v]))
                             : continuous_column(name, std::move(values[v])));
  }
  return DataTable(std::move(columns));
}

DataTable drop_latent(const DataTable& table, const CausalDag& dag) {
  std::vector<std::string> latent;
  for (const auto& node : dag.nodes()) {
    if (!node.observed()) latent.push_back(node.name);
  }
  return table.without_columns(latent);
}

TrueEffects true_effects(const ScmSpec& spec, const EffectQuery& query) {
  const CausalDag& dag = spec.dag;
  const std::size_t t = dag.index_of(query.treatment);
  const std::size_t y = dag.index_of(query.outcome);
  // effect[v] = sum over directed t -> v paths of coefficient products.
  std::vector<double> effect(dag.size(), 0.0);
  effect[t] = 1.0;
  for (const auto& name : topological_order(dag)) {
    const std::size_t v = dag.index_of(name);
    if (v == t) continue;
    for (std::size_t p : dag.adjacency().parents[v]) {
      effect[v] += effect[p] * spec.coefficient(dag.node(p).name, name);
    }
  }
  TrueEffects out;
  out.total = effect[y];
  out.direct = spec.coefficient(query.treatment, query.outcome);
  out.indirect = out.total - out.direct;
  return out;
}

ScmSpec parse_spec_json(const CausalDag& dag, std::string_view json_text) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(json_text);
  } catch (const nlohmann::json::exception& e) {
    invalid(fmt::format("invalid JSON: {}", e.what()));
  }
  if (!doc.is_object()) invalid("SCM spec must be a JSON object");

  ScmSpec spec;
  spec.dag = dag;
  try {
    if (!doc.contains("coefficients") || !doc["coefficients"].is_object()) {
      invalid("\"coefficients\" object is required");
    }
    for (const auto& [key, value] : doc["coefficients"].items()) {
      auto arrow = key.find("->");
      if (arrow == std::string::npos) {
        invalid(fmt::format("coefficient key '{}' is not of the form A->B", key));
      }
      auto strip = [](std::string s) {
        while (!s.empty() && s.front() == ' ') s.erase(s.begin());
        while (!s.empty() && s.back() == ' ') s.pop_back();
        return s;
      };
      spec.coefficients[{strip(key.substr(0, arrow)), strip(key.substr(arrow + 2))}] =
          value.get<double>();
    }
    for (const auto& node : dag.nodes()) spec.noise_std[node.name] = 1.0;
    if (doc.contains("noise_std")) {
      for (const auto& [name, value] : doc["noise_std"].items()) {
        if (!dag.contains(name)) {
          invalid(fmt::format("noise_std names unknown node '{}'", name));
        }
        spec.noise_std[name] = value.get<double>();
      }
    }
    if (doc.contains("treatment")) {
      const auto& t = doc["treatment"];
      const std::string mechanism = t.value("mechanism", "bernoulli");
      if (mechanism == "logistic") {
        spec.treatment_mechanism =
            Logistic{t.value("scale", 1.0), t.value("intercept", 0.0)};
      } else if (mechanism == "bernoulli") {
        spec.treatment_mechanism = Bernoulli{t.value("p", 0.5)};
      } else {
        invalid(fmt::format("unknown treatment mechanism '{}'", mechanism));
      }
    }
    if (doc.contains("binary_roots")) {
      for (const auto& [name, value] : doc["binary_roots"].items()) {
        spec.binary_roots[name] = value.get<double>();
      }
    }
    spec.seed = doc.value("seed", std::uint64_t{0});
  } catch (const nlohmann::json::exception& e) {
    invalid(fmt::format("malformed SCM spec: {}", e.what()));
  }
  validate(spec);
  return spec;
}

ScmSpec load_spec_file(const CausalDag& dag, const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::kIoError, fmt::format("cannot read '{}'", path));
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_spec_json(dag, buf.str());
}

}  // namespace causal::scm
