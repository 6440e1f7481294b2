#include "causal/core.h"

#include <algorithm>
#include <functional>
#include <queue>

#include <fmt/format.h>

#include "causal/error.h"

namespace causal {

std::string_view error_code_name(ErrorCode code) {
  switch (code) {
    case ErrorCode::kCycleDetected: return "CycleDetected";
    case ErrorCode::kUnknownEndpoint: return "UnknownEndpoint";
    case ErrorCode::kDuplicateNode: return "DuplicateNode";
    case ErrorCode::kRoleViolation: return "RoleViolation";
    case ErrorCode::kUnknownNode: return "UnknownNode";
    case ErrorCode::kOverlappingArguments: return "OverlappingArguments";
    case ErrorCode::kInvalidQuery: return "InvalidQuery";
    case ErrorCode::kInvalidSelectionNode: return "InvalidSelectionNode";
    case ErrorCode::kParseError: return "ParseError";
    case ErrorCode::kRankDeficient: return "RankDeficient";
    case ErrorCode::kInsufficientData: return "InsufficientData";
    case ErrorCode::kSeparation: return "Separation";
    case ErrorCode::kNonNumericColumn: return "NonNumericColumn";
    case ErrorCode::kNonCategoricalColumn: return "NonCategoricalColumn";
    case ErrorCode::kEmptyStratum: return "EmptyStratum";
    case ErrorCode::kLengthMismatch: return "LengthMismatch";
    case ErrorCode::kZeroTotal: return "ZeroTotal";
    case ErrorCode::kInvalidArgument: return "InvalidArgument";
    case ErrorCode::kMalformedCsv: return "MalformedCsv";
    case ErrorCode::kEmptyTable: return "EmptyTable";
    case ErrorCode::kUnknownSchemaColumn: return "UnknownSchemaColumn";
    case ErrorCode::kSchemaMismatch: return "SchemaMismatch";
    case ErrorCode::kNotCategorical: return "NotCategorical";
    case ErrorCode::kMissingColumn: return "MissingColumn";
    case ErrorCode::kNotIdentifiable: return "NotIdentifiable";
    case ErrorCode::kMissingStratumColumn: return "MissingStratumColumn";
    case ErrorCode::kInvalidRatio: return "InvalidRatio";
    case ErrorCode::kPositivityViolation: return "PositivityViolation";
    case ErrorCode::kMethodMismatch: return "MethodMismatch";
    case ErrorCode::kProvenanceMismatch: return "ProvenanceMismatch";
    case ErrorCode::kInvalidSpec: return "InvalidSpec";
    case ErrorCode::kIoError: return "IoError";
  }
  return "Unknown";
}

std::string_view role_name(NodeRole role) {
  switch (role) {
    case NodeRole::kTreatment: return "treatment";
    case NodeRole::kOutcome: return "outcome";
    case NodeRole::kGuardrail: return "guardrail";
    case NodeRole::kLatent: return "latent";
    case NodeRole::kMeasured: return "measured";
  }
  return "measured";
}

std::optional<NodeRole> parse_role(std::string_view text) {
  for (NodeRole role : {NodeRole::kTreatment, NodeRole::kOutcome,
                        NodeRole::kGuardrail, NodeRole::kLatent,
                        NodeRole::kMeasured}) {
    if (role_name(role) == text) return role;
  }
  return std::nullopt;
}

std::string_view effect_kind_name(EffectKind kind) {
  return kind == EffectKind::kTotal ? "total" : "direct";
}

bool is_identifier(std::string_view name) {
  if (name.empty()) return false;
  auto alpha = [](char c) {
    return (c >= 'A' && c <= 'Z') || (c >= 'a' && c <= 'z') || c == '_';
  };
  if (!alpha(name.front())) return false;
  return std::all_of(name.begin() + 1, name.end(), [&](char c) {
    return alpha(c) || (c >= '0' && c <= '9');
  });
}

bool Adjacency::has_edge(std::size_t from, std::size_t to) const {
  const auto& c = children[from];
  return std::binary_search(c.begin(), c.end(), to);
}

Adjacency Adjacency::without_edges(
    const std::vector<std::pair<std::size_t, std::size_t>>& edges) const {
  Adjacency out = *this;
  for (const auto& [from, to] : edges) {
    auto& c = out.children[from];
    c.erase(std::remove(c.begin(), c.end(), to), c.end());
    auto& p = out.parents[to];
    p.erase(std::remove(p.begin(), p.end(), from), p.end());
  }
  return out;
}

Adjacency Adjacency::without_outgoing(std::size_t node) const {
  std::vector<std::pair<std::size_t, std::size_t>> edges;
  for (std::size_t c : children[node]) edges.emplace_back(node, c);
  return without_edges(edges);
}

Adjacency Adjacency::without_incoming(std::size_t node) const {
  std::vector<std::pair<std::size_t, std::size_t>> edges;
  for (std::size_t p : parents[node]) edges.emplace_back(p, node);
  return without_edges(edges);
}

std::optional<std::size_t> CausalDag::find(std::string_view name) const {
  auto it = std::lower_bound(
      nodes_.begin(), nodes_.end(), name,
      [](const NodeSpec& n, std::string_view key) { return n.name < key; });
  if (it == nodes_.end() || it->name != name) return std::nullopt;
  return static_cast<std::size_t>(it - nodes_.begin());
}

std::size_t CausalDag::index_of(std::string_view name) const {
  auto idx = find(name);
  if (!idx) {
    throw Error(ErrorCode::kUnknownNode,
                fmt::format("unknown node '{}'", name), {std::string(name)});
  }
  return *idx;
}

bool CausalDag::has_edge(std::string_view from, std::string_view to) const {
  auto f = find(from);
  auto t = find(to);
  return f && t && adjacency_.has_edge(*f, *t);
}

std::optional<std::string> CausalDag::treatment() const {
  for (const auto& n : nodes_) {
    if (n.role == NodeRole::kTreatment) return n.name;
  }
  return std::nullopt;
}

std::optional<std::string> CausalDag::outcome() const {
  for (const auto& n : nodes_) {
    if (n.role == NodeRole::kOutcome) return n.name;
  }
  return std::nullopt;
}

CausalDag CausalDag::without_edges(const std::vector<Edge>& removed) const {
  std::vector<Edge> kept;
  for (const auto& e : edges_) {
    if (std::find(removed.begin(), removed.end(), e) == removed.end()) {
      kept.push_back(e);
    }
  }
  return build_dag(nodes_, std::move(kept), name_);
}

namespace {

// Returns one directed cycle (first node repeated at the end) or empty.
std::vector<std::size_t> find_cycle(const Adjacency& graph) {
  enum Color : char { kWhite, kGray, kBlack };
  std::vector<char> color(graph.size(), kWhite);
  std::vector<std::size_t> stack;
  std::vector<std::size_t> cycle;

  std::function<bool(std::size_t)> visit = [&](std::size_t v) {
    color[v] = kGray;
    stack.push_back(v);
    for (std::size_t c : graph.children[v]) {
      if (color[c] == kGray) {
        auto it = std::find(stack.begin(), stack.end(), c);
        cycle.assign(it, stack.end());
        cycle.push_back(c);
        return true;
      }
      if (color[c] == kWhite && visit(c)) return true;
    }
    stack.pop_back();
    color[v] = kBlack;
    return false;
  };
  for (std::size_t v = 0; v < graph.size(); ++v) {
    if (color[v] == kWhite && visit(v)) break;
  }
  return cycle;
}

}  // namespace

CausalDag build_dag(std::vector<NodeSpec> nodes, std::vector<Edge> edges,
                    std::string name) {
  std::sort(nodes.begin(), nodes.end(),
            [](const NodeSpec& a, const NodeSpec& b) { return a.name < b.name; });
  for (std::size_t i = 0; i < nodes.size(); ++i) {
    if (nodes[i].name.empty()) {
      throw Error(ErrorCode::kRoleViolation, "node name must be nonempty");
    }
    if (i > 0 && nodes[i].name == nodes[i - 1].name) {
      throw Error(ErrorCode::kDuplicateNode,
                  fmt::format("node '{}' declared twice", nodes[i].name),
                  {nodes[i].name});
    }
  }

  int treatments = 0;
  int outcomes = 0;
  for (const auto& n : nodes) {
    if (n.restricted &&
        (n.role == NodeRole::kTreatment || n.role == NodeRole::kLatent)) {
      throw Error(ErrorCode::kRoleViolation,
                  fmt::format("node '{}' is {} and cannot be restricted",
                              n.name, role_name(n.role)),
                  {n.name});
    }
    treatments += n.role == NodeRole::kTreatment;
    outcomes += n.role == NodeRole::kOutcome;
  }
  if (treatments > 1 || outcomes > 1) {
    throw Error(ErrorCode::kRoleViolation,
                "at most one treatment and one outcome node may be declared");
  }

  std::sort(edges.begin(), edges.end());
  edges.erase(std::unique(edges.begin(), edges.end()), edges.end());

  CausalDag dag;
  dag.name_ = std::move(name);
  dag.nodes_ = std::move(nodes);
  dag.adjacency_.parents.resize(dag.nodes_.size());
  dag.adjacency_.children.resize(dag.nodes_.size());
  for (const auto& e : edges) {
    auto from = dag.find(e.from);
    auto to = dag.find(e.to);
    if (!from || !to) {
      const std::string& missing = from ? e.to : e.from;
      throw Error(ErrorCode::kUnknownEndpoint,
                  fmt::format("edge {} -> {} references unknown node '{}'",
                              e.from, e.to, missing),
                  {missing});
    }
    if (*from == *to) {
      throw Error(ErrorCode::kCycleDetected,
                  fmt::format("cycle detected: {} -> {}", e.from, e.to),
                  {e.from, e.to});
    }
    dag.adjacency_.children[*from].push_back(*to);
    dag.adjacency_.parents[*to].push_back(*from);
  }
  // Edges are sorted by (from, to) and node indices follow name order, so
  // the neighbour lists come out sorted except parents, which need a pass.
  for (auto& p : dag.adjacency_.parents) std::sort(p.begin(), p.end());
  dag.edges_ = std::move(edges);

  auto cycle = find_cycle(dag.adjacency_);
  if (!cycle.empty()) {
    std::vector<std::string> names;
    for (std::size_t v : cycle) names.push_back(dag.nodes_[v].name);
    throw Error(ErrorCode::kCycleDetected,
                fmt::format("cycle detected: {}", fmt::join(names, " -> ")),
                names);
  }
  return dag;
}

namespace detail {

std::vector<char> ancestor_mask(const Adjacency& graph,
                                const std::vector<std::size_t>& seeds) {
  std::vector<char> mask(graph.size(), 0);
  std::vector<std::size_t> frontier(seeds.begin(), seeds.end());
  for (std::size_t s : seeds) mask[s] = 1;
  while (!frontier.empty()) {
    std::size_t v = frontier.back();
    frontier.pop_back();
    for (std::size_t p : graph.parents[v]) {
      if (!mask[p]) {
        mask[p] = 1;
        frontier.push_back(p);
      }
    }
  }
  return mask;
}

std::vector<char> descendant_mask(const Adjacency& graph, std::size_t seed) {
  std::vector<char> mask(graph.size(), 0);
  std::vector<std::size_t> frontier{seed};
  mask[seed] = 1;
  while (!frontier.empty()) {
    std::size_t v = frontier.back();
    frontier.pop_back();
    for (std::size_t c : graph.children[v]) {
      if (!mask[c]) {
        mask[c] = 1;
        frontier.push_back(c);
      }
    }
  }
  return mask;
}

}  // namespace detail

NameSet ancestors(const CausalDag& dag, std::string_view node) {
  std::size_t idx = dag.index_of(node);
  auto mask = detail::ancestor_mask(dag.adjacency(), {idx});
  NameSet out;
  for (std::size_t i = 0; i < dag.size(); ++i) {
    if (mask[i] && i != idx) out.insert(dag.node(i).name);
  }
  return out;
}

NameSet descendants(const CausalDag& dag, std::string_view node) {
  std::size_t idx = dag.index_of(node);
  auto mask = detail::descendant_mask(dag.adjacency(), idx);
  NameSet out;
  for (std::size_t i = 0; i < dag.size(); ++i) {
    if (mask[i] && i != idx) out.insert(dag.node(i).name);
  }
  return out;
}

std::vector<std::string> topological_order(const CausalDag& dag) {
  const Adjacency& g = dag.adjacency();
  std::vector<std::size_t> indegree(g.size());
  // Index order is name order, so a min-heap on indices breaks ties
  // lexicographically.
  std::priority_queue<std::size_t, std::vector<std::size_t>,
                      std::greater<std::size_t>>
      ready;
  for (std::size_t v = 0; v < g.size(); ++v) {
    indegree[v] = g.parents[v].size();
    if (indegree[v] == 0) ready.push(v);
  }
  std::vector<std::string> order;
  order.reserve(g.size());
  while (!ready.empty()) {
    std::size_t v = ready.top();
    ready.pop();
    order.push_back(dag.node(v).name);
    for (std::size_t c : g.children[v]) {
      if (--indegree[c] == 0) ready.push(c);
    }
  }
  return order;
}

void validate_query(const CausalDag& dag, const EffectQuery& query) {
  std::size_t t = dag.index_of(query.treatment);
  std::size_t y = dag.index_of(query.outcome);
  if (t == y) {
    throw Error(ErrorCode::kInvalidQuery,
                "treatment and outcome must be different nodes",
                {query.treatment});
  }
  for (std::size_t i : {t, y}) {
    if (!dag.node(i).observed()) {
      throw Error(ErrorCode::kInvalidQuery,
                  fmt::format("query node '{}' is latent", dag.node(i).name),
                  {dag.node(i).name});
    }
  }
}

EffectQuery default_query(const CausalDag& dag, EffectKind kind) {
  auto t = dag.treatment();
  auto y = dag.outcome();
  if (!t || !y) {
    throw Error(ErrorCode::kInvalidQuery,
                "DAG declares no treatment/outcome pair; name them explicitly");
  }
  return EffectQuery{*t, *y, kind};
}

}  // namespace causal
