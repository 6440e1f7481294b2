#ifndef CAUSAL_CORE_H_
#define CAUSAL_CORE_H_

#include <cstddef>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace causal {

// Ordered set of node names. Every set the library emits is ordered
// lexicographically so outputs are reproducible.
using NameSet = std::set<std::string>;

enum class NodeRole { kTreatment, kOutcome, kGuardrail, kLatent, kMeasured };

std::string_view role_name(NodeRole role);
std::optional<NodeRole> parse_role(std::string_view text);

struct NodeSpec {
  std::string name;
  NodeRole role = NodeRole::kMeasured;
  // Deployment-constrained variable that cannot be randomized.
  bool restricted = false;
  std::optional<std::string> label;

  bool observed() const { return role != NodeRole::kLatent; }
  friend bool operator==(const NodeSpec&, const NodeSpec&) = default;
};

struct Edge {
  std::string from;
  std::string to;

  friend auto operator<=>(const Edge&, const Edge&) = default;
};

// True for [A-Za-z_][A-Za-z0-9_]*.
bool is_identifier(std::string_view name);

// Index-based adjacency used by the graph algorithms. Indices follow the
// lexicographic order of node names; neighbour lists are sorted.
struct Adjacency {
  std::vector<std::vector<std::size_t>> parents;
  std::vector<std::vector<std::size_t>> children;

  std::size_t size() const { return parents.size(); }
  bool has_edge(std::size_t from, std::size_t to) const;
  // Copy with the given edges removed.
  Adjacency without_edges(
      const std::vector<std::pair<std::size_t, std::size_t>>& edges) const;
  Adjacency without_outgoing(std::size_t node) const;
  Adjacency without_incoming(std::size_t node) const;
};

// Immutable, validated causal DAG with role-annotated nodes. Construction
// goes through build_dag(); nodes and edges are kept sorted so equality is
// structural and independent of input order.
class CausalDag {
 public:
  CausalDag() = default;

  const std::string& name() const { return name_; }
  std::size_t size() const { return nodes_.size(); }
  const std::vector<NodeSpec>& nodes() const { return nodes_; }
  const std::vector<Edge>& edges() const { return edges_; }
  const NodeSpec& node(std::size_t index) const { return nodes_[index]; }
  const Adjacency& adjacency() const { return adjacency_; }

  std::optional<std::size_t> find(std::string_view name) const;
  // Throws Error(kUnknownNode).
  std::size_t index_of(std::string_view name) const;
  bool contains(std::string_view name) const { return find(name).has_value(); }
  bool has_edge(std::string_view from, std::string_view to) const;

  std::optional<std::string> treatment() const;
  std::optional<std::string> outcome() const;

  // Same nodes, minus the listed edges. Removing edges preserves acyclicity.
  CausalDag without_edges(const std::vector<Edge>& removed) const;

  friend bool operator==(const CausalDag& a, const CausalDag& b) {
    return a.name_ == b.name_ && a.nodes_ == b.nodes_ && a.edges_ == b.edges_;
  }

 private:
  friend CausalDag build_dag(std::vector<NodeSpec>, std::vector<Edge>,
                             std::string);

  std::string name_;
  std::vector<NodeSpec> nodes_;
  std::vector<Edge> edges_;
  Adjacency adjacency_;
};

// Validates and builds a DAG. Duplicate edges collapse (set semantics).
// Errors: kCycleDetected (subjects name one cycle, first node repeated),
// kUnknownEndpoint, kDuplicateNode, kRoleViolation.
CausalDag build_dag(std::vector<NodeSpec> nodes, std::vector<Edge> edges,
                    std::string name = "dag");

NameSet ancestors(const CausalDag& dag, std::string_view node);
NameSet descendants(const CausalDag& dag, std::string_view node);

// Kahn's algorithm with a lexicographic priority queue.
std::vector<std::string> topological_order(const CausalDag& dag);

enum class EffectKind { kTotal, kControlledDirect };

std::string_view effect_kind_name(EffectKind kind);

struct EffectQuery {
  std::string treatment;
  std::string outcome;
  EffectKind kind = EffectKind::kTotal;

  friend bool operator==(const EffectQuery&, const EffectQuery&) = default;
};

// Checks the query invariants against the DAG: both names exist, differ and
// are observed. Throws kUnknownNode or kInvalidQuery.
void validate_query(const CausalDag& dag, const EffectQuery& query);

// Query over the DAG's declared treatment and outcome roles.
EffectQuery default_query(const CausalDag& dag,
                          EffectKind kind = EffectKind::kTotal);

namespace detail {

// Index-set helpers shared by the algorithms.
std::vector<char> ancestor_mask(const Adjacency& graph,
                                const std::vector<std::size_t>& seeds);
std::vector<char> descendant_mask(const Adjacency& graph, std::size_t seed);

}  // namespace detail

}  // namespace causal

#endif  // CAUSAL_CORE_H_
