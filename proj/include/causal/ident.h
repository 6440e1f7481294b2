#ifndef CAUSAL_IDENT_H_
#define CAUSAL_IDENT_H_

#include <cstddef>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "causal/core.h"

namespace causal {

// Upper bound on the number of minimal adjustment sets returned.
inline constexpr std::size_t kMaxMinimalSets = 64;

// True iff every path between x and y is blocked by `given`. Symmetric.
// Errors: kUnknownNode, kOverlappingArguments (x == y or x/y in given).
bool d_separated(const CausalDag& dag, std::string_view x, std::string_view y,
                 const NameSet& given);

enum class PathKind { kCausal, kBackdoor, kOther };

std::string_view path_kind_name(PathKind kind);

struct PathReport {
  // nodes[0] is the treatment, nodes.back() the outcome. forward[i] is true
  // when the edge between nodes[i] and nodes[i + 1] points toward the outcome.
  std::vector<std::string> nodes;
  std::vector<bool> forward;
  PathKind kind = PathKind::kOther;
  // Non-colliders in the conditioning set, and colliders with neither
  // themselves nor a descendant conditioned. Empty means the path is open.
  NameSet blocked_by;

  bool open() const { return blocked_by.empty(); }
  // "SW <- VV -> EC"
  std::string to_string() const;
};

// All simple treatment-outcome paths, classified, ordered by node sequence.
std::vector<PathReport> enumerate_paths(const CausalDag& dag,
                                        const EffectQuery& query,
                                        const NameSet& given);

struct AdjustmentResult {
  EffectQuery query;
  bool identifiable = false;
  std::vector<NameSet> minimal_sets;
  // Nonempty only for controlled-direct queries. Always part of the
  // conditioning set, in addition to each minimal set.
  NameSet mediators;
  // Enumeration stopped at kMaxMinimalSets or the search budget.
  bool truncated = false;

  // Mediators plus the given minimal set.
  NameSet conditioning_set(std::size_t which = 0) const;
};

// Total: minimal backdoor sets among observed non-descendants of the
// treatment. ControlledDirect: mediators are de(T) ∩ an(Y); a set Z is valid
// when Z ∪ mediators d-separates T and Y once the edge T -> Y is removed.
AdjustmentResult adjustment_sets(const CausalDag& dag, const EffectQuery& query);

// True iff `z` satisfies the criterion adjustment_sets() applies for the
// query kind (mediators are added automatically for ControlledDirect).
bool is_valid_adjustment(const CausalDag& dag, const EffectQuery& query,
                         const NameSet& z);

// de(T) ∩ an(Y) minus {T, Y}.
NameSet mediators(const CausalDag& dag, const EffectQuery& query);

struct ImpliedIndependence {
  std::string x;  // x < y
  std::string y;
  NameSet given;

  friend bool operator==(const ImpliedIndependence&,
                         const ImpliedIndependence&) = default;
  // "x _||_ y | {a, b}"
  std::string to_string() const;
};

inline constexpr int kDefaultMaxConditioning = 2;

// Minimal d-separating sets of size <= max_conditioning for every pair of
// nodes. Latent nodes are excluded unless include_latent is set (used to
// report untestable implications). Sorted by (x, y, |given|, given).
std::vector<ImpliedIndependence> implied_independencies(
    const CausalDag& dag, int max_conditioning = kDefaultMaxConditioning,
    bool include_latent = false);

struct DirectlyTransportable {};
struct TransportableByAdjustment {
  NameSet adjustment;
};
struct NotDetermined {};

using TransportVerdict =
    std::variant<DirectlyTransportable, TransportableByAdjustment, NotDetermined>;

std::string_view transport_verdict_name(const TransportVerdict& verdict);

// Selection-diagram s-admissibility check. Selection nodes must exist, have
// no parents and not be the treatment or outcome (kInvalidSelectionNode).
TransportVerdict check_transportability(const CausalDag& dag,
                                        const NameSet& selection_nodes,
                                        const EffectQuery& query);

namespace detail {

// Reachability ("Bayes-ball") d-separation over index sets.
bool d_separated(const Adjacency& graph, std::size_t x, std::size_t y,
                 const std::vector<char>& given);

}  // namespace detail

}  // namespace causal

#endif  // CAUSAL_IDENT_H_
