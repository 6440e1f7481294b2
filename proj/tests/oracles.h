// Slow, independent reference implementations used only by tests. They
// operate on plain edge lists so they share no code with the library's graph
// algorithms.

#ifndef CAUSAL_TESTS_ORACLES_H_
#define CAUSAL_TESTS_ORACLES_H_

#include <cstddef>
#include <set>
#include <string>
#include <utility>
#include <vector>

namespace oracle {

struct Graph {
  std::size_t n = 0;
  std::vector<std::pair<std::size_t, std::size_t>> edges;  // from, to

  bool has_edge(std::size_t a, std::size_t b) const;
  std::vector<std::size_t> parents(std::size_t v) const;
  std::vector<std::size_t> children(std::size_t v) const;
  // Reflexive.
  std::set<std::size_t> descendants(std::size_t v) const;
  std::set<std::size_t> ancestors(const std::set<std::size_t>& seeds) const;
};

// Every simple path between x and y (ignoring direction) is checked against
// the path rule: blocked iff it has a non-collider in z or a collider that is
// neither in z nor an ancestor of a member of z.
bool d_separated_paths(const Graph& g, std::size_t x, std::size_t y,
                       const std::set<std::size_t>& z);

// Lauritzen's criterion: moralize the subgraph induced by An({x, y} ∪ z),
// delete z, and test whether x and y are disconnected.
bool d_separated_moral(const Graph& g, std::size_t x, std::size_t y,
                       const std::set<std::size_t>& z);

// Backdoor criterion by definition: no member of z descends from t, and every
// path between t and y whose first edge points into t is blocked by z.
bool backdoor_valid(const Graph& g, std::size_t t, std::size_t y,
                    const std::set<std::size_t>& z);

// All inclusion-minimal backdoor sets drawn from `pool`, by exhaustive
// search over subsets (each valid set is checked against all its subsets).
std::vector<std::set<std::size_t>> minimal_backdoor_sets(
    const Graph& g, std::size_t t, std::size_t y,
    const std::vector<std::size_t>& pool);

// All inclusion-minimal subsets of `pool` that d-separate x and y.
std::vector<std::set<std::size_t>> minimal_separators(
    const Graph& g, std::size_t x, std::size_t y,
    const std::vector<std::size_t>& pool);

// Controlled direct effect: with the t -> y edge removed, z ∪ mediators
// leaves no open path between t and y (checked with the path rule).
bool cde_valid(const Graph& g, std::size_t t, std::size_t y,
               const std::set<std::size_t>& mediators,
               const std::set<std::size_t>& z);

std::vector<std::set<std::size_t>> minimal_cde_sets(
    const Graph& g, std::size_t t, std::size_t y,
    const std::set<std::size_t>& mediators,
    const std::vector<std::size_t>& pool);

}  // namespace oracle

#endif  // CAUSAL_TESTS_ORACLES_H_
