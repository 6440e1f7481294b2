#include "causal/ident.h"

#include <algorithm>
#include <functional>

#include <fmt/format.h>

#include "causal/error.h"

namespace causal {

namespace {

// Work bound for subset enumeration (d-separation evaluations).
constexpr std::size_t kSearchBudget = std::size_t{1} << 20;
constexpr std::size_t kMaxPaths = 100000;

std::vector<char> mask_of(std::size_t n, const std::vector<std::size_t>& set) {
  std::vector<char> mask(n, 0);
  for (std::size_t i : set) mask[i] = 1;
  return mask;
}

NameSet names_of(const CausalDag& dag, const std::vector<std::size_t>& idx) {
  NameSet out;
  for (std::size_t i : idx) out.insert(dag.node(i).name);
  return out;
}

std::vector<std::size_t> indices_of(const CausalDag& dag, const NameSet& set) {
  std::vector<std::size_t> out;
  for (const auto& n : set) out.push_back(dag.index_of(n));
  std::sort(out.begin(), out.end());
  return out;
}

// Calls visit(subset) for every subset of `pool` with size <= max_size, in
// order of increasing size and lexicographically within a size. Stops when
// visit returns false. Returns false if the search was cut short.
bool for_each_subset(const std::vector<std::size_t>& pool, std::size_t max_size,
                     const std::function<bool(const std::vector<std::size_t>&)>&
                         visit) {
  const std::size_t n = pool.size();
  max_size = std::min(max_size, n);
  std::vector<std::size_t> pick;
  std::vector<std::size_t> subset;
  for (std::size_t k = 0; k <= max_size; ++k) {
    pick.resize(k);
    for (std::size_t i = 0; i < k; ++i) pick[i] = i;
    for (;;) {
      subset.clear();
      for (std::size_t i : pick) subset.push_back(pool[i]);
      if (!visit(subset)) return false;
      // Advance to the next k-combination.
      std::size_t i = k;
      while (i > 0 && pick[i - 1] == n - k + i - 1) --i;
      if (i == 0) break;
      ++pick[i - 1];
      for (std::size_t j = i; j < k; ++j) pick[j] = pick[j - 1] + 1;
    }
  }
  return true;
}

bool contains_any(const std::vector<std::vector<std::size_t>>& found,
                  const std::vector<std::size_t>& subset) {
  return std::any_of(found.begin(), found.end(), [&](const auto& f) {
    return std::includes(subset.begin(), subset.end(), f.begin(), f.end());
  });
}

// Graph, candidate pool and fixed conditioning members for one query.
struct AdjustmentProblem {
  Adjacency graph;
  std::size_t treatment;
  std::size_t outcome;
  std::vector<std::size_t> required;   // mediators (direct effect)
  std::vector<char> forbidden;         // never allowed in an adjustment set
  std::vector<std::size_t> candidates; // sorted
  bool latent_mediator = false;
};

AdjustmentProblem make_problem(const CausalDag& dag, const EffectQuery& query) {
  validate_query(dag, query);
  AdjustmentProblem p;
  p.treatment = dag.index_of(query.treatment);
  p.outcome = dag.index_of(query.outcome);
  const Adjacency& g = dag.adjacency();
  p.forbidden = detail::descendant_mask(g, p.treatment);
  p.forbidden[p.outcome] = 1;
  if (query.kind == EffectKind::kTotal) {
    p.graph = g.without_outgoing(p.treatment);
  } else {
    p.graph = g.without_edges({{p.treatment, p.outcome}});
    auto anc_y = detail::ancestor_mask(g, {p.outcome});
    for (std::size_t i = 0; i < g.size(); ++i) {
      if (i != p.treatment && i != p.outcome && p.forbidden[i] && anc_y[i]) {
        p.required.push_back(i);
        if (!dag.node(i).observed()) p.latent_mediator = true;
      }
    }
  }
  std::vector<std::size_t> seeds = p.required;
  seeds.push_back(p.treatment);
  seeds.push_back(p.outcome);
  auto relevant = detail::ancestor_mask(p.graph, seeds);
  for (std::size_t i = 0; i < g.size(); ++i) {
    if (relevant[i] && !p.forbidden[i] && dag.node(i).observed()) {
      p.candidates.push_back(i);
    }
  }
  return p;
}

bool separates(const AdjustmentProblem& p, const std::vector<std::size_t>& z) {
  std::vector<char> given = mask_of(p.graph.size(), z);
  for (std::size_t m : p.required) given[m] = 1;
  return detail::d_separated(p.graph, p.treatment, p.outcome, given);
}

}  // namespace

namespace detail {

bool d_separated(const Adjacency& graph, std::size_t x, std::size_t y,
                 const std::vector<char>& given) {
  std::vector<std::size_t> z;
  for (std::size_t i = 0; i < given.size(); ++i) {
    if (given[i]) z.push_back(i);
  }
  // Colliders are open when they are conditioned on or have a conditioned
  // descendant, i.e. when they are ancestors of the conditioning set.
  const std::vector<char> open_collider = ancestor_mask(graph, z);
  const std::size_t n = graph.size();
  // visited[2v] arrived from a child (moving up), visited[2v+1] from a parent.
  std::vector<char> visited(2 * n, 0);
  std::vector<std::pair<std::size_t, bool>> stack{{x, true}};
  while (!stack.empty()) {
    auto [v, up] = stack.back();
    stack.pop_back();
    char& seen = visited[2 * v + (up ? 0 : 1)];
    if (seen) continue;
    seen = 1;
    if (v == y && !given[v]) return false;
    if (up) {
      if (given[v]) continue;
      for (std::size_t p : graph.parents[v]) stack.emplace_back(p, true);
      for (std::size_t c : graph.children[v]) stack.emplace_back(c, false);
    } else {
      if (!given[v]) {
        for (std::size_t c : graph.children[v]) stack.emplace_back(c, false);
      }
      if (open_collider[v]) {
        for (std::size_t p : graph.parents[v]) stack.emplace_back(p, true);
      }
    }
  }
  return true;
}

}  // namespace detail

bool d_separated(const CausalDag& dag, std::string_view x, std::string_view y,
                 const NameSet& given) {
  std::size_t xi = dag.index_of(x);
  std::size_t yi = dag.index_of(y);
  auto z = indices_of(dag, given);
  if (xi == yi) {
    throw Error(ErrorCode::kOverlappingArguments,
                fmt::format("d-separation of '{}' from itself", x),
                {std::string(x)});
  }
  for (std::string_view v : {x, y}) {
    if (given.count(std::string(v))) {
      throw Error(ErrorCode::kOverlappingArguments,
                  fmt::format("'{}' is both an endpoint and conditioned on", v),
                  {std::string(v)});
    }
  }
  return detail::d_separated(dag.adjacency(), xi, yi, mask_of(dag.size(), z));
}

std::string_view path_kind_name(PathKind kind) {
  switch (kind) {
    case PathKind::kCausal: return "causal";
    case PathKind::kBackdoor: return "backdoor";
    case PathKind::kOther: return "other";
  }
  return "other";
}

std::string PathReport::to_string() const {
  std::string out = nodes.empty() ? std::string() : nodes[0];
  for (std::size_t i = 0; i + 1 < nodes.size(); ++i) {
    out += forward[i] ? " -> " : " <- ";
    out += nodes[i + 1];
  }
  return out;
}

std::vector<PathReport> enumerate_paths(const CausalDag& dag,
                                        const EffectQuery& query,
                                        const NameSet& given) {
  validate_query(dag, query);
  const std::size_t t = dag.index_of(query.treatment);
  const std::size_t y = dag.index_of(query.outcome);
  const auto z = indices_of(dag, given);
  for (std::size_t v : {t, y}) {
    if (std::binary_search(z.begin(), z.end(), v)) {
      throw Error(ErrorCode::kOverlappingArguments,
                  fmt::format("'{}' is both an endpoint and conditioned on",
                              dag.node(v).name),
                  {dag.node(v).name});
    }
  }
  const Adjacency& g = dag.adjacency();
  const std::vector<char> in_given = mask_of(dag.size(), z);
  const std::vector<char> open_collider = detail::ancestor_mask(g, z);

  std::vector<PathReport> out;
  std::vector<std::size_t> nodes{t};
  std::vector<bool> forward;
  std::vector<char> on_path(dag.size(), 0);
  on_path[t] = 1;

  auto emit = [&] {
    PathReport r;
    for (std::size_t v : nodes) r.nodes.push_back(dag.node(v).name);
    r.forward = forward;
    if (!forward.front()) {
      r.kind = PathKind::kBackdoor;
    } else if (std::all_of(forward.begin(), forward.end(),
                           [](bool f) { return f; })) {
      r.kind = PathKind::kCausal;
    }
    for (std::size_t i = 1; i + 1 < nodes.size(); ++i) {
      const bool collider = forward[i - 1] && !forward[i];
      const std::size_t v = nodes[i];
      if (collider ? !open_collider[v] : in_given[v]) {
        r.blocked_by.insert(dag.node(v).name);
      }
    }
    out.push_back(std::move(r));
    if (out.size() > kMaxPaths) {
      throw Error(ErrorCode::kInvalidArgument,
                  fmt::format("more than {} paths; graph too dense to list",
                              kMaxPaths));
    }
  };

  std::function<void(std::size_t)> walk = [&](std::size_t v) {
    auto step = [&](std::size_t next, bool fwd) {
      if (on_path[next]) return;
      nodes.push_back(next);
      forward.push_back(fwd);
      if (next == y) {
        emit();
      } else {
        on_path[next] = 1;
        walk(next);
        on_path[next] = 0;
      }
      nodes.pop_back();
      forward.pop_back();
    };
    for (std::size_t c : g.children[v]) step(c, true);
    for (std::size_t p : g.parents[v]) step(p, false);
  };
  walk(t);

  std::sort(out.begin(), out.end(),
            [](const PathReport& a, const PathReport& b) {
              return a.nodes < b.nodes;
            });
  return out;
}

NameSet AdjustmentResult::conditioning_set(std::size_t which) const {
  NameSet out = mediators;
  if (which < minimal_sets.size()) {
    out.insert(minimal_sets[which].begin(), minimal_sets[which].end());
  }
  return out;
}

NameSet mediators(const CausalDag& dag, const EffectQuery& query) {
  validate_query(dag, query);
  const std::size_t t = dag.index_of(query.treatment);
  const std::size_t y = dag.index_of(query.outcome);
  auto de = detail::descendant_mask(dag.adjacency(), t);
  auto an = detail::ancestor_mask(dag.adjacency(), {y});
  NameSet out;
  for (std::size_t i = 0; i < dag.size(); ++i) {
    if (i != t && i != y && de[i] && an[i]) out.insert(dag.node(i).name);
  }
  return out;
}

AdjustmentResult adjustment_sets(const CausalDag& dag,
                                 const EffectQuery& query) {
  AdjustmentProblem p = make_problem(dag, query);
  AdjustmentResult result;
  result.query = query;
  result.mediators = names_of(dag, p.required);
  if (p.latent_mediator) return result;
  // Some valid set exists iff the full relevant candidate pool is one.
  if (!separates(p, p.candidates)) return result;

  result.identifiable = true;
  std::vector<std::vector<std::size_t>> found;
  std::size_t evaluations = 0;
  bool complete = for_each_subset(
      p.candidates, p.candidates.size(), [&](const auto& subset) {
        if (contains_any(found, subset)) return true;
        if (++evaluations > kSearchBudget) return false;
        if (separates(p, subset)) {
          found.push_back(subset);
          if (found.size() >= kMaxMinimalSets) return false;
        }
        return true;
      });
  result.truncated = !complete;
  for (const auto& f : found) result.minimal_sets.push_back(names_of(dag, f));
  std::sort(result.minimal_sets.begin(), result.minimal_sets.end());
  return result;
}

bool is_valid_adjustment(const CausalDag& dag, const EffectQuery& query,
                         const NameSet& z) {
  AdjustmentProblem p = make_problem(dag, query);
  auto idx = indices_of(dag, z);
  for (std::size_t i : idx) {
    if (p.forbidden[i] || i == p.treatment || !dag.node(i).observed()) {
      return false;
    }
  }
  if (p.latent_mediator) return false;
  return separates(p, idx);
}

std::string ImpliedIndependence::to_string() const {
  return fmt::format("{} _||_ {} | {{{}}}", x, y, fmt::join(given, ", "));
}

std::vector<ImpliedIndependence> implied_independencies(const CausalDag& dag,
                                                        int max_conditioning,
                                                        bool include_latent) {
  if (max_conditioning < 0) {
    throw Error(ErrorCode::kInvalidArgument,
                "max_conditioning must be non-negative");
  }
  const Adjacency& g = dag.adjacency();
  auto usable = [&](std::size_t i) {
    return include_latent || dag.node(i).observed();
  };
  std::vector<ImpliedIndependence> out;
  for (std::size_t a = 0; a < dag.size(); ++a) {
    if (!usable(a)) continue;
    for (std::size_t b = a + 1; b < dag.size(); ++b) {
      if (!usable(b) || g.has_edge(a, b) || g.has_edge(b, a)) continue;
      // Minimal separators lie within the ancestors of the pair.
      auto an = detail::ancestor_mask(g, {a, b});
      std::vector<std::size_t> pool;
      for (std::size_t i = 0; i < dag.size(); ++i) {
        if (an[i] && i != a && i != b && usable(i)) pool.push_back(i);
      }
      std::vector<std::vector<std::size_t>> found;
      for_each_subset(pool, static_cast<std::size_t>(max_conditioning),
                      [&](const auto& subset) {
                        if (contains_any(found, subset)) return true;
                        if (detail::d_separated(g, a, b,
                                                mask_of(dag.size(), subset))) {
                          found.push_back(subset);
                        }
                        return true;
                      });
      for (const auto& f : found) {
        out.push_back({dag.node(a).name, dag.node(b).name, names_of(dag, f)});
      }
    }
  }
  return out;
}

std::string_view transport_verdict_name(const TransportVerdict& verdict) {
  if (std::holds_alternative<DirectlyTransportable>(verdict)) {
    return "DirectlyTransportable";
  }
  if (std::holds_alternative<TransportableByAdjustment>(verdict)) {
    return "TransportableByAdjustment";
  }
  return "NotDetermined";
}

TransportVerdict check_transportability(const CausalDag& dag,
                                        const NameSet& selection_nodes,
                                        const EffectQuery& query) {
  validate_query(dag, query);
  const std::size_t t = dag.index_of(query.treatment);
  const std::size_t y = dag.index_of(query.outcome);
  const Adjacency& g = dag.adjacency();
  std::vector<std::size_t> selection;
  for (const auto& s : selection_nodes) {
    auto idx = dag.find(s);
    if (!idx) {
      throw Error(ErrorCode::kInvalidSelectionNode,
                  fmt::format("selection node '{}' does not exist", s), {s});
    }
    if (*idx == t || *idx == y) {
      throw Error(ErrorCode::kInvalidSelectionNode,
                  fmt::format("selection node '{}' is the treatment or outcome",
                              s),
                  {s});
    }
    if (!g.parents[*idx].empty()) {
      throw Error(ErrorCode::kInvalidSelectionNode,
                  fmt::format("selection node '{}' has parents", s), {s});
    }
    selection.push_back(*idx);
  }

  const Adjacency intervened = g.without_incoming(t);
  auto s_admissible = [&](const std::vector<std::size_t>& z) {
    std::vector<char> given = mask_of(dag.size(), z);
    given[t] = 1;
    return std::all_of(selection.begin(), selection.end(), [&](std::size_t s) {
      return detail::d_separated(intervened, s, y, given);
    });
  };
  if (s_admissible({})) return DirectlyTransportable{};

  const EffectQuery total{query.treatment, query.outcome, EffectKind::kTotal};
  AdjustmentProblem backdoor = make_problem(dag, total);
  std::vector<std::size_t> seeds = selection;
  seeds.push_back(t);
  seeds.push_back(y);
  auto relevant = detail::ancestor_mask(g, seeds);
  std::vector<char> is_selection = mask_of(dag.size(), selection);
  std::vector<std::size_t> pool;
  for (std::size_t i = 0; i < dag.size(); ++i) {
    if (relevant[i] && !backdoor.forbidden[i] && !is_selection[i] &&
        dag.node(i).observed() && i != t) {
      pool.push_back(i);
    }
  }

  std::optional<std::vector<std::size_t>> chosen;
  std::size_t evaluations = 0;
  for_each_subset(pool, pool.size(), [&](const auto& subset) {
    if (++evaluations > kSearchBudget) return false;
    if (separates(backdoor, subset) && s_admissible(subset)) {
      chosen = subset;
      return false;
    }
    return true;
  });
  if (chosen) return TransportableByAdjustment{names_of(dag, *chosen)};
  return NotDetermined{};
}

}  // namespace causal
