#ifndef CAUSAL_SCM_H_
#define CAUSAL_SCM_H_

#include <cstdint>
#include <map>
#include <string>
#include <string_view>
#include <utility>
#include <variant>

#include "causal/core.h"
#include "causal/tabular.h"

namespace causal::scm {

// P(T = 1) = sigmoid(intercept + scale * sum(coefficient * parent)).
struct Logistic {
  double scale = 1.0;
  double intercept = 0.0;
};

// Randomized treatment, independent of the parents.
struct Bernoulli {
  double p = 0.5;
};

using TreatmentMechanism = std::variant<Logistic, Bernoulli>;

// Linear-Gaussian SCM: each node is the coefficient-weighted sum of its
// parents plus N(0, noise_std^2). The treatment node follows its mechanism.
// Root nodes listed in `binary_roots` are Bernoulli(p) instead of Gaussian
// (e.g. a two-variant restricted variable).
struct ScmSpec {
  CausalDag dag;
  std::map<std::pair<std::string, std::string>, double> coefficients;
  std::map<std::string, double> noise_std;
  TreatmentMechanism treatment_mechanism = Bernoulli{};
  std::map<std::string, double> binary_roots;
  std::uint64_t seed = 0;

  double coefficient(std::string_view from, std::string_view to) const;
};

// Checks the invariants: one coefficient per edge and none for non-edges,
// non-negative noise for every node, binary roots without parents,
// probabilities in [0, 1]. Throws Error(kInvalidSpec).
void validate(const ScmSpec& spec);

// Draws n rows, one column per node (latent ones included; see drop_latent).
// Treatment and binary roots are Binary columns, the rest Continuous.
// Deterministic for a given spec (including its seed).
DataTable simulate(const ScmSpec& spec, std::size_t n);

DataTable drop_latent(const DataTable& table, const CausalDag& dag);

struct TrueEffects {
  double total = 0;
  double direct = 0;
  double indirect = 0;
};

// Path tracing: direct is the T -> Y coefficient (0 without the edge), total
// sums coefficient products over all directed T -> Y paths.
TrueEffects true_effects(const ScmSpec& spec, const EffectQuery& query);

// JSON sidecar:
// {
//   "coefficients": {"A->B": 0.5, ...},             required, every edge
//   "noise_std": {"A": 1.0, ...},                   optional, default 1.0
//   "treatment": {"mechanism": "logistic", "scale": 1.0, "intercept": 0.0}
//              | {"mechanism": "bernoulli", "p": 0.5},
//   "binary_roots": {"VV": 0.5},                    optional
//   "seed": 1                                        optional
// }
// Throws Error(kInvalidSpec) on malformed input.
ScmSpec parse_spec_json(const CausalDag& dag, std::string_view json_text);
ScmSpec load_spec_file(const CausalDag& dag, const std::string& path);

}  // namespace causal::scm

#endif  // CAUSAL_SCM_H_
