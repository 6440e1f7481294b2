#ifndef CAUSAL_ANALYSIS_H_
#define CAUSAL_ANALYSIS_H_

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "causal/core.h"
#include "causal/ident.h"
#include "causal/stats.h"
#include "causal/tabular.h"

namespace causal::analysis {

enum class EstimateKind { kTotal, kControlledDirect, kIndirect };
enum class Method { kLinear, kStratified, kIpw };

std::string_view estimate_kind_name(EstimateKind kind);
std::string_view method_name(Method method);
std::optional<Method> parse_method(std::string_view text);

// IPW weights are clipped to this range; the clip count is reported.
inline constexpr double kMinWeight = 0.01;
inline constexpr double kMaxWeight = 100.0;

struct EffectEstimate {
  EstimateKind kind = EstimateKind::kTotal;
  double estimate = 0;
  // Absent for indirect effects.
  std::optional<double> std_error;
  Method method = Method::kLinear;
  NameSet adjustment;
  // Controlled direct effects also condition on these.
  NameSet mediators;
  std::size_t n_used = 0;
  // IPW only: number of weights that hit a clipping bound.
  std::size_t clipped = 0;
  // DataTable::fingerprint() of the data the estimate came from.
  std::uint64_t provenance = 0;
  std::vector<std::string> warnings;
};

struct EstimateOptions {
  // Replaces the default (lexicographically first) minimal set. A set that
  // fails the adjustment criterion is used anyway, with a warning.
  std::optional<NameSet> adjustment;
};

// Linear: OLS of outcome on treatment + adjustment (categoricals one-hot).
// Stratified: per-stratum difference in means, weighted by stratum share.
// Ipw: Hajek estimator, logistic propensity on the adjustment set.
// Errors: kNotIdentifiable, kMissingColumn, kInvalidArgument (treatment not
// 0/1), kPositivityViolation (stratified), stats errors.
EffectEstimate estimate_total(const CausalDag& dag, const DataTable& data,
                              const EffectQuery& query, Method method,
                              const EstimateOptions& options = {});

// OLS of outcome on treatment + mediators + adjustment set.
EffectEstimate estimate_direct(const CausalDag& dag, const DataTable& data,
                               const EffectQuery& query,
                               const EstimateOptions& options = {});

// total - direct. Errors: kMethodMismatch unless both are Linear,
// kProvenanceMismatch for estimates from different data,
// kInvalidArgument for the wrong estimate kinds.
EffectEstimate estimate_indirect(const EffectEstimate& total,
                                 const EffectEstimate& direct);

enum class Verdict { kConsistent, kViolated, kUntestable };

std::string_view verdict_name(Verdict verdict);

struct ImplicationCheck {
  ImpliedIndependence implication;
  Verdict verdict = Verdict::kUntestable;
  std::optional<stats::TestResult> result;
  double adjusted_p = 1;
  // Why the implication was not tested.
  std::string reason;
};

struct MapValidationReport {
  std::vector<ImplicationCheck> checks;
  double alpha = 0.05;
  std::size_t consistent = 0;
  std::size_t violated = 0;
  std::size_t untestable = 0;
};

// Tests every implied independence (latent nodes included in the listing)
// whose columns are present and observed; the rest are untestable. Holm
// correction across the tested ones. Never throws for data problems.
MapValidationReport validate_map(const CausalDag& dag, const DataTable& data,
                                 std::size_t max_conditioning, double alpha);

}  // namespace causal::analysis

#endif  // CAUSAL_ANALYSIS_H_
