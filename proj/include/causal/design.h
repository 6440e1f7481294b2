#ifndef CAUSAL_DESIGN_H_
#define CAUSAL_DESIGN_H_

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "causal/core.h"
#include "causal/ident.h"
#include "causal/stats.h"
#include "causal/tabular.h"

namespace causal::design {

// Column added by assign(): 1 = treatment arm, 0 = control arm.
inline constexpr std::string_view kArmColumn = "_arm";

struct Ratio {
  double treatment = 1;
  double control = 1;
};

struct AssignmentPlan {
  EffectQuery query;
  NameSet strata_by;
  Ratio ratio;
  std::uint64_t seed = 0;
  // Minimal adjustment set the strata were taken from.
  NameSet adjustment;
};

// Stratifies on the restricted variables of the chosen adjustment set: the
// lexicographically first minimal set that contains every restricted
// observed ancestor of the treatment (first minimal set if none does).
// Errors: kNotIdentifiable (subjects list the open backdoor paths),
// kInvalidRatio.
AssignmentPlan derive_design(const CausalDag& dag, const EffectQuery& query,
                             Ratio ratio, std::uint64_t seed);

// Permuted-block randomization inside each stratum (block = ratio terms
// reduced to lowest integers). A trailing partial block gets the rounded
// ratio share. Adds kArmColumn. Errors: kMissingStratumColumn, kInvalidRatio.
DataTable assign(const AssignmentPlan& plan, const DataTable& units);

enum class CheckKind { kSrmMarginal, kSrmPerStratum, kAATest, kDesignCI };

std::string_view check_kind_name(CheckKind kind);

struct ValidityCheck {
  CheckKind kind = CheckKind::kSrmMarginal;
  // Human-readable target, e.g. "_arm _||_ Temp | {VV}".
  std::string target;
  // Columns tested. For CI checks: x, y and the conditioning set.
  std::string x;
  std::string y;
  NameSet given;
  // Passes when the (Holm-adjusted) p-value is >= alpha.
  std::string expected = "p >= alpha";
};

// (a) marginal SRM on the arm column, (b) SRM within strata (expanded per
// stratum level at run time), (c) arm _||_ X | strata for every observed
// non-descendant X of the treatment, (d) A/A check arm _||_ outcome | strata
// on pre-activation data.
std::vector<ValidityCheck> derive_validity_checks(const CausalDag& dag,
                                                  const AssignmentPlan& plan);

struct CheckOutcome {
  ValidityCheck check;
  // Stratum label for per-stratum SRM rows ("VV=1"); empty otherwise.
  std::string stratum;
  bool executed = false;
  std::string skipped_reason;
  stats::TestResult result;
  double adjusted_p = 1;
  bool passed = true;
};

struct ValidityReport {
  std::vector<CheckOutcome> outcomes;
  double alpha = 0.05;
  bool passed = true;
  std::size_t failures = 0;
};

// Runs the checks on experiment data (must contain kArmColumn). The A/A
// check runs only on `pre_activation` data; without it the check is
// reported as skipped. Holm correction across all executed checks.
ValidityReport run_validity_checks(
    const std::vector<ValidityCheck>& checks, const AssignmentPlan& plan,
    const DataTable& data, double alpha,
    const DataTable* pre_activation = nullptr);

struct StratumCount {
  std::string stratum;  // "VV=0,City=a" or "(all)"
  std::size_t treated = 0;
  std::size_t control = 0;
};

struct PositivityReport {
  std::vector<StratumCount> strata;
  std::vector<std::string> violations;  // strata lacking an arm
  std::vector<std::string> warnings;    // strata with an arm below 5 units
  bool passed() const { return violations.empty(); }
};

inline constexpr std::size_t kMinArmCount = 5;

// Per-stratum arm counts over the categorical strata columns.
// Errors: kNonCategoricalColumn, kInvalidArgument (arm not binary).
PositivityReport positivity_check(const DataTable& data, std::string_view arm,
                                  const NameSet& strata);

}  // namespace causal::design

#endif  // CAUSAL_DESIGN_H_
