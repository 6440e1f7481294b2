#include "causal/design.h"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <random>

#include <fmt/format.h>

#include "causal/error.h"

namespace causal::design {

namespace {

void check_ratio(const Ratio& r) {
  if (!(r.treatment > 0) || !(r.control > 0) || !std::isfinite(r.treatment) ||
      !std::isfinite(r.control)) {
    throw Error(ErrorCode::kInvalidRatio,
                fmt::format("ratio terms must be positive (got {}:{})",
                            r.treatment, r.control));
  }
}

// Ratio terms as a reduced integer pair.
std::pair<long long, long long> block_shape(const Ratio& r) {
  check_ratio(r);
  auto integral = [](double v) {
    return std::fabs(v - std::round(v)) < 1e-9 && v < 1e6;
  };
  if (!integral(r.treatment) || !integral(r.control)) {
    throw Error(ErrorCode::kInvalidRatio,
                fmt::format("block randomization needs integer ratio terms "
                            "(got {}:{})",
                            r.treatment, r.control));
  }
  auto a = static_cast<long long>(std::llround(r.treatment));
  auto b = static_cast<long long>(std::llround(r.control));
  const long long g = std::gcd(a, b);
  return {a / g, b / g};
}

using StratumKey = std::vector<double>;

// Rows grouped by their values in `columns`, in key order.
std::map<StratumKey, std::vector<std::size_t>> group_rows(
    const DataTable& data, const std::vector<const Column*>& columns) {
  std::map<StratumKey, std::vector<std::size_t>> groups;
  for (std::size_t r = 0; r < data.n_rows(); ++r) {
    StratumKey key;
    for (const Column* c : columns) key.push_back(c->values[r]);
    groups[key].push_back(r);
  }
  return groups;
}

std::string stratum_label(const std::vector<const Column*>& columns,
                          std::size_t row) {
  if (columns.empty()) return "(all)";
  std::vector<std::string> parts;
  for (const Column* c : columns) parts.push_back(c->name + "=" + c->cell(row));
  return fmt::format("{}", fmt::join(parts, ","));
}

std::string format_set(const NameSet& s) {
  return fmt::format("{{{}}}", fmt::join(s, ", "));
}

}  // namespace

std::string_view check_kind_name(CheckKind kind) {
  switch (kind) {
    case CheckKind::kSrmMarginal: return "SrmMarginal";
    case CheckKind::kSrmPerStratum: return "SrmPerStratum";
    case CheckKind::kAATest: return "AATest";
    case CheckKind::kDesignCI: return "DesignCI";
  }
  return "DesignCI";
}

AssignmentPlan derive_design(const CausalDag& dag, const EffectQuery& query,
                             Ratio ratio, std::uint64_t seed) {
  check_ratio(ratio);
  EffectQuery total = query;
  total.kind = EffectKind::kTotal;
  AdjustmentResult adj = adjustment_sets(dag, total);
  if (!adj.identifiable) {
    std::vector<std::string> open;
    for (const auto& path : enumerate_paths(dag, total, {})) {
      if (path.kind == PathKind::kBackdoor && path.open()) {
        open.push_back(path.to_string());
      }
    }
    throw Error(ErrorCode::kNotIdentifiable,
                fmt::format("total effect of {} on {} is not identifiable; "
                            "open backdoor path(s): {}",
                            total.treatment, total.outcome,
                            fmt::join(open, "; ")),
                open);
  }
  NameSet restricted_ancestors;
  for (const auto& name : ancestors(dag, total.treatment)) {
    const NodeSpec& n = dag.node(dag.index_of(name));
    if (n.restricted && n.observed()) restricted_ancestors.insert(name);
  }
  const NameSet* chosen = &adj.minimal_sets.front();
  for (const auto& set : adj.minimal_sets) {
    if (std::includes(set.begin(), set.end(), restricted_ancestors.begin(),
                      restricted_ancestors.end())) {
      chosen = &set;
      break;
    }
  }
  AssignmentPlan plan;
  plan.query = total;
  plan.ratio = ratio;
  plan.seed = seed;
  plan.adjustment = *chosen;
  for (const auto& name : *chosen) {
    if (dag.node(dag.index_of(name)).restricted) plan.strata_by.insert(name);
  }
  return plan;
}

DataTable assign(const AssignmentPlan& plan, const DataTable& units) {
  const auto [treated_per_block, control_per_block] = block_shape(plan.ratio);
  const long long block = treated_per_block + control_per_block;
  std::vector<const Column*> strata;
  for (const auto& name : plan.strata_by) {
    const Column* c = units.find(name);
    if (!c) {
      throw Error(ErrorCode::kMissingStratumColumn,
                  fmt::format("units have no stratum column '{}'", name), {name});
    }
    strata.push_back(c);
  }

  std::mt19937_64 rng(plan.seed);
  std::vector<double> arm(units.n_rows(), 0.0);
  for (const auto& [key, rows] : group_rows(units, strata)) {
    const std::size_t full_blocks = rows.size() / static_cast<std::size_t>(block);
    const std::size_t rest = rows.size() % static_cast<std::size_t>(block);
    std::vector<double> sequence;
    sequence.reserve(rows.size());
    std::vector<double> pattern(static_cast<std::size_t>(block), 0.0);
    std::fill_n(pattern.begin(), treated_per_block, 1.0);
    for (std::size_t b = 0; b < full_blocks; ++b) {
      std::shuffle(pattern.begin(), pattern.end(), rng);
      sequence.insert(sequence.end(), pattern.begin(), pattern.end());
    }
    if (rest > 0) {
      const double share = static_cast<double>(rest) *
                           static_cast<double>(treated_per_block) /
                           static_cast<double>(block);
      auto treated = static_cast<std::size_t>(std::floor(share));
      const double frac = share - std::floor(share);
      if (frac > 0.5 || (frac == 0.5 && (rng() & 1u))) ++treated;
      std::vector<double> tail(rest, 0.0);
      std::fill_n(tail.begin(), treated, 1.0);
      std::shuffle(tail.begin(), tail.end(), rng);
      sequence.insert(sequence.end(), tail.begin(), tail.end());
    }
    for (std::size_t i = 0; i < rows.size(); ++i) arm[rows[i]] = sequence[i];
  }
  return units.with_column(binary_column(std::string(kArmColumn), std::move(arm)));
}

std::vector<ValidityCheck> derive_validity_checks(const CausalDag& dag,
                                                  const AssignmentPlan& plan) {
  const std::string arm(kArmColumn);
  const std::string ratio =
      fmt::format("{}:{}", plan.ratio.treatment, plan.ratio.control);
  std::vector<ValidityCheck> checks;
  checks.push_back({CheckKind::kSrmMarginal,
                    fmt::format("{} treatment:control counts vs {}", arm, ratio),
                    arm, "", {}});
  if (!plan.strata_by.empty()) {
    checks.push_back({CheckKind::kSrmPerStratum,
                      fmt::format("{} counts vs {} within each stratum of {}",
                                  arm, ratio, format_set(plan.strata_by)),
                      arm, "", plan.strata_by});
  }
  const auto descendants_of_t = descendants(dag, plan.query.treatment);
  for (const auto& node : dag.nodes()) {
    if (!node.observed() || node.name == plan.query.treatment ||
        node.name == plan.query.outcome || descendants_of_t.count(node.name) ||
        plan.strata_by.count(node.name)) {
      continue;
    }
    checks.push_back({CheckKind::kDesignCI,
                      fmt::format("{} _||_ {} | {}", arm, node.name,
                                  format_set(plan.strata_by)),
                      arm, node.name, plan.strata_by});
  }
  checks.push_back(
      {CheckKind::kAATest,
       fmt::format("{} _||_ {} | {} on pre-activation data", arm,
                   plan.query.outcome, format_set(plan.strata_by)),
       arm, plan.query.outcome, plan.strata_by});
  return checks;
}

namespace {

std::pair<long long, long long> arm_counts(const Column& arm,
                                           const std::vector<std::size_t>& rows) {
  long long treated = 0, control = 0;
  for (std::size_t r : rows) {
    (arm.values[r] == 1.0 ? treated : control) += 1;
  }
  return {treated, control};
}

const Column& arm_column(const DataTable& data) {
  const Column& arm = data.column(kArmColumn);
  for (double v : arm.values) {
    if (v != 0.0 && v != 1.0) {
      throw Error(ErrorCode::kInvalidArgument,
                  fmt::format("column '{}' must be 0/1", kArmColumn));
    }
  }
  return arm;
}

}  // namespace

ValidityReport run_validity_checks(const std::vector<ValidityCheck>& checks,
                                   const AssignmentPlan& plan,
                                   const DataTable& data, double alpha,
                                   const DataTable* pre_activation) {
  ValidityReport report;
  report.alpha = alpha;
  const double ratios[] = {plan.ratio.treatment, plan.ratio.control};

  for (const auto& check : checks) {
    switch (check.kind) {
      case CheckKind::kSrmMarginal: {
        const Column& arm = arm_column(data);
        std::vector<std::size_t> rows(data.n_rows());
        std::iota(rows.begin(), rows.end(), 0);
        auto [t, c] = arm_counts(arm, rows);
        const long long counts[] = {t, c};
        CheckOutcome out;
        out.check = check;
        out.executed = true;
        out.result = stats::chi_square_gof(counts, ratios);
        report.outcomes.push_back(std::move(out));
        break;
      }
      case CheckKind::kSrmPerStratum: {
        const Column& arm = arm_column(data);
        std::vector<const Column*> strata;
        for (const auto& name : check.given) strata.push_back(&data.column(name));
        for (const auto& [key, rows] : group_rows(data, strata)) {
          auto [t, c] = arm_counts(arm, rows);
          const long long counts[] = {t, c};
          CheckOutcome out;
          out.check = check;
          out.stratum = stratum_label(strata, rows.front());
          out.executed = true;
          out.result = stats::chi_square_gof(counts, ratios);
          report.outcomes.push_back(std::move(out));
        }
        break;
      }
      case CheckKind::kDesignCI: {
        CheckOutcome out;
        out.check = check;
        out.executed = true;
        out.result = stats::ci_test(data, check.x, check.y, check.given);
        report.outcomes.push_back(std::move(out));
        break;
      }
      case CheckKind::kAATest: {
        CheckOutcome out;
        out.check = check;
        if (pre_activation) {
          out.executed = true;
          out.result =
              stats::ci_test(*pre_activation, check.x, check.y, check.given);
        } else {
          out.skipped_reason = "needs pre-activation data (arm assigned, "
                               "treatment not yet active)";
        }
        report.outcomes.push_back(std::move(out));
        break;
      }
    }
  }

  std::vector<double> raw;
  for (const auto& o : report.outcomes) {
    if (o.executed) raw.push_back(o.result.p_value);
  }
  const std::vector<double> adjusted = stats::holm_adjust(raw);
  std::size_t k = 0;
  for (auto& o : report.outcomes) {
    if (!o.executed) continue;
    o.adjusted_p = adjusted[k++];
    o.passed = o.adjusted_p >= alpha;
    if (!o.passed) ++report.failures;
  }
  report.passed = report.failures == 0;
  return report;
}

PositivityReport positivity_check(const DataTable& data, std::string_view arm,
                                  const NameSet& strata) {
  const Column& arm_col = data.column(arm);
  for (double v : arm_col.values) {
    if (v != 0.0 && v != 1.0) {
      throw Error(ErrorCode::kInvalidArgument,
                  fmt::format("arm column '{}' must be binary", arm),
                  {std::string(arm)});
    }
  }
  std::vector<const Column*> columns;
  for (const auto& name : strata) {
    const Column& c = data.column(name);
    if (!c.categorical()) {
      throw Error(ErrorCode::kNonCategoricalColumn,
                  fmt::format("stratum column '{}' is continuous", name), {name});
    }
    columns.push_back(&c);
  }
  PositivityReport report;
  for (const auto& [key, rows] : group_rows(data, columns)) {
    auto [t, c] = arm_counts(arm_col, rows);
    StratumCount sc{stratum_label(columns, rows.front()),
                    static_cast<std::size_t>(t), static_cast<std::size_t>(c)};
    if (t == 0 || c == 0) {
      report.violations.push_back(fmt::format(
          "stratum {} has no {} units", sc.stratum, t == 0 ? "treated" : "control"));
    } else if (std::min(sc.treated, sc.control) < kMinArmCount) {
      report.warnings.push_back(fmt::format(
          "stratum {} has only {} {} unit(s)", sc.stratum,
          std::min(sc.treated, sc.control),
          sc.treated < sc.control ? "treated" : "control"));
    }
    report.strata.push_back(std::move(sc));
  }
  return report;
}

}  // namespace causal::design
