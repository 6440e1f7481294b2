#include "causal/analysis.h"

#include <algorithm>
#include <cmath>
#include <map>

#include <fmt/format.h>

#include "causal/design.h"
#include "causal/error.h"

namespace causal::analysis {

namespace {

std::string format_set(const NameSet& s) {
  return fmt::format("{{{}}}", fmt::join(s, ", "));
}

const Column& require_column(const DataTable& data, const std::string& name,
                             std::string_view role) {
  const Column* c = data.find(name);
  if (!c) {
    throw Error(ErrorCode::kMissingColumn,
                fmt::format("{} '{}' has no column in the data", role, name),
                {name});
  }
  return *c;
}

const Column& require_binary_treatment(const DataTable& data,
                                       const std::string& name) {
  const Column& t = require_column(data, name, "treatment");
  for (double v : t.values) {
    if (v != 0.0 && v != 1.0) {
      throw Error(ErrorCode::kInvalidArgument,
                  fmt::format("treatment column '{}' must be 0/1", name), {name});
    }
  }
  return t;
}

// Regressors for one column: continuous and binary columns enter as is,
// categorical ones as indicators for every level but the first.
void append_regressors(const Column& c, std::vector<stats::Regressor>& out) {
  if (c.type != ColumnType::kCategorical) {
    out.push_back({c.name, c.values});
    return;
  }
  for (std::size_t level = 1; level < c.levels.size(); ++level) {
    std::vector<double> v(c.values.size());
    for (std::size_t r = 0; r < v.size(); ++r) {
      v[r] = c.values[r] == static_cast<double>(level) ? 1.0 : 0.0;
    }
    out.push_back({c.name + "=" + c.levels[level], std::move(v)});
  }
}

std::vector<stats::Regressor> design_matrix(const DataTable& data,
                                            const NameSet& names,
                                            std::string_view role) {
  std::vector<stats::Regressor> x;
  for (const auto& name : names) {
    append_regressors(require_column(data, name, role), x);
  }
  return x;
}

void check_observed(const CausalDag& dag, const NameSet& names) {
  for (const auto& name : names) {
    if (!dag.node(dag.index_of(name)).observed()) {
      throw Error(ErrorCode::kInvalidArgument,
                  fmt::format("cannot adjust for latent node '{}'", name), {name});
    }
  }
}

// Adjustment set to use for the query, honoring an override.
NameSet choose_adjustment(const CausalDag& dag, const EffectQuery& query,
                          const AdjustmentResult& adj,
                          const EstimateOptions& options,
                          std::vector<std::string>& warnings) {
  if (options.adjustment) {
    check_observed(dag, *options.adjustment);
    if (!is_valid_adjustment(dag, query, *options.adjustment)) {
      warnings.push_back(fmt::format(
          "adjustment set {} does not satisfy the adjustment criterion; the "
          "estimate may be biased",
          format_set(*options.adjustment)));
    }
    return *options.adjustment;
  }
  if (!adj.identifiable) {
    throw Error(ErrorCode::kNotIdentifiable,
                fmt::format("{} effect of {} on {} is not identifiable",
                            effect_kind_name(query.kind), query.treatment,
                            query.outcome));
  }
  if (adj.minimal_sets.size() > 1) {
    warnings.push_back(fmt::format(
        "{} minimal adjustment sets; using {}", adj.minimal_sets.size(),
        format_set(adj.minimal_sets.front())));
  }
  return adj.minimal_sets.front();
}

EffectEstimate linear_estimate(const DataTable& data, const EffectQuery& query,
                               const NameSet& controls) {
  const Column& t = require_binary_treatment(data, query.treatment);
  const Column& y = require_column(data, query.outcome, "outcome");
  std::vector<stats::Regressor> x{{t.name, t.values}};
  auto rest = design_matrix(data, controls, "adjustment variable");
  x.insert(x.end(), rest.begin(), rest.end());
  const stats::LinearFit fit = stats::ols_fit(y.values, x);
  EffectEstimate e;
  e.method = Method::kLinear;
  e.estimate = fit.coefficient(t.name);
  e.std_error = fit.standard_error(t.name);
  e.n_used = fit.n;
  return e;
}

struct ArmMoments {
  double n = 0;
  double sum = 0;
  double sum_sq = 0;

  double mean() const { return sum / n; }
  // Sample variance; zero for a single unit.
  double variance() const {
    if (n < 2) return 0;
    return std::max(0.0, (sum_sq - sum * sum / n) / (n - 1));
  }
};

EffectEstimate stratified_estimate(const DataTable& data,
                                   const EffectQuery& query,
                                   const NameSet& strata) {
  const Column& t = require_binary_treatment(data, query.treatment);
  const Column& y = require_column(data, query.outcome, "outcome");
  std::vector<const Column*> columns;
  for (const auto& name : strata) {
    columns.push_back(&require_column(data, name, "adjustment variable"));
  }
  const design::PositivityReport positivity =
      design::positivity_check(data, t.name, strata);
  if (!positivity.passed()) {
    throw Error(ErrorCode::kPositivityViolation,
                fmt::format("positivity violated: {}",
                            fmt::join(positivity.violations, "; ")),
                positivity.violations);
  }

  std::map<std::vector<double>, std::pair<ArmMoments, ArmMoments>> groups;
  for (std::size_t r = 0; r < data.n_rows(); ++r) {
    std::vector<double> key;
    for (const Column* c : columns) key.push_back(c->values[r]);
    auto& [treated, control] = groups[key];
    ArmMoments& m = t.values[r] == 1.0 ? treated : control;
    m.n += 1;
    m.sum += y.values[r];
    m.sum_sq += y.values[r] * y.values[r];
  }
  const double n = static_cast<double>(data.n_rows());
  double estimate = 0, variance = 0;
  for (const auto& [key, arms] : groups) {
    const auto& [treated, control] = arms;
    const double w = (treated.n + control.n) / n;
    estimate += w * (treated.mean() - control.mean());
    variance += w * w *
                (treated.variance() / treated.n + control.variance() / control.n);
  }
  EffectEstimate e;
  e.method = Method::kStratified;
  e.estimate = estimate;
  e.std_error = std::sqrt(variance);
  e.n_used = data.n_rows();
  e.warnings = positivity.warnings;
  return e;
}

EffectEstimate ipw_estimate(const DataTable& data, const EffectQuery& query,
                            const NameSet& controls) {
  const Column& t = require_binary_treatment(data, query.treatment);
  const Column& y = require_column(data, query.outcome, "outcome");
  const auto x = design_matrix(data, controls, "adjustment variable");
  const stats::PropensityModel model = stats::logistic_fit(t.values, x);
  const std::vector<double> e = model.predict(x);

  EffectEstimate out;
  out.method = Method::kIpw;
  std::vector<double> w(data.n_rows());
  for (std::size_t r = 0; r < w.size(); ++r) {
    const double raw = t.values[r] == 1.0 ? 1.0 / e[r] : 1.0 / (1.0 - e[r]);
    w[r] = std::clamp(raw, kMinWeight, kMaxWeight);
    if (w[r] != raw) ++out.clipped;
  }
  double w1 = 0, wy1 = 0, w0 = 0, wy0 = 0;
  for (std::size_t r = 0; r < w.size(); ++r) {
    if (t.values[r] == 1.0) {
      w1 += w[r];
      wy1 += w[r] * y.values[r];
    } else {
      w0 += w[r];
      wy0 += w[r] * y.values[r];
    }
  }
  const double mu1 = wy1 / w1;
  const double mu0 = wy0 / w0;
  // Influence-function variance of the Hajek contrast, propensity fixed.
  const double n = static_cast<double>(w.size());
  double ss = 0;
  for (std::size_t r = 0; r < w.size(); ++r) {
    const double phi = t.values[r] == 1.0
                           ? w[r] * (y.values[r] - mu1) / (w1 / n)
                           : -w[r] * (y.values[r] - mu0) / (w0 / n);
    ss += phi * phi;
  }
  out.estimate = mu1 - mu0;
  out.std_error = std::sqrt(ss) / n;
  out.n_used = w.size();
  if (out.clipped > 0) {
    out.warnings.push_back(fmt::format("{} weight(s) clipped to [{}, {}]",
                                       out.clipped, kMinWeight, kMaxWeight));
  }
  if (!model.converged) {
    out.warnings.push_back("propensity model did not converge");
  }
  return out;
}

}  // namespace

std::string_view estimate_kind_name(EstimateKind kind) {
  switch (kind) {
    case EstimateKind::kTotal: return "total";
    case EstimateKind::kControlledDirect: return "direct";
    case EstimateKind::kIndirect: return "indirect";
  }
  return "total";
}

std::string_view method_name(Method method) {
  switch (method) {
    case Method::kLinear: return "linear";
    case Method::kStratified: return "stratified";
    case Method::kIpw: return "ipw";
  }
  return "linear";
}

std::optional<Method> parse_method(std::string_view text) {
  if (text == "linear") return Method::kLinear;
  if (text == "stratified") return Method::kStratified;
  if (text == "ipw") return Method::kIpw;
  return std::nullopt;
}

EffectEstimate estimate_total(const CausalDag& dag, const DataTable& data,
                              const EffectQuery& query, Method method,
                              const EstimateOptions& options) {
  EffectQuery q = query;
  q.kind = EffectKind::kTotal;
  validate_query(dag, q);
  std::vector<std::string> warnings;
  const AdjustmentResult adj =
      options.adjustment ? AdjustmentResult{} : adjustment_sets(dag, q);
  const NameSet controls = choose_adjustment(dag, q, adj, options, warnings);

  EffectEstimate e;
  switch (method) {
    case Method::kLinear: e = linear_estimate(data, q, controls); break;
    case Method::kStratified: e = stratified_estimate(data, q, controls); break;
    case Method::kIpw: e = ipw_estimate(data, q, controls); break;
  }
  e.kind = EstimateKind::kTotal;
  e.adjustment = controls;
  e.provenance = data.fingerprint();
  warnings.insert(warnings.end(), e.warnings.begin(), e.warnings.end());
  e.warnings = std::move(warnings);
  return e;
}

EffectEstimate estimate_direct(const CausalDag& dag, const DataTable& data,
                               const EffectQuery& query,
                               const EstimateOptions& options) {
  EffectQuery q = query;
  q.kind = EffectKind::kControlledDirect;
  validate_query(dag, q);
  const NameSet meds = mediators(dag, q);
  for (const auto& m : meds) {
    if (!dag.node(dag.index_of(m)).observed()) {
      throw Error(ErrorCode::kNotIdentifiable,
                  fmt::format("mediator '{}' is latent", m), {m});
    }
    require_column(data, m, "mediator");
  }
  std::vector<std::string> warnings;
  const AdjustmentResult adj =
      options.adjustment ? AdjustmentResult{} : adjustment_sets(dag, q);
  const NameSet controls = choose_adjustment(dag, q, adj, options, warnings);

  NameSet conditioning = meds;
  conditioning.insert(controls.begin(), controls.end());
  EffectEstimate e = linear_estimate(data, q, conditioning);
  e.kind = EstimateKind::kControlledDirect;
  e.adjustment = controls;
  e.mediators = meds;
  e.provenance = data.fingerprint();
  e.warnings = std::move(warnings);
  return e;
}

EffectEstimate estimate_indirect(const EffectEstimate& total,
                                 const EffectEstimate& direct) {
  if (total.kind != EstimateKind::kTotal ||
      direct.kind != EstimateKind::kControlledDirect) {
    throw Error(ErrorCode::kInvalidArgument,
                "indirect effect needs a total and a direct estimate");
  }
  if (total.method != Method::kLinear || direct.method != Method::kLinear) {
    throw Error(ErrorCode::kMethodMismatch,
                fmt::format("indirect effect needs linear estimates (got {} "
                            "total, {} direct)",
                            method_name(total.method), method_name(direct.method)));
  }
  if (total.provenance != direct.provenance) {
    throw Error(ErrorCode::kProvenanceMismatch,
                "total and direct estimates come from different data");
  }
  EffectEstimate e;
  e.kind = EstimateKind::kIndirect;
  e.method = Method::kLinear;
  e.estimate = total.estimate - direct.estimate;
  e.adjustment = direct.adjustment;
  e.mediators = direct.mediators;
  e.n_used = direct.n_used;
  e.provenance = total.provenance;
  return e;
}

std::string_view verdict_name(Verdict verdict) {
  switch (verdict) {
    case Verdict::kConsistent: return "consistent";
    case Verdict::kViolated: return "violated";
    case Verdict::kUntestable: return "untestable";
  }
  return "untestable";
}

MapValidationReport validate_map(const CausalDag& dag, const DataTable& data,
                                 std::size_t max_conditioning, double alpha) {
  MapValidationReport report;
  report.alpha = alpha;
  for (auto& imp : implied_independencies(
           dag, static_cast<int>(max_conditioning), /*include_latent=*/true)) {
    ImplicationCheck check;
    check.implication = std::move(imp);
    const ImpliedIndependence& i = check.implication;
    std::vector<std::string> involved{i.x, i.y};
    involved.insert(involved.end(), i.given.begin(), i.given.end());
    for (const auto& name : involved) {
      if (!dag.node(dag.index_of(name)).observed()) {
        check.reason = fmt::format("involves latent node {}", name);
        break;
      }
      if (!data.has(name)) {
        check.reason = fmt::format("column {} missing from data", name);
        break;
      }
    }
    if (check.reason.empty()) {
      try {
        check.result = stats::ci_test(data, i.x, i.y, i.given);
      } catch (const Error& e) {
        check.reason = e.what();
      }
    }
    report.checks.push_back(std::move(check));
  }

  std::vector<double> raw;
  for (const auto& c : report.checks) {
    if (c.result) raw.push_back(c.result->p_value);
  }
  const auto adjusted = stats::holm_adjust(raw);
  std::size_t k = 0;
  for (auto& c : report.checks) {
    if (!c.result) {
      c.verdict = Verdict::kUntestable;
      ++report.untestable;
      continue;
    }
    c.adjusted_p = adjusted[k++];
    if (c.adjusted_p < alpha) {
      c.verdict = Verdict::kViolated;
      ++report.violated;
    } else {
      c.verdict = Verdict::kConsistent;
      ++report.consistent;
    }
  }
  return report;
}

}  // namespace causal::analysis
