// causal: command-line front end for the workbench.
//
// Exit codes: 0 success, 1 failed verdict (SRM fail, violated implication,
// not identifiable), 2 usage or parse error, 3 data error.

#include <unistd.h>

#include <cmath>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <fmt/format.h>
#include <httplib.h>

#include "causal/analysis.h"
#include "causal/core.h"
#include "causal/design.h"
#include "causal/dsl.h"
#include "causal/error.h"
#include "causal/ident.h"
#include "causal/json_io.h"
#include "causal/scm.h"
#include "causal/service.h"
#include "causal/stats.h"
#include "causal/tabular.h"

namespace {

using causal::Error;
using causal::ErrorCode;
using nlohmann::json;

constexpr int kExitOk = 0;
constexpr int kExitVerdict = 1;
constexpr int kExitUsage = 2;
constexpr int kExitData = 3;

bool use_color() {
  return std::getenv("CAUSAL_NO_COLOR") == nullptr && isatty(STDOUT_FILENO);
}

std::string verdict_word(bool pass) {
  if (!use_color()) return pass ? "PASS" : "FAIL";
  return pass ? "\033[32mPASS\033[0m" : "\033[31mFAIL\033[0m";
}

std::string format_set(const causal::NameSet& s) {
  return fmt::format("{{{}}}", fmt::join(s, ", "));
}

std::string format_p(double p) {
  if (p < 1e-20) return "p<1e-20";
  return fmt::format("p={:.4g}", p);
}

int exit_code_for(const Error& e) {
  switch (e.code()) {
    case ErrorCode::kNotIdentifiable:
      return kExitVerdict;
    case ErrorCode::kMalformedCsv:
    case ErrorCode::kEmptyTable:
    case ErrorCode::kUnknownSchemaColumn:
    case ErrorCode::kSchemaMismatch:
    case ErrorCode::kMissingColumn:
    case ErrorCode::kMissingStratumColumn:
    case ErrorCode::kNotCategorical:
    case ErrorCode::kNonNumericColumn:
    case ErrorCode::kNonCategoricalColumn:
    case ErrorCode::kEmptyStratum:
    case ErrorCode::kLengthMismatch:
    case ErrorCode::kZeroTotal:
    case ErrorCode::kRankDeficient:
    case ErrorCode::kInsufficientData:
    case ErrorCode::kSeparation:
    case ErrorCode::kPositivityViolation:
    case ErrorCode::kMethodMismatch:
    case ErrorCode::kProvenanceMismatch:
      return kExitData;
    default:
      return kExitUsage;
  }
}

void print_json(const json& doc) { std::cout << doc.dump(2) << "\n"; }

causal::dsl::ParseResult load_dag(const std::string& path) {
  auto result = causal::dsl::parse_dag_file(path);
  for (const auto& w : result.warnings) {
    std::cerr << fmt::format("{}:{}:{}: warning: {}\n", path, w.span.line,
                             w.span.column, w.message);
  }
  return result;
}

// An unreadable data file is a data error, not a usage error.
struct DataFileError : Error {
  explicit DataFileError(const Error& e) : Error(e) {}
};

causal::DataTable load_data(const std::string& path) {
  causal::LoadedTable loaded;
  try {
    loaded = causal::load_csv_file(path);
  } catch (const Error& e) {
    if (e.code() != ErrorCode::kIoError) throw;
    throw DataFileError(e);
  }
  for (const auto& w : loaded.report.warnings) {
    std::cerr << fmt::format("{}: warning: {}\n", path, w);
  }
  return std::move(loaded.table);
}

void write_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::kIoError, fmt::format("cannot write '{}'", path));
  out << content;
  if (!out) throw Error(ErrorCode::kIoError, fmt::format("cannot write '{}'", path));
}

causal::NameSet split_names(const std::string& text) {
  causal::NameSet out;
  std::stringstream in(text);
  std::string item;
  while (std::getline(in, item, ',')) {
    while (!item.empty() && item.front() == ' ') item.erase(item.begin());
    while (!item.empty() && item.back() == ' ') item.pop_back();
    if (!item.empty()) out.insert(item);
  }
  return out;
}

// "1:1", "1,1" or "2:1".
std::vector<double> parse_numbers(const std::string& text) {
  std::vector<double> out;
  std::string item;
  for (std::size_t i = 0; i <= text.size(); ++i) {
    if (i == text.size() || text[i] == ':' || text[i] == ',') {
      try {
        std::size_t used = 0;
        out.push_back(std::stod(item, &used));
        if (used != item.size()) throw std::invalid_argument(item);
      } catch (const std::exception&) {
        throw Error(ErrorCode::kInvalidArgument,
                    fmt::format("'{}' is not a number list", text));
      }
      item.clear();
    } else {
      item += text[i];
    }
  }
  return out;
}

causal::design::Ratio parse_ratio(const std::string& text) {
  const auto v = parse_numbers(text);
  if (v.size() != 2) {
    throw Error(ErrorCode::kInvalidRatio,
                fmt::format("ratio '{}' must have two terms, e.g. 1:1", text));
  }
  return {v[0], v[1]};
}

causal::EffectQuery make_query(const causal::CausalDag& dag,
                               causal::EffectKind kind,
                               const std::string& treatment,
                               const std::string& outcome) {
  causal::EffectQuery q;
  if (treatment.empty() || outcome.empty()) q = causal::default_query(dag, kind);
  q.kind = kind;
  if (!treatment.empty()) q.treatment = treatment;
  if (!outcome.empty()) q.outcome = outcome;
  causal::validate_query(dag, q);
  return q;
}

struct Common {
  bool json = false;
  std::string treatment;
  std::string outcome;
};

void add_query_flags(CLI::App* cmd, Common& c) {
  cmd->add_option("--treatment", c.treatment, "Treatment node (default: role)");
  cmd->add_option("--outcome", c.outcome, "Outcome node (default: role)");
}

// ---- subcommands -----------------------------------------------------------

int cmd_check(const std::string& dag_path, const Common& c) {
  const auto parsed = load_dag(dag_path);
  const auto& dag = parsed.dag;
  const auto t = dag.treatment();
  const auto y = dag.outcome();
  const std::string summary = fmt::format(
      "{} nodes, {} edges, treatment={}, outcome={}", dag.size(),
      dag.edges().size(), t.value_or("none"), y.value_or("none"));
  if (c.json) {
    print_json({{"dag", causal::json_io::to_json(dag)},
                {"warnings", causal::json_io::to_json(parsed.warnings)},
                {"summary", summary}});
    return kExitOk;
  }
  std::cout << summary << "\n";
  for (const auto& n : dag.nodes()) {
    std::string flags;
    if (n.restricted) flags += " restricted";
    if (n.label) flags += fmt::format(" label=\"{}\"", *n.label);
    std::cout << fmt::format("  {:<12} {}{}\n", n.name,
                             causal::role_name(n.role), flags);
  }
  return kExitOk;
}

int cmd_identify(const std::string& dag_path, const std::string& effect,
                 const Common& c) {
  const auto dag = load_dag(dag_path).dag;
  const auto kind = effect == "direct" ? causal::EffectKind::kControlledDirect
                                       : causal::EffectKind::kTotal;
  const auto q = make_query(dag, kind, c.treatment, c.outcome);
  const auto result = causal::adjustment_sets(dag, q);
  std::vector<causal::PathReport> open;
  if (!result.identifiable) {
    auto total = q;
    total.kind = causal::EffectKind::kTotal;
    for (auto& p : causal::enumerate_paths(dag, total, {})) {
      if (p.kind == causal::PathKind::kBackdoor && p.open()) open.push_back(p);
    }
  }
  if (c.json) {
    json out = causal::json_io::to_json(result);
    if (!result.identifiable) {
      json paths = json::array();
      for (const auto& p : open) paths.push_back(causal::json_io::to_json(p));
      out["open_backdoor_paths"] = paths;
    }
    print_json(out);
    return result.identifiable ? kExitOk : kExitVerdict;
  }
  std::cout << fmt::format("{} effect of {} on {}: {}\n",
                           causal::effect_kind_name(q.kind), q.treatment,
                           q.outcome,
                           result.identifiable ? "identifiable" : "not identifiable");
  if (!result.identifiable) {
    for (const auto& p : open) std::cout << "open backdoor path: " << p.to_string() << "\n";
    return kExitVerdict;
  }
  std::vector<std::string> sets;
  for (const auto& s : result.minimal_sets) sets.push_back(format_set(s));
  if (q.kind == causal::EffectKind::kTotal) {
    std::cout << fmt::format("minimal adjustment sets: {}\n", fmt::join(sets, ", "));
  } else {
    std::cout << fmt::format("mediators: {}; adjust: {}\n",
                             format_set(result.mediators),
                             format_set(result.minimal_sets.front()));
    if (result.minimal_sets.size() > 1) {
      std::cout << fmt::format("alternative minimal sets: {}\n",
                               fmt::join(sets, ", "));
    }
  }
  if (result.truncated) std::cout << "(enumeration truncated)\n";
  return kExitOk;
}

int cmd_implications(const std::string& dag_path, int max_cond, const Common& c) {
  const auto dag = load_dag(dag_path).dag;
  if (max_cond < 0) throw Error(ErrorCode::kInvalidArgument, "--max-cond must be >= 0");
  const auto imps = causal::implied_independencies(dag, max_cond);
  if (c.json) {
    print_json({{"max_conditioning", max_cond},
                {"implications", causal::json_io::to_json(imps)}});
    return kExitOk;
  }
  for (const auto& i : imps) std::cout << i.to_string() << "\n";
  std::cout << fmt::format("{} implication(s), conditioning sets up to size {}\n",
                           imps.size(), max_cond);
  return kExitOk;
}

int cmd_srm(const std::string& counts_text, const std::string& ratio_text,
            double alpha, const Common& c) {
  std::vector<long long> counts;
  for (double v : parse_numbers(counts_text)) {
    if (v < 0 || v != std::floor(v)) {
      throw Error(ErrorCode::kInvalidArgument, "counts must be non-negative integers");
    }
    counts.push_back(static_cast<long long>(v));
  }
  std::vector<double> ratio = ratio_text.empty()
                                  ? std::vector<double>(counts.size(), 1.0)
                                  : parse_numbers(ratio_text);
  const auto r = causal::stats::chi_square_gof(counts, ratio);
  const bool pass = r.p_value >= alpha;
  if (c.json) {
    json out = causal::json_io::to_json(r);
    out["counts"] = counts;
    out["ratio"] = ratio;
    out["alpha"] = alpha;
    out["passed"] = pass;
    print_json(out);
  } else {
    std::cout << fmt::format("chi2={:.1f} {} {}\n", r.statistic,
                             format_p(r.p_value), verdict_word(pass));
  }
  return pass ? kExitOk : kExitVerdict;
}

int cmd_validate(const std::string& dag_path, const std::string& data_path,
                 int max_cond, double alpha, const Common& c) {
  const auto dag = load_dag(dag_path).dag;
  const auto data = load_data(data_path);
  if (max_cond < 0) throw Error(ErrorCode::kInvalidArgument, "--max-cond must be >= 0");
  const auto report = causal::analysis::validate_map(
      dag, data, static_cast<std::size_t>(max_cond), alpha);
  if (c.json) {
    print_json(causal::json_io::to_json(report));
  } else {
    for (const auto& check : report.checks) {
      if (check.result) {
        std::cout << fmt::format("{:<40} {:<10} {} p_adj={:.4g} {}\n",
                                 check.implication.to_string(),
                                 causal::stats::test_method_name(check.result->method),
                                 format_p(check.result->p_value), check.adjusted_p,
                                 causal::analysis::verdict_name(check.verdict));
      } else {
        std::cout << fmt::format("{:<40} untestable ({})\n",
                                 check.implication.to_string(), check.reason);
      }
    }
    std::cout << fmt::format("consistent={} violated={} untestable={} (alpha={}, Holm)\n",
                             report.consistent, report.violated,
                             report.untestable, alpha);
  }
  return report.violated == 0 ? kExitOk : kExitVerdict;
}

int cmd_design(const std::string& dag_path, const std::string& units_path,
               const std::string& ratio_text, std::uint64_t seed,
               const std::string& out_path, const Common& c) {
  const auto dag = load_dag(dag_path).dag;
  const auto q = make_query(dag, causal::EffectKind::kTotal, c.treatment, c.outcome);
  const auto plan = causal::design::derive_design(dag, q, parse_ratio(ratio_text), seed);
  const auto units = load_data(units_path);
  const auto assigned = causal::design::assign(plan, units);
  const auto positivity = causal::design::positivity_check(
      assigned, causal::design::kArmColumn, plan.strata_by);
  const auto checks = causal::design::derive_validity_checks(dag, plan);
  if (!out_path.empty()) write_file(out_path, causal::write_csv(assigned));

  if (c.json) {
    json list = json::array();
    for (const auto& ch : checks) {
      list.push_back({{"kind", causal::design::check_kind_name(ch.kind)},
                      {"target", ch.target},
                      {"expected", ch.expected}});
    }
    print_json({{"plan", causal::json_io::to_json(plan)},
                {"positivity", causal::json_io::to_json(positivity)},
                {"validity_checks", list},
                {"output", out_path}});
  } else {
    std::cout << fmt::format("seed={} ratio={}:{}\n", seed, plan.ratio.treatment,
                             plan.ratio.control);
    std::cout << fmt::format("adjustment set: {}; stratify by: {}\n",
                             format_set(plan.adjustment), format_set(plan.strata_by));
    for (const auto& s : positivity.strata) {
      std::cout << fmt::format("  stratum {:<20} treated={} control={}\n", s.stratum,
                               s.treated, s.control);
    }
    for (const auto& w : positivity.warnings) std::cout << "warning: " << w << "\n";
    std::cout << "validity checks:\n";
    for (const auto& ch : checks) {
      std::cout << fmt::format("  {:<14} {} ({})\n",
                               causal::design::check_kind_name(ch.kind), ch.target,
                               ch.expected);
    }
    if (!out_path.empty()) std::cout << "wrote " << out_path << "\n";
  }
  return positivity.passed() ? kExitOk : kExitVerdict;
}

int cmd_design_check(const std::string& dag_path, const std::string& data_path,
                     const std::string& ratio_text, double alpha,
                     const std::string& pre_path, const Common& c) {
  const auto dag = load_dag(dag_path).dag;
  const auto q = make_query(dag, causal::EffectKind::kTotal, c.treatment, c.outcome);
  const auto plan = causal::design::derive_design(dag, q, parse_ratio(ratio_text), 0);
  const auto data = load_data(data_path);
  std::optional<causal::DataTable> pre;
  if (!pre_path.empty()) pre = load_data(pre_path);
  const auto report = causal::design::run_validity_checks(
      causal::design::derive_validity_checks(dag, plan), plan, data, alpha,
      pre ? &*pre : nullptr);
  if (c.json) {
    print_json(causal::json_io::to_json(report));
  } else {
    for (const auto& o : report.outcomes) {
      std::string target = o.check.target;
      if (!o.stratum.empty()) target += " [" + o.stratum + "]";
      if (o.executed) {
        std::cout << fmt::format("{:<14} {:<48} {} p_adj={:.4g} {}\n",
                                 causal::design::check_kind_name(o.check.kind),
                                 target, format_p(o.result.p_value), o.adjusted_p,
                                 verdict_word(o.passed));
      } else {
        std::cout << fmt::format("{:<14} {:<48} skipped: {}\n",
                                 causal::design::check_kind_name(o.check.kind),
                                 target, o.skipped_reason);
      }
    }
    std::cout << fmt::format("{} failure(s) at alpha={} (Holm)\n", report.failures,
                             alpha);
  }
  return report.passed ? kExitOk : kExitVerdict;
}

int cmd_estimate(const std::string& dag_path, const std::string& data_path,
                 const std::string& effect, const std::string& method_text,
                 const std::string& adjust, bool adjust_given, const Common& c) {
  const auto dag = load_dag(dag_path).dag;
  const auto data = load_data(data_path);
  auto method = causal::analysis::parse_method(method_text);
  if (!method) {
    throw Error(ErrorCode::kInvalidArgument,
                fmt::format("unknown method '{}'", method_text));
  }
  causal::analysis::EstimateOptions options;
  if (adjust_given) options.adjustment = split_names(adjust);
  const auto q = make_query(dag, causal::EffectKind::kTotal, c.treatment, c.outcome);

  std::vector<causal::analysis::EffectEstimate> estimates;
  if (effect == "total") {
    estimates.push_back(causal::analysis::estimate_total(dag, data, q, *method, options));
  } else if (effect == "direct") {
    estimates.push_back(causal::analysis::estimate_direct(dag, data, q, options));
  } else {
    auto total = causal::analysis::estimate_total(dag, data, q, *method, options);
    auto direct = causal::analysis::estimate_direct(dag, data, q, options);
    auto indirect = causal::analysis::estimate_indirect(total, direct);
    estimates = {total, direct, indirect};
  }
  if (c.json) {
    if (estimates.size() == 1) {
      print_json(causal::json_io::to_json(estimates[0]));
    } else {
      print_json({{"total", causal::json_io::to_json(estimates[0])},
                  {"direct", causal::json_io::to_json(estimates[1])},
                  {"indirect", causal::json_io::to_json(estimates[2])}});
    }
    return kExitOk;
  }
  for (const auto& e : estimates) {
    std::string line = fmt::format(
        "{} ≈ {:.4f}", causal::analysis::estimate_kind_name(e.kind), e.estimate);
    if (e.std_error) line += fmt::format(" (se {:.4f})", *e.std_error);
    line += fmt::format(" method={} adjustment={}", causal::analysis::method_name(e.method),
                        format_set(e.adjustment));
    if (!e.mediators.empty()) line += " mediators=" + format_set(e.mediators);
    line += fmt::format(" n={}", e.n_used);
    if (e.method == causal::analysis::Method::kIpw) {
      line += fmt::format(" clipped={}", e.clipped);
    }
    std::cout << line << "\n";
    for (const auto& w : e.warnings) std::cout << "  warning: " << w << "\n";
  }
  return kExitOk;
}

int cmd_simulate(const std::string& dag_path, const std::string& spec_path,
                 std::size_t n, std::optional<std::uint64_t> seed,
                 const std::string& out_path, bool drop_latent, const Common& c) {
  const auto dag = load_dag(dag_path).dag;
  auto spec = causal::scm::load_spec_file(dag, spec_path);
  if (seed) spec.seed = *seed;
  if (n == 0) throw Error(ErrorCode::kInvalidArgument, "-n must be >= 1");
  auto table = causal::scm::simulate(spec, n);
  if (drop_latent) table = causal::scm::drop_latent(table, dag);
  const std::string csv = causal::write_csv(table);
  std::optional<causal::scm::TrueEffects> truth;
  if (dag.treatment() && dag.outcome()) {
    truth = causal::scm::true_effects(spec, causal::default_query(dag));
  }
  if (out_path.empty()) {
    std::cout << csv;
    return kExitOk;
  }
  write_file(out_path, csv);
  if (c.json) {
    json out{{"seed", spec.seed}, {"rows", n}, {"output", out_path}};
    if (truth) {
      out["true_effects"] = {{"total", truth->total},
                             {"direct", truth->direct},
                             {"indirect", truth->indirect}};
    }
    print_json(out);
  } else {
    std::cout << fmt::format("seed={} rows={} wrote {}\n", spec.seed, n, out_path);
    if (truth) {
      std::cout << fmt::format("true effects: total={:.4g} direct={:.4g} indirect={:.4g}\n",
                               truth->total, truth->direct, truth->indirect);
    }
  }
  return kExitOk;
}

int cmd_render(const std::string& dag_path, const std::string& out_path,
               const std::string& highlight, const Common& c) {
  const auto dag = load_dag(dag_path).dag;
  std::optional<causal::AdjustmentResult> adj;
  if (!highlight.empty()) {
    const auto kind = highlight == "direct" ? causal::EffectKind::kControlledDirect
                                            : causal::EffectKind::kTotal;
    adj = causal::adjustment_sets(dag, make_query(dag, kind, c.treatment, c.outcome));
  }
  const std::string dot = causal::dsl::to_dot(dag, adj ? &*adj : nullptr);
  if (out_path.empty()) {
    std::cout << dot;
  } else {
    write_file(out_path, dot);
    if (!c.json) std::cout << "wrote " << out_path << "\n";
    else print_json({{"output", out_path}});
  }
  return kExitOk;
}

int cmd_transport(const std::string& dag_path, const std::string& selection,
                  const Common& c) {
  const auto dag = load_dag(dag_path).dag;
  const auto q = make_query(dag, causal::EffectKind::kTotal, c.treatment, c.outcome);
  const auto verdict = causal::check_transportability(dag, split_names(selection), q);
  if (c.json) {
    print_json(causal::json_io::to_json(verdict));
  } else {
    std::cout << causal::transport_verdict_name(verdict);
    if (const auto* a = std::get_if<causal::TransportableByAdjustment>(&verdict)) {
      std::cout << ": adjust for " << format_set(a->adjustment);
    }
    std::cout << "\n";
  }
  return std::holds_alternative<causal::NotDetermined>(verdict) ? kExitVerdict : kExitOk;
}

int cmd_serve(const std::string& host, int port, const std::string& static_dir) {
  causal::service::DatasetStore store;
  causal::service::Api api(store);
  httplib::Server server;
  causal::service::mount(server, api, static_dir);
  std::cerr << fmt::format("listening on http://{}:{}\n", host, port);
  if (!server.listen(host, port)) {
    throw Error(ErrorCode::kIoError, fmt::format("cannot bind {}:{}", host, port));
  }
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Causal-experiment workbench: DAG identification, design checks "
               "and effect estimation"};
  app.set_version_flag("--version", std::string(causal::service::kVersion));
  app.require_subcommand(1);
  Common common;
  app.add_flag("--json", common.json, "Machine-readable output");

  std::string dag_path, data_path, effect = "total", method = "linear";
  std::string counts, ratio, adjust, out_path, selection, highlight, spec_path;
  std::string host = "127.0.0.1", static_dir, pre_path;
  int max_cond = causal::kDefaultMaxConditioning;
  int port = 8787;
  double alpha = 0.05;
  std::uint64_t seed = 0;
  std::size_t rows = 1000;

  auto* check = app.add_subcommand("check", "Parse and summarize a DAG file");
  check->add_option("dag", dag_path, "DAG file")->required();

  auto* identify = app.add_subcommand("identify", "Minimal adjustment sets");
  identify->add_option("dag", dag_path, "DAG file")->required();
  identify->add_option("--effect", effect, "total or direct")
      ->check(CLI::IsMember({"total", "direct"}));
  add_query_flags(identify, common);

  auto* implications = app.add_subcommand("implications", "Testable implications");
  implications->add_option("dag", dag_path, "DAG file")->required();
  implications->add_option("--max-cond", max_cond, "Largest conditioning set");

  auto* srm = app.add_subcommand("srm", "Sample-ratio-mismatch test");
  srm->add_option("--counts", counts, "Arm counts, e.g. 5500,4500")->required();
  srm->add_option("--ratio", ratio, "Designed ratio, e.g. 1,1 or 1:1");
  srm->add_option("--alpha", alpha, "Significance level");

  auto* validate = app.add_subcommand("validate", "Check implications against data");
  validate->add_option("dag", dag_path, "DAG file")->required();
  validate->add_option("data", data_path, "CSV data")->required();
  validate->add_option("--max-cond", max_cond, "Largest conditioning set");
  validate->add_option("--alpha", alpha, "Significance level");

  auto* design = app.add_subcommand("design", "Stratified assignment plan");
  design->add_option("dag", dag_path, "DAG file")->required();
  design->add_option("units", data_path, "CSV of units to assign")->required();
  design->add_option("--ratio", ratio, "Treatment:control ratio")->default_val("1:1");
  design->add_option("--seed", seed, "Randomization seed");
  design->add_option("-o,--output", out_path, "Write assigned units CSV");
  add_query_flags(design, common);

  auto* design_check =
      app.add_subcommand("design-check", "Run design validity checks on experiment data");
  design_check->add_option("dag", dag_path, "DAG file")->required();
  design_check->add_option("data", data_path, "CSV with the _arm column")->required();
  design_check->add_option("--ratio", ratio, "Designed ratio")->default_val("1:1");
  design_check->add_option("--alpha", alpha, "Significance level");
  design_check->add_option("--pre", pre_path, "Pre-activation data for the A/A check");
  add_query_flags(design_check, common);

  auto* estimate = app.add_subcommand("estimate", "Estimate a causal effect");
  estimate->add_option("dag", dag_path, "DAG file")->required();
  estimate->add_option("data", data_path, "CSV data")->required();
  estimate->add_option("--effect", effect, "total, direct or indirect")
      ->check(CLI::IsMember({"total", "direct", "indirect"}));
  estimate->add_option("--method", method, "linear, stratified or ipw")
      ->check(CLI::IsMember({"linear", "stratified", "ipw"}));
  auto* adjust_opt =
      estimate->add_option("--adjust", adjust, "Override the adjustment set (A,B)");
  add_query_flags(estimate, common);

  auto* simulate = app.add_subcommand("simulate", "Simulate a linear SCM");
  simulate->add_option("dag", dag_path, "DAG file")->required();
  simulate->add_option("spec", spec_path, "SCM JSON spec")->required();
  simulate->add_option("-n", rows, "Number of rows");
  auto* seed_opt = simulate->add_option("--seed", seed, "Overrides the spec seed");
  simulate->add_option("-o,--output", out_path, "Output CSV (default stdout)");
  bool drop_latent = false;
  simulate->add_flag("--drop-latent", drop_latent, "Omit latent columns");

  auto* render = app.add_subcommand("render", "Graphviz DOT export");
  render->add_option("dag", dag_path, "DAG file")->required();
  render->add_option("-o,--output", out_path, "Output .dot (default stdout)");
  render->add_option("--highlight", highlight, "Highlight the total or direct adjustment")
      ->check(CLI::IsMember({"total", "direct"}));
  add_query_flags(render, common);

  auto* transport = app.add_subcommand("transport", "Transportability check");
  transport->add_option("dag", dag_path, "DAG file")->required();
  transport->add_option("--selection", selection, "Selection nodes (S1,S2)")->required();
  add_query_flags(transport, common);

  auto* serve = app.add_subcommand("serve", "Run the HTTP API");
  serve->add_option("--host", host, "Bind address");
  serve->add_option("--port", port, "Port");
  serve->add_option("--static", static_dir, "Directory served at /");

  auto* openapi = app.add_subcommand("openapi", "Print the OpenAPI description");

  for (auto* sub : app.get_subcommands({})) {
    sub->add_flag("--json", common.json, "Machine-readable output");
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (*check) return cmd_check(dag_path, common);
    if (*identify) return cmd_identify(dag_path, effect, common);
    if (*implications) return cmd_implications(dag_path, max_cond, common);
    if (*srm) return cmd_srm(counts, ratio, alpha, common);
    if (*validate) return cmd_validate(dag_path, data_path, max_cond, alpha, common);
    if (*design) return cmd_design(dag_path, data_path, ratio, seed, out_path, common);
    if (*design_check) {
      return cmd_design_check(dag_path, data_path, ratio, alpha, pre_path, common);
    }
    if (*estimate) {
      return cmd_estimate(dag_path, data_path, effect, method, adjust,
                          adjust_opt->count() > 0, common);
    }
    if (*simulate) {
      return cmd_simulate(dag_path, spec_path, rows,
                          seed_opt->count() > 0 ? std::optional(seed) : std::nullopt,
                          out_path, drop_latent, common);
    }
    if (*render) return cmd_render(dag_path, out_path, highlight, common);
    if (*transport) return cmd_transport(dag_path, selection, common);
    if (*serve) return cmd_serve(host, port, static_dir);
    if (*openapi) {
      print_json(causal::service::openapi());
      return kExitOk;
    }
  } catch (const Error& e) {
    if (common.json) {
      std::cerr << causal::json_io::error_to_json(e).dump() << "\n";
    } else {
      std::cerr << "error: " << e.what() << "\n";
    }
    if (dynamic_cast<const DataFileError*>(&e)) return kExitData;
    return exit_code_for(e);
  }
  return kExitUsage;
}
