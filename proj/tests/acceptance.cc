// Runs the acceptance criteria end to end and prints one PASS/FAIL line each.
// Exit status is non-zero when any criterion fails.

#include <sys/wait.h>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <random>
#include <string>

#include <fmt/format.h>
#include <json.hpp>

#include "causal/analysis.h"
#include "causal/dsl.h"
#include "causal/ident.h"
#include "causal/scm.h"
#include "causal/stats.h"
#include "oracles.h"
#include "test_support.h"

namespace {

using namespace causal;
using Clock = std::chrono::steady_clock;

struct Verdict {
  bool pass = true;
  std::string detail;

  void require(bool ok, const std::string& what) {
    if (!ok) {
      pass = false;
      detail += (detail.empty() ? "" : "; ") + what;
    }
  }
};

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

struct CliRun {
  int exit_code = -1;
  std::string out;
  double seconds = 0;
};

CliRun cli(const std::string& args) {
  const std::string cmd =
      std::string("CAUSAL_NO_COLOR=1 ") + CAUSAL_CLI_PATH + " " + args + " 2>&1";
  CliRun r;
  const auto start = Clock::now();
  FILE* pipe = popen(cmd.c_str(), "r");
  if (!pipe) return r;
  char buf[4096];
  std::size_t got;
  while ((got = fread(buf, 1, sizeof buf, pipe)) > 0) r.out.append(buf, got);
  const int status = pclose(pipe);
  r.seconds = seconds_since(start);
  r.exit_code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  return r;
}

bool contains(const std::string& s, const std::string& needle) {
  return s.find(needle) != std::string::npos;
}

scm::ScmSpec climate_spec() {
  return scm::load_spec_file(testing_support::climate(),
                             testing_support::fixture_path("climate.scm.json"));
}

Verdict total_effect_example() {
  Verdict v;
  const std::string dag = testing_support::fixture_path("climate.dag");
  CliRun text = cli("identify " + dag + " --effect total");
  v.require(text.exit_code == 0, fmt::format("exit {}", text.exit_code));
  v.require(contains(text.out, "minimal adjustment sets: {VV}\n"), "text output");
  CliRun json = cli("identify --json " + dag + " --effect total");
  const auto doc = nlohmann::json::parse(json.out, nullptr, false);
  v.require(!doc.is_discarded() && doc["minimal_sets"] == nlohmann::json::parse(R"([["VV"]])"),
            "JSON minimal_sets != [[VV]]");
  v.require(text.seconds < 1.0, fmt::format("took {:.3f}s", text.seconds));
  if (v.pass) v.detail = fmt::format("[{{VV}}] in {:.3f}s", text.seconds);
  return v;
}

Verdict direct_effect_example() {
  Verdict v;
  const std::string dag = testing_support::fixture_path("climate.dag");
  CliRun r = cli("identify --json " + dag + " --effect direct");
  v.require(r.exit_code == 0, fmt::format("exit {}", r.exit_code));
  const auto doc = nlohmann::json::parse(r.out, nullptr, false);
  v.require(!doc.is_discarded(), "unparseable JSON");
  if (!doc.is_discarded()) {
    v.require(doc["mediators"] == nlohmann::json::array({"UI"}), "mediators");
    v.require(doc["minimal_sets"] ==
                  nlohmann::json::parse(R"([["City", "Temp", "VV"]])"),
              "conditioning variables");
  }
  CliRun text = cli("identify " + dag + " --effect direct");
  v.require(contains(text.out, "mediators: {UI}") &&
                contains(text.out, "adjust: {City, Temp, VV}"),
            "text output");
  v.require(r.seconds < 1.0, fmt::format("took {:.3f}s", r.seconds));
  if (v.pass) {
    v.detail = fmt::format("mediators {{UI}}, adjust {{City, Temp, VV}} in {:.3f}s",
                           r.seconds);
  }
  return v;
}

// Every DAG whose edges respect the order 0 < 1 < ... < n-1, for n <= 5.
Verdict d_separation_exhaustive() {
  Verdict v;
  const auto start = Clock::now();
  long long queries = 0, disagreements = 0;
  for (std::size_t n = 2; n <= 5; ++n) {
    std::vector<std::pair<std::size_t, std::size_t>> slots;
    for (std::size_t a = 0; a < n; ++a)
      for (std::size_t b = a + 1; b < n; ++b) slots.emplace_back(a, b);
    for (unsigned mask = 0; mask < (1u << slots.size()); ++mask) {
      oracle::Graph g;
      g.n = n;
      for (std::size_t i = 0; i < slots.size(); ++i) {
        if (mask & (1u << i)) g.edges.push_back(slots[i]);
      }
      const CausalDag dag = testing_support::to_dag(g);
      for (std::size_t x = 0; x < n; ++x) {
        for (std::size_t y = x + 1; y < n; ++y) {
          std::vector<std::size_t> rest;
          for (std::size_t k = 0; k < n; ++k) {
            if (k != x && k != y) rest.push_back(k);
          }
          for (unsigned zm = 0; zm < (1u << rest.size()); ++zm) {
            std::set<std::size_t> z;
            NameSet zn;
            for (std::size_t i = 0; i < rest.size(); ++i) {
              if (zm & (1u << i)) {
                z.insert(rest[i]);
                zn.insert(testing_support::letter(rest[i]));
              }
            }
            const bool got = d_separated(dag, testing_support::letter(x),
                                         testing_support::letter(y), zn);
            const bool paths = oracle::d_separated_paths(g, x, y, z);
            const bool moral = oracle::d_separated_moral(g, x, y, z);
            ++queries;
            if (got != paths || got != moral) ++disagreements;
          }
        }
      }
    }
  }
  const double secs = seconds_since(start);
  v.require(disagreements == 0, fmt::format("{} disagreements", disagreements));
  v.require(secs < 300, fmt::format("took {:.1f}s", secs));
  if (v.pass) {
    v.detail = fmt::format("{} queries, 0 disagreements with either oracle, {:.1f}s",
                           queries, secs);
  }
  return v;
}

Verdict effect_recovery() {
  Verdict v;
  const auto start = Clock::now();
  auto spec = climate_spec();
  const CausalDag& dag = spec.dag;
  const auto data = scm::drop_latent(scm::simulate(spec, 100000), dag);
  const auto q = default_query(dag, EffectKind::kTotal);
  const auto total = analysis::estimate_total(dag, data, q, analysis::Method::kLinear);
  const auto direct = analysis::estimate_direct(dag, data, q);
  const auto indirect = analysis::estimate_indirect(total, direct);
  const double secs = seconds_since(start);
  v.require(std::abs(total.estimate - (-0.6)) < 0.05,
            fmt::format("total {:.4f}", total.estimate));
  v.require(std::abs(direct.estimate - (-1.0)) < 0.05,
            fmt::format("direct {:.4f}", direct.estimate));
  v.require(std::abs(indirect.estimate - (total.estimate - direct.estimate)) <= 1e-12,
            "indirect != total - direct");
  v.require(indirect.estimate > 0, fmt::format("indirect {:.4f}", indirect.estimate));
  v.require(secs < 30, fmt::format("took {:.1f}s", secs));
  if (v.pass) {
    v.detail = fmt::format("total {:.4f}, direct {:.4f}, indirect {:.4f}, {:.1f}s",
                           total.estimate, direct.estimate, indirect.estimate, secs);
  }
  return v;
}

Verdict estimator_agreement() {
  Verdict v;
  auto spec = climate_spec();
  const CausalDag& dag = spec.dag;
  const auto data = scm::drop_latent(scm::simulate(spec, 100000), dag);
  const auto q = default_query(dag, EffectKind::kTotal);
  const auto linear = analysis::estimate_total(dag, data, q, analysis::Method::kLinear);
  std::string detail;
  for (auto m : {analysis::Method::kIpw, analysis::Method::kStratified}) {
    const auto e = analysis::estimate_total(dag, data, q, m);
    const double combined = std::hypot(*e.std_error, *linear.std_error);
    const double gap = std::abs(e.estimate - linear.estimate);
    v.require(gap < 3 * combined,
              fmt::format("{} off by {:.4f} > 3 x {:.4f}", analysis::method_name(m), gap,
                          combined));
    detail += fmt::format("{} {:.4f} ({:.1f} SE), ", analysis::method_name(m), e.estimate,
                          gap / combined);
  }

  // Randomized treatment with an empty adjustment set: the propensity model is
  // intercept-only, so IPW must equal the raw difference of means.
  spec.treatment_mechanism = scm::Bernoulli{0.4};
  spec.seed = 7;
  const auto rct = scm::drop_latent(scm::simulate(spec, 20000), dag);
  analysis::EstimateOptions none;
  none.adjustment = NameSet{};
  const auto ipw = analysis::estimate_total(dag, rct, q, analysis::Method::kIpw, none);
  double s1 = 0, s0 = 0, n1 = 0, n0 = 0;
  const auto& t = rct.column("SW").values;
  const auto& y = rct.column("EC").values;
  for (std::size_t i = 0; i < t.size(); ++i) {
    if (t[i] == 1) {
      s1 += y[i];
      ++n1;
    } else {
      s0 += y[i];
      ++n0;
    }
  }
  const double dom = s1 / n1 - s0 / n0;
  v.require(std::abs(ipw.estimate - dom) <= 1e-12,
            fmt::format("IPW {:.15f} vs difference of means {:.15f}", ipw.estimate, dom));
  if (v.pass) {
    v.detail = detail + fmt::format("IPW - DoM = {:.1e}", ipw.estimate - dom);
  }
  return v;
}

Verdict srm() {
  Verdict v;
  const long long counts[] = {5500, 4500};
  const double ratio[] = {1, 1};
  const auto r = stats::chi_square_gof(counts, ratio);
  v.require(std::abs(r.statistic - 100.0) <= 0.001, fmt::format("chi2 {}", r.statistic));
  CliRun run = cli("srm --counts 5500,4500 --ratio 1,1");
  v.require(run.exit_code == 1, fmt::format("exit {}", run.exit_code));
  v.require(contains(run.out, "chi2=100.0 p<1e-20 FAIL"), "CLI line: " + run.out);

  // Null replicates: each unit is assigned independently at the designed ratio.
  std::mt19937_64 rng(20240601);
  std::binomial_distribution<long long> arm(10000, 0.5);
  int rejections = 0;
  const int reps = 500;
  for (int i = 0; i < reps; ++i) {
    const long long treated = arm(rng);
    const long long c[] = {treated, 10000 - treated};
    if (stats::chi_square_gof(c, ratio).p_value < 0.05) ++rejections;
  }
  const double rate = rejections / double(reps);
  v.require(std::abs(rate - 0.05) <= 0.03, fmt::format("null rejection rate {}", rate));
  if (v.pass) {
    v.detail = fmt::format("chi2={:.3f} FAIL, null rejection rate {:.3f}", r.statistic,
                           rate);
  }
  return v;
}

Verdict map_validation() {
  Verdict v;
  const auto base = climate_spec();
  const CausalDag& dag = base.dag;
  const int reps = 100;
  const std::size_t n = 2000;

  int clean = 0;
  for (int i = 0; i < reps; ++i) {
    auto spec = base;
    spec.seed = 5000 + i;
    const auto data = scm::drop_latent(scm::simulate(spec, n), dag);
    if (analysis::validate_map(dag, data, kDefaultMaxConditioning, 0.05).violated == 0) {
      ++clean;
    }
  }

  auto wrong = base;
  auto edges = dag.edges();
  edges.push_back({"City", "SW"});
  wrong.dag = build_dag(dag.nodes(), edges, dag.name());
  wrong.coefficients[{"City", "SW"}] = 1.0;
  int flagged = 0;
  for (int i = 0; i < reps; ++i) {
    wrong.seed = 9000 + i;
    const auto data = scm::drop_latent(scm::simulate(wrong, n), wrong.dag);
    const auto report = analysis::validate_map(dag, data, kDefaultMaxConditioning, 0.05);
    for (const auto& c : report.checks) {
      if (c.implication.x == "City" && c.implication.y == "SW" &&
          c.verdict == analysis::Verdict::kViolated) {
        ++flagged;
        break;
      }
    }
  }
  v.require(clean >= 90, fmt::format("{}/100 clean", clean));
  v.require(flagged >= 95, fmt::format("{}/100 flagged City _||_ SW", flagged));
  if (v.pass) {
    v.detail = fmt::format("{}/100 clean, {}/100 flag City _||_ SW (n={})", clean, flagged,
                           n);
  }
  return v;
}

Verdict parser() {
  Verdict v;
  for (const char* name : {"climate.dag", "climate_transport.dag", "unidentifiable.dag"}) {
    const auto dag = dsl::parse_dag_file(testing_support::fixture_path(name)).dag;
    const std::string text = dsl::serialize_dag(dag);
    const auto again = dsl::parse_dag(text).dag;
    v.require(again == dag && dsl::serialize_dag(again) == text,
              fmt::format("{} does not round-trip", name));
  }
  std::mt19937_64 rng(4242);
  int values = 0, parse_errors = 0, other = 0;
  for (int i = 0; i < 10000; ++i) {
    try {
      dsl::parse_dag(testing_support::random_source(rng));
      ++values;
    } catch (const dsl::ParseError&) {
      ++parse_errors;
    } catch (...) {
      ++other;
    }
  }
  v.require(other == 0, fmt::format("{} inputs raised something other than ParseError",
                                    other));
  if (v.pass) {
    v.detail = fmt::format("3 fixtures round-trip; fuzz: {} values, {} ParseErrors",
                           values, parse_errors);
  }
  return v;
}

}  // namespace

int main() {
  const std::pair<const char*, std::function<Verdict()>> criteria[] = {
      {"total effect example", total_effect_example},
      {"direct effect example", direct_effect_example},
      {"d-separation oracle equivalence", d_separation_exhaustive},
      {"effect recovery", effect_recovery},
      {"estimator agreement", estimator_agreement},
      {"sample-ratio mismatch", srm},
      {"map validation calibration", map_validation},
      {"parser round-trip and fuzz", parser},
  };
  int failures = 0;
  int index = 0;
  for (const auto& [name, run] : criteria) {
    ++index;
    Verdict v;
    try {
      v = run();
    } catch (const std::exception& e) {
      v.pass = false;
      v.detail = fmt::format("threw: {}", e.what());
    }
    if (!v.pass) ++failures;
    fmt::print("{} {}. {}: {}\n", v.pass ? "PASS" : "FAIL", index, name, v.detail);
    std::fflush(stdout);
  }
  fmt::print("{}/{} criteria passed\n", index - failures, index);
  return failures == 0 ? 0 : 1;
}
