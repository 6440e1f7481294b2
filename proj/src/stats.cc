#include "causal/stats.h"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numeric>

#include <Eigen/Dense>
#include <fmt/format.h>

#include "causal/error.h"

namespace causal::stats {

namespace {

constexpr double kEps = 1e-16;
constexpr double kTiny = 1e-300;
constexpr int kMaxGammaIterations = 100000;

double gamma_prefactor(double a, double x) {
  return std::exp(-x + a * std::log(x) - std::lgamma(a));
}

// P(a, x) by its power series; converges quickly for x < a + 1.
double gamma_p_series(double a, double x) {
  double ap = a;
  double term = 1.0 / a;
  double sum = term;
  for (int i = 0; i < kMaxGammaIterations; ++i) {
    ap += 1;
    term *= x / ap;
    sum += term;
    if (std::fabs(term) < std::fabs(sum) * kEps) break;
  }
  return sum * gamma_prefactor(a, x);
}

// Q(a, x) by its continued fraction (modified Lentz); for x >= a + 1.
double gamma_q_fraction(double a, double x) {
  double b = x + 1 - a;
  double c = 1 / kTiny;
  double d = 1 / b;
  double h = d;
  for (int i = 1; i < kMaxGammaIterations; ++i) {
    const double an = -i * (i - a);
    b += 2;
    d = an * d + b;
    if (std::fabs(d) < kTiny) d = kTiny;
    c = b + an / c;
    if (std::fabs(c) < kTiny) c = kTiny;
    d = 1 / d;
    const double delta = d * c;
    h *= delta;
    if (std::fabs(delta - 1) < kEps) break;
  }
  return gamma_prefactor(a, x) * h;
}

}  // namespace

double regularized_gamma_q(double a, double x) {
  if (!(a > 0) || std::isnan(x)) {
    return std::numeric_limits<double>::quiet_NaN();
  }
  if (x <= 0) return 1.0;
  if (std::isinf(x)) return 0.0;
  if (x < a + 1) return 1.0 - gamma_p_series(a, x);
  return gamma_q_fraction(a, x);
}

double regularized_gamma_p(double a, double x) {
  if (!(a > 0) || std::isnan(x)) {
    return std::numeric_limits<double>::quiet_NaN();
  }
  if (x <= 0) return 0.0;
  if (std::isinf(x)) return 1.0;
  if (x < a + 1) return gamma_p_series(a, x);
  return 1.0 - gamma_q_fraction(a, x);
}

double erfc(double x) {
  if (std::isnan(x)) return x;
  if (x < 0) return 2.0 - erfc(-x);
  return regularized_gamma_q(0.5, x * x);
}

double normal_two_sided_p(double z) {
  return std::min(1.0, erfc(std::fabs(z) / std::sqrt(2.0)));
}

double chi_square_sf(double x, double dof) {
  if (x <= 0) return 1.0;
  return regularized_gamma_q(dof / 2, x / 2);
}

std::string_view test_method_name(TestMethod method) {
  return method == TestMethod::kFisherZ ? "fisher_z" : "chi_square";
}

const Term& LinearFit::term(std::string_view name) const {
  for (const auto& t : terms) {
    if (t.name == name) return t;
  }
  throw Error(ErrorCode::kInvalidArgument,
              fmt::format("fit has no term '{}'", name), {std::string(name)});
}

namespace {

Eigen::MatrixXd design_matrix(std::size_t n, const std::vector<Regressor>& x) {
  Eigen::MatrixXd m(static_cast<Eigen::Index>(n),
                    static_cast<Eigen::Index>(x.size() + 1));
  m.col(0).setOnes();
  for (std::size_t j = 0; j < x.size(); ++j) {
    if (x[j].values.size() != n) {
      throw Error(ErrorCode::kLengthMismatch,
                  fmt::format("regressor '{}' has {} rows, expected {}",
                              x[j].name, x[j].values.size(), n),
                  {x[j].name});
    }
    m.col(static_cast<Eigen::Index>(j + 1)) =
        Eigen::Map<const Eigen::VectorXd>(x[j].values.data(),
                                          static_cast<Eigen::Index>(n));
  }
  return m;
}

std::string term_name(const std::vector<Regressor>& x, Eigen::Index col) {
  return col == 0 ? std::string(kIntercept)
                  : x[static_cast<std::size_t>(col - 1)].name;
}

using Qr = Eigen::ColPivHouseholderQR<Eigen::MatrixXd>;

Qr checked_qr(const Eigen::MatrixXd& m, const std::vector<Regressor>& x) {
  Qr qr(m.rows(), m.cols());
  qr.setThreshold(1e-10);
  qr.compute(m);
  if (qr.rank() < m.cols()) {
    std::vector<std::string> dependent;
    const auto& perm = qr.colsPermutation().indices();
    for (Eigen::Index k = qr.rank(); k < m.cols(); ++k) {
      dependent.push_back(term_name(x, perm(k)));
    }
    std::sort(dependent.begin(), dependent.end());
    throw Error(ErrorCode::kRankDeficient,
                fmt::format("design matrix is rank deficient; collinear "
                            "column(s): {}",
                            fmt::join(dependent, ", ")),
                dependent);
  }
  return qr;
}

// Diagonal of (M'M)^{-1} from a full-rank pivoted QR of M.
Eigen::VectorXd inverse_gram_diagonal(const Qr& qr) {
  const Eigen::Index p = qr.cols();
  Eigen::MatrixXd r = qr.matrixR().topLeftCorner(p, p)
                          .triangularView<Eigen::Upper>();
  Eigen::MatrixXd r_inv = r.triangularView<Eigen::Upper>().solve(
      Eigen::MatrixXd::Identity(p, p));
  Eigen::VectorXd permuted = (r_inv * r_inv.transpose()).diagonal();
  Eigen::VectorXd out(p);
  const auto& perm = qr.colsPermutation().indices();
  for (Eigen::Index k = 0; k < p; ++k) out(perm(k)) = permuted(k);
  return out;
}

}  // namespace

LinearFit ols_fit(std::span<const double> y, const std::vector<Regressor>& x) {
  const std::size_t n = y.size();
  const std::size_t p = x.size() + 1;
  if (n <= p) {
    throw Error(ErrorCode::kInsufficientData,
                fmt::format("ordinary least squares needs more than {} rows, "
                            "got {}",
                            p, n));
  }
  Eigen::MatrixXd m = design_matrix(n, x);
  Eigen::Map<const Eigen::VectorXd> yv(y.data(), static_cast<Eigen::Index>(n));
  Qr qr = checked_qr(m, x);
  Eigen::VectorXd beta = qr.solve(yv);
  Eigen::VectorXd resid = yv - m * beta;
  LinearFit fit;
  fit.n = n;
  fit.residual_variance = resid.squaredNorm() / static_cast<double>(n - p);
  fit.residuals.assign(resid.data(), resid.data() + resid.size());
  Eigen::VectorXd diag = inverse_gram_diagonal(qr);
  for (std::size_t j = 0; j < p; ++j) {
    const auto k = static_cast<Eigen::Index>(j);
    fit.terms.push_back(Term{term_name(x, k), beta(k),
                             std::sqrt(fit.residual_variance * diag(k))});
  }
  return fit;
}

double PropensityModel::coefficient(std::string_view name) const {
  for (const auto& t : terms) {
    if (t.name == name) return t.coefficient;
  }
  throw Error(ErrorCode::kInvalidArgument,
              fmt::format("model has no term '{}'", name), {std::string(name)});
}

namespace {

double sigmoid(double eta) {
  if (eta >= 0) return 1.0 / (1.0 + std::exp(-eta));
  const double e = std::exp(eta);
  return e / (1.0 + e);
}

}  // namespace

double PropensityModel::predict(std::span<const double> row) const {
  double eta = terms.front().coefficient;
  for (std::size_t j = 0; j < row.size(); ++j) {
    eta += terms[j + 1].coefficient * row[j];
  }
  return sigmoid(eta);
}

std::vector<double> PropensityModel::predict(
    const std::vector<Regressor>& x) const {
  // An intercept-only model has no columns to take the row count from.
  const std::size_t rows = x.empty() ? n : x.front().values.size();
  std::vector<double> out;
  std::vector<double> row(x.size());
  out.reserve(rows);
  for (std::size_t i = 0; i < rows; ++i) {
    for (std::size_t j = 0; j < x.size(); ++j) row[j] = x[j].values[i];
    out.push_back(predict(row));
  }
  return out;
}

PropensityModel logistic_fit(std::span<const double> t,
                             const std::vector<Regressor>& x) {
  const std::size_t n = t.size();
  const std::size_t p = x.size() + 1;
  if (n <= p) {
    throw Error(ErrorCode::kInsufficientData,
                fmt::format("logistic regression needs more than {} rows, got {}",
                            p, n));
  }
  for (double v : t) {
    if (v != 0 && v != 1) {
      throw Error(ErrorCode::kInvalidArgument,
                  "logistic regression response must be 0/1");
    }
  }
  const Eigen::MatrixXd m = design_matrix(n, x);
  const Eigen::Map<const Eigen::VectorXd> tv(t.data(),
                                             static_cast<Eigen::Index>(n));
  Eigen::VectorXd beta = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(p));
  PropensityModel model;
  model.n = n;

  auto separation = [&] {
    throw Error(ErrorCode::kSeparation,
                fmt::format("perfect or quasi-complete separation: a "
                            "coefficient exceeded {} in magnitude",
                            kSeparationThreshold));
  };

  Eigen::VectorXd w(static_cast<Eigen::Index>(n));
  Eigen::VectorXd z(static_cast<Eigen::Index>(n));
  for (int iter = 1; iter <= kLogisticMaxIterations; ++iter) {
    Eigen::VectorXd eta = m * beta;
    for (Eigen::Index i = 0; i < eta.size(); ++i) {
      const double mu = sigmoid(eta(i));
      const double var = std::max(mu * (1 - mu), 1e-12);
      w(i) = std::sqrt(var);
      z(i) = w(i) * (eta(i) + (tv(i) - mu) / var);
    }
    Eigen::MatrixXd wm = w.asDiagonal() * m;
    Qr qr = checked_qr(wm, x);
    Eigen::VectorXd next = qr.solve(z);
    const double change = (next - beta).cwiseAbs().maxCoeff();
    beta = next;
    model.iterations = iter;
    if (!beta.allFinite() || beta.cwiseAbs().maxCoeff() > kSeparationThreshold) {
      separation();
    }
    if (change < kLogisticTolerance) {
      model.converged = true;
      break;
    }
  }

  // Standard errors from the Fisher information at the final estimate.
  Eigen::VectorXd eta = m * beta;
  for (Eigen::Index i = 0; i < eta.size(); ++i) {
    const double mu = sigmoid(eta(i));
    w(i) = std::sqrt(std::max(mu * (1 - mu), 1e-12));
  }
  Qr qr = checked_qr(w.asDiagonal() * m, x);
  Eigen::VectorXd diag = inverse_gram_diagonal(qr);
  for (std::size_t j = 0; j < p; ++j) {
    const auto k = static_cast<Eigen::Index>(j);
    model.terms.push_back(Term{term_name(x, k), beta(k), std::sqrt(diag(k))});
  }
  return model;
}

TestResult fisher_z_from_correlation(double r, std::size_t n, std::size_t k) {
  if (n < k + 4) {
    throw Error(ErrorCode::kInsufficientData,
                fmt::format("Fisher z needs n - k - 3 >= 1 (n={}, k={})", n, k));
  }
  // Keeps the statistic finite for |r| = 1.
  const double clipped = std::clamp(r, -1 + 1e-15, 1 - 1e-15);
  TestResult out;
  out.method = TestMethod::kFisherZ;
  out.dof_or_n = static_cast<long long>(n);
  out.statistic =
      std::sqrt(static_cast<double>(n - k - 3)) * std::atanh(clipped);
  out.p_value = normal_two_sided_p(out.statistic);
  return out;
}

namespace {

void append_regressors(const Column& c, std::vector<Regressor>& out) {
  if (c.type == ColumnType::kCategorical) {
    for (std::size_t level = 1; level < c.levels.size(); ++level) {
      Regressor r{c.name + "=" + c.levels[level], {}};
      r.values.reserve(c.values.size());
      for (double v : c.values) {
        r.values.push_back(v == static_cast<double>(level) ? 1.0 : 0.0);
      }
      out.push_back(std::move(r));
    }
  } else {
    out.push_back(Regressor{c.name, c.values});
  }
}

std::vector<double> residualize(const std::vector<double>& v,
                                const std::vector<Regressor>& given) {
  if (given.empty()) {
    const double mean =
        std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
    std::vector<double> out(v.size());
    for (std::size_t i = 0; i < v.size(); ++i) out[i] = v[i] - mean;
    return out;
  }
  return ols_fit(v, given).residuals;
}

const Column& numeric_column(const DataTable& data, std::string_view name) {
  const Column& c = data.column(name);
  if (c.type == ColumnType::kCategorical) {
    throw Error(ErrorCode::kNonNumericColumn,
                fmt::format("column '{}' is categorical; Fisher z needs a "
                            "numeric column",
                            name),
                {std::string(name)});
  }
  return c;
}

}  // namespace

TestResult fisher_z_test(const DataTable& data, std::string_view x,
                         std::string_view y, const NameSet& given) {
  const Column& cx = numeric_column(data, x);
  const Column& cy = numeric_column(data, y);
  std::vector<Regressor> z;
  for (const auto& g : given) append_regressors(data.column(g), z);
  const std::size_t n = data.n_rows();
  if (n < z.size() + 4) {
    throw Error(ErrorCode::kInsufficientData,
                fmt::format("Fisher z needs n - k - 3 >= 1 (n={}, k={})", n,
                            z.size()));
  }
  const std::vector<double> rx = residualize(cx.values, z);
  const std::vector<double> ry = residualize(cy.values, z);
  double sxy = 0, sxx = 0, syy = 0;
  for (std::size_t i = 0; i < n; ++i) {
    sxy += rx[i] * ry[i];
    sxx += rx[i] * rx[i];
    syy += ry[i] * ry[i];
  }
  std::vector<std::string> warnings;
  double r = 0;
  if (sxx > 0 && syy > 0) {
    r = sxy / std::sqrt(sxx * syy);
  } else {
    warnings.push_back(fmt::format(
        "no residual variation in '{}' after conditioning; correlation set to 0",
        sxx > 0 ? y : x));
  }
  TestResult out = fisher_z_from_correlation(r, n, z.size());
  out.warnings = std::move(warnings);
  return out;
}

TestResult chi_square_independence(const DataTable& data, std::string_view x,
                                   std::string_view y, const NameSet& given) {
  auto categorical = [&](std::string_view name) -> const Column& {
    const Column& c = data.column(name);
    if (!c.categorical()) {
      throw Error(ErrorCode::kNonCategoricalColumn,
                  fmt::format("column '{}' is continuous; chi-square needs "
                              "categorical columns",
                              name),
                  {std::string(name)});
    }
    return c;
  };
  const Column& cx = categorical(x);
  const Column& cy = categorical(y);
  std::vector<const Column*> strata_cols;
  for (const auto& g : given) strata_cols.push_back(&categorical(g));

  std::map<std::vector<int>, std::vector<std::size_t>> strata;
  for (std::size_t r = 0; r < data.n_rows(); ++r) {
    std::vector<int> key;
    for (const Column* c : strata_cols) key.push_back(static_cast<int>(c->values[r]));
    strata[key].push_back(r);
  }

  TestResult out;
  out.method = TestMethod::kChiSquare;
  std::size_t dropped = 0;
  bool small_expected = false;
  double statistic = 0;
  long long dof = 0;
  for (const auto& [key, rows] : strata) {
    std::map<int, std::size_t> xi, yi;
    for (std::size_t r : rows) {
      xi.emplace(static_cast<int>(cx.values[r]), 0);
      yi.emplace(static_cast<int>(cy.values[r]), 0);
    }
    if (xi.size() < 2 || yi.size() < 2) {
      ++dropped;
      continue;
    }
    std::size_t k = 0;
    for (auto& [level, idx] : xi) idx = k++;
    k = 0;
    for (auto& [level, idx] : yi) idx = k++;
    std::vector<std::vector<double>> table(xi.size(),
                                           std::vector<double>(yi.size(), 0));
    for (std::size_t r : rows) {
      table[xi[static_cast<int>(cx.values[r])]][yi[static_cast<int>(cy.values[r])]] += 1;
    }
    std::vector<double> row_sum(xi.size(), 0), col_sum(yi.size(), 0);
    for (std::size_t i = 0; i < xi.size(); ++i) {
      for (std::size_t j = 0; j < yi.size(); ++j) {
        row_sum[i] += table[i][j];
        col_sum[j] += table[i][j];
      }
    }
    const double total = static_cast<double>(rows.size());
    for (std::size_t i = 0; i < xi.size(); ++i) {
      for (std::size_t j = 0; j < yi.size(); ++j) {
        const double e = row_sum[i] * col_sum[j] / total;
        if (e < 5) small_expected = true;
        statistic += (table[i][j] - e) * (table[i][j] - e) / e;
      }
    }
    dof += static_cast<long long>((xi.size() - 1) * (yi.size() - 1));
  }
  if (dof == 0) {
    throw Error(ErrorCode::kEmptyStratum,
                fmt::format("every stratum of {} lacks two levels of '{}' or "
                            "'{}'",
                            given.empty() ? std::string("the data")
                                          : fmt::format("{{{}}}",
                                                        fmt::join(given, ", ")),
                            x, y));
  }
  if (dropped > 0) {
    out.warnings.push_back(fmt::format(
        "dropped {} stratum/strata with fewer than two levels of x or y",
        dropped));
  }
  if (small_expected) {
    out.warnings.push_back("some expected cell counts are below 5");
  }
  out.statistic = statistic;
  out.dof_or_n = dof;
  out.p_value = chi_square_sf(statistic, static_cast<double>(dof));
  return out;
}

TestResult chi_square_gof(std::span<const long long> counts,
                          std::span<const double> expected_ratios) {
  if (counts.size() != expected_ratios.size()) {
    throw Error(ErrorCode::kLengthMismatch,
                fmt::format("{} counts but {} ratios", counts.size(),
                            expected_ratios.size()));
  }
  if (counts.size() < 2) {
    throw Error(ErrorCode::kInvalidArgument, "need at least two categories");
  }
  double total = 0;
  double ratio_sum = 0;
  for (std::size_t i = 0; i < counts.size(); ++i) {
    if (counts[i] < 0) {
      throw Error(ErrorCode::kInvalidArgument, "counts must be non-negative");
    }
    if (!(expected_ratios[i] > 0) || !std::isfinite(expected_ratios[i])) {
      throw Error(ErrorCode::kInvalidArgument, "ratios must be positive");
    }
    total += static_cast<double>(counts[i]);
    ratio_sum += expected_ratios[i];
  }
  if (total == 0) throw Error(ErrorCode::kZeroTotal, "all counts are zero");
  TestResult out;
  out.method = TestMethod::kChiSquare;
  for (std::size_t i = 0; i < counts.size(); ++i) {
    const double e = total * expected_ratios[i] / ratio_sum;
    const double d = static_cast<double>(counts[i]) - e;
    out.statistic += d * d / e;
  }
  out.dof_or_n = static_cast<long long>(counts.size() - 1);
  out.p_value = chi_square_sf(out.statistic, static_cast<double>(out.dof_or_n));
  return out;
}

TestResult ci_test(const DataTable& data, std::string_view x,
                   std::string_view y, const NameSet& given) {
  bool all_categorical =
      data.column(x).categorical() && data.column(y).categorical();
  for (const auto& g : given) {
    all_categorical = all_categorical && data.column(g).categorical();
  }
  if (all_categorical) return chi_square_independence(data, x, y, given);
  return fisher_z_test(data, x, y, given);
}

std::vector<double> holm_adjust(std::span<const double> p_values) {
  const std::size_t m = p_values.size();
  std::vector<std::size_t> order(m);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return p_values[a] < p_values[b];
  });
  std::vector<double> adjusted(m);
  double running = 0;
  for (std::size_t rank = 0; rank < m; ++rank) {
    const std::size_t i = order[rank];
    running = std::max(running, std::min(1.0, static_cast<double>(m - rank) *
                                                  p_values[i]));
    adjusted[i] = running;
  }
  return adjusted;
}

}  // namespace causal::stats
