#ifndef CAUSAL_STATS_H_
#define CAUSAL_STATS_H_

#include <cstddef>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "causal/core.h"
#include "causal/tabular.h"

namespace causal::stats {

// Name of the intercept term in every fit.
inline constexpr std::string_view kIntercept = "_const";

// Regularized upper incomplete gamma Q(a, x) = Γ(a, x) / Γ(a).
double regularized_gamma_q(double a, double x);
// Regularized lower incomplete gamma P(a, x) = 1 - Q(a, x).
double regularized_gamma_p(double a, double x);
// Complementary error function, via erfc(x) = Q(1/2, x^2) for x >= 0.
double erfc(double x);
// P(|Z| >= |z|) for standard normal Z.
double normal_two_sided_p(double z);
// P(X >= x) for X ~ chi-square(dof).
double chi_square_sf(double x, double dof);

// Named regressor column.
struct Regressor {
  std::string name;
  std::vector<double> values;
};

struct Term {
  std::string name;
  double coefficient = 0;
  double standard_error = 0;
};

struct LinearFit {
  // Intercept first, then regressors in input order.
  std::vector<Term> terms;
  double residual_variance = 0;
  std::size_t n = 0;
  std::vector<double> residuals;

  // Throws Error(kInvalidArgument) for an unknown term.
  const Term& term(std::string_view name) const;
  double coefficient(std::string_view name) const { return term(name).coefficient; }
  double standard_error(std::string_view name) const {
    return term(name).standard_error;
  }
};

// Least squares with intercept, solved by column-pivoted Householder QR.
// Errors: kInsufficientData (n <= p), kRankDeficient (subjects name the
// columns that are linear combinations of the others), kLengthMismatch.
LinearFit ols_fit(std::span<const double> y, const std::vector<Regressor>& x);

inline constexpr double kLogisticTolerance = 1e-8;
inline constexpr int kLogisticMaxIterations = 100;
inline constexpr double kSeparationThreshold = 30.0;

struct PropensityModel {
  // Intercept first, then regressors in input order.
  std::vector<Term> terms;
  bool converged = false;
  int iterations = 0;
  std::size_t n = 0;  // rows fit on

  double coefficient(std::string_view name) const;
  // sigmoid(linear predictor) for one row of regressor values (input order).
  double predict(std::span<const double> row) const;
  // Predicted probability for every row of the regressors the model was fit on.
  std::vector<double> predict(const std::vector<Regressor>& x) const;
};

// Bernoulli maximum likelihood via iteratively reweighted least squares.
// Stops when the largest coefficient change is below 1e-8 or after 100
// iterations. Errors: kSeparation (|coefficient| > 30), kInsufficientData,
// kInvalidArgument (t not 0/1), kRankDeficient.
PropensityModel logistic_fit(std::span<const double> t,
                             const std::vector<Regressor>& x);

enum class TestMethod { kFisherZ, kChiSquare };

std::string_view test_method_name(TestMethod method);

struct TestResult {
  double statistic = 0;
  double p_value = 1;
  // Degrees of freedom for chi-square, sample size for Fisher z.
  long long dof_or_n = 0;
  TestMethod method = TestMethod::kFisherZ;
  std::vector<std::string> warnings;
};

// Fisher z statistic sqrt(n - k - 3) * atanh(r) for a partial correlation r
// over n samples with k conditioning variables; two-sided normal p-value.
TestResult fisher_z_from_correlation(double r, std::size_t n, std::size_t k);

// Partial correlation of x and y given `given` via regression residuals.
// Categorical conditioning columns are one-hot encoded; x and y must be
// continuous or binary. Errors: kNonNumericColumn, kInsufficientData.
TestResult fisher_z_test(const DataTable& data, std::string_view x,
                         std::string_view y, const NameSet& given);

// Pearson chi-square summed over strata of the (categorical) conditioning
// columns. Strata with fewer than two observed x or y levels are dropped
// with a warning. Errors: kNonCategoricalColumn, kEmptyStratum (all dropped).
TestResult chi_square_independence(const DataTable& data, std::string_view x,
                                   std::string_view y, const NameSet& given);

// Goodness of fit of counts against expected ratios. Errors:
// kLengthMismatch, kZeroTotal, kInvalidArgument (bad counts/ratios).
TestResult chi_square_gof(std::span<const long long> counts,
                          std::span<const double> expected_ratios);

// Chi-square when x, y and all conditioning columns are categorical, Fisher z
// otherwise (binary columns count as numeric there).
TestResult ci_test(const DataTable& data, std::string_view x,
                   std::string_view y, const NameSet& given);

// Holm step-down adjusted p-values, same order as the input.
std::vector<double> holm_adjust(std::span<const double> p_values);

}  // namespace causal::stats

#endif  // CAUSAL_STATS_H_
