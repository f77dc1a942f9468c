#pragma once

#include "targetwatch/corpus.hpp"
#include "targetwatch/table.hpp"

#include <cstddef>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace tw::heterogeneity {

/// Dense row-major covariate matrix with named columns.
struct DesignMatrix {
  std::vector<std::string> row_names;
  std::vector<std::string> columns;
  std::vector<double> values;
  /// Dummy columns removed because they were constant (category absent).
  std::vector<std::string> dropped_columns;

  std::size_t rows() const noexcept { return row_names.size(); }
  std::size_t cols() const noexcept { return columns.size(); }
  double& at(std::size_t r, std::size_t c) { return values[r * columns.size() + c]; }
  double at(std::size_t r, std::size_t c) const { return values[r * columns.size() + c]; }
  std::size_t column(std::string_view name) const;
};

struct DesignOptions {
  /// Regions/parties with the most targets that get their own dummy.
  std::size_t top_k = 10;
};

struct Design {
  DesignMatrix x;
  std::vector<double> y;  // misogynistic mentions per target
};

/// Age bracket label used for the regression ("<=30", "31-40", ... ">70").
std::string age_group(int age_years);

/// Covariates per target: log10 of mention, follower and own-post counts
/// (zero floored to one), reference-coded dummy blocks, and a trailing
/// "Constant" column. Throws DataError for an empty roster.
Design build_design_matrix(std::span<const corpus::TargetProfile> roster,
                           const std::map<std::string, std::size_t>& mention_counts,
                           const std::map<std::string, std::size_t>& miso_counts, const DesignOptions& options = {});

struct RegressionResult {
  std::vector<std::string> names;
  std::vector<double> coefficients;
  std::vector<double> standard_errors;
  std::vector<std::pair<double, double>> ci95;
  std::vector<double> z;
  std::vector<double> p_values;
  double deviance = 0.0;
  double log_likelihood = 0.0;
  double null_log_likelihood = 0.0;
  double pseudo_r2_cox_snell = 0.0;
  double score_max_norm = 0.0;
  std::size_t n = 0;
  int iterations = 0;
  bool converged = false;

  /// Coefficient by name; throws std::out_of_range when absent.
  double coefficient(std::string_view name) const;
  double standard_error(std::string_view name) const;
};

struct GlmOptions {
  int max_iter = 100;
  double deviance_tolerance = 1e-8;
  double score_tolerance = 1e-6;
  /// Optional log-exposure offset, one entry per row.
  std::optional<std::vector<double>> offset;
};

/// Poisson regression with log link by iteratively reweighted least squares,
/// halving the step whenever the deviance rises. Throws DataError on rank
/// deficiency (naming the dependent columns) or invalid responses.
RegressionResult fit_poisson_glm(const DesignMatrix& x, std::span<const double> y, const GlmOptions& options = {});

/// Poisson log-likelihood including the log(y!) term.
double poisson_log_likelihood(std::span<const double> y, std::span<const double> mu);
double poisson_deviance(std::span<const double> y, std::span<const double> mu);

/// miso / total. Throws DataError when total is zero or miso exceeds total.
double misogyny_ratio(std::size_t miso_count, std::size_t total_count);

/// "***" for p < .001, "**" for p < .01, "*" for p < .05.
std::string significance_stars(double p);

/// Variable, Coef., Std. Err., z, p, stars, 95% CI bounds; one row per coefficient.
Table regression_table(const RegressionResult& result);

}  // namespace tw::heterogeneity
