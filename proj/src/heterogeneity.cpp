#include "targetwatch/heterogeneity.hpp"

#include "targetwatch/common.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <numeric>

#include <fmt/format.h>

namespace tw::heterogeneity {

using corpus::BolsonaroSupport;
using corpus::Ethnicity;
using corpus::Hierarchy;
using corpus::Orientation;
using corpus::Religion;

std::size_t DesignMatrix::column(std::string_view name) const {
  for (std::size_t i = 0; i < columns.size(); ++i) {
    if (columns[i] == name) return i;
  }
  throw std::out_of_range(fmt::format("no design column '{}'", name));
}

std::string age_group(int age) {
  if (age <= 30) return "<=30";
  if (age <= 40) return "31-40";
  if (age <= 50) return "41-50";
  if (age <= 60) return "51-60";
  if (age <= 70) return "61-70";
  return ">70";
}

namespace {

// Levels of a top-k grouped variable, most frequent first (ties by name).
// At least one level is always left to the REST reference group.
std::vector<std::string> top_levels(const std::vector<std::string>& values, std::size_t top_k) {
  std::map<std::string, std::size_t> counts;
  for (const auto& v : values) ++counts[v];
  std::vector<std::pair<std::string, std::size_t>> ranked(counts.begin(), counts.end());
  std::stable_sort(ranked.begin(), ranked.end(), [](const auto& a, const auto& b) { return a.second > b.second; });
  const std::size_t keep = std::min(top_k, ranked.size() > 0 ? ranked.size() - 1 : 0);
  std::vector<std::string> out;
  for (std::size_t i = 0; i < keep; ++i) out.push_back(ranked[i].first);
  std::sort(out.begin(), out.end());
  return out;
}

double log10_floor1(std::size_t count) { return std::log10(static_cast<double>(std::max<std::size_t>(count, 1))); }

std::string_view orientation_label(Orientation o) {
  switch (o) {
    case Orientation::FarLeft: return "Far-left";
    case Orientation::Left: return "Left";
    case Orientation::Centre: return "Center";
    case Orientation::Right: return "Right";
    case Orientation::FarRight: return "Far-right";
  }
  return "";
}

std::string_view hierarchy_label(Hierarchy h) {
  switch (h) {
    case Hierarchy::President: return "President";
    case Hierarchy::VicePresident: return "Vice-president";
    case Hierarchy::Governor: return "Governor";
    case Hierarchy::ViceGovernor: return "Vice-governor";
    case Hierarchy::Senator: return "Senator";
    case Hierarchy::FederalDeputy: return "Federal deputy";
    case Hierarchy::StateDeputy: return "State deputy";
  }
  return "";
}

std::string_view religion_label(Religion r) {
  switch (r) {
    case Religion::AfroBrazilian: return "Afro-Brazilian";
    case Religion::Evangelical: return "Evangelical";
    case Religion::ChristianCatholic: return "Christian/Catholic";
    case Religion::Jewish:
    case Religion::None: return "Other";
  }
  return "";
}

}  // namespace

Design build_design_matrix(std::span<const corpus::TargetProfile> roster,
                           const std::map<std::string, std::size_t>& mention_counts,
                           const std::map<std::string, std::size_t>& miso_counts, const DesignOptions& options) {
  if (roster.empty()) throw DataError("cannot build a design matrix for an empty roster");

  std::vector<std::string> regions, parties;
  for (const auto& t : roster) {
    regions.push_back(t.region);
    parties.push_back(t.party);
  }
  const auto top_regions = top_levels(regions, options.top_k);
  const auto top_parties = top_levels(parties, options.top_k);

  // Column layout; each dummy block lists its non-reference levels.
  struct Block {
    std::string prefix;
    std::vector<std::string> levels;
  };
  const std::vector<Block> blocks{
      {"Region", top_regions},
      {"Party", top_parties},
      {"Political Orientation", {"Far-left", "Left", "Right", "Far-right"}},
      {"Bolsonaro Supporter", {"Unknown", "Yes"}},
      {"Religion", {"Afro-Brazilian", "Evangelical", "Other"}},
      {"Ethnicity", {"Asian", "Black", "Brown", "Indigenous"}},
      {"Hierarchy Level",
       {"President", "Vice-president", "Governor", "Vice-governor", "Senator", "Federal deputy"}},
      {"Age Group", {"31-40", "41-50", "51-60", "61-70", ">70"}},
  };

  std::vector<std::string> columns{"log10(NumberOfMentionsCount)", "log10(FollowerCount)", "log10(OwnTweetCount)"};
  for (const auto& b : blocks) {
    for (const auto& level : b.levels) columns.push_back(b.prefix + ": " + level);
  }
  columns.push_back("Constant");

  auto lookup = [](const std::map<std::string, std::size_t>& m, const std::string& key) -> std::size_t {
    auto it = m.find(key);
    return it == m.end() ? 0 : it->second;
  };

  Design design;
  DesignMatrix full;
  full.columns = columns;
  full.values.assign(roster.size() * columns.size(), 0.0);
  for (std::size_t r = 0; r < roster.size(); ++r) {
    const auto& t = roster[r];
    full.row_names.push_back(t.handle);
    full.at(r, 0) = log10_floor1(lookup(mention_counts, t.handle));
    full.at(r, 1) = log10_floor1(static_cast<std::size_t>(t.follower_count));
    full.at(r, 2) = log10_floor1(static_cast<std::size_t>(t.own_tweet_count));
    const std::array<std::string, 8> level_of{
        t.region,
        t.party,
        std::string(orientation_label(t.political_orientation)),
        std::string(corpus::to_string(t.bolsonaro_support)),
        std::string(religion_label(t.religion)),
        std::string(corpus::to_string(t.ethnicity)),
        std::string(hierarchy_label(t.hierarchy_level)),
        age_group(t.age_years)};
    std::size_t c = 3;
    for (std::size_t b = 0; b < blocks.size(); ++b) {
      for (const auto& level : blocks[b].levels) {
        if (level_of[b] == level) full.at(r, c) = 1.0;
        ++c;
      }
    }
    full.at(r, columns.size() - 1) = 1.0;
    design.y.push_back(static_cast<double>(lookup(miso_counts, t.handle)));
  }

  // Drop constant dummy columns (categories absent from, or universal in, the roster).
  std::vector<std::size_t> keep;
  for (std::size_t c = 0; c < columns.size(); ++c) {
    const bool dummy = c >= 3 && c + 1 < columns.size();
    bool constant = true;
    for (std::size_t r = 1; r < roster.size() && constant; ++r) constant = full.at(r, c) == full.at(0, c);
    if (dummy && constant) {
      full.dropped_columns.push_back(columns[c]);
    } else {
      keep.push_back(c);
    }
  }
  DesignMatrix& x = design.x;
  x.row_names = full.row_names;
  x.dropped_columns = full.dropped_columns;
  for (std::size_t c : keep) x.columns.push_back(columns[c]);
  x.values.reserve(roster.size() * keep.size());
  for (std::size_t r = 0; r < roster.size(); ++r) {
    for (std::size_t c : keep) x.values.push_back(full.at(r, c));
  }
  return design;
}

double poisson_log_likelihood(std::span<const double> y, std::span<const double> mu) {
  double ll = 0.0;
  for (std::size_t i = 0; i < y.size(); ++i) {
    ll += (y[i] > 0.0 ? y[i] * std::log(mu[i]) : 0.0) - mu[i] - std::lgamma(y[i] + 1.0);
  }
  return ll;
}

double poisson_deviance(std::span<const double> y, std::span<const double> mu) {
  double d = 0.0;
  for (std::size_t i = 0; i < y.size(); ++i) {
    d += (y[i] > 0.0 ? y[i] * std::log(y[i] / mu[i]) : 0.0) - (y[i] - mu[i]);
  }
  return 2.0 * d;
}

double RegressionResult::coefficient(std::string_view name) const {
  for (std::size_t i = 0; i < names.size(); ++i) {
    if (names[i] == name) return coefficients[i];
  }
  throw std::out_of_range(fmt::format("no coefficient '{}'", name));
}

double RegressionResult::standard_error(std::string_view name) const {
  for (std::size_t i = 0; i < names.size(); ++i) {
    if (names[i] == name) return standard_errors[i];
  }
  throw std::out_of_range(fmt::format("no coefficient '{}'", name));
}

RegressionResult fit_poisson_glm(const DesignMatrix& design, std::span<const double> y_in, const GlmOptions& options) {
  const std::size_t n = design.rows(), p = design.cols();
  if (n == 0 || p == 0) throw DataError("empty design matrix");
  if (y_in.size() != n) throw DataError("response length differs from design rows");
  if (options.offset && options.offset->size() != n) throw DataError("offset length differs from design rows");
  for (double v : y_in) {
    if (!(v >= 0.0) || v != std::floor(v)) throw DataError("Poisson responses must be nonnegative integers");
  }

  using Eigen::MatrixXd;
  using Eigen::VectorXd;
  const Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>> x(
      design.values.data(), static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(p));
  const Eigen::Map<const VectorXd> y(y_in.data(), static_cast<Eigen::Index>(n));
  const VectorXd offset = options.offset
                              ? Eigen::Map<const VectorXd>(options.offset->data(), static_cast<Eigen::Index>(n)).eval()
                              : VectorXd::Zero(static_cast<Eigen::Index>(n));

  {
    Eigen::ColPivHouseholderQR<MatrixXd> qr(x);
    if (qr.rank() < static_cast<Eigen::Index>(p)) {
      std::string names;
      const auto& perm = qr.colsPermutation().indices();
      for (Eigen::Index k = qr.rank(); k < static_cast<Eigen::Index>(p); ++k) {
        if (!names.empty()) names += ", ";
        names += design.columns[static_cast<std::size_t>(perm[k])];
      }
      throw DataError("design matrix is rank deficient; dependent columns: " + names);
    }
  }

  const double y_sum = y.sum();
  if (y_sum <= 0.0) throw DataError("all responses are zero; the Poisson MLE does not exist");

  // Start from the intercept-only solution when a constant column exists.
  VectorXd beta = VectorXd::Zero(static_cast<Eigen::Index>(p));
  const double base = std::log(y_sum / offset.array().exp().sum());
  std::optional<std::size_t> intercept;
  for (std::size_t c = 0; c < p; ++c) {
    if ((x.col(static_cast<Eigen::Index>(c)).array() == 1.0).all()) {
      intercept = c;
      break;
    }
  }
  if (intercept) {
    beta[static_cast<Eigen::Index>(*intercept)] = base;
  }

  auto means = [&](const VectorXd& b) { return (x * b + offset).array().exp().matrix().eval(); };
  auto as_span = [](const VectorXd& v) { return std::span<const double>(v.data(), static_cast<std::size_t>(v.size())); };

  VectorXd mu = means(beta);
  if (!intercept) {
    // Without a constant column, seed from a weighted least-squares fit of log(y + 0.5).
    const VectorXd z = (y.array() + 0.5).log().matrix() - offset;
    beta = x.colPivHouseholderQr().solve(z);
    mu = means(beta);
  }
  double dev = poisson_deviance(as_span(y), as_span(mu));
  VectorXd score = x.transpose() * (y - mu);

  RegressionResult result;
  result.n = n;
  bool dev_converged = false;
  int it = 0;
  for (; it < options.max_iter; ++it) {
    if (score.cwiseAbs().maxCoeff() < options.score_tolerance && (dev_converged || it == 0)) break;
    const MatrixXd info = x.transpose() * mu.asDiagonal() * x;
    const VectorXd step = info.ldlt().solve(score);
    double t = 1.0;
    VectorXd trial = beta + step;
    VectorXd mu_trial = means(trial);
    double dev_trial = poisson_deviance(as_span(y), as_span(mu_trial));
    int halvings = 0;
    while ((!std::isfinite(dev_trial) || dev_trial > dev * (1.0 + 1e-12) + 1e-12) && halvings < 50) {
      t *= 0.5;
      ++halvings;
      trial = beta + t * step;
      mu_trial = means(trial);
      dev_trial = poisson_deviance(as_span(y), as_span(mu_trial));
    }
    if (!std::isfinite(dev_trial)) break;
    const double change = std::abs(dev_trial - dev);
    beta = trial;
    mu = mu_trial;
    score = x.transpose() * (y - mu);
    dev_converged = change < options.deviance_tolerance * (std::abs(dev_trial) + 0.1);
    dev = dev_trial;
  }
  result.iterations = it;
  result.score_max_norm = score.cwiseAbs().maxCoeff();
  result.converged = result.score_max_norm < options.score_tolerance;
  result.deviance = dev;

  const MatrixXd info = x.transpose() * mu.asDiagonal() * x;
  const MatrixXd cov = info.ldlt().solve(MatrixXd::Identity(static_cast<Eigen::Index>(p), static_cast<Eigen::Index>(p)));
  result.names = design.columns;
  for (std::size_t c = 0; c < p; ++c) {
    const double b = beta[static_cast<Eigen::Index>(c)];
    const double se = std::sqrt(cov(static_cast<Eigen::Index>(c), static_cast<Eigen::Index>(c)));
    result.coefficients.push_back(b);
    result.standard_errors.push_back(se);
    result.ci95.emplace_back(b - 1.96 * se, b + 1.96 * se);
    const double z = b / se;
    result.z.push_back(z);
    result.p_values.push_back(std::erfc(std::abs(z) / std::sqrt(2.0)));
  }

  result.log_likelihood = poisson_log_likelihood(as_span(y), as_span(mu));
  const VectorXd mu_null = (offset.array() + base).exp().matrix();
  result.null_log_likelihood = poisson_log_likelihood(as_span(y), as_span(mu_null));
  result.pseudo_r2_cox_snell =
      1.0 - std::exp(2.0 * (result.null_log_likelihood - result.log_likelihood) / static_cast<double>(n));
  return result;
}

double misogyny_ratio(std::size_t miso_count, std::size_t total_count) {
  if (total_count == 0) throw DataError("misogyny ratio undefined for zero received posts");
  if (miso_count > total_count) throw DataError("misogynistic count exceeds total count");
  return static_cast<double>(miso_count) / static_cast<double>(total_count);
}

std::string significance_stars(double p) {
  if (p < 0.001) return "***";
  if (p < 0.01) return "**";
  if (p < 0.05) return "*";
  return "";
}

Table regression_table(const RegressionResult& r) {
  Table t;
  t.header = {"variable", "coef", "std_err", "z", "p", "stars", "ci_low", "ci_high"};
  for (std::size_t i = 0; i < r.names.size(); ++i) {
    t.rows.push_back({r.names[i], format_double(r.coefficients[i]), format_double(r.standard_errors[i]),
                      format_double(r.z[i]), format_double(r.p_values[i]), significance_stars(r.p_values[i]),
                      format_double(r.ci95[i].first), format_double(r.ci95[i].second)});
  }
  return t;
}

}  // namespace tw::heterogeneity
