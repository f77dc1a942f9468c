#pragma once

#include "targetwatch/corpus.hpp"
#include "targetwatch/timeutil.hpp"

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace tw::deterrence {

struct WeekCounts {
  std::size_t week = 0;
  std::uint64_t miso = 0;  // flagged mentions received
  std::uint64_t own = 0;   // posts sent by the target
};

struct WeekSeries {
  std::string target;
  std::vector<WeekCounts> weeks;  // consecutive from 0, zeros explicit
};

enum class WeekMode {
  Anchored,  // 7-day blocks from the window start, trailing partial block dropped
  Iso,       // Monday-start weeks fully inside the window
};

/// Number of full weeks the window yields under `mode`.
std::size_t week_count(const Window& window, WeekMode mode = WeekMode::Anchored);

/// One series per roster target, roster order. `flags` is parallel to `posts`.
std::vector<WeekSeries> weekly_aggregate(std::span<const corpus::Post> posts, std::span<const std::uint8_t> flags,
                                         std::span<const corpus::TargetProfile> roster, const Window& window,
                                         WeekMode mode = WeekMode::Anchored);

struct LagPoint {
  std::string target;
  std::size_t week = 0;  // t, so x comes from week t-1
  double x = 0.0;        // misogynistic mentions in week t-1
  double y = 0.0;        // own posts in week t
  bool standardized = false;
};

/// One point per week t >= 1. Throws DataError for fewer than two weeks.
std::vector<LagPoint> build_lag_pairs(const WeekSeries& series);

enum class SelectionMode {
  AnyWeek,    // some week reaches the threshold
  MeanWeekly, // average weekly count reaches it
  EveryWeek,  // every week reaches it
};

std::vector<WeekSeries> select_targets(std::span<const WeekSeries> series, std::uint64_t min_weekly_miso = 5,
                                       SelectionMode mode = SelectionMode::AnyWeek);

struct Point2 {
  double x = 0.0;
  double y = 0.0;
};

/// Average-linkage agglomerative clustering on Euclidean distance, cut at k
/// clusters. Among equally close pairs (relative gap below 1e-10) the one
/// with the smallest member indices merges first. Labels are 0..k-1, numbered by each cluster's
/// smallest member index.
std::vector<int> average_linkage(std::span<const Point2> points, std::size_t k);

/// Mean pairwise Euclidean distance inside a point set (0 for fewer than two points).
double mean_internal_distance(std::span<const Point2> points);

struct OutlierPartition {
  std::vector<std::size_t> inliers;   // indices into the input, ascending
  std::vector<std::size_t> outliers;  // indices into the input, ascending
  Point2 inlier_centroid;
  std::size_t cluster_count_used = 0;
  std::vector<int> labels;
  int inlier_label = -1;
  /// The chosen cluster had the lowest mean internal distance.
  bool homogeneity_met = false;
  /// The chosen cluster's centroid is <= every other centroid in x and y.
  bool bottom_left_met = false;
  /// Strict selection failed and the near-homogeneous, lowest x+y cluster was taken.
  bool fallback_used = false;
};

/// Throws ConfigError for k < 2 and DataError for fewer than k points.
OutlierPartition detect_outliers(std::span<const Point2> points, std::size_t k = 3);

/// z-scores (sample standard deviation) of x and y over `basis`, applied to
/// every point. Throws DataError when either coordinate has zero spread.
std::vector<LagPoint> standardize(std::span<const LagPoint> points);
std::vector<LagPoint> standardize(std::span<const LagPoint> points, std::span<const LagPoint> basis);

struct DeterrenceFit {
  double beta0 = 0.0;
  double beta1 = 0.0;
  double se_beta0 = 0.0;
  double se_beta1 = 0.0;
  std::pair<double, double> ci95_beta0;
  std::pair<double, double> ci95_beta1;
  double p_beta1 = 1.0;  // two-sided, normal reference
  double r2 = 0.0;
  std::size_t n_points = 0;
};

/// Ordinary least squares of y on x. Throws DataError for < 3 points or constant x.
DeterrenceFit fit_deterrence(std::span<const LagPoint> points);

enum class StandardizeBasis { AllLagPoints, OutliersOnly };

struct DeterrenceOptions {
  std::size_t cluster_k = 3;
  std::uint64_t min_weekly_miso = 5;
  SelectionMode selection = SelectionMode::AnyWeek;
  StandardizeBasis basis = StandardizeBasis::AllLagPoints;
};

struct TargetAnalysis {
  std::string target;
  std::vector<LagPoint> points;  // raw lag points
  OutlierPartition partition;
  std::vector<LagPoint> standardized;  // empty when skipped
  std::string skip_reason;
};

struct TargetSlope {
  std::string target;
  std::size_t n_outliers = 0;
  bool fitted = false;
  double beta1 = 0.0;
  std::string reason;
};

struct SlopeSummary {
  std::vector<TargetSlope> targets;
  std::size_t n_fitted = 0;
  std::size_t n_negative = 0;
  double fraction_negative = 0.0;
};

/// Fits each target's standardized outliers separately.
SlopeSummary per_target_slopes(std::span<const TargetAnalysis> analyses);

struct StabilityRow {
  std::size_t k = 0;
  std::size_t targets_compared = 0;
  double mean_jaccard = 0.0;  // inlier-set overlap with the default k
};

struct DeterrenceAnalysis {
  std::vector<TargetAnalysis> targets;  // sorted by handle
  std::vector<LagPoint> pooled_outliers;
  std::vector<LagPoint> pooled_inliers;
  DeterrenceFit pooled;
  bool pooled_fitted = false;
  SlopeSummary slopes;
  std::size_t pairs_all = 0;       // lag pairs before target selection
  std::size_t pairs_selected = 0;  // lag pairs of selected targets
  std::size_t outlier_pairs = 0;
  std::size_t targets_selected = 0;
  std::vector<StabilityRow> k_sweep;
};

/// Selection, per-target outlier detection and standardization, pooled and
/// per-target fits. Per-target work runs on `jobs` threads; results are in
/// canonical (handle, week) order regardless.
DeterrenceAnalysis analyze(std::span<const WeekSeries> series, const DeterrenceOptions& options = {},
                           unsigned jobs = 1);

}  // namespace tw::deterrence
