#include "targetwatch/deterrence.hpp"

#include "targetwatch/common.hpp"
#include "targetwatch/parallel.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numeric>
#include <set>
#include <unordered_map>

namespace tw::deterrence {

namespace {

constexpr UnixSeconds kWeek = 7 * kSecondsPerDay;

// Start of the first counted week.
UnixSeconds first_week_start(const Window& w, WeekMode mode) {
  if (mode == WeekMode::Anchored) return w.start;
  std::int64_t day = w.start / kSecondsPerDay;
  if (w.start % kSecondsPerDay != 0) ++day;
  // 1970-01-01 was a Thursday; Monday has (day + 3) % 7 == 0.
  const std::int64_t dow = ((day + 3) % 7 + 7) % 7;
  if (dow != 0) day += 7 - dow;
  return day * kSecondsPerDay;
}

double dist(const Point2& a, const Point2& b) { return std::hypot(a.x - b.x, a.y - b.y); }

Point2 centroid(std::span<const Point2> pts, const std::vector<std::size_t>& idx) {
  Point2 c;
  for (auto i : idx) {
    c.x += pts[i].x;
    c.y += pts[i].y;
  }
  c.x /= static_cast<double>(idx.size());
  c.y /= static_cast<double>(idx.size());
  return c;
}

double normal_two_sided_p(double z) { return std::erfc(std::abs(z) / std::sqrt(2.0)); }

}  // namespace

std::size_t week_count(const Window& window, WeekMode mode) {
  const UnixSeconds start = first_week_start(window, mode);
  if (window.end <= start) return 0;
  return static_cast<std::size_t>((window.end - start) / kWeek);
}

std::vector<WeekSeries> weekly_aggregate(std::span<const corpus::Post> posts, std::span<const std::uint8_t> flags,
                                         std::span<const corpus::TargetProfile> roster, const Window& window,
                                         WeekMode mode) {
  if (flags.size() != posts.size()) throw DataError("flag count does not match post count");
  const std::size_t weeks = week_count(window, mode);
  const UnixSeconds start = first_week_start(window, mode);
  std::vector<WeekSeries> out(roster.size());
  std::unordered_map<std::string, std::size_t> slot;
  for (std::size_t i = 0; i < roster.size(); ++i) {
    out[i].target = roster[i].handle;
    out[i].weeks.resize(weeks);
    for (std::size_t w = 0; w < weeks; ++w) out[i].weeks[w].week = w;
    slot.emplace(roster[i].handle, i);
  }
  for (std::size_t p = 0; p < posts.size(); ++p) {
    const auto& post = posts[p];
    if (post.timestamp < start || !window.contains(post.timestamp)) continue;
    const auto w = static_cast<std::size_t>((post.timestamp - start) / kWeek);
    if (w >= weeks) continue;
    if (post.is_own) {
      if (auto it = slot.find(post.author); it != slot.end()) ++out[it->second].weeks[w].own;
    } else if (flags[p] != 0) {
      for (const auto& m : post.mentions) {
        if (auto it = slot.find(m); it != slot.end()) ++out[it->second].weeks[w].miso;
      }
    }
  }
  return out;
}

std::vector<LagPoint> build_lag_pairs(const WeekSeries& series) {
  if (series.weeks.size() < 2) throw DataError("lag pairs need at least two weeks for " + series.target);
  std::vector<LagPoint> out;
  out.reserve(series.weeks.size() - 1);
  for (std::size_t t = 1; t < series.weeks.size(); ++t) {
    LagPoint p;
    p.target = series.target;
    p.week = t;
    p.x = static_cast<double>(series.weeks[t - 1].miso);
    p.y = static_cast<double>(series.weeks[t].own);
    out.push_back(std::move(p));
  }
  return out;
}

std::vector<WeekSeries> select_targets(std::span<const WeekSeries> series, std::uint64_t min_weekly_miso,
                                       SelectionMode mode) {
  std::vector<WeekSeries> out;
  for (const auto& s : series) {
    bool keep = false;
    if (min_weekly_miso == 0) {
      keep = true;
    } else if (s.weeks.empty()) {
      keep = false;
    } else if (mode == SelectionMode::AnyWeek) {
      keep = std::any_of(s.weeks.begin(), s.weeks.end(), [&](const WeekCounts& w) { return w.miso >= min_weekly_miso; });
    } else if (mode == SelectionMode::EveryWeek) {
      keep = std::all_of(s.weeks.begin(), s.weeks.end(), [&](const WeekCounts& w) { return w.miso >= min_weekly_miso; });
    } else {
      std::uint64_t total = 0;
      for (const auto& w : s.weeks) total += w.miso;
      keep = static_cast<double>(total) / static_cast<double>(s.weeks.size()) >= static_cast<double>(min_weekly_miso);
    }
    if (keep) out.push_back(s);
  }
  return out;
}

// Relative gap below which two linkage distances count as tied.
constexpr double kTieTolerance = 1e-10;

std::vector<int> average_linkage(std::span<const Point2> points, std::size_t k) {
  const std::size_t n = points.size();
  if (k < 1) throw ConfigError("cluster count must be positive");
  if (n < k) throw DataError("fewer points than clusters");
  // Slot i holds the cluster whose smallest member is point i.
  std::vector<double> d(n * n, 0.0);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j) d[i * n + j] = d[j * n + i] = dist(points[i], points[j]);
  std::vector<std::size_t> size(n, 1);
  std::vector<std::size_t> owner(n);
  std::iota(owner.begin(), owner.end(), 0);
  std::vector<std::size_t> active(n);
  std::iota(active.begin(), active.end(), 0);

  while (active.size() > k) {
    double best = std::numeric_limits<double>::infinity();
    std::size_t bi = 0, bj = 0;
    for (std::size_t a = 0; a < active.size(); ++a) {
      const std::size_t i = active[a];
      for (std::size_t b = a + 1; b < active.size(); ++b) {
        const std::size_t j = active[b];
        if (d[i * n + j] < best * (1.0 - kTieTolerance)) {
          best = d[i * n + j];
          bi = i;
          bj = j;
        }
      }
    }
    const double ni = static_cast<double>(size[bi]);
    const double nj = static_cast<double>(size[bj]);
    for (std::size_t c : active) {
      if (c == bi || c == bj) continue;
      const double v = (ni * d[bi * n + c] + nj * d[bj * n + c]) / (ni + nj);
      d[bi * n + c] = d[c * n + bi] = v;
    }
    size[bi] += size[bj];
    for (auto& o : owner)
      if (o == bj) o = bi;
    active.erase(std::find(active.begin(), active.end(), bj));
  }
  std::vector<int> label_of_slot(n, -1);
  for (std::size_t a = 0; a < active.size(); ++a) label_of_slot[active[a]] = static_cast<int>(a);
  std::vector<int> labels(n);
  for (std::size_t i = 0; i < n; ++i) labels[i] = label_of_slot[owner[i]];
  return labels;
}

double mean_internal_distance(std::span<const Point2> points) {
  const std::size_t n = points.size();
  if (n < 2) return 0.0;
  double sum = 0.0;
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j) sum += dist(points[i], points[j]);
  return sum / (static_cast<double>(n) * static_cast<double>(n - 1) / 2.0);
}

OutlierPartition detect_outliers(std::span<const Point2> points, std::size_t k) {
  if (k < 2) throw ConfigError("cluster count must be at least 2");
  if (points.size() < k) throw DataError("fewer points than clusters");
  OutlierPartition out;

  const bool identical = std::all_of(points.begin(), points.end(), [&](const Point2& p) {
    return p.x == points.front().x && p.y == points.front().y;
  });
  if (identical) {
    out.inliers.resize(points.size());
    std::iota(out.inliers.begin(), out.inliers.end(), 0);
    out.labels.assign(points.size(), 0);
    out.inlier_label = 0;
    out.cluster_count_used = 1;
    out.inlier_centroid = points.front();
    out.homogeneity_met = out.bottom_left_met = true;
    return out;
  }

  out.labels = average_linkage(points, k);
  out.cluster_count_used = k;
  std::vector<std::vector<std::size_t>> members(k);
  for (std::size_t i = 0; i < points.size(); ++i) members[static_cast<std::size_t>(out.labels[i])].push_back(i);

  std::vector<double> spread(k, std::numeric_limits<double>::infinity());
  std::vector<Point2> centres(k);
  for (std::size_t c = 0; c < k; ++c) {
    centres[c] = centroid(points, members[c]);
    if (members[c].size() < 2) continue;
    std::vector<Point2> pts;
    for (auto i : members[c]) pts.push_back(points[i]);
    spread[c] = mean_internal_distance(pts);
  }
  auto bottom_left = [&](std::size_t c) {
    for (std::size_t o = 0; o < k; ++o) {
      if (o == c) continue;
      if (centres[c].x > centres[o].x || centres[c].y > centres[o].y) return false;
    }
    return true;
  };

  std::size_t best = k;
  for (std::size_t c = 0; c < k; ++c)
    if (std::isfinite(spread[c]) && (best == k || spread[c] < spread[best])) best = c;

  std::size_t chosen = k;
  if (best != k) {
    if (bottom_left(best)) {
      chosen = best;
    } else {
      out.fallback_used = true;
      const double limit = spread[best] * 1.1;
      for (std::size_t c = 0; c < k; ++c) {
        if (!std::isfinite(spread[c]) || spread[c] > limit) continue;
        if (chosen == k || centres[c].x + centres[c].y < centres[chosen].x + centres[chosen].y) chosen = c;
      }
    }
  }

  for (std::size_t i = 0; i < points.size(); ++i) {
    if (chosen != k && static_cast<std::size_t>(out.labels[i]) == chosen)
      out.inliers.push_back(i);
    else
      out.outliers.push_back(i);
  }
  if (chosen != k) {
    out.inlier_label = static_cast<int>(chosen);
    out.inlier_centroid = centres[chosen];
    out.homogeneity_met = spread[chosen] == spread[best];
    out.bottom_left_met = bottom_left(chosen);
  }
  return out;
}

std::vector<LagPoint> standardize(std::span<const LagPoint> points) { return standardize(points, points); }

std::vector<LagPoint> standardize(std::span<const LagPoint> points, std::span<const LagPoint> basis) {
  if (basis.size() < 2) throw DataError("standardization needs at least two points");
  double mx = 0.0, my = 0.0;
  for (const auto& p : basis) {
    mx += p.x;
    my += p.y;
  }
  const double n = static_cast<double>(basis.size());
  mx /= n;
  my /= n;
  double sx = 0.0, sy = 0.0;
  for (const auto& p : basis) {
    sx += (p.x - mx) * (p.x - mx);
    sy += (p.y - my) * (p.y - my);
  }
  sx = std::sqrt(sx / (n - 1.0));
  sy = std::sqrt(sy / (n - 1.0));
  if (!(sx > 0.0)) throw DataError("zero variance in lagged mentions");
  if (!(sy > 0.0)) throw DataError("zero variance in own posts");
  std::vector<LagPoint> out(points.begin(), points.end());
  for (auto& p : out) {
    p.x = (p.x - mx) / sx;
    p.y = (p.y - my) / sy;
    p.standardized = true;
  }
  return out;
}

DeterrenceFit fit_deterrence(std::span<const LagPoint> points) {
  const std::size_t n = points.size();
  if (n < 3) throw DataError("regression needs at least three points");
  double mx = 0.0, my = 0.0;
  for (const auto& p : points) {
    mx += p.x;
    my += p.y;
  }
  mx /= static_cast<double>(n);
  my /= static_cast<double>(n);
  double sxx = 0.0, sxy = 0.0, syy = 0.0;
  for (const auto& p : points) {
    sxx += (p.x - mx) * (p.x - mx);
    sxy += (p.x - mx) * (p.y - my);
    syy += (p.y - my) * (p.y - my);
  }
  if (!(sxx > 0.0)) throw DataError("regression predictor is constant");
  DeterrenceFit f;
  f.n_points = n;
  f.beta1 = sxy / sxx;
  f.beta0 = my - f.beta1 * mx;
  double rss = 0.0;
  for (const auto& p : points) {
    const double r = p.y - f.beta0 - f.beta1 * p.x;
    rss += r * r;
  }
  const double s2 = rss / static_cast<double>(n - 2);
  f.se_beta1 = std::sqrt(s2 / sxx);
  f.se_beta0 = std::sqrt(s2 * (1.0 / static_cast<double>(n) + mx * mx / sxx));
  f.ci95_beta1 = {f.beta1 - 1.96 * f.se_beta1, f.beta1 + 1.96 * f.se_beta1};
  f.ci95_beta0 = {f.beta0 - 1.96 * f.se_beta0, f.beta0 + 1.96 * f.se_beta0};
  f.p_beta1 = f.se_beta1 > 0.0 ? normal_two_sided_p(f.beta1 / f.se_beta1) : 0.0;
  f.r2 = syy > 0.0 ? 1.0 - rss / syy : 0.0;
  return f;
}

SlopeSummary per_target_slopes(std::span<const TargetAnalysis> analyses) {
  SlopeSummary s;
  for (const auto& a : analyses) {
    TargetSlope t;
    t.target = a.target;
    t.n_outliers = a.partition.outliers.size();
    if (a.standardized.empty()) {
      t.reason = a.skip_reason.empty() ? "not standardized" : a.skip_reason;
    } else {
      std::vector<LagPoint> outl;
      for (auto i : a.partition.outliers) outl.push_back(a.standardized[i]);
      try {
        t.beta1 = fit_deterrence(outl).beta1;
        t.fitted = true;
      } catch (const DataError& e) {
        t.reason = e.what();
      }
    }
    if (t.fitted) {
      ++s.n_fitted;
      if (t.beta1 < 0.0) ++s.n_negative;
    }
    s.targets.push_back(std::move(t));
  }
  s.fraction_negative = s.n_fitted ? static_cast<double>(s.n_negative) / static_cast<double>(s.n_fitted) : 0.0;
  return s;
}

namespace {

std::vector<Point2> to_points(std::span<const LagPoint> pts) {
  std::vector<Point2> out;
  out.reserve(pts.size());
  for (const auto& p : pts) out.push_back({p.x, p.y});
  return out;
}

double jaccard(const std::vector<std::size_t>& a, const std::vector<std::size_t>& b) {
  std::vector<std::size_t> inter, uni;
  std::set_intersection(a.begin(), a.end(), b.begin(), b.end(), std::back_inserter(inter));
  std::set_union(a.begin(), a.end(), b.begin(), b.end(), std::back_inserter(uni));
  return uni.empty() ? 1.0 : static_cast<double>(inter.size()) / static_cast<double>(uni.size());
}

}  // namespace

DeterrenceAnalysis analyze(std::span<const WeekSeries> series, const DeterrenceOptions& options, unsigned jobs) {
  DeterrenceAnalysis out;
  for (const auto& s : series) out.pairs_all += s.weeks.empty() ? 0 : s.weeks.size() - 1;

  auto selected = select_targets(series, options.min_weekly_miso, options.selection);
  std::sort(selected.begin(), selected.end(), [](const WeekSeries& a, const WeekSeries& b) { return a.target < b.target; });
  out.targets_selected = selected.size();

  constexpr std::size_t kSweepMin = 2, kSweepMax = 6;
  std::vector<TargetAnalysis> targets(selected.size());
  std::vector<std::vector<double>> sweep(selected.size(), std::vector<double>(kSweepMax + 1, -1.0));

  parallel_for(selected.size(), jobs, [&](std::size_t i) {
    TargetAnalysis& a = targets[i];
    a.target = selected[i].target;
    a.points = build_lag_pairs(selected[i]);
    const auto pts = to_points(a.points);
    if (pts.size() < options.cluster_k) {
      a.skip_reason = "fewer lag points than clusters";
      return;
    }
    a.partition = detect_outliers(pts, options.cluster_k);
    for (std::size_t k = kSweepMin; k <= kSweepMax; ++k) {
      if (k == options.cluster_k || pts.size() < k) continue;
      sweep[i][k] = jaccard(detect_outliers(pts, k).inliers, a.partition.inliers);
    }
    try {
      if (options.basis == StandardizeBasis::AllLagPoints) {
        a.standardized = standardize(a.points);
      } else {
        std::vector<LagPoint> basis;
        for (auto j : a.partition.outliers) basis.push_back(a.points[j]);
        a.standardized = standardize(a.points, basis);
      }
    } catch (const DataError& e) {
      a.skip_reason = e.what();
    }
  });

  for (std::size_t k = kSweepMin; k <= kSweepMax; ++k) {
    if (k == options.cluster_k) continue;
    StabilityRow row;
    row.k = k;
    double sum = 0.0;
    for (const auto& v : sweep) {
      if (v[k] < 0.0) continue;
      sum += v[k];
      ++row.targets_compared;
    }
    row.mean_jaccard = row.targets_compared ? sum / static_cast<double>(row.targets_compared) : 0.0;
    out.k_sweep.push_back(row);
  }

  for (const auto& a : targets) {
    out.pairs_selected += a.points.size();
    out.outlier_pairs += a.partition.outliers.size();
    if (a.standardized.empty()) continue;
    for (auto j : a.partition.outliers) out.pooled_outliers.push_back(a.standardized[j]);
    for (auto j : a.partition.inliers) out.pooled_inliers.push_back(a.standardized[j]);
  }
  auto by_key = [](const LagPoint& a, const LagPoint& b) {
    return a.target != b.target ? a.target < b.target : a.week < b.week;
  };
  std::sort(out.pooled_outliers.begin(), out.pooled_outliers.end(), by_key);
  std::sort(out.pooled_inliers.begin(), out.pooled_inliers.end(), by_key);
  try {
    out.pooled = fit_deterrence(out.pooled_outliers);
    out.pooled_fitted = true;
  } catch (const DataError&) {
    out.pooled_fitted = false;
  }
  out.slopes = per_target_slopes(targets);
  out.targets = std::move(targets);
  return out;
}

}  // namespace tw::deterrence
