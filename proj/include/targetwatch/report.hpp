#pragma once

#include "targetwatch/corpus.hpp"
#include "targetwatch/deterrence.hpp"
#include "targetwatch/table.hpp"
#include "targetwatch/timeutil.hpp"

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <variant>
#include <vector>

namespace tw::report {

// ---- run configuration -------------------------------------------------------

struct RunConfig {
  std::string posts;
  std::string roster;
  std::string labels;
  std::string labels_b;
  std::string out = "out";
  std::string window_start = "2022-01-01";
  std::string window_end = "2022-11-30";  // inclusive

  std::size_t min_mentions = 100;
  double keyness_p = 0.20;
  bool fold_accents = false;
  double test_fraction = 0.2;
  std::uint64_t min_weekly_miso = 5;
  std::size_t cluster_k = 3;
  std::size_t sample_n = 1000;
  std::size_t top_k = 10;
  std::string selection = "any_week";
  std::string week_mode = "anchored";

  double nb_alpha = 1.0;
  double lr_l2 = 1.0;
  double svm_c = 1.0;
  int rf_trees = 200;
  int knn_k = 5;
  int stack_folds = 5;

  std::optional<std::uint64_t> seed;
  unsigned jobs = 1;
  bool deterministic = false;

  /// Half-open window built from the inclusive date range.
  Window window() const;
  deterrence::SelectionMode selection_mode() const;
  deterrence::WeekMode week_mode_value() const;
  /// Seed, or ConfigError when a stochastic step runs without one.
  std::uint64_t require_seed() const;
};

/// Sets one field from its textual value. Throws ConfigError for an unknown
/// key or an unparseable value.
void set_config_value(RunConfig& config, std::string_view key, std::string_view value);

/// Flat "key = value" file; '#' starts a comment. Throws ConfigError when the
/// file is unreadable or malformed.
std::vector<std::pair<std::string, std::string>> read_config_file(const std::filesystem::path& path);

/// Range checks on every threshold. Throws ConfigError.
void validate(const RunConfig& config);

/// Settings that determine outputs, as sorted key/value pairs. Paths, jobs and
/// the deterministic switch are omitted.
std::map<std::string, std::string> config_entries(const RunConfig& config);

// ---- artifacts -----------------------------------------------------------------

/// Writes to a sibling temporary file and renames it over `path`.
void write_atomic(const std::filesystem::path& path, std::string_view content);
std::string table_to_string(const Table& table);
void write_table(const std::filesystem::path& path, const Table& table);

struct Manifest {
  std::string subcommand;
  std::map<std::string, std::string> inputs;   // label -> sha256
  std::map<std::string, std::string> outputs;  // relative path -> sha256
  std::map<std::string, std::string> config;
  std::map<std::string, std::string> stats;
  std::optional<std::string> created;  // omitted in deterministic mode
};

std::string manifest_to_string(const Manifest& manifest);
Manifest parse_manifest(std::string_view text);

/// Exclusive lock on an output directory held for the object's lifetime.
class DirectoryLock {
 public:
  explicit DirectoryLock(const std::filesystem::path& dir);
  ~DirectoryLock();
  DirectoryLock(const DirectoryLock&) = delete;
  DirectoryLock& operator=(const DirectoryLock&) = delete;

 private:
  std::filesystem::path path_;
};

// ---- figures -------------------------------------------------------------------

struct MonthRow {
  std::string month;  // YYYY-MM
  std::uint64_t mentions = 0;
  std::uint64_t own = 0;
  std::uint64_t miso = 0;
  std::optional<double> share;  // miso / mentions; absent for months without mentions
};

/// Calendar months (UTC) overlapping the window, in order, zero months included.
std::vector<MonthRow> monthly_series(std::span<const corpus::Post> posts, std::span<const std::uint8_t> flags,
                                     const Window& window);
Table monthly_table(std::span<const MonthRow> rows);

enum class FigureKind { MonthlySeries, ScatterFit, BoxplotRatio, HistogramMentions };

struct ScatterPoint {
  double x = 0.0;
  double y = 0.0;
  bool outlier = false;
};

struct ScatterPayload {
  std::vector<ScatterPoint> points;
  std::optional<deterrence::DeterrenceFit> fit;
};

struct BoxGroup {
  std::string label;
  std::vector<double> values;
};

struct BoxplotPayload {
  std::string characteristic;
  std::vector<BoxGroup> groups;
};

struct HistogramPayload {
  std::vector<double> values;
  std::size_t bins = 20;
};

struct FigureSpec {
  FigureKind kind = FigureKind::MonthlySeries;
  std::string title;
  std::variant<std::vector<MonthRow>, ScatterPayload, BoxplotPayload, HistogramPayload> payload;
  std::filesystem::path output;
};

/// Throws DataError when the payload does not match the kind or is malformed.
void validate(const FigureSpec& figure);

FigureSpec emit_monthly_series(std::span<const MonthRow> rows, std::filesystem::path output);

/// Scatter of inlier/outlier points. The fit line and group means are drawn
/// only when there is at least one outlier.
FigureSpec emit_scatter_fit(std::span<const ScatterPoint> points, const std::optional<deterrence::DeterrenceFit>& fit,
                            std::filesystem::path output);

/// Maps data coordinates to SVG pixels for a scatter figure.
struct PlotFrame {
  double x_lo = 0.0, x_hi = 1.0, y_lo = 0.0, y_hi = 1.0;
  double left = 60.0, right = 580.0, top = 40.0, bottom = 380.0;

  double px(double x) const { return left + (x - x_lo) / (x_hi - x_lo) * (right - left); }
  double py(double y) const { return bottom - (y - y_lo) / (y_hi - y_lo) * (bottom - top); }
};

PlotFrame scatter_frame(std::span<const ScatterPoint> points);

std::string render_svg(const FigureSpec& figure);

}  // namespace tw::report
