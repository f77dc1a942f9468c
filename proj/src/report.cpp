#include "targetwatch/report.hpp"

#include "targetwatch/common.hpp"

#include <algorithm>
#include <cerrno>
#include <cmath>
#include <cstring>
#include <fstream>
#include <sstream>

#include <fcntl.h>
#include <unistd.h>

#include <fmt/format.h>
#include <json.hpp>

namespace tw::report {

namespace {

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

UnixSeconds date_or_throw(std::string_view key, std::string_view text) {
  auto t = parse_date(text);
  if (!t) throw ConfigError(fmt::format("{}: not a date: '{}'", key, text));
  return *t;
}

template <typename T>
T as_unsigned(std::string_view key, std::string_view v) {
  try {
    const long long x = parse_int(v);
    if (x < 0) throw ConfigError(fmt::format("{} must be non-negative", key));
    return static_cast<T>(x);
  } catch (const DataError&) {
    throw ConfigError(fmt::format("{}: not an integer: '{}'", key, v));
  }
}

int as_int(std::string_view key, std::string_view v) {
  try {
    return static_cast<int>(parse_int(v));
  } catch (const DataError&) {
    throw ConfigError(fmt::format("{}: not an integer: '{}'", key, v));
  }
}

double as_double(std::string_view key, std::string_view v) {
  try {
    return parse_double(v);
  } catch (const DataError&) {
    throw ConfigError(fmt::format("{}: not a number: '{}'", key, v));
  }
}

bool as_bool(std::string_view key, std::string_view v) {
  if (v == "true" || v == "1" || v == "yes") return true;
  if (v == "false" || v == "0" || v == "no") return false;
  throw ConfigError(fmt::format("{}: not a boolean: '{}'", key, v));
}

std::string num(double v) { return format_double(v); }

std::string escape_xml(std::string_view s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      default: out += c;
    }
  }
  return out;
}

constexpr double kWidth = 640.0;
constexpr double kHeight = 420.0;

std::string svg_open(std::string_view title) {
  return fmt::format(
      "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{0}\" height=\"{1}\" viewBox=\"0 0 {0} {1}\">\n"
      "<rect width=\"{0}\" height=\"{1}\" fill=\"white\"/>\n"
      "<text x=\"{2}\" y=\"24\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"14\">{3}</text>\n",
      kWidth, kHeight, kWidth / 2, escape_xml(title));
}

std::string axes(double left, double right, double top, double bottom) {
  return fmt::format(
      "<line x1=\"{0}\" y1=\"{3}\" x2=\"{1}\" y2=\"{3}\" stroke=\"black\"/>\n"
      "<line x1=\"{0}\" y1=\"{2}\" x2=\"{0}\" y2=\"{3}\" stroke=\"black\"/>\n",
      left, right, top, bottom);
}

double quantile(std::vector<double> v, double q) {
  std::sort(v.begin(), v.end());
  const double h = (static_cast<double>(v.size()) - 1.0) * q;
  const auto lo = static_cast<std::size_t>(std::floor(h));
  const auto hi = std::min(lo + 1, v.size() - 1);
  return v[lo] + (h - static_cast<double>(lo)) * (v[hi] - v[lo]);
}

std::string render_monthly(const FigureSpec& f, const std::vector<MonthRow>& rows) {
  std::string s = svg_open(f.title);
  const double left = 60, right = 580, top = 40, bottom = 360;
  s += axes(left, right, top, bottom);
  double max_count = 1.0;
  for (const auto& r : rows) max_count = std::max({max_count, double(r.mentions), double(r.own)});
  const double step = rows.size() > 1 ? (right - left) / double(rows.size() - 1) : 0.0;
  auto px = [&](std::size_t i) { return left + step * double(i); };
  auto py = [&](double v) { return bottom - v / max_count * (bottom - top); };
  auto polyline = [&](auto value, std::string_view colour, std::string_view cls) {
    std::string pts;
    for (std::size_t i = 0; i < rows.size(); ++i) {
      if (!pts.empty()) pts += ' ';
      pts += num(px(i)) + "," + num(py(value(rows[i])));
    }
    s += fmt::format("<polyline class=\"{}\" fill=\"none\" stroke=\"{}\" points=\"{}\"/>\n", cls, colour, pts);
  };
  polyline([](const MonthRow& r) { return double(r.mentions); }, "steelblue", "mentions");
  polyline([](const MonthRow& r) { return double(r.own); }, "darkorange", "own");
  polyline([](const MonthRow& r) { return double(r.miso); }, "firebrick", "misogynistic");
  // Share on its own 0..1 scale; absent months break the line.
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (!rows[i].share) continue;
    s += fmt::format("<circle class=\"share\" cx=\"{}\" cy=\"{}\" r=\"3\" fill=\"purple\"/>\n", num(px(i)),
                     num(bottom - *rows[i].share * (bottom - top)));
  }
  for (std::size_t i = 0; i < rows.size(); ++i) {
    s += fmt::format("<text x=\"{}\" y=\"{}\" text-anchor=\"middle\" font-family=\"sans-serif\" "
                     "font-size=\"9\">{}</text>\n",
                     num(px(i)), bottom + 14, rows[i].month);
  }
  return s + "</svg>\n";
}

std::string render_scatter(const FigureSpec& f, const ScatterPayload& p) {
  std::string s = svg_open(f.title);
  const PlotFrame fr = scatter_frame(p.points);
  s += axes(fr.left, fr.right, fr.top, fr.bottom);
  for (const auto& pt : p.points) {
    s += fmt::format("<circle class=\"{}\" cx=\"{}\" cy=\"{}\" r=\"2.5\" fill=\"{}\" fill-opacity=\"0.6\"/>\n",
                     pt.outlier ? "outlier" : "inlier", num(fr.px(pt.x)), num(fr.py(pt.y)),
                     pt.outlier ? "firebrick" : "grey");
  }
  const bool any_outlier = std::any_of(p.points.begin(), p.points.end(), [](const ScatterPoint& q) { return q.outlier; });
  if (any_outlier && p.fit) {
    const double y0 = p.fit->beta0 + p.fit->beta1 * fr.x_lo;
    const double y1 = p.fit->beta0 + p.fit->beta1 * fr.x_hi;
    s += fmt::format("<line class=\"fit\" x1=\"{}\" y1=\"{}\" x2=\"{}\" y2=\"{}\" stroke=\"navy\" stroke-width=\"2\"/>\n",
                     num(fr.px(fr.x_lo)), num(fr.py(y0)), num(fr.px(fr.x_hi)), num(fr.py(y1)));
    for (bool outl : {false, true}) {
      double mx = 0.0, my = 0.0;
      std::size_t n = 0;
      for (const auto& pt : p.points) {
        if (pt.outlier != outl) continue;
        mx += pt.x;
        my += pt.y;
        ++n;
      }
      if (n == 0) continue;
      mx /= double(n);
      my /= double(n);
      s += fmt::format(
          "<line class=\"mean-guide\" x1=\"{0}\" y1=\"{2}\" x2=\"{0}\" y2=\"{3}\" stroke=\"green\" "
          "stroke-dasharray=\"4 3\"/>\n"
          "<line class=\"mean-guide\" x1=\"{4}\" y1=\"{1}\" x2=\"{5}\" y2=\"{1}\" stroke=\"green\" "
          "stroke-dasharray=\"4 3\"/>\n",
          num(fr.px(mx)), num(fr.py(my)), fr.top, fr.bottom, fr.left, fr.right);
    }
  }
  return s + "</svg>\n";
}

std::string render_boxplot(const FigureSpec& f, const BoxplotPayload& p) {
  std::string s = svg_open(f.title);
  const double left = 60, right = 580, top = 40, bottom = 340;
  s += axes(left, right, top, bottom);
  double lo = 0.0, hi = 1.0;
  for (const auto& g : p.groups)
    for (double v : g.values) {
      lo = std::min(lo, v);
      hi = std::max(hi, v);
    }
  auto py = [&](double v) { return bottom - (v - lo) / (hi - lo) * (bottom - top); };
  const double slot = (right - left) / double(std::max<std::size_t>(p.groups.size(), 1));
  for (std::size_t i = 0; i < p.groups.size(); ++i) {
    const auto& g = p.groups[i];
    const double cx = left + slot * (double(i) + 0.5);
    const double w = slot * 0.3;
    const double q1 = quantile(g.values, 0.25), q2 = quantile(g.values, 0.5), q3 = quantile(g.values, 0.75);
    const double mn = *std::min_element(g.values.begin(), g.values.end());
    const double mx = *std::max_element(g.values.begin(), g.values.end());
    s += fmt::format("<line x1=\"{0}\" y1=\"{1}\" x2=\"{0}\" y2=\"{2}\" stroke=\"black\"/>\n", num(cx), num(py(mn)),
                     num(py(mx)));
    s += fmt::format("<rect class=\"box\" x=\"{}\" y=\"{}\" width=\"{}\" height=\"{}\" fill=\"lightsteelblue\" "
                     "stroke=\"black\"/>\n",
                     num(cx - w), num(py(q3)), num(2 * w), num(py(q1) - py(q3)));
    s += fmt::format("<line x1=\"{0}\" y1=\"{2}\" x2=\"{1}\" y2=\"{2}\" stroke=\"black\" stroke-width=\"2\"/>\n",
                     num(cx - w), num(cx + w), num(py(q2)));
    s += fmt::format("<text x=\"{}\" y=\"{}\" text-anchor=\"middle\" font-family=\"sans-serif\" "
                     "font-size=\"9\">{} (n={})</text>\n",
                     num(cx), bottom + 14, escape_xml(g.label), g.values.size());
  }
  return s + "</svg>\n";
}

std::string render_histogram(const FigureSpec& f, const HistogramPayload& p) {
  std::string s = svg_open(f.title);
  const double left = 60, right = 580, top = 40, bottom = 360;
  s += axes(left, right, top, bottom);
  double lo = 0.0, hi = 1.0;
  if (!p.values.empty()) {
    lo = *std::min_element(p.values.begin(), p.values.end());
    hi = *std::max_element(p.values.begin(), p.values.end());
    if (hi <= lo) hi = lo + 1.0;
  }
  std::vector<std::size_t> counts(p.bins, 0);
  for (double v : p.values) {
    auto b = static_cast<std::size_t>((v - lo) / (hi - lo) * double(p.bins));
    ++counts[std::min(b, p.bins - 1)];
  }
  const double peak = double(std::max<std::size_t>(1, *std::max_element(counts.begin(), counts.end())));
  const double bw = (right - left) / double(p.bins);
  for (std::size_t b = 0; b < p.bins; ++b) {
    const double h = double(counts[b]) / peak * (bottom - top);
    s += fmt::format("<rect class=\"bin\" x=\"{}\" y=\"{}\" width=\"{}\" height=\"{}\" fill=\"steelblue\" "
                     "stroke=\"white\"/>\n",
                     num(left + bw * double(b)), num(bottom - h), num(bw), num(h));
  }
  s += fmt::format("<text x=\"{}\" y=\"{}\" font-family=\"sans-serif\" font-size=\"9\">{}</text>\n", left,
                   bottom + 14, num(lo));
  s += fmt::format("<text x=\"{}\" y=\"{}\" text-anchor=\"end\" font-family=\"sans-serif\" font-size=\"9\">{}</text>\n",
                   right, bottom + 14, num(hi));
  return s + "</svg>\n";
}

}  // namespace

// ---- RunConfig -----------------------------------------------------------------

Window RunConfig::window() const {
  const UnixSeconds s = date_or_throw("window_start", window_start);
  const UnixSeconds e = date_or_throw("window_end", window_end) + kSecondsPerDay;
  if (e <= s) throw ConfigError("window_end precedes window_start");
  return {s, e};
}

deterrence::SelectionMode RunConfig::selection_mode() const {
  if (selection == "any_week") return deterrence::SelectionMode::AnyWeek;
  if (selection == "mean_weekly") return deterrence::SelectionMode::MeanWeekly;
  if (selection == "every_week") return deterrence::SelectionMode::EveryWeek;
  throw ConfigError("selection must be any_week, mean_weekly or every_week");
}

deterrence::WeekMode RunConfig::week_mode_value() const {
  if (week_mode == "anchored") return deterrence::WeekMode::Anchored;
  if (week_mode == "iso") return deterrence::WeekMode::Iso;
  throw ConfigError("week_mode must be anchored or iso");
}

std::uint64_t RunConfig::require_seed() const {
  if (!seed) throw ConfigError("a seed is required (--seed or 'seed' in the config file)");
  return *seed;
}

void set_config_value(RunConfig& c, std::string_view key, std::string_view value) {
  const std::string v = trim(value);
  if (key == "posts") c.posts = v;
  else if (key == "roster") c.roster = v;
  else if (key == "labels") c.labels = v;
  else if (key == "labels_b") c.labels_b = v;
  else if (key == "out") c.out = v;
  else if (key == "window_start") c.window_start = v;
  else if (key == "window_end") c.window_end = v;
  else if (key == "min_mentions") c.min_mentions = as_unsigned<std::size_t>(key, v);
  else if (key == "keyness_p") c.keyness_p = as_double(key, v);
  else if (key == "fold_accents") c.fold_accents = as_bool(key, v);
  else if (key == "test_fraction") c.test_fraction = as_double(key, v);
  else if (key == "min_weekly_miso") c.min_weekly_miso = as_unsigned<std::uint64_t>(key, v);
  else if (key == "cluster_k") c.cluster_k = as_unsigned<std::size_t>(key, v);
  else if (key == "sample_n") c.sample_n = as_unsigned<std::size_t>(key, v);
  else if (key == "top_k") c.top_k = as_unsigned<std::size_t>(key, v);
  else if (key == "selection") c.selection = v;
  else if (key == "week_mode") c.week_mode = v;
  else if (key == "nb_alpha") c.nb_alpha = as_double(key, v);
  else if (key == "lr_l2") c.lr_l2 = as_double(key, v);
  else if (key == "svm_c") c.svm_c = as_double(key, v);
  else if (key == "rf_trees") c.rf_trees = as_int(key, v);
  else if (key == "knn_k") c.knn_k = as_int(key, v);
  else if (key == "stack_folds") c.stack_folds = as_int(key, v);
  else if (key == "seed") c.seed = as_unsigned<std::uint64_t>(key, v);
  else if (key == "jobs") c.jobs = as_unsigned<unsigned>(key, v);
  else if (key == "deterministic") c.deterministic = as_bool(key, v);
  else throw ConfigError(fmt::format("unknown config key '{}'", key));
}

std::vector<std::pair<std::string, std::string>> read_config_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read config file " + path.string());
  std::vector<std::pair<std::string, std::string>> out;
  std::string line;
  std::size_t n = 0;
  while (std::getline(in, line)) {
    ++n;
    if (auto h = line.find('#'); h != std::string::npos) line.resize(h);
    const std::string t = trim(line);
    if (t.empty()) continue;
    const auto eq = t.find('=');
    if (eq == std::string::npos) throw ConfigError(fmt::format("{}:{}: expected key = value", path.string(), n));
    std::string key = trim(std::string_view(t).substr(0, eq));
    if (key.empty()) throw ConfigError(fmt::format("{}:{}: empty key", path.string(), n));
    out.emplace_back(std::move(key), trim(std::string_view(t).substr(eq + 1)));
  }
  return out;
}

void validate(const RunConfig& c) {
  (void)c.window();
  (void)c.selection_mode();
  (void)c.week_mode_value();
  if (!(c.keyness_p > 0.0 && c.keyness_p < 1.0)) throw ConfigError("keyness_p must lie in (0, 1)");
  if (!(c.test_fraction > 0.0 && c.test_fraction < 1.0)) throw ConfigError("test_fraction must lie in (0, 1)");
  if (c.cluster_k < 2) throw ConfigError("cluster_k must be at least 2");
  if (c.top_k < 1) throw ConfigError("top_k must be at least 1");
  if (!(c.nb_alpha > 0.0)) throw ConfigError("nb_alpha must be positive");
  if (!(c.lr_l2 > 0.0)) throw ConfigError("lr_l2 must be positive");
  if (!(c.svm_c > 0.0)) throw ConfigError("svm_c must be positive");
  if (c.rf_trees < 1) throw ConfigError("rf_trees must be at least 1");
  if (c.knn_k < 1) throw ConfigError("knn_k must be at least 1");
  if (c.stack_folds < 2) throw ConfigError("stack_folds must be at least 2");
  if (c.jobs < 1) throw ConfigError("jobs must be at least 1");
}

std::map<std::string, std::string> config_entries(const RunConfig& c) {
  return {{"window_start", c.window_start},
          {"window_end", c.window_end},
          {"min_mentions", std::to_string(c.min_mentions)},
          {"keyness_p", num(c.keyness_p)},
          {"fold_accents", c.fold_accents ? "true" : "false"},
          {"test_fraction", num(c.test_fraction)},
          {"min_weekly_miso", std::to_string(c.min_weekly_miso)},
          {"cluster_k", std::to_string(c.cluster_k)},
          {"sample_n", std::to_string(c.sample_n)},
          {"top_k", std::to_string(c.top_k)},
          {"selection", c.selection},
          {"week_mode", c.week_mode},
          {"nb_alpha", num(c.nb_alpha)},
          {"lr_l2", num(c.lr_l2)},
          {"svm_c", num(c.svm_c)},
          {"rf_trees", std::to_string(c.rf_trees)},
          {"knn_k", std::to_string(c.knn_k)},
          {"stack_folds", std::to_string(c.stack_folds)},
          {"seed", c.seed ? std::to_string(*c.seed) : std::string("none")}};
}

// ---- artifacts -----------------------------------------------------------------

void write_atomic(const std::filesystem::path& path, std::string_view content) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::filesystem::path tmp = path;
  tmp += fmt::format(".tmp{}", ::getpid());
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw DataError("cannot write " + tmp.string());
    out.write(content.data(), static_cast<std::streamsize>(content.size()));
    out.flush();
    if (!out) throw DataError("write failed for " + tmp.string());
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) {
    std::filesystem::remove(tmp);
    throw DataError(fmt::format("cannot rename {} to {}: {}", tmp.string(), path.string(), ec.message()));
  }
}

std::string table_to_string(const Table& table) {
  std::ostringstream os;
  write_csv(os, table);
  return os.str();
}

void write_table(const std::filesystem::path& path, const Table& table) { write_atomic(path, table_to_string(table)); }

std::string manifest_to_string(const Manifest& m) {
  nlohmann::ordered_json j;
  j["tool"] = "targetwatch";
  j["version"] = std::string(kVersion);
  j["subcommand"] = m.subcommand;
  j["inputs"] = m.inputs;
  j["outputs"] = m.outputs;
  j["config"] = m.config;
  j["stats"] = m.stats;
  if (m.created) j["created"] = *m.created;
  return j.dump(2) + "\n";
}

Manifest parse_manifest(std::string_view text) {
  try {
    const auto j = nlohmann::json::parse(text);
    Manifest m;
    m.subcommand = j.at("subcommand");
    m.inputs = j.at("inputs").get<std::map<std::string, std::string>>();
    m.outputs = j.at("outputs").get<std::map<std::string, std::string>>();
    m.config = j.at("config").get<std::map<std::string, std::string>>();
    m.stats = j.at("stats").get<std::map<std::string, std::string>>();
    if (j.contains("created")) m.created = j.at("created").get<std::string>();
    return m;
  } catch (const nlohmann::json::exception& e) {
    throw DataError(std::string("malformed manifest: ") + e.what());
  }
}

DirectoryLock::DirectoryLock(const std::filesystem::path& dir) : path_(dir / ".targetwatch.lock") {
  std::filesystem::create_directories(dir);
  const int fd = ::open(path_.c_str(), O_CREAT | O_EXCL | O_WRONLY, 0644);
  if (fd < 0) {
    if (errno == EEXIST)
      throw ConfigError(fmt::format("output directory is locked by another run ({}); remove it if stale",
                                    path_.string()));
    throw DataError(fmt::format("cannot create lock {}: {}", path_.string(), std::strerror(errno)));
  }
  const std::string pid = std::to_string(::getpid()) + "\n";
  [[maybe_unused]] auto w = ::write(fd, pid.data(), pid.size());
  ::close(fd);
}

DirectoryLock::~DirectoryLock() {
  std::error_code ec;
  std::filesystem::remove(path_, ec);
}

// ---- figures -------------------------------------------------------------------

std::vector<MonthRow> monthly_series(std::span<const corpus::Post> posts, std::span<const std::uint8_t> flags,
                                     const Window& window) {
  if (flags.size() != posts.size()) throw DataError("flag count does not match post count");
  std::vector<MonthRow> rows;
  std::map<std::string, std::size_t> slot;
  CivilDate d = civil_from_days(window.start / kSecondsPerDay);
  const std::string last = month_key(window.end - 1);
  for (;;) {
    MonthRow r;
    r.month = fmt::format("{:04}-{:02}", d.year, d.month);
    slot.emplace(r.month, rows.size());
    rows.push_back(r);
    if (r.month >= last) break;
    if (++d.month > 12) {
      d.month = 1;
      ++d.year;
    }
  }
  for (std::size_t i = 0; i < posts.size(); ++i) {
    const auto& p = posts[i];
    if (!window.contains(p.timestamp)) continue;
    auto& r = rows[slot.at(month_key(p.timestamp))];
    if (p.is_own) {
      ++r.own;
    } else {
      ++r.mentions;
      if (flags[i]) ++r.miso;
    }
  }
  for (auto& r : rows)
    if (r.mentions > 0) r.share = double(r.miso) / double(r.mentions);
  return rows;
}

Table monthly_table(std::span<const MonthRow> rows) {
  Table t;
  t.header = {"month", "mention_tweets", "own_tweets", "misogynistic_mentions", "misogynistic_share"};
  for (const auto& r : rows) {
    t.rows.push_back({r.month, std::to_string(r.mentions), std::to_string(r.own), std::to_string(r.miso),
                      r.share ? num(*r.share) : std::string()});
  }
  return t;
}

void validate(const FigureSpec& f) {
  switch (f.kind) {
    case FigureKind::MonthlySeries: {
      const auto* rows = std::get_if<std::vector<MonthRow>>(&f.payload);
      if (!rows) throw DataError("monthly series figure needs month rows");
      if (rows->empty()) throw DataError("monthly series figure has no months");
      for (const auto& r : *rows) {
        if (r.miso > r.mentions) throw DataError("month " + r.month + " has more flagged than total mentions");
        if (r.share && (*r.share < 0.0 || *r.share > 1.0)) throw DataError("share outside [0, 1]");
        if (r.share.has_value() != (r.mentions > 0)) throw DataError("share presence inconsistent with mentions");
      }
      break;
    }
    case FigureKind::ScatterFit: {
      const auto* p = std::get_if<ScatterPayload>(&f.payload);
      if (!p) throw DataError("scatter figure needs a scatter payload");
      for (const auto& q : p->points)
        if (!std::isfinite(q.x) || !std::isfinite(q.y)) throw DataError("scatter point is not finite");
      break;
    }
    case FigureKind::BoxplotRatio: {
      const auto* p = std::get_if<BoxplotPayload>(&f.payload);
      if (!p) throw DataError("boxplot figure needs a boxplot payload");
      if (p->groups.empty()) throw DataError("boxplot has no groups");
      for (const auto& g : p->groups)
        if (g.values.empty()) throw DataError("boxplot group '" + g.label + "' is empty");
      break;
    }
    case FigureKind::HistogramMentions: {
      const auto* p = std::get_if<HistogramPayload>(&f.payload);
      if (!p) throw DataError("histogram figure needs a histogram payload");
      if (p->bins == 0) throw DataError("histogram needs at least one bin");
      break;
    }
  }
}

FigureSpec emit_monthly_series(std::span<const MonthRow> rows, std::filesystem::path output) {
  FigureSpec f;
  f.kind = FigureKind::MonthlySeries;
  f.title = "Mentions, own posts and misogynistic share per month";
  f.payload = std::vector<MonthRow>(rows.begin(), rows.end());
  f.output = std::move(output);
  validate(f);
  return f;
}

FigureSpec emit_scatter_fit(std::span<const ScatterPoint> points, const std::optional<deterrence::DeterrenceFit>& fit,
                            std::filesystem::path output) {
  FigureSpec f;
  f.kind = FigureKind::ScatterFit;
  f.title = "Standardized lag points with outlier fit";
  ScatterPayload p;
  p.points.assign(points.begin(), points.end());
  const bool any_outlier = std::any_of(points.begin(), points.end(), [](const ScatterPoint& q) { return q.outlier; });
  if (any_outlier) p.fit = fit;
  f.payload = std::move(p);
  f.output = std::move(output);
  validate(f);
  return f;
}

PlotFrame scatter_frame(std::span<const ScatterPoint> points) {
  PlotFrame fr;
  if (points.empty()) return fr;
  fr.x_lo = fr.x_hi = points.front().x;
  fr.y_lo = fr.y_hi = points.front().y;
  for (const auto& p : points) {
    fr.x_lo = std::min(fr.x_lo, p.x);
    fr.x_hi = std::max(fr.x_hi, p.x);
    fr.y_lo = std::min(fr.y_lo, p.y);
    fr.y_hi = std::max(fr.y_hi, p.y);
  }
  if (fr.x_hi <= fr.x_lo) fr.x_hi = fr.x_lo + 1.0;
  if (fr.y_hi <= fr.y_lo) fr.y_hi = fr.y_lo + 1.0;
  return fr;
}

std::string render_svg(const FigureSpec& f) {
  validate(f);
  switch (f.kind) {
    case FigureKind::MonthlySeries: return render_monthly(f, std::get<std::vector<MonthRow>>(f.payload));
    case FigureKind::ScatterFit: return render_scatter(f, std::get<ScatterPayload>(f.payload));
    case FigureKind::BoxplotRatio: return render_boxplot(f, std::get<BoxplotPayload>(f.payload));
    case FigureKind::HistogramMentions: return render_histogram(f, std::get<HistogramPayload>(f.payload));
  }
  return {};
}

}  // namespace tw::report
