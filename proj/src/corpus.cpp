#include "targetwatch/corpus.hpp"

#include "targetwatch/common.hpp"
#include "targetwatch/random.hpp"
#include "targetwatch/table.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <fstream>
#include <istream>
#include <map>
#include <ostream>
#include <set>
#include <sstream>
#include <unordered_set>

#include <fmt/format.h>
#include <json.hpp>

namespace tw::corpus {

using nlohmann::json;

// ---- posts -------------------------------------------------------------------

namespace {

Post parse_post_record(const json& j, const Window& window) {
  auto require = [&j](const char* key) -> const json& {
    auto it = j.find(key);
    if (it == j.end() || it->is_null()) throw DataError(fmt::format("missing field '{}'", key));
    return *it;
  };
  Post p;
  const json& id = require("id");
  if (!id.is_string() || id.get_ref<const std::string&>().empty())
    throw DataError("id must be a non-empty string");
  p.id = id.get<std::string>();

  const json& ts = require("timestamp");
  if (!ts.is_string()) throw DataError("timestamp must be a string");
  auto parsed = parse_timestamp(ts.get_ref<const std::string&>());
  if (!parsed) throw DataError("unparseable timestamp '" + ts.get<std::string>() + "'");
  if (!window.contains(*parsed)) throw DataError("timestamp outside study window");
  p.timestamp = *parsed;

  const json& author = require("author");
  if (!author.is_string()) throw DataError("author must be a string");
  p.author = author.get<std::string>();

  const json& text = require("text");
  if (!text.is_string()) throw DataError("text must be a string");
  p.text = text.get<std::string>();

  const json& own = require("is_own");
  if (!own.is_boolean()) throw DataError("is_own must be a boolean");
  p.is_own = own.get<bool>();

  const json& mentions = require("mentions");
  if (!mentions.is_array()) throw DataError("mentions must be an array");
  std::set<std::string> handles;
  for (const auto& m : mentions) {
    if (!m.is_string()) throw DataError("mentions must contain strings");
    std::string h = m.get<std::string>();
    if (!h.empty() && h.front() == '@') h.erase(0, 1);
    if (h.empty()) throw DataError("empty mention handle");
    handles.insert(std::move(h));
  }
  p.mentions.assign(handles.begin(), handles.end());
  if (p.mentions.empty() && !p.is_own) throw DataError("non-own post without mentions");
  return p;
}

}  // namespace

LoadResult parse_posts(std::istream& in, const Window& window) {
  LoadResult result;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.find_first_not_of(" \t") == std::string::npos) continue;
    try {
      json j = json::parse(line);
      if (!j.is_object()) throw DataError("record is not an object");
      if (auto kind = j.find("kind"); kind != j.end() && kind->is_string() && *kind == "retweet") {
        ++result.skipped_retweets;
        continue;
      }
      result.posts.push_back(parse_post_record(j, window));
    } catch (const json::exception& e) {
      result.rejects.push_back({line_no, std::string("invalid JSON: ") + e.what()});
    } catch (const DataError& e) {
      result.rejects.push_back({line_no, e.what()});
    }
  }
  return result;
}

LoadResult load_posts(const std::filesystem::path& path, const Window& window) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open posts file " + path.string());
  return parse_posts(in, window);
}

void write_posts(std::ostream& out, std::span<const Post> posts) {
  for (const auto& p : posts) {
    json j;
    j["id"] = p.id;
    j["timestamp"] = format_timestamp(p.timestamp);
    j["author"] = p.author;
    j["text"] = p.text;
    j["mentions"] = p.mentions;
    j["is_own"] = p.is_own;
    out << j.dump() << '\n';
  }
}

PostCollection dedup(std::span<const Post> posts) {
  PostCollection out;
  out.reserve(posts.size());
  std::unordered_set<std::string_view> seen;
  seen.reserve(posts.size());
  for (const auto& p : posts) {
    if (seen.insert(p.id).second) out.push_back(p);
  }
  return out;
}

// ---- roster --------------------------------------------------------------------

namespace {

template <class Enum, std::size_t N>
struct EnumNames {
  std::array<std::string_view, N> names;

  std::string_view name(Enum v) const { return names[static_cast<std::size_t>(v)]; }

  Enum parse(std::string_view s, std::string_view what) const {
    for (std::size_t i = 0; i < N; ++i) {
      if (names[i] == s) return static_cast<Enum>(i);
    }
    throw DataError(fmt::format("unknown {} value '{}'", what, s));
  }
};

constexpr EnumNames<Hierarchy, 7> kHierarchy{{"President", "Vice-President", "Senator", "Governor",
                                              "Vice-Governor", "Federal Deputy", "State Deputy"}};
constexpr EnumNames<Orientation, 5> kOrientation{{"Far-left", "Left", "Centre", "Right", "Far-right"}};
constexpr EnumNames<Ethnicity, 5> kEthnicity{{"Indigenous", "Asian", "White", "Brown", "Black"}};
constexpr EnumNames<Religion, 5> kReligion{
    {"Evangelical", "Afro-Brazilian", "Christian/Catholic", "Jewish", "None"}};
constexpr EnumNames<BolsonaroSupport, 3> kBolsonaro{{"Yes", "No", "Unknown"}};

constexpr std::array<std::string_view, 27> kRegions{
    "Acre",         "Alagoas",           "Amapá",          "Amazonas",       "Bahia",
    "Ceará",        "Distrito Federal",  "Espírito Santo", "Goiás",          "Maranhão",
    "Mato Grosso",  "Mato Grosso do Sul", "Minas Gerais",  "Pará",           "Paraíba",
    "Paraná",       "Pernambuco",        "Piauí",          "Rio de Janeiro", "Rio Grande do Norte",
    "Rio Grande do Sul", "Rondônia",     "Roraima",        "Santa Catarina", "São Paulo",
    "Sergipe",      "Tocantins"};

const std::array<const char*, 11> kRosterColumns{
    "handle",   "hierarchy_level",   "political_orientation", "party",
    "ethnicity", "age_years",        "religion",              "bolsonaro_support",
    "region",   "follower_count",    "own_tweet_count"};

std::uint64_t parse_count(std::string_view s, std::string_view what) {
  long long v = 0;
  try {
    v = parse_int(s);
  } catch (const DataError&) {
    throw DataError(fmt::format("{} is not an integer: '{}'", what, s));
  }
  if (v < 0) throw DataError(fmt::format("{} must be nonnegative", what));
  return static_cast<std::uint64_t>(v);
}

}  // namespace

std::string_view to_string(Hierarchy v) { return kHierarchy.name(v); }
std::string_view to_string(Orientation v) { return kOrientation.name(v); }
std::string_view to_string(Ethnicity v) { return kEthnicity.name(v); }
std::string_view to_string(Religion v) { return kReligion.name(v); }
std::string_view to_string(BolsonaroSupport v) { return kBolsonaro.name(v); }

Hierarchy parse_hierarchy(std::string_view s) { return kHierarchy.parse(s, "hierarchy_level"); }
Orientation parse_orientation(std::string_view s) {
  return kOrientation.parse(s, "political_orientation");
}
Ethnicity parse_ethnicity(std::string_view s) {
  if (s == "Brown (Parda)") return Ethnicity::Brown;
  return kEthnicity.parse(s, "ethnicity");
}
Religion parse_religion(std::string_view s) {
  if (s == "Christian/ Catholic") return Religion::ChristianCatholic;
  if (s == "No") return Religion::None;
  return kReligion.parse(s, "religion");
}
BolsonaroSupport parse_bolsonaro(std::string_view s) {
  return kBolsonaro.parse(s, "bolsonaro_support");
}

std::string parse_region(std::string_view s) {
  if (std::find(kRegions.begin(), kRegions.end(), s) == kRegions.end())
    throw DataError(fmt::format("unknown region '{}'", s));
  return std::string(s);
}

std::span<const std::string_view> region_names() { return kRegions; }

TargetRoster parse_roster(std::istream& in) {
  Table table = read_csv(in);
  std::array<std::size_t, 11> col{};
  for (std::size_t i = 0; i < kRosterColumns.size(); ++i) col[i] = table.column(kRosterColumns[i]);

  TargetRoster roster;
  std::set<std::string> handles;
  for (std::size_t r = 0; r < table.rows.size(); ++r) {
    const auto& row = table.rows[r];
    try {
      TargetProfile t;
      t.handle = row[col[0]];
      if (!t.handle.empty() && t.handle.front() == '@') t.handle.erase(0, 1);
      if (t.handle.empty()) throw DataError("empty handle");
      if (!handles.insert(t.handle).second) throw DataError("duplicate handle '" + t.handle + "'");
      t.hierarchy_level = parse_hierarchy(row[col[1]]);
      t.political_orientation = parse_orientation(row[col[2]]);
      t.party = row[col[3]];
      if (t.party.empty()) throw DataError("empty party");
      t.ethnicity = parse_ethnicity(row[col[4]]);
      const auto age = parse_count(row[col[5]], "age_years");
      if (age == 0 || age > 150) throw DataError("age_years out of range");
      t.age_years = static_cast<int>(age);
      t.religion = parse_religion(row[col[6]]);
      t.bolsonaro_support = parse_bolsonaro(row[col[7]]);
      t.region = parse_region(row[col[8]]);
      t.follower_count = parse_count(row[col[9]], "follower_count");
      t.own_tweet_count = parse_count(row[col[10]], "own_tweet_count");
      roster.push_back(std::move(t));
    } catch (const DataError& e) {
      throw DataError(fmt::format("roster row {}: {}", r + 2, e.what()));
    }
  }
  return roster;
}

TargetRoster load_roster(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open roster file " + path.string());
  return parse_roster(in);
}

void write_roster(std::ostream& out, std::span<const TargetProfile> roster) {
  Table table;
  table.header.assign(kRosterColumns.begin(), kRosterColumns.end());
  for (const auto& t : roster) {
    table.rows.push_back({t.handle, std::string(to_string(t.hierarchy_level)),
                          std::string(to_string(t.political_orientation)), t.party,
                          std::string(to_string(t.ethnicity)), std::to_string(t.age_years),
                          std::string(to_string(t.religion)),
                          std::string(to_string(t.bolsonaro_support)), t.region,
                          std::to_string(t.follower_count), std::to_string(t.own_tweet_count)});
  }
  write_csv(out, table);
}

std::map<std::string, std::size_t> count_mentions(std::span<const Post> posts) {
  std::map<std::string, std::size_t> counts;
  for (const auto& p : posts) {
    if (p.is_own) continue;
    for (const auto& h : p.mentions) ++counts[h];
  }
  return counts;
}

TargetRoster filter_targets(std::span<const TargetProfile> roster, std::span<const Post> posts,
                            std::size_t min_mentions) {
  const auto counts = count_mentions(posts);
  TargetRoster kept;
  for (const auto& t : roster) {
    auto it = counts.find(t.handle);
    const std::size_t n = it == counts.end() ? 0 : it->second;
    if (n >= min_mentions) kept.push_back(t);
  }
  return kept;
}

// ---- sampling ---------------------------------------------------------------------

std::size_t length_without_mentions(std::string_view text) {
  std::size_t total = 0;
  std::size_t tokens = 0;
  std::size_t i = 0;
  auto is_space = [](char c) { return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' || c == '\v'; };
  while (i < text.size()) {
    while (i < text.size() && is_space(text[i])) ++i;
    if (i >= text.size()) break;
    const std::size_t start = i;
    while (i < text.size() && !is_space(text[i])) ++i;
    std::string_view token = text.substr(start, i - start);
    if (token.front() == '@') continue;
    ++tokens;
    for (char c : token) {
      if ((static_cast<unsigned char>(c) & 0xC0) != 0x80) ++total;
    }
  }
  return tokens == 0 ? 0 : total + tokens - 1;
}

SampleResult sample_for_annotation(std::span<const Post> posts, const SampleOptions& options) {
  if (options.cap_factor <= 0.0) throw ConfigError("cap_factor must be positive");

  // Eligible posts grouped by calendar month, months in chronological order.
  std::map<std::string, std::vector<std::size_t>> by_month;
  std::set<std::string> targets;
  std::size_t eligible = 0;
  for (std::size_t i = 0; i < posts.size(); ++i) {
    const Post& p = posts[i];
    if (p.is_own || length_without_mentions(p.text) < options.min_chars) continue;
    by_month[month_key(p.timestamp)].push_back(i);
    targets.insert(p.mentions.begin(), p.mentions.end());
    ++eligible;
  }
  if (eligible < options.n) {
    throw DataError(fmt::format("only {} eligible posts for a sample of {}", eligible, options.n));
  }

  SampleResult result;
  if (options.n == 0) return result;

  // Largest-remainder monthly quotas proportional to eligible counts.
  struct Month {
    std::vector<std::size_t> candidates;
    std::size_t quota = 0;
    double remainder = 0.0;
    std::size_t next = 0;
  };
  std::vector<Month> months;
  std::size_t assigned = 0;
  for (auto& [key, idx] : by_month) {
    Month m;
    const double exact = static_cast<double>(options.n) * static_cast<double>(idx.size()) /
                         static_cast<double>(eligible);
    m.quota = static_cast<std::size_t>(std::floor(exact));
    m.remainder = exact - static_cast<double>(m.quota);
    m.candidates = idx;
    assigned += m.quota;
    months.push_back(std::move(m));
  }
  {
    std::vector<std::size_t> order(months.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    std::stable_sort(order.begin(), order.end(), [&months](std::size_t a, std::size_t b) {
      return months[a].remainder > months[b].remainder;
    });
    for (std::size_t k = 0; assigned < options.n; ++k, ++assigned) ++months[order[k]].quota;
  }

  Rng rng(derive_seed(options.seed, 0x5a4d504c45ULL));
  for (auto& m : months) rng.shuffle(std::span<std::size_t>(m.candidates));

  const double cap_exact = options.cap_factor * static_cast<double>(options.n) /
                           static_cast<double>(std::max<std::size_t>(1, targets.size()));
  result.per_target_cap = static_cast<std::size_t>(std::ceil(cap_exact - 1e-12));
  std::map<std::string, std::size_t> used;

  auto fits_cap = [&](const Post& p) {
    return std::all_of(p.mentions.begin(), p.mentions.end(), [&](const std::string& h) {
      auto it = used.find(h);
      return it == used.end() || it->second < result.per_target_cap;
    });
  };

  std::vector<std::size_t> chosen;
  std::vector<std::size_t> taken(months.size(), 0);
  std::vector<bool> picked(posts.size(), false);
  // Round-robin over months, one capped pick per month per round.
  bool progress = true;
  while (progress) {
    progress = false;
    for (std::size_t mi = 0; mi < months.size(); ++mi) {
      Month& m = months[mi];
      if (taken[mi] >= m.quota) continue;
      while (m.next < m.candidates.size()) {
        const std::size_t idx = m.candidates[m.next++];
        if (!fits_cap(posts[idx])) continue;
        for (const auto& h : posts[idx].mentions) ++used[h];
        picked[idx] = true;
        chosen.push_back(idx);
        ++taken[mi];
        progress = true;
        break;
      }
    }
  }
  // Months whose capped candidates ran out take uncapped posts, in the same
  // shuffled order.
  for (std::size_t mi = 0; mi < months.size(); ++mi) {
    for (std::size_t idx : months[mi].candidates) {
      if (taken[mi] >= months[mi].quota) break;
      if (picked[idx]) continue;
      for (const auto& h : posts[idx].mentions) ++used[h];
      picked[idx] = true;
      chosen.push_back(idx);
      ++taken[mi];
      ++result.cap_overflow;
    }
  }

  std::sort(chosen.begin(), chosen.end());
  result.posts.reserve(chosen.size());
  for (std::size_t idx : chosen) result.posts.push_back(posts[idx]);
  return result;
}

// ---- labels -------------------------------------------------------------------------

std::vector<LabeledExample> parse_labels(std::istream& in) {
  Table table = read_csv(in);
  const std::size_t c_id = table.column("post_id");
  const std::size_t c_label = table.column("label");
  const std::size_t c_coder = table.column("coder");
  std::vector<LabeledExample> out;
  out.reserve(table.rows.size());
  for (std::size_t r = 0; r < table.rows.size(); ++r) {
    const auto& row = table.rows[r];
    LabeledExample ex;
    ex.post_id = row[c_id];
    if (row[c_label] == "0") {
      ex.label = 0;
    } else if (row[c_label] == "1") {
      ex.label = 1;
    } else {
      throw DataError(fmt::format("labels row {}: label must be 0 or 1", r + 2));
    }
    ex.coder = row[c_coder];
    if (ex.post_id.empty()) throw DataError(fmt::format("labels row {}: empty post_id", r + 2));
    out.push_back(std::move(ex));
  }
  return out;
}

std::vector<LabeledExample> load_labels(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw MissingArtifact(path.string());
  return parse_labels(in);
}

double cohen_kappa(std::span<const int> a, std::span<const int> b) {
  if (a.size() != b.size()) throw DataError("label sequences differ in length");
  if (a.empty()) throw DataError("label sequences are empty");
  std::size_t agree = 0, a_pos = 0, b_pos = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    if ((a[i] != 0 && a[i] != 1) || (b[i] != 0 && b[i] != 1))
      throw DataError("labels must be binary");
    agree += a[i] == b[i];
    a_pos += a[i];
    b_pos += b[i];
  }
  const double n = static_cast<double>(a.size());
  const double po = static_cast<double>(agree) / n;
  const double pa1 = static_cast<double>(a_pos) / n;
  const double pb1 = static_cast<double>(b_pos) / n;
  const double pe = pa1 * pb1 + (1.0 - pa1) * (1.0 - pb1);
  if (pe >= 1.0) return po >= 1.0 ? 1.0 : 0.0;
  return (po - pe) / (1.0 - pe);
}

}  // namespace tw::corpus
