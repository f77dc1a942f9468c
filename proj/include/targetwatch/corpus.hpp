#pragma once

#include "targetwatch/timeutil.hpp"

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace tw::corpus {

/// One short text message. `mentions` is sorted and duplicate-free.
struct Post {
  std::string id;
  UnixSeconds timestamp = 0;
  std::string author;
  std::string text;
  std::vector<std::string> mentions;
  bool is_own = false;
};

using PostCollection = std::vector<Post>;

struct RejectedLine {
  std::size_t line = 0;  // 1-based
  std::string reason;
};

struct LoadResult {
  PostCollection posts;
  std::vector<RejectedLine> rejects;
  std::size_t skipped_retweets = 0;
};

/// Reads posts.jsonl. Malformed rows and rows outside `window` are recorded
/// as rejects and skipped; rows whose optional "kind" is "retweet" are skipped
/// and counted separately. Throws DataError when the file cannot be opened.
LoadResult load_posts(const std::filesystem::path& path, const Window& window);
LoadResult parse_posts(std::istream& in, const Window& window);

void write_posts(std::ostream& out, std::span<const Post> posts);

/// First occurrence of each id wins; order otherwise preserved.
PostCollection dedup(std::span<const Post> posts);

// ---- target roster -------------------------------------------------------

enum class Hierarchy { President, VicePresident, Senator, Governor, ViceGovernor, FederalDeputy, StateDeputy };
enum class Orientation { FarLeft, Left, Centre, Right, FarRight };
enum class Ethnicity { Indigenous, Asian, White, Brown, Black };
enum class Religion { Evangelical, AfroBrazilian, ChristianCatholic, Jewish, None };
enum class BolsonaroSupport { Yes, No, Unknown };

std::string_view to_string(Hierarchy v);
std::string_view to_string(Orientation v);
std::string_view to_string(Ethnicity v);
std::string_view to_string(Religion v);
std::string_view to_string(BolsonaroSupport v);

Hierarchy parse_hierarchy(std::string_view s);
Orientation parse_orientation(std::string_view s);
Ethnicity parse_ethnicity(std::string_view s);
Religion parse_religion(std::string_view s);
BolsonaroSupport parse_bolsonaro(std::string_view s);
/// Validates one of the 27 federative-unit names; returns it unchanged.
std::string parse_region(std::string_view s);

std::span<const std::string_view> region_names();

struct TargetProfile {
  std::string handle;
  Hierarchy hierarchy_level = Hierarchy::StateDeputy;
  Orientation political_orientation = Orientation::Centre;
  std::string party;
  Ethnicity ethnicity = Ethnicity::White;
  int age_years = 0;
  Religion religion = Religion::ChristianCatholic;
  BolsonaroSupport bolsonaro_support = BolsonaroSupport::No;
  std::string region;
  std::uint64_t follower_count = 0;
  std::uint64_t own_tweet_count = 0;
};

using TargetRoster = std::vector<TargetProfile>;

/// roster.csv with the 11 columns in declaration order of TargetProfile.
TargetRoster load_roster(const std::filesystem::path& path);
TargetRoster parse_roster(std::istream& in);
void write_roster(std::ostream& out, std::span<const TargetProfile> roster);

/// Number of non-own posts mentioning each handle (a post counts once per handle).
std::map<std::string, std::size_t> count_mentions(std::span<const Post> posts);

/// Keeps targets with at least `min_mentions` mentioning posts, roster order preserved.
TargetRoster filter_targets(std::span<const TargetProfile> roster, std::span<const Post> posts,
                            std::size_t min_mentions = 100);

// ---- annotation sampling ---------------------------------------------------

/// Code points of `text` once @mention tokens are removed and the remaining
/// tokens are joined by single spaces.
std::size_t length_without_mentions(std::string_view text);

struct SampleOptions {
  std::size_t n = 0;
  std::size_t min_chars = 100;
  double cap_factor = 2.0;
  std::uint64_t seed = 0;
};

struct SampleResult {
  PostCollection posts;
  std::size_t per_target_cap = 0;
  /// Posts admitted after every capped candidate was exhausted.
  std::size_t cap_overflow = 0;
};

/// Draws n distinct mentioning posts of sufficient length, stratified by
/// calendar month and capped per mentioned target. Throws DataError when
/// fewer than n posts are eligible.
SampleResult sample_for_annotation(std::span<const Post> posts, const SampleOptions& options);

// ---- labels & agreement ------------------------------------------------------

struct LabeledExample {
  std::string post_id;
  int label = 0;
  std::string coder;
};

std::vector<LabeledExample> load_labels(const std::filesystem::path& path);
std::vector<LabeledExample> parse_labels(std::istream& in);

/// Cohen's kappa for two binary label sequences.
double cohen_kappa(std::span<const int> a, std::span<const int> b);

}  // namespace tw::corpus
