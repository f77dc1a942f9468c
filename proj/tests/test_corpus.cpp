#include "targetwatch/common.hpp"
#include "targetwatch/corpus.hpp"
#include "targetwatch/random.hpp"

#include <doctest.h>
#include <fmt/format.h>

#include <map>
#include <set>
#include <sstream>

using namespace tw;
using namespace tw::corpus;

namespace {

std::string line(std::string_view id, std::string_view ts, std::string_view author, std::string_view mentions,
                 bool own, std::string_view text = "texto") {
  return fmt::format(R"({{"id":"{}","timestamp":"{}","author":"{}","text":"{}","mentions":[{}],"is_own":{}}})", id,
                     ts, author, text, mentions, own ? "true" : "false") +
         "\n";
}

Post mention(std::string id, std::string ts, std::vector<std::string> handles, std::string text = "texto") {
  Post p;
  p.id = std::move(id);
  p.timestamp = *parse_timestamp(ts);
  p.author = "someone";
  p.text = std::move(text);
  p.mentions = std::move(handles);
  return p;
}

TargetProfile target(std::string handle) {
  TargetProfile t;
  t.handle = std::move(handle);
  t.age_years = 40;
  t.region = "Bahia";
  t.party = "PT";
  return t;
}

}  // namespace

TEST_CASE("load_posts: empty input") {
  std::istringstream in("");
  const auto r = parse_posts(in, default_study_window());
  CHECK(r.posts.empty());
  CHECK(r.rejects.empty());
}

TEST_CASE("load_posts: well-formed lines") {
  std::istringstream in(line("a", "2022-02-01T10:00:00Z", "u1", R"("@cand")", false) +
                        line("b", "2022-02-02T10:00:00Z", "cand", "", true) +
                        line("c", "2022-02-03T10:00:00Z", "u2", R"("x","cand","x")", false));
  const auto r = parse_posts(in, default_study_window());
  REQUIRE(r.posts.size() == 3);
  CHECK(r.posts[0].mentions == std::vector<std::string>{"cand"});
  CHECK(r.posts[1].is_own);
  CHECK(r.posts[2].mentions == std::vector<std::string>{"cand", "x"});
}

TEST_CASE("load_posts: malformed line reported with its number") {
  std::istringstream in(line("a", "2022-02-01T10:00:00Z", "u1", R"("cand")", false) +
                        R"({"id":"b","author":"u","text":"t","mentions":["cand"],"is_own":false})" + "\n" +
                        line("c", "2022-02-03T10:00:00Z", "u2", R"("cand")", false));
  const auto r = parse_posts(in, default_study_window());
  CHECK(r.posts.size() == 2);
  REQUIRE(r.rejects.size() == 1);
  CHECK(r.rejects[0].line == 2);
}

TEST_CASE("load_posts: window, retweets and mention-less posts") {
  std::istringstream in(line("a", "2021-12-31T23:59:59Z", "u", R"("cand")", false) +
                        line("b", "2022-12-01T00:00:00Z", "u", R"("cand")", false) +
                        line("c", "2022-05-01T00:00:00Z", "u", "", false) +
                        R"({"id":"d","timestamp":"2022-05-01T00:00:00Z","author":"u","text":"RT","mentions":["cand"],"is_own":false,"kind":"retweet"})" +
                        "\n" + "not json\n");
  const auto r = parse_posts(in, default_study_window());
  CHECK(r.posts.empty());
  CHECK(r.rejects.size() == 4);
  CHECK(r.skipped_retweets == 1);
}

TEST_CASE("load_posts: unreadable file") {
  CHECK_THROWS_AS(load_posts("/nonexistent/posts.jsonl", default_study_window()), DataError);
}

TEST_CASE("write_posts round trip") {
  std::vector<Post> posts{mention("x1", "2022-03-03T03:03:03Z", {"a", "b"}, "olá \"mundo\""),
                          mention("x2", "2022-04-04T04:04:04Z", {"a"})};
  posts[1].is_own = true;
  posts[1].author = "a";
  std::ostringstream os;
  write_posts(os, posts);
  std::istringstream is(os.str());
  const auto back = parse_posts(is, default_study_window());
  REQUIRE(back.posts.size() == 2);
  CHECK(back.posts[0].text == posts[0].text);
  CHECK(back.posts[0].mentions == posts[0].mentions);
  CHECK(back.posts[1].is_own);
}

TEST_CASE("dedup keeps first occurrence and is idempotent") {
  CHECK(dedup(std::vector<Post>{}).empty());
  auto p1 = mention("p1", "2022-01-05T00:00:00Z", {"a"}, "first");
  auto p2 = mention("p2", "2022-01-05T00:00:00Z", {"a"});
  auto p1b = mention("p1", "2022-01-06T00:00:00Z", {"b"}, "second");
  const std::vector<Post> in{p1, p2, p1b};
  const auto out = dedup(in);
  REQUIRE(out.size() == 2);
  CHECK(out[0].text == "first");
  CHECK(out[1].id == "p2");
  CHECK(dedup(out).size() == out.size());
}

TEST_CASE("roster parsing and enum spellings") {
  std::istringstream in(
      "handle,hierarchy_level,political_orientation,party,ethnicity,age_years,religion,bolsonaro_support,region,"
      "follower_count,own_tweet_count\n"
      "a,Federal Deputy,Far-right,PL,Brown,45,Christian/Catholic,Yes,São Paulo,1000,10\n"
      "b,State Deputy,Centre,REDE,White,29,None,Unknown,Acre,0,0\n");
  const auto r = parse_roster(in);
  REQUIRE(r.size() == 2);
  CHECK(r[0].hierarchy_level == Hierarchy::FederalDeputy);
  CHECK(r[0].political_orientation == Orientation::FarRight);
  CHECK(r[0].religion == Religion::ChristianCatholic);
  CHECK(r[1].religion == Religion::None);
  CHECK(r[0].region == "São Paulo");
  std::ostringstream os;
  write_roster(os, r);
  std::istringstream back(os.str());
  CHECK(parse_roster(back).size() == 2);

  std::istringstream dup(
      "handle,hierarchy_level,political_orientation,party,ethnicity,age_years,religion,bolsonaro_support,region,"
      "follower_count,own_tweet_count\n"
      "a,Senator,Left,PT,Black,50,Evangelical,No,Bahia,1,1\n"
      "a,Senator,Left,PT,Black,50,Evangelical,No,Bahia,1,1\n");
  CHECK_THROWS_AS(parse_roster(dup), DataError);
  CHECK_THROWS_AS(parse_region("Atlantis"), DataError);
  CHECK_THROWS_AS(parse_ethnicity("Martian"), DataError);
}

TEST_CASE("filter_targets boundary and monotonicity") {
  std::vector<Post> posts;
  for (int i = 0; i < 99; ++i) posts.push_back(mention(fmt::format("a{}", i), "2022-03-01T00:00:00Z", {"A"}));
  for (int i = 0; i < 100; ++i) posts.push_back(mention(fmt::format("b{}", i), "2022-03-01T00:00:00Z", {"B"}));
  Post own = mention("own", "2022-03-01T00:00:00Z", {"A"});
  own.is_own = true;
  posts.push_back(own);
  const TargetRoster roster{target("A"), target("B")};
  CHECK(filter_targets(roster, posts, 0).size() == 2);
  const auto kept = filter_targets(roster, posts, 100);
  REQUIRE(kept.size() == 1);
  CHECK(kept[0].handle == "B");
  CHECK(filter_targets(roster, posts, 99).size() == 2);
  CHECK(count_mentions(posts).at("A") == 99);
}

TEST_CASE("length_without_mentions") {
  CHECK(length_without_mentions("@a @b olá mundo") == 9);
  CHECK(length_without_mentions("@only") == 0);
  CHECK(length_without_mentions("  um   dois ") == 7);
}

namespace {

std::vector<Post> monthly_corpus(std::size_t per_month, std::size_t months, std::size_t n_targets) {
  std::vector<Post> posts;
  const std::string filler(120, 'x');
  for (std::size_t m = 0; m < months; ++m)
    for (std::size_t i = 0; i < per_month; ++i)
      posts.push_back(mention(fmt::format("m{}_{}", m, i), fmt::format("2022-{:02}-10T00:00:00Z", m + 1),
                              {fmt::format("t{}", (m * per_month + i) % n_targets)}, filler));
  return posts;
}

}  // namespace

TEST_CASE("sample_for_annotation: trivial cases") {
  const auto posts = monthly_corpus(1, 10, 5);
  CHECK(sample_for_annotation(posts, {.n = 0, .seed = 1}).posts.empty());
  const auto all = sample_for_annotation(posts, {.n = 10, .seed = 99});
  CHECK(all.posts.size() == 10);
  CHECK_THROWS_AS(sample_for_annotation(posts, {.n = 11, .seed = 1}), DataError);
}

TEST_CASE("sample_for_annotation: monthly proportions and per-target cap") {
  const auto posts = monthly_corpus(1000 / 11 + 1, 11, 40);
  const auto r = sample_for_annotation(posts, {.n = 110, .seed = 3});
  REQUIRE(r.posts.size() == 110);
  std::map<std::string, int> per_month;
  std::map<std::string, std::size_t> per_target;
  std::set<std::string> ids;
  for (const auto& p : r.posts) {
    per_month[month_key(p.timestamp)]++;
    for (const auto& h : p.mentions) per_target[h]++;
    ids.insert(p.id);
  }
  CHECK(ids.size() == 110);
  CHECK(per_month.size() == 11);
  for (const auto& [m, c] : per_month) CHECK(std::abs(c - 10) <= 1);
  CHECK(r.per_target_cap == 6);  // ceil(2 * 110 / 40)
  for (const auto& [h, c] : per_target) CHECK(c <= r.per_target_cap);
  CHECK(r.cap_overflow == 0);
}

TEST_CASE("sample_for_annotation: short posts are ineligible and results reproducible") {
  auto posts = monthly_corpus(20, 3, 10);
  posts[0].text = "@t0 curto";
  const auto a = sample_for_annotation(posts, {.n = 30, .seed = 5});
  const auto b = sample_for_annotation(posts, {.n = 30, .seed = 5});
  REQUIRE(a.posts.size() == b.posts.size());
  for (std::size_t i = 0; i < a.posts.size(); ++i) CHECK(a.posts[i].id == b.posts[i].id);
  for (const auto& p : a.posts) CHECK(p.id != posts[0].id);
}

TEST_CASE("labels parsing") {
  std::istringstream in("post_id,label,coder\np1,1,A\np2,0,A\n");
  const auto l = parse_labels(in);
  REQUIRE(l.size() == 2);
  CHECK(l[0].label == 1);
  std::istringstream bad("post_id,label,coder\np1,2,A\n");
  CHECK_THROWS_AS(parse_labels(bad), DataError);
}

TEST_CASE("cohen_kappa") {
  const std::vector<int> a{1, 1, 0, 0}, b{1, 0, 0, 0};
  CHECK(cohen_kappa(a, b) == doctest::Approx(0.5));
  CHECK(cohen_kappa(a, a) == 1.0);
  CHECK(cohen_kappa(b, a) == cohen_kappa(a, b));
  const std::vector<int> ones{1, 1, 1};
  CHECK(cohen_kappa(ones, ones) == 1.0);
  CHECK_THROWS_AS(cohen_kappa(a, ones), DataError);
  CHECK_THROWS_AS(cohen_kappa(std::vector<int>{}, std::vector<int>{}), DataError);

  Rng rng(4);
  for (int t = 0; t < 50; ++t) {
    std::vector<int> x(30), y(30);
    for (int i = 0; i < 30; ++i) {
      x[i] = rng.bernoulli(0.4);
      y[i] = rng.bernoulli(0.4);
    }
    const double k = cohen_kappa(x, y);
    CHECK(k >= -1.0);
    CHECK(k <= 1.0);
    CHECK(k == doctest::Approx(cohen_kappa(y, x)));
    if (x != y) CHECK(k < 1.0);
  }
}
