#include "targetwatch/classifiers.hpp"
#include "targetwatch/common.hpp"
#include "targetwatch/random.hpp"

#include <doctest.h>
#include <fmt/format.h>

#include <cmath>
#include <sstream>

using namespace tw;
using namespace tw::classify;
using textprep::FeatureMatrix;

namespace {

FeatureMatrix from_dense(const std::vector<std::vector<double>>& rows, std::string fingerprint = "fp") {
  FeatureMatrix m;
  m.cols = rows.empty() ? 0 : rows.front().size();
  m.fingerprint = std::move(fingerprint);
  for (std::size_t r = 0; r < rows.size(); ++r) {
    m.row_ids.push_back(fmt::format("r{}", r));
    for (std::size_t c = 0; c < rows[r].size(); ++c)
      if (rows[r][c] != 0.0) {
        m.col_idx.push_back(static_cast<std::uint32_t>(c));
        m.values.push_back(rows[r][c]);
      }
    m.row_ptr.push_back(m.col_idx.size());
  }
  return m;
}

// Two separable groups of count vectors over disjoint word sets.
std::pair<FeatureMatrix, std::vector<int>> separable(std::uint64_t seed, std::size_t per_class = 50) {
  Rng rng(seed);
  std::vector<std::vector<double>> rows;
  std::vector<int> y;
  for (std::size_t i = 0; i < 2 * per_class; ++i) {
    const int label = i < per_class ? 1 : 0;
    std::vector<double> row(6, 0.0);
    const std::size_t base = label ? 0 : 3;
    for (int w = 0; w < 3; ++w) row[base + rng.index(3)] += 1.0;
    row[base] += 1.0;
    rows.push_back(row);
    y.push_back(label);
  }
  return {from_dense(rows), y};
}

std::pair<FeatureMatrix, std::vector<int>> noisy(std::uint64_t seed, std::size_t n, std::size_t d) {
  Rng rng(seed);
  std::vector<std::vector<double>> rows;
  std::vector<int> y;
  for (std::size_t i = 0; i < n; ++i) {
    std::vector<double> row(d, 0.0);
    for (std::size_t j = 0; j < d; ++j) row[j] = double(rng.poisson(0.7));
    const int label = (row[0] + row[1] + rng.normal() > 1.5) ? 1 : 0;
    rows.push_back(row);
    y.push_back(label);
  }
  return {from_dense(rows), y};
}

ModelSpec spec_of(ModelKind kind, std::uint64_t seed = 1) {
  ModelSpec s;
  s.kind = kind;
  s.seed = seed;
  s.hp.rf_trees = 30;
  return s;
}

}  // namespace

TEST_CASE("model kind names") {
  for (auto k : {ModelKind::NBMultinomial, ModelKind::NBGaussian, ModelKind::LogisticRegression, ModelKind::LinearSVM,
                 ModelKind::RandomForest, ModelKind::KNN, ModelKind::Stack})
    CHECK(parse_model_kind(to_string(k)) == k);
  CHECK(to_string(ModelKind::LinearSVM) == "SVC_L");
  CHECK_THROWS(parse_model_kind("XGB"));
}

TEST_CASE("every kind separates a separable training set") {
  const auto [x, y] = separable(3);
  for (auto k : {ModelKind::NBMultinomial, ModelKind::NBGaussian, ModelKind::LogisticRegression, ModelKind::LinearSVM,
                 ModelKind::RandomForest, ModelKind::KNN, ModelKind::Stack}) {
    CAPTURE(to_string(k));
    const auto model = train(spec_of(k), x, y);
    CHECK(evaluate(model, x, y).accuracy == 1.0);
  }
}

TEST_CASE("NB_M Laplace estimates by hand") {
  // words: a b c ; class 1 docs: (2,1,0) (1,0,0); class 0 docs: (0,1,1) (0,0,2)
  const auto x = from_dense({{2, 1, 0}, {1, 0, 0}, {0, 1, 1}, {0, 0, 2}});
  const std::vector<int> y{1, 1, 0, 0};
  const auto model = train(spec_of(ModelKind::NBMultinomial), x, y);
  const auto& p = std::get<NBMultinomialParams>(model.params);
  // class 1 counts (3,1,0), total 4, denominators 4 + 3
  CHECK(p.log_prob[1][0] == doctest::Approx(std::log(4.0 / 7.0)));
  CHECK(p.log_prob[1][1] == doctest::Approx(std::log(2.0 / 7.0)));
  CHECK(p.log_prob[1][2] == doctest::Approx(std::log(1.0 / 7.0)));
  // class 0 counts (0,1,3)
  CHECK(p.log_prob[0][0] == doctest::Approx(std::log(1.0 / 7.0)));
  CHECK(p.log_prob[0][2] == doctest::Approx(std::log(4.0 / 7.0)));
  CHECK(p.log_prior[0] == doctest::Approx(std::log(0.5)));
}

TEST_CASE("NB_M is invariant to duplicating every training document") {
  const auto [x, y] = noisy(8, 120, 5);
  std::vector<std::size_t> twice;
  std::vector<int> y2;
  for (int rep = 0; rep < 2; ++rep)
    for (std::size_t i = 0; i < x.rows(); ++i) {
      twice.push_back(i);
      y2.push_back(y[i]);
    }
  const auto x2 = x.select_rows(twice);
  auto s = spec_of(ModelKind::NBMultinomial);
  s.hp.nb_alpha = 1e-9;  // smoothing is the only term not scaled by duplication
  const auto a = score(train(s, x, y), x);
  const auto b = score(train(s, x2, y2), x);
  for (std::size_t i = 0; i < a.size(); ++i) CHECK(a[i] == doctest::Approx(b[i]).epsilon(1e-6));
}

TEST_CASE("LR gradient vanishes at the optimum") {
  for (std::uint64_t seed : {1u, 2u, 3u}) {
    const auto [x, y] = noisy(seed, 300, 8);
    const auto model = train(spec_of(ModelKind::LogisticRegression), x, y);
    CHECK(model.converged);
    const auto g = logistic_gradient(std::get<LinearParams>(model.params), x, y, model.spec.hp.lr_l2);
    double mx = 0;
    for (double v : g) mx = std::max(mx, std::abs(v));
    CHECK(mx < 1e-6);
  }
}

TEST_CASE("stratified_split proportions and determinism") {
  std::vector<int> y(100, 0);
  for (int i = 0; i < 10; ++i) y[i * 7] = 1;
  const auto s = stratified_split(y, 0.2, 4);
  std::size_t ones = 0;
  for (auto i : s.test) ones += y[i];
  CHECK(s.test.size() == 20);
  CHECK(ones == 2);
  CHECK(s.train.size() + s.test.size() == 100);
  std::vector<int> seen(100, 0);
  for (auto i : s.train) seen[i]++;
  for (auto i : s.test) seen[i]++;
  for (int v : seen) CHECK(v == 1);
  const auto again = stratified_split(y, 0.2, 4);
  CHECK(again.test == s.test);

  std::vector<int> big(6109, 0);
  for (int i = 0; i < 821; ++i) big[i] = 1;
  const auto b = stratified_split(big, 0.2, 1);
  std::size_t pos = 0;
  for (auto i : b.test) pos += big[i];
  CHECK(b.test.size() == 1222);
  CHECK(pos == 164);

  std::vector<int> lonely(10, 0);
  lonely[0] = 1;
  CHECK_THROWS_AS(stratified_split(lonely, 0.2, 1), DataError);
}

TEST_CASE("KNN with k = 1 memorises distinct points") {
  const auto [x, y] = noisy(12, 60, 6);
  auto s = spec_of(ModelKind::KNN);
  s.hp.knn_k = 1;
  std::vector<std::vector<double>> rows;
  for (std::size_t r = 0; r < x.rows(); ++r) {
    auto d = x.dense_row(r);
    d.push_back(double(r));  // make every point distinct
    rows.push_back(d);
  }
  const auto xd = from_dense(rows);
  CHECK(evaluate(train(s, xd, y), xd, y).accuracy == 1.0);
}

TEST_CASE("stack of unanimous perfect bases reproduces them") {
  const auto [x, y] = separable(21, 60);
  const auto stack = train(spec_of(ModelKind::Stack), x, y);
  const auto& sp = std::get<StackParams>(stack.params);
  REQUIRE(sp.bases.size() == kStackBases.size());
  for (std::size_t i = 0; i < kStackBases.size(); ++i) CHECK(sp.bases[i].spec.kind == kStackBases[i]);
  const auto ps = predict(stack, x);
  for (const auto& base : sp.bases) CHECK(predict(base, x) == ps);
}

TEST_CASE("predictions are reproducible across thread counts") {
  const auto [x, y] = noisy(30, 200, 6);
  for (auto k : {ModelKind::RandomForest, ModelKind::Stack, ModelKind::KNN}) {
    const auto a = train(spec_of(k, 9), x, y, 1);
    const auto b = train(spec_of(k, 9), x, y, 4);
    CHECK(score(a, x, 1) == score(b, x, 3));
  }
}

TEST_CASE("save and load round trip is bit identical") {
  const auto [x, y] = noisy(44, 150, 5);
  for (auto k : {ModelKind::NBMultinomial, ModelKind::NBGaussian, ModelKind::LogisticRegression, ModelKind::LinearSVM,
                 ModelKind::RandomForest, ModelKind::KNN, ModelKind::Stack}) {
    CAPTURE(to_string(k));
    const auto model = train(spec_of(k), x, y);
    std::stringstream ss;
    save_model(ss, model);
    const auto back = load_model(ss);
    CHECK(back.spec.kind == k);
    CHECK(score(back, x) == score(model, x));
  }
  std::istringstream junk("{\"not\": \"a model\"}");
  CHECK_THROWS(load_model(junk));
}

TEST_CASE("fingerprint mismatch is rejected") {
  const auto [x, y] = separable(2);
  const auto model = train(spec_of(ModelKind::LogisticRegression), x, y);
  auto other = x;
  other.fingerprint = "different";
  CHECK_THROWS_AS(predict(model, other), DataError);
  CHECK_THROWS_AS(evaluate(model, other, y), DataError);
}

TEST_CASE("training input validation") {
  const auto [x, y] = separable(2);
  std::vector<int> ones(y.size(), 1);
  CHECK_THROWS_AS(train(spec_of(ModelKind::LogisticRegression), x, ones), DataError);
  std::vector<int> short_y(y.begin(), y.begin() + 3);
  CHECK_THROWS_AS(train(spec_of(ModelKind::NBGaussian), x, short_y), DataError);
}

TEST_CASE("report arithmetic") {
  const auto r = report_from_confusion(86, 1027, 31, 78);
  CHECK(r.accuracy == doctest::Approx(1113.0 / 1222.0));
  CHECK(r.precision1 == doctest::Approx(86.0 / 117.0));
  CHECK(r.recall1 == doctest::Approx(86.0 / 164.0));
  CHECK(r.f1_class1 == doctest::Approx(0.612).epsilon(1e-3));
  CHECK(r.f1_class0 == doctest::Approx(0.950).epsilon(1e-3));
  CHECK(r.f1_weighted == doctest::Approx(0.904).epsilon(1e-3));

  const std::vector<int> truth{1, 0, 1, 0}, perfect{1, 0, 1, 0};
  const auto p = report_from_predictions(truth, perfect);
  CHECK(p.accuracy == 1.0);
  CHECK(p.f1_class0 == 1.0);
  CHECK(p.f1_class1 == 1.0);

  std::vector<int> t90(100, 0), none(100, 0);
  for (int i = 0; i < 10; ++i) t90[i] = 1;
  const auto n = report_from_predictions(t90, none);
  CHECK(n.accuracy == doctest::Approx(0.9));
  CHECK(n.f1_class1 == 0.0);

  Rng rng(6);
  for (int t = 0; t < 200; ++t) {
    const std::size_t tp = rng.index(50), tn = rng.index(500), fp = rng.index(40), fn = rng.index(40);
    const auto q = report_from_confusion(tp, tn, fp, fn);
    const double total = double(tp + tn + fp + fn);
    if (total == 0) continue;
    CHECK(std::abs(q.accuracy - double(tp + tn) / total) < 1e-9);
    const double w = (double(tn + fp) * q.f1_class0 + double(tp + fn) * q.f1_class1) / total;
    CHECK(std::abs(q.f1_weighted - w) < 1e-9);
    CHECK(q.f1_weighted >= 0.0);
    CHECK(q.f1_weighted <= 1.0);
  }
}

TEST_CASE("classify_corpus") {
  textprep::Vocabulary vocab;
  vocab.words = {"burra", "casa", "feia", "nojenta", "rua"};
  std::vector<std::string> ids;
  std::vector<std::string_view> texts;
  std::vector<int> y;
  const std::vector<std::string> pool{"burra feia", "nojenta burra", "casa rua", "rua casa casa", "feia nojenta"};
  for (int i = 0; i < 40; ++i) {
    ids.push_back(fmt::format("t{}", i));
    texts.push_back(pool[std::size_t(i) % pool.size()]);
    const auto idx = std::size_t(i) % pool.size();
    y.push_back(idx == 2 || idx == 3 ? 0 : 1);
  }
  const auto x = textprep::vectorize(ids, texts, vocab);
  const auto model = train(spec_of(ModelKind::LogisticRegression), x, y);

  CHECK(classify_corpus(model, std::span<const corpus::Post>{}, vocab).empty());

  std::vector<corpus::Post> posts(texts.size());
  for (std::size_t i = 0; i < posts.size(); ++i) {
    posts[i].id = ids[i];
    posts[i].text = std::string(texts[i]);
  }
  posts[0].is_own = true;
  const auto flags = classify_corpus(model, posts, vocab);
  const auto pred = predict(model, x);
  REQUIRE(flags.size() == posts.size());
  CHECK(flags[0] == 0);
  for (std::size_t i = 1; i < flags.size(); ++i) CHECK(int(flags[i]) == pred[i]);
}
