#include "oracles.hpp"
#include "targetwatch/common.hpp"
#include "targetwatch/random.hpp"
#include "targetwatch/textprep.hpp"

#include <doctest.h>
#include <fmt/format.h>

#include <algorithm>
#include <map>
#include <sstream>

using namespace tw;
using namespace tw::textprep;
using Tokens = std::vector<std::string>;

TEST_CASE("tokenize_and_clean examples") {
  CHECK(tokenize_and_clean("").empty());
  CHECK(tokenize_and_clean("@user Você é LINDA! #top 😀 e") == Tokens{"você", "linda"});
  CHECK(tokenize_and_clean("nojenta... 123 mulher") == Tokens{"nojenta", "mulher"});
  CHECK(tokenize_and_clean("(sério?) \"ótima\"") == Tokens{"sério", "ótima"});
  CHECK(tokenize_and_clean("abc1 a1b x").empty());
  CHECK(tokenize_and_clean("ÁGUA ação", {.fold_accents = true}) == Tokens{"agua", "acao"});
}

TEST_CASE("tokenize_and_clean output invariants on random text") {
  Rng rng(17);
  const std::vector<std::string> pieces{"@", "#", "a", "é", "Z", "1", "!", ".", " ", "  ", "ção", "😀", "-", "'"};
  for (int t = 0; t < 300; ++t) {
    std::string text;
    const auto n = 1 + rng.index(40);
    for (std::size_t i = 0; i < n; ++i) text += pieces[rng.index(pieces.size())];
    for (const auto& tok : tokenize_and_clean(text)) {
      CHECK(tok.size() >= 2);
      CHECK(tok.front() != '@');
      CHECK(tok.front() != '#');
      CHECK(std::none_of(tok.begin(), tok.end(), [](unsigned char c) { return c >= '0' && c <= '9'; }));
      CHECK(std::none_of(tok.begin(), tok.end(), [](unsigned char c) { return c >= 'A' && c <= 'Z'; }));
    }
  }
}

TEST_CASE("build_vocabulary") {
  const std::vector<Document> one{{"linda mulher", 1}};
  const auto v = build_vocabulary(one);
  CHECK(v.words == Tokens{"linda", "mulher"});
  CHECK(v.find("mulher") == 1);
  CHECK(v.find("velha") == Vocabulary::npos);

  const std::vector<Document> two{{"linda mulher", 1}, {"mulher linda linda", 0}};
  const auto w = build_vocabulary(two);
  CHECK(w.words == v.words);
  CHECK(w.docs_class1 == std::vector<std::uint32_t>{1, 1});
  CHECK(w.docs_class0 == std::vector<std::uint32_t>{1, 1});
  CHECK(w.n_class1 == 1);
  CHECK(w.n_class0 == 1);
  CHECK(w.fingerprint() == v.fingerprint());

  CHECK_THROWS_AS(build_vocabulary(std::span<const Document>{}), DataError);
}

TEST_CASE("chi2_2x2 hand example and generic agreement") {
  CHECK(chi2_2x2(10, 90, 10, 890) == doctest::Approx(1000.0 * 8000.0 * 8000.0 / (100.0 * 900 * 20 * 980)));
  CHECK(chi2_2x2(10, 90, 10, 890) == doctest::Approx(36.28).epsilon(1e-3));
  CHECK(chi2_2x2(5, 5, 50, 50) == 0.0);
  CHECK(chi2_2x2(0, 10, 0, 20) == 0.0);

  Rng rng(99);
  for (int t = 0; t < 1000; ++t) {
    const double a = double(rng.index(200)), b = double(rng.index(200)), c = double(rng.index(200)),
                 d = double(rng.index(2000));
    const double ref = oracle::chi2_generic(a, b, c, d);
    CHECK(std::abs(chi2_2x2(a, b, c, d) - ref) <= 1e-9 * std::max(1.0, ref));
  }
}

TEST_CASE("chi-squared critical value agrees with the integration oracle") {
  CHECK(chi2_1_critical(0.20) == doctest::Approx(oracle::chi2_1_quantile_upper(0.20)).epsilon(1e-7));
  CHECK(chi2_1_critical(0.20) == doctest::Approx(1.6424).epsilon(1e-4));
  CHECK(chi2_1_critical(0.05) == doctest::Approx(3.8415).epsilon(1e-4));
  for (double x : {0.1, 0.5, 1.6424, 3.0, 10.0})
    CHECK(chi2_1_survival(x) == doctest::Approx(1.0 - oracle::chi2_1_cdf(x)).epsilon(1e-8));
  CHECK(chi2_1_survival(0.0) == 1.0);
  CHECK_THROWS_AS(chi2_1_critical(0.0), ConfigError);
}

namespace {

std::vector<std::string> keyness_corpus_texts(std::vector<int>& labels) {
  Rng rng(5);
  std::vector<std::string> texts;
  const std::vector<std::string> neutral{"casa", "rua", "dia", "noite", "carro", "livro", "mesa", "porta"};
  const std::vector<std::string> marked{"nojenta", "burra", "feia"};
  for (int i = 0; i < 400; ++i) {
    const int y = rng.bernoulli(0.3);
    std::string t;
    for (int w = 0; w < 5; ++w) t += neutral[rng.index(neutral.size())] + " ";
    if (y && rng.bernoulli(0.6)) t += marked[rng.index(marked.size())];
    if (!y && rng.bernoulli(0.05)) t += marked[rng.index(marked.size())];
    texts.push_back(t);
    labels.push_back(y);
  }
  return texts;
}

}  // namespace

TEST_CASE("keyness_filter: subset, monotone, drops independent words") {
  std::vector<int> labels;
  const auto texts = keyness_corpus_texts(labels);
  std::vector<Document> docs;
  for (std::size_t i = 0; i < texts.size(); ++i) docs.push_back({texts[i], labels[i]});
  const auto vocab = build_vocabulary(docs);

  const auto strict = keyness_filter(vocab, 0.01);
  const auto loose = keyness_filter(vocab, 0.20);
  const auto looser = keyness_filter(vocab, 0.60);
  for (const auto& w : {"nojenta", "burra", "feia"}) CHECK(strict.find(w) != Vocabulary::npos);
  for (const auto& w : strict.words) CHECK(loose.find(w) != Vocabulary::npos);
  for (const auto& w : loose.words) CHECK(looser.find(w) != Vocabulary::npos);
  for (const auto& w : looser.words) CHECK(vocab.find(w) != Vocabulary::npos);
  CHECK(std::is_sorted(loose.words.begin(), loose.words.end()));
  for (std::size_t i = 0; i < loose.size(); ++i) {
    CHECK(loose.p_value[i] < 0.20);
    CHECK(loose.chi2[i] > chi2_1_critical(0.20));
  }

  const std::vector<Document> independent{{"linda", 1}, {"linda", 0}, {"outra", 1}, {"outra", 0}};
  CHECK(keyness_filter(build_vocabulary(independent), 0.2).size() == 0);

  const std::vector<Document> single{{"linda", 1}, {"outra", 1}};
  CHECK_THROWS_AS(keyness_filter(build_vocabulary(single), 0.2), DataError);
  CHECK_THROWS_AS(keyness_filter(vocab, 1.0), ConfigError);
}

TEST_CASE("vectorize counts") {
  Vocabulary v;
  v.words = {"linda", "mulher", "velha"};
  const std::vector<std::string> ids{"p1", "p2"};
  const std::vector<std::string_view> texts{"linda linda mulher", "nada aqui"};
  const auto m = vectorize(ids, texts, v);
  REQUIRE(m.rows() == 2);
  CHECK(m.dense_row(0) == std::vector<double>{2, 1, 0});
  CHECK(m.dense_row(1) == std::vector<double>{0, 0, 0});
  CHECK(m.fingerprint == v.fingerprint());
  const auto b = vectorize(ids, texts, v, {.binary = true});
  CHECK(b.dense_row(0) == std::vector<double>{1, 1, 0});
  CHECK_THROWS_AS(vectorize(ids, texts, Vocabulary{}), DataError);
}

TEST_CASE("vectorize row sums and order invariance") {
  std::vector<int> labels;
  const auto texts = keyness_corpus_texts(labels);
  std::vector<Document> docs;
  for (std::size_t i = 0; i < texts.size(); ++i) docs.push_back({texts[i], labels[i]});
  Vocabulary vocab = build_vocabulary(docs);
  vocab.words.erase(vocab.words.begin());  // leave one token out of vocabulary

  std::vector<std::string> ids;
  std::vector<std::string_view> views;
  for (std::size_t i = 0; i < texts.size(); ++i) {
    ids.push_back(fmt::format("d{}", i));
    views.push_back(texts[i]);
  }
  const auto m = vectorize(ids, views, vocab);
  for (std::size_t r = 0; r < m.rows(); ++r) {
    double expect = 0;
    for (const auto& tok : tokenize_and_clean(texts[r]))
      if (std::binary_search(vocab.words.begin(), vocab.words.end(), tok)) expect += 1;
    double sum = 0;
    for (const auto& e : m.row(r)) sum += e.value;
    CHECK(sum == expect);
  }

  std::vector<std::size_t> perm(texts.size());
  for (std::size_t i = 0; i < perm.size(); ++i) perm[i] = perm.size() - 1 - i;
  std::vector<std::string> ids2;
  std::vector<std::string_view> views2;
  for (auto i : perm) {
    ids2.push_back(ids[i]);
    views2.push_back(views[i]);
  }
  const auto m2 = vectorize(ids2, views2, vocab);
  for (std::size_t r = 0; r < perm.size(); ++r) CHECK(m2.dense_row(r) == m.dense_row(perm[r]));
  const auto sel = m.select_rows(perm);
  CHECK(sel.col_idx == m2.col_idx);
  CHECK(sel.values == m2.values);
}

TEST_CASE("vocabulary and matrix serialization round trip") {
  std::vector<int> labels;
  const auto texts = keyness_corpus_texts(labels);
  std::vector<Document> docs;
  for (std::size_t i = 0; i < texts.size(); ++i) docs.push_back({texts[i], labels[i]});
  const auto vocab = keyness_filter(build_vocabulary(docs), 0.2);
  std::stringstream vs;
  write_vocabulary(vs, vocab);
  const auto vback = read_vocabulary(vs);
  CHECK(vback.words == vocab.words);
  CHECK(vback.fingerprint() == vocab.fingerprint());

  std::vector<std::string> ids;
  std::vector<std::string_view> views;
  for (std::size_t i = 0; i < 20; ++i) {
    ids.push_back(fmt::format("d{}", i));
    views.push_back(texts[i]);
  }
  const auto m = vectorize(ids, views, vocab);
  std::stringstream ms;
  write_matrix(ms, m);
  const auto mback = read_matrix(ms);
  CHECK(mback.rows() == m.rows());
  CHECK(mback.cols == m.cols);
  CHECK(mback.col_idx == m.col_idx);
  CHECK(mback.values == m.values);

  std::istringstream bad("2 2 1\n0 5 1\n");
  CHECK_THROWS_AS(read_matrix(bad), DataError);
}
