// Generates the bundled synthetic fixture: posts.jsonl, roster.csv,
// labels.csv and labels_b.csv.

#include "targetwatch/common.hpp"
#include "targetwatch/corpus.hpp"
#include "targetwatch/random.hpp"
#include "targetwatch/timeutil.hpp"

#include <CLI11.hpp>
#include <fmt/format.h>
#include <json.hpp>

#include <algorithm>
#include <array>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

namespace {

using tw::Rng;
using namespace tw::corpus;

constexpr std::array<const char*, 120> kNeutral{
    "eleição",   "campanha",  "proposta",  "votar",     "governo",   "cidade",    "estado",    "saúde",
    "educação",  "escola",    "hospital",  "estrada",   "ponte",     "obra",      "projeto",   "debate",
    "reunião",   "comício",   "agenda",    "povo",      "cidadão",   "trabalho",  "emprego",   "salário",
    "imposto",   "orçamento", "verba",     "prefeitura", "câmara",   "senado",    "assembleia", "lei",
    "votação",   "plenário",  "discurso",  "entrevista", "rádio",    "jornal",    "notícia",   "semana",
    "hoje",      "amanhã",    "ontem",     "sempre",    "nunca",     "muito",     "pouco",     "melhor",
    "pior",      "grande",    "pequeno",   "novo",      "velho",     "bairro",    "rua",       "praça",
    "mercado",   "feira",     "água",      "energia",   "transporte", "ônibus",   "metrô",     "segurança",
    "polícia",   "justiça",   "tribunal",  "direito",   "dever",     "família",   "criança",   "jovem",
    "idoso",     "mulher",    "homem",     "pessoa",    "gente",     "vida",      "tempo",     "mundo",
    "país",      "brasil",    "região",    "norte",     "sul",       "leste",     "oeste",     "centro",
    "apoio",     "crítica",   "pergunta",  "resposta",  "dúvida",    "certeza",   "verdade",   "mentira",
    "plano",     "meta",      "resultado", "pesquisa",  "número",    "dado",      "fato",      "opinião",
    "parabéns",  "obrigado",  "bom",       "boa",       "dia",       "noite",     "tarde",     "festa",
    "cultura",   "esporte",   "futebol",   "música",    "arte",      "ciência",   "tecnologia", "internet"};

constexpr std::array<const char*, 30> kAbusive{
    "zorvak", "krelma", "fustra", "brangol", "quelpa", "dorvil", "sarnuk", "plovra", "trebuz", "galmor",
    "vinrek", "hospla", "murvex", "yardel", "cobrin", "lastok", "nivrel", "pardux", "folgra", "tuvrek",
    "belmox", "grisna", "zaplor", "kuvela", "drabon", "selvix", "mornak", "pilvra", "quomar", "rastel"};

constexpr std::array<const char*, 12> kParties{"PL",  "PT",   "UNIÃO", "PP",  "PSD",    "MDB",
                                               "PSB", "PSOL", "PDT",   "NOVO", "REPUBLICANOS", "PCdoB"};

std::string words(Rng& rng, std::size_t n) {
  std::string s;
  for (std::size_t i = 0; i < n; ++i) {
    if (!s.empty()) s += ' ';
    s += kNeutral[rng.index(kNeutral.size())];
  }
  return s;
}

std::string mention_text(Rng& rng, const std::vector<std::string>& handles, bool abusive) {
  std::string s;
  for (const auto& h : handles) s += "@" + h + " ";
  const std::size_t n = 12 + rng.index(11);
  std::vector<std::string> toks;
  for (std::size_t i = 0; i < n; ++i) toks.push_back(kNeutral[rng.index(kNeutral.size())]);
  if (abusive) {
    const std::size_t k = 1 + rng.index(3);
    for (std::size_t i = 0; i < k; ++i) toks[rng.index(toks.size())] = kAbusive[rng.index(kAbusive.size())];
  }
  for (std::size_t i = 0; i < toks.size(); ++i) {
    if (i) s += ' ';
    s += toks[i];
  }
  if (rng.bernoulli(0.5)) s += rng.bernoulli(0.5) ? "!" : ".";
  return s;
}

template <class E, std::size_t N>
E pick(Rng& rng, const std::array<E, N>& values, const std::array<double, N>& weights) {
  double u = rng.uniform();
  for (std::size_t i = 0; i < N; ++i) {
    if (u < weights[i]) return values[i];
    u -= weights[i];
  }
  return values[N - 1];
}

struct Generated {
  Post post;
  bool abusive = false;
};

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Writes the synthetic fixture used by the pipeline tests"};
  std::string out = "fixtures";
  std::uint64_t seed = 20221002;
  std::size_t n_targets = 80;
  std::size_t n_labels = 1500;
  app.add_option("--out", out, "output directory");
  app.add_option("--seed", seed, "generator seed");
  app.add_option("--targets", n_targets, "number of roster entries");
  app.add_option("--labels", n_labels, "number of coded posts");
  CLI11_PARSE(app, argc, argv);

  Rng rng(seed);
  const auto window = tw::default_study_window();
  const std::size_t weeks = static_cast<std::size_t>((window.end - window.start) / (7 * tw::kSecondsPerDay));

  TargetRoster roster;
  std::vector<double> abuse_logit(n_targets);
  for (std::size_t i = 0; i < n_targets; ++i) {
    TargetProfile t;
    t.handle = fmt::format("cand_{:03}", i + 1);
    const double pos = static_cast<double>(i) / static_cast<double>(n_targets);
    t.hierarchy_level = pos < 0.03   ? Hierarchy::President
                        : pos < 0.06 ? Hierarchy::VicePresident
                        : pos < 0.14 ? Hierarchy::Governor
                        : pos < 0.19 ? Hierarchy::ViceGovernor
                        : pos < 0.30 ? Hierarchy::Senator
                        : pos < 0.62 ? Hierarchy::FederalDeputy
                                     : Hierarchy::StateDeputy;
    t.political_orientation = pick<Orientation, 5>(
        rng, {Orientation::FarLeft, Orientation::Left, Orientation::Centre, Orientation::Right, Orientation::FarRight},
        {0.12, 0.28, 0.25, 0.22, 0.13});
    t.party = kParties[rng.index(kParties.size())];
    t.ethnicity = pick<Ethnicity, 5>(
        rng, {Ethnicity::White, Ethnicity::Brown, Ethnicity::Black, Ethnicity::Asian, Ethnicity::Indigenous},
        {0.45, 0.25, 0.18, 0.06, 0.06});
    t.age_years = 25 + static_cast<int>(rng.index(52));
    t.religion = pick<Religion, 5>(rng,
                                   {Religion::ChristianCatholic, Religion::Evangelical, Religion::AfroBrazilian,
                                    Religion::Jewish, Religion::None},
                                   {0.45, 0.25, 0.1, 0.08, 0.12});
    t.bolsonaro_support = pick<BolsonaroSupport, 3>(
        rng, {BolsonaroSupport::No, BolsonaroSupport::Yes, BolsonaroSupport::Unknown}, {0.5, 0.3, 0.2});
    const auto regions = region_names();
    t.region = std::string(rng.bernoulli(0.6) ? regions[rng.index(8)] : regions[rng.index(regions.size())]);
    t.follower_count = static_cast<std::uint64_t>(std::exp(9.0 + 1.6 * rng.normal()));
    t.own_tweet_count = static_cast<std::uint64_t>(std::exp(7.5 + 0.8 * rng.normal()));
    abuse_logit[i] = -3.0 + 0.35 * std::log10(static_cast<double>(t.follower_count) + 1.0) - 1.2 +
                     (t.political_orientation == Orientation::Left ? 0.3 : 0.0) +
                     (t.hierarchy_level == Hierarchy::StateDeputy ? -0.3 : 0.0) + 0.3 * rng.normal();
    roster.push_back(std::move(t));
  }

  std::vector<Generated> all;
  auto stamp = [&](std::size_t week) {
    return window.start + static_cast<tw::UnixSeconds>(week) * 7 * tw::kSecondsPerDay +
           static_cast<tw::UnixSeconds>(rng.index(7 * tw::kSecondsPerDay));
  };
  for (std::size_t i = 0; i < n_targets; ++i) {
    const double mention_rate = std::exp(0.1 + 0.5 * rng.normal());
    const double own_rate = std::exp(0.8 + 0.3 * rng.normal());
    const double p_abuse = 1.0 / (1.0 + std::exp(-abuse_logit[i]));
    const double spike_prob = rng.uniform(0.02, 0.14);
    bool prev_spike = false;
    for (std::size_t w = 0; w < weeks; ++w) {
      const bool spike = rng.bernoulli(spike_prob);
      const auto base = rng.poisson(mention_rate);
      const auto extra = spike ? rng.poisson(9.0) : 0;
      for (std::uint64_t m = 0; m < base + extra; ++m) {
        const bool abusive = m < base ? rng.bernoulli(p_abuse) : rng.bernoulli(0.65);
        std::vector<std::string> handles{roster[i].handle};
        if (rng.bernoulli(0.08)) {
          const auto other = rng.index(n_targets);
          if (other != i) handles.push_back(roster[other].handle);
        }
        Generated g;
        g.post.timestamp = stamp(w);
        g.post.author = fmt::format("user{}", rng.index(5000));
        g.post.text = mention_text(rng, handles, abusive);
        g.post.mentions = handles;
        std::sort(g.post.mentions.begin(), g.post.mentions.end());
        g.abusive = abusive;
        all.push_back(std::move(g));
      }
      const double rate = prev_spike ? own_rate * 0.35 : own_rate * (spike ? 1.6 : 1.0);
      const auto own = rng.poisson(rate);
      for (std::uint64_t k = 0; k < own; ++k) {
        Generated g;
        g.post.timestamp = stamp(w);
        g.post.author = roster[i].handle;
        g.post.text = words(rng, 4 + rng.index(5));
        g.post.is_own = true;
        all.push_back(std::move(g));
      }
      prev_spike = spike;
    }
  }
  // Last partial days of the window, outside the 47 full weeks.
  for (std::size_t k = 0; k < 5; ++k) {
    Generated g;
    g.post.timestamp = window.end - 1 - static_cast<tw::UnixSeconds>(rng.index(tw::kSecondsPerDay));
    g.post.author = roster[k].handle;
    g.post.text = words(rng, 5);
    g.post.is_own = true;
    all.push_back(std::move(g));
  }
  std::stable_sort(all.begin(), all.end(),
                   [](const Generated& a, const Generated& b) { return a.post.timestamp < b.post.timestamp; });
  for (std::size_t i = 0; i < all.size(); ++i) all[i].post.id = fmt::format("p{:06}", i + 1);

  std::filesystem::create_directories(out);
  {
    std::ofstream f(std::filesystem::path(out) / "posts.jsonl", std::ios::binary);
    std::vector<Post> posts;
    for (const auto& g : all) posts.push_back(g.post);
    write_posts(f, posts);
    // Rows the loader must reject or skip.
    f << "{\"id\": \"bad1\", \"timestamp\": \"2022-13-01T00:00:00Z\", \"author\": \"x\", \"text\": \"t\", "
         "\"mentions\": [\"cand_001\"], \"is_own\": false}\n";
    f << "{not json at all\n";
    f << "{\"id\": \"early\", \"timestamp\": \"2021-12-31T23:59:59Z\", \"author\": \"x\", \"text\": \"t\", "
         "\"mentions\": [\"cand_001\"], \"is_own\": false}\n";
    for (int k = 0; k < 3; ++k) {
      f << fmt::format("{{\"id\": \"rt{}\", \"timestamp\": \"2022-03-0{}T10:00:00Z\", \"author\": \"x\", "
                       "\"text\": \"RT @cand_002 {}\", \"mentions\": [\"cand_002\"], \"is_own\": false, "
                       "\"kind\": \"retweet\"}}\n",
                       k, k + 1, words(rng, 6));
    }
    nlohmann::json dup;
    dup["id"] = all.front().post.id;
    dup["timestamp"] = tw::format_timestamp(all.front().post.timestamp);
    dup["author"] = all.front().post.author;
    dup["text"] = all.front().post.text;
    dup["mentions"] = all.front().post.mentions;
    dup["is_own"] = all.front().post.is_own;
    f << dup.dump() << '\n';
  }
  {
    std::ofstream f(std::filesystem::path(out) / "roster.csv", std::ios::binary);
    write_roster(f, roster);
  }

  std::vector<std::size_t> candidates;
  for (std::size_t i = 0; i < all.size(); ++i)
    if (!all[i].post.is_own) candidates.push_back(i);
  rng.shuffle(std::span<std::size_t>(candidates));
  candidates.resize(std::min(n_labels, candidates.size()));
  std::sort(candidates.begin(), candidates.end());
  {
    std::ofstream a(std::filesystem::path(out) / "labels.csv", std::ios::binary);
    std::ofstream b(std::filesystem::path(out) / "labels_b.csv", std::ios::binary);
    a << "post_id,label,coder\n";
    b << "post_id,label,coder\n";
    std::size_t written_b = 0;
    for (auto i : candidates) {
      const int truth = all[i].abusive ? 1 : 0;
      const int la = rng.bernoulli(0.03) ? 1 - truth : truth;
      a << all[i].post.id << ',' << la << ",A\n";
      if (written_b < 300) {
        const int lb = rng.bernoulli(0.05) ? 1 - truth : truth;
        b << all[i].post.id << ',' << lb << ",B\n";
        ++written_b;
      }
    }
  }
  std::cout << fmt::format("wrote {} posts, {} targets, {} labels to {}\n", all.size(), roster.size(),
                           candidates.size(), out);
  return 0;
}
