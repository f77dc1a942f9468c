// targetwatch: command-line pipeline from raw posts to regression tables and figures.

#include "targetwatch/classifiers.hpp"
#include "targetwatch/common.hpp"
#include "targetwatch/corpus.hpp"
#include "targetwatch/deterrence.hpp"
#include "targetwatch/heterogeneity.hpp"
#include "targetwatch/random.hpp"
#include "targetwatch/report.hpp"
#include "targetwatch/table.hpp"
#include "targetwatch/textprep.hpp"

#include <CLI11.hpp>
#include <fmt/format.h>

#include <algorithm>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <vector>

namespace fs = std::filesystem;
using namespace tw;
using report::RunConfig;

namespace {

constexpr std::array<classify::ModelKind, 7> kAllKinds{
    classify::ModelKind::NBMultinomial, classify::ModelKind::NBGaussian, classify::ModelKind::LogisticRegression,
    classify::ModelKind::LinearSVM,     classify::ModelKind::RandomForest, classify::ModelKind::KNN,
    classify::ModelKind::Stack};

std::string model_file(classify::ModelKind kind) {
  std::string name(classify::to_string(kind));
  std::transform(name.begin(), name.end(), name.begin(), [](unsigned char c) { return std::tolower(c); });
  return "models/" + name + ".json";
}

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw MissingArtifact(path.string());
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

/// One subcommand invocation: holds the directory lock, records input and
/// output hashes, and writes the manifest on success.
class Run {
 public:
  Run(std::string subcommand, const RunConfig& config)
      : config_(config), out_(config.out), lock_(out_) {
    manifest_.subcommand = std::move(subcommand);
    manifest_.config = report::config_entries(config);
  }

  const fs::path& out() const { return out_; }

  /// Path of a prerequisite artifact inside the output directory.
  fs::path artifact(const std::string& rel) {
    const fs::path p = out_ / rel;
    if (!fs::exists(p)) throw MissingArtifact(p.string());
    manifest_.inputs[rel] = sha256_file(p.string());
    return p;
  }

  /// External input file named by a config key.
  fs::path external(const std::string& key, const std::string& path) {
    if (path.empty()) throw ConfigError(fmt::format("'{}' is required (--{} or config file)", key, key));
    if (!fs::exists(path)) throw MissingArtifact(path);
    manifest_.inputs[key] = sha256_file(path);
    return path;
  }

  void write(const std::string& rel, std::string_view content) {
    report::write_atomic(out_ / rel, content);
    manifest_.outputs[rel] = sha256_hex(content);
  }
  void write(const std::string& rel, const Table& table) { write(rel, report::table_to_string(table)); }

  void stat(const std::string& key, const std::string& value) { manifest_.stats[key] = value; }
  void stat(const std::string& key, std::size_t value) { stat(key, std::to_string(value)); }
  void stat(const std::string& key, double value) { stat(key, format_double(value)); }

  void finish() {
    if (!config_.deterministic) manifest_.created = format_timestamp(std::time(nullptr));
    report::write_atomic(out_ / "manifests" / (manifest_.subcommand + ".json"),
                         report::manifest_to_string(manifest_));
  }

 private:
  const RunConfig& config_;
  fs::path out_;
  report::DirectoryLock lock_;
  report::Manifest manifest_;
};

corpus::PostCollection load_clean_posts(Run& run, const RunConfig& c) {
  auto loaded = corpus::load_posts(run.artifact("posts.clean.jsonl"), c.window());
  if (!loaded.rejects.empty()) throw DataError("posts.clean.jsonl contains malformed rows; rerun ingest");
  return std::move(loaded.posts);
}

std::vector<std::uint8_t> load_flags(Run& run, std::span<const corpus::Post> posts) {
  const Table t = read_csv_file(run.artifact("flags.csv"));
  const auto c_id = t.column("post_id"), c_flag = t.column("flag");
  std::map<std::string, std::uint8_t> by_id;
  for (const auto& r : t.rows) by_id[r[c_id]] = static_cast<std::uint8_t>(parse_int(r[c_flag]) != 0);
  std::vector<std::uint8_t> flags;
  flags.reserve(posts.size());
  for (const auto& p : posts) {
    auto it = by_id.find(p.id);
    if (it == by_id.end()) throw DataError("flags.csv has no entry for post " + p.id + "; rerun classify");
    flags.push_back(it->second);
  }
  return flags;
}

/// First label per post id, in file order.
std::vector<corpus::LabeledExample> unique_labels(std::vector<corpus::LabeledExample> labels) {
  std::set<std::string> seen;
  std::vector<corpus::LabeledExample> out;
  for (auto& l : labels)
    if (seen.insert(l.post_id).second) out.push_back(std::move(l));
  return out;
}

classify::Hyperparameters hyperparameters(const RunConfig& c) {
  classify::Hyperparameters hp;
  hp.nb_alpha = c.nb_alpha;
  hp.lr_l2 = c.lr_l2;
  hp.svm_c = c.svm_c;
  hp.rf_trees = c.rf_trees;
  hp.knn_k = c.knn_k;
  hp.stack_folds = c.stack_folds;
  return hp;
}

textprep::Vocabulary load_vocabulary(Run& run) {
  std::ifstream in(run.artifact("vocabulary.tsv"), std::ios::binary);
  return textprep::read_vocabulary(in);
}

// ---- subcommands ---------------------------------------------------------------

void cmd_ingest(const RunConfig& c) {
  Run run("ingest", c);
  const auto posts_path = run.external("posts", c.posts);
  const auto roster_path = run.external("roster", c.roster);
  auto loaded = corpus::load_posts(posts_path, c.window());
  const auto posts = corpus::dedup(loaded.posts);
  const auto roster = corpus::load_roster(roster_path);
  const auto targets = corpus::filter_targets(roster, posts, c.min_mentions);

  std::ostringstream ps;
  corpus::write_posts(ps, posts);
  run.write("posts.clean.jsonl", ps.str());
  std::ostringstream rs;
  corpus::write_roster(rs, targets);
  run.write("targets.csv", rs.str());
  Table rejects;
  rejects.header = {"line", "reason"};
  for (const auto& r : loaded.rejects) rejects.rows.push_back({std::to_string(r.line), r.reason});
  run.write("ingest_rejects.csv", rejects);

  std::size_t own = 0;
  for (const auto& p : posts) own += p.is_own;
  run.stat("posts_kept", posts.size());
  run.stat("own_posts", own);
  run.stat("mention_posts", posts.size() - own);
  run.stat("rows_rejected", loaded.rejects.size());
  run.stat("retweets_skipped", loaded.skipped_retweets);
  run.stat("duplicates_removed", loaded.posts.size() - posts.size());
  run.stat("roster_targets", roster.size());
  run.stat("targets_kept", targets.size());
  run.finish();
  fmt::print("ingest: {} posts kept ({} own, {} mentions), {} rejected, {} retweets skipped, {} duplicates\n",
             posts.size(), own, posts.size() - own, loaded.rejects.size(), loaded.skipped_retweets,
             loaded.posts.size() - posts.size());
  fmt::print("ingest: {} of {} targets have at least {} mentions\n", targets.size(), roster.size(), c.min_mentions);
}

void cmd_sample(const RunConfig& c) {
  Run run("sample", c);
  const auto posts = load_clean_posts(run, c);
  corpus::SampleOptions opt;
  opt.n = c.sample_n;
  opt.seed = c.require_seed();
  const auto result = corpus::sample_for_annotation(posts, opt);
  Table t;
  t.header = {"post_id", "timestamp", "text"};
  for (const auto& p : result.posts) t.rows.push_back({p.id, format_timestamp(p.timestamp), p.text});
  run.write("sample.csv", t);
  run.stat("sampled", result.posts.size());
  run.stat("per_target_cap", result.per_target_cap);
  run.stat("cap_overflow", result.cap_overflow);
  run.finish();
  fmt::print("sample: {} posts drawn (per-target cap {}, {} admitted past the cap)\n", result.posts.size(),
             result.per_target_cap, result.cap_overflow);
}

void cmd_kappa(const RunConfig& c) {
  Run run("kappa", c);
  const auto a = unique_labels(corpus::load_labels(run.external("labels", c.labels)));
  const auto b = unique_labels(corpus::load_labels(run.external("labels_b", c.labels_b)));
  std::map<std::string, int> by_id;
  for (const auto& l : b) by_id[l.post_id] = l.label;
  std::vector<int> la, lb;
  for (const auto& l : a) {
    if (auto it = by_id.find(l.post_id); it != by_id.end()) {
      la.push_back(l.label);
      lb.push_back(it->second);
    }
  }
  if (la.empty()) throw DataError("the two label files share no post ids");
  const double kappa = corpus::cohen_kappa(la, lb);
  std::size_t agree = 0;
  for (std::size_t i = 0; i < la.size(); ++i) agree += la[i] == lb[i];
  Table t;
  t.header = {"n_common", "observed_agreement", "kappa"};
  t.rows.push_back({std::to_string(la.size()), format_double(double(agree) / double(la.size())), format_double(kappa)});
  run.write("kappa.csv", t);
  run.stat("n_common", la.size());
  run.stat("kappa", kappa);
  run.finish();
  fmt::print("{}\n", format_double(kappa));
}

struct LabeledCorpus {
  std::vector<std::string> ids;
  std::vector<std::string> texts;
  std::vector<int> labels;
  std::size_t unmatched = 0;
};

LabeledCorpus join_labels(std::span<const corpus::Post> posts, const std::vector<corpus::LabeledExample>& labels) {
  std::map<std::string, const corpus::Post*> by_id;
  for (const auto& p : posts) by_id[p.id] = &p;
  LabeledCorpus lc;
  for (const auto& l : labels) {
    auto it = by_id.find(l.post_id);
    if (it == by_id.end()) {
      ++lc.unmatched;
      continue;
    }
    lc.ids.push_back(l.post_id);
    lc.texts.push_back(it->second->text);
    lc.labels.push_back(l.label);
  }
  if (lc.ids.empty()) throw DataError("no labeled post id matches the ingested corpus");
  return lc;
}

std::vector<std::string_view> views(const std::vector<std::string>& v) { return {v.begin(), v.end()}; }

textprep::VectorizeOptions text_options(const RunConfig& c) {
  textprep::VectorizeOptions o;
  o.clean.fold_accents = c.fold_accents;
  return o;
}

void cmd_train(const RunConfig& c) {
  Run run("train", c);
  const auto posts = load_clean_posts(run, c);
  const auto labels = unique_labels(corpus::load_labels(run.external("labels", c.labels)));
  const auto lc = join_labels(posts, labels);
  const std::uint64_t seed = c.require_seed();

  const auto split = classify::stratified_split(lc.labels, c.test_fraction, seed);
  std::vector<textprep::Document> docs;
  for (auto i : split.train) docs.push_back({lc.texts[i], lc.labels[i]});
  const auto vocab = textprep::keyness_filter(textprep::build_vocabulary(docs, text_options(c).clean), c.keyness_p);
  if (vocab.size() == 0) throw DataError("keyness filter kept no words; raise keyness_p");

  const auto tv = views(lc.texts);
  const auto x = textprep::vectorize(lc.ids, tv, vocab, text_options(c));
  const auto x_train = x.select_rows(split.train);
  std::vector<int> y_train;
  for (auto i : split.train) y_train.push_back(lc.labels[i]);

  std::ostringstream vs;
  textprep::write_vocabulary(vs, vocab);
  run.write("vocabulary.tsv", vs.str());
  Table st;
  st.header = {"post_id", "label", "set"};
  std::vector<char> is_test(lc.ids.size(), 0);
  for (auto i : split.test) is_test[i] = 1;
  for (std::size_t i = 0; i < lc.ids.size(); ++i)
    st.rows.push_back({lc.ids[i], std::to_string(lc.labels[i]), is_test[i] ? "test" : "train"});
  run.write("split.csv", st);

  const auto hp = hyperparameters(c);
  for (std::size_t k = 0; k < kAllKinds.size(); ++k) {
    classify::ModelSpec spec{kAllKinds[k], hp, derive_seed(seed, k)};
    const auto model = classify::train(spec, x_train, y_train, c.jobs);
    std::ostringstream ms;
    classify::save_model(ms, model);
    run.write(model_file(kAllKinds[k]), ms.str());
    if (!model.converged) fmt::print(stderr, "train: {} did not converge: {}\n", classify::to_string(kAllKinds[k]), model.warning);
  }
  std::size_t pos = 0;
  for (auto i : split.test) pos += lc.labels[i] == 1;
  run.stat("labeled", lc.ids.size());
  run.stat("labels_unmatched", lc.unmatched);
  run.stat("train_rows", split.train.size());
  run.stat("test_rows", split.test.size());
  run.stat("test_positives", pos);
  run.stat("vocabulary_size", vocab.size());
  run.finish();
  fmt::print("train: {} labeled posts, {} train / {} test ({} positive), {} keyness words, {} models\n",
             lc.ids.size(), split.train.size(), split.test.size(), pos, vocab.size(), kAllKinds.size());
}

void cmd_evaluate(const RunConfig& c) {
  Run run("evaluate", c);
  const auto posts = load_clean_posts(run, c);
  const auto vocab = load_vocabulary(run);
  const Table split = read_csv_file(run.artifact("split.csv"));
  std::map<std::string, const corpus::Post*> by_id;
  for (const auto& p : posts) by_id[p.id] = &p;
  std::vector<std::string> ids, texts;
  std::vector<int> y;
  const auto c_id = split.column("post_id"), c_label = split.column("label"), c_set = split.column("set");
  for (const auto& r : split.rows) {
    if (r[c_set] != "test") continue;
    auto it = by_id.find(r[c_id]);
    if (it == by_id.end()) throw DataError("split.csv refers to unknown post " + r[c_id]);
    ids.push_back(r[c_id]);
    texts.push_back(it->second->text);
    y.push_back(static_cast<int>(parse_int(r[c_label])));
  }
  const auto tv = views(texts);
  const auto x = textprep::vectorize(ids, tv, vocab, text_options(c));
  Table t;
  t.header = {"model", "accuracy", "precision_0", "recall_0", "f1_0", "precision_1", "recall_1",
              "f1_1",  "f1_weighted", "tp", "tn", "fp", "fn"};
  for (auto kind : kAllKinds) {
    const auto model = classify::load_model_file(run.artifact(model_file(kind)));
    const auto r = classify::evaluate(model, x, y, c.jobs);
    t.rows.push_back({std::string(classify::to_string(kind)), format_double(r.accuracy), format_double(r.precision0),
                      format_double(r.recall0), format_double(r.f1_class0), format_double(r.precision1),
                      format_double(r.recall1), format_double(r.f1_class1), format_double(r.f1_weighted),
                      std::to_string(r.tp), std::to_string(r.tn), std::to_string(r.fp), std::to_string(r.fn)});
    fmt::print("evaluate: {:<6} accuracy {:.3f}  f1_1 {:.3f}  f1_0 {:.3f}  weighted f1 {:.3f}\n",
               classify::to_string(kind), r.accuracy, r.f1_class1, r.f1_class0, r.f1_weighted);
  }
  run.write("evaluation.csv", t);
  run.stat("test_rows", ids.size());
  run.finish();
}

void cmd_classify(const RunConfig& c) {
  Run run("classify", c);
  const auto model = classify::load_model_file(run.artifact(model_file(classify::ModelKind::Stack)));
  const auto vocab = load_vocabulary(run);
  const auto posts = load_clean_posts(run, c);
  const auto flags = classify::classify_corpus(model, posts, vocab, text_options(c), c.jobs);
  Table t;
  t.header = {"post_id", "flag"};
  std::size_t mentions = 0, flagged = 0;
  for (std::size_t i = 0; i < posts.size(); ++i) {
    t.rows.push_back({posts[i].id, std::to_string(int(flags[i]))});
    if (!posts[i].is_own) {
      ++mentions;
      flagged += flags[i];
    }
  }
  run.write("flags.csv", t);
  const double prevalence = mentions ? double(flagged) / double(mentions) : 0.0;
  run.stat("mention_posts", mentions);
  run.stat("flagged", flagged);
  run.stat("prevalence", prevalence);
  run.finish();
  fmt::print("classify: {} of {} mention posts flagged ({:.2f}%)\n", flagged, mentions, 100.0 * prevalence);
}

std::map<std::string, std::size_t> flagged_mentions(std::span<const corpus::Post> posts,
                                                    std::span<const std::uint8_t> flags) {
  std::map<std::string, std::size_t> out;
  for (std::size_t i = 0; i < posts.size(); ++i) {
    if (posts[i].is_own || !flags[i]) continue;
    for (const auto& m : posts[i].mentions) ++out[m];
  }
  return out;
}

corpus::TargetRoster load_targets(Run& run) { return corpus::load_roster(run.artifact("targets.csv")); }

void cmd_heterogeneity(const RunConfig& c) {
  Run run("heterogeneity", c);
  const auto roster = load_targets(run);
  const auto posts = load_clean_posts(run, c);
  const auto flags = load_flags(run, posts);
  const auto mentions = corpus::count_mentions(posts);
  const auto miso = flagged_mentions(posts, flags);

  heterogeneity::DesignOptions dopt;
  dopt.top_k = c.top_k;
  const auto design = heterogeneity::build_design_matrix(roster, mentions, miso, dopt);
  const auto fit = heterogeneity::fit_poisson_glm(design.x, design.y);
  run.write("regression.csv", heterogeneity::regression_table(fit));

  Table ratios;
  ratios.header = {"handle", "mentions", "misogynistic_mentions", "ratio", "hierarchy_level", "political_orientation",
                   "ethnicity", "religion", "bolsonaro_support", "age_group"};
  for (const auto& t : roster) {
    const auto m = mentions.count(t.handle) ? mentions.at(t.handle) : 0;
    const auto f = miso.count(t.handle) ? miso.at(t.handle) : 0;
    ratios.rows.push_back({t.handle, std::to_string(m), std::to_string(f),
                           m ? format_double(heterogeneity::misogyny_ratio(f, m)) : std::string(),
                           std::string(corpus::to_string(t.hierarchy_level)),
                           std::string(corpus::to_string(t.political_orientation)),
                           std::string(corpus::to_string(t.ethnicity)), std::string(corpus::to_string(t.religion)),
                           std::string(corpus::to_string(t.bolsonaro_support)), heterogeneity::age_group(t.age_years)});
  }
  run.write("target_ratios.csv", ratios);
  std::string dropped;
  for (const auto& d : design.x.dropped_columns) dropped += (dropped.empty() ? "" : "; ") + d;
  run.stat("targets", roster.size());
  run.stat("coefficients", fit.names.size());
  run.stat("iterations", std::to_string(fit.iterations));
  run.stat("converged", fit.converged ? "true" : "false");
  run.stat("pseudo_r2_cox_snell", fit.pseudo_r2_cox_snell);
  run.stat("deviance", fit.deviance);
  run.stat("dropped_columns", dropped);
  run.finish();
  fmt::print("heterogeneity: Poisson GLM on {} targets, {} coefficients, {} iterations, pseudo R2 {:.3f}\n",
             roster.size(), fit.names.size(), fit.iterations, fit.pseudo_r2_cox_snell);
  if (!dropped.empty()) fmt::print("heterogeneity: constant columns dropped: {}\n", dropped);
}

void cmd_deterrence(const RunConfig& c) {
  Run run("deterrence", c);
  const auto roster = load_targets(run);
  const auto posts = load_clean_posts(run, c);
  const auto flags = load_flags(run, posts);
  const auto series = deterrence::weekly_aggregate(posts, flags, roster, c.window(), c.week_mode_value());
  deterrence::DeterrenceOptions opt;
  opt.cluster_k = c.cluster_k;
  opt.min_weekly_miso = c.min_weekly_miso;
  opt.selection = c.selection_mode();
  const auto a = deterrence::analyze(series, opt, c.jobs);

  Table pts;
  pts.header = {"target", "week", "x", "y", "z_x", "z_y", "outlier"};
  for (const auto& t : a.targets) {
    std::vector<char> outl(t.points.size(), 0);
    for (auto i : t.partition.outliers) outl[i] = 1;
    for (std::size_t i = 0; i < t.points.size(); ++i) {
      const auto& p = t.points[i];
      const bool z = !t.standardized.empty();
      pts.rows.push_back({p.target, std::to_string(p.week), format_double(p.x), format_double(p.y),
                          z ? format_double(t.standardized[i].x) : std::string(),
                          z ? format_double(t.standardized[i].y) : std::string(), outl[i] ? "1" : "0"});
    }
  }
  run.write("lag_points.csv", pts);

  Table fit;
  fit.header = {"n_points", "n_targets", "beta0", "beta1", "se_beta0", "se_beta1", "ci95_low", "ci95_high", "p_beta1", "r2"};
  if (a.pooled_fitted) {
    const auto& f = a.pooled;
    fit.rows.push_back({std::to_string(f.n_points), std::to_string(a.targets_selected), format_double(f.beta0),
                        format_double(f.beta1), format_double(f.se_beta0), format_double(f.se_beta1),
                        format_double(f.ci95_beta1.first), format_double(f.ci95_beta1.second),
                        format_double(f.p_beta1), format_double(f.r2)});
  }
  run.write("deterrence_fit.csv", fit);

  Table slopes;
  slopes.header = {"target", "n_outliers", "fitted", "beta1", "reason", "fallback_used"};
  for (std::size_t i = 0; i < a.slopes.targets.size(); ++i) {
    const auto& s = a.slopes.targets[i];
    slopes.rows.push_back({s.target, std::to_string(s.n_outliers), s.fitted ? "1" : "0",
                           s.fitted ? format_double(s.beta1) : std::string(), s.reason,
                           a.targets[i].partition.fallback_used ? "1" : "0"});
  }
  run.write("target_slopes.csv", slopes);

  Table sweep;
  sweep.header = {"k", "targets_compared", "mean_jaccard_vs_default"};
  for (const auto& r : a.k_sweep)
    sweep.rows.push_back({std::to_string(r.k), std::to_string(r.targets_compared), format_double(r.mean_jaccard)});
  run.write("k_stability.csv", sweep);

  run.stat("pairs_all", a.pairs_all);
  run.stat("targets_selected", a.targets_selected);
  run.stat("pairs_selected", a.pairs_selected);
  run.stat("outlier_pairs", a.outlier_pairs);
  run.stat("fraction_negative_slopes", a.slopes.fraction_negative);
  run.stat("targets_fitted", a.slopes.n_fitted);
  run.finish();
  fmt::print("deterrence: {} targets selected, {} of {} lag pairs are outliers\n", a.targets_selected,
             a.outlier_pairs, a.pairs_selected);
  if (a.pooled_fitted)
    fmt::print("deterrence: pooled beta1 {:.4f} (se {:.4f}, 95% CI {:.3f} to {:.3f}), R2 {:.3f}, n {}\n",
               a.pooled.beta1, a.pooled.se_beta1, a.pooled.ci95_beta1.first, a.pooled.ci95_beta1.second, a.pooled.r2,
               a.pooled.n_points);
  else
    fmt::print("deterrence: pooled regression not fitted (too few outlier points)\n");
  fmt::print("deterrence: {:.1f}% of {} fitted targets have a negative slope\n", 100.0 * a.slopes.fraction_negative,
             a.slopes.n_fitted);
}

void cmd_report(const RunConfig& c) {
  Run run("report", c);
  const auto posts = load_clean_posts(run, c);
  const auto flags = load_flags(run, posts);
  const auto months = report::monthly_series(posts, flags, c.window());
  run.write("monthly_series.csv", report::monthly_table(months));
  auto emit = [&](const report::FigureSpec& f) { run.write(f.output.string(), report::render_svg(f)); };
  emit(report::emit_monthly_series(months, "figures/monthly_series.svg"));

  const Table pts = read_csv_file(run.artifact("lag_points.csv"));
  std::vector<report::ScatterPoint> scatter;
  const auto c_zx = pts.column("z_x"), c_zy = pts.column("z_y"), c_out = pts.column("outlier");
  for (const auto& r : pts.rows) {
    if (r[c_zx].empty()) continue;
    scatter.push_back({parse_double(r[c_zx]), parse_double(r[c_zy]), r[c_out] == "1"});
  }
  const Table fit_t = read_csv_file(run.artifact("deterrence_fit.csv"));
  std::optional<deterrence::DeterrenceFit> fit;
  if (!fit_t.rows.empty()) {
    deterrence::DeterrenceFit f;
    f.beta0 = parse_double(fit_t.rows[0][fit_t.column("beta0")]);
    f.beta1 = parse_double(fit_t.rows[0][fit_t.column("beta1")]);
    fit = f;
  }
  emit(report::emit_scatter_fit(scatter, fit, "figures/scatter_fit.svg"));

  const Table ratios = read_csv_file(run.artifact("target_ratios.csv"));
  report::FigureSpec hist;
  hist.kind = report::FigureKind::HistogramMentions;
  hist.title = "Misogynistic mentions per target";
  hist.output = "figures/mentions_histogram.svg";
  report::HistogramPayload hp;
  for (const auto& r : ratios.rows) hp.values.push_back(parse_double(r[ratios.column("misogynistic_mentions")]));
  hist.payload = hp;
  emit(hist);

  for (const std::string col : {"hierarchy_level", "political_orientation", "ethnicity", "religion",
                                 "bolsonaro_support", "age_group"}) {
    std::map<std::string, std::vector<double>> groups;
    for (const auto& r : ratios.rows) {
      const auto& v = r[ratios.column("ratio")];
      if (!v.empty()) groups[r[ratios.column(col)]].push_back(parse_double(v));
    }
    if (groups.empty()) continue;
    report::FigureSpec f;
    f.kind = report::FigureKind::BoxplotRatio;
    f.title = "Misogynistic share of mentions by " + col;
    f.output = "figures/ratio_by_" + col + ".svg";
    report::BoxplotPayload bp;
    bp.characteristic = col;
    for (auto& [label, values] : groups) bp.groups.push_back({label, std::move(values)});
    f.payload = std::move(bp);
    emit(f);
  }
  run.stat("months", months.size());
  run.stat("scatter_points", scatter.size());
  run.finish();
  fmt::print("report: {} months, {} scatter points, figures in {}\n", months.size(), scatter.size(),
             (run.out() / "figures").string());
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"targetwatch: misogynistic-mention classification and target analysis pipeline"};
  app.require_subcommand(1);
  app.fallthrough();
  app.set_version_flag("--version", std::string(kVersion));

  std::string config_path;
  app.add_option("--config", config_path, "flat key = value config file; flags override it");
  bool deterministic = false;
  app.add_flag("--deterministic", deterministic, "omit timestamps from manifests");

  static const std::vector<std::pair<std::string, std::string>> kKeys{
      {"posts", "raw posts JSONL"},
      {"roster", "target roster CSV"},
      {"labels", "coded labels CSV"},
      {"labels_b", "second coder's labels CSV"},
      {"out", "output directory"},
      {"window_start", "first day of the study window (YYYY-MM-DD)"},
      {"window_end", "last day of the study window, inclusive"},
      {"min_mentions", "minimum mentions for a target to be kept"},
      {"keyness_p", "keyness p-value threshold"},
      {"fold_accents", "strip diacritics before counting words (true/false)"},
      {"test_fraction", "held-out share of the coded set"},
      {"min_weekly_miso", "weekly misogynistic-mention threshold for deterrence"},
      {"cluster_k", "clusters cut from the dendrogram"},
      {"sample_n", "posts drawn for annotation"},
      {"top_k", "regions and parties given their own dummy"},
      {"selection", "deterrence target selection: any_week, mean_weekly, every_week"},
      {"week_mode", "week construction: anchored or iso"},
      {"nb_alpha", "multinomial naive Bayes smoothing"},
      {"lr_l2", "logistic regression L2 penalty"},
      {"svm_c", "linear SVM cost"},
      {"rf_trees", "random forest size"},
      {"knn_k", "neighbours for KNN"},
      {"stack_folds", "out-of-fold splits for stacking"},
      {"seed", "random seed"},
      {"jobs", "worker threads"},
  };
  std::map<std::string, std::string> flag_values;
  std::vector<std::pair<std::string, CLI::Option*>> flag_opts;
  for (const auto& [key, help] : kKeys) flag_opts.emplace_back(key, app.add_option("--" + key, flag_values[key], help));

  struct Sub {
    const char* name;
    const char* help;
    void (*run)(const RunConfig&);
  };
  const std::vector<Sub> subs{
      {"ingest", "load and clean posts, filter the roster", cmd_ingest},
      {"sample", "draw posts for manual annotation", cmd_sample},
      {"kappa", "inter-coder agreement of two label files", cmd_kappa},
      {"train", "keyness vocabulary and all classifiers", cmd_train},
      {"evaluate", "held-out metrics for every classifier", cmd_evaluate},
      {"classify", "flag the corpus with the stacked model", cmd_classify},
      {"heterogeneity", "Poisson regression of mentions on target traits", cmd_heterogeneity},
      {"deterrence", "lagged outlier regression of own posts on mentions", cmd_deterrence},
      {"report", "monthly table and SVG figures", cmd_report},
  };
  for (const auto& s : subs) app.add_subcommand(s.name, s.help);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  try {
    RunConfig config;
    if (!config_path.empty())
      for (const auto& [k, v] : report::read_config_file(config_path)) report::set_config_value(config, k, v);
    for (const auto& [key, opt] : flag_opts)
      if (opt->count() > 0) report::set_config_value(config, key, flag_values[key]);
    if (deterministic) config.deterministic = true;
    report::validate(config);
    for (const auto& s : subs)
      if (app.got_subcommand(s.name)) s.run(config);
    return 0;
  } catch (const ConfigError& e) {
    fmt::print(stderr, "error: {}\n", e.what());
    return 1;
  } catch (const MissingArtifact& e) {
    fmt::print(stderr, "error: {}\n", e.what());
    return 2;
  } catch (const DataError& e) {
    fmt::print(stderr, "error: {}\n", e.what());
    return 3;
  } catch (const std::exception& e) {
    fmt::print(stderr, "error: {}\n", e.what());
    return 3;
  }
}
