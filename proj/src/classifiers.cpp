#include "classifiers_internal.hpp"

#include "targetwatch/common.hpp"
#include "targetwatch/parallel.hpp"
#include "targetwatch/random.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include <fmt/format.h>

namespace tw::classify {

namespace {

constexpr std::array<std::string_view, 7> kKindNames{"NB_M", "NB_G", "LR", "SVC_L", "RF", "KNN", "Stack"};

void check_training_input(const FeatureMatrix& x, std::span<const int> y) {
  if (x.rows() != y.size()) throw DataError("feature rows and labels differ in length");
  std::size_t pos = 0;
  for (int label : y) {
    if (label != 0 && label != 1) throw DataError("labels must be 0 or 1");
    pos += label == 1;
  }
  if (pos == 0 || pos == y.size()) throw DataError("training data must contain both classes");
}

void check_fingerprint(const TrainedModel& model, const FeatureMatrix& x) {
  if (model.fingerprint != x.fingerprint || model.n_features != x.cols) {
    throw DataError(fmt::format("feature columns do not match the model vocabulary ({} vs {})",
                                x.fingerprint.substr(0, 12), model.fingerprint.substr(0, 12)));
  }
}

}  // namespace

std::string_view to_string(ModelKind kind) { return kKindNames[static_cast<std::size_t>(kind)]; }

ModelKind parse_model_kind(std::string_view name) {
  for (std::size_t i = 0; i < kKindNames.size(); ++i) {
    if (kKindNames[i] == name) return static_cast<ModelKind>(i);
  }
  throw ConfigError(fmt::format("unknown model kind '{}'", name));
}

TrainedModel train(const ModelSpec& spec, const FeatureMatrix& x, std::span<const int> y, unsigned jobs) {
  if (spec.kind == ModelKind::Stack) return train_stack(spec, x, y, spec.hp.stack_folds, jobs);
  check_training_input(x, y);
  TrainedModel model;
  model.spec = spec;
  model.fingerprint = x.fingerprint;
  model.n_features = x.cols;
  const Hyperparameters& hp = spec.hp;
  switch (spec.kind) {
    case ModelKind::NBMultinomial:
      model.params = detail::fit_nb_multinomial(x, y, hp.nb_alpha);
      break;
    case ModelKind::NBGaussian:
      model.params = detail::fit_nb_gaussian(x, y, hp.nbg_var_smoothing);
      break;
    case ModelKind::LogisticRegression: {
      auto fit = detail::fit_logistic(x, y, hp.lr_l2, hp.lr_tolerance, hp.lr_max_iter);
      model.params = std::move(fit.params);
      model.converged = fit.converged;
      if (!fit.converged) model.warning = fmt::format("LR did not converge in {} iterations", hp.lr_max_iter);
      break;
    }
    case ModelKind::LinearSVM: {
      auto fit = detail::fit_linear_svm(x, y, hp.svm_c, hp.svm_tolerance, hp.svm_max_iter, spec.seed);
      model.params = std::move(fit.params);
      model.converged = fit.converged;
      if (!fit.converged) model.warning = fmt::format("SVC_L did not converge in {} epochs", hp.svm_max_iter);
      break;
    }
    case ModelKind::RandomForest:
      model.params = detail::fit_forest(x, y, hp, spec.seed, jobs);
      break;
    case ModelKind::KNN:
      if (hp.knn_k < 1) throw ConfigError("KNN k must be at least 1");
      model.params = detail::fit_knn(x, y);
      break;
    case ModelKind::Stack:
      break;
  }
  return model;
}

namespace {

std::vector<double> raw_score(const TrainedModel& model, const FeatureMatrix& x, unsigned jobs);

std::vector<double> meta_features(const StackParams& stack, const FeatureMatrix& x, unsigned jobs,
                                  std::size_t& rows_out) {
  const std::size_t n = x.rows();
  const std::size_t m = stack.bases.size();
  std::vector<std::vector<double>> cols(m);
  for (std::size_t b = 0; b < m; ++b) cols[b] = raw_score(stack.bases[b], x, jobs);
  std::vector<double> out(n * m);
  for (std::size_t r = 0; r < n; ++r) {
    for (std::size_t b = 0; b < m; ++b) out[r * m + b] = (cols[b][r] - stack.score_mean[b]) / stack.score_sd[b];
  }
  rows_out = n;
  return out;
}

FeatureMatrix dense_to_matrix(const std::vector<double>& dense, std::size_t rows, std::size_t cols) {
  FeatureMatrix m;
  m.cols = cols;
  for (std::size_t r = 0; r < rows; ++r) {
    for (std::size_t c = 0; c < cols; ++c) {
      const double v = dense[r * cols + c];
      if (v != 0.0) {
        m.col_idx.push_back(static_cast<std::uint32_t>(c));
        m.values.push_back(v);
      }
    }
    m.row_ptr.push_back(m.col_idx.size());
  }
  return m;
}

std::vector<double> raw_score(const TrainedModel& model, const FeatureMatrix& x, unsigned jobs) {
  return std::visit(
      [&](const auto& p) -> std::vector<double> {
        using P = std::decay_t<decltype(p)>;
        if constexpr (std::is_same_v<P, NBMultinomialParams>) {
          return detail::score_nb_multinomial(p, x);
        } else if constexpr (std::is_same_v<P, NBGaussianParams>) {
          return detail::score_nb_gaussian(p, x);
        } else if constexpr (std::is_same_v<P, LinearParams>) {
          auto z = detail::linear_margin(p, x);
          if (model.spec.kind == ModelKind::LogisticRegression) {
            for (double& v : z) v = detail::sigmoid(v);
          }
          return z;
        } else if constexpr (std::is_same_v<P, ForestParams>) {
          return detail::score_forest(p, x);
        } else if constexpr (std::is_same_v<P, KnnParams>) {
          return detail::score_knn(p, x, model.spec.hp.knn_k, jobs);
        } else {
          std::size_t rows = 0;
          auto meta = meta_features(p, x, jobs, rows);
          auto z = detail::linear_margin(p.meta, dense_to_matrix(meta, rows, p.bases.size()));
          for (double& v : z) v = detail::sigmoid(v);
          return z;
        }
      },
      model.params);
}

// Stratified fold assignment: classes shuffled independently, then dealt round-robin.
std::vector<int> stratified_folds(std::span<const int> y, int folds, std::uint64_t seed) {
  std::vector<int> fold(y.size(), 0);
  Rng rng(derive_seed(seed, 0xF01D5ULL));
  for (int cls = 0; cls < 2; ++cls) {
    std::vector<std::size_t> idx;
    for (std::size_t i = 0; i < y.size(); ++i) {
      if (y[i] == cls) idx.push_back(i);
    }
    rng.shuffle(std::span<std::size_t>(idx));
    for (std::size_t k = 0; k < idx.size(); ++k) fold[idx[k]] = static_cast<int>(k % static_cast<std::size_t>(folds));
  }
  return fold;
}

}  // namespace

TrainedModel train_stack(const ModelSpec& spec, const FeatureMatrix& x, std::span<const int> y, int folds,
                         unsigned jobs) {
  if (folds < 2) throw ConfigError("stacking needs at least 2 folds");
  check_training_input(x, y);
  std::array<std::size_t, 2> class_n{};
  for (int label : y) ++class_n[label == 1];
  if (class_n[0] < static_cast<std::size_t>(folds) || class_n[1] < static_cast<std::size_t>(folds))
    throw DataError(fmt::format("each class needs at least {} examples for {}-fold stacking", folds, folds));

  const std::size_t n = x.rows();
  const std::size_t m = kStackBases.size();
  const std::vector<int> fold = stratified_folds(y, folds, spec.seed);

  auto base_spec = [&](std::size_t b, std::uint64_t stream) {
    ModelSpec s;
    s.kind = kStackBases[b];
    s.hp = spec.hp;
    s.seed = derive_seed(spec.seed, stream);
    return s;
  };

  // Out-of-fold base scores; one task per (fold, base) pair.
  std::vector<double> oof(n * m, 0.0);
  std::vector<std::string> warnings(static_cast<std::size_t>(folds) * m);
  const std::size_t tasks = static_cast<std::size_t>(folds) * m;
  parallel_for(tasks, jobs, [&](std::size_t task) {
    const int f = static_cast<int>(task / m);
    const std::size_t b = task % m;
    std::vector<std::size_t> tr, te;
    for (std::size_t i = 0; i < n; ++i) (fold[i] == f ? te : tr).push_back(i);
    const FeatureMatrix x_tr = x.select_rows(tr);
    const FeatureMatrix x_te = x.select_rows(te);
    std::vector<int> y_tr;
    y_tr.reserve(tr.size());
    for (std::size_t i : tr) y_tr.push_back(y[i]);
    const TrainedModel base = train(base_spec(b, 1000 + task), x_tr, y_tr, 1);
    const auto s = raw_score(base, x_te, 1);
    for (std::size_t k = 0; k < te.size(); ++k) oof[te[k] * m + b] = s[k];
    if (!base.converged) warnings[task] = base.warning;
  });

  StackParams stack;
  stack.score_mean.assign(m, 0.0);
  stack.score_sd.assign(m, 1.0);
  for (std::size_t b = 0; b < m; ++b) {
    double mean = 0.0;
    for (std::size_t r = 0; r < n; ++r) mean += oof[r * m + b];
    mean /= static_cast<double>(n);
    double ss = 0.0;
    for (std::size_t r = 0; r < n; ++r) ss += (oof[r * m + b] - mean) * (oof[r * m + b] - mean);
    const double sd = std::sqrt(ss / static_cast<double>(n));
    stack.score_mean[b] = mean;
    stack.score_sd[b] = sd > 1e-12 ? sd : 1.0;
    for (std::size_t r = 0; r < n; ++r) oof[r * m + b] = (oof[r * m + b] - mean) / stack.score_sd[b];
  }
  const auto meta_fit =
      detail::fit_logistic(dense_to_matrix(oof, n, m), y, spec.hp.lr_l2, spec.hp.lr_tolerance, spec.hp.lr_max_iter);
  stack.meta = meta_fit.params;

  stack.bases.resize(m);
  for (std::size_t b = 0; b < m; ++b) stack.bases[b] = train(base_spec(b, b), x, y, jobs);

  TrainedModel model;
  model.spec = spec;
  model.spec.kind = ModelKind::Stack;
  model.spec.hp.stack_folds = folds;
  model.fingerprint = x.fingerprint;
  model.n_features = x.cols;
  model.converged = meta_fit.converged;
  std::vector<std::string> notes;
  if (!meta_fit.converged) notes.push_back("meta-learner did not converge");
  for (const auto& base : stack.bases) {
    if (!base.converged) {
      model.converged = false;
      notes.push_back(base.warning);
    }
  }
  for (const auto& w : warnings) {
    if (!w.empty()) notes.push_back("out-of-fold " + w);
  }
  for (std::size_t i = 0; i < notes.size(); ++i) model.warning += (i ? "; " : "") + notes[i];
  model.params = std::move(stack);
  return model;
}

std::vector<double> score(const TrainedModel& model, const FeatureMatrix& x, unsigned jobs) {
  check_fingerprint(model, x);
  return raw_score(model, x, jobs);
}

std::vector<int> predict(const TrainedModel& model, const FeatureMatrix& x, unsigned jobs) {
  const auto s = score(model, x, jobs);
  const double threshold = model.spec.kind == ModelKind::LinearSVM ? 0.0 : 0.5;
  std::vector<int> out(s.size());
  for (std::size_t i = 0; i < s.size(); ++i) out[i] = s[i] > threshold ? 1 : 0;
  return out;
}

std::vector<double> logistic_gradient(const LinearParams& params, const FeatureMatrix& x, std::span<const int> y,
                                      double l2) {
  std::vector<double> g(x.cols + 1, 0.0);
  const auto z = detail::linear_margin(params, x);
  for (std::size_t r = 0; r < x.rows(); ++r) {
    const double resid = detail::sigmoid(z[r]) - (y[r] == 1 ? 1.0 : 0.0);
    for (std::size_t k = x.row_ptr[r]; k < x.row_ptr[r + 1]; ++k) g[x.col_idx[k]] += resid * x.values[k];
    g[x.cols] += resid;
  }
  for (std::size_t j = 0; j < x.cols; ++j) g[j] += l2 * params.weights[j];
  return g;
}

// ---- split & evaluation ------------------------------------------------------------

Split stratified_split(std::span<const int> y, double test_fraction, std::uint64_t seed) {
  if (!(test_fraction > 0.0 && test_fraction < 1.0)) throw ConfigError("test_fraction must lie in (0, 1)");
  std::array<std::vector<std::size_t>, 2> members;
  for (std::size_t i = 0; i < y.size(); ++i) {
    if (y[i] != 0 && y[i] != 1) throw DataError("labels must be 0 or 1");
    members[y[i]].push_back(i);
  }
  for (int c = 0; c < 2; ++c) {
    if (members[c].size() < 2) throw DataError(fmt::format("class {} has fewer than 2 members", c));
  }
  // Largest remainder: the total test size is round(N * fraction).
  std::array<std::size_t, 2> quota{};
  std::array<double, 2> remainder{};
  std::size_t assigned = 0;
  for (int c = 0; c < 2; ++c) {
    const double exact = static_cast<double>(members[c].size()) * test_fraction;
    quota[c] = static_cast<std::size_t>(std::floor(exact));
    remainder[c] = exact - static_cast<double>(quota[c]);
    assigned += quota[c];
  }
  const auto total = static_cast<std::size_t>(std::llround(static_cast<double>(y.size()) * test_fraction));
  while (assigned < total) {
    const int c = remainder[1] > remainder[0] ? 1 : 0;
    ++quota[c];
    remainder[c] = -1.0;
    ++assigned;
  }
  Split split;
  Rng rng(derive_seed(seed, 0x5711ULL));
  for (int c = 0; c < 2; ++c) {
    rng.shuffle(std::span<std::size_t>(members[c]));
    for (std::size_t k = 0; k < members[c].size(); ++k) (k < quota[c] ? split.test : split.train).push_back(members[c][k]);
  }
  std::sort(split.train.begin(), split.train.end());
  std::sort(split.test.begin(), split.test.end());
  return split;
}

ClassifierReport report_from_confusion(std::size_t tp, std::size_t tn, std::size_t fp, std::size_t fn) {
  ClassifierReport r;
  r.tp = tp;
  r.tn = tn;
  r.fp = fp;
  r.fn = fn;
  const double total = static_cast<double>(tp + tn + fp + fn);
  if (total == 0.0) return r;
  auto ratio = [](double num, double den) { return den > 0.0 ? num / den : 0.0; };
  auto f1 = [](double p, double rec) { return p + rec > 0.0 ? 2.0 * p * rec / (p + rec) : 0.0; };
  r.accuracy = static_cast<double>(tp + tn) / total;
  r.precision1 = ratio(static_cast<double>(tp), static_cast<double>(tp + fp));
  r.recall1 = ratio(static_cast<double>(tp), static_cast<double>(tp + fn));
  r.precision0 = ratio(static_cast<double>(tn), static_cast<double>(tn + fn));
  r.recall0 = ratio(static_cast<double>(tn), static_cast<double>(tn + fp));
  r.f1_class1 = f1(r.precision1, r.recall1);
  r.f1_class0 = f1(r.precision0, r.recall0);
  const double support1 = static_cast<double>(tp + fn);
  const double support0 = static_cast<double>(tn + fp);
  r.f1_weighted = (support0 * r.f1_class0 + support1 * r.f1_class1) / total;
  return r;
}

ClassifierReport report_from_predictions(std::span<const int> truth, std::span<const int> predicted) {
  if (truth.size() != predicted.size()) throw DataError("truth and predictions differ in length");
  std::size_t tp = 0, tn = 0, fp = 0, fn = 0;
  for (std::size_t i = 0; i < truth.size(); ++i) {
    if (truth[i] == 1) {
      (predicted[i] == 1 ? tp : fn)++;
    } else {
      (predicted[i] == 1 ? fp : tn)++;
    }
  }
  return report_from_confusion(tp, tn, fp, fn);
}

ClassifierReport evaluate(const TrainedModel& model, const FeatureMatrix& x, std::span<const int> y, unsigned jobs) {
  if (x.rows() != y.size()) throw DataError("feature rows and labels differ in length");
  const auto predicted = predict(model, x, jobs);
  return report_from_predictions(y, predicted);
}

std::vector<std::uint8_t> classify_corpus(const TrainedModel& model, std::span<const corpus::Post> posts,
                                          const textprep::Vocabulary& vocab,
                                          const textprep::VectorizeOptions& options, unsigned jobs) {
  if (vocab.fingerprint() != model.fingerprint)
    throw DataError("vocabulary does not match the model it is paired with");
  std::vector<std::uint8_t> flags(posts.size(), 0);
  std::vector<std::size_t> scored;
  for (std::size_t i = 0; i < posts.size(); ++i) {
    if (!posts[i].is_own) scored.push_back(i);
  }
  // Fixed-size batches keep memory flat on large corpora.
  constexpr std::size_t kBatch = 50000;
  for (std::size_t start = 0; start < scored.size(); start += kBatch) {
    const std::size_t stop = std::min(scored.size(), start + kBatch);
    std::vector<std::string> ids;
    std::vector<std::string_view> texts;
    for (std::size_t k = start; k < stop; ++k) {
      ids.push_back(posts[scored[k]].id);
      texts.push_back(posts[scored[k]].text);
    }
    const auto x = textprep::vectorize(ids, texts, vocab, options);
    const auto pred = predict(model, x, jobs);
    for (std::size_t k = start; k < stop; ++k) flags[scored[k]] = static_cast<std::uint8_t>(pred[k - start]);
  }
  return flags;
}

}  // namespace tw::classify
