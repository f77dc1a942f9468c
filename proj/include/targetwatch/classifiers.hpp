#pragma once

#include "targetwatch/corpus.hpp"
#include "targetwatch/textprep.hpp"

#include <array>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <span>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

namespace tw::classify {

using textprep::FeatureMatrix;

enum class ModelKind { NBMultinomial, NBGaussian, LogisticRegression, LinearSVM, RandomForest, KNN, Stack };

/// Table-style short names: NB_M, NB_G, LR, SVC_L, RF, KNN, Stack.
std::string_view to_string(ModelKind kind);
ModelKind parse_model_kind(std::string_view name);

/// The stack's base learners, in meta-feature column order.
inline constexpr std::array<ModelKind, 5> kStackBases{ModelKind::LogisticRegression, ModelKind::RandomForest,
                                                      ModelKind::LinearSVM, ModelKind::NBMultinomial,
                                                      ModelKind::NBGaussian};

struct Hyperparameters {
  double nb_alpha = 1.0;
  double nbg_var_smoothing = 1e-9;
  double lr_l2 = 1.0;
  double lr_tolerance = 1e-6;
  int lr_max_iter = 1000;
  double svm_c = 1.0;
  double svm_tolerance = 1e-4;
  int svm_max_iter = 1000;
  int rf_trees = 200;
  int rf_max_features = 0;  // 0: floor(sqrt(d))
  int rf_max_depth = 0;     // 0: unlimited
  bool rf_bootstrap = true;
  int knn_k = 5;
  int stack_folds = 5;
};

struct ModelSpec {
  ModelKind kind = ModelKind::Stack;
  Hyperparameters hp;
  std::uint64_t seed = 0;
};

struct NBMultinomialParams {
  std::array<double, 2> log_prior{};
  std::array<std::vector<double>, 2> log_prob;  // per class, per word
};

struct NBGaussianParams {
  std::array<double, 2> log_prior{};
  std::array<std::vector<double>, 2> mean;
  std::array<std::vector<double>, 2> var;  // smoothed
};

/// Logistic regression and linear SVM share this form: score = w.x + b.
struct LinearParams {
  std::vector<double> weights;
  double bias = 0.0;
};

struct ForestParams {
  struct Tree {
    std::vector<std::int32_t> feature;  // -1 marks a leaf
    std::vector<double> threshold;      // go left when x <= threshold
    std::vector<std::int32_t> left;
    std::vector<std::int32_t> right;
    std::vector<double> value;  // class-1 fraction at the node
  };
  std::vector<Tree> trees;
};

struct KnnParams {
  FeatureMatrix train;
  std::vector<int> labels;
  std::vector<double> sq_norms;
};

struct TrainedModel;

struct StackParams {
  std::vector<TrainedModel> bases;  // kStackBases order
  std::vector<double> score_mean;
  std::vector<double> score_sd;
  LinearParams meta;
};

struct TrainedModel {
  ModelSpec spec;
  std::string fingerprint;  // vocabulary fingerprint of the training columns
  std::size_t n_features = 0;
  bool converged = true;
  std::string warning;
  std::variant<NBMultinomialParams, NBGaussianParams, LinearParams, ForestParams, KnnParams, StackParams> params;
};

/// Fits any non-stack kind; ModelKind::Stack is forwarded to train_stack.
TrainedModel train(const ModelSpec& spec, const FeatureMatrix& x, std::span<const int> y, unsigned jobs = 1);

/// Out-of-fold stacking of kStackBases with a logistic meta-learner.
TrainedModel train_stack(const ModelSpec& spec, const FeatureMatrix& x, std::span<const int> y,
                         int folds = 5, unsigned jobs = 1);

/// Continuous score: class-1 probability, or the signed margin for LinearSVM.
std::vector<double> score(const TrainedModel& model, const FeatureMatrix& x, unsigned jobs = 1);

/// Hard 0/1 predictions. Throws DataError on a column fingerprint mismatch.
std::vector<int> predict(const TrainedModel& model, const FeatureMatrix& x, unsigned jobs = 1);

/// Gradient of the penalised logistic loss at (w, b), bias last.
std::vector<double> logistic_gradient(const LinearParams& params, const FeatureMatrix& x,
                                      std::span<const int> y, double l2);

struct Split {
  std::vector<std::size_t> train;  // ascending
  std::vector<std::size_t> test;   // ascending
};

/// Per-class test counts by largest-remainder rounding of class size x fraction.
Split stratified_split(std::span<const int> y, double test_fraction = 0.2, std::uint64_t seed = 0);

struct ClassifierReport {
  std::size_t tp = 0, tn = 0, fp = 0, fn = 0;
  double accuracy = 0.0;
  double precision0 = 0.0, recall0 = 0.0, f1_class0 = 0.0;
  double precision1 = 0.0, recall1 = 0.0, f1_class1 = 0.0;
  double f1_weighted = 0.0;
};

ClassifierReport report_from_confusion(std::size_t tp, std::size_t tn, std::size_t fp, std::size_t fn);
ClassifierReport report_from_predictions(std::span<const int> truth, std::span<const int> predicted);
ClassifierReport evaluate(const TrainedModel& model, const FeatureMatrix& x, std::span<const int> y,
                          unsigned jobs = 1);

/// One flag per post; own posts are never scored and get 0.
std::vector<std::uint8_t> classify_corpus(const TrainedModel& model, std::span<const corpus::Post> posts,
                                          const textprep::Vocabulary& vocab,
                                          const textprep::VectorizeOptions& options = {}, unsigned jobs = 1);

void save_model(std::ostream& out, const TrainedModel& model);
TrainedModel load_model(std::istream& in);
void save_model_file(const std::filesystem::path& path, const TrainedModel& model);
TrainedModel load_model_file(const std::filesystem::path& path);

}  // namespace tw::classify
