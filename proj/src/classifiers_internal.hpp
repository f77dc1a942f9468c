#pragma once

// Per-kind fit/score routines shared by the classifier translation units.

#include "targetwatch/classifiers.hpp"

#include <cmath>

namespace tw::classify::detail {

NBMultinomialParams fit_nb_multinomial(const FeatureMatrix& x, std::span<const int> y, double alpha);
std::vector<double> score_nb_multinomial(const NBMultinomialParams& p, const FeatureMatrix& x);

NBGaussianParams fit_nb_gaussian(const FeatureMatrix& x, std::span<const int> y, double var_smoothing);
std::vector<double> score_nb_gaussian(const NBGaussianParams& p, const FeatureMatrix& x);

struct LinearFit {
  LinearParams params;
  bool converged = true;
  int iterations = 0;
};

/// Penalised logistic regression by truncated Newton (conjugate gradient inner solves).
LinearFit fit_logistic(const FeatureMatrix& x, std::span<const int> y, double l2, double tolerance,
                       int max_iter);
/// Hinge-loss SVM by dual coordinate descent; the bias is an extra unit feature.
LinearFit fit_linear_svm(const FeatureMatrix& x, std::span<const int> y, double c, double tolerance,
                         int max_iter, std::uint64_t seed);
std::vector<double> linear_margin(const LinearParams& p, const FeatureMatrix& x);

ForestParams fit_forest(const FeatureMatrix& x, std::span<const int> y, const Hyperparameters& hp,
                        std::uint64_t seed, unsigned jobs);
std::vector<double> score_forest(const ForestParams& p, const FeatureMatrix& x);

KnnParams fit_knn(const FeatureMatrix& x, std::span<const int> y);
std::vector<double> score_knn(const KnnParams& p, const FeatureMatrix& x, int k, unsigned jobs);

inline double sigmoid(double z) {
  if (z >= 0.0) {
    const double e = std::exp(-z);
    return 1.0 / (1.0 + e);
  }
  const double e = std::exp(z);
  return e / (1.0 + e);
}

}  // namespace tw::classify::detail
