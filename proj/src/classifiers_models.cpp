#include "classifiers_internal.hpp"

#include "targetwatch/common.hpp"
#include "targetwatch/parallel.hpp"
#include "targetwatch/random.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <numeric>

namespace tw::classify::detail {

namespace {

std::array<double, 2> class_counts(std::span<const int> y) {
  std::array<double, 2> n{};
  for (int label : y) n[label == 1] += 1.0;
  return n;
}

}  // namespace

// ---- multinomial naive Bayes --------------------------------------------------

NBMultinomialParams fit_nb_multinomial(const FeatureMatrix& x, std::span<const int> y, double alpha) {
  if (alpha <= 0.0) throw ConfigError("NB_M alpha must be positive");
  const std::size_t d = x.cols;
  const auto n = class_counts(y);
  std::array<std::vector<double>, 2> counts{std::vector<double>(d, 0.0), std::vector<double>(d, 0.0)};
  for (std::size_t r = 0; r < x.rows(); ++r) {
    auto& c = counts[y[r] == 1];
    for (std::size_t k = x.row_ptr[r]; k < x.row_ptr[r + 1]; ++k) c[x.col_idx[k]] += x.values[k];
  }
  NBMultinomialParams p;
  const double total = n[0] + n[1];
  for (int c = 0; c < 2; ++c) {
    p.log_prior[c] = std::log(n[c] / total);
    const double denom = std::accumulate(counts[c].begin(), counts[c].end(), 0.0) + alpha * static_cast<double>(d);
    p.log_prob[c].resize(d);
    for (std::size_t j = 0; j < d; ++j) p.log_prob[c][j] = std::log((counts[c][j] + alpha) / denom);
  }
  return p;
}

std::vector<double> score_nb_multinomial(const NBMultinomialParams& p, const FeatureMatrix& x) {
  std::vector<double> out(x.rows());
  for (std::size_t r = 0; r < x.rows(); ++r) {
    double jll1 = p.log_prior[1], jll0 = p.log_prior[0];
    for (std::size_t k = x.row_ptr[r]; k < x.row_ptr[r + 1]; ++k) {
      jll1 += x.values[k] * p.log_prob[1][x.col_idx[k]];
      jll0 += x.values[k] * p.log_prob[0][x.col_idx[k]];
    }
    out[r] = sigmoid(jll1 - jll0);
  }
  return out;
}

// ---- Gaussian naive Bayes -------------------------------------------------------

NBGaussianParams fit_nb_gaussian(const FeatureMatrix& x, std::span<const int> y, double var_smoothing) {
  if (var_smoothing < 0.0) throw ConfigError("NB_G variance smoothing must be nonnegative");
  const std::size_t d = x.cols;
  const auto n = class_counts(y);
  NBGaussianParams p;
  std::array<std::vector<double>, 2> sum{std::vector<double>(d, 0.0), std::vector<double>(d, 0.0)};
  std::array<std::vector<double>, 2> sumsq = sum;
  std::vector<double> all_sum(d, 0.0), all_sumsq(d, 0.0);
  for (std::size_t r = 0; r < x.rows(); ++r) {
    const int c = y[r] == 1;
    for (std::size_t k = x.row_ptr[r]; k < x.row_ptr[r + 1]; ++k) {
      const double v = x.values[k];
      sum[c][x.col_idx[k]] += v;
      sumsq[c][x.col_idx[k]] += v * v;
      all_sum[x.col_idx[k]] += v;
      all_sumsq[x.col_idx[k]] += v * v;
    }
  }
  const double total = n[0] + n[1];
  double max_var = 0.0;
  for (std::size_t j = 0; j < d; ++j) {
    const double m = all_sum[j] / total;
    max_var = std::max(max_var, std::max(0.0, all_sumsq[j] / total - m * m));
  }
  const double epsilon = var_smoothing * (max_var > 0.0 ? max_var : 1.0);
  for (int c = 0; c < 2; ++c) {
    p.log_prior[c] = std::log(n[c] / total);
    p.mean[c].resize(d);
    p.var[c].resize(d);
    for (std::size_t j = 0; j < d; ++j) {
      const double m = sum[c][j] / n[c];
      p.mean[c][j] = m;
      p.var[c][j] = std::max(0.0, sumsq[c][j] / n[c] - m * m) + epsilon;
    }
  }
  return p;
}

std::vector<double> score_nb_gaussian(const NBGaussianParams& p, const FeatureMatrix& x) {
  const std::size_t d = x.cols;
  // Log-likelihood of the all-zero row, corrected per nonzero entry below.
  std::array<double, 2> base{};
  for (int c = 0; c < 2; ++c) {
    double s = p.log_prior[c];
    for (std::size_t j = 0; j < d; ++j) {
      s -= 0.5 * std::log(2.0 * std::numbers::pi * p.var[c][j]);
      s -= 0.5 * p.mean[c][j] * p.mean[c][j] / p.var[c][j];
    }
    base[c] = s;
  }
  std::vector<double> out(x.rows());
  for (std::size_t r = 0; r < x.rows(); ++r) {
    std::array<double, 2> jll = base;
    for (std::size_t k = x.row_ptr[r]; k < x.row_ptr[r + 1]; ++k) {
      const std::size_t j = x.col_idx[k];
      const double v = x.values[k];
      for (int c = 0; c < 2; ++c) {
        const double m = p.mean[c][j], var = p.var[c][j];
        jll[c] += 0.5 * m * m / var - 0.5 * (v - m) * (v - m) / var;
      }
    }
    out[r] = sigmoid(jll[1] - jll[0]);
  }
  return out;
}

// ---- linear models ----------------------------------------------------------------

std::vector<double> linear_margin(const LinearParams& p, const FeatureMatrix& x) {
  std::vector<double> out(x.rows());
  for (std::size_t r = 0; r < x.rows(); ++r) {
    double z = p.bias;
    for (std::size_t k = x.row_ptr[r]; k < x.row_ptr[r + 1]; ++k) z += p.weights[x.col_idx[k]] * x.values[k];
    out[r] = z;
  }
  return out;
}

namespace {

double softplus(double z) { return z > 0.0 ? z + std::log1p(std::exp(-z)) : std::log1p(std::exp(z)); }

struct LogisticProblem {
  const FeatureMatrix& x;
  std::span<const int> y;
  double l2;

  std::size_t dim() const { return x.cols + 1; }

  void margins(const std::vector<double>& theta, std::vector<double>& z) const {
    z.assign(x.rows(), theta.back());
    for (std::size_t r = 0; r < x.rows(); ++r) {
      double s = z[r];
      for (std::size_t k = x.row_ptr[r]; k < x.row_ptr[r + 1]; ++k) s += theta[x.col_idx[k]] * x.values[k];
      z[r] = s;
    }
  }

  double loss(const std::vector<double>& theta, const std::vector<double>& z) const {
    double f = 0.0;
    for (std::size_t r = 0; r < z.size(); ++r) f += softplus(z[r]) - (y[r] == 1 ? z[r] : 0.0);
    double reg = 0.0;
    for (std::size_t j = 0; j + 1 < theta.size(); ++j) reg += theta[j] * theta[j];
    return f + 0.5 * l2 * reg;
  }

  // Gradient plus the Hessian's diagonal sample weights p(1-p).
  void gradient(const std::vector<double>& theta, const std::vector<double>& z, std::vector<double>& g,
                std::vector<double>& s) const {
    g.assign(dim(), 0.0);
    s.resize(z.size());
    for (std::size_t r = 0; r < z.size(); ++r) {
      const double p = sigmoid(z[r]);
      const double resid = p - (y[r] == 1 ? 1.0 : 0.0);
      s[r] = p * (1.0 - p);
      for (std::size_t k = x.row_ptr[r]; k < x.row_ptr[r + 1]; ++k) g[x.col_idx[k]] += resid * x.values[k];
      g.back() += resid;
    }
    for (std::size_t j = 0; j + 1 < theta.size(); ++j) g[j] += l2 * theta[j];
  }

  void hessian_times(const std::vector<double>& s, const std::vector<double>& v, std::vector<double>& out) const {
    out.assign(dim(), 0.0);
    for (std::size_t r = 0; r < x.rows(); ++r) {
      double u = v.back();
      for (std::size_t k = x.row_ptr[r]; k < x.row_ptr[r + 1]; ++k) u += v[x.col_idx[k]] * x.values[k];
      u *= s[r];
      for (std::size_t k = x.row_ptr[r]; k < x.row_ptr[r + 1]; ++k) out[x.col_idx[k]] += u * x.values[k];
      out.back() += u;
    }
    for (std::size_t j = 0; j + 1 < v.size(); ++j) out[j] += l2 * v[j];
  }
};

double dot(const std::vector<double>& a, const std::vector<double>& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

double max_abs(const std::vector<double>& v) {
  double m = 0.0;
  for (double e : v) m = std::max(m, std::abs(e));
  return m;
}

}  // namespace

LinearFit fit_logistic(const FeatureMatrix& x, std::span<const int> y, double l2, double tolerance, int max_iter) {
  if (l2 < 0.0) throw ConfigError("LR L2 strength must be nonnegative");
  if (tolerance <= 0.0 || max_iter < 1) throw ConfigError("LR tolerance and max_iter must be positive");
  LogisticProblem prob{x, y, l2};
  const std::size_t dim = prob.dim();
  std::vector<double> theta(dim, 0.0);
  {
    const auto n = class_counts(y);
    theta.back() = std::log(std::max(n[1], 0.5) / std::max(n[0], 0.5));
  }
  std::vector<double> z, g, s, step(dim), resid(dim), dir(dim), hd, trial(dim), zt;
  prob.margins(theta, z);
  double f = prob.loss(theta, z);
  prob.gradient(theta, z, g, s);

  LinearFit fit;
  fit.converged = false;
  for (int it = 0; it < max_iter; ++it) {
    fit.iterations = it;
    const double gmax = max_abs(g);
    if (gmax < tolerance) {
      fit.converged = true;
      break;
    }
    // Conjugate gradient on H step = -g.
    const double gnorm = std::sqrt(dot(g, g));
    const double cg_tol = std::min(0.1, std::sqrt(gnorm)) * gnorm;
    std::fill(step.begin(), step.end(), 0.0);
    for (std::size_t i = 0; i < dim; ++i) resid[i] = -g[i];
    dir = resid;
    double rr = dot(resid, resid);
    const std::size_t cg_max = 2 * dim + 10;
    for (std::size_t k = 0; k < cg_max && std::sqrt(rr) > cg_tol; ++k) {
      prob.hessian_times(s, dir, hd);
      const double dhd = dot(dir, hd);
      if (dhd <= 0.0) break;
      const double alpha = rr / dhd;
      for (std::size_t i = 0; i < dim; ++i) {
        step[i] += alpha * dir[i];
        resid[i] -= alpha * hd[i];
      }
      const double rr_new = dot(resid, resid);
      const double beta = rr_new / rr;
      rr = rr_new;
      for (std::size_t i = 0; i < dim; ++i) dir[i] = resid[i] + beta * dir[i];
    }
    double slope = dot(g, step);
    if (!(slope < 0.0)) {
      for (std::size_t i = 0; i < dim; ++i) step[i] = -g[i];
      slope = -dot(g, g);
    }
    // Backtracking line search (Armijo).
    double t = 1.0;
    bool accepted = false;
    for (int ls = 0; ls < 60; ++ls) {
      for (std::size_t i = 0; i < dim; ++i) trial[i] = theta[i] + t * step[i];
      prob.margins(trial, zt);
      const double ft = prob.loss(trial, zt);
      if (ft <= f + 1e-4 * t * slope || (ft <= f && t < 1e-8)) {
        theta.swap(trial);
        z.swap(zt);
        f = ft;
        accepted = true;
        break;
      }
      t *= 0.5;
    }
    prob.gradient(theta, z, g, s);
    if (!accepted) break;
  }
  if (!fit.converged && max_abs(g) < tolerance) fit.converged = true;
  fit.params.weights.assign(theta.begin(), theta.end() - 1);
  fit.params.bias = theta.back();
  return fit;
}

LinearFit fit_linear_svm(const FeatureMatrix& x, std::span<const int> y, double c, double tolerance, int max_iter,
                         std::uint64_t seed) {
  if (c <= 0.0) throw ConfigError("SVM C must be positive");
  if (tolerance <= 0.0 || max_iter < 1) throw ConfigError("SVM tolerance and max_iter must be positive");
  const std::size_t n = x.rows();
  const std::size_t d = x.cols;
  std::vector<double> w(d + 1, 0.0);  // bias last
  std::vector<double> alpha(n, 0.0), qdiag(n, 1.0);
  for (std::size_t r = 0; r < n; ++r) {
    for (std::size_t k = x.row_ptr[r]; k < x.row_ptr[r + 1]; ++k) qdiag[r] += x.values[k] * x.values[k];
  }
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  Rng rng(derive_seed(seed, 0x53564dULL));

  LinearFit fit;
  fit.converged = false;
  for (int epoch = 0; epoch < max_iter; ++epoch) {
    fit.iterations = epoch + 1;
    rng.shuffle(std::span<std::size_t>(order));
    double pg_max = -std::numeric_limits<double>::infinity();
    double pg_min = std::numeric_limits<double>::infinity();
    for (std::size_t r : order) {
      const double yi = y[r] == 1 ? 1.0 : -1.0;
      double wx = w[d];
      for (std::size_t k = x.row_ptr[r]; k < x.row_ptr[r + 1]; ++k) wx += w[x.col_idx[k]] * x.values[k];
      const double grad = yi * wx - 1.0;
      double pg = grad;
      if (alpha[r] <= 0.0) {
        pg = std::min(grad, 0.0);
      } else if (alpha[r] >= c) {
        pg = std::max(grad, 0.0);
      }
      pg_max = std::max(pg_max, pg);
      pg_min = std::min(pg_min, pg);
      if (std::abs(pg) > 1e-12) {
        const double old = alpha[r];
        alpha[r] = std::min(std::max(old - grad / qdiag[r], 0.0), c);
        const double delta = (alpha[r] - old) * yi;
        for (std::size_t k = x.row_ptr[r]; k < x.row_ptr[r + 1]; ++k) w[x.col_idx[k]] += delta * x.values[k];
        w[d] += delta;
      }
    }
    if (pg_max - pg_min < tolerance) {
      fit.converged = true;
      break;
    }
  }
  fit.params.weights.assign(w.begin(), w.end() - 1);
  fit.params.bias = w[d];
  return fit;
}

// ---- random forest -------------------------------------------------------------------

namespace {

class TreeBuilder {
 public:
  TreeBuilder(const std::vector<float>& columns, std::size_t n, std::size_t d, std::span<const int> y,
              std::size_t mtry, int max_depth)
      : columns_(columns), n_(n), d_(d), y_(y), mtry_(mtry), max_depth_(max_depth) {}

  ForestParams::Tree build(Rng& rng, bool bootstrap) {
    weights_.assign(n_, 0.0);
    if (bootstrap) {
      for (std::size_t i = 0; i < n_; ++i) weights_[rng.index(n_)] += 1.0;
    } else {
      std::fill(weights_.begin(), weights_.end(), 1.0);
    }
    samples_.clear();
    for (std::size_t i = 0; i < n_; ++i) {
      if (weights_[i] > 0.0) samples_.push_back(static_cast<std::uint32_t>(i));
    }
    features_.resize(d_);
    std::iota(features_.begin(), features_.end(), std::uint32_t{0});

    ForestParams::Tree tree;
    struct Pending {
      std::int32_t node;
      std::size_t lo, hi;
      int depth;
    };
    std::vector<Pending> stack;
    stack.push_back({new_node(tree), 0, samples_.size(), 0});
    while (!stack.empty()) {
      const Pending cur = stack.back();
      stack.pop_back();
      double w_total = 0.0, w_pos = 0.0;
      for (std::size_t k = cur.lo; k < cur.hi; ++k) {
        const double w = weights_[samples_[k]];
        w_total += w;
        if (y_[samples_[k]] == 1) w_pos += w;
      }
      tree.value[cur.node] = w_total > 0.0 ? w_pos / w_total : 0.0;
      const bool pure = w_pos == 0.0 || w_pos == w_total;
      if (pure || cur.hi - cur.lo < 2 || (max_depth_ > 0 && cur.depth >= max_depth_)) continue;

      auto best = find_split(rng, cur.lo, cur.hi, w_total, w_pos);
      if (!best.valid) continue;

      auto mid = std::partition(samples_.begin() + static_cast<std::ptrdiff_t>(cur.lo),
                                samples_.begin() + static_cast<std::ptrdiff_t>(cur.hi), [&](std::uint32_t i) {
                                  return columns_[best.feature * n_ + i] <= best.threshold;
                                });
      const std::size_t split = static_cast<std::size_t>(mid - samples_.begin());
      const std::int32_t left = new_node(tree);
      const std::int32_t right = new_node(tree);
      tree.feature[cur.node] = static_cast<std::int32_t>(best.feature);
      tree.threshold[cur.node] = best.threshold;
      tree.left[cur.node] = left;
      tree.right[cur.node] = right;
      stack.push_back({right, split, cur.hi, cur.depth + 1});
      stack.push_back({left, cur.lo, split, cur.depth + 1});
    }
    return tree;
  }

 private:
  struct Candidate {
    bool valid = false;
    std::size_t feature = 0;
    double threshold = 0.0;
    double proxy = -std::numeric_limits<double>::infinity();
  };

  static std::int32_t new_node(ForestParams::Tree& t) {
    t.feature.push_back(-1);
    t.threshold.push_back(0.0);
    t.left.push_back(-1);
    t.right.push_back(-1);
    t.value.push_back(0.0);
    return static_cast<std::int32_t>(t.feature.size() - 1);
  }

  static double proxy_term(double w, double w_pos) {
    const double w_neg = w - w_pos;
    return (w_pos * w_pos + w_neg * w_neg) / w;
  }

  Candidate find_split(Rng& rng, std::size_t lo, std::size_t hi, double w_total, double w_pos) {
    Candidate best;
    for (std::size_t k = 0; k < d_; ++k) {
      if (k >= mtry_ && best.valid) break;
      std::swap(features_[k], features_[k + rng.index(d_ - k)]);
      evaluate_feature(features_[k], lo, hi, w_total, w_pos, best);
    }
    return best;
  }

  void evaluate_feature(std::size_t f, std::size_t lo, std::size_t hi, double w_total, double w_pos,
                        Candidate& best) {
    const float* col = columns_.data() + f * n_;
    values_.clear();
    double nz_w = 0.0, nz_pos = 0.0;
    std::size_t zeros = 0;
    for (std::size_t k = lo; k < hi; ++k) {
      const std::uint32_t i = samples_[k];
      const float v = col[i];
      if (v == 0.0f) {
        ++zeros;
        continue;
      }
      const double w = weights_[i];
      values_.push_back({v, w, y_[i] == 1 ? w : 0.0});
      nz_w += w;
      nz_pos += y_[i] == 1 ? w : 0.0;
    }
    if (values_.empty()) return;
    std::sort(values_.begin(), values_.end(), [](const Item& a, const Item& b) { return a.value < b.value; });

    // Collapse to distinct value groups, slotting the zero group into place.
    groups_.clear();
    const Item zero_group{0.0f, w_total - nz_w, w_pos - nz_pos};
    bool zero_placed = zeros == 0;
    for (const Item& it : values_) {
      if (!zero_placed && it.value > 0.0f) {
        groups_.push_back(zero_group);
        zero_placed = true;
      }
      if (!groups_.empty() && groups_.back().value == it.value) {
        groups_.back().weight += it.weight;
        groups_.back().pos += it.pos;
      } else {
        groups_.push_back(it);
      }
    }
    if (!zero_placed) groups_.push_back(zero_group);
    if (groups_.size() < 2) return;

    double left_w = 0.0, left_pos = 0.0;
    for (std::size_t g = 0; g + 1 < groups_.size(); ++g) {
      left_w += groups_[g].weight;
      left_pos += groups_[g].pos;
      const double right_w = w_total - left_w;
      const double proxy = proxy_term(left_w, left_pos) + proxy_term(right_w, w_pos - left_pos);
      if (proxy > best.proxy) {
        best.valid = true;
        best.proxy = proxy;
        best.feature = f;
        double thr = 0.5 * (static_cast<double>(groups_[g].value) + static_cast<double>(groups_[g + 1].value));
        if (!(thr < groups_[g + 1].value)) thr = groups_[g].value;
        best.threshold = thr;
      }
    }
  }

  struct Item {
    float value;
    double weight;
    double pos;
  };

  const std::vector<float>& columns_;
  std::size_t n_, d_;
  std::span<const int> y_;
  std::size_t mtry_;
  int max_depth_;
  std::vector<double> weights_;
  std::vector<std::uint32_t> samples_;
  std::vector<std::uint32_t> features_;
  std::vector<Item> values_;
  std::vector<Item> groups_;
};

}  // namespace

ForestParams fit_forest(const FeatureMatrix& x, std::span<const int> y, const Hyperparameters& hp, std::uint64_t seed,
                        unsigned jobs) {
  if (hp.rf_trees < 1) throw ConfigError("RF needs at least one tree");
  if (hp.rf_max_features < 0 || hp.rf_max_depth < 0) throw ConfigError("RF limits must be nonnegative");
  const std::size_t n = x.rows(), d = x.cols;
  if (d == 0) throw DataError("RF needs at least one feature");
  std::vector<float> columns(n * d, 0.0f);
  for (std::size_t r = 0; r < n; ++r) {
    for (std::size_t k = x.row_ptr[r]; k < x.row_ptr[r + 1]; ++k)
      columns[x.col_idx[k] * n + r] = static_cast<float>(x.values[k]);
  }
  const std::size_t mtry =
      hp.rf_max_features > 0
          ? std::min<std::size_t>(d, static_cast<std::size_t>(hp.rf_max_features))
          : std::max<std::size_t>(1, static_cast<std::size_t>(std::floor(std::sqrt(static_cast<double>(d)))));
  ForestParams forest;
  forest.trees.resize(static_cast<std::size_t>(hp.rf_trees));
  parallel_for(forest.trees.size(), jobs, [&](std::size_t t) {
    Rng rng(derive_seed(seed, 0x7EE00000ULL + t));
    TreeBuilder builder(columns, n, d, y, mtry, hp.rf_max_depth);
    forest.trees[t] = builder.build(rng, hp.rf_bootstrap);
  });
  return forest;
}

std::vector<double> score_forest(const ForestParams& p, const FeatureMatrix& x) {
  std::vector<double> out(x.rows(), 0.0);
  std::vector<double> row(x.cols, 0.0);
  for (std::size_t r = 0; r < x.rows(); ++r) {
    for (std::size_t k = x.row_ptr[r]; k < x.row_ptr[r + 1]; ++k) row[x.col_idx[k]] = x.values[k];
    double sum = 0.0;
    for (const auto& tree : p.trees) {
      std::int32_t node = 0;
      while (tree.feature[node] >= 0) {
        node = row[tree.feature[node]] <= tree.threshold[node] ? tree.left[node] : tree.right[node];
      }
      sum += tree.value[node];
    }
    out[r] = sum / static_cast<double>(p.trees.size());
    for (std::size_t k = x.row_ptr[r]; k < x.row_ptr[r + 1]; ++k) row[x.col_idx[k]] = 0.0;
  }
  return out;
}

// ---- k nearest neighbours ---------------------------------------------------------------

KnnParams fit_knn(const FeatureMatrix& x, std::span<const int> y) {
  KnnParams p;
  p.train = x;
  p.labels.assign(y.begin(), y.end());
  p.sq_norms.resize(x.rows());
  for (std::size_t r = 0; r < x.rows(); ++r) {
    double s = 0.0;
    for (std::size_t k = x.row_ptr[r]; k < x.row_ptr[r + 1]; ++k) s += x.values[k] * x.values[k];
    p.sq_norms[r] = s;
  }
  return p;
}

std::vector<double> score_knn(const KnnParams& p, const FeatureMatrix& x, int k, unsigned jobs) {
  if (k < 1) throw ConfigError("KNN k must be at least 1");
  const std::size_t n_train = p.train.rows();
  const std::size_t kk = std::min<std::size_t>(static_cast<std::size_t>(k), n_train);
  std::vector<double> out(x.rows(), 0.0);
  // Each query is independent; chunk queries across threads.
  const std::size_t chunk = 64;
  const std::size_t n_chunks = (x.rows() + chunk - 1) / chunk;
  parallel_for(n_chunks, jobs, [&](std::size_t c) {
    std::vector<double> q(x.cols, 0.0);
    std::vector<std::pair<double, std::size_t>> dist(n_train);
    for (std::size_t r = c * chunk; r < std::min(x.rows(), (c + 1) * chunk); ++r) {
      double q_norm = 0.0;
      for (std::size_t e = x.row_ptr[r]; e < x.row_ptr[r + 1]; ++e) {
        q[x.col_idx[e]] = x.values[e];
        q_norm += x.values[e] * x.values[e];
      }
      for (std::size_t t = 0; t < n_train; ++t) {
        double dotp = 0.0;
        for (std::size_t e = p.train.row_ptr[t]; e < p.train.row_ptr[t + 1]; ++e)
          dotp += q[p.train.col_idx[e]] * p.train.values[e];
        dist[t] = {std::max(0.0, q_norm + p.sq_norms[t] - 2.0 * dotp), t};
      }
      std::partial_sort(dist.begin(), dist.begin() + static_cast<std::ptrdiff_t>(kk), dist.end());
      std::size_t pos = 0;
      for (std::size_t j = 0; j < kk; ++j) pos += p.labels[dist[j].second] == 1;
      out[r] = static_cast<double>(pos) / static_cast<double>(kk);
      for (std::size_t e = x.row_ptr[r]; e < x.row_ptr[r + 1]; ++e) q[x.col_idx[e]] = 0.0;
    }
  });
  return out;
}

}  // namespace tw::classify::detail
