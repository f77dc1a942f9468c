#include "targetwatch/classifiers.hpp"
#include "targetwatch/common.hpp"

#include <fstream>
#include <istream>
#include <ostream>

#include <json.hpp>

namespace tw::classify {

using nlohmann::json;

namespace {

constexpr int kFormatVersion = 1;

json hp_to_json(const Hyperparameters& hp) {
  return {{"nb_alpha", hp.nb_alpha},
          {"nbg_var_smoothing", hp.nbg_var_smoothing},
          {"lr_l2", hp.lr_l2},
          {"lr_tolerance", hp.lr_tolerance},
          {"lr_max_iter", hp.lr_max_iter},
          {"svm_c", hp.svm_c},
          {"svm_tolerance", hp.svm_tolerance},
          {"svm_max_iter", hp.svm_max_iter},
          {"rf_trees", hp.rf_trees},
          {"rf_max_features", hp.rf_max_features},
          {"rf_max_depth", hp.rf_max_depth},
          {"rf_bootstrap", hp.rf_bootstrap},
          {"knn_k", hp.knn_k},
          {"stack_folds", hp.stack_folds}};
}

Hyperparameters hp_from_json(const json& j) {
  Hyperparameters hp;
  hp.nb_alpha = j.at("nb_alpha");
  hp.nbg_var_smoothing = j.at("nbg_var_smoothing");
  hp.lr_l2 = j.at("lr_l2");
  hp.lr_tolerance = j.at("lr_tolerance");
  hp.lr_max_iter = j.at("lr_max_iter");
  hp.svm_c = j.at("svm_c");
  hp.svm_tolerance = j.at("svm_tolerance");
  hp.svm_max_iter = j.at("svm_max_iter");
  hp.rf_trees = j.at("rf_trees");
  hp.rf_max_features = j.at("rf_max_features");
  hp.rf_max_depth = j.at("rf_max_depth");
  hp.rf_bootstrap = j.at("rf_bootstrap");
  hp.knn_k = j.at("knn_k");
  hp.stack_folds = j.at("stack_folds");
  return hp;
}

json linear_to_json(const LinearParams& p) { return {{"weights", p.weights}, {"bias", p.bias}}; }

LinearParams linear_from_json(const json& j) {
  LinearParams p;
  p.weights = j.at("weights").get<std::vector<double>>();
  p.bias = j.at("bias");
  return p;
}

json matrix_to_json(const FeatureMatrix& m) {
  return {{"cols", m.cols},     {"row_ptr", m.row_ptr}, {"col_idx", m.col_idx},
          {"values", m.values}, {"row_ids", m.row_ids}, {"fingerprint", m.fingerprint}};
}

FeatureMatrix matrix_from_json(const json& j) {
  FeatureMatrix m;
  m.cols = j.at("cols");
  m.row_ptr = j.at("row_ptr").get<std::vector<std::size_t>>();
  m.col_idx = j.at("col_idx").get<std::vector<std::uint32_t>>();
  m.values = j.at("values").get<std::vector<double>>();
  m.row_ids = j.at("row_ids").get<std::vector<std::string>>();
  m.fingerprint = j.at("fingerprint");
  return m;
}

json model_to_json(const TrainedModel& model) {
  json j;
  j["format"] = "targetwatch-model";
  j["format_version"] = kFormatVersion;
  j["kind"] = std::string(to_string(model.spec.kind));
  j["seed"] = model.spec.seed;
  j["hyperparameters"] = hp_to_json(model.spec.hp);
  j["fingerprint"] = model.fingerprint;
  j["n_features"] = model.n_features;
  j["converged"] = model.converged;
  j["warning"] = model.warning;
  std::visit(
      [&](const auto& p) {
        using P = std::decay_t<decltype(p)>;
        json& out = j["params"];
        if constexpr (std::is_same_v<P, NBMultinomialParams>) {
          out = {{"log_prior", p.log_prior}, {"log_prob0", p.log_prob[0]}, {"log_prob1", p.log_prob[1]}};
        } else if constexpr (std::is_same_v<P, NBGaussianParams>) {
          out = {{"log_prior", p.log_prior}, {"mean0", p.mean[0]}, {"mean1", p.mean[1]},
                 {"var0", p.var[0]},         {"var1", p.var[1]}};
        } else if constexpr (std::is_same_v<P, LinearParams>) {
          out = linear_to_json(p);
        } else if constexpr (std::is_same_v<P, ForestParams>) {
          out = json::array();
          for (const auto& t : p.trees) {
            out.push_back({{"feature", t.feature},
                           {"threshold", t.threshold},
                           {"left", t.left},
                           {"right", t.right},
                           {"value", t.value}});
          }
        } else if constexpr (std::is_same_v<P, KnnParams>) {
          out = {{"train", matrix_to_json(p.train)}, {"labels", p.labels}, {"sq_norms", p.sq_norms}};
        } else {
          out = json::object();
          out["bases"] = json::array();
          for (const auto& b : p.bases) out["bases"].push_back(model_to_json(b));
          out["score_mean"] = p.score_mean;
          out["score_sd"] = p.score_sd;
          out["meta"] = linear_to_json(p.meta);
        }
      },
      model.params);
  return j;
}

TrainedModel model_from_json(const json& j) {
  if (j.value("format", "") != "targetwatch-model") throw DataError("not a model file");
  if (j.at("format_version").get<int>() != kFormatVersion) throw DataError("unsupported model format version");
  TrainedModel m;
  m.spec.kind = parse_model_kind(j.at("kind").get<std::string>());
  m.spec.seed = j.at("seed");
  m.spec.hp = hp_from_json(j.at("hyperparameters"));
  m.fingerprint = j.at("fingerprint");
  m.n_features = j.at("n_features");
  m.converged = j.at("converged");
  m.warning = j.at("warning");
  const json& p = j.at("params");
  switch (m.spec.kind) {
    case ModelKind::NBMultinomial: {
      NBMultinomialParams q;
      q.log_prior = p.at("log_prior");
      q.log_prob[0] = p.at("log_prob0").get<std::vector<double>>();
      q.log_prob[1] = p.at("log_prob1").get<std::vector<double>>();
      m.params = std::move(q);
      break;
    }
    case ModelKind::NBGaussian: {
      NBGaussianParams q;
      q.log_prior = p.at("log_prior");
      q.mean[0] = p.at("mean0").get<std::vector<double>>();
      q.mean[1] = p.at("mean1").get<std::vector<double>>();
      q.var[0] = p.at("var0").get<std::vector<double>>();
      q.var[1] = p.at("var1").get<std::vector<double>>();
      m.params = std::move(q);
      break;
    }
    case ModelKind::LogisticRegression:
    case ModelKind::LinearSVM:
      m.params = linear_from_json(p);
      break;
    case ModelKind::RandomForest: {
      ForestParams q;
      for (const auto& t : p) {
        ForestParams::Tree tree;
        tree.feature = t.at("feature").get<std::vector<std::int32_t>>();
        tree.threshold = t.at("threshold").get<std::vector<double>>();
        tree.left = t.at("left").get<std::vector<std::int32_t>>();
        tree.right = t.at("right").get<std::vector<std::int32_t>>();
        tree.value = t.at("value").get<std::vector<double>>();
        q.trees.push_back(std::move(tree));
      }
      m.params = std::move(q);
      break;
    }
    case ModelKind::KNN: {
      KnnParams q;
      q.train = matrix_from_json(p.at("train"));
      q.labels = p.at("labels").get<std::vector<int>>();
      q.sq_norms = p.at("sq_norms").get<std::vector<double>>();
      m.params = std::move(q);
      break;
    }
    case ModelKind::Stack: {
      StackParams q;
      for (const auto& b : p.at("bases")) q.bases.push_back(model_from_json(b));
      q.score_mean = p.at("score_mean").get<std::vector<double>>();
      q.score_sd = p.at("score_sd").get<std::vector<double>>();
      q.meta = linear_from_json(p.at("meta"));
      m.params = std::move(q);
      break;
    }
  }
  return m;
}

}  // namespace

void save_model(std::ostream& out, const TrainedModel& model) { out << model_to_json(model).dump() << '\n'; }

TrainedModel load_model(std::istream& in) {
  try {
    return model_from_json(json::parse(in));
  } catch (const json::exception& e) {
    throw DataError(std::string("malformed model file: ") + e.what());
  }
}

void save_model_file(const std::filesystem::path& path, const TrainedModel& model) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write model file " + path.string());
  save_model(out, model);
}

TrainedModel load_model_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw MissingArtifact(path.string());
  return load_model(in);
}

}  // namespace tw::classify
