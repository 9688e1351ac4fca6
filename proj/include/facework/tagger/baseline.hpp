#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <limits>
#include <map>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "facework/error.hpp"
#include "facework/faceacts.hpp"
#include "facework/rng.hpp"
#include "facework/tagger/context.hpp"
#include "facework/tagger/features.hpp"

namespace facework::tagger {

struct TrainConfig {
  double learning_rate = 0.5;
  std::size_t epochs = 200;
  double l2 = 1e-4;
  std::uint64_t seed = 13;
  // Initial weights drawn uniformly from [-init_scale, init_scale].
  double init_scale = 0.01;
  // Inverse-frequency sample weights per class.
  bool class_weights = false;
  // Halve the step whenever it would raise the loss.
  bool backtracking = true;
  // Features seen fewer times than this in training are dropped.
  std::size_t min_feature_count = 1;
  std::size_t context_size = kDefaultContextSize;

  bool operator==(const TrainConfig&) const = default;
};

// kNumFaceActs rows by (n_features + 1) columns; the last column is the bias.
class WeightMatrix {
 public:
  WeightMatrix() = default;
  WeightMatrix(std::size_t rows, std::size_t cols) : rows_(rows), cols_(cols), data_(rows * cols, 0.0) {}

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  double& operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
  double operator()(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }
  std::span<double> data() { return data_; }
  std::span<const double> data() const { return data_; }

  bool operator==(const WeightMatrix&) const = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

using SparseRow = std::vector<std::pair<std::uint32_t, double>>;

struct Dataset {
  std::vector<SparseRow> rows;
  std::vector<std::size_t> labels;  // class index per row
  std::vector<double> sample_weights;
  std::size_t n_features = 0;
};

using Distribution = std::array<double, kNumFaceActs>;

namespace detail {

inline void softmax_scores(const WeightMatrix& w, const SparseRow& row, std::span<double> out) {
  const std::size_t bias = w.cols() - 1;
  double top = -std::numeric_limits<double>::infinity();
  for (std::size_t c = 0; c < w.rows(); ++c) {
    double z = w(c, bias);
    for (const auto& [j, v] : row) z += w(c, j) * v;
    out[c] = z;
    top = std::max(top, z);
  }
  double total = 0.0;
  for (std::size_t c = 0; c < w.rows(); ++c) {
    out[c] = std::exp(out[c] - top);
    total += out[c];
  }
  for (std::size_t c = 0; c < w.rows(); ++c) out[c] /= total;
}

}  // namespace detail

// Weighted mean softmax cross-entropy plus (l2/2)*||W||^2 over non-bias
// weights, with its analytic gradient when `gradient` is non-null.
inline double softmax_objective(const WeightMatrix& w, const Dataset& data, double l2,
                                WeightMatrix* gradient = nullptr) {
  if (w.cols() != data.n_features + 1) throw std::invalid_argument("softmax_objective: shape mismatch");
  const std::size_t classes = w.rows();
  const std::size_t bias = w.cols() - 1;
  if (gradient) *gradient = WeightMatrix(w.rows(), w.cols());

  double total_weight = 0.0;
  for (std::size_t i = 0; i < data.rows.size(); ++i) total_weight += data.sample_weights[i];
  if (!(total_weight > 0.0)) throw std::invalid_argument("softmax_objective: zero total sample weight");

  std::vector<double> p(classes);
  double loss = 0.0;
  for (std::size_t i = 0; i < data.rows.size(); ++i) {
    const double sw = data.sample_weights[i] / total_weight;
    detail::softmax_scores(w, data.rows[i], p);
    const std::size_t y = data.labels[i];
    loss -= sw * std::log(std::max(p[y], 1e-300));
    if (!gradient) continue;
    for (std::size_t c = 0; c < classes; ++c) {
      const double delta = sw * (p[c] - (c == y ? 1.0 : 0.0));
      (*gradient)(c, bias) += delta;
      for (const auto& [j, v] : data.rows[i]) (*gradient)(c, j) += delta * v;
    }
  }
  double reg = 0.0;
  for (std::size_t c = 0; c < classes; ++c) {
    for (std::size_t j = 0; j < bias; ++j) {
      reg += w(c, j) * w(c, j);
      if (gradient) (*gradient)(c, j) += l2 * w(c, j);
    }
  }
  return loss + 0.5 * l2 * reg;
}

struct LabeledWindow {
  ContextWindow window;
  FaceAct label = FaceAct::None;
};

struct BaselineModel {
  std::map<std::string, std::uint32_t> vocabulary;
  WeightMatrix weights;
  TrainConfig config;
  FeatureConfig features;
  // Training objective before the first step and after each accepted epoch.
  std::vector<double> loss_history;

  std::size_t n_features() const { return vocabulary.size(); }

  SparseRow encode(const FeatureVector& f) const {
    SparseRow row;
    for (const auto& [name, value] : f) {
      auto it = vocabulary.find(name);
      if (it != vocabulary.end()) row.emplace_back(it->second, value);
    }
    return row;
  }
};

struct Prediction {
  FaceAct label = FaceAct::None;
  Distribution probabilities{};
};

// Argmax over the distribution; ties go to the earlier canonical class.
inline FaceAct argmax_label(const Distribution& p) {
  std::size_t best = 0;
  for (std::size_t c = 1; c < p.size(); ++c) {
    if (p[c] > p[best]) best = c;
  }
  return face_act_at(best);
}

inline Prediction predict(const BaselineModel& model, const ContextWindow& w) {
  Prediction out;
  if (model.weights.rows() != kNumFaceActs) throw std::logic_error("predict: model is not trained");
  detail::softmax_scores(model.weights, model.encode(extract_features(w, model.features)), out.probabilities);
  out.label = argmax_label(out.probabilities);
  return out;
}

inline Dataset build_dataset(const BaselineModel& model, std::span<const LabeledWindow> data,
                             const TrainConfig& cfg) {
  Dataset ds;
  ds.n_features = model.vocabulary.size();
  std::array<double, kNumFaceActs> class_counts{};
  for (const auto& ex : data) {
    ds.rows.push_back(model.encode(extract_features(ex.window, model.features)));
    ds.labels.push_back(index_of(ex.label));
    class_counts[index_of(ex.label)] += 1.0;
  }
  std::size_t present = 0;
  for (double c : class_counts) present += c > 0.0 ? 1 : 0;
  for (std::size_t y : ds.labels) {
    ds.sample_weights.push_back(cfg.class_weights ? static_cast<double>(data.size()) /
                                                        (static_cast<double>(present) * class_counts[y])
                                                  : 1.0);
  }
  return ds;
}

// Multinomial logistic regression trained by full-batch gradient descent.
inline BaselineModel train_baseline(std::span<const LabeledWindow> data, const TrainConfig& cfg = {},
                                    const FeatureConfig& features = {}) {
  if (data.empty()) throw std::invalid_argument("train_baseline: no training data");
  if (!(cfg.learning_rate > 0.0)) throw std::invalid_argument("train_baseline: learning rate must be positive");

  BaselineModel model;
  model.config = cfg;
  model.features = features;

  std::map<std::string, std::size_t> counts;
  for (const auto& ex : data) {
    for (const auto& [name, v] : extract_features(ex.window, features)) ++counts[name];
  }
  for (const auto& [name, n] : counts) {
    if (n >= cfg.min_feature_count) {
      model.vocabulary.emplace(name, static_cast<std::uint32_t>(model.vocabulary.size()));
    }
  }

  const Dataset ds = build_dataset(model, data, cfg);
  model.weights = WeightMatrix(kNumFaceActs, ds.n_features + 1);
  Rng rng(cfg.seed);
  for (std::size_t c = 0; c < kNumFaceActs; ++c) {
    for (std::size_t j = 0; j < ds.n_features; ++j) model.weights(c, j) = rng.uniform(-cfg.init_scale, cfg.init_scale);
  }

  WeightMatrix grad;
  double loss = softmax_objective(model.weights, ds, cfg.l2, &grad);
  if (!std::isfinite(loss)) throw Error("train_baseline: non-finite initial loss");
  model.loss_history.push_back(loss);

  double lr = cfg.learning_rate;
  WeightMatrix candidate = model.weights;
  for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
    bool accepted = false;
    double next_loss = 0.0;
    for (int attempt = 0; attempt < 40; ++attempt) {
      auto cand = candidate.data();
      const auto cur = model.weights.data();
      const auto g = grad.data();
      for (std::size_t k = 0; k < cand.size(); ++k) cand[k] = cur[k] - lr * g[k];
      next_loss = softmax_objective(candidate, ds, cfg.l2);
      if (!cfg.backtracking) {
        if (!std::isfinite(next_loss)) throw Error("train_baseline: diverged (non-finite loss)");
        accepted = true;
        break;
      }
      if (std::isfinite(next_loss) && next_loss <= loss) {
        accepted = true;
        break;
      }
      lr *= 0.5;
    }
    if (!accepted) break;  // no descent step left at machine precision
    std::swap(model.weights, candidate);
    loss = softmax_objective(model.weights, ds, cfg.l2, &grad);
    model.loss_history.push_back(loss);
  }
  return model;
}

inline BaselineModel train_baseline(const std::vector<LabeledWindow>& data, const TrainConfig& cfg = {},
                                    const FeatureConfig& features = {}) {
  return train_baseline(std::span<const LabeledWindow>(data), cfg, features);
}

// ---------------------------------------------------------------------------
// Model files

inline constexpr const char* kModelFormat = "facework-baseline";
inline constexpr int kModelVersion = 1;

inline nlohmann::json model_to_json(const BaselineModel& m) {
  nlohmann::json j;
  j["format"] = kModelFormat;
  j["version"] = kModelVersion;
  nlohmann::json classes = nlohmann::json::array();
  for (FaceAct a : kAllFaceActs) classes.push_back(format_label(a));
  j["classes"] = classes;
  std::vector<std::string> names(m.vocabulary.size());
  for (const auto& [name, id] : m.vocabulary) names[id] = name;
  j["features"] = names;
  nlohmann::json rows = nlohmann::json::array();
  for (std::size_t c = 0; c < m.weights.rows(); ++c) {
    std::vector<double> row(m.weights.cols());
    for (std::size_t k = 0; k < row.size(); ++k) row[k] = m.weights(c, k);
    rows.push_back(row);
  }
  j["weights"] = rows;
  j["config"] = {{"learning_rate", m.config.learning_rate}, {"epochs", m.config.epochs},
                 {"l2", m.config.l2},
                 {"seed", m.config.seed},
                 {"init_scale", m.config.init_scale},
                 {"class_weights", m.config.class_weights},
                 {"backtracking", m.config.backtracking},
                 {"min_feature_count", m.config.min_feature_count},
                 {"context_size", m.config.context_size}};
  j["feature_config"] = {{"bigrams", m.features.bigrams},
                         {"context_unigrams", m.features.context_unigrams},
                         {"length_bucket", m.features.length_bucket},
                         {"punctuation_flags", m.features.punctuation_flags},
                         {"url_token", m.features.url_token}};
  j["loss_history"] = m.loss_history;
  return j;
}

inline BaselineModel model_from_json(const nlohmann::json& j) {
  try {
    if (j.at("format").get<std::string>() != kModelFormat) throw DataError("not a facework baseline model");
    if (j.at("version").get<int>() != kModelVersion) {
      throw DataError("unsupported model version " + std::to_string(j.at("version").get<int>()));
    }
    const auto& classes = j.at("classes");
    if (classes.size() != kNumFaceActs) throw DataError("model must have nine classes");
    for (std::size_t c = 0; c < kNumFaceActs; ++c) {
      if (classes[c].get<std::string>() != code(face_act_at(c))) throw DataError("model class order mismatch");
    }
    BaselineModel m;
    const auto names = j.at("features").get<std::vector<std::string>>();
    for (std::size_t k = 0; k < names.size(); ++k) {
      if (!m.vocabulary.emplace(names[k], static_cast<std::uint32_t>(k)).second) {
        throw DataError("duplicate feature \"" + names[k] + "\" in model");
      }
    }
    const auto& rows = j.at("weights");
    if (rows.size() != kNumFaceActs) throw DataError("weight matrix must have nine rows");
    m.weights = WeightMatrix(kNumFaceActs, names.size() + 1);
    for (std::size_t c = 0; c < kNumFaceActs; ++c) {
      const auto row = rows[c].get<std::vector<double>>();
      if (row.size() != names.size() + 1) throw DataError("weight row has wrong width");
      for (std::size_t k = 0; k < row.size(); ++k) {
        if (!std::isfinite(row[k])) throw DataError("non-finite weight in model");
        m.weights(c, k) = row[k];
      }
    }
    const auto& cfg = j.at("config");
    m.config.learning_rate = cfg.at("learning_rate").get<double>();
    m.config.epochs = cfg.at("epochs").get<std::size_t>();
    m.config.l2 = cfg.at("l2").get<double>();
    m.config.seed = cfg.at("seed").get<std::uint64_t>();
    m.config.init_scale = cfg.at("init_scale").get<double>();
    m.config.class_weights = cfg.at("class_weights").get<bool>();
    m.config.backtracking = cfg.at("backtracking").get<bool>();
    m.config.min_feature_count = cfg.at("min_feature_count").get<std::size_t>();
    m.config.context_size = cfg.at("context_size").get<std::size_t>();
    const auto& fc = j.at("feature_config");
    m.features.bigrams = fc.at("bigrams").get<bool>();
    m.features.context_unigrams = fc.at("context_unigrams").get<bool>();
    m.features.length_bucket = fc.at("length_bucket").get<bool>();
    m.features.punctuation_flags = fc.at("punctuation_flags").get<bool>();
    m.features.url_token = fc.at("url_token").get<std::string>();
    if (j.contains("loss_history")) m.loss_history = j["loss_history"].get<std::vector<double>>();
    return m;
  } catch (const nlohmann::json::exception& e) {
    throw DataError(std::string("invalid model file: ") + e.what());
  }
}

inline void save_model(const BaselineModel& m, const std::filesystem::path& file) {
  std::ofstream out(file, std::ios::binary | std::ios::trunc);
  if (!out) throw DataError("cannot write " + file.string());
  out << model_to_json(m).dump() << '\n';
}

inline BaselineModel load_model(const std::filesystem::path& file) {
  std::ifstream in(file);
  if (!in) throw DataError("cannot open model " + file.string());
  try {
    return model_from_json(nlohmann::json::parse(in));
  } catch (const nlohmann::json::parse_error& e) {
    throw DataError(file.string() + ": " + e.what());
  }
}

}  // namespace facework::tagger
