#pragma once

#include <algorithm>
#include <array>
#include <cstdint>
#include <map>
#include <numeric>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "facework/faceacts.hpp"
#include "facework/rng.hpp"

namespace facework::tagger {

using ConfusionMatrix = std::array<std::array<std::size_t, kNumFaceActs>, kNumFaceActs>;

struct EvalReport {
  std::array<double, kNumFaceActs> per_class_f1{};
  std::array<double, kNumFaceActs> precision{};
  std::array<double, kNumFaceActs> recall{};
  double micro_f1 = 0.0;
  double macro_f1 = 0.0;
  // confusion[gold][predicted]
  ConfusionMatrix confusion{};
  std::size_t n = 0;
  std::optional<std::size_t> fold_id;
};

inline double f1_score(double precision, double recall) {
  return precision + recall > 0.0 ? 2.0 * precision * recall / (precision + recall) : 0.0;
}

inline EvalReport evaluate(std::span<const FaceAct> pred, std::span<const FaceAct> gold) {
  if (pred.size() != gold.size()) throw std::invalid_argument("evaluate: prediction/gold length mismatch");
  if (gold.empty()) throw std::invalid_argument("evaluate: no items");
  EvalReport r;
  r.n = gold.size();
  for (std::size_t i = 0; i < gold.size(); ++i) ++r.confusion[index_of(gold[i])][index_of(pred[i])];

  std::size_t tp_total = 0, fp_total = 0, fn_total = 0;
  double f1_sum = 0.0;
  for (std::size_t c = 0; c < kNumFaceActs; ++c) {
    const std::size_t tp = r.confusion[c][c];
    std::size_t gold_c = 0, pred_c = 0;
    for (std::size_t k = 0; k < kNumFaceActs; ++k) {
      gold_c += r.confusion[c][k];
      pred_c += r.confusion[k][c];
    }
    r.precision[c] = pred_c ? static_cast<double>(tp) / static_cast<double>(pred_c) : 0.0;
    r.recall[c] = gold_c ? static_cast<double>(tp) / static_cast<double>(gold_c) : 0.0;
    r.per_class_f1[c] = f1_score(r.precision[c], r.recall[c]);
    f1_sum += r.per_class_f1[c];
    tp_total += tp;
    fp_total += pred_c - tp;
    fn_total += gold_c - tp;
  }
  const double micro_p = tp_total + fp_total ? static_cast<double>(tp_total) / static_cast<double>(tp_total + fp_total) : 0.0;
  const double micro_r = tp_total + fn_total ? static_cast<double>(tp_total) / static_cast<double>(tp_total + fn_total) : 0.0;
  r.micro_f1 = f1_score(micro_p, micro_r);
  r.macro_f1 = f1_sum / static_cast<double>(kNumFaceActs);
  return r;
}

inline EvalReport evaluate(const std::vector<FaceAct>& pred, const std::vector<FaceAct>& gold) {
  return evaluate(std::span<const FaceAct>(pred), std::span<const FaceAct>(gold));
}

// Arithmetic mean of fold metrics; confusion counts are summed.
inline EvalReport mean_report(std::span<const EvalReport> folds) {
  if (folds.empty()) throw std::invalid_argument("mean_report: no folds");
  EvalReport m;
  const double k = static_cast<double>(folds.size());
  for (const auto& f : folds) {
    for (std::size_t c = 0; c < kNumFaceActs; ++c) {
      m.per_class_f1[c] += f.per_class_f1[c] / k;
      m.precision[c] += f.precision[c] / k;
      m.recall[c] += f.recall[c] / k;
      for (std::size_t p = 0; p < kNumFaceActs; ++p) m.confusion[c][p] += f.confusion[c][p];
    }
    m.micro_f1 += f.micro_f1 / k;
    m.macro_f1 += f.macro_f1 / k;
    m.n += f.n;
  }
  return m;
}

inline nlohmann::json to_json(const EvalReport& r) {
  nlohmann::json j;
  nlohmann::json per_class = nlohmann::json::object();
  for (std::size_t c = 0; c < kNumFaceActs; ++c) {
    per_class[std::string(code(face_act_at(c)))] = {{"mnemonic", std::string(mnemonic(face_act_at(c)))},
                                                    {"f1", r.per_class_f1[c]},
                                                    {"precision", r.precision[c]},
                                                    {"recall", r.recall[c]}};
  }
  j["per_class"] = per_class;
  j["micro_f1"] = r.micro_f1;
  j["macro_f1"] = r.macro_f1;
  j["n"] = r.n;
  nlohmann::json conf = nlohmann::json::array();
  for (const auto& row : r.confusion) conf.push_back(row);
  j["confusion"] = conf;
  j["fold_id"] = r.fold_id ? nlohmann::json(*r.fold_id) : nlohmann::json(nullptr);
  return j;
}

// Most frequent label; ties go to the earlier canonical class.
inline FaceAct majority_label(std::span<const FaceAct> labels) {
  std::array<std::size_t, kNumFaceActs> counts{};
  for (FaceAct a : labels) ++counts[index_of(a)];
  std::size_t best = 0;
  for (std::size_t c = 1; c < kNumFaceActs; ++c) {
    if (counts[c] > counts[best]) best = c;
  }
  return face_act_at(best);
}

// ---------------------------------------------------------------------------
// Cross-validation splits

struct Fold {
  std::vector<std::size_t> train;
  std::vector<std::size_t> test;
};

namespace detail {

// Shuffled units cut into k contiguous chunks whose sizes differ by <= 1.
inline std::vector<std::vector<std::size_t>> chunk_units(std::size_t n_units, std::size_t k, std::uint64_t seed) {
  std::vector<std::size_t> order(n_units);
  std::iota(order.begin(), order.end(), std::size_t{0});
  Rng rng(seed);
  rng.shuffle(order);
  std::vector<std::vector<std::size_t>> chunks(k);
  const std::size_t base = n_units / k;
  const std::size_t extra = n_units % k;
  std::size_t pos = 0;
  for (std::size_t f = 0; f < k; ++f) {
    const std::size_t size = base + (f < extra ? 1 : 0);
    chunks[f].assign(order.begin() + static_cast<std::ptrdiff_t>(pos),
                     order.begin() + static_cast<std::ptrdiff_t>(pos + size));
    pos += size;
  }
  return chunks;
}

inline std::vector<Fold> folds_from_membership(const std::vector<std::size_t>& fold_of, std::size_t k) {
  std::vector<Fold> folds(k);
  for (std::size_t i = 0; i < fold_of.size(); ++i) {
    for (std::size_t f = 0; f < k; ++f) (f == fold_of[i] ? folds[f].test : folds[f].train).push_back(i);
  }
  return folds;
}

}  // namespace detail

inline std::vector<Fold> crossval_splits(std::size_t n, std::size_t k = 5, std::uint64_t seed = 13) {
  if (k < 2) throw std::invalid_argument("crossval_splits: need at least two folds");
  if (n < k) {
    throw std::invalid_argument("crossval_splits: " + std::to_string(n) + " items cannot fill " +
                                std::to_string(k) + " folds");
  }
  const auto chunks = detail::chunk_units(n, k, seed);
  std::vector<std::size_t> fold_of(n);
  for (std::size_t f = 0; f < k; ++f)
    for (std::size_t i : chunks[f]) fold_of[i] = f;
  return detail::folds_from_membership(fold_of, k);
}

// Splits by group (conversation) so no group straddles train and test. Fold
// sizes are balanced in groups, not items.
inline std::vector<Fold> crossval_splits_grouped(std::span<const std::string> group_of_item, std::size_t k = 5,
                                                 std::uint64_t seed = 13) {
  if (k < 2) throw std::invalid_argument("crossval_splits: need at least two folds");
  std::map<std::string, std::size_t> group_index;
  for (const auto& g : group_of_item) group_index.emplace(g, 0);
  if (group_index.size() < k) {
    throw std::invalid_argument("crossval_splits: " + std::to_string(group_index.size()) +
                                " conversations cannot fill " + std::to_string(k) + " folds");
  }
  std::size_t next = 0;
  for (auto& [g, idx] : group_index) idx = next++;
  const auto chunks = detail::chunk_units(group_index.size(), k, seed);
  std::vector<std::size_t> fold_of_group(group_index.size());
  for (std::size_t f = 0; f < k; ++f)
    for (std::size_t g : chunks[f]) fold_of_group[g] = f;
  std::vector<std::size_t> fold_of(group_of_item.size());
  for (std::size_t i = 0; i < group_of_item.size(); ++i) fold_of[i] = fold_of_group[group_index.at(group_of_item[i])];
  return detail::folds_from_membership(fold_of, k);
}

}  // namespace facework::tagger
