#pragma once

#include <algorithm>
#include <future>
#include <map>
#include <set>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "facework/corpus.hpp"
#include "facework/tagger/baseline.hpp"
#include "facework/tagger/context.hpp"
#include "facework/tagger/evaluation.hpp"

namespace facework::tagger {

struct Example {
  LabeledWindow labeled;
  std::string conversation_id;
  std::string utterance_id;
};

// One example per labeled utterance. Unlabeled utterances still serve as
// context for their neighbours.
inline std::vector<Example> labeled_examples(const Corpus& corpus, std::size_t k = kDefaultContextSize) {
  std::vector<Example> out;
  for (const auto& [conv_id, turns] : corpus.conversations) {
    const auto thread = thread_utterances(turns);
    for (std::size_t i = 0; i < thread.size(); ++i) {
      if (!thread[i].face_act) continue;
      out.push_back({{build_context_window(thread, i, k), *thread[i].face_act}, conv_id, thread[i].utterance_id});
    }
  }
  return out;
}

struct CrossValConfig {
  std::size_t folds = 5;
  std::uint64_t seed = 13;
  TrainConfig train;
  FeatureConfig features;
  // Folds trained concurrently.
  std::size_t jobs = 1;
};

struct CrossValResult {
  std::vector<EvalReport> folds;
  EvalReport mean;
  // Predicting the training fold's most frequent label everywhere.
  std::vector<EvalReport> majority_folds;
  EvalReport majority_mean;
  std::size_t n_examples = 0;
  std::size_t n_conversations = 0;
};

inline CrossValResult run_crossval(const std::vector<Example>& examples, const CrossValConfig& cfg) {
  if (examples.empty()) throw DataError("cross-validation needs labeled utterances; none found");
  std::vector<std::string> groups;
  groups.reserve(examples.size());
  for (const auto& ex : examples) groups.push_back(ex.conversation_id);
  const auto splits = crossval_splits_grouped(groups, cfg.folds, cfg.seed);

  struct FoldOutcome {
    EvalReport model;
    EvalReport majority;
  };
  auto run_fold = [&](std::size_t f) {
    const Fold& fold = splits[f];
    std::vector<LabeledWindow> train;
    std::vector<FaceAct> train_labels;
    for (std::size_t i : fold.train) {
      train.push_back(examples[i].labeled);
      train_labels.push_back(examples[i].labeled.label);
    }
    const BaselineModel model = train_baseline(train, cfg.train, cfg.features);
    const FaceAct majority = majority_label(train_labels);
    std::vector<FaceAct> pred, base, gold;
    for (std::size_t i : fold.test) {
      pred.push_back(predict(model, examples[i].labeled.window).label);
      base.push_back(majority);
      gold.push_back(examples[i].labeled.label);
    }
    FoldOutcome out{evaluate(pred, gold), evaluate(base, gold)};
    out.model.fold_id = f;
    out.majority.fold_id = f;
    return out;
  };

  std::vector<FoldOutcome> outcomes(splits.size());
  const std::size_t jobs = std::max<std::size_t>(1, cfg.jobs);
  for (std::size_t start = 0; start < splits.size(); start += jobs) {
    std::vector<std::future<FoldOutcome>> running;
    const std::size_t end = std::min(splits.size(), start + jobs);
    for (std::size_t f = start; f < end; ++f) {
      running.push_back(std::async(jobs > 1 ? std::launch::async : std::launch::deferred, run_fold, f));
    }
    for (std::size_t f = start; f < end; ++f) outcomes[f] = running[f - start].get();
  }

  CrossValResult r;
  for (auto& o : outcomes) {
    r.folds.push_back(o.model);
    r.majority_folds.push_back(o.majority);
  }
  r.mean = mean_report(r.folds);
  r.majority_mean = mean_report(r.majority_folds);
  r.n_examples = examples.size();
  r.n_conversations = std::set<std::string>(groups.begin(), groups.end()).size();
  return r;
}

inline nlohmann::json to_json(const CrossValResult& r) {
  nlohmann::json j;
  nlohmann::json folds = nlohmann::json::array();
  for (const auto& f : r.folds) folds.push_back(to_json(f));
  nlohmann::json majority = nlohmann::json::array();
  for (const auto& f : r.majority_folds) majority.push_back(to_json(f));
  j["folds"] = folds;
  j["mean"] = to_json(r.mean);
  j["majority_folds"] = majority;
  j["majority_mean"] = to_json(r.majority_mean);
  j["n_examples"] = r.n_examples;
  j["n_conversations"] = r.n_conversations;
  return j;
}

struct LabelApplication {
  std::size_t applied = 0;
  // Ids in the label map that name no utterance of the corpus.
  std::vector<std::string> unknown_ids;
};

inline LabelApplication apply_labels(Corpus& corpus, const std::map<std::string, FaceAct>& labels) {
  LabelApplication out;
  std::set<std::string> used;
  corpus.for_each_turn([&](Turn& t) {
    for (auto& u : t.utterances) {
      auto it = labels.find(u.id());
      if (it == labels.end()) continue;
      u.face_act = it->second;
      used.insert(it->first);
      ++out.applied;
    }
  });
  for (const auto& [id, act] : labels) {
    if (!used.count(id)) out.unknown_ids.push_back(id);
  }
  return out;
}

// Labels every utterance with the model's argmax prediction.
inline std::size_t tag_corpus(Corpus& corpus, const BaselineModel& model) {
  std::size_t tagged = 0;
  for (auto& [conv_id, turns] : corpus.conversations) {
    const auto thread = thread_utterances(turns);
    std::size_t i = 0;
    for (auto& t : turns) {
      for (auto& u : t.utterances) {
        u.face_act = predict(model, build_context_window(thread, i, model.config.context_size)).label;
        ++i;
        ++tagged;
      }
    }
  }
  return tagged;
}

}  // namespace facework::tagger
