#pragma once

#include <fcntl.h>
#include <unistd.h>

#include <algorithm>
#include <cerrno>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <mutex>
#include <optional>
#include <set>
#include <shared_mutex>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>
#include <spdlog/spdlog.h>

#include "facework/corpus.hpp"
#include "facework/error.hpp"
#include "facework/faceacts.hpp"
#include "facework/rng.hpp"
#include "facework/stats.hpp"
#include "facework/tagger/context.hpp"

namespace facework {

// Two annotators share no labeled utterance.
class NoOverlapError : public Error {
 public:
  using Error::Error;
};

struct LabelRecord {
  std::string utterance_id;
  std::string annotator_id;
  FaceAct label = FaceAct::None;
  // Milliseconds since the Unix epoch.
  std::int64_t timestamp = 0;

  bool operator==(const LabelRecord&) const = default;
};

inline nlohmann::json to_json(const LabelRecord& r) {
  return {{"utterance_id", r.utterance_id},
          {"annotator_id", r.annotator_id},
          {"label", format_label(r.label)},
          {"timestamp", r.timestamp}};
}

using Clock = std::function<std::int64_t()>;

inline Clock system_clock_ms() {
  return [] {
    return std::chrono::duration_cast<std::chrono::milliseconds>(std::chrono::system_clock::now().time_since_epoch())
        .count();
  };
}

// Append-only JSONL journal of label records. The live view keeps, per
// (utterance, annotator), the record with the greatest timestamp; equal
// timestamps resolve to the later journal line.
class LabelStore {
 public:
  explicit LabelStore(std::filesystem::path journal, Clock clock = system_clock_ms())
      : path_(std::move(journal)), clock_(std::move(clock)) {
    if (path_.has_parent_path()) std::filesystem::create_directories(path_.parent_path());
    const bool needs_newline = replay();
    fd_ = ::open(path_.c_str(), O_WRONLY | O_APPEND | O_CREAT | O_CLOEXEC, 0644);
    if (fd_ < 0) throw DataError("cannot open label journal " + path_.string() + ": " + std::strerror(errno));
    if (needs_newline) write_all("\n");
  }

  ~LabelStore() {
    if (fd_ >= 0) ::close(fd_);
  }
  LabelStore(const LabelStore&) = delete;
  LabelStore& operator=(const LabelStore&) = delete;

  const std::filesystem::path& path() const { return path_; }

  // Stamps the record with the store clock unless a timestamp is supplied.
  LabelRecord append(const std::string& utterance_id, const std::string& annotator_id, FaceAct label,
                     std::optional<std::int64_t> timestamp = std::nullopt) {
    if (utterance_id.empty()) throw ValidationError("utterance_id must not be empty");
    if (annotator_id.empty()) throw ValidationError("annotator_id must not be empty");
    std::unique_lock lock(mutex_);
    LabelRecord r{utterance_id, annotator_id, label, timestamp ? *timestamp : clock_()};
    write_all(to_json(r).dump() + "\n");
    if (::fsync(fd_) != 0) throw DataError("fsync failed on " + path_.string() + ": " + std::strerror(errno));
    admit(r);
    return r;
  }

  std::vector<LabelRecord> history() const {
    std::shared_lock lock(mutex_);
    return history_;
  }

  std::map<std::pair<std::string, std::string>, LabelRecord> live() const {
    std::shared_lock lock(mutex_);
    std::map<std::pair<std::string, std::string>, LabelRecord> out;
    for (const auto& [key, idx] : live_) out.emplace(key, history_[idx]);
    return out;
  }

  // utterance id -> live label of one annotator.
  std::map<std::string, FaceAct> labels_of(const std::string& annotator_id) const {
    std::shared_lock lock(mutex_);
    std::map<std::string, FaceAct> out;
    for (const auto& [key, idx] : live_)
      if (key.second == annotator_id) out.emplace(key.first, history_[idx].label);
    return out;
  }

  std::set<std::string> annotators() const {
    std::shared_lock lock(mutex_);
    std::set<std::string> out;
    for (const auto& [key, idx] : live_) out.insert(key.second);
    return out;
  }

 private:
  void admit(const LabelRecord& r) {
    history_.push_back(r);
    const std::size_t idx = history_.size() - 1;
    auto [it, inserted] = live_.try_emplace({r.utterance_id, r.annotator_id}, idx);
    if (!inserted && history_[it->second].timestamp <= r.timestamp) it->second = idx;
  }

  // Loads an existing journal. A final line without a newline that fails to
  // parse is a torn write and is cut from the file. Returns whether the kept
  // content lacks a trailing newline.
  bool replay() {
    std::ifstream in(path_, std::ios::binary);
    if (!in) return false;
    const std::string content((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    std::size_t pos = 0, lineno = 0;
    while (pos < content.size()) {
      const std::size_t end = content.find('\n', pos);
      const bool last = end == std::string::npos;
      const std::size_t start = pos;
      const std::string line = content.substr(pos, last ? std::string::npos : end - pos);
      pos = last ? content.size() : end + 1;
      ++lineno;
      if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
      try {
        const auto j = nlohmann::json::parse(line);
        admit({j.at("utterance_id").get<std::string>(), j.at("annotator_id").get<std::string>(),
               parse_label(j.at("label").get<std::string>()), j.at("timestamp").get<std::int64_t>()});
      } catch (const std::exception& e) {
        if (last) {
          spdlog::warn("{}:{}: dropping torn final journal line", path_.string(), lineno);
          in.close();
          std::filesystem::resize_file(path_, start);
          return false;
        }
        throw DataError(path_.string(), lineno, std::string("bad label record: ") + e.what());
      }
    }
    return !content.empty() && content.back() != '\n';
  }

  void write_all(const std::string& data) {
    std::size_t done = 0;
    while (done < data.size()) {
      const ssize_t n = ::write(fd_, data.data() + done, data.size() - done);
      if (n < 0) {
        if (errno == EINTR) continue;
        throw DataError("write failed on " + path_.string() + ": " + std::strerror(errno));
      }
      done += static_cast<std::size_t>(n);
    }
  }

  std::filesystem::path path_;
  Clock clock_;
  int fd_ = -1;
  mutable std::shared_mutex mutex_;
  std::vector<LabelRecord> history_;
  std::map<std::pair<std::string, std::string>, std::size_t> live_;
};

// ---------------------------------------------------------------------------
// Sampling and agreement

// Uniform sample of conversation ids without replacement.
inline std::vector<std::string> sample_tasks(const Corpus& corpus, std::size_t n, std::uint64_t seed) {
  if (n > corpus.conversations.size()) {
    throw ValidationError("cannot sample " + std::to_string(n) + " conversations from a corpus of " +
                          std::to_string(corpus.conversations.size()));
  }
  std::vector<std::string> ids;
  for (const auto& [id, turns] : corpus.conversations) ids.push_back(id);
  Rng rng(seed);
  rng.shuffle(ids);
  ids.resize(n);
  return ids;
}

struct AgreementResult {
  std::size_t n_overlap = 0;
  double kappa = 0.0;
  double observed = 0.0;
  double expected = 0.0;
  bool degenerate = false;
};

inline AgreementResult agreement(const LabelStore& store, const std::string& a, const std::string& b) {
  const auto la = store.labels_of(a);
  const auto lb = store.labels_of(b);
  std::vector<FaceAct> xa, xb;
  for (const auto& [utt, label] : la) {
    auto it = lb.find(utt);
    if (it == lb.end()) continue;
    xa.push_back(label);
    xb.push_back(it->second);
  }
  if (xa.empty()) throw NoOverlapError("annotators \"" + a + "\" and \"" + b + "\" share no labeled utterance");
  const auto k = stats::cohen_kappa(xa, xb);
  return {xa.size(), k.kappa, k.observed, k.expected, k.degenerate};
}

// ---------------------------------------------------------------------------
// Gold export

struct GoldRecord {
  std::string utterance_id;
  FaceAct label = FaceAct::None;
  // annotator id -> live label
  std::map<std::string, FaceAct> annotations;
  bool needs_adjudication = false;
};

struct ExportOptions {
  // Earlier annotators win disagreements; unlisted annotators follow in id order.
  std::vector<std::string> priority;
  bool include_unadjudicated = false;
};

inline std::vector<GoldRecord> export_gold(const LabelStore& store, const ExportOptions& opts = {}) {
  auto rank = [&](const std::string& annotator) {
    auto it = std::find(opts.priority.begin(), opts.priority.end(), annotator);
    return std::make_pair(static_cast<std::size_t>(it - opts.priority.begin()), annotator);
  };
  std::map<std::string, GoldRecord> by_utt;
  for (const auto& [key, rec] : store.live()) {
    auto& g = by_utt[key.first];
    g.utterance_id = key.first;
    g.annotations[key.second] = rec.label;
  }
  std::vector<GoldRecord> out;
  for (auto& [utt, g] : by_utt) {
    std::set<FaceAct> distinct;
    const std::string* best = nullptr;
    for (const auto& [annotator, label] : g.annotations) {
      distinct.insert(label);
      if (!best || rank(annotator) < rank(*best)) best = &annotator;
    }
    g.label = g.annotations.at(*best);
    g.needs_adjudication = distinct.size() > 1;
    if (g.needs_adjudication && !opts.include_unadjudicated) continue;
    out.push_back(g);
  }
  return out;
}

inline nlohmann::json to_json(const GoldRecord& g) {
  nlohmann::json annotations = nlohmann::json::object();
  for (const auto& [a, label] : g.annotations) annotations[a] = format_label(label);
  return {{"utterance_id", g.utterance_id},
          {"label", format_label(g.label)},
          {"needs_adjudication", g.needs_adjudication},
          {"annotations", annotations}};
}

// JSONL readable by tagger::import_predictions.
inline void write_gold(const std::vector<GoldRecord>& records, const std::filesystem::path& file) {
  std::ofstream out(file, std::ios::binary | std::ios::trunc);
  if (!out) throw DataError("cannot write " + file.string());
  for (const auto& g : records) out << to_json(g).dump() << '\n';
}

// ---------------------------------------------------------------------------
// Service

struct AnnotationConfig {
  std::size_t sample_size = 200;
  std::uint64_t seed = 13;
  // Known annotators. Empty means every annotator sees every sampled task.
  std::vector<std::string> annotators;
  // Share of sampled conversations given to every listed annotator; the rest
  // are dealt out round-robin.
  double overlap_fraction = 1.0;
  std::size_t context_size = tagger::kDefaultContextSize;
};

// Transport-independent request handlers. Errors surface as exceptions:
// ValidationError (bad input), NotFound, NoOverlapError.
class AnnotationService {
 public:
  AnnotationService(const Corpus& corpus, LabelStore& store, AnnotationConfig cfg = {})
      : corpus_(corpus), store_(store), cfg_(std::move(cfg)) {
    if (!(cfg_.overlap_fraction >= 0.0 && cfg_.overlap_fraction <= 1.0))
      throw ValidationError("overlap fraction must lie in [0, 1]");
    sample_ = sample_tasks(corpus_, std::min(cfg_.sample_size, corpus_.conversations.size()), cfg_.seed);
    for (const auto& [conv_id, turns] : corpus_.conversations)
      for (const auto& t : turns)
        for (const auto& u : t.utterances) utterance_conversation_.emplace(u.id(), conv_id);
    const auto shared = static_cast<std::size_t>(std::floor(cfg_.overlap_fraction * static_cast<double>(sample_.size()) + 1e-9));
    for (std::size_t i = 0; i < sample_.size(); ++i) {
      if (cfg_.annotators.empty()) break;
      if (i < shared) {
        for (const auto& a : cfg_.annotators) assignment_[a].push_back(sample_[i]);
      } else {
        assignment_[cfg_.annotators[(i - shared) % cfg_.annotators.size()]].push_back(sample_[i]);
      }
    }
  }

  const std::vector<std::string>& sample() const { return sample_; }

  std::vector<std::string> tasks_for(const std::string& annotator) const {
    if (cfg_.annotators.empty()) return sample_;
    auto it = assignment_.find(annotator);
    if (it == assignment_.end()) throw NotFound("unknown annotator \"" + annotator + "\"");
    return it->second;
  }

  nlohmann::json tasks(const std::string& annotator) const {
    if (annotator.empty()) throw ValidationError("missing annotator");
    const auto labels = store_.labels_of(annotator);
    nlohmann::json out = nlohmann::json::array();
    for (const auto& conv_id : tasks_for(annotator)) {
      std::size_t total = 0, done = 0;
      for (const auto& t : corpus_.conversations.at(conv_id)) {
        for (const auto& u : t.utterances) {
          ++total;
          done += labels.count(u.id());
        }
      }
      out.push_back({{"conversation_id", conv_id}, {"n_utterances", total}, {"n_labeled", done}});
    }
    return {{"annotator", annotator}, {"tasks", out}};
  }

  nlohmann::json conversation(const std::string& conv_id, const std::string& annotator) const {
    auto it = corpus_.conversations.find(conv_id);
    if (it == corpus_.conversations.end()) throw NotFound("unknown conversation \"" + conv_id + "\"");
    const auto labels = annotator.empty() ? std::map<std::string, FaceAct>{} : store_.labels_of(annotator);
    const auto thread = tagger::thread_utterances(it->second);
    nlohmann::json utts = nlohmann::json::array();
    for (std::size_t i = 0; i < thread.size(); ++i) {
      const auto& u = thread[i];
      auto l = labels.find(u.utterance_id);
      utts.push_back({{"utterance_id", u.utterance_id},
                      {"turn_id", u.turn_id},
                      {"speaker_id", u.speaker_id},
                      {"text", u.text},
                      {"context", tagger::render_window(tagger::build_context_window(thread, i, cfg_.context_size))},
                      {"label", l == labels.end() ? nlohmann::json(nullptr) : nlohmann::json(format_label(l->second))}});
    }
    return {{"conversation_id", conv_id}, {"annotator", annotator}, {"utterances", utts}};
  }

  nlohmann::json submit(const nlohmann::json& body) {
    if (!body.is_object()) throw ValidationError("request body must be a JSON object");
    for (const char* key : {"utterance_id", "annotator_id", "label"}) {
      if (!body.contains(key) || !body[key].is_string()) {
        throw ValidationError(std::string("\"") + key + "\" must be a string");
      }
    }
    std::optional<std::int64_t> ts;
    if (body.contains("timestamp") && !body["timestamp"].is_null()) {
      if (!body["timestamp"].is_number_integer()) throw ValidationError("\"timestamp\" must be an integer");
      ts = body["timestamp"].get<std::int64_t>();
    }
    const FaceAct label = parse_label(body["label"].get<std::string>());
    const auto utt = body["utterance_id"].get<std::string>();
    if (!utterance_conversation_.count(utt)) throw NotFound("unknown utterance \"" + utt + "\"");
    const auto rec = store_.append(utt, body["annotator_id"].get<std::string>(), label, ts);
    return {{"ok", true}, {"record", to_json(rec)}};
  }

  nlohmann::json agreement_json(const std::string& a, const std::string& b) const {
    if (a.empty() || b.empty()) throw ValidationError("both annotators are required");
    const auto r = agreement(store_, a, b);
    return {{"a", a},
            {"b", b},
            {"n_overlap", r.n_overlap},
            {"kappa", r.kappa},
            {"observed", r.observed},
            {"expected", r.expected},
            {"degenerate", r.degenerate}};
  }

  static nlohmann::json labelset() {
    nlohmann::json out = nlohmann::json::array();
    for (std::size_t k = 0; k < kNumFaceActs; ++k) {
      const FaceAct a = face_act_at(k);
      out.push_back({{"code", std::string(code(a))}, {"mnemonic", std::string(mnemonic(a))}, {"shortcut", k + 1}});
    }
    return {{"labels", out}};
  }

 private:
  const Corpus& corpus_;
  LabelStore& store_;
  AnnotationConfig cfg_;
  std::vector<std::string> sample_;
  std::map<std::string, std::vector<std::string>> assignment_;
  std::map<std::string, std::string> utterance_conversation_;
};

}  // namespace facework
