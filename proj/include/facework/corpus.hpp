#pragma once

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>
#include <spdlog/spdlog.h>

#include "facework/error.hpp"
#include "facework/faceacts.hpp"
#include "facework/stats.hpp"
#include "facework/textprep.hpp"

namespace facework {

inline constexpr const char* kUtterancesFile = "utterances.jsonl";
inline constexpr const char* kSpeakersFile = "speakers.json";

struct Speaker {
  std::string id;
  std::optional<bool> is_admin;
  std::optional<std::string> gender;
  std::optional<std::int64_t> edit_count;
  std::map<std::string, std::string> extra_meta;
  // Created on load because a turn referenced an id missing from speakers.json.
  bool placeholder = false;

  bool operator==(const Speaker&) const = default;
};

// One sentence-level segment of a turn; the unit that carries a face act.
struct Utterance {
  std::string turn_id;
  std::size_t index_in_turn = 0;
  std::string text;
  std::optional<FaceAct> face_act;

  std::string id() const { return turn_id + "#" + std::to_string(index_in_turn); }

  bool operator==(const Utterance&) const = default;
};

// One post by one speaker; the unit that carries a politeness score.
struct Turn {
  std::string id;
  std::string speaker_id;
  std::string conversation_id;
  std::optional<std::string> reply_to;
  std::optional<std::int64_t> timestamp;
  std::string raw_text;
  std::optional<double> politeness_score;
  std::vector<Utterance> utterances;
  std::map<std::string, std::string> extra_meta;
  // reply_to names a turn outside this conversation; treated as a root.
  bool orphan_reply = false;

  bool operator==(const Turn&) const = default;
};

struct LoadOptions {
  std::string politeness_key = "politeness";
  // Fail on the first malformed line instead of skipping it.
  bool strict = false;
};

struct Provenance {
  std::filesystem::path source;
  LoadOptions options;
  std::size_t skipped_lines = 0;
};

struct Corpus {
  std::map<std::string, Speaker> speakers;
  // Conversation id -> turns in thread order.
  std::map<std::string, std::vector<Turn>> conversations;
  Provenance provenance;

  // Content equality; provenance is ignored.
  bool operator==(const Corpus& other) const {
    return speakers == other.speakers && conversations == other.conversations;
  }

  std::size_t num_turns() const {
    std::size_t n = 0;
    for (const auto& [id, turns] : conversations) n += turns.size();
    return n;
  }

  std::size_t num_utterances() const {
    std::size_t n = 0;
    for (const auto& [id, turns] : conversations)
      for (const auto& t : turns) n += t.utterances.size();
    return n;
  }

  template <typename Fn>
  void for_each_turn(Fn&& fn) const {
    for (const auto& [id, turns] : conversations)
      for (const auto& t : turns) fn(t);
  }

  template <typename Fn>
  void for_each_turn(Fn&& fn) {
    for (auto& [id, turns] : conversations)
      for (auto& t : turns) fn(t);
  }
};

// ---------------------------------------------------------------------------
// Thread ordering

namespace detail {

inline bool turn_before(const Turn& a, const Turn& b) {
  // Turns without a timestamp sort after timestamped ones.
  if (a.timestamp.has_value() != b.timestamp.has_value()) return a.timestamp.has_value();
  if (a.timestamp && *a.timestamp != *b.timestamp) return *a.timestamp < *b.timestamp;
  return a.id < b.id;
}

}  // namespace detail

// Depth-first traversal of the reply forest: roots by (timestamp, id), each
// turn followed by its replies, siblings by (timestamp, id).
inline std::vector<Turn> order_conversation(std::vector<Turn> turns) {
  std::map<std::string, std::size_t> index;
  for (std::size_t i = 0; i < turns.size(); ++i) {
    if (!index.emplace(turns[i].id, i).second) {
      throw DataError("duplicate turn id \"" + turns[i].id + "\" in conversation \"" +
                      turns[i].conversation_id + "\"");
    }
  }

  std::vector<std::optional<std::size_t>> parent(turns.size());
  std::vector<std::vector<std::size_t>> children(turns.size());
  std::vector<std::size_t> roots;
  for (std::size_t i = 0; i < turns.size(); ++i) {
    Turn& t = turns[i];
    t.orphan_reply = false;
    if (!t.reply_to) {
      roots.push_back(i);
      continue;
    }
    auto it = index.find(*t.reply_to);
    if (it == index.end()) {
      t.orphan_reply = true;
      roots.push_back(i);
      continue;
    }
    parent[i] = it->second;
    children[it->second].push_back(i);
  }

  auto by_time = [&](std::size_t a, std::size_t b) { return detail::turn_before(turns[a], turns[b]); };
  std::sort(roots.begin(), roots.end(), by_time);
  for (auto& c : children) std::sort(c.begin(), c.end(), by_time);

  std::vector<std::size_t> order;
  order.reserve(turns.size());
  std::vector<bool> seen(turns.size(), false);
  std::vector<std::size_t> stack(roots.rbegin(), roots.rend());
  while (!stack.empty()) {
    const std::size_t i = stack.back();
    stack.pop_back();
    seen[i] = true;
    order.push_back(i);
    for (auto it = children[i].rbegin(); it != children[i].rend(); ++it) stack.push_back(*it);
  }

  if (order.size() != turns.size()) {
    // Every unreached turn sits on or hangs below a cycle; walk up to find it.
    std::size_t start = 0;
    while (seen[start]) ++start;
    std::vector<std::size_t> path;
    std::map<std::size_t, std::size_t> pos;
    std::size_t cur = start;
    while (!pos.count(cur)) {
      pos[cur] = path.size();
      path.push_back(cur);
      cur = *parent[cur];
    }
    std::string cycle;
    for (std::size_t k = pos[cur]; k < path.size(); ++k) cycle += turns[path[k]].id + " -> ";
    cycle += turns[cur].id;
    throw DataError("reply cycle in conversation \"" + turns[start].conversation_id + "\": " + cycle);
  }

  std::vector<Turn> out;
  out.reserve(turns.size());
  for (std::size_t i : order) out.push_back(std::move(turns[i]));
  return out;
}

// ---------------------------------------------------------------------------
// Loading and saving

namespace detail {

inline std::string meta_value_string(const nlohmann::json& v) {
  return v.is_string() ? v.get<std::string>() : v.dump();
}

inline std::optional<bool> parse_admin_flag(const nlohmann::json& v) {
  if (v.is_null()) return std::nullopt;
  if (v.is_boolean()) return v.get<bool>();
  if (v.is_number_integer()) return v.get<std::int64_t>() != 0;
  if (v.is_string()) {
    std::string s = v.get<std::string>();
    for (char& c : s) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    if (s == "true" || s == "yes" || s == "1") return true;
    if (s == "false" || s == "no" || s == "0") return false;
  }
  throw DataError("unrecognized is_admin value " + v.dump());
}

inline std::optional<std::int64_t> parse_edit_count(const nlohmann::json& v) {
  if (v.is_null()) return std::nullopt;
  std::int64_t n = 0;
  if (v.is_number_integer()) {
    n = v.get<std::int64_t>();
  } else if (v.is_number_float() && std::floor(v.get<double>()) == v.get<double>()) {
    n = static_cast<std::int64_t>(v.get<double>());
  } else if (v.is_string()) {
    const std::string s = v.get<std::string>();
    std::size_t used = 0;
    try {
      n = std::stoll(s, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used == 0 || used != s.size()) throw DataError("unrecognized edit_count value " + v.dump());
  } else {
    throw DataError("unrecognized edit_count value " + v.dump());
  }
  if (n < 0) throw DataError("edit_count must be non-negative, got " + std::to_string(n));
  return n;
}

inline Speaker parse_speaker(const std::string& id, const nlohmann::json& entry) {
  if (id.empty()) throw DataError("empty speaker id in speakers file");
  const nlohmann::json* meta = &entry;
  // ConvoKit dumps sometimes wrap the metadata as {"meta": {...}}.
  if (entry.is_object() && entry.size() == 1 && entry.contains("meta") && entry["meta"].is_object()) {
    meta = &entry["meta"];
  }
  if (!meta->is_object()) throw DataError("speaker \"" + id + "\": metadata is not an object");
  Speaker s;
  s.id = id;
  for (const auto& [key, value] : meta->items()) {
    if (key == "is_admin" || key == "is-admin") {
      s.is_admin = parse_admin_flag(value);
    } else if (key == "gender") {
      if (!value.is_null()) s.gender = meta_value_string(value);
    } else if (key == "edit_count" || key == "edit-count") {
      s.edit_count = parse_edit_count(value);
    } else {
      s.extra_meta[key] = meta_value_string(value);
    }
  }
  return s;
}

inline Turn parse_turn(const nlohmann::json& obj, const LoadOptions& options) {
  if (!obj.is_object()) throw DataError("line is not a JSON object");
  auto required_string = [&](std::initializer_list<const char*> keys) -> std::string {
    for (const char* k : keys) {
      if (obj.contains(k)) {
        if (!obj[k].is_string()) throw DataError(std::string("key \"") + k + "\" must be a string");
        return obj[k].get<std::string>();
      }
    }
    throw DataError(std::string("missing required key \"") + *keys.begin() + "\"");
  };

  Turn t;
  t.id = required_string({"id"});
  if (t.id.empty()) throw DataError("empty turn id");
  t.speaker_id = required_string({"speaker", "user"});
  if (t.speaker_id.empty()) throw DataError("turn \"" + t.id + "\": empty speaker id");
  t.conversation_id = required_string({"conversation_id", "root"});

  for (const char* key : {"reply_to", "reply-to"}) {
    if (!obj.contains(key)) continue;
    const auto& v = obj[key];
    if (v.is_string()) {
      t.reply_to = v.get<std::string>();
    } else if (!v.is_null()) {
      throw DataError(std::string("key \"") + key + "\" must be a string or null");
    }
    break;
  }

  if (obj.contains("timestamp") && !obj["timestamp"].is_null()) {
    const auto& v = obj["timestamp"];
    if (v.is_number_integer()) {
      t.timestamp = v.get<std::int64_t>();
    } else if (v.is_number_float()) {
      t.timestamp = static_cast<std::int64_t>(std::floor(v.get<double>()));
    } else {
      throw DataError("key \"timestamp\" must be a number or null");
    }
  }

  if (obj.contains("text")) {
    if (!obj["text"].is_string()) throw DataError("key \"text\" must be a string");
    t.raw_text = obj["text"].get<std::string>();
  }

  if (obj.contains("meta") && !obj["meta"].is_null()) {
    const auto& meta = obj["meta"];
    if (!meta.is_object()) throw DataError("key \"meta\" must be an object");
    for (const auto& [key, value] : meta.items()) {
      if (key == options.politeness_key) {
        if (value.is_number()) {
          const double s = value.get<double>();
          if (!std::isfinite(s)) throw DataError("non-finite politeness score");
          t.politeness_score = s;
        } else if (!value.is_null()) {
          throw DataError("politeness score \"" + key + "\" must be a number");
        }
      } else {
        t.extra_meta[key] = meta_value_string(value);
      }
    }
  }

  if (obj.contains("segments") && !obj["segments"].is_null()) {
    const auto& segs = obj["segments"];
    if (!segs.is_array()) throw DataError("key \"segments\" must be an array");
    for (std::size_t k = 0; k < segs.size(); ++k) {
      const auto& s = segs[k];
      if (!s.is_object() || !s.contains("text") || !s["text"].is_string()) {
        throw DataError("segment " + std::to_string(k) + " needs a string \"text\"");
      }
      Utterance u;
      u.turn_id = t.id;
      u.index_in_turn = k;
      u.text = s["text"].get<std::string>();
      if (detail::trim(u.text).empty()) throw DataError("segment " + std::to_string(k) + " is blank");
      if (s.contains("face_act") && !s["face_act"].is_null()) {
        if (!s["face_act"].is_string()) throw DataError("face_act must be a string");
        try {
          u.face_act = parse_label(s["face_act"].get<std::string>());
        } catch (const ValidationError& e) {
          throw DataError(e.what());
        }
      }
      t.utterances.push_back(std::move(u));
    }
  }
  return t;
}

}  // namespace detail

// Reads <dir>/utterances.jsonl (one turn per line) and optional
// <dir>/speakers.json. Malformed lines abort in strict mode and are skipped
// and counted otherwise. Conversations come back in thread order.
inline Corpus load_corpus(const std::filesystem::path& dir, const LoadOptions& options = {}) {
  namespace fs = std::filesystem;
  const fs::path utterances = dir / kUtterancesFile;
  if (!fs::exists(utterances)) throw DataError("missing " + utterances.string());

  Corpus corpus;
  corpus.provenance.source = dir;
  corpus.provenance.options = options;

  const fs::path speakers_path = dir / kSpeakersFile;
  if (fs::exists(speakers_path)) {
    std::ifstream in(speakers_path);
    nlohmann::json doc;
    try {
      doc = nlohmann::json::parse(in);
    } catch (const nlohmann::json::exception& e) {
      throw DataError(speakers_path.string() + ": " + e.what());
    }
    if (!doc.is_object()) throw DataError(speakers_path.string() + ": expected an object of speakers");
    for (const auto& [id, entry] : doc.items()) {
      try {
        corpus.speakers.emplace(id, detail::parse_speaker(id, entry));
      } catch (const DataError& e) {
        if (options.strict) throw DataError(speakers_path.string() + ": " + e.what());
        spdlog::warn("{}: skipping speaker \"{}\": {}", speakers_path.string(), id, e.what());
        ++corpus.provenance.skipped_lines;
      }
    }
  }

  std::ifstream in(utterances);
  if (!in) throw DataError("cannot open " + utterances.string());
  std::map<std::string, std::vector<Turn>> grouped;
  std::set<std::string> seen_ids;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (detail::trim(line).empty()) continue;
    try {
      nlohmann::json obj;
      try {
        obj = nlohmann::json::parse(line);
      } catch (const nlohmann::json::exception& e) {
        throw DataError(std::string("malformed JSON: ") + e.what());
      }
      Turn t = detail::parse_turn(obj, options);
      if (!seen_ids.insert(t.id).second) throw DataError("duplicate turn id \"" + t.id + "\"");
      grouped[t.conversation_id].push_back(std::move(t));
    } catch (const DataError& e) {
      if (options.strict) throw DataError(utterances.string(), lineno, e.what());
      spdlog::warn("{}:{}: skipping line: {}", utterances.string(), lineno, e.what());
      ++corpus.provenance.skipped_lines;
    }
  }
  if (corpus.provenance.skipped_lines > 0) {
    spdlog::warn("{}: skipped {} malformed entries", dir.string(), corpus.provenance.skipped_lines);
  }

  for (auto& [conv_id, turns] : grouped) {
    for (const Turn& t : turns) {
      if (!corpus.speakers.count(t.speaker_id)) {
        Speaker placeholder;
        placeholder.id = t.speaker_id;
        placeholder.placeholder = true;
        corpus.speakers.emplace(t.speaker_id, std::move(placeholder));
      }
    }
    corpus.conversations.emplace(conv_id, order_conversation(std::move(turns)));
  }
  return corpus;
}

inline nlohmann::json turn_to_json(const Turn& t, const std::string& politeness_key) {
  nlohmann::json obj;
  obj["id"] = t.id;
  obj["speaker"] = t.speaker_id;
  obj["conversation_id"] = t.conversation_id;
  obj["reply_to"] = t.reply_to ? nlohmann::json(*t.reply_to) : nlohmann::json(nullptr);
  obj["timestamp"] = t.timestamp ? nlohmann::json(*t.timestamp) : nlohmann::json(nullptr);
  obj["text"] = t.raw_text;
  nlohmann::json meta = nlohmann::json::object();
  for (const auto& [k, v] : t.extra_meta) meta[k] = v;
  if (t.politeness_score) meta[politeness_key] = *t.politeness_score;
  obj["meta"] = meta;
  if (!t.utterances.empty()) {
    nlohmann::json segs = nlohmann::json::array();
    for (const auto& u : t.utterances) {
      nlohmann::json s;
      s["text"] = u.text;
      s["face_act"] = u.face_act ? nlohmann::json(format_label(*u.face_act)) : nlohmann::json(nullptr);
      segs.push_back(std::move(s));
    }
    obj["segments"] = std::move(segs);
  }
  return obj;
}

// Writes the corpus in the layout load_corpus reads. Placeholder speakers are
// not written; they are recreated on the next load.
inline void save_corpus(const Corpus& corpus, const std::filesystem::path& dir,
                        const std::string& politeness_key = "politeness") {
  namespace fs = std::filesystem;
  fs::create_directories(dir);
  {
    std::ofstream out(dir / kUtterancesFile, std::ios::binary | std::ios::trunc);
    if (!out) throw DataError("cannot write " + (dir / kUtterancesFile).string());
    for (const auto& [conv_id, turns] : corpus.conversations)
      for (const auto& t : turns) out << turn_to_json(t, politeness_key).dump() << '\n';
  }
  nlohmann::json speakers = nlohmann::json::object();
  for (const auto& [id, s] : corpus.speakers) {
    if (s.placeholder) continue;
    nlohmann::json meta = nlohmann::json::object();
    for (const auto& [k, v] : s.extra_meta) meta[k] = v;
    if (s.is_admin) meta["is_admin"] = *s.is_admin;
    if (s.gender) meta["gender"] = *s.gender;
    if (s.edit_count) meta["edit_count"] = *s.edit_count;
    speakers[id] = std::move(meta);
  }
  std::ofstream out(dir / kSpeakersFile, std::ios::binary | std::ios::trunc);
  if (!out) throw DataError("cannot write " + (dir / kSpeakersFile).string());
  out << speakers.dump(1) << '\n';
}

// Fills Turn::utterances from raw text (scrub -> mask -> segment). Turns that
// already carry segments are kept unless `resegment` is set.
inline void segment_corpus(Corpus& corpus, const SegmenterConfig& cfg, bool resegment = false) {
  corpus.for_each_turn([&](Turn& t) {
    if (!t.utterances.empty() && !resegment) return;
    t.utterances.clear();
    const auto segments = prepare_text(t.raw_text, cfg);
    for (std::size_t k = 0; k < segments.size(); ++k) {
      t.utterances.push_back(Utterance{t.id, k, segments[k], std::nullopt});
    }
  });
}

// ---------------------------------------------------------------------------
// Cohorts

enum class AdminCohort { Admin, NonAdmin, Unknown };
enum class GenderCohort { GroupA, GroupB, Unknown };
enum class ExperienceCohort { Inexperienced, Middle, Experienced, Unknown };

inline const char* to_string(AdminCohort c) {
  switch (c) {
    case AdminCohort::Admin: return "admin";
    case AdminCohort::NonAdmin: return "non_admin";
    case AdminCohort::Unknown: return "unknown";
  }
  return "?";
}

inline const char* to_string(GenderCohort c) {
  switch (c) {
    case GenderCohort::GroupA: return "groupA";
    case GenderCohort::GroupB: return "groupB";
    case GenderCohort::Unknown: return "unknown";
  }
  return "?";
}

inline const char* to_string(ExperienceCohort c) {
  switch (c) {
    case ExperienceCohort::Inexperienced: return "inexperienced";
    case ExperienceCohort::Middle: return "middle";
    case ExperienceCohort::Experienced: return "experienced";
    case ExperienceCohort::Unknown: return "unknown";
  }
  return "?";
}

struct CohortAssignment {
  std::string speaker_id;
  AdminCohort admin = AdminCohort::Unknown;
  GenderCohort gender = GenderCohort::Unknown;
  ExperienceCohort experience = ExperienceCohort::Unknown;

  bool operator==(const CohortAssignment&) const = default;
};

struct CohortTable {
  std::map<std::string, CohortAssignment> by_speaker;
  std::pair<std::string, std::string> gender_labels{"male", "female"};
  // Nearest-rank 25th / 75th percentiles of known edit counts.
  std::optional<double> experience_low_cut;
  std::optional<double> experience_high_cut;

  const CohortAssignment& at(const std::string& speaker_id) const { return by_speaker.at(speaker_id); }
};

namespace detail {

inline bool iequals(std::string_view a, std::string_view b) {
  if (a.size() != b.size()) return false;
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (std::tolower(static_cast<unsigned char>(a[i])) != std::tolower(static_cast<unsigned char>(b[i])))
      return false;
  }
  return true;
}

}  // namespace detail

// Experience uses percentiles over speakers with a known edit count:
// inexperienced iff count <= P25, experienced iff count > P75, so the two
// quartile cohorts can never overlap.
inline CohortTable assign_cohorts(const Corpus& corpus,
                                  const std::pair<std::string, std::string>& gender_labels = {"male", "female"}) {
  CohortTable table;
  table.gender_labels = gender_labels;

  std::vector<double> counts;
  for (const auto& [id, s] : corpus.speakers) {
    if (s.edit_count) counts.push_back(static_cast<double>(*s.edit_count));
  }
  if (!counts.empty()) {
    table.experience_low_cut = stats::percentile(counts, 25.0);
    table.experience_high_cut = stats::percentile(counts, 75.0);
  }

  for (const auto& [id, s] : corpus.speakers) {
    CohortAssignment a;
    a.speaker_id = id;
    if (s.is_admin) a.admin = *s.is_admin ? AdminCohort::Admin : AdminCohort::NonAdmin;
    if (s.gender) {
      if (detail::iequals(*s.gender, gender_labels.first)) a.gender = GenderCohort::GroupA;
      else if (detail::iequals(*s.gender, gender_labels.second)) a.gender = GenderCohort::GroupB;
    }
    if (s.edit_count) {
      const auto c = static_cast<double>(*s.edit_count);
      if (c > *table.experience_high_cut) a.experience = ExperienceCohort::Experienced;
      else if (c <= *table.experience_low_cut) a.experience = ExperienceCohort::Inexperienced;
      else a.experience = ExperienceCohort::Middle;
    }
    table.by_speaker.emplace(id, a);
  }
  return table;
}

}  // namespace facework
