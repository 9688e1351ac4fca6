#pragma once

#include <filesystem>
#include <fstream>
#include <map>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>
#include <spdlog/spdlog.h>

#include "facework/error.hpp"
#include "facework/faceacts.hpp"

namespace facework::tagger {

struct ImportedPredictions {
  std::map<std::string, FaceAct> labels;
  std::vector<std::string> warnings;
};

// JSONL with {"utterance_id": ..., "label": <code>} per line. Other keys are
// ignored. A repeated utterance id keeps the last line and records a warning.
inline ImportedPredictions import_predictions(const std::filesystem::path& file) {
  std::ifstream in(file);
  if (!in) throw DataError("cannot open predictions file " + file.string());
  ImportedPredictions out;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    nlohmann::json obj;
    try {
      obj = nlohmann::json::parse(line);
    } catch (const nlohmann::json::parse_error& e) {
      throw DataError(file.string(), lineno, std::string("malformed JSON: ") + e.what());
    }
    if (!obj.is_object()) throw DataError(file.string(), lineno, "line is not a JSON object");
    for (const char* key : {"utterance_id", "label"}) {
      if (!obj.contains(key)) throw DataError(file.string(), lineno, std::string("missing key \"") + key + "\"");
      if (!obj[key].is_string()) throw DataError(file.string(), lineno, std::string("\"") + key + "\" must be a string");
    }
    const auto id = obj["utterance_id"].get<std::string>();
    FaceAct act;
    try {
      act = parse_label(obj["label"].get<std::string>());
    } catch (const ValidationError& e) {
      throw DataError(file.string(), lineno, e.what());
    }
    auto [it, inserted] = out.labels.insert_or_assign(id, act);
    if (!inserted) {
      out.warnings.push_back(file.string() + ":" + std::to_string(lineno) + ": duplicate utterance_id \"" + id +
                             "\", keeping the later label");
      spdlog::warn("{}", out.warnings.back());
    }
  }
  return out;
}

inline void write_predictions(const std::map<std::string, FaceAct>& labels, const std::filesystem::path& file) {
  std::ofstream out(file, std::ios::binary | std::ios::trunc);
  if (!out) throw DataError("cannot write " + file.string());
  for (const auto& [id, act] : labels) {
    nlohmann::json j;
    j["utterance_id"] = id;
    j["label"] = format_label(act);
    out << j.dump() << '\n';
  }
}

}  // namespace facework::tagger
