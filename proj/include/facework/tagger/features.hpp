#pragma once

#include <cctype>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "facework/tagger/context.hpp"

namespace facework::tagger {

struct FeatureConfig {
  bool bigrams = true;
  bool context_unigrams = true;
  bool length_bucket = true;
  bool punctuation_flags = true;
  std::string url_token = "<url>";

  bool operator==(const FeatureConfig&) const = default;
};

// Named sparse features with count weights; std::map keeps iteration order
// deterministic.
using FeatureVector = std::map<std::string, double>;

// Lowercase, split on non-alphanumerics. Bytes >= 0x80 count as word
// characters so UTF-8 words stay whole. The URL mask survives as one token.
inline std::vector<std::string> tokenize(std::string_view text, std::string_view url_token = "<url>") {
  std::vector<std::string> tokens;
  std::string cur;
  auto flush = [&] {
    if (!cur.empty()) tokens.push_back(std::move(cur));
    cur.clear();
  };
  for (std::size_t i = 0; i < text.size();) {
    if (!url_token.empty() && text.compare(i, url_token.size(), url_token) == 0) {
      flush();
      tokens.emplace_back(url_token);
      i += url_token.size();
      continue;
    }
    const auto c = static_cast<unsigned char>(text[i]);
    if (c >= 0x80 || std::isalnum(c)) {
      cur += static_cast<char>(std::tolower(c));
    } else {
      flush();
    }
    ++i;
  }
  flush();
  return tokens;
}

inline std::string length_bucket(std::size_t n_tokens) {
  if (n_tokens == 0) return "len:0";
  if (n_tokens <= 3) return "len:1-3";
  if (n_tokens <= 8) return "len:4-8";
  if (n_tokens <= 15) return "len:9-15";
  if (n_tokens <= 30) return "len:16-30";
  return "len:31+";
}

inline FeatureVector extract_features(const ContextWindow& w, const FeatureConfig& cfg = {}) {
  FeatureVector f;
  if (w.lines.empty()) return f;
  const std::string& target = w.target().text;
  const auto tokens = tokenize(target, cfg.url_token);
  for (const auto& t : tokens) f["uni:" + t] += 1.0;
  if (cfg.bigrams) {
    for (std::size_t i = 1; i < tokens.size(); ++i) f["bi:" + tokens[i - 1] + "_" + tokens[i]] += 1.0;
  }
  if (cfg.context_unigrams) {
    for (std::size_t d = 1; d < w.lines.size(); ++d) {
      const auto& line = w.lines[w.lines.size() - 1 - d];
      const std::string prefix = "ctx" + std::to_string(d) + ":";
      for (const auto& t : tokenize(line.text, cfg.url_token)) f[prefix + t] += 1.0;
    }
  }
  if (cfg.length_bucket) f[length_bucket(tokens.size())] += 1.0;
  if (cfg.punctuation_flags) {
    if (target.find('?') != std::string::npos) f["flag:?"] = 1.0;
    if (target.find('!') != std::string::npos) f["flag:!"] = 1.0;
  }
  return f;
}

}  // namespace facework::tagger
