#pragma once

#include <algorithm>
#include <cctype>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "facework/error.hpp"

namespace facework {

struct SegmenterConfig {
  // Tokens ending in "." that never end a sentence. Matched case-sensitively.
  std::set<std::string> abbreviations;
  std::string url_mask_token = "<url>";

  static SegmenterConfig defaults();
};

// Same entries as data/abbreviations.txt.
inline const std::set<std::string>& default_abbreviations() {
  static const std::set<std::string> list = {
      "Mr.",   "Mrs.",   "Ms.",  "Dr.",  "Prof.", "Sr.",   "Jr.",  "St.",  "Mt.",  "Gen.",
      "Gov.",  "Sen.",   "Rep.", "Lt.",  "Col.",  "Capt.", "Sgt.", "Rev.", "Hon.", "vs.",
      "etc.",  "e.g.",   "E.g.", "i.e.", "I.e.",  "cf.",   "Cf.",  "viz.", "al.",  "approx.",
      "ca.",   "Fig.",   "fig.", "Vol.", "vol.",  "pp.",   "No.",  "Nos.", "Inc.", "Ltd.",
      "Co.",   "Corp.",  "U.S.", "U.K.", "a.m.",  "p.m.",  "Jan.", "Feb.", "Mar.", "Apr.",
      "Jun.",  "Jul.",   "Aug.", "Sep.", "Sept.", "Oct.",  "Nov.", "Dec.",
  };
  return list;
}

inline SegmenterConfig SegmenterConfig::defaults() {
  SegmenterConfig cfg;
  cfg.abbreviations = default_abbreviations();
  return cfg;
}

// One abbreviation per line; blank lines and lines starting with '#' skipped.
inline std::set<std::string> load_abbreviations(const std::filesystem::path& file) {
  std::ifstream in(file);
  if (!in) throw DataError("cannot open abbreviation list " + file.string());
  std::set<std::string> out;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    while (!line.empty() && std::isspace(static_cast<unsigned char>(line.back()))) line.pop_back();
    std::size_t b = 0;
    while (b < line.size() && std::isspace(static_cast<unsigned char>(line[b]))) ++b;
    line.erase(0, b);
    if (line.empty() || line[0] == '#') continue;
    if (line.back() != '.') {
      throw DataError(file.string(), lineno, "abbreviation must end with '.': " + line);
    }
    out.insert(line);
  }
  return out;
}

namespace detail {

inline bool is_space(char c) { return std::isspace(static_cast<unsigned char>(c)) != 0; }
inline bool is_alpha(char c) { return std::isalpha(static_cast<unsigned char>(c)) != 0; }
inline bool is_alnum(char c) { return std::isalnum(static_cast<unsigned char>(c)) != 0; }

inline void append_utf8(std::string& out, std::uint32_t cp) {
  if (cp == 0 || cp > 0x10FFFF || (cp >= 0xD800 && cp <= 0xDFFF)) cp = 0xFFFD;
  if (cp < 0x80) {
    out += static_cast<char>(cp);
  } else if (cp < 0x800) {
    out += static_cast<char>(0xC0 | (cp >> 6));
    out += static_cast<char>(0x80 | (cp & 0x3F));
  } else if (cp < 0x10000) {
    out += static_cast<char>(0xE0 | (cp >> 12));
    out += static_cast<char>(0x80 | ((cp >> 6) & 0x3F));
    out += static_cast<char>(0x80 | (cp & 0x3F));
  } else {
    out += static_cast<char>(0xF0 | (cp >> 18));
    out += static_cast<char>(0x80 | ((cp >> 12) & 0x3F));
    out += static_cast<char>(0x80 | ((cp >> 6) & 0x3F));
    out += static_cast<char>(0x80 | (cp & 0x3F));
  }
}

// Decodes the entity starting at text[i] == '&'. Returns the number of bytes
// consumed, or 0 when the text is not a recognized entity.
inline std::size_t decode_entity(std::string_view text, std::size_t i, std::string& out) {
  const std::size_t semi = text.find(';', i);
  if (semi == std::string_view::npos || semi - i > 10) return 0;
  const std::string_view body = text.substr(i + 1, semi - i - 1);
  if (body == "amp") {
    out += '&';
  } else if (body == "lt") {
    out += '<';
  } else if (body == "gt") {
    out += '>';
  } else if (body == "quot") {
    out += '"';
  } else if (body == "apos") {
    out += '\'';
  } else if (body == "nbsp") {
    out += ' ';
  } else if (body.size() >= 2 && body[0] == '#') {
    const bool hex = body[1] == 'x' || body[1] == 'X';
    const std::string_view digits = body.substr(hex ? 2 : 1);
    if (digits.empty()) return 0;
    std::uint32_t cp = 0;
    for (char c : digits) {
      const int v = hex ? (std::isxdigit(static_cast<unsigned char>(c))
                               ? (std::isdigit(static_cast<unsigned char>(c))
                                      ? c - '0'
                                      : (std::tolower(static_cast<unsigned char>(c)) - 'a' + 10))
                               : -1)
                        : (std::isdigit(static_cast<unsigned char>(c)) ? c - '0' : -1);
      if (v < 0) return 0;
      cp = cp * (hex ? 16u : 10u) + static_cast<std::uint32_t>(v);
      if (cp > 0x10FFFF) return 0;
    }
    append_utf8(out, cp);
  } else {
    return 0;
  }
  return semi - i + 1;
}

inline bool is_block_tag(std::string_view tag_body) {
  std::size_t b = 0;
  if (b < tag_body.size() && tag_body[b] == '/') ++b;
  std::size_t e = b;
  while (e < tag_body.size() && is_alnum(tag_body[e])) ++e;
  std::string name(tag_body.substr(b, e - b));
  for (char& c : name) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  static const std::set<std::string> block = {"br", "p", "div", "li", "ul", "ol", "tr", "td",
                                              "th", "table", "h1", "h2", "h3", "h4", "h5", "h6",
                                              "hr", "blockquote", "pre", "dd", "dt", "dl"};
  return block.count(name) > 0;
}

}  // namespace detail

// Removes <...> tags and <!-- --> comments, decodes common HTML entities,
// collapses whitespace runs and trims. A '<' that does not open a tag, or a
// tag that is never closed, is left verbatim.
inline std::string scrub_markup(std::string_view text) {
  std::string decoded;
  decoded.reserve(text.size());
  for (std::size_t i = 0; i < text.size();) {
    if (text[i] == '&') {
      const std::size_t used = detail::decode_entity(text, i, decoded);
      if (used > 0) {
        i += used;
        continue;
      }
    }
    decoded += text[i++];
  }

  std::string stripped;
  stripped.reserve(decoded.size());
  for (std::size_t i = 0; i < decoded.size();) {
    if (decoded[i] == '<') {
      if (decoded.compare(i, 4, "<!--") == 0) {
        const std::size_t end = decoded.find("-->", i + 4);
        if (end != std::string::npos) {
          stripped += ' ';
          i = end + 3;
          continue;
        }
      }
      const std::size_t n = i + 1;
      const bool opens = n < decoded.size() &&
                         (detail::is_alpha(decoded[n]) || decoded[n] == '!' ||
                          (decoded[n] == '/' && n + 1 < decoded.size() && detail::is_alpha(decoded[n + 1])));
      if (opens) {
        std::size_t close = n;
        while (close < decoded.size() && decoded[close] != '>' && decoded[close] != '<') ++close;
        if (close < decoded.size() && decoded[close] == '>') {
          if (detail::is_block_tag(std::string_view(decoded).substr(n, close - n))) stripped += ' ';
          i = close + 1;
          continue;
        }
      }
    }
    stripped += decoded[i++];
  }

  std::string out;
  out.reserve(stripped.size());
  bool pending_space = false;
  for (char c : stripped) {
    if (detail::is_space(c)) {
      pending_space = !out.empty();
      continue;
    }
    if (pending_space) out += ' ';
    pending_space = false;
    out += c;
  }
  return out;
}

// Replaces each maximal run starting with http://, https:// or www. (case
// insensitive, at a word start) up to the next whitespace with the mask
// token. Trailing sentence punctuation is kept outside the mask.
inline std::string mask_urls(std::string_view text, const SegmenterConfig& cfg) {
  auto starts_with_ci = [&](std::size_t i, std::string_view prefix) {
    if (text.size() - i < prefix.size()) return false;
    for (std::size_t k = 0; k < prefix.size(); ++k) {
      if (std::tolower(static_cast<unsigned char>(text[i + k])) != prefix[k]) return false;
    }
    return true;
  };
  static constexpr std::string_view kTrailing = ".,;:!?'\")]}>";

  std::string out;
  out.reserve(text.size());
  for (std::size_t i = 0; i < text.size();) {
    const bool word_start = i == 0 || !detail::is_alnum(text[i - 1]);
    std::size_t prefix = 0;
    if (word_start) {
      if (starts_with_ci(i, "https://")) prefix = 8;
      else if (starts_with_ci(i, "http://")) prefix = 7;
      else if (starts_with_ci(i, "www.")) prefix = 4;
    }
    if (prefix == 0) {
      out += text[i++];
      continue;
    }
    std::size_t end = i;
    while (end < text.size() && !detail::is_space(text[end])) ++end;
    while (end > i + prefix && kTrailing.find(text[end - 1]) != std::string_view::npos) {
      if (text[end - 1] == ')') {
        const auto body = text.substr(i, end - i);
        if (std::count(body.begin(), body.end(), '(') >= std::count(body.begin(), body.end(), ')')) break;
      }
      --end;
    }
    out += cfg.url_mask_token;
    i = end;
  }
  return out;
}

namespace detail {

inline bool is_terminator(char c) { return c == '.' || c == '!' || c == '?'; }

inline bool opens_sentence(std::string_view text, std::size_t k) {
  const auto c = static_cast<unsigned char>(text[k]);
  if (std::isupper(c) || std::isdigit(c) || c == '"' || c == '\'') return true;
  // U+201C and U+2018 opening quotes.
  return text.compare(k, 3, "\xE2\x80\x9C") == 0 || text.compare(k, 3, "\xE2\x80\x98") == 0;
}

inline std::string_view trim(std::string_view s) {
  std::size_t b = 0;
  std::size_t e = s.size();
  while (b < e && is_space(s[b])) ++b;
  while (e > b && is_space(s[e - 1])) --e;
  return s.substr(b, e - b);
}

}  // namespace detail

// Splits after a run of '.', '!' or '?' when it is followed by whitespace and
// then an uppercase letter, digit or opening quote, unless the token ending
// in '.' is a listed abbreviation.
inline std::vector<std::string> segment_sentences(std::string_view text, const SegmenterConfig& cfg) {
  std::vector<std::string> segments;
  auto emit = [&](std::size_t b, std::size_t e) {
    const auto seg = detail::trim(text.substr(b, e - b));
    if (!seg.empty()) segments.emplace_back(seg);
  };

  std::size_t start = 0;
  std::size_t i = 0;
  while (i < text.size()) {
    if (!detail::is_terminator(text[i])) {
      ++i;
      continue;
    }
    std::size_t run_end = i;
    while (run_end < text.size() && detail::is_terminator(text[run_end])) ++run_end;
    std::size_t next = run_end;
    while (next < text.size() && detail::is_space(text[next])) ++next;
    const bool boundary = next > run_end && next < text.size() && detail::opens_sentence(text, next);
    if (boundary && text[run_end - 1] == '.') {
      std::size_t tok = run_end;
      while (tok > start && !detail::is_space(text[tok - 1])) --tok;
      std::string_view token = text.substr(tok, run_end - tok);
      while (!token.empty() && std::string_view("([{\"'").find(token.front()) != std::string_view::npos) {
        token.remove_prefix(1);
      }
      if (cfg.abbreviations.count(std::string(token)) > 0) {
        i = run_end;
        continue;
      }
    }
    if (boundary) {
      emit(start, run_end);
      start = run_end;
    }
    i = run_end;
  }
  emit(start, text.size());
  return segments;
}

// scrub -> mask -> segment.
inline std::vector<std::string> prepare_text(std::string_view raw, const SegmenterConfig& cfg) {
  return segment_sentences(mask_urls(scrub_markup(raw), cfg), cfg);
}

}  // namespace facework
