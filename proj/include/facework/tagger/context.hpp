#pragma once

#include <cstddef>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "facework/corpus.hpp"
#include "facework/faceacts.hpp"

namespace facework::tagger {

// Default window: four prior utterances plus the target.
inline constexpr std::size_t kDefaultContextSize = 4;
inline constexpr std::size_t kMaxContextSize = 4;

// An utterance flattened out of its turn, in thread order.
struct ThreadUtterance {
  std::string utterance_id;
  std::string conversation_id;
  std::string turn_id;
  std::string speaker_id;
  std::string text;
  std::optional<FaceAct> face_act;
};

inline std::vector<ThreadUtterance> thread_utterances(const std::vector<Turn>& turns) {
  std::vector<ThreadUtterance> out;
  for (const Turn& t : turns) {
    for (const Utterance& u : t.utterances) {
      out.push_back({u.id(), t.conversation_id, t.id, t.speaker_id, u.text, u.face_act});
    }
  }
  return out;
}

struct ContextLine {
  std::string speaker_id;
  std::string text;

  bool operator==(const ContextLine&) const = default;
};

struct ContextWindow {
  // Thread order; the last line is the utterance being tagged.
  std::vector<ContextLine> lines;
  // Number of context lines actually present (0..4).
  std::size_t k = 0;

  std::size_t target_index() const { return lines.size() - 1; }
  const ContextLine& target() const { return lines.back(); }

  bool operator==(const ContextWindow&) const = default;
};

// Utterances max(0, i-k)..i, stopping early at a conversation boundary.
inline ContextWindow build_context_window(const std::vector<ThreadUtterance>& conversation, std::size_t i,
                                          std::size_t k) {
  if (i >= conversation.size()) throw std::out_of_range("build_context_window: index out of range");
  if (k > kMaxContextSize) {
    throw std::invalid_argument("build_context_window: context size above " + std::to_string(kMaxContextSize));
  }
  const std::string& conv = conversation[i].conversation_id;
  std::size_t first = i;
  while (first > 0 && i - first < k && conversation[first - 1].conversation_id == conv) --first;

  ContextWindow w;
  for (std::size_t j = first; j <= i; ++j) w.lines.push_back({conversation[j].speaker_id, conversation[j].text});
  w.k = i - first;
  return w;
}

// "<speaker>: <text>\n" per line.
inline std::string render_window(const ContextWindow& w) {
  std::string out;
  for (const auto& line : w.lines) {
    out += line.speaker_id;
    out += ": ";
    out += line.text;
    out += '\n';
  }
  return out;
}

}  // namespace facework::tagger
