#pragma once

#include <array>
#include <cctype>
#include <cstddef>
#include <cstdint>
#include <string>
#include <string_view>

#include "facework/error.hpp"

namespace facework {

// The eight Brown & Levinson face acts plus "no face act". The enumerator
// order is the canonical class order used by models, reports and tie-breaks.
enum class FaceAct : std::uint8_t {
  Imposition = 0,      // hneg-
  Disagreement = 1,    // hpos-
  Permissiveness = 2,  // hneg+
  Agreement = 3,       // hpos+
  Indebtedness = 4,    // sneg-
  Apologies = 5,       // spos-
  Autonomy = 6,        // sneg+
  Confidence = 7,      // spos+
  None = 8,
};

inline constexpr std::size_t kNumFaceActs = 9;

enum class FaceTarget : std::uint8_t { Speaker, Hearer, None };
enum class FacePolarity : std::uint8_t { Positive, Negative, None };
enum class FaceDirection : std::uint8_t { Raise, Threaten, None };

inline constexpr std::array<FaceAct, kNumFaceActs> kAllFaceActs = {
    FaceAct::Imposition,   FaceAct::Disagreement, FaceAct::Permissiveness,
    FaceAct::Agreement,    FaceAct::Indebtedness, FaceAct::Apologies,
    FaceAct::Autonomy,     FaceAct::Confidence,   FaceAct::None,
};

namespace detail {

struct FaceActInfo {
  std::string_view code;
  std::string_view mnemonic;
  FaceTarget target;
  FacePolarity polarity;
  FaceDirection direction;
};

inline constexpr std::array<FaceActInfo, kNumFaceActs> kFaceActTable = {{
    {"hneg-", "Imposition", FaceTarget::Hearer, FacePolarity::Negative, FaceDirection::Threaten},
    {"hpos-", "Disagreement", FaceTarget::Hearer, FacePolarity::Positive, FaceDirection::Threaten},
    {"hneg+", "Permissiveness", FaceTarget::Hearer, FacePolarity::Negative, FaceDirection::Raise},
    {"hpos+", "Agreement", FaceTarget::Hearer, FacePolarity::Positive, FaceDirection::Raise},
    {"sneg-", "Indebtedness", FaceTarget::Speaker, FacePolarity::Negative, FaceDirection::Threaten},
    {"spos-", "Apologies", FaceTarget::Speaker, FacePolarity::Positive, FaceDirection::Threaten},
    {"sneg+", "Autonomy", FaceTarget::Speaker, FacePolarity::Negative, FaceDirection::Raise},
    {"spos+", "Confidence", FaceTarget::Speaker, FacePolarity::Positive, FaceDirection::Raise},
    {"none", "None", FaceTarget::None, FacePolarity::None, FaceDirection::None},
}};

inline constexpr const FaceActInfo& info(FaceAct act) {
  return kFaceActTable[static_cast<std::size_t>(act)];
}

}  // namespace detail

constexpr std::size_t index_of(FaceAct act) { return static_cast<std::size_t>(act); }

inline FaceAct face_act_at(std::size_t index) {
  if (index >= kNumFaceActs) throw std::out_of_range("face act index out of range");
  return kAllFaceActs[index];
}

constexpr std::string_view code(FaceAct act) { return detail::info(act).code; }
constexpr std::string_view mnemonic(FaceAct act) { return detail::info(act).mnemonic; }
constexpr FaceTarget target(FaceAct act) { return detail::info(act).target; }
constexpr FacePolarity polarity(FaceAct act) { return detail::info(act).polarity; }
constexpr FaceDirection direction(FaceAct act) { return detail::info(act).direction; }

inline std::string format_label(FaceAct act) { return std::string(code(act)); }

// Case-insensitive match on the nine codes; surrounding whitespace ignored.
inline FaceAct parse_label(std::string_view text) {
  auto is_space = [](char c) { return std::isspace(static_cast<unsigned char>(c)) != 0; };
  std::size_t b = 0;
  std::size_t e = text.size();
  while (b < e && is_space(text[b])) ++b;
  while (e > b && is_space(text[e - 1])) --e;
  std::string lowered(text.substr(b, e - b));
  for (char& c : lowered) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  for (FaceAct act : kAllFaceActs) {
    if (code(act) == lowered) return act;
  }
  throw ValidationError("unknown face act label \"" + std::string(text) + "\"");
}

inline bool try_parse_label(std::string_view text, FaceAct& out) {
  try {
    out = parse_label(text);
    return true;
  } catch (const ValidationError&) {
    return false;
  }
}

}  // namespace facework
