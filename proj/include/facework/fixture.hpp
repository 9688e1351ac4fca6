#pragma once

#include <algorithm>
#include <array>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "facework/corpus.hpp"
#include "facework/faceacts.hpp"
#include "facework/rng.hpp"
#include "facework/stats.hpp"
#include "facework/textprep.hpp"

namespace facework {

// Synthetic talk-page corpus with known cohort effects. Non-admins form the
// shifted group.
struct FixtureConfig {
  std::uint64_t seed = 7;
  std::size_t n_conversations = 200;
  std::size_t n_speakers = 150;
  // When set, conversations are filled to exactly this many utterances.
  std::optional<std::size_t> total_utterances;
  std::size_t min_turns = 3;
  std::size_t max_turns = 8;
  std::size_t max_sentences_per_turn = 3;

  double admin_fraction = 0.25;
  // Edit counts are log-normal; admins edit more by default.
  double admin_edit_log_mean = 8.0;
  double non_admin_edit_log_mean = 5.5;
  double male_fraction = 0.45;
  double female_fraction = 0.35;
  std::pair<std::string, std::string> gender_labels{"male", "female"};

  double base_politeness = 0.40;
  double non_admin_politeness_shift = 0.2;
  double experienced_politeness_shift = 0.0;
  double female_politeness_shift = 0.0;
  double politeness_noise_sd = 0.08;
  // Added to a turn's score in proportion to the share of its utterances
  // carrying each act.
  std::array<double, kNumFaceActs> act_politeness_effect{-0.03, -0.15, 0.0, 0.02, 0.15, 0.05, 0.0, 0.0, 0.0};

  std::array<double, kNumFaceActs> act_weights{0.15, 0.12, 0.04, 0.10, 0.10, 0.05, 0.03, 0.06, 0.35};
  // Absolute probability moved from None to Indebtedness for non-admins.
  double non_admin_indebtedness_shift = 0.05;
  // Chance that an utterance's wording comes from another act's templates.
  double label_noise = 0.12;
  double markup_rate = 0.1;
  double url_rate = 0.05;
};

namespace detail {

inline const std::array<std::vector<std::string>, kNumFaceActs>& act_templates() {
  static const std::array<std::vector<std::string>, kNumFaceActs> t{{
      {"Please {v} the {n}.", "You need to {v} this {n} now.", "Stop changing the {n}!",
       "Could you {v} the {n} before tonight?", "Do not {v} my {n} again."},
      {"That is wrong about the {n}.", "I disagree with your {n}.", "This {n} makes no sense.",
       "Your edit to the {n} is nonsense.", "Nobody agreed to that {n}."},
      {"Feel free to {v} the {n}.", "You are welcome to {v} it.", "Go ahead and {v} the {n} if you like.",
       "It is fine by me if you {v} the {n}."},
      {"Good point about the {n}.", "I agree with you on the {n}.", "Great work on this {n}!",
       "We both want a better {n}.", "You are right about the {n}."},
      {"Thanks for the {n}.", "Thank you for your help with the {n}.", "I will {v} the {n} tomorrow.",
       "Many thanks for fixing the {n}!", "I owe you one for the {n}."},
      {"Sorry about the {n}.", "My mistake on the {n}, I apologize.", "I was wrong to {v} it.",
       "Apologies for breaking the {n}."},
      {"I would rather not {v} the {n}.", "I decline to {v} this.", "No thanks, I will keep my {n}.",
       "I prefer to leave the {n} alone."},
      {"I know this {n} well.", "I am confident the {n} is right.", "I wrote most of this {n} myself.",
       "My {n} has held up for years."},
      {"The {n} was updated in {y}.", "There is a {n} in the archive.", "See the {n} section below.",
       "The {n} lists {y} as the date.", "Someone moved the {n} last week."},
  }};
  return t;
}

inline const std::vector<std::string>& fixture_nouns() {
  static const std::vector<std::string> n{"article", "infobox", "citation", "template", "category", "lead",
                                          "reference", "image", "table", "redirect", "talk page", "summary"};
  return n;
}

inline const std::vector<std::string>& fixture_verbs() {
  static const std::vector<std::string> v{"revert", "fix", "check", "expand", "source", "merge", "tag", "rewrite"};
  return v;
}

inline std::string fill_template(const std::string& tpl, Rng& rng) {
  std::string out;
  for (std::size_t i = 0; i < tpl.size(); ++i) {
    if (tpl[i] == '{' && i + 2 < tpl.size() && tpl[i + 2] == '}') {
      switch (tpl[i + 1]) {
        case 'n': out += fixture_nouns()[rng.below(fixture_nouns().size())]; break;
        case 'v': out += fixture_verbs()[rng.below(fixture_verbs().size())]; break;
        case 'y': out += std::to_string(2001 + rng.below(20)); break;
        default: throw std::logic_error("unknown template slot");
      }
      i += 2;
    } else {
      out += tpl[i];
    }
  }
  return out;
}

inline std::string fixture_slug(Rng& rng) {
  std::string noun = fixture_nouns()[rng.below(fixture_nouns().size())];
  std::replace(noun.begin(), noun.end(), ' ', '_');
  noun[0] = static_cast<char>(std::toupper(static_cast<unsigned char>(noun[0])));
  return noun;
}

}  // namespace detail

inline Corpus generate_fixture(const FixtureConfig& cfg = {}) {
  if (cfg.n_speakers < 2 || cfg.n_conversations == 0) throw std::invalid_argument("fixture: too few speakers or conversations");
  if (cfg.min_turns == 0 || cfg.max_turns < cfg.min_turns || cfg.max_sentences_per_turn == 0)
    throw std::invalid_argument("fixture: bad turn or sentence bounds");
  Rng rng(cfg.seed);
  Corpus corpus;
  corpus.provenance.source = "fixture:seed=" + std::to_string(cfg.seed);

  // Speakers
  std::vector<std::string> speaker_ids;
  std::vector<double> edit_counts;
  for (std::size_t s = 0; s < cfg.n_speakers; ++s) {
    Speaker sp;
    char buf[16];
    std::snprintf(buf, sizeof buf, "user%03zu", s);
    sp.id = buf;
    const bool admin = rng.bernoulli(cfg.admin_fraction);
    sp.is_admin = admin;
    const double g = rng.uniform();
    if (g < cfg.male_fraction) sp.gender = cfg.gender_labels.first;
    else if (g < cfg.male_fraction + cfg.female_fraction) sp.gender = cfg.gender_labels.second;
    sp.edit_count = static_cast<std::int64_t>(std::floor(std::exp(rng.normal(admin ? cfg.admin_edit_log_mean : cfg.non_admin_edit_log_mean, 1.2))));
    edit_counts.push_back(static_cast<double>(*sp.edit_count));
    speaker_ids.push_back(sp.id);
    corpus.speakers.emplace(sp.id, sp);
  }
  const double experienced_cut = stats::percentile(edit_counts, 75.0);

  auto act_probs = [&](const Speaker& sp) {
    auto w = cfg.act_weights;
    if (!*sp.is_admin) {
      const double moved = std::min(cfg.non_admin_indebtedness_shift, w[index_of(FaceAct::None)]);
      w[index_of(FaceAct::Indebtedness)] += moved;
      w[index_of(FaceAct::None)] -= moved;
    }
    return w;
  };

  // Utterance budget per conversation when a total is requested.
  std::vector<std::size_t> budget;
  if (cfg.total_utterances) {
    if (*cfg.total_utterances < cfg.n_conversations) throw std::invalid_argument("fixture: fewer utterances than conversations");
    const std::size_t base = *cfg.total_utterances / cfg.n_conversations;
    const std::size_t extra = *cfg.total_utterances % cfg.n_conversations;
    for (std::size_t c = 0; c < cfg.n_conversations; ++c) budget.push_back(base + (c < extra ? 1 : 0));
  }

  const auto& templates = detail::act_templates();
  const SegmenterConfig seg = SegmenterConfig::defaults();
  std::int64_t clock = 1'200'000'000;
  for (std::size_t c = 0; c < cfg.n_conversations; ++c) {
    char conv_buf[24];
    std::snprintf(conv_buf, sizeof conv_buf, "conv%04zu", c);
    const std::string conv_id = conv_buf;
    std::vector<Turn> turns;
    const std::size_t n_turns = cfg.min_turns + rng.below(cfg.max_turns - cfg.min_turns + 1);
    std::size_t remaining = budget.empty() ? 0 : budget[c];
    for (std::size_t t = 0; budget.empty() ? t < n_turns : remaining > 0; ++t) {
      Turn turn;
      turn.id = conv_id + "-t" + std::to_string(t);
      turn.conversation_id = conv_id;
      turn.speaker_id = speaker_ids[rng.below(speaker_ids.size())];
      if (t > 0) turn.reply_to = turns[rng.below(t)].id;
      clock += 60 + static_cast<std::int64_t>(rng.below(7200));
      turn.timestamp = clock;
      const Speaker& sp = corpus.speakers.at(turn.speaker_id);

      std::size_t n_sent = 1 + rng.below(cfg.max_sentences_per_turn);
      if (!budget.empty()) n_sent = std::min(n_sent, remaining);
      remaining -= budget.empty() ? 0 : n_sent;

      const auto probs = act_probs(sp);
      std::vector<FaceAct> acts;
      std::string raw;
      for (std::size_t s = 0; s < n_sent; ++s) {
        const FaceAct act = face_act_at(rng.categorical(probs));
        const std::size_t source = rng.bernoulli(cfg.label_noise) ? rng.below(kNumFaceActs) : index_of(act);
        const auto& pool = templates[source];
        std::string sentence = detail::fill_template(pool[rng.below(pool.size())], rng);
        if (act == FaceAct::None && rng.bernoulli(cfg.url_rate)) {
          sentence = "More at https://en.wikipedia.org/wiki/" + detail::fixture_slug(rng) + " today.";
        }
        if (rng.bernoulli(cfg.markup_rate)) sentence = "<b>" + sentence + "</b>";
        if (!raw.empty()) raw += ' ';
        raw += sentence;
        acts.push_back(act);
      }
      if (rng.bernoulli(cfg.markup_rate)) raw = "<p>" + raw + "</p>";
      turn.raw_text = raw;

      const auto sentences = prepare_text(raw, seg);
      if (sentences.size() != acts.size()) throw std::logic_error("fixture: segmenter split a generated turn unexpectedly");
      std::array<double, kNumFaceActs> share{};
      for (std::size_t s = 0; s < acts.size(); ++s) {
        turn.utterances.push_back({turn.id, s, sentences[s], acts[s]});
        share[index_of(acts[s])] += 1.0 / static_cast<double>(acts.size());
      }

      double score = cfg.base_politeness + rng.normal(0.0, cfg.politeness_noise_sd);
      if (!*sp.is_admin) score += cfg.non_admin_politeness_shift;
      if (static_cast<double>(*sp.edit_count) > experienced_cut) score += cfg.experienced_politeness_shift;
      if (sp.gender == cfg.gender_labels.second) score += cfg.female_politeness_shift;
      for (std::size_t k = 0; k < kNumFaceActs; ++k) score += cfg.act_politeness_effect[k] * share[k];
      turn.politeness_score = score;
      turns.push_back(std::move(turn));
    }
    corpus.conversations.emplace(conv_id, order_conversation(std::move(turns)));
  }
  return corpus;
}

}  // namespace facework
