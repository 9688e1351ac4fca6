#pragma once

#include <array>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "facework/corpus.hpp"
#include "facework/error.hpp"
#include "facework/faceacts.hpp"
#include "facework/stats.hpp"

namespace facework {

// ---------------------------------------------------------------------------
// Axes and pooling

enum class Axis { Admin, Experience, Gender };

inline const char* to_string(Axis a) {
  switch (a) {
    case Axis::Admin: return "admin";
    case Axis::Experience: return "experience";
    case Axis::Gender: return "gender";
  }
  return "?";
}

inline Axis parse_axis(std::string_view s) {
  if (s == "admin") return Axis::Admin;
  if (s == "experience") return Axis::Experience;
  if (s == "gender") return Axis::Gender;
  throw ValidationError("unknown axis \"" + std::string(s) + "\" (expected admin, experience or gender)");
}

// Unit of the significance tests. Descriptive statistics are always turn-
// and utterance-level.
enum class Pooling { Utterance, Speaker };

inline const char* to_string(Pooling p) { return p == Pooling::Utterance ? "utterance" : "speaker"; }

inline Pooling parse_pooling(std::string_view s) {
  if (s == "utterance") return Pooling::Utterance;
  if (s == "speaker") return Pooling::Speaker;
  throw ValidationError("unknown pooling \"" + std::string(s) + "\" (expected utterance or speaker)");
}

// Groups compared on an axis, in display order. Experience compares the
// bottom and top quartiles only.
inline std::vector<std::string> axis_groups(Axis axis, const CohortTable& cohorts) {
  switch (axis) {
    case Axis::Admin: return {"admin", "non_admin"};
    case Axis::Experience: return {"inexperienced", "experienced"};
    case Axis::Gender: return {cohorts.gender_labels.first, cohorts.gender_labels.second};
  }
  return {};
}

inline std::optional<std::string> axis_group(const CohortAssignment& a, Axis axis, const CohortTable& cohorts) {
  switch (axis) {
    case Axis::Admin:
      if (a.admin == AdminCohort::Unknown) return std::nullopt;
      return std::string(to_string(a.admin));
    case Axis::Experience:
      if (a.experience == ExperienceCohort::Inexperienced || a.experience == ExperienceCohort::Experienced)
        return std::string(to_string(a.experience));
      return std::nullopt;
    case Axis::Gender:
      if (a.gender == GenderCohort::GroupA) return cohorts.gender_labels.first;
      if (a.gender == GenderCohort::GroupB) return cohorts.gender_labels.second;
      return std::nullopt;
  }
  return std::nullopt;
}

// Quartile bins over every scored turn of the corpus.
inline stats::PolitenessBins corpus_politeness_bins(const Corpus& corpus) {
  std::map<std::string, double> scores;
  corpus.for_each_turn([&](const Turn& t) {
    if (t.politeness_score) scores.emplace(t.id, *t.politeness_score);
  });
  if (scores.empty()) throw DataError("corpus has no politeness scores");
  return stats::politeness_bins(scores);
}

struct AnalysisOptions {
  Pooling pooling = Pooling::Utterance;
  // Overrides the corpus-wide quartile cuts.
  std::optional<stats::PolitenessBins> bins;
};

// ---------------------------------------------------------------------------
// Report types

struct GroupStats {
  std::string name;
  std::size_t n_speakers = 0;
  std::size_t n_turns = 0;       // scored turns
  std::size_t n_utterances = 0;  // labeled utterances
  double mean_politeness = 0.0;
  double polite_proportion = 0.0;
  double neutral_proportion = 0.0;
  double impolite_proportion = 0.0;
  stats::FaceDistribution face_distribution{};

  bool operator==(const GroupStats&) const = default;
};

// difference = mean(a units) - mean(b units).
struct Comparison {
  double difference = 0.0;
  stats::MwuResult test;
};

struct PairComparison {
  std::string group_a;
  std::string group_b;
  Comparison politeness;
  Comparison polite;
  Comparison impolite;
  // Absent when either group has no labeled utterances.
  std::optional<std::array<Comparison, kNumFaceActs>> face;
};

struct CohortReport {
  std::string partition;
  Pooling pooling = Pooling::Utterance;
  double cut_low = 0.0;
  double cut_high = 0.0;
  std::vector<GroupStats> groups;
  std::vector<PairComparison> pairs;
  // Turns whose speaker has no group on this axis.
  std::size_t excluded_turns = 0;
};

struct ActPolitenessGroup {
  std::string name;
  std::size_t n_utterances = 0;
  double polite_proportion = 0.0;
  double impolite_proportion = 0.0;
};

struct ActPolitenessPair {
  std::string group_a;
  std::string group_b;
  // Set when the act is missing from either group.
  bool insufficient_data = false;
  std::optional<Comparison> polite;
  std::optional<Comparison> impolite;
};

struct FacePolitenessReport {
  FaceAct act = FaceAct::None;
  std::string partition;
  Pooling pooling = Pooling::Utterance;
  std::vector<ActPolitenessGroup> groups;
  std::vector<ActPolitenessPair> pairs;
};

struct IntersectReport {
  std::string row_axis;
  std::string col_axis;
  Pooling pooling = Pooling::Utterance;
  std::vector<std::string> rows;
  std::vector<std::string> cols;
  // cells[r][c]; nullopt marks an empty cell.
  std::vector<std::vector<std::optional<GroupStats>>> cells;
  // Every pair of non-empty cells; names are "row/col".
  std::vector<PairComparison> pairs;
};

struct CorrelationEntry {
  // nullopt when the correlation is undefined (constant indicator).
  std::optional<double> politeness;
  std::optional<double> impoliteness;
};

struct CorrelationTable {
  std::array<CorrelationEntry, kNumFaceActs> entries{};
  std::size_t n_utterances = 0;
};

// ---------------------------------------------------------------------------
// Sampling

namespace detail {

struct SpeakerTally {
  double score_sum = 0.0;
  std::size_t scored = 0;
  std::size_t polite = 0;
  std::size_t impolite = 0;
  std::array<std::size_t, kNumFaceActs> acts{};
  std::size_t labeled = 0;
};

struct Sample {
  std::vector<double> scores;
  std::vector<stats::PolitenessBin> bins;
  std::vector<FaceAct> labels;
  std::map<std::string, SpeakerTally> speakers;
  std::set<std::string> active_speakers;

  void add(const Turn& t, const stats::PolitenessBins& cuts) {
    active_speakers.insert(t.speaker_id);
    SpeakerTally& tally = speakers[t.speaker_id];
    if (t.politeness_score) {
      const auto bin = cuts.classify(*t.politeness_score);
      scores.push_back(*t.politeness_score);
      bins.push_back(bin);
      tally.score_sum += *t.politeness_score;
      ++tally.scored;
      tally.polite += bin == stats::PolitenessBin::Polite;
      tally.impolite += bin == stats::PolitenessBin::Impolite;
    }
    for (const auto& u : t.utterances) {
      if (!u.face_act) continue;
      labels.push_back(*u.face_act);
      ++tally.acts[index_of(*u.face_act)];
      ++tally.labeled;
    }
  }

  GroupStats describe(std::string name) const {
    GroupStats g;
    g.name = std::move(name);
    g.n_speakers = active_speakers.size();
    g.n_turns = scores.size();
    g.n_utterances = labels.size();
    g.mean_politeness = stats::mean(scores);
    if (!bins.empty()) {
      std::size_t polite = 0, impolite = 0;
      for (auto b : bins) {
        polite += b == stats::PolitenessBin::Polite;
        impolite += b == stats::PolitenessBin::Impolite;
      }
      const double n = static_cast<double>(bins.size());
      g.polite_proportion = static_cast<double>(polite) / n;
      g.impolite_proportion = static_cast<double>(impolite) / n;
      g.neutral_proportion = static_cast<double>(bins.size() - polite - impolite) / n;
    }
    if (!labels.empty()) g.face_distribution = stats::label_distribution(labels);
    return g;
  }

  std::vector<double> politeness_units(Pooling p) const {
    if (p == Pooling::Utterance) return scores;
    std::vector<double> out;
    for (const auto& [id, t] : speakers)
      if (t.scored) out.push_back(t.score_sum / static_cast<double>(t.scored));
    return out;
  }

  std::vector<double> bin_units(Pooling p, stats::PolitenessBin which) const {
    std::vector<double> out;
    if (p == Pooling::Utterance) {
      for (auto b : bins) out.push_back(b == which ? 1.0 : 0.0);
      return out;
    }
    for (const auto& [id, t] : speakers) {
      if (!t.scored) continue;
      const std::size_t hits = which == stats::PolitenessBin::Polite ? t.polite : t.impolite;
      out.push_back(static_cast<double>(hits) / static_cast<double>(t.scored));
    }
    return out;
  }

  std::vector<double> act_units(Pooling p, std::size_t act) const {
    std::vector<double> out;
    if (p == Pooling::Utterance) {
      for (FaceAct a : labels) out.push_back(index_of(a) == act ? 1.0 : 0.0);
      return out;
    }
    for (const auto& [id, t] : speakers)
      if (t.labeled) out.push_back(static_cast<double>(t.acts[act]) / static_cast<double>(t.labeled));
    return out;
  }
};

inline Comparison compare(const std::vector<double>& a, const std::vector<double>& b) {
  Comparison c;
  c.difference = stats::mean(a) - stats::mean(b);
  c.test = stats::mann_whitney_u(a, b);
  return c;
}

inline PairComparison compare_samples(const std::string& name_a, const Sample& a, const std::string& name_b,
                                      const Sample& b, Pooling pooling) {
  PairComparison pc;
  pc.group_a = name_a;
  pc.group_b = name_b;
  pc.politeness = compare(a.politeness_units(pooling), b.politeness_units(pooling));
  pc.polite = compare(a.bin_units(pooling, stats::PolitenessBin::Polite),
                      b.bin_units(pooling, stats::PolitenessBin::Polite));
  pc.impolite = compare(a.bin_units(pooling, stats::PolitenessBin::Impolite),
                        b.bin_units(pooling, stats::PolitenessBin::Impolite));
  if (!a.labels.empty() && !b.labels.empty()) {
    std::array<Comparison, kNumFaceActs> face{};
    for (std::size_t k = 0; k < kNumFaceActs; ++k) face[k] = compare(a.act_units(pooling, k), b.act_units(pooling, k));
    pc.face = face;
  }
  return pc;
}

inline const stats::PolitenessBins& resolve_bins(const Corpus& corpus, const AnalysisOptions& opts,
                                                 std::optional<stats::PolitenessBins>& storage) {
  if (opts.bins) return *opts.bins;
  storage = corpus_politeness_bins(corpus);
  return *storage;
}

inline std::optional<std::string> group_of_turn(const Turn& t, Axis axis, const CohortTable& cohorts) {
  auto it = cohorts.by_speaker.find(t.speaker_id);
  if (it == cohorts.by_speaker.end()) return std::nullopt;
  return axis_group(it->second, axis, cohorts);
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Analyses

// Marginal statistics of every turn in the corpus as one group.
inline GroupStats summarize(const Corpus& corpus, const stats::PolitenessBins& bins, std::string name = "all") {
  detail::Sample s;
  corpus.for_each_turn([&](const Turn& t) { s.add(t, bins); });
  return s.describe(std::move(name));
}

inline CohortReport cohort_summary(const Corpus& corpus, const CohortTable& cohorts, Axis axis,
                                   const AnalysisOptions& opts = {}) {
  std::optional<stats::PolitenessBins> storage;
  const auto& bins = detail::resolve_bins(corpus, opts, storage);
  const auto names = axis_groups(axis, cohorts);
  std::map<std::string, detail::Sample> samples;
  for (const auto& n : names) samples[n];

  CohortReport r;
  r.partition = to_string(axis);
  r.pooling = opts.pooling;
  r.cut_low = bins.cut_low;
  r.cut_high = bins.cut_high;
  corpus.for_each_turn([&](const Turn& t) {
    auto g = detail::group_of_turn(t, axis, cohorts);
    if (!g) {
      ++r.excluded_turns;
      return;
    }
    samples.at(*g).add(t, bins);
  });
  for (const auto& n : names) {
    if (samples.at(n).scores.empty()) {
      throw DataError("cohort group \"" + n + "\" on axis " + to_string(axis) + " has no scored turns");
    }
    r.groups.push_back(samples.at(n).describe(n));
  }
  for (std::size_t i = 0; i < names.size(); ++i)
    for (std::size_t j = i + 1; j < names.size(); ++j)
      r.pairs.push_back(detail::compare_samples(names[i], samples.at(names[i]), names[j], samples.at(names[j]),
                                                opts.pooling));
  return r;
}

inline FacePolitenessReport face_by_politeness(const Corpus& corpus, const CohortTable& cohorts, FaceAct act,
                                               Axis axis, const AnalysisOptions& opts = {}) {
  std::optional<stats::PolitenessBins> storage;
  const auto& bins = detail::resolve_bins(corpus, opts, storage);
  const auto names = axis_groups(axis, cohorts);

  struct Units {
    std::vector<double> polite, impolite;
    std::map<std::string, std::array<std::size_t, 3>> per_speaker;  // n, polite, impolite
  };
  std::map<std::string, Units> units;
  for (const auto& n : names) units[n];
  corpus.for_each_turn([&](const Turn& t) {
    if (!t.politeness_score) return;
    auto g = detail::group_of_turn(t, axis, cohorts);
    if (!g) return;
    const auto bin = bins.classify(*t.politeness_score);
    for (const auto& u : t.utterances) {
      if (u.face_act != act) continue;
      Units& dst = units.at(*g);
      dst.polite.push_back(bin == stats::PolitenessBin::Polite ? 1.0 : 0.0);
      dst.impolite.push_back(bin == stats::PolitenessBin::Impolite ? 1.0 : 0.0);
      auto& s = dst.per_speaker[t.speaker_id];
      ++s[0];
      s[1] += bin == stats::PolitenessBin::Polite;
      s[2] += bin == stats::PolitenessBin::Impolite;
    }
  });

  auto test_units = [&](const Units& u, std::size_t which) {
    if (opts.pooling == Pooling::Utterance) return which == 1 ? u.polite : u.impolite;
    std::vector<double> out;
    for (const auto& [id, s] : u.per_speaker) out.push_back(static_cast<double>(s[which]) / static_cast<double>(s[0]));
    return out;
  };

  FacePolitenessReport r;
  r.act = act;
  r.partition = to_string(axis);
  r.pooling = opts.pooling;
  for (const auto& n : names) {
    const Units& u = units.at(n);
    ActPolitenessGroup g;
    g.name = n;
    g.n_utterances = u.polite.size();
    g.polite_proportion = stats::mean(u.polite);
    g.impolite_proportion = stats::mean(u.impolite);
    r.groups.push_back(g);
  }
  for (std::size_t i = 0; i < names.size(); ++i) {
    for (std::size_t j = i + 1; j < names.size(); ++j) {
      ActPolitenessPair p;
      p.group_a = names[i];
      p.group_b = names[j];
      const Units& a = units.at(names[i]);
      const Units& b = units.at(names[j]);
      if (a.polite.empty() || b.polite.empty()) {
        p.insufficient_data = true;
      } else {
        p.polite = detail::compare(test_units(a, 1), test_units(b, 1));
        p.impolite = detail::compare(test_units(a, 2), test_units(b, 2));
      }
      r.pairs.push_back(p);
    }
  }
  return r;
}

inline IntersectReport intersect_summary(const Corpus& corpus, const CohortTable& cohorts, Axis row_axis,
                                         Axis col_axis, const AnalysisOptions& opts = {}) {
  if (row_axis == col_axis) throw ValidationError("intersection needs two different axes");
  std::optional<stats::PolitenessBins> storage;
  const auto& bins = detail::resolve_bins(corpus, opts, storage);

  std::map<std::pair<std::string, std::string>, detail::Sample> cells;
  std::set<std::string> seen_rows, seen_cols;
  corpus.for_each_turn([&](const Turn& t) {
    auto r = detail::group_of_turn(t, row_axis, cohorts);
    auto c = detail::group_of_turn(t, col_axis, cohorts);
    if (!r || !c || !t.politeness_score) return;
    seen_rows.insert(*r);
    seen_cols.insert(*c);
    cells[{*r, *c}].add(t, bins);
  });
  if (seen_rows.empty()) {
    throw DataError(std::string("no scored turns fall on both the ") + to_string(row_axis) + " and " +
                    to_string(col_axis) + " axes");
  }

  IntersectReport r;
  r.row_axis = to_string(row_axis);
  r.col_axis = to_string(col_axis);
  r.pooling = opts.pooling;
  for (const auto& n : axis_groups(row_axis, cohorts))
    if (seen_rows.count(n)) r.rows.push_back(n);
  for (const auto& n : axis_groups(col_axis, cohorts))
    if (seen_cols.count(n)) r.cols.push_back(n);

  std::vector<std::pair<std::string, const detail::Sample*>> filled;
  for (const auto& row : r.rows) {
    auto& line = r.cells.emplace_back();
    for (const auto& col : r.cols) {
      auto it = cells.find({row, col});
      if (it == cells.end()) {
        line.emplace_back(std::nullopt);
        continue;
      }
      const std::string name = row + "/" + col;
      line.emplace_back(it->second.describe(name));
      filled.emplace_back(name, &it->second);
    }
  }
  for (std::size_t i = 0; i < filled.size(); ++i)
    for (std::size_t j = i + 1; j < filled.size(); ++j)
      r.pairs.push_back(
          detail::compare_samples(filled[i].first, *filled[i].second, filled[j].first, *filled[j].second, opts.pooling));
  return r;
}

// Pearson r between each act's per-utterance indicator and the parent turn's
// score (politeness) or bottom-quartile membership (impoliteness).
inline CorrelationTable correlation_table(const Corpus& corpus, const AnalysisOptions& opts = {}) {
  std::optional<stats::PolitenessBins> storage;
  const auto& bins = detail::resolve_bins(corpus, opts, storage);
  std::vector<double> score, impolite;
  std::array<std::vector<double>, kNumFaceActs> indicator;
  corpus.for_each_turn([&](const Turn& t) {
    if (!t.politeness_score) return;
    const bool low = bins.classify(*t.politeness_score) == stats::PolitenessBin::Impolite;
    for (const auto& u : t.utterances) {
      if (!u.face_act) continue;
      score.push_back(*t.politeness_score);
      impolite.push_back(low ? 1.0 : 0.0);
      for (std::size_t k = 0; k < kNumFaceActs; ++k) indicator[k].push_back(index_of(*u.face_act) == k ? 1.0 : 0.0);
    }
  });
  if (score.size() < 2) throw DataError("correlations need at least two labeled utterances in scored turns");

  auto safe_r = [](const std::vector<double>& x, const std::vector<double>& y) -> std::optional<double> {
    try {
      return stats::pearson_r(x, y);
    } catch (const std::domain_error&) {
      return std::nullopt;
    }
  };
  CorrelationTable out;
  out.n_utterances = score.size();
  for (std::size_t k = 0; k < kNumFaceActs; ++k) {
    out.entries[k].politeness = safe_r(indicator[k], score);
    out.entries[k].impoliteness = safe_r(indicator[k], impolite);
  }
  return out;
}

// ---------------------------------------------------------------------------
// JSON

namespace detail {

inline nlohmann::json optional_number(const std::optional<double>& v) {
  return v ? nlohmann::json(*v) : nlohmann::json(nullptr);
}

inline std::optional<double> read_optional_number(const nlohmann::json& j) {
  if (j.is_null()) return std::nullopt;
  return j.get<double>();
}

}  // namespace detail

inline nlohmann::json to_json(const stats::MwuResult& r) {
  return {{"u1", r.u1},
          {"u2", r.u2},
          {"p", r.p_two_sided},
          {"method", r.method == stats::MwuMethod::Exact ? "exact" : "normal_approx"},
          {"n1", r.n1},
          {"n2", r.n2},
          {"zero_variance", r.zero_variance}};
}

inline stats::MwuResult mwu_from_json(const nlohmann::json& j) {
  stats::MwuResult r;
  r.u1 = j.at("u1").get<double>();
  r.u2 = j.at("u2").get<double>();
  r.p_two_sided = j.at("p").get<double>();
  r.method = j.at("method").get<std::string>() == "exact" ? stats::MwuMethod::Exact : stats::MwuMethod::NormalApprox;
  r.n1 = j.at("n1").get<std::size_t>();
  r.n2 = j.at("n2").get<std::size_t>();
  r.zero_variance = j.at("zero_variance").get<bool>();
  return r;
}

// The prose reports score differences on a 0-100 scale, so both are kept.
inline nlohmann::json to_json(const Comparison& c) {
  return {{"difference", c.difference}, {"difference_x100", 100.0 * c.difference}, {"mwu", to_json(c.test)}};
}

inline Comparison comparison_from_json(const nlohmann::json& j) {
  return {j.at("difference").get<double>(), mwu_from_json(j.at("mwu"))};
}

inline nlohmann::json to_json(const GroupStats& g) {
  nlohmann::json face = nlohmann::json::object();
  for (std::size_t k = 0; k < kNumFaceActs; ++k) face[std::string(code(face_act_at(k)))] = g.face_distribution[k];
  return {{"name", g.name},
          {"n_speakers", g.n_speakers},
          {"n_turns", g.n_turns},
          {"n_utterances", g.n_utterances},
          {"mean_politeness", g.mean_politeness},
          {"polite_proportion", g.polite_proportion},
          {"neutral_proportion", g.neutral_proportion},
          {"impolite_proportion", g.impolite_proportion},
          {"face_distribution", face}};
}

inline GroupStats group_stats_from_json(const nlohmann::json& j) {
  GroupStats g;
  g.name = j.at("name").get<std::string>();
  g.n_speakers = j.at("n_speakers").get<std::size_t>();
  g.n_turns = j.at("n_turns").get<std::size_t>();
  g.n_utterances = j.at("n_utterances").get<std::size_t>();
  g.mean_politeness = j.at("mean_politeness").get<double>();
  g.polite_proportion = j.at("polite_proportion").get<double>();
  g.neutral_proportion = j.at("neutral_proportion").get<double>();
  g.impolite_proportion = j.at("impolite_proportion").get<double>();
  for (std::size_t k = 0; k < kNumFaceActs; ++k)
    g.face_distribution[k] = j.at("face_distribution").at(std::string(code(face_act_at(k)))).get<double>();
  return g;
}

inline nlohmann::json to_json(const PairComparison& p) {
  nlohmann::json j = {{"group_a", p.group_a},
                      {"group_b", p.group_b},
                      {"politeness", to_json(p.politeness)},
                      {"polite", to_json(p.polite)},
                      {"impolite", to_json(p.impolite)}};
  if (p.face) {
    nlohmann::json face = nlohmann::json::object();
    for (std::size_t k = 0; k < kNumFaceActs; ++k) face[std::string(code(face_act_at(k)))] = to_json((*p.face)[k]);
    j["face"] = face;
  } else {
    j["face"] = nullptr;
  }
  return j;
}

inline PairComparison pair_from_json(const nlohmann::json& j) {
  PairComparison p;
  p.group_a = j.at("group_a").get<std::string>();
  p.group_b = j.at("group_b").get<std::string>();
  p.politeness = comparison_from_json(j.at("politeness"));
  p.polite = comparison_from_json(j.at("polite"));
  p.impolite = comparison_from_json(j.at("impolite"));
  if (!j.at("face").is_null()) {
    std::array<Comparison, kNumFaceActs> face{};
    for (std::size_t k = 0; k < kNumFaceActs; ++k)
      face[k] = comparison_from_json(j.at("face").at(std::string(code(face_act_at(k)))));
    p.face = face;
  }
  return p;
}

inline nlohmann::json to_json(const CohortReport& r) {
  nlohmann::json groups = nlohmann::json::array(), pairs = nlohmann::json::array();
  for (const auto& g : r.groups) groups.push_back(to_json(g));
  for (const auto& p : r.pairs) pairs.push_back(to_json(p));
  return {{"partition", r.partition},
          {"pooling", to_string(r.pooling)},
          {"cut_low", r.cut_low},
          {"cut_high", r.cut_high},
          {"excluded_turns", r.excluded_turns},
          {"groups", groups},
          {"pairs", pairs}};
}

inline CohortReport cohort_report_from_json(const nlohmann::json& j) {
  CohortReport r;
  r.partition = j.at("partition").get<std::string>();
  r.pooling = parse_pooling(j.at("pooling").get<std::string>());
  r.cut_low = j.at("cut_low").get<double>();
  r.cut_high = j.at("cut_high").get<double>();
  r.excluded_turns = j.at("excluded_turns").get<std::size_t>();
  for (const auto& g : j.at("groups")) r.groups.push_back(group_stats_from_json(g));
  for (const auto& p : j.at("pairs")) r.pairs.push_back(pair_from_json(p));
  return r;
}

inline nlohmann::json to_json(const FacePolitenessReport& r) {
  nlohmann::json groups = nlohmann::json::array(), pairs = nlohmann::json::array();
  for (const auto& g : r.groups) {
    groups.push_back({{"name", g.name},
                      {"n_utterances", g.n_utterances},
                      {"polite_proportion", g.polite_proportion},
                      {"impolite_proportion", g.impolite_proportion}});
  }
  for (const auto& p : r.pairs) {
    pairs.push_back({{"group_a", p.group_a},
                     {"group_b", p.group_b},
                     {"insufficient_data", p.insufficient_data},
                     {"polite", p.polite ? to_json(*p.polite) : nlohmann::json(nullptr)},
                     {"impolite", p.impolite ? to_json(*p.impolite) : nlohmann::json(nullptr)}});
  }
  return {{"act", format_label(r.act)},
          {"partition", r.partition},
          {"pooling", to_string(r.pooling)},
          {"groups", groups},
          {"pairs", pairs}};
}

inline FacePolitenessReport face_politeness_from_json(const nlohmann::json& j) {
  FacePolitenessReport r;
  r.act = parse_label(j.at("act").get<std::string>());
  r.partition = j.at("partition").get<std::string>();
  r.pooling = parse_pooling(j.at("pooling").get<std::string>());
  for (const auto& g : j.at("groups")) {
    r.groups.push_back({g.at("name").get<std::string>(), g.at("n_utterances").get<std::size_t>(),
                        g.at("polite_proportion").get<double>(), g.at("impolite_proportion").get<double>()});
  }
  for (const auto& p : j.at("pairs")) {
    ActPolitenessPair out;
    out.group_a = p.at("group_a").get<std::string>();
    out.group_b = p.at("group_b").get<std::string>();
    out.insufficient_data = p.at("insufficient_data").get<bool>();
    if (!p.at("polite").is_null()) out.polite = comparison_from_json(p.at("polite"));
    if (!p.at("impolite").is_null()) out.impolite = comparison_from_json(p.at("impolite"));
    r.pairs.push_back(out);
  }
  return r;
}

inline nlohmann::json to_json(const IntersectReport& r) {
  nlohmann::json cells = nlohmann::json::array(), pairs = nlohmann::json::array();
  for (const auto& row : r.cells) {
    nlohmann::json line = nlohmann::json::array();
    for (const auto& cell : row) line.push_back(cell ? to_json(*cell) : nlohmann::json(nullptr));
    cells.push_back(line);
  }
  for (const auto& p : r.pairs) pairs.push_back(to_json(p));
  return {{"row_axis", r.row_axis}, {"col_axis", r.col_axis}, {"pooling", to_string(r.pooling)},
          {"rows", r.rows},         {"cols", r.cols},         {"cells", cells},
          {"pairs", pairs}};
}

inline IntersectReport intersect_report_from_json(const nlohmann::json& j) {
  IntersectReport r;
  r.row_axis = j.at("row_axis").get<std::string>();
  r.col_axis = j.at("col_axis").get<std::string>();
  r.pooling = parse_pooling(j.at("pooling").get<std::string>());
  r.rows = j.at("rows").get<std::vector<std::string>>();
  r.cols = j.at("cols").get<std::vector<std::string>>();
  for (const auto& line : j.at("cells")) {
    auto& row = r.cells.emplace_back();
    for (const auto& cell : line) {
      if (cell.is_null()) row.emplace_back(std::nullopt);
      else row.emplace_back(group_stats_from_json(cell));
    }
  }
  for (const auto& p : j.at("pairs")) r.pairs.push_back(pair_from_json(p));
  return r;
}

inline nlohmann::json to_json(const CorrelationTable& t) {
  nlohmann::json entries = nlohmann::json::object();
  for (std::size_t k = 0; k < kNumFaceActs; ++k) {
    entries[std::string(code(face_act_at(k)))] = {{"politeness", detail::optional_number(t.entries[k].politeness)},
                                                  {"impoliteness", detail::optional_number(t.entries[k].impoliteness)}};
  }
  return {{"n_utterances", t.n_utterances}, {"entries", entries}};
}

inline CorrelationTable correlation_table_from_json(const nlohmann::json& j) {
  CorrelationTable t;
  t.n_utterances = j.at("n_utterances").get<std::size_t>();
  for (std::size_t k = 0; k < kNumFaceActs; ++k) {
    const auto& e = j.at("entries").at(std::string(code(face_act_at(k))));
    t.entries[k].politeness = detail::read_optional_number(e.at("politeness"));
    t.entries[k].impoliteness = detail::read_optional_number(e.at("impoliteness"));
  }
  return t;
}

// Everything one `analyze` run produced.
struct AnalysisBundle {
  std::vector<CohortReport> cohorts;
  std::vector<FacePolitenessReport> face_politeness;
  std::vector<IntersectReport> intersections;
  std::optional<CorrelationTable> correlations;
};

inline nlohmann::json to_json(const AnalysisBundle& b) {
  nlohmann::json j;
  j["cohorts"] = nlohmann::json::array();
  for (const auto& r : b.cohorts) j["cohorts"].push_back(to_json(r));
  j["face_politeness"] = nlohmann::json::array();
  for (const auto& r : b.face_politeness) j["face_politeness"].push_back(to_json(r));
  j["intersections"] = nlohmann::json::array();
  for (const auto& r : b.intersections) j["intersections"].push_back(to_json(r));
  j["correlations"] = b.correlations ? to_json(*b.correlations) : nlohmann::json(nullptr);
  return j;
}

inline AnalysisBundle bundle_from_json(const nlohmann::json& j) {
  try {
    AnalysisBundle b;
    for (const auto& r : j.at("cohorts")) b.cohorts.push_back(cohort_report_from_json(r));
    for (const auto& r : j.at("face_politeness")) b.face_politeness.push_back(face_politeness_from_json(r));
    for (const auto& r : j.at("intersections")) b.intersections.push_back(intersect_report_from_json(r));
    if (!j.at("correlations").is_null()) b.correlations = correlation_table_from_json(j.at("correlations"));
    return b;
  } catch (const nlohmann::json::exception& e) {
    throw DataError(std::string("invalid analysis file: ") + e.what());
  } catch (const ValidationError& e) {
    throw DataError(std::string("invalid analysis file: ") + e.what());
  }
}

}  // namespace facework
