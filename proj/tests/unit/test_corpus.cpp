#include <algorithm>
#include <string>
#include <vector>

#include <gtest/gtest.h>

#include "facework/corpus.hpp"
#include "facework/rng.hpp"
#include "support/temp_dir.hpp"

using namespace facework;
using facework::testkit::TempDir;
using facework::testkit::write_file;

namespace {

Turn make_turn(std::string id, std::optional<std::string> reply_to, std::optional<std::int64_t> ts) {
  Turn t;
  t.id = std::move(id);
  t.speaker_id = "s";
  t.conversation_id = "c";
  t.reply_to = std::move(reply_to);
  t.timestamp = ts;
  return t;
}

std::vector<std::string> ids(const std::vector<Turn>& turns) {
  std::vector<std::string> out;
  for (const auto& t : turns) out.push_back(t.id);
  return out;
}

const char* kThreeLines =
    R"({"id":"u1","speaker":"alice","conversation_id":"c1","reply_to":null,"timestamp":10,"text":"Hi <b>all</b>.","meta":{"politeness":0.4}})"
    "\n"
    R"({"id":"u2","speaker":"bob","conversation_id":"c1","reply-to":"u1","timestamp":20,"text":"Thanks! See www.x.org.","meta":{"politeness":0.9,"note":"x"}})"
    "\n"
    R"({"id":"u3","speaker":"carol","conversation_id":"c1","reply_to":"u1","timestamp":15,"text":"No.","meta":{}})"
    "\n";

}  // namespace

TEST(OrderConversation, RepliesFollowParents) {
  std::vector<Turn> turns{make_turn("A", std::nullopt, 1), make_turn("B", "A", 3), make_turn("C", "A", 2),
                          make_turn("D", std::nullopt, 4)};
  EXPECT_EQ(ids(order_conversation(turns)), (std::vector<std::string>{"A", "C", "B", "D"}));
}

TEST(OrderConversation, RootsOnlyIsChronological) {
  std::vector<Turn> turns{make_turn("x", std::nullopt, 30), make_turn("y", std::nullopt, 10),
                          make_turn("z", std::nullopt, 20)};
  EXPECT_EQ(ids(order_conversation(turns)), (std::vector<std::string>{"y", "z", "x"}));
}

TEST(OrderConversation, StructureBeatsTime) {
  std::vector<Turn> turns{make_turn("C", "B", 1), make_turn("B", "A", 2), make_turn("A", std::nullopt, 3)};
  EXPECT_EQ(ids(order_conversation(turns)), (std::vector<std::string>{"A", "B", "C"}));
}

TEST(OrderConversation, TiesBrokenByIdAndMissingTimestampsLast) {
  std::vector<Turn> turns{make_turn("b", std::nullopt, 5), make_turn("a", std::nullopt, 5),
                          make_turn("n", std::nullopt, std::nullopt)};
  EXPECT_EQ(ids(order_conversation(turns)), (std::vector<std::string>{"a", "b", "n"}));
}

TEST(OrderConversation, CycleIsReported) {
  std::vector<Turn> turns{make_turn("r", std::nullopt, 1), make_turn("p", "q", 2), make_turn("q", "p", 3)};
  try {
    order_conversation(turns);
    FAIL() << "expected DataError";
  } catch (const DataError& e) {
    const std::string msg = e.what();
    EXPECT_NE(msg.find("cycle"), std::string::npos);
    EXPECT_NE(msg.find("p"), std::string::npos);
    EXPECT_NE(msg.find("q"), std::string::npos);
  }
  EXPECT_THROW(order_conversation({make_turn("s", "s", 1)}), DataError);
}

TEST(OrderConversation, OutsideReplyBecomesFlaggedRoot) {
  const auto out = order_conversation({make_turn("b", "elsewhere", 1), make_turn("a", std::nullopt, 2)});
  EXPECT_EQ(ids(out), (std::vector<std::string>{"b", "a"}));
  EXPECT_TRUE(out[0].orphan_reply);
  EXPECT_FALSE(out[1].orphan_reply);
}

TEST(OrderConversation, PermutationAndIdempotenceProperty) {
  Rng rng(41);
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t n = 1 + rng.below(15);
    std::vector<Turn> turns;
    for (std::size_t i = 0; i < n; ++i) {
      std::optional<std::string> parent;
      if (i > 0 && rng.bernoulli(0.7)) parent = "t" + std::to_string(rng.below(i));
      turns.push_back(make_turn("t" + std::to_string(i), parent, static_cast<std::int64_t>(rng.below(5))));
    }
    rng.shuffle(turns);
    const auto once = order_conversation(turns);
    auto a = ids(once), b = ids(turns);
    std::sort(a.begin(), a.end());
    std::sort(b.begin(), b.end());
    EXPECT_EQ(a, b);
    EXPECT_EQ(order_conversation(once), once);
    // Every reply comes after its parent.
    std::map<std::string, std::size_t> pos;
    for (std::size_t i = 0; i < once.size(); ++i) pos[once[i].id] = i;
    for (const auto& t : once)
      if (t.reply_to) EXPECT_LT(pos[*t.reply_to], pos[t.id]);
  }
}

TEST(OrderConversation, ChainIgnoresTimestampsProperty) {
  Rng rng(43);
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<Turn> turns;
    for (int i = 0; i < 8; ++i) {
      turns.push_back(make_turn("t" + std::to_string(i), i ? std::optional<std::string>("t" + std::to_string(i - 1)) : std::nullopt,
                                static_cast<std::int64_t>(rng.below(100))));
    }
    rng.shuffle(turns);
    EXPECT_EQ(ids(order_conversation(turns)),
              (std::vector<std::string>{"t0", "t1", "t2", "t3", "t4", "t5", "t6", "t7"}));
  }
}

TEST(LoadCorpus, ThreeLinesOneConversation) {
  TempDir dir;
  write_file(dir / kUtterancesFile, kThreeLines);
  write_file(dir / kSpeakersFile,
             R"({"alice":{"is_admin":true,"gender":"Female","edit_count":120,"home":"x"},"bob":{"is-admin":false}})");
  const Corpus c = load_corpus(dir.path());
  ASSERT_EQ(c.conversations.size(), 1u);
  const auto& turns = c.conversations.at("c1");
  ASSERT_EQ(turns.size(), 3u);
  EXPECT_EQ(ids(turns), (std::vector<std::string>{"u1", "u3", "u2"}));
  EXPECT_EQ(turns[2].reply_to, "u1");
  EXPECT_DOUBLE_EQ(*turns[0].politeness_score, 0.4);
  EXPECT_FALSE(turns[1].politeness_score.has_value());
  EXPECT_EQ(turns[2].extra_meta.at("note"), "x");
  EXPECT_EQ(c.speakers.at("alice").is_admin, true);
  EXPECT_EQ(c.speakers.at("alice").gender, "Female");
  EXPECT_EQ(c.speakers.at("alice").edit_count, 120);
  EXPECT_EQ(c.speakers.at("alice").extra_meta.at("home"), "x");
  EXPECT_EQ(c.speakers.at("bob").is_admin, false);
}

TEST(LoadCorpus, MissingSpeakerGetsPlaceholder) {
  TempDir dir;
  write_file(dir / kUtterancesFile, kThreeLines);
  const Corpus c = load_corpus(dir.path());
  ASSERT_TRUE(c.speakers.count("carol"));
  const auto& carol = c.speakers.at("carol");
  EXPECT_TRUE(carol.placeholder);
  const auto cohorts = assign_cohorts(c);
  EXPECT_EQ(cohorts.at("carol").admin, AdminCohort::Unknown);
  EXPECT_EQ(cohorts.at("carol").gender, GenderCohort::Unknown);
  EXPECT_EQ(cohorts.at("carol").experience, ExperienceCohort::Unknown);
}

TEST(LoadCorpus, MissingUtterancesFileIsFatal) {
  TempDir dir;
  EXPECT_THROW(load_corpus(dir.path()), DataError);
}

TEST(LoadCorpus, StrictModeNamesLine) {
  TempDir dir;
  write_file(dir / kUtterancesFile,
             std::string(kThreeLines) + R"({"speaker":"x","conversation_id":"c1","text":"no id"})" + "\n");
  LoadOptions strict;
  strict.strict = true;
  try {
    load_corpus(dir.path(), strict);
    FAIL() << "expected DataError";
  } catch (const DataError& e) {
    EXPECT_EQ(e.line(), 4u);
    EXPECT_NE(std::string(e.what()).find(":4:"), std::string::npos);
    EXPECT_NE(std::string(e.what()).find("\"id\""), std::string::npos);
  }
}

TEST(LoadCorpus, LenientModeSkipsAndCounts) {
  TempDir dir;
  write_file(dir / kUtterancesFile, std::string(kThreeLines) + "{not json\n\n" +
                                         R"({"speaker":"x","conversation_id":"c1"})" + "\n");
  const Corpus c = load_corpus(dir.path());
  EXPECT_EQ(c.provenance.skipped_lines, 2u);
  EXPECT_EQ(c.num_turns(), 3u);
}

TEST(LoadCorpus, CustomPolitenessKey) {
  TempDir dir;
  write_file(dir / kUtterancesFile,
             R"({"id":"a","speaker":"s","conversation_id":"c","text":"x","meta":{"pp":0.25,"politeness":9}})" "\n");
  LoadOptions opts;
  opts.politeness_key = "pp";
  const Corpus c = load_corpus(dir.path(), opts);
  EXPECT_DOUBLE_EQ(*c.conversations.at("c")[0].politeness_score, 0.25);
  EXPECT_EQ(c.conversations.at("c")[0].extra_meta.at("politeness"), "9");
}

TEST(LoadCorpus, RoundTripThroughSave) {
  TempDir dir;
  write_file(dir / kUtterancesFile, kThreeLines);
  write_file(dir / kSpeakersFile, R"({"alice":{"is_admin":true,"gender":"Female","edit_count":120,"k":[1,2]}})");
  Corpus first = load_corpus(dir.path());
  segment_corpus(first, SegmenterConfig::defaults());
  first.conversations.at("c1")[2].utterances[0].face_act = FaceAct::Indebtedness;
  save_corpus(first, dir / "out");
  const Corpus second = load_corpus(dir / "out");
  EXPECT_EQ(second, first);
  save_corpus(second, dir / "out2");
  EXPECT_EQ(testkit::read_file(dir / "out" / kUtterancesFile), testkit::read_file(dir / "out2" / kUtterancesFile));
  EXPECT_EQ(testkit::read_file(dir / "out" / kSpeakersFile), testkit::read_file(dir / "out2" / kSpeakersFile));
}

TEST(SegmentCorpus, FillsUtterances) {
  TempDir dir;
  write_file(dir / kUtterancesFile, kThreeLines);
  Corpus c = load_corpus(dir.path());
  segment_corpus(c, SegmenterConfig::defaults());
  const auto& u2 = c.conversations.at("c1")[2];
  ASSERT_EQ(u2.utterances.size(), 2u);
  EXPECT_EQ(u2.utterances[0].text, "Thanks!");
  EXPECT_EQ(u2.utterances[1].text, "See <url>.");
  EXPECT_EQ(u2.utterances[1].id(), "u2#1");
  EXPECT_EQ(c.conversations.at("c1")[0].utterances[0].text, "Hi all.");
}

namespace {

Corpus corpus_with_edit_counts(const std::vector<std::optional<std::int64_t>>& counts) {
  Corpus c;
  for (std::size_t i = 0; i < counts.size(); ++i) {
    Speaker s;
    s.id = "s" + std::to_string(i);
    s.edit_count = counts[i];
    c.speakers[s.id] = s;
  }
  return c;
}

}  // namespace

TEST(AssignCohorts, ExperienceQuartiles) {
  const auto c = corpus_with_edit_counts({1, 2, 3, 4, 5, 6, 7, 8, std::nullopt});
  const auto table = assign_cohorts(c);
  auto exp = [&](int i) { return table.at("s" + std::to_string(i)).experience; };
  EXPECT_EQ(exp(0), ExperienceCohort::Inexperienced);
  EXPECT_EQ(exp(1), ExperienceCohort::Inexperienced);
  for (int i = 2; i <= 5; ++i) EXPECT_EQ(exp(i), ExperienceCohort::Middle) << i;
  EXPECT_EQ(exp(6), ExperienceCohort::Experienced);
  EXPECT_EQ(exp(7), ExperienceCohort::Experienced);
  EXPECT_EQ(exp(8), ExperienceCohort::Unknown);
}

TEST(AssignCohorts, QuartilesDisjointProperty) {
  Rng rng(47);
  for (int trial = 0; trial < 100; ++trial) {
    std::vector<std::optional<std::int64_t>> counts(1 + rng.below(30));
    for (auto& c : counts) c = static_cast<std::int64_t>(rng.below(6));
    const auto table = assign_cohorts(corpus_with_edit_counts(counts));
    for (const auto& [id, a] : table.by_speaker) {
      EXPECT_NE(a.experience, ExperienceCohort::Unknown);
    }
    EXPECT_EQ(assign_cohorts(corpus_with_edit_counts(counts)).by_speaker, table.by_speaker);
  }
}

TEST(AssignCohorts, GenderCaseInsensitive) {
  Corpus c;
  for (auto [id, g] : {std::pair{"a", "Female"}, {"b", "MALE"}, {"c", "nonbinary"}}) {
    Speaker s;
    s.id = id;
    s.gender = g;
    c.speakers[id] = s;
  }
  const auto table = assign_cohorts(c, {"male", "female"});
  EXPECT_EQ(table.at("a").gender, GenderCohort::GroupB);
  EXPECT_EQ(table.at("b").gender, GenderCohort::GroupA);
  EXPECT_EQ(table.at("c").gender, GenderCohort::Unknown);
}
