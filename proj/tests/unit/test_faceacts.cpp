#include <set>
#include <string>

#include <gtest/gtest.h>

#include "facework/faceacts.hpp"

using namespace facework;

TEST(FaceActs, ParseDisagreementCode) { EXPECT_EQ(parse_label("hpos-"), FaceAct::Disagreement); }

TEST(FaceActs, ParseIsCaseInsensitiveAndTrims) {
  EXPECT_EQ(parse_label("NONE"), FaceAct::None);
  EXPECT_EQ(parse_label("  SNeg-\n"), FaceAct::Indebtedness);
}

TEST(FaceActs, ParseRejectsUnknownCode) {
  try {
    parse_label("xpos-");
    FAIL() << "expected ValidationError";
  } catch (const ValidationError& e) {
    EXPECT_NE(std::string(e.what()).find("xpos-"), std::string::npos);
  }
  EXPECT_THROW(parse_label("hpos"), ValidationError);
  EXPECT_THROW(parse_label(""), ValidationError);
}

TEST(FaceActs, FormatMatchesMnemonicTable) {
  EXPECT_EQ(format_label(FaceAct::Imposition), "hneg-");
  EXPECT_EQ(format_label(FaceAct::None), "none");
  EXPECT_EQ(format_label(FaceAct::Indebtedness), "sneg-");

  const std::pair<const char*, const char*> table[] = {
      {"hneg-", "Imposition"},   {"hpos-", "Disagreement"}, {"hneg+", "Permissiveness"},
      {"hpos+", "Agreement"},    {"sneg-", "Indebtedness"}, {"spos-", "Apologies"},
      {"sneg+", "Autonomy"},     {"spos+", "Confidence"},   {"none", "None"},
  };
  for (const auto& [c, m] : table) EXPECT_EQ(mnemonic(parse_label(c)), m) << c;
}

TEST(FaceActs, RoundTripOverAllValues) {
  for (FaceAct a : kAllFaceActs) EXPECT_EQ(parse_label(format_label(a)), a);
}

TEST(FaceActs, NonNoneCodesAreTheFullCrossProduct) {
  std::set<std::string> expected;
  for (const char* who : {"h", "s"})
    for (const char* face : {"pos", "neg"})
      for (const char* dir : {"+", "-"}) expected.insert(std::string(who) + face + dir);
  std::set<std::string> actual;
  for (FaceAct a : kAllFaceActs)
    if (a != FaceAct::None) actual.insert(format_label(a));
  EXPECT_EQ(actual, expected);
}

TEST(FaceActs, ComponentsAgreeWithCode) {
  for (FaceAct a : kAllFaceActs) {
    if (a == FaceAct::None) {
      EXPECT_EQ(target(a), FaceTarget::None);
      continue;
    }
    const auto c = code(a);
    EXPECT_EQ(target(a), c[0] == 'h' ? FaceTarget::Hearer : FaceTarget::Speaker);
    EXPECT_EQ(polarity(a), c.substr(1, 3) == "pos" ? FacePolarity::Positive : FacePolarity::Negative);
    EXPECT_EQ(direction(a), c[4] == '+' ? FaceDirection::Raise : FaceDirection::Threaten);
  }
}
