#include <algorithm>
#include <string>
#include <vector>

#include <gtest/gtest.h>

#include "facework/rng.hpp"
#include "facework/textprep.hpp"

using namespace facework;

namespace {

std::string without_space(std::string s) {
  s.erase(std::remove_if(s.begin(), s.end(), [](unsigned char c) { return std::isspace(c); }), s.end());
  return s;
}

}  // namespace

TEST(ScrubMarkup, RemovesTags) { EXPECT_EQ(scrub_markup("<b>Hi</b> there"), "Hi there"); }

TEST(ScrubMarkup, DecodesEntities) {
  EXPECT_EQ(scrub_markup("a &amp; b"), "a & b");
  EXPECT_EQ(scrub_markup("&quot;x&quot; &#65;&#x42;"), "\"x\" AB");
  EXPECT_EQ(scrub_markup("caf&#233;"), "caf\xC3\xA9");
  EXPECT_EQ(scrub_markup("&bogus; stays"), "&bogus; stays");
}

TEST(ScrubMarkup, LeavesUnclosedAngleBracket) {
  EXPECT_EQ(scrub_markup("x < y"), "x < y");
  EXPECT_EQ(scrub_markup("x <y and z"), "x <y and z");
}

TEST(ScrubMarkup, CollapsesWhitespaceAndSeparatesBlocks) {
  EXPECT_EQ(scrub_markup("  one\n\n two\t three  "), "one two three");
  EXPECT_EQ(scrub_markup("line<br/>next"), "line next");
  EXPECT_EQ(scrub_markup("a<!-- hidden -->b"), "a b");
  EXPECT_EQ(scrub_markup("<span class=\"x\">in</span>line"), "inline");
}

TEST(ScrubMarkup, EncodedTagsDoNotSurvive) {
  EXPECT_EQ(scrub_markup("&lt;b&gt;bold&lt;/b&gt;"), "bold");
}

TEST(MaskUrls, MasksHttp) {
  const auto cfg = SegmenterConfig::defaults();
  EXPECT_EQ(mask_urls("see https://a.b/c now", cfg), "see <url> now");
  EXPECT_EQ(mask_urls("HTTP://X.Y ok", cfg), "<url> ok");
}

TEST(MaskUrls, KeepsTrailingPunctuation) {
  const auto cfg = SegmenterConfig::defaults();
  EXPECT_EQ(mask_urls("www.x.org.", cfg), "<url>.");
  EXPECT_EQ(mask_urls("(see http://a.org/x)", cfg), "(see <url>)");
  EXPECT_EQ(mask_urls("http://en.wikipedia.org/wiki/A_(b) is", cfg), "<url> is");
}

TEST(MaskUrls, IdentityWithoutLinks) {
  const auto cfg = SegmenterConfig::defaults();
  EXPECT_EQ(mask_urls("no links here", cfg), "no links here");
  EXPECT_EQ(mask_urls("awww.no", cfg), "awww.no");
}

TEST(MaskUrls, CustomToken) {
  auto cfg = SegmenterConfig::defaults();
  cfg.url_mask_token = "[URL]";
  EXPECT_EQ(mask_urls("go to www.a.com now", cfg), "go to [URL] now");
}

TEST(SegmentSentences, SplitsSimpleSentences) {
  const auto cfg = SegmenterConfig::defaults();
  EXPECT_EQ(segment_sentences("Hello. World.", cfg), (std::vector<std::string>{"Hello.", "World."}));
}

TEST(SegmentSentences, RespectsAbbreviations) {
  // Derived by hand from the split rule: "Dr." is listed so no break after it;
  // "Smith." is not, and "He" starts uppercase.
  const auto cfg = SegmenterConfig::defaults();
  EXPECT_EQ(segment_sentences("I met Dr. Smith. He left.", cfg),
            (std::vector<std::string>{"I met Dr. Smith.", "He left."}));
}

TEST(SegmentSentences, NoTerminatorIsOneSegment) {
  const auto cfg = SegmenterConfig::defaults();
  EXPECT_EQ(segment_sentences("just play nice", cfg), (std::vector<std::string>{"just play nice"}));
}

TEST(SegmentSentences, EmptyInput) {
  const auto cfg = SegmenterConfig::defaults();
  EXPECT_TRUE(segment_sentences("", cfg).empty());
  EXPECT_TRUE(segment_sentences("   \t ", cfg).empty());
}

TEST(SegmentSentences, TerminatorRunsAndOpeners) {
  const auto cfg = SegmenterConfig::defaults();
  EXPECT_EQ(segment_sentences("Really?! Yes. 3 more. \"Quoted\" too", cfg),
            (std::vector<std::string>{"Really?!", "Yes.", "3 more.", "\"Quoted\" too"}));
  // Lowercase continuation does not split.
  EXPECT_EQ(segment_sentences("It was 3 p.m. and late. ok then", cfg),
            (std::vector<std::string>{"It was 3 p.m. and late. ok then"}));
  EXPECT_EQ(segment_sentences("See (e.g. Foo) here.", cfg), (std::vector<std::string>{"See (e.g. Foo) here."}));
}

TEST(SegmentSentences, UrlMaskBeforeTerminator) {
  const auto cfg = SegmenterConfig::defaults();
  EXPECT_EQ(prepare_text("Read <i>this</i>: www.x.org. Then reply.", cfg),
            (std::vector<std::string>{"Read this: <url>.", "Then reply."}));
}

TEST(SegmentSentences, DefaultListMatchesShippedDataFile) {
  EXPECT_EQ(load_abbreviations(std::string(FACEWORK_DATA_DIR) + "/abbreviations.txt"), default_abbreviations());
}

TEST(SegmentSentences, ContentIsPreservedProperty) {
  static const char* pieces[] = {"Hello", "world", ".", "!", "?", " ", "  ", "Dr.", "e.g.", "A", "7", "x",
                                 "\"", "'", "etc.", "?!", "...", "\n", "Z", "b"};
  const auto cfg = SegmenterConfig::defaults();
  Rng rng(99);
  for (int trial = 0; trial < 500; ++trial) {
    std::string text;
    const auto len = rng.below(25);
    for (std::uint64_t k = 0; k < len; ++k) text += pieces[rng.below(std::size(pieces))];
    const auto segs = segment_sentences(text, cfg);
    std::string joined;
    for (const auto& s : segs) {
      EXPECT_FALSE(s.empty());
      EXPECT_EQ(s, std::string(detail::trim(s)));
      joined += s + " ";
    }
    ASSERT_EQ(without_space(joined), without_space(text)) << text;
    // Deterministic and idempotent on its own single segments.
    EXPECT_EQ(segment_sentences(text, cfg), segs);
    for (const auto& s : segs) {
      EXPECT_EQ(segment_sentences(s, cfg), std::vector<std::string>{s});
    }
  }
}

TEST(SegmentSentences, NoKnownTagSurvivesScrub) {
  const char* inputs[] = {"<b>x</b>. <i>Y</i>", "&lt;div&gt;A. B&lt;/div&gt;", "<p>One.</p><p>Two.</p>"};
  const auto cfg = SegmenterConfig::defaults();
  for (const char* in : inputs) {
    for (const auto& seg : prepare_text(in, cfg)) {
      for (const char* tag : {"<b", "<i", "<div", "<p", "</"}) EXPECT_EQ(seg.find(tag), std::string::npos) << seg;
    }
  }
}

TEST(Abbreviations, FileMustUseTrailingDot) {
  const auto path = std::filesystem::temp_directory_path() / "facework-abbr-bad.txt";
  {
    std::ofstream out(path);
    out << "# comment\nDr.\nMr\n";
  }
  EXPECT_THROW(load_abbreviations(path), DataError);
  std::filesystem::remove(path);
}
