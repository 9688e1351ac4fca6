#include <regex>
#include <sstream>
#include <string>

#include <gtest/gtest.h>

#include "facework/fixture.hpp"
#include "facework/report.hpp"
#include "support/temp_dir.hpp"

using namespace facework;

namespace {

AnalysisBundle fixture_bundle(bool everything) {
  FixtureConfig cfg;
  cfg.n_conversations = 80;
  const Corpus c = generate_fixture(cfg);
  const auto cohorts = assign_cohorts(c);
  AnalysisBundle b;
  b.cohorts.push_back(cohort_summary(c, cohorts, Axis::Admin));
  if (everything) {
    b.face_politeness.push_back(face_by_politeness(c, cohorts, FaceAct::Agreement, Axis::Admin));
    b.intersections.push_back(intersect_summary(c, cohorts, Axis::Admin, Axis::Gender));
    b.correlations = correlation_table(c);
  }
  return b;
}

std::size_t count(const std::string& haystack, const std::string& needle) {
  std::size_t n = 0;
  for (auto pos = haystack.find(needle); pos != std::string::npos; pos = haystack.find(needle, pos + 1)) ++n;
  return n;
}

}  // namespace

TEST(Report, SvgHasNineBarRows) {
  const auto figures = render_figures(fixture_bundle(false));
  ASSERT_EQ(figures.size(), 1u);
  EXPECT_EQ(figures[0].first, "face_admin_admin_vs_non_admin.svg");
  EXPECT_EQ(count(figures[0].second, "<g class=\"act\""), kNumFaceActs);
  EXPECT_EQ(count(figures[0].second, "<rect x=\"") - 1, kNumFaceActs);  // plus one legend swatch
}

TEST(Report, DivergingBarsFollowSign) {
  BarSeries s{"diff", {}};
  s.values[0] = 0.1;
  s.values[1] = -0.05;
  const auto svg = render_difference_svg("t", "left", "right", {s});
  const std::regex rect(R"re(<rect x="([0-9.]+)" y="\d+" width="([0-9.]+)")re");
  std::vector<std::pair<double, double>> bars;
  for (auto it = std::sregex_iterator(svg.begin(), svg.end(), rect); it != std::sregex_iterator(); ++it)
    bars.emplace_back(std::stod((*it)[1]), std::stod((*it)[2]));
  ASSERT_GE(bars.size(), 2u);
  EXPECT_NEAR(bars[0].second, 2.0 * bars[1].second, 0.02);
  EXPECT_NEAR(bars[1].first + bars[1].second, bars[0].first, 0.02);  // negative bar ends at the centre
}

TEST(Report, ByteIdenticalAcrossRuns) {
  const auto a = fixture_bundle(true);
  const auto b = fixture_bundle(true);
  EXPECT_EQ(render_markdown(a), render_markdown(b));
  EXPECT_EQ(render_csv(a), render_csv(b));
  EXPECT_EQ(render_figures(a), render_figures(b));
  testkit::TempDir d1, d2;
  const auto f1 = write_report(a, d1.path(), {ReportFormat::Markdown, ReportFormat::Csv, ReportFormat::Svg});
  const auto f2 = write_report(b, d2.path(), {ReportFormat::Markdown, ReportFormat::Csv, ReportFormat::Svg});
  ASSERT_EQ(f1.size(), f2.size());
  for (std::size_t i = 0; i < f1.size(); ++i) {
    EXPECT_EQ(f1[i].filename(), f2[i].filename());
    EXPECT_EQ(testkit::read_file(f1[i]), testkit::read_file(f2[i]));
  }
}

TEST(Report, CsvRowsAreGroupsTimesMetrics) {
  const auto b = fixture_bundle(false);
  std::istringstream in(render_csv(b));
  std::string line;
  std::getline(in, line);
  EXPECT_EQ(line, "section,group,metric,value");
  std::size_t group_rows = 0;
  while (std::getline(in, line))
    if (line.rfind("cohort:admin,", 0) == 0) ++group_rows;
  EXPECT_EQ(group_rows, b.cohorts[0].groups.size() * kCsvGroupMetrics);
}

TEST(Report, MarkdownCarriesMarkersAndSections) {
  const auto md = render_markdown(fixture_bundle(true));
  EXPECT_NE(md.find("## Cohorts by admin"), std::string::npos);
  EXPECT_NE(md.find("### admin vs non_admin"), std::string::npos);
  EXPECT_NE(md.find("| Politeness score |"), std::string::npos);
  EXPECT_NE(md.find("‡"), std::string::npos);
  EXPECT_NE(md.find("## Mean politeness by admin and gender"), std::string::npos);
  EXPECT_NE(md.find("## Correlation of face acts with politeness"), std::string::npos);
}

TEST(Report, UnknownFormatIsAnError) {
  EXPECT_EQ(parse_report_format("md"), ReportFormat::Markdown);
  EXPECT_EQ(parse_report_format("svg"), ReportFormat::Svg);
  EXPECT_THROW(parse_report_format("pdf"), ValidationError);
}

TEST(Report, CsvQuotesAwkwardNames) {
  AnalysisBundle b;
  CohortReport r;
  r.partition = "gender";
  GroupStats g;
  g.name = "a, \"b\"";
  r.groups.push_back(g);
  b.cohorts.push_back(r);
  EXPECT_NE(render_csv(b).find("cohort:gender,\"a, \"\"b\"\"\",n_speakers,0"), std::string::npos);
}
