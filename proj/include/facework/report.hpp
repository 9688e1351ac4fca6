#pragma once

#include <algorithm>
#include <array>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "facework/analysis.hpp"
#include "facework/error.hpp"
#include "facework/faceacts.hpp"
#include "facework/stats.hpp"

namespace facework {

enum class ReportFormat { Markdown, Csv, Svg };

inline ReportFormat parse_report_format(std::string_view s) {
  if (s == "md" || s == "markdown") return ReportFormat::Markdown;
  if (s == "csv") return ReportFormat::Csv;
  if (s == "svg") return ReportFormat::Svg;
  throw ValidationError("unknown report format \"" + std::string(s) + "\" (expected md, csv or svg)");
}

namespace detail {

// Fixed-precision number with negative zero folded to zero.
inline std::string fixed(double v, int digits = 3) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", digits, v);
  std::string s = buf;
  if (s.front() == '-' && s.find_first_not_of("-0.") == std::string::npos) s.erase(0, 1);
  return s;
}

inline std::string p_value(double p) {
  char buf[32];
  if (p < 0.001) std::snprintf(buf, sizeof buf, "%.2e", p);
  else std::snprintf(buf, sizeof buf, "%.3f", p);
  return buf;
}

inline std::string csv_number(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.10g", v);
  return buf;
}

inline std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n\r") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

inline std::string xml_escape(std::string_view s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      case '\'': out += "&apos;"; break;
      default: out += c;
    }
  }
  return out;
}

inline std::string act_heading(FaceAct a) { return std::string(code(a)) + " (" + std::string(mnemonic(a)) + ")"; }

inline std::string slug(std::string_view s) {
  std::string out;
  for (char c : s) {
    const auto u = static_cast<unsigned char>(c);
    out += std::isalnum(u) ? static_cast<char>(std::tolower(u)) : '_';
  }
  return out;
}

inline void comparison_row(std::string& md, const std::string& metric, const Comparison& c) {
  md += "| " + metric + " | " + fixed(c.difference) + " | " + fixed(100.0 * c.difference, 1) + " | " +
        p_value(c.test.p_two_sided) + " | " + stats::significance_marker(c.test.p_two_sided) + " |\n";
}

inline void group_table(std::string& md, const std::vector<GroupStats>& groups) {
  md += "| Group | Speakers | Turns | Utterances | Mean politeness | Polite | Neutral | Impolite |\n";
  md += "|---|---:|---:|---:|---:|---:|---:|---:|\n";
  for (const auto& g : groups) {
    md += "| " + g.name + " | " + std::to_string(g.n_speakers) + " | " + std::to_string(g.n_turns) + " | " +
          std::to_string(g.n_utterances) + " | " + fixed(g.mean_politeness) + " | " + fixed(g.polite_proportion) +
          " | " + fixed(g.neutral_proportion) + " | " + fixed(g.impolite_proportion) + " |\n";
  }
}

inline void pair_tables(std::string& md, const std::vector<PairComparison>& pairs) {
  for (const auto& p : pairs) {
    md += "\n### " + p.group_a + " vs " + p.group_b + "\n\n";
    md += "| Metric | Difference | x100 | p | Sig. |\n|---|---:|---:|---:|---|\n";
    comparison_row(md, "Politeness score", p.politeness);
    comparison_row(md, "Polite proportion", p.polite);
    comparison_row(md, "Impolite proportion", p.impolite);
    if (p.face) {
      for (std::size_t k = 0; k < kNumFaceActs; ++k) comparison_row(md, act_heading(face_act_at(k)), (*p.face)[k]);
    }
  }
}

inline void distribution_table(std::string& md, const std::vector<const GroupStats*>& groups) {
  md += "| Act |";
  std::string rule = "|---|";
  for (const auto* g : groups) {
    md += " " + g->name + " |";
    rule += "---:|";
  }
  md += "\n" + rule + "\n";
  for (std::size_t k = 0; k < kNumFaceActs; ++k) {
    md += "| " + act_heading(face_act_at(k)) + " |";
    for (const auto* g : groups) md += " " + fixed(g->face_distribution[k]) + " |";
    md += "\n";
  }
}

inline const PairComparison* find_pair(const std::vector<PairComparison>& pairs, const std::string& a,
                                       const std::string& b) {
  for (const auto& p : pairs)
    if ((p.group_a == a && p.group_b == b) || (p.group_a == b && p.group_b == a)) return &p;
  return nullptr;
}

inline void metric_rows(std::vector<std::array<std::string, 4>>& rows, const std::string& section, const GroupStats& g) {
  auto add = [&](const std::string& metric, const std::string& value) { rows.push_back({section, g.name, metric, value}); };
  add("n_speakers", std::to_string(g.n_speakers));
  add("n_turns", std::to_string(g.n_turns));
  add("n_utterances", std::to_string(g.n_utterances));
  add("mean_politeness", csv_number(g.mean_politeness));
  add("polite_proportion", csv_number(g.polite_proportion));
  add("neutral_proportion", csv_number(g.neutral_proportion));
  add("impolite_proportion", csv_number(g.impolite_proportion));
  for (std::size_t k = 0; k < kNumFaceActs; ++k) add("face:" + std::string(code(face_act_at(k))), csv_number(g.face_distribution[k]));
}

inline void comparison_rows(std::vector<std::array<std::string, 4>>& rows, const std::string& section,
                            const PairComparison& p) {
  const std::string group = p.group_a + " vs " + p.group_b;
  auto add = [&](const std::string& metric, const Comparison& c) {
    rows.push_back({section, group, metric + "_difference", csv_number(c.difference)});
    rows.push_back({section, group, metric + "_p", csv_number(c.test.p_two_sided)});
  };
  add("politeness", p.politeness);
  add("polite", p.polite);
  add("impolite", p.impolite);
  if (p.face)
    for (std::size_t k = 0; k < kNumFaceActs; ++k) add("face:" + std::string(code(face_act_at(k))), (*p.face)[k]);
}

}  // namespace detail

// Per-group metric rows emitted for every group of a cohort section.
inline constexpr std::size_t kCsvGroupMetrics = 7 + kNumFaceActs;

inline std::string render_markdown(const AnalysisBundle& b) {
  std::string md = "# Politeness and face acts\n\n";
  md += "Significance (Mann-Whitney U, two-sided): * p < 0.05, † p < 0.001, ‡ p < 0.0001.\n";

  for (const auto& r : b.cohorts) {
    md += "\n## Cohorts by " + r.partition + "\n\n";
    detail::group_table(md, r.groups);
    md += "\nPoliteness bins: impolite below " + detail::fixed(r.cut_low) + ", polite above " +
          detail::fixed(r.cut_high) + ". Test unit: " + to_string(r.pooling) + ". Turns outside the compared groups: " +
          std::to_string(r.excluded_turns) + ".\n\n";
    std::vector<const GroupStats*> groups;
    for (const auto& g : r.groups) groups.push_back(&g);
    detail::distribution_table(md, groups);
    detail::pair_tables(md, r.pairs);
  }

  for (const auto& r : b.face_politeness) {
    md += "\n## " + detail::act_heading(r.act) + " utterances perceived as polite, by " + r.partition + "\n\n";
    md += "| Group | Utterances | Polite | Impolite |\n|---|---:|---:|---:|\n";
    for (const auto& g : r.groups) {
      md += "| " + g.name + " | " + std::to_string(g.n_utterances) + " | " + detail::fixed(g.polite_proportion) +
            " | " + detail::fixed(g.impolite_proportion) + " |\n";
    }
    for (const auto& p : r.pairs) {
      md += "\n### " + p.group_a + " vs " + p.group_b + "\n\n";
      if (p.insufficient_data) {
        md += "Insufficient data: the act is missing from at least one group.\n";
        continue;
      }
      md += "| Metric | Difference | x100 | p | Sig. |\n|---|---:|---:|---:|---|\n";
      detail::comparison_row(md, "Polite proportion", *p.polite);
      detail::comparison_row(md, "Impolite proportion", *p.impolite);
    }
  }

  for (const auto& r : b.intersections) {
    md += "\n## Mean politeness by " + r.row_axis + " and " + r.col_axis + "\n\n|  |";
    std::string rule = "|---|";
    for (const auto& c : r.cols) {
      md += " " + c + " |";
      rule += "---:|";
    }
    md += "\n" + rule + "\n";
    for (std::size_t i = 0; i < r.rows.size(); ++i) {
      std::string marker;
      if (r.cols.size() == 2 && r.cells[i][0] && r.cells[i][1]) {
        if (const auto* p = detail::find_pair(r.pairs, r.cells[i][0]->name, r.cells[i][1]->name))
          marker = stats::significance_marker(p->politeness.test.p_two_sided);
      }
      md += "| " + r.rows[i] + marker + " |";
      for (const auto& cell : r.cells[i]) md += " " + (cell ? detail::fixed(cell->mean_politeness) : std::string("empty")) + " |";
      md += "\n";
    }
    md += "\nRow markers compare the " + r.col_axis + " groups within the row.\n\n";
    std::vector<GroupStats> filled;
    for (const auto& line : r.cells)
      for (const auto& cell : line)
        if (cell) filled.push_back(*cell);
    detail::group_table(md, filled);
    md += "\n";
    std::vector<const GroupStats*> groups;
    for (const auto& g : filled) groups.push_back(&g);
    detail::distribution_table(md, groups);
    detail::pair_tables(md, r.pairs);
  }

  if (b.correlations) {
    md += "\n## Correlation of face acts with politeness\n\n";
    md += "Pearson r over " + std::to_string(b.correlations->n_utterances) +
          " utterances; impoliteness is bottom-quartile membership of the turn.\n\n";
    md += "| Act | Politeness | Impoliteness |\n|---|---:|---:|\n";
    for (std::size_t k = 0; k < kNumFaceActs; ++k) {
      const auto& e = b.correlations->entries[k];
      md += "| " + detail::act_heading(face_act_at(k)) + " | " +
            (e.politeness ? detail::fixed(*e.politeness, 2) : std::string("n/a")) + " | " +
            (e.impoliteness ? detail::fixed(*e.impoliteness, 2) : std::string("n/a")) + " |\n";
    }
  }
  return md;
}

// Long format: section,group,metric,value.
inline std::string render_csv(const AnalysisBundle& b) {
  std::vector<std::array<std::string, 4>> rows;
  for (const auto& r : b.cohorts) {
    for (const auto& g : r.groups) detail::metric_rows(rows, "cohort:" + r.partition, g);
    for (const auto& p : r.pairs) detail::comparison_rows(rows, "cohort_test:" + r.partition, p);
  }
  for (const auto& r : b.face_politeness) {
    const std::string section = "face_politeness:" + r.partition + ":" + std::string(code(r.act));
    for (const auto& g : r.groups) {
      rows.push_back({section, g.name, "n_utterances", std::to_string(g.n_utterances)});
      rows.push_back({section, g.name, "polite_proportion", detail::csv_number(g.polite_proportion)});
      rows.push_back({section, g.name, "impolite_proportion", detail::csv_number(g.impolite_proportion)});
    }
    for (const auto& p : r.pairs) {
      const std::string group = p.group_a + " vs " + p.group_b;
      if (p.insufficient_data) {
        rows.push_back({section, group, "insufficient_data", "1"});
        continue;
      }
      rows.push_back({section, group, "polite_difference", detail::csv_number(p.polite->difference)});
      rows.push_back({section, group, "polite_p", detail::csv_number(p.polite->test.p_two_sided)});
      rows.push_back({section, group, "impolite_difference", detail::csv_number(p.impolite->difference)});
      rows.push_back({section, group, "impolite_p", detail::csv_number(p.impolite->test.p_two_sided)});
    }
  }
  for (const auto& r : b.intersections) {
    const std::string section = "intersect:" + r.row_axis + "x" + r.col_axis;
    for (std::size_t i = 0; i < r.rows.size(); ++i)
      for (std::size_t j = 0; j < r.cols.size(); ++j) {
        if (r.cells[i][j]) detail::metric_rows(rows, section, *r.cells[i][j]);
        else rows.push_back({section, r.rows[i] + "/" + r.cols[j], "empty", "1"});
      }
    for (const auto& p : r.pairs) detail::comparison_rows(rows, "intersect_test:" + r.row_axis + "x" + r.col_axis, p);
  }
  if (b.correlations) {
    for (std::size_t k = 0; k < kNumFaceActs; ++k) {
      const auto& e = b.correlations->entries[k];
      const std::string act(code(face_act_at(k)));
      rows.push_back({"correlation", act, "politeness_r", e.politeness ? detail::csv_number(*e.politeness) : ""});
      rows.push_back({"correlation", act, "impoliteness_r", e.impoliteness ? detail::csv_number(*e.impoliteness) : ""});
    }
  }
  std::string out = "section,group,metric,value\n";
  for (const auto& row : rows) {
    out += detail::csv_field(row[0]) + "," + detail::csv_field(row[1]) + "," + detail::csv_field(row[2]) + "," +
           detail::csv_field(row[3]) + "\n";
  }
  return out;
}

// One bar series of a diverging chart: a signed value per face act.
struct BarSeries {
  std::string name;
  std::array<double, kNumFaceActs> values{};
};

// Horizontal diverging bars, one row per face act, one bar per series.
// Positive values extend right of the centre line.
inline std::string render_difference_svg(const std::string& title, const std::string& left_label,
                                         const std::string& right_label, const std::vector<BarSeries>& series) {
  static constexpr std::array<const char*, 4> kPalette{"#1f77b4", "#d62728", "#2ca02c", "#ff7f0e"};
  const int width = 720, label_w = 200, margin = 20, row_h = 34, top = 70;
  const int plot_w = width - label_w - 2 * margin;
  const int center = label_w + margin + plot_w / 2;
  const int height = top + static_cast<int>(kNumFaceActs) * row_h + 50;
  const int bar_h = series.empty() ? 0 : std::max(4, (row_h - 10) / static_cast<int>(series.size()));

  double extent = 0.0;
  for (const auto& s : series)
    for (double v : s.values) extent = std::max(extent, std::abs(v));
  if (extent == 0.0) extent = 1.0;
  const double scale = (plot_w / 2.0 - 40.0) / extent;

  using detail::fixed;
  using detail::xml_escape;
  std::string svg;
  svg += "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + std::to_string(width) + "\" height=\"" +
         std::to_string(height) + "\" viewBox=\"0 0 " + std::to_string(width) + " " + std::to_string(height) +
         "\" font-family=\"sans-serif\" font-size=\"12\">\n";
  svg += "<rect width=\"100%\" height=\"100%\" fill=\"#ffffff\"/>\n";
  svg += "<text x=\"" + std::to_string(width / 2) + "\" y=\"22\" text-anchor=\"middle\" font-size=\"15\">" +
         xml_escape(title) + "</text>\n";
  svg += "<text x=\"" + std::to_string(center - 8) + "\" y=\"44\" text-anchor=\"end\">&#8592; " +
         xml_escape(left_label) + "</text>\n";
  svg += "<text x=\"" + std::to_string(center + 8) + "\" y=\"44\" text-anchor=\"start\">" + xml_escape(right_label) +
         " &#8594;</text>\n";
  for (std::size_t k = 0; k < kNumFaceActs; ++k) {
    const int y = top + static_cast<int>(k) * row_h;
    svg += "<g class=\"act\" data-act=\"" + std::string(code(face_act_at(k))) + "\">\n";
    svg += "  <text x=\"" + std::to_string(label_w) + "\" y=\"" + std::to_string(y + row_h / 2 + 4) +
           "\" text-anchor=\"end\">" + xml_escape(detail::act_heading(face_act_at(k))) + "</text>\n";
    for (std::size_t s = 0; s < series.size(); ++s) {
      const double v = series[s].values[k];
      const double w = std::abs(v) * scale;
      const double x = v >= 0 ? center : center - w;
      const int by = y + 5 + static_cast<int>(s) * bar_h;
      svg += "  <rect x=\"" + fixed(x, 2) + "\" y=\"" + std::to_string(by) + "\" width=\"" + fixed(w, 2) +
             "\" height=\"" + std::to_string(bar_h - 2) + "\" fill=\"" + kPalette[s % kPalette.size()] + "\"><title>" +
             xml_escape(series[s].name) + ": " + fixed(v, 4) + "</title></rect>\n";
      const double tx = v >= 0 ? x + w + 4 : x - 4;
      svg += "  <text x=\"" + fixed(tx, 2) + "\" y=\"" + std::to_string(by + bar_h - 3) + "\" text-anchor=\"" +
             (v >= 0 ? "start" : "end") + "\" font-size=\"10\">" + fixed(100.0 * v, 1) + "</text>\n";
    }
    svg += "</g>\n";
  }
  svg += "<line x1=\"" + std::to_string(center) + "\" y1=\"" + std::to_string(top - 4) + "\" x2=\"" +
         std::to_string(center) + "\" y2=\"" + std::to_string(top + static_cast<int>(kNumFaceActs) * row_h) +
         "\" stroke=\"#333333\"/>\n";
  const int ly = top + static_cast<int>(kNumFaceActs) * row_h + 24;
  for (std::size_t s = 0; s < series.size(); ++s) {
    const int lx = margin + static_cast<int>(s) * 170;
    svg += "<rect x=\"" + std::to_string(lx) + "\" y=\"" + std::to_string(ly - 10) + "\" width=\"12\" height=\"12\" fill=\"" +
           kPalette[s % kPalette.size()] + "\"/>\n";
    svg += "<text x=\"" + std::to_string(lx + 18) + "\" y=\"" + std::to_string(ly) + "\">" + xml_escape(series[s].name) +
           "</text>\n";
  }
  svg += "</svg>\n";
  return svg;
}

// File name and contents of each figure derivable from the bundle.
inline std::vector<std::pair<std::string, std::string>> render_figures(const AnalysisBundle& b) {
  std::vector<std::pair<std::string, std::string>> out;
  for (const auto& r : b.cohorts) {
    for (std::size_t i = 0; i < r.groups.size(); ++i) {
      for (std::size_t j = i + 1; j < r.groups.size(); ++j) {
        const auto& a = r.groups[i];
        const auto& c = r.groups[j];
        BarSeries s{c.name + " minus " + a.name, {}};
        for (std::size_t k = 0; k < kNumFaceActs; ++k) s.values[k] = c.face_distribution[k] - a.face_distribution[k];
        out.emplace_back("face_" + detail::slug(r.partition) + "_" + detail::slug(a.name) + "_vs_" + detail::slug(c.name) + ".svg",
                         render_difference_svg("Face act frequency by " + r.partition, a.name + " more often",
                                               c.name + " more often", {s}));
      }
    }
  }
  for (const auto& r : b.intersections) {
    if (r.cols.size() != 2) continue;
    std::vector<BarSeries> series;
    for (std::size_t i = 0; i < r.rows.size(); ++i) {
      if (!r.cells[i][0] || !r.cells[i][1]) continue;
      BarSeries s{r.rows[i], {}};
      for (std::size_t k = 0; k < kNumFaceActs; ++k)
        s.values[k] = r.cells[i][1]->face_distribution[k] - r.cells[i][0]->face_distribution[k];
      series.push_back(s);
    }
    if (series.empty()) continue;
    out.emplace_back("face_" + detail::slug(r.col_axis) + "_by_" + detail::slug(r.row_axis) + ".svg",
                     render_difference_svg("Face act frequency by " + r.col_axis + " within " + r.row_axis,
                                           r.cols[0] + " more often", r.cols[1] + " more often", series));
  }
  return out;
}

inline void write_text_file(const std::filesystem::path& file, const std::string& content) {
  std::ofstream out(file, std::ios::binary | std::ios::trunc);
  if (!out) throw DataError("cannot write " + file.string());
  out << content;
}

// Writes report.md, report.csv and figures/*.svg for the requested formats.
// Returns the paths written.
inline std::vector<std::filesystem::path> write_report(const AnalysisBundle& b, const std::filesystem::path& dir,
                                                       const std::vector<ReportFormat>& formats) {
  std::filesystem::create_directories(dir);
  std::vector<std::filesystem::path> written;
  for (ReportFormat f : formats) {
    switch (f) {
      case ReportFormat::Markdown:
        write_text_file(dir / "report.md", render_markdown(b));
        written.push_back(dir / "report.md");
        break;
      case ReportFormat::Csv:
        write_text_file(dir / "report.csv", render_csv(b));
        written.push_back(dir / "report.csv");
        break;
      case ReportFormat::Svg:
        std::filesystem::create_directories(dir / "figures");
        for (const auto& [name, svg] : render_figures(b)) {
          write_text_file(dir / "figures" / name, svg);
          written.push_back(dir / "figures" / name);
        }
        break;
    }
  }
  return written;
}

}  // namespace facework
