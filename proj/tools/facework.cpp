#include <algorithm>
#include <csignal>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>
#include <openssl/evp.h>
#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include "facework/analysis.hpp"
#include "facework/annotation.hpp"
#include "facework/annotation_server.hpp"
#include "facework/corpus.hpp"
#include "facework/fixture.hpp"
#include "facework/report.hpp"
#include "facework/tagger/pipeline.hpp"
#include "facework/tagger/predictions.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace facework;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitUsage = 1;
constexpr int kExitData = 2;

std::string sha256_file(const fs::path& file) {
  std::ifstream in(file, std::ios::binary);
  if (!in) throw DataError("cannot read " + file.string());
  EVP_MD_CTX* ctx = EVP_MD_CTX_new();
  EVP_DigestInit_ex(ctx, EVP_sha256(), nullptr);
  char buf[1 << 15];
  while (in.read(buf, sizeof buf) || in.gcount() > 0) EVP_DigestUpdate(ctx, buf, static_cast<std::size_t>(in.gcount()));
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  EVP_DigestFinal_ex(ctx, digest, &len);
  EVP_MD_CTX_free(ctx);
  std::ostringstream hex;
  for (unsigned int i = 0; i < len; ++i) hex << std::hex << std::setw(2) << std::setfill('0') << static_cast<int>(digest[i]);
  return hex.str();
}

// Files under a path, sorted, for hashing.
std::vector<fs::path> files_under(const fs::path& p) {
  std::vector<fs::path> out;
  if (fs::is_regular_file(p)) {
    out.push_back(p);
  } else if (fs::is_directory(p)) {
    for (const auto& e : fs::recursive_directory_iterator(p))
      if (e.is_regular_file() && e.path().filename() != "manifest.json") out.push_back(e.path());
    std::sort(out.begin(), out.end());
  }
  return out;
}

// Paths are recorded relative to `base` when given.
json hash_entries(const std::vector<fs::path>& roots, const fs::path& base = {}) {
  json out = json::array();
  for (const auto& root : roots) {
    for (const auto& f : files_under(root)) {
      const fs::path shown = base.empty() ? f : f.lexically_relative(base);
      out.push_back({{"path", shown.generic_string()}, {"sha256", sha256_file(f)}});
    }
  }
  return out;
}

void write_json(const fs::path& file, const json& j) {
  write_text_file(file, j.dump(2) + "\n");
}

void write_manifest(const fs::path& out_dir, const std::string& command, const std::vector<fs::path>& inputs,
                    const json& config) {
  json m;
  m["command"] = command;
  m["version"] = FACEWORK_VERSION;
  m["config"] = config;
  m["inputs"] = hash_entries(inputs);
  m["outputs"] = hash_entries({out_dir}, out_dir);
  write_json(out_dir / "manifest.json", m);
}

std::pair<std::string, std::string> split_pair(const std::string& s, const std::string& what) {
  const auto comma = s.find(',');
  if (comma == std::string::npos || comma == 0 || comma + 1 == s.size() || s.find(',', comma + 1) != std::string::npos)
    throw ValidationError(what + " must look like A,B (got \"" + s + "\")");
  return {s.substr(0, comma), s.substr(comma + 1)};
}

std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ','))
    if (!item.empty()) out.push_back(item);
  return out;
}

struct CorpusArgs {
  std::string dir;
  std::string politeness_key = "politeness";
  bool strict = false;
  std::string gender_labels = "male,female";

  void add(CLI::App* cmd) {
    cmd->add_option("--corpus", dir, "Corpus directory (utterances.jsonl, speakers.json)")->required();
    cmd->add_option("--politeness-key", politeness_key, "Meta key holding the politeness score")->capture_default_str();
    cmd->add_flag("--strict", strict, "Fail on the first malformed line");
    cmd->add_option("--gender-labels", gender_labels, "The two gender labels compared, as A,B")->capture_default_str();
  }
  Corpus load() const { return load_corpus(dir, {politeness_key, strict}); }
  std::pair<std::string, std::string> genders() const { return split_pair(gender_labels, "--gender-labels"); }
  json config() const {
    return {{"corpus", dir}, {"politeness_key", politeness_key}, {"strict", strict}, {"gender_labels", gender_labels}};
  }
};

SegmenterConfig segmenter(const std::string& abbreviations) {
  SegmenterConfig cfg = SegmenterConfig::defaults();
  if (!abbreviations.empty()) cfg.abbreviations = load_abbreviations(abbreviations);
  return cfg;
}

AnnotationServer* g_server = nullptr;

void stop_server(int) {
  if (g_server) g_server->stop();
}

}  // namespace

int main(int argc, char** argv) {
  auto logger = spdlog::stderr_color_mt("facework");
  spdlog::set_default_logger(logger);
  spdlog::set_level(spdlog::level::warn);
  if (const char* level = std::getenv("FACEWORK_LOG")) spdlog::set_level(spdlog::level::from_str(level));

  CLI::App app{"Face-act and politeness analysis of conversational corpora", "facework"};
  app.set_version_flag("--version", std::string(FACEWORK_VERSION));
  app.require_subcommand(1);
  std::function<void()> run;

  // ingest
  CorpusArgs ingest_corpus;
  std::string ingest_out, ingest_abbrev;
  bool ingest_reseg = false;
  auto* ingest = app.add_subcommand("ingest", "Load, thread and segment a corpus");
  ingest_corpus.add(ingest);
  ingest->add_option("--out", ingest_out, "Output directory")->required();
  ingest->add_option("--abbreviations", ingest_abbrev, "Abbreviation list, one per line");
  ingest->add_flag("--resegment", ingest_reseg, "Replace segments already present");
  ingest->callback([&] {
    run = [&] {
      Corpus c = ingest_corpus.load();
      segment_corpus(c, segmenter(ingest_abbrev), ingest_reseg);
      save_corpus(c, ingest_out, ingest_corpus.politeness_key);
      json cfg = ingest_corpus.config();
      cfg["abbreviations"] = ingest_abbrev;
      cfg["resegment"] = ingest_reseg;
      cfg["skipped_lines"] = c.provenance.skipped_lines;
      write_manifest(ingest_out, "ingest", {ingest_corpus.dir, ingest_abbrev}, cfg);
      spdlog::info("ingested {} conversations", c.conversations.size());
    };
  });

  // train
  CorpusArgs train_corpus;
  std::string train_out, train_gold;
  tagger::CrossValConfig cv;
  std::size_t context = tagger::kDefaultContextSize;
  auto* train = app.add_subcommand("train", "Cross-validate the baseline tagger and fit a final model");
  train_corpus.add(train);
  train->add_option("--out", train_out, "Output directory")->required();
  train->add_option("--gold", train_gold, "Gold labels as JSONL {utterance_id, label}");
  train->add_option("--folds", cv.folds, "Cross-validation folds")->capture_default_str()->check(CLI::Range(2, 1000));
  train->add_option("--context", context, "Preceding utterances in each window")
      ->capture_default_str()
      ->check(CLI::Range(0, static_cast<int>(tagger::kMaxContextSize)));
  train->add_option("--seed", cv.seed, "Fold and initialization seed")->capture_default_str();
  train->add_option("--jobs", cv.jobs, "Folds trained concurrently")->capture_default_str()->check(CLI::PositiveNumber);
  train->add_option("--epochs", cv.train.epochs, "Gradient descent epochs")->capture_default_str();
  train->add_option("--l2", cv.train.l2, "L2 penalty")->capture_default_str();
  train->add_option("--learning-rate", cv.train.learning_rate, "Initial step size")->capture_default_str();
  train->add_flag("--class-weights", cv.train.class_weights, "Weight classes by inverse frequency");
  train->callback([&] {
    run = [&] {
      Corpus c = train_corpus.load();
      std::vector<fs::path> inputs{train_corpus.dir};
      if (!train_gold.empty()) {
        const auto gold = tagger::import_predictions(train_gold);
        const auto applied = tagger::apply_labels(c, gold.labels);
        if (!applied.unknown_ids.empty())
          spdlog::warn("{} gold labels name no utterance in the corpus", applied.unknown_ids.size());
        inputs.push_back(train_gold);
      }
      cv.train.context_size = context;
      cv.train.seed = cv.seed;
      const auto examples = tagger::labeled_examples(c, context);
      const auto result = tagger::run_crossval(examples, cv);
      std::vector<tagger::LabeledWindow> all;
      for (const auto& ex : examples) all.push_back(ex.labeled);
      const auto model = tagger::train_baseline(all, cv.train, cv.features);
      fs::create_directories(train_out);
      write_json(fs::path(train_out) / "eval.json", tagger::to_json(result));
      tagger::save_model(model, fs::path(train_out) / "model.json");
      json cfg = train_corpus.config();
      cfg.update({{"gold", train_gold},
                  {"folds", cv.folds},
                  {"context", context},
                  {"seed", cv.seed},
                  {"epochs", cv.train.epochs},
                  {"l2", cv.train.l2},
                  {"learning_rate", cv.train.learning_rate},
                  {"class_weights", cv.train.class_weights}});
      write_manifest(train_out, "train", inputs, cfg);
      std::cout << "macro-F1 " << result.mean.macro_f1 << " (majority " << result.majority_mean.macro_f1
                << "), micro-F1 " << result.mean.micro_f1 << '\n';
    };
  });

  // tag
  CorpusArgs tag_corpus_args;
  std::string tag_out, tag_model, tag_predictions;
  auto* tag = app.add_subcommand("tag", "Label every utterance from a model or a predictions file");
  tag_corpus_args.add(tag);
  tag->add_option("--out", tag_out, "Output directory")->required();
  auto* model_opt = tag->add_option("--model", tag_model, "Model written by train");
  auto* pred_opt = tag->add_option("--predictions", tag_predictions, "JSONL {utterance_id, label}");
  model_opt->excludes(pred_opt);
  tag->callback([&] {
    if (tag_model.empty() && tag_predictions.empty()) throw CLI::ValidationError("tag", "needs --model or --predictions");
    run = [&] {
      Corpus c = tag_corpus_args.load();
      json cfg = tag_corpus_args.config();
      std::vector<fs::path> inputs{tag_corpus_args.dir};
      if (!tag_model.empty()) {
        const auto n = tagger::tag_corpus(c, tagger::load_model(tag_model));
        cfg["model"] = tag_model;
        cfg["tagged"] = n;
        inputs.push_back(tag_model);
      } else {
        const auto preds = tagger::import_predictions(tag_predictions);
        const auto applied = tagger::apply_labels(c, preds.labels);
        if (!applied.unknown_ids.empty())
          spdlog::warn("{} predictions name no utterance in the corpus", applied.unknown_ids.size());
        cfg["predictions"] = tag_predictions;
        cfg["tagged"] = applied.applied;
        cfg["unknown_ids"] = applied.unknown_ids.size();
        inputs.push_back(tag_predictions);
      }
      save_corpus(c, tag_out, tag_corpus_args.politeness_key);
      write_manifest(tag_out, "tag", inputs, cfg);
    };
  });

  // analyze
  CorpusArgs analyze_corpus;
  std::string analyze_out, pooling = "utterance";
  std::vector<std::string> by_axes, intersects;
  bool correlations = false;
  auto* analyze = app.add_subcommand("analyze", "Compare cohorts on politeness and face acts");
  analyze_corpus.add(analyze);
  analyze->add_option("--out", analyze_out, "Output directory")->required();
  analyze->add_option("--by", by_axes, "Cohort axis: admin, experience or gender (repeatable)")
      ->check(CLI::IsMember({"admin", "experience", "gender"}));
  analyze->add_option("--intersect", intersects, "Two axes crossed, as A,B (repeatable)");
  analyze->add_flag("--correlations", correlations, "Correlate face-act frequency with politeness bins");
  analyze->add_option("--pooling", pooling, "Test units: utterance or speaker")
      ->capture_default_str()
      ->check(CLI::IsMember({"utterance", "speaker"}));
  analyze->callback([&] {
    run = [&] {
      if (by_axes.empty() && intersects.empty() && !correlations) by_axes = {"admin"};
      const Corpus c = analyze_corpus.load();
      const CohortTable cohorts = assign_cohorts(c, analyze_corpus.genders());
      AnalysisOptions opts;
      opts.pooling = parse_pooling(pooling);
      opts.bins = corpus_politeness_bins(c);
      AnalysisBundle bundle;
      for (const auto& name : by_axes) {
        const Axis axis = parse_axis(name);
        bundle.cohorts.push_back(cohort_summary(c, cohorts, axis, opts));
        for (FaceAct act : kAllFaceActs) bundle.face_politeness.push_back(face_by_politeness(c, cohorts, act, axis, opts));
      }
      for (const auto& spec : intersects) {
        const auto [row, col] = split_pair(spec, "--intersect");
        bundle.intersections.push_back(intersect_summary(c, cohorts, parse_axis(row), parse_axis(col), opts));
      }
      if (correlations) bundle.correlations = correlation_table(c, opts);
      fs::create_directories(analyze_out);
      write_json(fs::path(analyze_out) / "analysis.json", to_json(bundle));
      json cfg = analyze_corpus.config();
      cfg.update({{"by", by_axes}, {"intersect", intersects}, {"correlations", correlations}, {"pooling", pooling}});
      write_manifest(analyze_out, "analyze", {analyze_corpus.dir}, cfg);
    };
  });

  // report
  std::string report_analysis, report_out;
  std::vector<std::string> formats;
  auto* report = app.add_subcommand("report", "Render analysis.json as tables and figures");
  report->add_option("--analysis", report_analysis, "analysis.json written by analyze")->required();
  report->add_option("--out", report_out, "Output directory")->required();
  report->add_option("--format", formats, "md, csv or svg (repeatable; default all)")->delimiter(',');
  report->callback([&] {
    run = [&] {
      std::vector<ReportFormat> fmts;
      for (const auto& f : formats) fmts.push_back(parse_report_format(f));
      if (fmts.empty()) fmts = {ReportFormat::Markdown, ReportFormat::Csv, ReportFormat::Svg};
      std::ifstream in(report_analysis);
      if (!in) throw DataError("cannot open " + report_analysis);
      json j;
      try {
        j = json::parse(in);
      } catch (const json::exception& e) {
        throw DataError(report_analysis + ": " + e.what());
      }
      write_report(bundle_from_json(j), report_out, fmts);
      write_manifest(report_out, "report", {report_analysis}, {{"analysis", report_analysis}, {"format", formats}});
    };
  });

  // annotate
  CorpusArgs annotate_corpus;
  std::string labels_path, serve_addr, static_dir, export_path, agreement_pair, annotators;
  AnnotationConfig acfg;
  bool export_all = false;
  auto* annotate = app.add_subcommand("annotate", "Serve the labeling API, export gold labels or report agreement");
  annotate_corpus.add(annotate);
  annotate->add_option("--labels", labels_path, "Label journal (JSONL, append-only)")->required();
  annotate->add_option("--serve", serve_addr, "Listen address, HOST:PORT");
  annotate->add_option("--sample", acfg.sample_size, "Conversations sampled for labeling")->capture_default_str();
  annotate->add_option("--seed", acfg.seed, "Sampling seed")->capture_default_str();
  annotate->add_option("--annotators", annotators, "Known annotator ids, comma separated");
  annotate->add_option("--overlap", acfg.overlap_fraction, "Share of tasks given to every annotator")
      ->capture_default_str()
      ->check(CLI::Range(0.0, 1.0));
  annotate->add_option("--static", static_dir, "Directory served at / for the labeling UI");
  annotate->add_option("--export", export_path, "Write gold labels as JSONL");
  annotate->add_flag("--include-unadjudicated", export_all, "Keep disagreements in the export");
  annotate->add_option("--agreement", agreement_pair, "Print Cohen's kappa for two annotators, as A,B");
  annotate->callback([&] {
    if (serve_addr.empty() && export_path.empty() && agreement_pair.empty())
      throw CLI::ValidationError("annotate", "needs --serve, --export or --agreement");
    run = [&] {
      const Corpus c = annotate_corpus.load();
      LabelStore store(labels_path);
      acfg.annotators = split_list(annotators);
      if (!agreement_pair.empty()) {
        const auto [a, b] = split_pair(agreement_pair, "--agreement");
        const auto r = agreement(store, a, b);
        std::cout << "kappa " << r.kappa << " over " << r.n_overlap << " utterances\n";
      }
      if (!export_path.empty()) {
        ExportOptions eo;
        eo.priority = acfg.annotators;
        eo.include_unadjudicated = export_all;
        const auto gold = export_gold(store, eo);
        write_gold(gold, export_path);
        std::cout << "exported " << gold.size() << " labels\n";
      }
      if (!serve_addr.empty()) {
        const auto colon = serve_addr.rfind(':');
        if (colon == std::string::npos) throw ValidationError("--serve must look like HOST:PORT");
        AnnotationService service(c, store, acfg);
        AnnotationServer server(service, static_dir);
        const int port = server.bind(serve_addr.substr(0, colon), std::stoi(serve_addr.substr(colon + 1)));
        g_server = &server;
        std::signal(SIGINT, stop_server);
        std::signal(SIGTERM, stop_server);
        std::cout << "serving on " << serve_addr.substr(0, colon) << ':' << port << std::endl;
        server.serve();
        g_server = nullptr;
      }
    };
  });

  // fixture
  FixtureConfig fcfg;
  std::string fixture_out;
  std::size_t total_utterances = 0;
  bool fixture_unlabeled = false;
  auto* fixture = app.add_subcommand("fixture", "Write a synthetic corpus with planted cohort effects");
  fixture->add_option("--out", fixture_out, "Output directory")->required();
  fixture->add_option("--seed", fcfg.seed, "Generator seed")->capture_default_str();
  fixture->add_option("--conversations", fcfg.n_conversations, "Conversation count")->capture_default_str();
  fixture->add_option("--speakers", fcfg.n_speakers, "Speaker count")->capture_default_str();
  fixture->add_option("--utterances", total_utterances, "Exact utterance total (0 leaves it random)");
  fixture->add_option("--politeness-shift", fcfg.non_admin_politeness_shift, "Non-admin politeness shift")
      ->capture_default_str();
  fixture->add_option("--indebtedness-shift", fcfg.non_admin_indebtedness_shift, "Non-admin Indebtedness shift")
      ->capture_default_str();
  fixture->add_flag("--unlabeled", fixture_unlabeled, "Omit face-act labels");
  fixture->callback([&] {
    run = [&] {
      if (total_utterances > 0) fcfg.total_utterances = total_utterances;
      Corpus c = generate_fixture(fcfg);
      if (fixture_unlabeled)
        c.for_each_turn([](Turn& t) {
          for (auto& u : t.utterances) u.face_act.reset();
        });
      save_corpus(c, fixture_out);
      write_manifest(fixture_out, "fixture", {},
                     {{"seed", fcfg.seed},
                      {"conversations", fcfg.n_conversations},
                      {"speakers", fcfg.n_speakers},
                      {"utterances", total_utterances},
                      {"politeness_shift", fcfg.non_admin_politeness_shift},
                      {"indebtedness_shift", fcfg.non_admin_indebtedness_shift},
                      {"unlabeled", fixture_unlabeled}});
    };
  });

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitUsage;
  }
  try {
    run();
    return kExitOk;
  } catch (const ValidationError& e) {
    std::cerr << "facework: " << e.what() << '\n';
    return kExitUsage;
  } catch (const std::exception& e) {
    std::cerr << "facework: " << e.what() << '\n';
    return kExitData;
  }
}
