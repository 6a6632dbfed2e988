#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "stagetopics/report.hpp"

namespace fs = std::filesystem;
using namespace stagetopics;

namespace {

struct GlobalOptions {
  std::string config_path;
  std::string out_dir = "out";
  std::optional<std::uint64_t> seed;
};

RunConfig loadConfig(const GlobalOptions& opts) {
  if (opts.config_path.empty())
    throw ConfigError("--config is required");
  RunConfig cfg = loadRunConfig(opts.config_path);
  if (opts.seed) cfg.seed = *opts.seed;
  return cfg;
}

void writeArtifact(const GlobalOptions& opts, const std::string& name,
                   const std::string& content) {
  fs::create_directories(opts.out_dir);
  fs::path path = fs::path(opts.out_dir) / name;
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write " + path.string());
  out << content;
  std::cout << "wrote " << path.string() << "\n";
}

int cmdIngest(const GlobalOptions& opts) {
  RunConfig cfg = loadConfig(opts);
  auto records = ingestAndFilter(cfg);
  std::ostringstream corpus_out;
  serializeCorpus(records, corpus_out, CorpusFormat::Jsonl);
  writeArtifact(opts, "ingested.jsonl", corpus_out.str());

  nlohmann::json summary;
  summary["records"] = records.size();
  std::array<std::int64_t, kNumStages> per_stage{};
  std::int64_t out_of_range = 0;
  for (const auto& rec : records) {
    auto stage = assignStage(rec, cfg.windows);
    if (stage) ++per_stage[static_cast<int>(*stage)];
    else ++out_of_range;
  }
  summary["stages"] = {{"S1", per_stage[0]}, {"S2", per_stage[1]}, {"S3", per_stage[2]},
                       {"out_of_range", out_of_range}};
  writeArtifact(opts, "ingest_summary.json", summary.dump(2) + "\n");
  return 0;
}

int cmdClassify(const GlobalOptions& opts) {
  RunConfig cfg = loadConfig(opts);
  LabeledCorpus corpus = labelCorpus(cfg, ingestAndFilter(cfg));
  std::ostringstream csv;
  csv << "id,label\n";
  for (std::size_t i = 0; i < corpus.records.size(); ++i)
    csv << csvEscape(corpus.records[i].id) << ','
        << static_cast<int>(corpus.categories[i]) << '\n';
  writeArtifact(opts, "predictions.csv", csv.str());
  if (corpus.eval) {
    writeArtifact(opts, "eval_report.json", evalReportToJson(*corpus.eval));
    std::cout << "test accuracy " << corpus.eval->accuracy << ", weighted F1 "
              << corpus.eval->weighted_f1 << "\n";
  }
  return 0;
}

int cmdEvaluate(const GlobalOptions& opts, const std::string& pred_path) {
  RunConfig cfg = loadConfig(opts);
  auto records = ingestAndFilter(cfg);
  auto predictions = importExternalPredictions(
      pred_path.empty() ? cfg.predictions_path : pred_path);
  std::vector<Category> pred, gold;
  for (const auto& rec : records) {
    if (!rec.gold_category) continue;
    auto it = predictions.find(rec.id);
    if (it == predictions.end())
      throw Error("no prediction for gold-labeled record '" + rec.id + "'");
    pred.push_back(it->second);
    gold.push_back(*rec.gold_category);
  }
  EvalReport report = evaluate(pred, gold);
  writeArtifact(opts, "eval_report.json", evalReportToJson(report));
  std::cout << "accuracy " << report.accuracy << ", weighted F1 " << report.weighted_f1
            << " on " << gold.size() << " gold-labeled records\n";
  return 0;
}

// Whole-corpus topic preprocessing shared by `sweep` and `topics`.
EncodedCorpus prepWholeCorpus(const RunConfig& cfg, const std::vector<TweetRecord>& records) {
  auto stopwords = loadWordList(cfg.stopword_file.value_or(defaultStopwordFile()));
  auto lemmas = loadLemmaTable(cfg.lemma_file.value_or(defaultLemmaFile()));
  std::vector<std::vector<std::string>> docs;
  std::vector<std::string> ids;
  docs.reserve(records.size());
  for (const auto& rec : records) {
    docs.push_back(prepForTopics(rec.text, stopwords));
    ids.push_back(rec.id);
  }
  BigramTable bigrams = detectBigrams(docs, cfg.bigram_min_count, cfg.bigram_threshold);
  for (auto& doc : docs) doc = lemmatize(applyBigrams(doc, bigrams), lemmas);
  return buildVocabulary(docs, ids, cfg.min_df);
}

TopicModelParams templateFromConfig(const RunConfig& cfg, int K) {
  TopicModelParams tmpl = TopicModelParams::defaults(K, cfg.seed);
  tmpl.iterations = cfg.iterations;
  tmpl.burn_in = cfg.burn_in;
  tmpl.optimize_interval = cfg.optimize_interval;
  return tmpl;
}

int cmdSweep(const GlobalOptions& opts) {
  RunConfig cfg = loadConfig(opts);
  EncodedCorpus encoded = prepWholeCorpus(cfg, ingestAndFilter(cfg));
  TopicModelParams tmpl = templateFromConfig(cfg, cfg.Ks.front());
  CoherenceReport report =
      sweepTopicCounts(encoded.docs, encoded.vocab.size(), cfg.Ks, tmpl, cfg.coherence);
  writeArtifact(opts, "coherence_report.json", coherenceReportToJson(report));
  for (const auto& e : report.entries)
    std::cout << "K=" << e.K << "  coherence=" << e.coherence << "\n";
  std::cout << "best K: " << report.best_K << "\n";
  return 0;
}

int cmdTopics(const GlobalOptions& opts, int k_override) {
  RunConfig cfg = loadConfig(opts);
  EncodedCorpus encoded = prepWholeCorpus(cfg, ingestAndFilter(cfg));
  TopicModelParams tmpl = templateFromConfig(cfg, cfg.Ks.front());

  int K = k_override;
  if (K <= 0) {
    CoherenceReport report =
        sweepTopicCounts(encoded.docs, encoded.vocab.size(), cfg.Ks, tmpl, cfg.coherence);
    writeArtifact(opts, "coherence_report.json", coherenceReportToJson(report));
    K = report.best_K;
  }
  TopicModelState state =
      train(encoded.docs, encoded.vocab.size(), sweepParamsForK(tmpl, K));
  Eigen::MatrixXd topic_word = phi(state);
  int groups = std::min(cfg.target_groups, K);
  auto clusters = mergeGrouping(topic_word, groupTopics(topic_word, groups));

  nlohmann::json obj;
  obj["K"] = K;
  obj["seed"] = state.params.seed;
  nlohmann::json cluster_list = nlohmann::json::array();
  std::ostringstream md;
  md << "| Topic | Keywords |\n|---|---|\n";
  for (std::size_t g = 0; g < clusters.size(); ++g) {
    nlohmann::json words = nlohmann::json::array();
    md << "| T" << (g + 1) << " |";
    for (const auto& [id, prob] : topWordIds(clusters[g], cfg.n_keywords)) {
      words.push_back({{"word", encoded.vocab.token(id)}, {"prob", prob}});
      md << ' ' << encoded.vocab.token(id);
    }
    md << " |\n";
    cluster_list.push_back({{"members", clusters[g].members}, {"top_words", words}});
  }
  obj["clusters"] = cluster_list;
  writeArtifact(opts, "topics.json", obj.dump(2) + "\n");
  writeArtifact(opts, "topics.md", md.str());
  return 0;
}

int cmdReport(const GlobalOptions& opts) {
  RunConfig cfg = loadConfig(opts);
  LabeledCorpus corpus = labelCorpus(cfg, ingestAndFilter(cfg));
  std::vector<ClassifiedRecord> staged;
  for (std::size_t i = 0; i < corpus.records.size(); ++i)
    if (corpus.stages[i])
      staged.push_back({corpus.records[i].id, corpus.categories[i], corpus.stages[i]});
  StageCategoryTable table = distributionTable(staged);
  writeArtifact(opts, "distribution.md", distributionTableMarkdown(table));
  writeArtifact(opts, "distribution.csv", distributionTableCsv(table));
  return 0;
}

int cmdRun(const GlobalOptions& opts) {
  RunConfig cfg = loadConfig(opts);
  PipelineResult result = runPipeline(cfg, opts.out_dir);
  for (const auto& cell : result.cells)
    std::cout << categoryName(cell.category) << " x " << stageName(cell.stage) << ": "
              << cell.documents << " docs, " << cell.status
              << (cell.best_K > 0 ? ", K=" + std::to_string(cell.best_K) : "") << "\n";
  std::cout << result.artifact_paths.size() << " artifacts under " << opts.out_dir
            << " (manifest: " << result.manifest_path << ")\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Stage-wise topic analytics for categorized tweet corpora"};
  app.require_subcommand(1);

  GlobalOptions opts;
  app.add_option("--config", opts.config_path, "Path to the JSON run configuration");
  app.add_option("--out", opts.out_dir, "Output directory (default: out)");
  std::uint64_t seed_value = 0;
  auto* seed_opt = app.add_option("--seed", seed_value, "Override the config seed");

  auto* ingest = app.add_subcommand("ingest", "Ingest, hashtag-filter and summarize a corpus");
  auto* classify = app.add_subcommand("classify", "Assign categories to every record");
  auto* evaluate_cmd = app.add_subcommand("evaluate", "Score predictions against gold labels");
  std::string pred_path;
  evaluate_cmd->add_option("--pred", pred_path, "Predictions CSV (default: config predictions_path)");
  auto* sweep = app.add_subcommand("sweep", "Coherence sweep over topic counts");
  auto* topics = app.add_subcommand("topics", "Train, cluster and emit topics for the whole corpus");
  int k_override = 0;
  topics->add_option("--k", k_override, "Topic count (default: pick by coherence sweep)");
  auto* report = app.add_subcommand("report", "Emit the category x stage distribution table");
  auto* run = app.add_subcommand("run", "Full pipeline: ingest through tables and manifest");

  CLI11_PARSE(app, argc, argv);
  if (!seed_opt->empty()) opts.seed = seed_value;

  try {
    if (ingest->parsed()) return cmdIngest(opts);
    if (classify->parsed()) return cmdClassify(opts);
    if (evaluate_cmd->parsed()) return cmdEvaluate(opts, pred_path);
    if (sweep->parsed()) return cmdSweep(opts);
    if (topics->parsed()) return cmdTopics(opts, k_override);
    if (report->parsed()) return cmdReport(opts);
    if (run->parsed()) return cmdRun(opts);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
