#include "stagetopics/report.hpp"

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "stagetopics/lda.hpp"
#include "stagetopics/rng.hpp"

namespace stagetopics {

namespace fs = std::filesystem;
using nlohmann::json;

// ---------------------------------------------------------------------------
// Distribution table
// ---------------------------------------------------------------------------

StageCategoryTable distributionTable(std::span<const ClassifiedRecord> records) {
  StageCategoryTable table;
  table.counts.setZero();
  table.none_by_stage.setZero();
  for (const auto& rec : records) {
    if (!rec.stage)
      throw UnstagedRecordError("record '" + rec.id + "' has no stage");
    const int s = static_cast<int>(*rec.stage);
    const int c = static_cast<int>(rec.category);
    if (c == static_cast<int>(Category::None)) ++table.none_by_stage(0, s);
    else ++table.counts(c, s);
  }
  return table;
}

namespace {

std::string capitalized(std::string name) {
  if (!name.empty()) name[0] = static_cast<char>(std::toupper(name[0]));
  return name;
}

// Table 3 arithmetic: every row total must equal the sum of its stage cells.
void checkTableArithmetic(const StageCategoryTable& table) {
  for (int c = 0; c < kRacistCategories; ++c) {
    std::int64_t sum = 0;
    for (int s = 0; s < kNumStages; ++s) sum += table.counts(c, s);
    if (sum != table.rowTotal(c))
      throw Error("distribution table arithmetic violated for category " +
                  std::to_string(c));
  }
}

}  // namespace

std::string distributionTableMarkdown(const StageCategoryTable& table) {
  checkTableArithmetic(table);
  std::ostringstream out;
  out << "| Category | Total | S1 | S2 | S3 |\n";
  out << "|---|---:|---:|---:|---:|\n";
  for (int c = 0; c < kRacistCategories; ++c) {
    out << "| " << capitalized(categoryName(static_cast<Category>(c))) << " | "
        << table.rowTotal(c);
    for (int s = 0; s < kNumStages; ++s) out << " | " << table.counts(c, s);
    out << " |\n";
  }
  out << "\nNon-racist/non-xenophobic (excluded from rows): " << table.noneTotal()
      << " (S1 " << table.none_by_stage(0, 0) << ", S2 " << table.none_by_stage(0, 1)
      << ", S3 " << table.none_by_stage(0, 2) << ")\n";
  return out.str();
}

std::string distributionTableCsv(const StageCategoryTable& table) {
  checkTableArithmetic(table);
  std::ostringstream out;
  out << "category,total,s1,s2,s3\n";
  for (int c = 0; c < kRacistCategories; ++c) {
    out << categoryName(static_cast<Category>(c)) << ',' << table.rowTotal(c);
    for (int s = 0; s < kNumStages; ++s) out << ',' << table.counts(c, s);
    out << '\n';
  }
  return out.str();
}

// ---------------------------------------------------------------------------
// Topic keyword tables
// ---------------------------------------------------------------------------

std::vector<std::vector<std::string>> topicKeywordRows(
    std::span<const ClusteredTopic> clusters, const Vocabulary& vocab, int n_keywords) {
  std::vector<std::vector<std::string>> rows;
  rows.reserve(clusters.size());
  for (std::size_t i = 0; i < clusters.size(); ++i) {
    if (clusters[i].word_probs.size() < n_keywords)
      throw TooFewWordsError("cluster " + std::to_string(i + 1) + " covers only " +
                             std::to_string(clusters[i].word_probs.size()) +
                             " words, need " + std::to_string(n_keywords));
    rows.push_back(topWords(clusters[i], n_keywords, vocab));
  }
  return rows;
}

namespace {

int tableKeywordCount(const TopicsTable& table) {
  for (const auto& stage : table.stages)
    if (stage && !stage->empty()) return static_cast<int>(stage->front().size());
  return 0;
}

void checkRows(const TopicsTable& table, int n_keywords) {
  for (const auto& stage : table.stages) {
    if (!stage) continue;
    for (const auto& row : *stage)
      if (static_cast<int>(row.size()) < n_keywords)
        throw TooFewWordsError("topic row has " + std::to_string(row.size()) +
                               " keywords, need " + std::to_string(n_keywords));
  }
}

const std::string* rowLabel(const TopicsTable& table, std::size_t flat_index) {
  if (flat_index < table.labels.size() && !table.labels[flat_index].empty())
    return &table.labels[flat_index];
  return nullptr;
}

}  // namespace

std::string topicsTableMarkdown(const TopicsTable& table) {
  const int n_kw = tableKeywordCount(table);
  checkRows(table, n_kw);
  std::ostringstream out;
  out << "## " << capitalized(table.category) << "\n\n";
  out << "| Stage | Topic |";
  for (int i = 1; i <= n_kw; ++i) out << " K" << i << " |";
  out << '\n' << "|---|---|";
  for (int i = 0; i < n_kw; ++i) out << "---|";
  out << '\n';
  std::size_t flat = 0;
  for (int s = 0; s < kNumStages; ++s) {
    const auto& stage = table.stages[s];
    if (!stage) {
      out << "| " << stageName(static_cast<Stage>(s)) << " | - | (insufficient data)";
      for (int i = 1; i < n_kw; ++i) out << " | ";
      out << " |\n";
      continue;
    }
    for (std::size_t t = 0; t < stage->size(); ++t, ++flat) {
      out << "| " << stageName(static_cast<Stage>(s)) << " | T" << (t + 1);
      if (const std::string* label = rowLabel(table, flat)) out << ". " << *label;
      out << " |";
      for (int i = 0; i < n_kw; ++i) out << ' ' << (*stage)[t][i] << " |";
      out << '\n';
    }
  }
  return out.str();
}

std::string topicsTableCsv(const TopicsTable& table) {
  const int n_kw = tableKeywordCount(table);
  checkRows(table, n_kw);
  std::ostringstream out;
  std::vector<std::string> header = {"category", "stage", "topic", "label"};
  for (int i = 1; i <= n_kw; ++i) header.push_back("keyword_" + std::to_string(i));
  out << csvJoin(header) << '\n';
  std::size_t flat = 0;
  for (int s = 0; s < kNumStages; ++s) {
    const auto& stage = table.stages[s];
    if (!stage) continue;
    for (std::size_t t = 0; t < stage->size(); ++t, ++flat) {
      const std::string* label = rowLabel(table, flat);
      std::vector<std::string> fields = {table.category, stageName(static_cast<Stage>(s)),
                                         "T" + std::to_string(t + 1),
                                         label ? *label : ""};
      for (int i = 0; i < n_kw; ++i) fields.push_back((*stage)[t][i]);
      out << csvJoin(fields) << '\n';
    }
  }
  return out.str();
}

// ---------------------------------------------------------------------------
// Config
// ---------------------------------------------------------------------------

std::uint64_t fnv1a64(std::string_view data) {
  std::uint64_t hash = 0xcbf29ce484222325ULL;
  for (unsigned char c : data) {
    hash ^= c;
    hash *= 0x100000001b3ULL;
  }
  return hash;
}

namespace {

[[noreturn]] void configFail(const std::string& what) { throw ConfigError(what); }

template <typename T>
T getOr(const json& obj, const char* key, T fallback) {
  if (!obj.contains(key) || obj[key].is_null()) return fallback;
  try {
    return obj[key].get<T>();
  } catch (const json::exception&) {
    configFail(std::string("config field '") + key + "' has the wrong type");
  }
}

}  // namespace

RunConfig parseRunConfig(const std::string& json_text) {
  json root = json::parse(json_text, nullptr, false);
  if (root.is_discarded() || !root.is_object())
    configFail("config is not a JSON object");
  RunConfig cfg;
  cfg.seed = getOr<std::uint64_t>(root, "seed", 0);

  if (!root.contains("corpus") || !root["corpus"].is_object())
    configFail("missing 'corpus' section");
  const json& corpus = root["corpus"];
  cfg.corpus_path = getOr<std::string>(corpus, "path", "");
  if (cfg.corpus_path.empty()) configFail("corpus.path is required");
  std::string format = getOr<std::string>(corpus, "format", "jsonl");
  auto fmt = corpusFormatFromName(format);
  if (!fmt) configFail("corpus.format must be 'jsonl' or 'csv'");
  cfg.corpus_format = *fmt;
  if (corpus.contains("hashtag_file") && !corpus["hashtag_file"].is_null())
    cfg.hashtag_file = corpus["hashtag_file"].get<std::string>();
  cfg.apply_hashtag_filter = getOr<bool>(corpus, "apply_hashtag_filter", true);

  if (root.contains("stages") && root["stages"].is_object() &&
      root["stages"].contains("windows")) {
    cfg.windows.clear();
    for (const json& w : root["stages"]["windows"]) {
      auto stage = stageFromName(getOr<std::string>(w, "stage", ""));
      if (!stage) configFail("stage window entry needs a stage name S1/S2/S3");
      try {
        cfg.windows.push_back({*stage, UtcDate::parse(w.at("start").get<std::string>()),
                               UtcDate::parse(w.at("end").get<std::string>())});
      } catch (const std::exception& e) {
        configFail(std::string("bad stage window: ") + e.what());
      }
    }
  }
  validateStageWindows(cfg.windows);

  if (root.contains("classifier")) {
    const json& cls = root["classifier"];
    std::string source = getOr<std::string>(cls, "source", "internal");
    if (source == "internal") cfg.label_source = LabelSource::Internal;
    else if (source == "external") cfg.label_source = LabelSource::External;
    else if (source == "gold") cfg.label_source = LabelSource::Gold;
    else configFail("classifier.source must be internal, external or gold");
    cfg.predictions_path = getOr<std::string>(cls, "predictions_path", "");
    if (cfg.label_source == LabelSource::External && cfg.predictions_path.empty())
      configFail("classifier.predictions_path is required for external labels");
    cfg.grid = getOr<std::vector<double>>(cls, "grid", cfg.grid);
    cfg.folds = getOr<int>(cls, "folds", cfg.folds);
    cfg.test_fraction = getOr<double>(cls, "test_fraction", cfg.test_fraction);
  }

  if (root.contains("textprep")) {
    const json& tp = root["textprep"];
    if (tp.contains("stopword_file") && !tp["stopword_file"].is_null())
      cfg.stopword_file = tp["stopword_file"].get<std::string>();
    if (tp.contains("lemma_file") && !tp["lemma_file"].is_null())
      cfg.lemma_file = tp["lemma_file"].get<std::string>();
    cfg.bigram_min_count = getOr<int>(tp, "bigram_min_count", cfg.bigram_min_count);
    cfg.bigram_threshold = getOr<double>(tp, "bigram_threshold", cfg.bigram_threshold);
    cfg.min_df = getOr<int>(tp, "min_df", cfg.min_df);
  }

  if (root.contains("lda")) {
    const json& lda = root["lda"];
    cfg.iterations = getOr<int>(lda, "iterations", cfg.iterations);
    cfg.burn_in = getOr<int>(lda, "burn_in", cfg.burn_in);
    cfg.optimize_interval = getOr<int>(lda, "optimize_interval", cfg.optimize_interval);
    cfg.Ks = getOr<std::vector<int>>(lda, "topic_counts", cfg.Ks);
    if (cfg.Ks.empty()) configFail("lda.topic_counts must be nonempty");
  }

  if (root.contains("coherence")) {
    const json& coh = root["coherence"];
    std::string measure = getOr<std::string>(coh, "measure", "c_v");
    auto m = coherenceMeasureFromName(measure);
    if (!m) configFail("coherence.measure must be c_v or u_mass");
    cfg.coherence.measure = *m;
    cfg.coherence.top_n = getOr<int>(coh, "top_n", cfg.coherence.top_n);
    cfg.coherence.window = getOr<int>(coh, "window", cfg.coherence.window);
    cfg.coherence.epsilon = getOr<double>(coh, "epsilon", cfg.coherence.epsilon);
  }

  if (root.contains("cluster"))
    cfg.target_groups = getOr<int>(root["cluster"], "target_groups", cfg.target_groups);

  if (root.contains("report")) {
    const json& rep = root["report"];
    cfg.min_cell_docs = getOr<int>(rep, "min_cell_docs", cfg.min_cell_docs);
    cfg.n_keywords = getOr<int>(rep, "n_keywords", cfg.n_keywords);
  }
  return cfg;
}

RunConfig loadRunConfig(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) configFail("cannot open config file: " + path);
  std::stringstream buffer;
  buffer << in.rdbuf();
  return parseRunConfig(buffer.str());
}

std::string runConfigCanonicalJson(const RunConfig& cfg) {
  json windows = json::array();
  for (const auto& w : cfg.windows)
    windows.push_back({{"stage", stageName(w.stage)},
                       {"start", w.start.toString()},
                       {"end", w.end.toString()}});
  json root;
  root["seed"] = cfg.seed;
  root["corpus"] = {{"path", cfg.corpus_path},
                    {"format", cfg.corpus_format == CorpusFormat::Jsonl ? "jsonl" : "csv"},
                    {"hashtag_file", cfg.hashtag_file ? json(*cfg.hashtag_file) : json()},
                    {"apply_hashtag_filter", cfg.apply_hashtag_filter}};
  root["stages"] = {{"windows", windows}};
  const char* source = cfg.label_source == LabelSource::Internal ? "internal"
                       : cfg.label_source == LabelSource::External ? "external"
                                                                   : "gold";
  root["classifier"] = {{"source", source},
                        {"predictions_path", cfg.predictions_path},
                        {"grid", cfg.grid},
                        {"folds", cfg.folds},
                        {"test_fraction", cfg.test_fraction}};
  root["textprep"] = {{"stopword_file", cfg.stopword_file ? json(*cfg.stopword_file) : json()},
                      {"lemma_file", cfg.lemma_file ? json(*cfg.lemma_file) : json()},
                      {"bigram_min_count", cfg.bigram_min_count},
                      {"bigram_threshold", cfg.bigram_threshold},
                      {"min_df", cfg.min_df}};
  root["lda"] = {{"iterations", cfg.iterations},
                 {"burn_in", cfg.burn_in},
                 {"optimize_interval", cfg.optimize_interval},
                 {"topic_counts", cfg.Ks}};
  root["coherence"] = {{"measure", coherenceMeasureName(cfg.coherence.measure)},
                       {"top_n", cfg.coherence.top_n},
                       {"window", cfg.coherence.window},
                       {"epsilon", cfg.coherence.epsilon}};
  root["cluster"] = {{"target_groups", cfg.target_groups}};
  root["report"] = {{"min_cell_docs", cfg.min_cell_docs}, {"n_keywords", cfg.n_keywords}};
  return root.dump(2) + "\n";
}

// ---------------------------------------------------------------------------
// Pipeline steps
// ---------------------------------------------------------------------------

namespace {

template <typename Fn>
auto atStep(const std::string& step, Fn&& fn) {
  try {
    return fn();
  } catch (const PipelineError&) {
    throw;
  } catch (const std::exception& e) {
    throw PipelineError(step, e.what());
  }
}

}  // namespace

std::vector<TweetRecord> ingestAndFilter(const RunConfig& config) {
  auto records = atStep("ingest", [&] {
    return ingestCorpus(config.corpus_path, config.corpus_format);
  });
  if (!config.apply_hashtag_filter) return records;
  return atStep("hashtag-filter", [&] {
    auto allowed = loadHashtagList(config.hashtag_file.value_or(defaultHashtagFile()));
    return filterByHashtags(records, allowed);
  });
}

LabeledCorpus labelCorpus(const RunConfig& config, std::vector<TweetRecord> records) {
  LabeledCorpus out;
  out.records = std::move(records);
  out.stages.reserve(out.records.size());
  for (const auto& rec : out.records)
    out.stages.push_back(assignStage(rec, config.windows));

  out.categories.resize(out.records.size(), Category::None);
  switch (config.label_source) {
    case LabelSource::Gold:
      atStep("label", [&] {
        for (std::size_t i = 0; i < out.records.size(); ++i) {
          if (!out.records[i].gold_category)
            throw Error("record '" + out.records[i].id +
                        "' has no gold label and source is 'gold'");
          out.categories[i] = *out.records[i].gold_category;
        }
        return 0;
      });
      break;
    case LabelSource::External:
      atStep("label", [&] {
        auto predictions = importExternalPredictions(config.predictions_path);
        for (std::size_t i = 0; i < out.records.size(); ++i) {
          if (out.records[i].gold_category) {
            out.categories[i] = *out.records[i].gold_category;
            continue;
          }
          auto it = predictions.find(out.records[i].id);
          if (it == predictions.end())
            throw Error("no external prediction for unlabeled record '" +
                        out.records[i].id + "'");
          out.categories[i] = it->second;
        }
        return 0;
      });
      break;
    case LabelSource::Internal: {
      std::vector<LabeledExample> annotated;
      for (const auto& rec : out.records)
        if (rec.gold_category)
          annotated.push_back({rec.id, prepForClassifier(rec.text), *rec.gold_category});
      auto model = atStep("train-classifier", [&] {
        if (annotated.empty())
          throw Error("internal labeling needs gold-labeled records to train on");
        auto [train_set, test_set] =
            splitTrainTest(annotated, config.test_fraction, deriveSeed(config.seed, 1));
        LinearModel m =
            trainLinear(train_set, config.grid, config.folds, deriveSeed(config.seed, 2));
        std::vector<Category> pred, gold;
        for (const auto& ex : test_set) {
          pred.push_back(predict(m, ex.text).first);
          gold.push_back(ex.label);
        }
        out.eval = evaluate(pred, gold);
        return m;
      });
      atStep("classify", [&] {
        for (std::size_t i = 0; i < out.records.size(); ++i)
          out.categories[i] = out.records[i].gold_category
                                  ? *out.records[i].gold_category
                                  : predict(model, out.records[i].text).first;
        return 0;
      });
      break;
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Full pipeline
// ---------------------------------------------------------------------------

namespace {

struct CellResult {
  CellSummary summary;
  std::optional<CoherenceReport> coherence;
  std::vector<ClusteredTopic> clusters;
  Vocabulary vocab;
};

CellResult processCell(const RunConfig& config, Category category, Stage stage,
                       std::span<const std::string> raw_texts,
                       const std::set<std::string>& stopwords, const LemmaTable& lemmas) {
  CellResult result;
  result.summary.category = category;
  result.summary.stage = stage;
  result.summary.documents = static_cast<std::int64_t>(raw_texts.size());
  result.summary.seed = deriveSeed(
      config.seed, 0x100 + static_cast<std::uint64_t>(static_cast<int>(category)) *
                               kNumStages +
                       static_cast<int>(stage));
  if (result.summary.documents < config.min_cell_docs) {
    result.summary.status = "insufficient_documents";
    return result;
  }

  std::vector<std::vector<std::string>> docs;
  docs.reserve(raw_texts.size());
  for (const auto& text : raw_texts) docs.push_back(prepForTopics(text, stopwords));
  BigramTable bigrams =
      detectBigrams(docs, config.bigram_min_count, config.bigram_threshold);
  for (auto& doc : docs) doc = lemmatize(applyBigrams(doc, bigrams), lemmas);

  EncodedCorpus encoded;
  try {
    encoded = buildVocabulary(docs, config.min_df);
  } catch (const EmptyVocabularyError&) {
    result.summary.status = "insufficient_vocabulary";
    return result;
  }
  if (encoded.vocab.size() < config.n_keywords) {
    result.summary.status = "insufficient_vocabulary";
    return result;
  }

  TopicModelParams tmpl = TopicModelParams::defaults(config.Ks.front(),
                                                     result.summary.seed);
  tmpl.iterations = config.iterations;
  tmpl.burn_in = config.burn_in;
  tmpl.optimize_interval = config.optimize_interval;

  result.coherence =
      sweepTopicCounts(encoded.docs, encoded.vocab.size(), config.Ks, tmpl,
                       config.coherence);
  result.summary.best_K = result.coherence->best_K;

  TopicModelState best =
      train(encoded.docs, encoded.vocab.size(),
            sweepParamsForK(tmpl, result.coherence->best_K));
  Eigen::MatrixXd topic_word = phi(best);
  const int groups = std::min(config.target_groups, result.coherence->best_K);
  result.clusters = mergeGrouping(topic_word, groupTopics(topic_word, groups));
  result.vocab = std::move(encoded.vocab);
  result.summary.status = "ok";
  return result;
}

void writeFile(const fs::path& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write artifact: " + path.string());
  out << content;
}

json cellTopicsJson(const CellResult& cell, int n_keywords) {
  json obj;
  obj["category"] = categoryName(cell.summary.category);
  obj["stage"] = stageName(cell.summary.stage);
  obj["documents"] = cell.summary.documents;
  obj["status"] = cell.summary.status;
  if (cell.summary.status != "ok") return obj;
  obj["seed"] = cell.summary.seed;
  obj["best_K"] = cell.summary.best_K;
  json clusters = json::array();
  for (const auto& topic : cell.clusters) {
    json words = json::array();
    for (const auto& [id, prob] : topWordIds(topic, n_keywords))
      words.push_back({{"word", cell.vocab.token(id)}, {"prob", prob}});
    clusters.push_back({{"members", topic.members}, {"top_words", words}});
  }
  obj["clusters"] = clusters;
  return obj;
}

}  // namespace

PipelineResult runPipeline(const RunConfig& config, const std::string& out_dir) {
  PipelineResult result;
  fs::create_directories(out_dir);
  const fs::path base(out_dir);

  auto addArtifact = [&](const std::string& name, const std::string& step,
                         const std::string& content) {
    writeFile(base / name, content);
    result.artifact_paths.push_back(name);
    return json{{"path", name}, {"step", step}};
  };

  json artifacts = json::array();
  const std::string canonical = runConfigCanonicalJson(config);
  artifacts.push_back(addArtifact("config_resolved.json", "config", canonical));

  std::vector<TweetRecord> all_records = ingestAndFilter(config);
  const std::size_t filtered_count = all_records.size();
  LabeledCorpus corpus = labelCorpus(config, std::move(all_records));

  // predictions.csv covers every record that survived filtering.
  {
    std::ostringstream csv;
    csv << "id,label\n";
    for (std::size_t i = 0; i < corpus.records.size(); ++i)
      csv << csvEscape(corpus.records[i].id) << ','
          << static_cast<int>(corpus.categories[i]) << '\n';
    artifacts.push_back(addArtifact("predictions.csv", "classify", csv.str()));
  }
  if (corpus.eval)
    artifacts.push_back(
        addArtifact("eval_report.json", "evaluate", evalReportToJson(*corpus.eval)));

  // Distribution table over staged records.
  std::size_t out_of_range = 0;
  std::vector<ClassifiedRecord> staged;
  for (std::size_t i = 0; i < corpus.records.size(); ++i) {
    if (!corpus.stages[i]) {
      ++out_of_range;
      continue;
    }
    staged.push_back({corpus.records[i].id, corpus.categories[i], corpus.stages[i]});
  }
  StageCategoryTable table = atStep("report", [&] { return distributionTable(staged); });
  artifacts.push_back(
      addArtifact("distribution.md", "report", distributionTableMarkdown(table)));
  artifacts.push_back(
      addArtifact("distribution.csv", "report", distributionTableCsv(table)));

  // Per-(category, stage) topic modeling.
  auto stopwords = atStep("textprep", [&] {
    return loadWordList(config.stopword_file.value_or(defaultStopwordFile()));
  });
  auto lemmas = atStep("textprep", [&] {
    return loadLemmaTable(config.lemma_file.value_or(defaultLemmaFile()));
  });

  json cells_json = json::array();
  for (int c = 0; c < kRacistCategories; ++c) {
    TopicsTable category_table;
    category_table.category = categoryName(static_cast<Category>(c));
    for (int s = 0; s < kNumStages; ++s) {
      std::vector<std::string> texts;
      for (std::size_t i = 0; i < corpus.records.size(); ++i)
        if (corpus.stages[i] && static_cast<int>(*corpus.stages[i]) == s &&
            static_cast<int>(corpus.categories[i]) == c)
          texts.push_back(corpus.records[i].text);

      const std::string cell_tag = std::string(categoryName(static_cast<Category>(c))) +
                                   "_" + stageName(static_cast<Stage>(s));
      CellResult cell = atStep("topics:" + cell_tag, [&] {
        return processCell(config, static_cast<Category>(c), static_cast<Stage>(s),
                           texts, stopwords, lemmas);
      });

      artifacts.push_back(addArtifact("topics_" + cell_tag + ".json", "topics",
                                      cellTopicsJson(cell, config.n_keywords).dump(2) + "\n"));
      if (cell.coherence)
        artifacts.push_back(addArtifact("coherence_" + cell_tag + ".json", "sweep",
                                        coherenceReportToJson(*cell.coherence)));
      if (cell.summary.status == "ok")
        category_table.stages[s] = atStep("report", [&] {
          return topicKeywordRows(cell.clusters, cell.vocab, config.n_keywords);
        });

      json cj;
      cj["category"] = categoryName(cell.summary.category);
      cj["stage"] = stageName(cell.summary.stage);
      cj["documents"] = cell.summary.documents;
      cj["status"] = cell.summary.status;
      cj["seed"] = cell.summary.seed;
      if (cell.summary.best_K > 0) cj["best_K"] = cell.summary.best_K;
      cells_json.push_back(cj);
      result.cells.push_back(cell.summary);
    }
    const std::string name = "topics_" + category_table.category;
    artifacts.push_back(
        addArtifact(name + ".md", "report", topicsTableMarkdown(category_table)));
    artifacts.push_back(
        addArtifact(name + ".csv", "report", topicsTableCsv(category_table)));
  }

  char hash_hex[32];
  std::snprintf(hash_hex, sizeof(hash_hex), "fnv1a64:%016llx",
                static_cast<unsigned long long>(fnv1a64(canonical)));
  json manifest;
  manifest["config_hash"] = hash_hex;
  manifest["seed"] = config.seed;
  manifest["records"] = {{"filtered", filtered_count},
                         {"staged", staged.size()},
                         {"out_of_range", out_of_range}};
  manifest["artifacts"] = artifacts;
  manifest["cells"] = cells_json;
  writeFile(base / "manifest.json", manifest.dump(2) + "\n");
  result.manifest_path = "manifest.json";
  result.artifact_paths.push_back("manifest.json");
  return result;
}

}  // namespace stagetopics
