#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "stagetopics/report.hpp"
#include "stagetopics/rng.hpp"

using namespace stagetopics;
namespace fs = std::filesystem;

namespace {

struct TempDir {
  fs::path path;
  explicit TempDir(const std::string& tag) {
    path = fs::temp_directory_path() / ("stagetopics_" + tag);
    fs::remove_all(path);
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
  std::string str() const { return path.string(); }
};

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  REQUIRE(in);
  std::stringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

ClusteredTopic uniformTopic(int V, int member) {
  ClusteredTopic t;
  t.word_probs = Eigen::VectorXd::Constant(V, 1.0 / V);
  t.members = {member};
  return t;
}

// A tiny deterministic corpus: per category and stage, `per_cell` tweets built
// from category-specific vocabulary, plus a handful of non-racist tweets.
std::string writeSyntheticCorpus(const fs::path& file, int per_cell,
                                 bool gold_everywhere) {
  const std::array<std::vector<std::string>, 4> pools = {{
      {"virus", "spread", "wet", "market", "bat", "animal"},
      {"regime", "evil", "fight", "freedom", "speech", "truth"},
      {"lie", "cover", "blame", "fault", "hide", "report"},
      {"boycott", "trade", "border", "goods", "import", "export"},
  }};
  const std::array<std::string, 3> dates = {"2020-01-15", "2020-02-20", "2020-04-01"};
  std::ofstream out(file, std::ios::binary);
  Pcg32 rng(4242);
  int next = 0;
  std::ostringstream text;
  for (int c = 0; c < 4; ++c) {
    for (int s = 0; s < 3; ++s) {
      for (int i = 0; i < per_cell; ++i) {
        const auto& pool = pools[c];
        text.str("");
        for (int w = 0; w < 12; ++w)
          text << pool[rng.bounded(static_cast<std::uint32_t>(pool.size()))] << ' ';
        text << "#chinavirus";
        out << R"({"id":"t)" << next++ << R"(","created_at":")" << dates[s]
            << R"(","text":")" << text.str() << R"(","label":)" << c << "}\n";
      }
    }
  }
  for (int i = 0; i < 12; ++i) {
    out << R"({"id":"n)" << i << R"(","created_at":"2020-03-01","text":"weather is calm today #chinavirus")";
    if (gold_everywhere || i % 2 == 0) out << R"(,"label":4)";
    out << "}\n";
  }
  return file.string();
}

}  // namespace

TEST_CASE("distribution table counts cells and footers the none class") {
  std::vector<ClassifiedRecord> records;
  CHECK(distributionTable(records).counts.sum() == 0);

  records.push_back({"a", Category::Blame, Stage::S3});
  StageCategoryTable table = distributionTable(records);
  CHECK(table.counts(2, 2) == 1);
  CHECK(table.rowTotal(2) == 1);
  CHECK(table.counts(2, 0) == 0);
  CHECK(table.counts(2, 1) == 0);

  records.push_back({"b", Category::None, Stage::S1});
  table = distributionTable(records);
  CHECK(table.noneTotal() == 1);
  CHECK(table.counts.sum() == 1);

  records.push_back({"c", Category::Exclusion, std::nullopt});
  CHECK_THROWS_AS(distributionTable(records), UnstagedRecordError);
}

TEST_CASE("row totals always equal the stage sums") {
  Pcg32 rng(99);
  std::vector<ClassifiedRecord> records;
  for (int i = 0; i < 10000; ++i)
    records.push_back({std::to_string(i), categoryFromCode(rng.bounded(5)),
                       static_cast<Stage>(rng.bounded(3))});
  StageCategoryTable table = distributionTable(records);
  std::int64_t grand = 0;
  for (int c = 0; c < kRacistCategories; ++c) {
    std::int64_t by_stage = 0;
    for (int s = 0; s < kNumStages; ++s) by_stage += table.counts(c, s);
    CHECK(by_stage == table.rowTotal(c));
    grand += by_stage;
  }
  CHECK(grand + table.noneTotal() == 10000);
  CHECK_NOTHROW(distributionTableMarkdown(table));
}

TEST_CASE("the published distribution row is internally consistent") {
  // Stigmatization: 116584 = 3723 + 5687 + 107174
  StageCategoryTable table;
  table.counts.setZero();
  table.none_by_stage.setZero();
  table.counts(0, 0) = 3723;
  table.counts(0, 1) = 5687;
  table.counts(0, 2) = 107174;
  CHECK(table.rowTotal(0) == 116584);
  const std::string md = distributionTableMarkdown(table);
  CHECK(md.find("| Stigmatization | 116584 | 3723 | 5687 | 107174 |") != std::string::npos);
}

TEST_CASE("distribution csv renders one row per racist category") {
  StageCategoryTable table;
  table.counts.setZero();
  table.none_by_stage.setZero();
  table.counts(1, 1) = 7;
  const std::string csv = distributionTableCsv(table);
  std::istringstream in(csv);
  std::string line;
  std::getline(in, line);
  CHECK(line == "category,total,s1,s2,s3");
  std::getline(in, line);
  CHECK(line == "stigmatization,0,0,0,0");
  std::getline(in, line);
  CHECK(line == "offensiveness,7,0,7,0");
}

TEST_CASE("topic tables render 15 rows for 3 stages of 5 clusters") {
  TopicsTable table;
  table.category = "blame";
  std::vector<std::vector<std::string>> rows;
  Vocabulary vocab;
  for (int w = 0; w < 12; ++w) vocab.addToken("kw" + std::to_string(w));
  std::vector<ClusteredTopic> clusters;
  for (int t = 0; t < 5; ++t) clusters.push_back(uniformTopic(12, t));
  auto keyword_rows = topicKeywordRows(clusters, vocab, 10);
  REQUIRE(keyword_rows.size() == 5);
  for (int s = 0; s < kNumStages; ++s) table.stages[s] = keyword_rows;

  const std::string csv = topicsTableCsv(table);
  std::istringstream in(csv);
  std::string line;
  int rows_seen = -1;  // header
  while (std::getline(in, line))
    if (!line.empty()) ++rows_seen;
  CHECK(rows_seen == 15);

  const std::string md = topicsTableMarkdown(table);
  CHECK(md.find("| S2 | T5 |") != std::string::npos);
}

TEST_CASE("clusters with fewer than ten words are rejected") {
  Vocabulary vocab;
  for (int w = 0; w < 9; ++w) vocab.addToken("w" + std::to_string(w));
  std::vector<ClusteredTopic> clusters = {uniformTopic(9, 0)};
  CHECK_THROWS_AS(topicKeywordRows(clusters, vocab, 10), TooFewWordsError);
}

TEST_CASE("topics csv round-trips through the csv reader without loss") {
  TopicsTable table;
  table.category = "exclusion";
  std::vector<std::vector<std::string>> rows;
  for (int t = 0; t < 5; ++t) {
    std::vector<std::string> row;
    for (int k = 0; k < 10; ++k)
      row.push_back("w" + std::to_string(t) + "_" + std::to_string(k));
    rows.push_back(std::move(row));
  }
  table.stages[0] = rows;
  table.stages[2] = rows;

  const std::string csv = topicsTableCsv(table);
  std::istringstream in(csv);
  std::vector<std::string> fields;
  std::size_t line = 0;
  REQUIRE(readCsvRecord(in, fields, line));  // header
  CHECK(fields.size() == 14);
  int data_rows = 0;
  while (readCsvRecord(in, fields, line)) {
    if (fields.size() == 1 && fields[0].empty()) continue;
    REQUIRE(fields.size() == 14);
    const int t = data_rows % 5;
    CHECK(fields[0] == "exclusion");
    CHECK(fields[2] == "T" + std::to_string(t + 1));
    for (int k = 0; k < 10; ++k) CHECK(fields[4 + k] == rows[t][k]);
    ++data_rows;
  }
  CHECK(data_rows == 10);  // S2 skipped as insufficient
}

TEST_CASE("insufficient stages render as markers in markdown") {
  TopicsTable table;
  table.category = "offensiveness";
  std::vector<std::vector<std::string>> rows = {
      {"a", "b", "c", "d", "e", "f", "g", "h", "i", "j"}};
  table.stages[1] = rows;
  const std::string md = topicsTableMarkdown(table);
  CHECK(md.find("(insufficient data)") != std::string::npos);
  CHECK(md.find("| S2 | T1 |") != std::string::npos);
}

TEST_CASE("config parsing validates and fills defaults") {
  CHECK_THROWS_AS(parseRunConfig("not json"), ConfigError);
  CHECK_THROWS_AS(parseRunConfig("{}"), ConfigError);  // missing corpus
  CHECK_THROWS_AS(parseRunConfig(R"({"corpus":{}})"), ConfigError);  // missing path

  RunConfig cfg = parseRunConfig(R"({
    "seed": 7,
    "corpus": {"path": "corpus.jsonl", "apply_hashtag_filter": false},
    "classifier": {"source": "gold"},
    "lda": {"iterations": 50, "topic_counts": [2, 3]},
    "coherence": {"measure": "u_mass"},
    "cluster": {"target_groups": 2},
    "report": {"min_cell_docs": 5}
  })");
  CHECK(cfg.seed == 7);
  CHECK(cfg.corpus_path == "corpus.jsonl");
  CHECK(!cfg.apply_hashtag_filter);
  CHECK(cfg.label_source == LabelSource::Gold);
  CHECK(cfg.iterations == 50);
  CHECK(cfg.Ks == std::vector<int>{2, 3});
  CHECK(cfg.coherence.measure == CoherenceMeasure::UMass);
  CHECK(cfg.target_groups == 2);
  CHECK(cfg.min_cell_docs == 5);
  // untouched defaults
  CHECK(cfg.folds == 5);
  CHECK(cfg.test_fraction == 0.10);
  CHECK(cfg.windows.size() == 3);
  CHECK(cfg.coherence.window == 110);

  // canonical form is stable and hashable
  const std::string canon = runConfigCanonicalJson(cfg);
  CHECK(canon == runConfigCanonicalJson(parseRunConfig(canon)));
  CHECK(fnv1a64(canon) == fnv1a64(canon));
  CHECK(fnv1a64(canon) != fnv1a64(canon + " "));
}

TEST_CASE("external predictions must cover unlabeled records") {
  TempDir dir("label");
  const std::string corpus = writeSyntheticCorpus(dir.path / "c.jsonl", 2, false);
  std::ofstream(dir.path / "pred.csv") << "id,label\n";  // empty mapping

  RunConfig cfg;
  cfg.corpus_path = corpus;
  cfg.label_source = LabelSource::External;
  cfg.predictions_path = (dir.path / "pred.csv").string();
  CHECK_THROWS_AS(labelCorpus(cfg, ingestAndFilter(cfg)), PipelineError);

  // gold labels win over external predictions where present
  std::ofstream pred(dir.path / "pred2.csv");
  pred << "id,label\n";
  for (int i = 0; i < 12; ++i) pred << "n" << i << ",0\n";
  pred.close();
  cfg.predictions_path = (dir.path / "pred2.csv").string();
  LabeledCorpus labeled = labelCorpus(cfg, ingestAndFilter(cfg));
  std::size_t from_gold = 0, from_file = 0;
  for (std::size_t i = 0; i < labeled.records.size(); ++i) {
    if (labeled.records[i].gold_category) {
      CHECK(labeled.categories[i] == *labeled.records[i].gold_category);
      ++from_gold;
    } else {
      CHECK(labeled.categories[i] == Category::Stigmatization);
      ++from_file;
    }
  }
  CHECK(from_file == 6);
  CHECK(from_gold == labeled.records.size() - 6);
}

TEST_CASE("gold label source requires every record to carry one") {
  TempDir dir("gold");
  const std::string corpus = writeSyntheticCorpus(dir.path / "c.jsonl", 2, false);
  RunConfig cfg;
  cfg.corpus_path = corpus;
  cfg.label_source = LabelSource::Gold;
  CHECK_THROWS_AS(labelCorpus(cfg, ingestAndFilter(cfg)), PipelineError);
}

TEST_CASE("missing corpus files fail in the ingest step") {
  RunConfig cfg;
  cfg.corpus_path = "/nonexistent/corpus.jsonl";
  CHECK_THROWS_WITH_AS(ingestAndFilter(cfg), doctest::Contains("[ingest]"),
                       PipelineError);
}

TEST_CASE("the full pipeline emits tables, cell artifacts and a manifest") {
  TempDir dir("pipeline");
  const std::string corpus = writeSyntheticCorpus(dir.path / "c.jsonl", 12, true);

  RunConfig cfg;
  cfg.corpus_path = corpus;
  cfg.label_source = LabelSource::Gold;
  cfg.seed = 5;
  cfg.iterations = 40;
  cfg.burn_in = 10;
  cfg.optimize_interval = 5;
  cfg.Ks = {2, 3};
  cfg.coherence.top_n = 5;
  cfg.target_groups = 2;
  cfg.min_cell_docs = 5;
  cfg.n_keywords = 3;

  PipelineResult result = runPipeline(cfg, (dir.path / "out").string());
  CHECK(result.cells.size() == 12);  // 4 categories x 3 stages
  for (const auto& cell : result.cells) {
    CHECK(cell.documents == 12);
    CHECK(cell.status == "ok");
  }
  for (const char* name :
       {"manifest.json", "distribution.md", "distribution.csv", "predictions.csv",
        "topics_blame_S2.json", "coherence_exclusion_S3.json", "topics_blame.md",
        "topics_stigmatization.csv", "config_resolved.json"})
    CHECK(fs::exists(dir.path / "out" / name));

  const std::string manifest = slurp(dir.path / "out" / "manifest.json");
  CHECK(manifest.find("config_hash") != std::string::npos);
  CHECK(manifest.find("fnv1a64:") != std::string::npos);
  CHECK(manifest.find("topics_blame_S2.json") != std::string::npos);

  // cells smaller than the minimum are skipped with a marker
  RunConfig strict = cfg;
  strict.min_cell_docs = 500;
  PipelineResult skipped = runPipeline(strict, (dir.path / "out2").string());
  for (const auto& cell : skipped.cells) CHECK(cell.status == "insufficient_documents");
  const std::string table_md = slurp(dir.path / "out2" / "topics_blame.md");
  CHECK(table_md.find("(insufficient data)") != std::string::npos);
}

TEST_CASE("pipeline reruns are byte-identical") {
  TempDir dir("determinism");
  const std::string corpus = writeSyntheticCorpus(dir.path / "c.jsonl", 8, true);

  RunConfig cfg;
  cfg.corpus_path = corpus;
  cfg.label_source = LabelSource::Gold;
  cfg.seed = 11;
  cfg.iterations = 25;
  cfg.burn_in = 5;
  cfg.optimize_interval = 5;
  cfg.Ks = {2};
  cfg.coherence.top_n = 4;
  cfg.target_groups = 2;
  cfg.min_cell_docs = 4;
  cfg.n_keywords = 3;

  PipelineResult a = runPipeline(cfg, (dir.path / "a").string());
  PipelineResult b = runPipeline(cfg, (dir.path / "b").string());
  REQUIRE(a.artifact_paths == b.artifact_paths);
  for (const auto& rel : a.artifact_paths)
    CHECK(slurp(dir.path / "a" / rel) == slurp(dir.path / "b" / rel));
}
