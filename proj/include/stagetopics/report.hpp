#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "stagetopics/classifier.hpp"
#include "stagetopics/coherence.hpp"
#include "stagetopics/corpus.hpp"
#include "stagetopics/topiccluster.hpp"

namespace stagetopics {

inline constexpr int kRacistCategories = 4;  // category 4 (none) sits in the footer
inline constexpr int kNumStages = 3;

// ---------------------------------------------------------------------------
// Category x stage distribution (Table 3 shape)
// ---------------------------------------------------------------------------

struct ClassifiedRecord {
  std::string id;
  Category category = Category::None;
  std::optional<Stage> stage;
};

struct StageCategoryTable {
  Eigen::Matrix<std::int64_t, kRacistCategories, kNumStages> counts;
  Eigen::Matrix<std::int64_t, 1, kNumStages> none_by_stage;

  std::int64_t rowTotal(int category) const { return counts.row(category).sum(); }
  std::int64_t noneTotal() const { return none_by_stage.sum(); }
};

/// Counts per (category, stage). Throws UnstagedRecordError when a record has
/// no stage.
StageCategoryTable distributionTable(std::span<const ClassifiedRecord> records);

std::string distributionTableMarkdown(const StageCategoryTable& table);
std::string distributionTableCsv(const StageCategoryTable& table);

// ---------------------------------------------------------------------------
// Topic keyword tables (Tables 4-7 shape)
// ---------------------------------------------------------------------------

/// Decodes each cluster's top `n_keywords` words. Throws TooFewWordsError when
/// a cluster's distribution covers fewer than `n_keywords` words.
std::vector<std::vector<std::string>> topicKeywordRows(
    std::span<const ClusteredTopic> clusters, const Vocabulary& vocab, int n_keywords);

/// One category's table: per stage, keyword rows T1..Tn; a disengaged stage
/// renders as an "insufficient data" marker.
struct TopicsTable {
  std::string category;
  std::array<std::optional<std::vector<std::vector<std::string>>>, kNumStages> stages;
  std::vector<std::string> labels;  // optional, stage-major row labels
};

std::string topicsTableMarkdown(const TopicsTable& table);
std::string topicsTableCsv(const TopicsTable& table);

// ---------------------------------------------------------------------------
// Pipeline configuration
// ---------------------------------------------------------------------------

enum class LabelSource { Internal, External, Gold };

struct RunConfig {
  // corpus
  std::string corpus_path;
  CorpusFormat corpus_format = CorpusFormat::Jsonl;
  std::optional<std::string> hashtag_file;  // nullopt -> bundled default list
  bool apply_hashtag_filter = true;
  // stages
  std::vector<StageWindow> windows;  // defaults to the paper windows
  // classifier
  LabelSource label_source = LabelSource::Internal;
  std::string predictions_path;  // for LabelSource::External
  std::vector<double> grid = {0.01, 0.1, 1.0, 10.0, 100.0};
  int folds = 5;
  double test_fraction = 0.10;
  // text preprocessing for topic modeling
  std::optional<std::string> stopword_file;  // nullopt -> bundled default
  std::optional<std::string> lemma_file;     // nullopt -> bundled default
  int bigram_min_count = 5;
  double bigram_threshold = 10.0;
  int min_df = 1;
  // lda
  int iterations = 1000;
  int burn_in = 100;
  int optimize_interval = 10;
  std::vector<int> Ks = {5, 10, 15, 20, 25};
  // coherence
  CoherenceConfig coherence;
  // cluster
  int target_groups = 5;
  // report
  int min_cell_docs = 30;
  int n_keywords = 10;
  // global
  std::uint64_t seed = 0;

  RunConfig() {
    const auto defaults = defaultStageWindows();
    windows.assign(defaults.begin(), defaults.end());
  }
};

RunConfig parseRunConfig(const std::string& json_text);
RunConfig loadRunConfig(const std::string& path);

/// Canonical re-serialization of the parsed config; its FNV-1a hash goes into
/// the manifest.
std::string runConfigCanonicalJson(const RunConfig& config);
std::uint64_t fnv1a64(std::string_view data);

// ---------------------------------------------------------------------------
// Pipeline
// ---------------------------------------------------------------------------

struct CellSummary {
  Category category = Category::None;
  Stage stage = Stage::S1;
  std::int64_t documents = 0;
  std::string status;  // "ok" or an insufficiency marker
  std::uint64_t seed = 0;
  int best_K = 0;
};

struct PipelineResult {
  std::vector<std::string> artifact_paths;  // relative to out_dir
  std::vector<CellSummary> cells;
  std::string manifest_path;
};

/// ingest -> stage -> label -> per-(category, stage) topic modeling -> tables.
/// Writes every artifact plus a manifest under `out_dir`. Deterministic for a
/// fixed config. Errors are rethrown as PipelineError naming the step.
PipelineResult runPipeline(const RunConfig& config, const std::string& out_dir);

// Steps shared by the CLI subcommands.

struct LabeledCorpus {
  std::vector<TweetRecord> records;          // post-filter
  std::vector<Category> categories;          // aligned with records
  std::vector<std::optional<Stage>> stages;  // aligned with records
  std::optional<EvalReport> eval;            // present for internal training
};

std::vector<TweetRecord> ingestAndFilter(const RunConfig& config);
LabeledCorpus labelCorpus(const RunConfig& config, std::vector<TweetRecord> records);

}  // namespace stagetopics
