#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "stagetopics/lda.hpp"

namespace stagetopics {

enum class CoherenceMeasure { CV, UMass };

std::optional<CoherenceMeasure> coherenceMeasureFromName(std::string_view name);
const char* coherenceMeasureName(CoherenceMeasure m);

struct CoherenceConfig {
  CoherenceMeasure measure = CoherenceMeasure::CV;
  int top_n = 10;
  int window = 110;      // c_v boolean sliding window
  double epsilon = 1.0;  // UMass smoothing
};

/// Top `top_n` token ids per topic: descending phi, ties by ascending id.
std::vector<std::vector<int>> topWordsFromPhi(const Eigen::MatrixXd& phi, int top_n);

/// UMass: per topic, sum over ordered pairs (i earlier than j) of
/// log((D(w_i,w_j)+eps)/D(w_i)); mean over topics. D counts documents.
double umassCoherence(std::span<const std::vector<int>> topics,
                      std::span<const TokenizedDoc> docs, double epsilon);

/// NPMI matrix over `words` from boolean sliding windows of size `window`.
/// Zero co-occurrence maps to -1; probabilities are smoothed by +1e-12
/// inside the logs.
Eigen::MatrixXd cvNpmiMatrix(const std::vector<int>& words,
                             std::span<const TokenizedDoc> docs, int window);

/// c_v: NPMI context vectors per top word, one-vs-all segmentation against the
/// set's sum vector, mean cosine similarity per topic, mean over topics.
double cvCoherence(std::span<const std::vector<int>> topics,
                   std::span<const TokenizedDoc> docs, int window);

double coherenceScore(std::span<const std::vector<int>> topics,
                      std::span<const TokenizedDoc> docs, const CoherenceConfig& config);

struct CoherenceEntry {
  int K = 0;
  double coherence = 0.0;
  std::uint64_t seed = 0;
};

struct CoherenceReport {
  std::vector<CoherenceEntry> entries;  // in sweep order
  int best_K = 0;                       // max coherence, ties to the smaller K
};

std::string coherenceReportToJson(const CoherenceReport& report);

/// Parameters used for the sweep's model at a given K: defaults re-derived for
/// K (alpha = beta = 1/K), schedule knobs from the template, seed derived from
/// the template seed and K.
TopicModelParams sweepParamsForK(const TopicModelParams& tmpl, int K);

/// Trains one model per K on `docs`, scores its top words, and selects the
/// best K. Coherence is evaluated on the training corpus.
CoherenceReport sweepTopicCounts(std::span<const TokenizedDoc> docs, int vocab_size,
                                 std::span<const int> Ks, const TopicModelParams& tmpl,
                                 const CoherenceConfig& config);

}  // namespace stagetopics
