#pragma once

#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <Eigen/Core>
#include <Eigen/SparseCore>

#include "stagetopics/corpus.hpp"
#include "stagetopics/textprep.hpp"

namespace stagetopics {

struct LabeledExample {
  std::string doc_id;
  std::string text;  // classifier-preprocessed
  Category label;
};

/// TF-IDF multinomial linear classifier over the five categories.
/// weights is 5 x (V+1); the last column is the bias.
struct LinearModel {
  Eigen::MatrixXd weights;
  Vocabulary vocab;
  Eigen::VectorXd idf;
  double regularization = 0.0;
};

struct EvalReport {
  double accuracy = 0.0;
  double weighted_f1 = 0.0;
  Eigen::Matrix<std::int64_t, kNumCategories, kNumCategories> confusion;  // [gold][pred]
  Eigen::Matrix<double, kNumCategories, 1> per_class_f1;
};

std::string evalReportToJson(const EvalReport& report);

std::vector<std::string> whitespaceTokenize(std::string_view text);

// ---------------------------------------------------------------------------
// Operations
// ---------------------------------------------------------------------------

/// Deterministic shuffle by seed; |test| = round(test_fraction * N).
/// Throws TooFewExamplesError when either side would be empty.
std::pair<std::vector<LabeledExample>, std::vector<LabeledExample>>
splitTrainTest(std::span<const LabeledExample> examples, double test_fraction,
               std::uint64_t seed);

struct TfidfFeatures {
  Eigen::SparseMatrix<double, Eigen::RowMajor> matrix;  // N x V, L2-normalized rows
  Eigen::VectorXd idf;                                  // ln((1+N)/(1+df)) + 1
};

/// tf = raw count / doc length; idf fit on `docs`; rows L2-normalized.
TfidfFeatures featurizeTfidf(std::span<const std::vector<std::string>> docs,
                             const Vocabulary& vocab);

/// Featurizes one document against an already-fitted idf vector.
Eigen::SparseVector<double> transformTfidf(std::span<const std::string> tokens,
                                           const Vocabulary& vocab,
                                           const Eigen::VectorXd& idf);

/// Mean cross-entropy of the softmax linear model plus (lambda/2)*||W||^2 over
/// the non-bias columns. X is N x V; weights is C x (V+1) with bias last.
/// When `grad` is non-null it receives d(loss)/d(weights).
double multinomialLogLoss(const Eigen::MatrixXd& weights,
                          const Eigen::SparseMatrix<double, Eigen::RowMajor>& X,
                          std::span<const int> labels, double lambda,
                          Eigen::MatrixXd* grad = nullptr);

/// Full-batch gradient descent with a backtracking line search on the loss
/// above, run until the gradient infinity-norm falls below 1e-5 or 1000
/// epochs. The per-epoch loss trajectory (non-increasing) is appended to
/// `loss_history` when given.
Eigen::MatrixXd fitLogisticWeights(const Eigen::SparseMatrix<double, Eigen::RowMajor>& X,
                                   std::span<const int> labels, double lambda,
                                   std::vector<double>* loss_history = nullptr);

/// Grid search by k-fold cross-validated weighted F1 (ties keep the smaller
/// regularization constant), then a final full-batch gradient-descent fit on
/// all of `train`. Throws MissingClassError when a class is absent.
LinearModel trainLinear(std::span<const LabeledExample> train,
                        std::span<const double> grid, int folds, std::uint64_t seed);

/// Softmax scores over the five categories; label = argmax, ties to the
/// lowest code. Input text is run through the classifier preprocessing
/// (idempotent, so already-prepared text is fine).
std::pair<Category, Eigen::Matrix<double, kNumCategories, 1>>
predict(const LinearModel& model, std::string_view text);

/// accuracy, per-class F1 (0 when P+R=0), support-weighted F1, confusion.
EvalReport evaluate(std::span<const Category> predictions,
                    std::span<const Category> gold);

/// CSV `id,label` (header optional). Throws UnknownLabelError on labels
/// outside 0..4 and ParseError on malformed rows or conflicting duplicates.
std::map<std::string, Category> importExternalPredictions(const std::string& path);
std::map<std::string, Category> importExternalPredictions(std::istream& in,
                                                          const std::string& source_name);

struct TokenLengthStats {
  std::int64_t min = 0;
  std::int64_t max = 0;
  std::int64_t median = 0;  // lower middle for even N
  double mean = 0.0;
};

/// Whitespace token counts after classifier preprocessing.
TokenLengthStats tokenLengthStats(std::span<const std::string> texts);

}  // namespace stagetopics
