#include "stagetopics/classifier.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>

#include <json.hpp>

#include "stagetopics/rng.hpp"

namespace stagetopics {

std::vector<std::string> whitespaceTokenize(std::string_view text) {
  std::vector<std::string> tokens;
  std::size_t i = 0;
  while (i < text.size()) {
    while (i < text.size() && std::isspace(static_cast<unsigned char>(text[i]))) ++i;
    std::size_t start = i;
    while (i < text.size() && !std::isspace(static_cast<unsigned char>(text[i]))) ++i;
    if (i > start) tokens.emplace_back(text.substr(start, i - start));
  }
  return tokens;
}

// ---------------------------------------------------------------------------
// Split
// ---------------------------------------------------------------------------

std::pair<std::vector<LabeledExample>, std::vector<LabeledExample>>
splitTrainTest(std::span<const LabeledExample> examples, double test_fraction,
               std::uint64_t seed) {
  if (!(test_fraction > 0.0 && test_fraction < 1.0))
    throw Error("test_fraction must lie in (0, 1)");
  const std::size_t n = examples.size();
  const auto n_test = static_cast<std::size_t>(
      std::llround(test_fraction * static_cast<double>(n)));
  if (n_test == 0 || n_test >= n)
    throw TooFewExamplesError("split of " + std::to_string(n) + " examples at fraction " +
                              std::to_string(test_fraction) + " leaves an empty side");
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  Pcg32 rng(seed);
  shuffleInPlace(order, rng);
  std::vector<LabeledExample> test, train;
  test.reserve(n_test);
  train.reserve(n - n_test);
  for (std::size_t i = 0; i < n; ++i)
    (i < n_test ? test : train).push_back(examples[order[i]]);
  return {std::move(train), std::move(test)};
}

// ---------------------------------------------------------------------------
// TF-IDF
// ---------------------------------------------------------------------------

TfidfFeatures featurizeTfidf(std::span<const std::vector<std::string>> docs,
                             const Vocabulary& vocab) {
  const int V = vocab.size();
  const auto N = static_cast<Eigen::Index>(docs.size());
  Eigen::VectorXd df = Eigen::VectorXd::Zero(V);
  for (const auto& doc : docs) {
    std::vector<bool> seen(V, false);
    for (const auto& tok : doc) {
      auto id = vocab.id(tok);
      if (id && !seen[*id]) {
        seen[*id] = true;
        df[*id] += 1.0;
      }
    }
  }
  TfidfFeatures out;
  out.idf = ((1.0 + static_cast<double>(N)) / (1.0 + df.array())).log() + 1.0;

  std::vector<Eigen::Triplet<double>> triplets;
  for (Eigen::Index d = 0; d < N; ++d) {
    Eigen::SparseVector<double> row = transformTfidf(docs[d], vocab, out.idf);
    for (Eigen::SparseVector<double>::InnerIterator it(row); it; ++it)
      triplets.emplace_back(d, it.index(), it.value());
  }
  out.matrix.resize(N, V);
  out.matrix.setFromTriplets(triplets.begin(), triplets.end());
  return out;
}

Eigen::SparseVector<double> transformTfidf(std::span<const std::string> tokens,
                                           const Vocabulary& vocab,
                                           const Eigen::VectorXd& idf) {
  Eigen::SparseVector<double> row(vocab.size());
  if (tokens.empty()) return row;
  std::map<int, double> counts;
  for (const auto& tok : tokens) {
    auto id = vocab.id(tok);
    if (id) counts[*id] += 1.0;
  }
  const double len = static_cast<double>(tokens.size());
  double sq = 0.0;
  for (const auto& [id, count] : counts) {
    double v = (count / len) * idf[id];
    row.insert(id) = v;
    sq += v * v;
  }
  if (sq > 0.0) row /= std::sqrt(sq);
  return row;
}

// ---------------------------------------------------------------------------
// Multinomial logistic regression
// ---------------------------------------------------------------------------

namespace {

// Row-wise softmax of X*W_feat^T + bias^T, numerically stabilized.
Eigen::MatrixXd softmaxScores(const Eigen::MatrixXd& weights,
                              const Eigen::SparseMatrix<double, Eigen::RowMajor>& X) {
  const Eigen::Index C = weights.rows();
  const Eigen::Index V = weights.cols() - 1;
  Eigen::MatrixXd scores = X * weights.leftCols(V).transpose();
  scores.rowwise() += weights.col(V).transpose();
  Eigen::VectorXd row_max = scores.rowwise().maxCoeff();
  scores.colwise() -= row_max;
  Eigen::MatrixXd expd = scores.array().exp();
  Eigen::VectorXd denom = expd.rowwise().sum();
  for (Eigen::Index c = 0; c < C; ++c) expd.col(c).array() /= denom.array();
  return expd;
}

}  // namespace

double multinomialLogLoss(const Eigen::MatrixXd& weights,
                          const Eigen::SparseMatrix<double, Eigen::RowMajor>& X,
                          std::span<const int> labels, double lambda,
                          Eigen::MatrixXd* grad) {
  const Eigen::Index N = X.rows();
  const Eigen::Index V = weights.cols() - 1;
  Eigen::MatrixXd probs = softmaxScores(weights, X);
  double loss = 0.0;
  for (Eigen::Index i = 0; i < N; ++i)
    loss -= std::log(std::max(probs(i, labels[i]), 1e-300));
  loss /= static_cast<double>(N);
  loss += 0.5 * lambda * weights.leftCols(V).squaredNorm();
  if (grad) {
    Eigen::MatrixXd delta = probs;  // P - Y
    for (Eigen::Index i = 0; i < N; ++i) delta(i, labels[i]) -= 1.0;
    grad->resize(weights.rows(), weights.cols());
    grad->leftCols(V) =
        (delta.transpose() * X) / static_cast<double>(N) + lambda * weights.leftCols(V);
    grad->col(V) = delta.colwise().sum().transpose() / static_cast<double>(N);
  }
  return loss;
}

namespace {
constexpr int kMaxEpochs = 1000;
constexpr double kGradTolerance = 1e-5;
}  // namespace

// Backtracking (Armijo) line search keeps the loss non-increasing across
// epochs.
Eigen::MatrixXd fitLogisticWeights(const Eigen::SparseMatrix<double, Eigen::RowMajor>& X,
                                   std::span<const int> labels, double lambda,
                                   std::vector<double>* loss_history) {
  Eigen::MatrixXd W = Eigen::MatrixXd::Zero(kNumCategories, X.cols() + 1);
  Eigen::MatrixXd grad;
  double loss = multinomialLogLoss(W, X, labels, lambda, &grad);
  if (loss_history) loss_history->push_back(loss);
  double step = 1.0;
  for (int epoch = 0; epoch < kMaxEpochs; ++epoch) {
    if (grad.cwiseAbs().maxCoeff() < kGradTolerance) break;
    const double g2 = grad.squaredNorm();
    for (;;) {
      Eigen::MatrixXd W_next = W - step * grad;
      double next = multinomialLogLoss(W_next, X, labels, lambda, nullptr);
      if (next <= loss - 1e-4 * step * g2 || step < 1e-16) {
        W = std::move(W_next);
        loss = next;
        break;
      }
      step *= 0.5;
    }
    if (loss_history) loss_history->push_back(loss);
    step = std::min(step * 2.0, 1e6);
    multinomialLogLoss(W, X, labels, lambda, &grad);
  }
  return W;
}

namespace {

struct Featurized {
  Vocabulary vocab;
  TfidfFeatures features;
  std::vector<int> labels;
};

Featurized featurizeExamples(std::span<const LabeledExample> examples) {
  Featurized out;
  std::vector<std::vector<std::string>> docs;
  docs.reserve(examples.size());
  for (const auto& ex : examples) {
    docs.push_back(whitespaceTokenize(ex.text));
    out.labels.push_back(static_cast<int>(ex.label));
    for (const auto& tok : docs.back()) out.vocab.addToken(tok);
  }
  out.features = featurizeTfidf(docs, out.vocab);
  return out;
}

}  // namespace

LinearModel trainLinear(std::span<const LabeledExample> train,
                        std::span<const double> grid, int folds, std::uint64_t seed) {
  if (grid.empty()) throw Error("regularization grid must be nonempty");
  if (folds < 2) throw Error("folds must be >= 2");
  if (train.empty()) throw TooFewExamplesError("empty training set");
  std::array<bool, kNumCategories> present{};
  for (const auto& ex : train) present[static_cast<int>(ex.label)] = true;
  for (int c = 0; c < kNumCategories; ++c)
    if (!present[c])
      throw MissingClassError("class " + std::to_string(c) + " (" +
                              categoryName(static_cast<Category>(c)) +
                              ") is absent from the training set");

  double best_lambda = grid[0];
  if (grid.size() > 1) {
    const std::size_t n = train.size();
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    Pcg32 rng(seed);
    shuffleInPlace(order, rng);

    double best_score = -1.0;
    for (double lambda : grid) {
      double score_sum = 0.0;
      int scored = 0;
      for (int f = 0; f < folds; ++f) {
        std::size_t lo = n * static_cast<std::size_t>(f) / static_cast<std::size_t>(folds);
        std::size_t hi = n * static_cast<std::size_t>(f + 1) / static_cast<std::size_t>(folds);
        if (lo == hi) continue;
        std::vector<LabeledExample> fold_train, fold_val;
        for (std::size_t i = 0; i < n; ++i)
          (i >= lo && i < hi ? fold_val : fold_train).push_back(train[order[i]]);
        if (fold_train.empty()) continue;
        Featurized ft = featurizeExamples(fold_train);
        Eigen::MatrixXd W = fitLogisticWeights(ft.features.matrix, ft.labels, lambda);
        LinearModel fold_model{W, ft.vocab, ft.features.idf, lambda};
        std::vector<Category> pred, gold;
        for (const auto& ex : fold_val) {
          pred.push_back(predict(fold_model, ex.text).first);
          gold.push_back(ex.label);
        }
        score_sum += evaluate(pred, gold).weighted_f1;
        ++scored;
      }
      double score = scored ? score_sum / scored : 0.0;
      if (score > best_score + 1e-12 ||
          (std::abs(score - best_score) <= 1e-12 && lambda < best_lambda)) {
        best_score = score;
        best_lambda = lambda;
      }
    }
  }

  Featurized ft = featurizeExamples(train);
  Eigen::MatrixXd W = fitLogisticWeights(ft.features.matrix, ft.labels, best_lambda);
  return LinearModel{std::move(W), std::move(ft.vocab), std::move(ft.features.idf),
                     best_lambda};
}

std::pair<Category, Eigen::Matrix<double, kNumCategories, 1>>
predict(const LinearModel& model, std::string_view text) {
  std::vector<std::string> tokens = whitespaceTokenize(prepForClassifier(text));
  Eigen::SparseVector<double> x = transformTfidf(tokens, model.vocab, model.idf);
  const Eigen::Index V = model.weights.cols() - 1;
  Eigen::Matrix<double, kNumCategories, 1> scores =
      model.weights.leftCols(V) * x + model.weights.col(V);
  scores.array() -= scores.maxCoeff();
  Eigen::Matrix<double, kNumCategories, 1> probs = scores.array().exp();
  probs /= probs.sum();
  int best = 0;
  for (int c = 1; c < kNumCategories; ++c)
    if (probs[c] > probs[best]) best = c;  // ties keep the lowest code
  return {static_cast<Category>(best), probs};
}

// ---------------------------------------------------------------------------
// Evaluation
// ---------------------------------------------------------------------------

EvalReport evaluate(std::span<const Category> predictions,
                    std::span<const Category> gold) {
  if (predictions.size() != gold.size())
    throw LengthMismatchError("predictions (" + std::to_string(predictions.size()) +
                              ") and gold (" + std::to_string(gold.size()) +
                              ") differ in length");
  if (gold.empty()) throw LengthMismatchError("empty evaluation input");
  EvalReport report;
  report.confusion.setZero();
  for (std::size_t i = 0; i < gold.size(); ++i)
    ++report.confusion(static_cast<int>(gold[i]), static_cast<int>(predictions[i]));
  const auto n = static_cast<double>(gold.size());
  report.accuracy = static_cast<double>(report.confusion.trace()) / n;
  report.weighted_f1 = 0.0;
  for (int c = 0; c < kNumCategories; ++c) {
    const double tp = static_cast<double>(report.confusion(c, c));
    const double pred_c = static_cast<double>(report.confusion.col(c).sum());
    const double supp_c = static_cast<double>(report.confusion.row(c).sum());
    const double precision = pred_c > 0 ? tp / pred_c : 0.0;
    const double recall = supp_c > 0 ? tp / supp_c : 0.0;
    const double f1 =
        precision + recall > 0 ? 2.0 * precision * recall / (precision + recall) : 0.0;
    report.per_class_f1[c] = f1;
    report.weighted_f1 += supp_c / n * f1;
  }
  return report;
}

std::string evalReportToJson(const EvalReport& report) {
  nlohmann::json obj;
  obj["accuracy"] = report.accuracy;
  obj["weighted_f1"] = report.weighted_f1;
  obj["per_class_f1"] = std::vector<double>(report.per_class_f1.data(),
                                            report.per_class_f1.data() + kNumCategories);
  std::vector<std::vector<std::int64_t>> confusion;
  for (int g = 0; g < kNumCategories; ++g) {
    std::vector<std::int64_t> row;
    for (int p = 0; p < kNumCategories; ++p) row.push_back(report.confusion(g, p));
    confusion.push_back(std::move(row));
  }
  obj["confusion"] = confusion;
  return obj.dump(2) + "\n";
}

// ---------------------------------------------------------------------------
// External predictions
// ---------------------------------------------------------------------------

std::map<std::string, Category> importExternalPredictions(std::istream& in,
                                                          const std::string& source_name) {
  std::map<std::string, Category> out;
  std::vector<std::string> fields;
  std::size_t line = 0;
  bool first = true;
  std::size_t row = 0;
  while (readCsvRecord(in, fields, line)) {
    ++row;
    if (fields.size() == 1 && fields[0].empty()) continue;
    if (first && fields.size() == 2 && fields[0] == "id" && fields[1] == "label") {
      first = false;
      continue;
    }
    first = false;
    if (fields.size() != 2)
      throw ParseError(source_name + ": row " + std::to_string(row) +
                       ": expected 'id,label'");
    const std::string& id = fields[0];
    if (id.empty())
      throw ParseError(source_name + ": row " + std::to_string(row) + ": empty id");
    int code = 0;
    try {
      std::size_t pos = 0;
      code = std::stoi(fields[1], &pos);
      if (pos != fields[1].size()) throw std::invalid_argument("");
    } catch (const std::exception&) {
      throw ParseError(source_name + ": row " + std::to_string(row) +
                       ": label must be an integer, got '" + fields[1] + "'");
    }
    Category label = categoryFromCode(code);
    auto [it, inserted] = out.try_emplace(id, label);
    if (!inserted && it->second != label)
      throw ParseError(source_name + ": conflicting labels for id '" + id + "'");
  }
  return out;
}

std::map<std::string, Category> importExternalPredictions(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ParseError("cannot open predictions file: " + path);
  return importExternalPredictions(in, path);
}

// ---------------------------------------------------------------------------
// Token-length diagnostics
// ---------------------------------------------------------------------------

TokenLengthStats tokenLengthStats(std::span<const std::string> texts) {
  if (texts.empty()) throw EmptyInputError("token_length_stats on empty input");
  std::vector<std::int64_t> lengths;
  lengths.reserve(texts.size());
  for (const auto& text : texts)
    lengths.push_back(
        static_cast<std::int64_t>(whitespaceTokenize(prepForClassifier(text)).size()));
  std::sort(lengths.begin(), lengths.end());
  TokenLengthStats stats;
  stats.min = lengths.front();
  stats.max = lengths.back();
  stats.median = lengths[(lengths.size() - 1) / 2];  // lower middle for even N
  stats.mean = static_cast<double>(std::accumulate(lengths.begin(), lengths.end(),
                                                   std::int64_t{0})) /
               static_cast<double>(lengths.size());
  return stats;
}

}  // namespace stagetopics
