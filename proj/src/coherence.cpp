#include "stagetopics/coherence.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <unordered_map>

#include <json.hpp>

#include "stagetopics/errors.hpp"

namespace stagetopics {

std::optional<CoherenceMeasure> coherenceMeasureFromName(std::string_view name) {
  if (name == "c_v" || name == "cv") return CoherenceMeasure::CV;
  if (name == "u_mass" || name == "umass") return CoherenceMeasure::UMass;
  return std::nullopt;
}

const char* coherenceMeasureName(CoherenceMeasure m) {
  return m == CoherenceMeasure::CV ? "c_v" : "u_mass";
}

std::vector<std::vector<int>> topWordsFromPhi(const Eigen::MatrixXd& phi, int top_n) {
  const auto V = static_cast<int>(phi.cols());
  const int n = std::min(top_n, V);
  std::vector<std::vector<int>> topics;
  topics.reserve(static_cast<std::size_t>(phi.rows()));
  std::vector<int> order(V);
  for (Eigen::Index k = 0; k < phi.rows(); ++k) {
    std::iota(order.begin(), order.end(), 0);
    std::partial_sort(order.begin(), order.begin() + n, order.end(), [&](int a, int b) {
      if (phi(k, a) != phi(k, b)) return phi(k, a) > phi(k, b);
      return a < b;
    });
    topics.emplace_back(order.begin(), order.begin() + n);
  }
  return topics;
}

// ---------------------------------------------------------------------------
// UMass
// ---------------------------------------------------------------------------

namespace {

// Sorted postings (doc indices) per word, restricted to the words of interest.
std::unordered_map<int, std::vector<int>> buildPostings(
    std::span<const std::vector<int>> topics, std::span<const TokenizedDoc> docs) {
  std::unordered_map<int, std::vector<int>> postings;
  for (const auto& topic : topics)
    for (int w : topic) {
      if (w < 0) throw UnknownTokenError("negative token id in topic");
      postings.try_emplace(w);
    }
  for (std::size_t d = 0; d < docs.size(); ++d) {
    for (int w : docs[d].tokens) {
      auto it = postings.find(w);
      if (it == postings.end()) continue;
      if (it->second.empty() || it->second.back() != static_cast<int>(d))
        it->second.push_back(static_cast<int>(d));
    }
  }
  for (const auto& [w, docs_with_w] : postings)
    if (docs_with_w.empty())
      throw UnknownTokenError("token id " + std::to_string(w) +
                              " does not occur in the corpus");
  return postings;
}

std::size_t intersectionSize(const std::vector<int>& a, const std::vector<int>& b) {
  std::size_t i = 0, j = 0, n = 0;
  while (i < a.size() && j < b.size()) {
    if (a[i] < b[j]) ++i;
    else if (b[j] < a[i]) ++j;
    else { ++n; ++i; ++j; }
  }
  return n;
}

}  // namespace

double umassCoherence(std::span<const std::vector<int>> topics,
                      std::span<const TokenizedDoc> docs, double epsilon) {
  if (topics.empty()) throw Error("no topics to score");
  auto postings = buildPostings(topics, docs);
  double total = 0.0;
  for (const auto& topic : topics) {
    double score = 0.0;
    for (std::size_t j = 1; j < topic.size(); ++j) {
      for (std::size_t i = 0; i < j; ++i) {
        const auto& earlier = postings.at(topic[i]);
        const auto& later = postings.at(topic[j]);
        const double co = static_cast<double>(intersectionSize(earlier, later));
        score += std::log((co + epsilon) / static_cast<double>(earlier.size()));
      }
    }
    total += score;
  }
  return total / static_cast<double>(topics.size());
}

// ---------------------------------------------------------------------------
// c_v
// ---------------------------------------------------------------------------

Eigen::MatrixXd cvNpmiMatrix(const std::vector<int>& words,
                             std::span<const TokenizedDoc> docs, int window) {
  const int n = static_cast<int>(words.size());
  std::unordered_map<int, int> index;
  for (int i = 0; i < n; ++i) {
    if (words[i] < 0) throw UnknownTokenError("negative token id in topic");
    index.emplace(words[i], i);
  }

  // Boolean sliding windows: a document shorter than the window contributes a
  // single whole-document window, otherwise one window per start offset.
  std::int64_t total_windows = 0;
  Eigen::MatrixXd joint = Eigen::MatrixXd::Zero(n, n);  // upper triangle + diag
  std::vector<int> in_window(n, 0);
  for (const auto& doc : docs) {
    const auto len = static_cast<int>(doc.tokens.size());
    if (len == 0) continue;
    const int width = std::min(window, len);
    const int n_windows = len - width + 1;
    total_windows += n_windows;
    std::fill(in_window.begin(), in_window.end(), 0);
    auto member = [&](int pos) {
      auto it = index.find(doc.tokens[pos]);
      return it == index.end() ? -1 : it->second;
    };
    for (int pos = 0; pos < width; ++pos) {
      int m = member(pos);
      if (m >= 0) ++in_window[m];
    }
    for (int start = 0;; ++start) {
      for (int i = 0; i < n; ++i) {
        if (!in_window[i]) continue;
        for (int j = i; j < n; ++j)
          if (in_window[j]) joint(i, j) += 1.0;
      }
      if (start + 1 >= n_windows) break;
      int out = member(start);
      if (out >= 0) --in_window[out];
      int in = member(start + width);
      if (in >= 0) ++in_window[in];
    }
  }

  for (int w : words) {
    auto i = index.at(w);
    if (joint(i, i) == 0.0)
      throw UnknownTokenError("token id " + std::to_string(w) +
                              " does not occur in the corpus");
  }

  constexpr double kEps = 1e-12;
  const double T = static_cast<double>(total_windows);
  Eigen::MatrixXd npmi(n, n);
  for (int i = 0; i < n; ++i) {
    for (int j = i; j < n; ++j) {
      const double co = joint(i, j);
      double value = -1.0;  // zero co-occurrence convention
      if (co > 0.0) {
        const double p_ij = co / T;
        const double p_i = joint(i, i) / T;
        const double p_j = joint(j, j) / T;
        value = std::log((p_ij + kEps) / (p_i * p_j)) / -std::log(p_ij + kEps);
      }
      npmi(i, j) = value;
      npmi(j, i) = value;
    }
  }
  return npmi;
}

double cvCoherence(std::span<const std::vector<int>> topics,
                   std::span<const TokenizedDoc> docs, int window) {
  if (topics.empty()) throw Error("no topics to score");
  double total = 0.0;
  for (const auto& topic : topics) {
    const int n = static_cast<int>(topic.size());
    Eigen::MatrixXd npmi = cvNpmiMatrix(topic, docs, window);
    Eigen::VectorXd sum_vector = npmi.rowwise().sum();
    double topic_score = 0.0;
    for (int i = 0; i < n; ++i) {
      const double denom = npmi.row(i).norm() * sum_vector.norm();
      topic_score += denom > 0.0 ? npmi.row(i).dot(sum_vector) / denom : 0.0;
    }
    total += topic_score / n;
  }
  return total / static_cast<double>(topics.size());
}

double coherenceScore(std::span<const std::vector<int>> topics,
                      std::span<const TokenizedDoc> docs, const CoherenceConfig& config) {
  return config.measure == CoherenceMeasure::CV
             ? cvCoherence(topics, docs, config.window)
             : umassCoherence(topics, docs, config.epsilon);
}

// ---------------------------------------------------------------------------
// Topic-count sweep
// ---------------------------------------------------------------------------

TopicModelParams sweepParamsForK(const TopicModelParams& tmpl, int K) {
  TopicModelParams params = TopicModelParams::defaults(K, deriveSeed(tmpl.seed, K));
  params.iterations = tmpl.iterations;
  params.burn_in = tmpl.burn_in;
  params.optimize_interval = tmpl.optimize_interval;
  return params;
}

CoherenceReport sweepTopicCounts(std::span<const TokenizedDoc> docs, int vocab_size,
                                 std::span<const int> Ks, const TopicModelParams& tmpl,
                                 const CoherenceConfig& config) {
  if (Ks.empty()) throw Error("topic-count sweep needs at least one K");
  CoherenceReport report;
  double best = -std::numeric_limits<double>::infinity();
  for (int K : Ks) {
    TopicModelParams params = sweepParamsForK(tmpl, K);
    TopicModelState state = train(docs, vocab_size, params);
    auto topics = topWordsFromPhi(phi(state), config.top_n);
    const double score = coherenceScore(topics, docs, config);
    report.entries.push_back({K, score, params.seed});
    if (score > best || (score == best && K < report.best_K)) {
      best = score;
      report.best_K = K;
    }
  }
  return report;
}

std::string coherenceReportToJson(const CoherenceReport& report) {
  nlohmann::json entries = nlohmann::json::array();
  for (const auto& e : report.entries)
    entries.push_back({{"K", e.K}, {"coherence", e.coherence}, {"seed", e.seed}});
  nlohmann::json obj;
  obj["entries"] = entries;
  obj["best_K"] = report.best_K;
  return obj.dump(2) + "\n";
}

}  // namespace stagetopics
