#include "stagetopics/topiccluster.hpp"

#include <algorithm>
#include <limits>
#include <numeric>

namespace stagetopics {

TopicGrouping groupTopics(const Eigen::MatrixXd& phi, int target_groups) {
  const auto K = static_cast<int>(phi.rows());
  if (target_groups < 1 || target_groups > K)
    throw Error("target_groups must lie in [1, K]");

  Eigen::MatrixXd dist(K, K);
  dist.setZero();
  for (int i = 0; i < K; ++i)
    for (int j = i + 1; j < K; ++j)
      dist(i, j) = dist(j, i) = jensenShannonDivergence(phi.row(i).transpose(),
                                                        phi.row(j).transpose());

  std::vector<std::vector<int>> cells;
  cells.reserve(K);
  for (int k = 0; k < K; ++k) cells.push_back({k});

  while (static_cast<int>(cells.size()) > target_groups) {
    double best = std::numeric_limits<double>::infinity();
    std::size_t best_a = 0, best_b = 1;
    for (std::size_t a = 0; a < cells.size(); ++a) {
      for (std::size_t b = a + 1; b < cells.size(); ++b) {
        double sum = 0.0;
        for (int i : cells[a])
          for (int j : cells[b]) sum += dist(i, j);
        const double linkage =
            sum / (static_cast<double>(cells[a].size()) * cells[b].size());
        // Cells are kept sorted with front() as the minimum member, and the
        // cell list ordered by it, so the first strict improvement is already
        // the lexicographically smallest tied pair.
        if (linkage < best) {
          best = linkage;
          best_a = a;
          best_b = b;
        }
      }
    }
    auto& target = cells[best_a];
    target.insert(target.end(), cells[best_b].begin(), cells[best_b].end());
    std::sort(target.begin(), target.end());
    cells.erase(cells.begin() + static_cast<std::ptrdiff_t>(best_b));
  }

  std::sort(cells.begin(), cells.end(),
            [](const auto& a, const auto& b) { return a.front() < b.front(); });
  return TopicGrouping{std::move(cells)};
}

ClusteredTopic mergeTopics(const Eigen::MatrixXd& phi, std::span<const int> members) {
  if (members.empty()) throw Error("cannot merge an empty topic group");
  ClusteredTopic out;
  out.word_probs = Eigen::VectorXd::Zero(phi.cols());
  for (int k : members) out.word_probs += phi.row(k).transpose();
  out.word_probs /= static_cast<double>(members.size());
  out.members.assign(members.begin(), members.end());
  std::sort(out.members.begin(), out.members.end());
  return out;
}

std::vector<ClusteredTopic> mergeGrouping(const Eigen::MatrixXd& phi,
                                          const TopicGrouping& grouping) {
  std::vector<ClusteredTopic> out;
  out.reserve(grouping.groups.size());
  for (const auto& group : grouping.groups) out.push_back(mergeTopics(phi, group));
  return out;
}

std::vector<std::pair<int, double>> topWordIds(const ClusteredTopic& topic, int n) {
  const auto V = static_cast<int>(topic.word_probs.size());
  if (n > V)
    throw Error("requested " + std::to_string(n) + " words from a distribution over " +
                std::to_string(V));
  std::vector<int> order(V);
  std::iota(order.begin(), order.end(), 0);
  std::partial_sort(order.begin(), order.begin() + n, order.end(), [&](int a, int b) {
    if (topic.word_probs[a] != topic.word_probs[b])
      return topic.word_probs[a] > topic.word_probs[b];
    return a < b;
  });
  std::vector<std::pair<int, double>> out;
  out.reserve(n);
  for (int i = 0; i < n; ++i) out.emplace_back(order[i], topic.word_probs[order[i]]);
  return out;
}

std::vector<std::string> topWords(const ClusteredTopic& topic, int n,
                                  const Vocabulary& vocab) {
  std::vector<std::string> out;
  out.reserve(n);
  for (const auto& [id, prob] : topWordIds(topic, n)) out.push_back(vocab.token(id));
  return out;
}

}  // namespace stagetopics
