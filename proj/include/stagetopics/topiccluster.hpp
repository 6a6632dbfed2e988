#pragma once

#include <cmath>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Core>

#include "stagetopics/errors.hpp"
#include "stagetopics/textprep.hpp"

namespace stagetopics {

/// Jensen-Shannon divergence (natural log) between two distributions given as
/// Eigen vector expressions. Symmetric, 0 iff p = q, bounded by ln 2. Throws
/// NotNormalizedError when either input's sum is off 1 by more than 1e-6.
template <typename DerivedP, typename DerivedQ>
double jensenShannonDivergence(const Eigen::MatrixBase<DerivedP>& p,
                               const Eigen::MatrixBase<DerivedQ>& q) {
  if (p.size() != q.size())
    throw NotNormalizedError("distributions differ in length");
  const double sp = p.sum(), sq = q.sum();
  if (std::abs(sp - 1.0) > 1e-6 || std::abs(sq - 1.0) > 1e-6)
    throw NotNormalizedError("input rows must sum to 1 within 1e-6");
  // The two KL halves are accumulated separately so the result is symmetric
  // down to the last bit.
  double kl_p = 0.0, kl_q = 0.0;
  for (Eigen::Index i = 0; i < p.size(); ++i) {
    const double pi = p(i), qi = q(i);
    const double mi = 0.5 * (pi + qi);
    if (pi > 0.0) kl_p += pi * std::log(pi / mi);
    if (qi > 0.0) kl_q += qi * std::log(qi / mi);
  }
  return std::max(0.5 * (kl_p + kl_q), 0.0);
}

struct TopicGrouping {
  // Partition of {0..K-1}; members sorted ascending, cells ordered by their
  // smallest member.
  std::vector<std::vector<int>> groups;
};

/// Average-linkage agglomerative clustering under Jensen-Shannon divergence
/// until exactly `target_groups` cells remain. Distance ties merge the
/// lexicographically smallest pair of (min member, min member).
TopicGrouping groupTopics(const Eigen::MatrixXd& phi, int target_groups);

/// Merged topic: per-word arithmetic mean of the group's topic-word rows.
struct ClusteredTopic {
  Eigen::VectorXd word_probs;  // V entries, sums to 1
  std::vector<int> members;    // source topic indices
};

ClusteredTopic mergeTopics(const Eigen::MatrixXd& phi, std::span<const int> members);

std::vector<ClusteredTopic> mergeGrouping(const Eigen::MatrixXd& phi,
                                          const TopicGrouping& grouping);

/// Top-n (token id, probability) pairs: descending probability, ties by
/// ascending token id.
std::vector<std::pair<int, double>> topWordIds(const ClusteredTopic& topic, int n);

/// Decoded top-n keywords.
std::vector<std::string> topWords(const ClusteredTopic& topic, int n,
                                  const Vocabulary& vocab);

}  // namespace stagetopics
