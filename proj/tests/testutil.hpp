#pragma once

#include <algorithm>
#include <cmath>
#include <vector>

#include <Eigen/Core>

#include "stagetopics/lda.hpp"
#include "stagetopics/rng.hpp"
#include "stagetopics/textprep.hpp"

namespace testutil {

using stagetopics::Pcg32;
using stagetopics::TokenizedDoc;

inline double gammaSample(Pcg32& rng, double shape) {
  // Marsaglia-Tsang; shape < 1 boosted via the standard power trick.
  if (shape < 1.0) {
    double u = rng.nextDouble();
    while (u <= 0.0) u = rng.nextDouble();
    return gammaSample(rng, shape + 1.0) * std::pow(u, 1.0 / shape);
  }
  const double d = shape - 1.0 / 3.0;
  const double c = 1.0 / std::sqrt(9.0 * d);
  for (;;) {
    // Box-Muller normal from two uniforms.
    double u1 = rng.nextDouble();
    while (u1 <= 0.0) u1 = rng.nextDouble();
    const double u2 = rng.nextDouble();
    const double x = std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586 * u2);
    const double v = std::pow(1.0 + c * x, 3.0);
    if (v <= 0.0) continue;
    const double u = rng.nextDouble();
    if (u < 1.0 - 0.0331 * x * x * x * x) return d * v;
    if (u > 0.0 && std::log(u) < 0.5 * x * x + d * (1.0 - v + std::log(v))) return d * v;
  }
}

inline Eigen::VectorXd dirichletSample(Pcg32& rng, const Eigen::VectorXd& alpha) {
  Eigen::VectorXd out(alpha.size());
  for (Eigen::Index i = 0; i < alpha.size(); ++i) out[i] = gammaSample(rng, alpha[i]);
  const double s = out.sum();
  if (s > 0.0) out /= s;
  else out.setConstant(1.0 / static_cast<double>(alpha.size()));
  return out;
}

inline int drawCategorical(Pcg32& rng, const Eigen::VectorXd& probs) {
  const double u = rng.nextDouble();
  double cum = 0.0;
  for (Eigen::Index i = 0; i < probs.size(); ++i) {
    cum += probs[i];
    if (u < cum) return static_cast<int>(i);
  }
  return static_cast<int>(probs.size() - 1);
}

struct PlantedCorpus {
  Eigen::MatrixXd phi_true;    // K x V
  Eigen::MatrixXd theta_true;  // D x K
  std::vector<TokenizedDoc> docs;
};

/// Generative corpus with block-structured topics: topic k puts `block_mass`
/// uniformly on its own V/K words and the rest uniformly everywhere.
/// theta_d ~ Dirichlet(alpha), token topics and words sampled exactly as the
/// model assumes.
inline PlantedCorpus makePlantedCorpus(std::uint64_t seed, int K, int V, int D,
                                       int doc_len, double alpha,
                                       double block_mass = 0.9) {
  Pcg32 rng(seed);
  PlantedCorpus corpus;
  corpus.phi_true.resize(K, V);
  const int block = V / K;
  for (int k = 0; k < K; ++k) {
    for (int w = 0; w < V; ++w) {
      const bool own = w >= k * block && w < (k + 1) * block;
      corpus.phi_true(k, w) =
          (own ? block_mass / block : 0.0) + (1.0 - block_mass) / V;
    }
  }
  corpus.theta_true.resize(D, K);
  const Eigen::VectorXd alpha_vec = Eigen::VectorXd::Constant(K, alpha);
  corpus.docs.reserve(D);
  for (int d = 0; d < D; ++d) {
    corpus.theta_true.row(d) = dirichletSample(rng, alpha_vec).transpose();
    TokenizedDoc doc;
    doc.doc_id = std::to_string(d);
    doc.tokens.reserve(doc_len);
    for (int i = 0; i < doc_len; ++i) {
      const int k = drawCategorical(rng, corpus.theta_true.row(d).transpose());
      doc.tokens.push_back(drawCategorical(rng, corpus.phi_true.row(k).transpose()));
    }
    corpus.docs.push_back(std::move(doc));
  }
  return corpus;
}

inline double totalVariation(const Eigen::VectorXd& p, const Eigen::VectorXd& q) {
  return 0.5 * (p - q).cwiseAbs().sum();
}

/// Greedy one-to-one alignment of estimated topics to true topics by smallest
/// total-variation distance; returns the mean matched distance.
inline double greedyAlignedMeanTv(const Eigen::MatrixXd& phi_est,
                                  const Eigen::MatrixXd& phi_true) {
  const int K = static_cast<int>(phi_true.rows());
  std::vector<bool> est_used(K, false), true_used(K, false);
  double total = 0.0;
  for (int round = 0; round < K; ++round) {
    double best = 2.0;
    int best_e = -1, best_t = -1;
    for (int e = 0; e < K; ++e) {
      if (est_used[e]) continue;
      for (int t = 0; t < K; ++t) {
        if (true_used[t]) continue;
        const double tv = totalVariation(phi_est.row(e).transpose(),
                                         phi_true.row(t).transpose());
        if (tv < best) {
          best = tv;
          best_e = e;
          best_t = t;
        }
      }
    }
    est_used[best_e] = true;
    true_used[best_t] = true;
    total += best;
  }
  return total / K;
}

/// The three count-consistency invariants of a TopicModelState, checked
/// directly from the assignments.
inline bool countsConsistent(const stagetopics::TopicModelState& state) {
  const int K = state.params.K;
  Eigen::MatrixXi doc_topic = Eigen::MatrixXi::Zero(state.docs.size(), K);
  Eigen::MatrixXi topic_word = Eigen::MatrixXi::Zero(K, state.vocab_size);
  Eigen::VectorXi topic_total = Eigen::VectorXi::Zero(K);
  for (std::size_t d = 0; d < state.docs.size(); ++d) {
    for (std::size_t i = 0; i < state.docs[d].size(); ++i) {
      const int k = state.assignments[d][i];
      ++doc_topic(static_cast<Eigen::Index>(d), k);
      ++topic_word(k, state.docs[d][i]);
      ++topic_total(k);
    }
  }
  return doc_topic == state.doc_topic && topic_word == state.topic_word &&
         topic_total == state.topic_total;
}

inline std::vector<TokenizedDoc> randomCorpus(Pcg32& rng, int D, int V, int min_len,
                                              int max_len) {
  std::vector<TokenizedDoc> docs;
  docs.reserve(D);
  for (int d = 0; d < D; ++d) {
    TokenizedDoc doc;
    doc.doc_id = std::to_string(d);
    const int len = min_len + static_cast<int>(rng.bounded(max_len - min_len + 1));
    for (int i = 0; i < len; ++i)
      doc.tokens.push_back(static_cast<int>(rng.bounded(V)));
    docs.push_back(std::move(doc));
  }
  return docs;
}

}  // namespace testutil
