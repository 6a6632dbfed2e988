#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "stagetopics/rng.hpp"
#include "stagetopics/textprep.hpp"

namespace stagetopics {

struct TopicModelParams {
  int K = 0;
  Eigen::VectorXd alpha;  // K entries, all > 0
  double beta = 0.0;
  int iterations = 1000;
  int burn_in = 100;
  int optimize_interval = 10;  // <= 0 disables hyperparameter optimization
  std::uint64_t seed = 0;

  // alpha_k = 1/K, beta = 1/K.
  static TopicModelParams defaults(int K, std::uint64_t seed);
};

/// Full collapsed-Gibbs state. Count tables are kept consistent with the
/// assignments by every operation:
///   sum_k doc_topic(d,k) == docs[d].size()
///   sum_w topic_word(k,w) == topic_total(k)
///   sum_k topic_total(k) == total token count
struct TopicModelState {
  TopicModelParams params;
  int vocab_size = 0;
  std::vector<std::vector<int>> docs;         // token ids, fixed after init
  std::vector<std::vector<int>> assignments;  // z, same shape as docs
  Eigen::MatrixXi doc_topic;                  // D x K
  Eigen::MatrixXi topic_word;                 // K x V
  Eigen::VectorXi topic_total;                // K
  Pcg32 rng{0};
  int alpha_opt_events = 0;
  int sweeps_done = 0;
};

/// Assigns every token a uniform-random topic from the seeded generator and
/// builds consistent count tables. Throws EmptyCorpusError on an empty doc
/// sequence.
TopicModelState initState(std::span<const TokenizedDoc> docs, int vocab_size,
                          const TopicModelParams& params);

/// Unnormalized collapsed conditional p(z = k | rest) for token `pos` of doc
/// `d`, excluding that token's own current assignment:
///   (n_dk - d + alpha_k) * (n_kw - d + beta) / (n_k - d + V*beta)
Eigen::VectorXd gibbsConditional(const TopicModelState& state, int d, int pos);

/// One full pass over all tokens in doc order, resampling each topic from the
/// collapsed conditional with incremental count updates.
void gibbsSweep(TopicModelState& state);

/// Minka fixed-point update of the (asymmetric) Dirichlet document prior:
///   alpha_k <- alpha_k * sum_d[psi(n_dk+alpha_k)-psi(alpha_k)]
///                      / sum_d[psi(N_d+sum a)-psi(sum a)]
/// iterated at most 50 times or until max |delta| < 1e-6; each component is
/// floored at 1e-6. beta stays fixed.
void optimizeAlpha(TopicModelState& state);

/// init + `iterations` sweeps; after sweep t the alpha update runs iff
/// t > burn_in and (t - burn_in) % optimize_interval == 0.
TopicModelState train(std::span<const TokenizedDoc> docs, int vocab_size,
                      const TopicModelParams& params);

/// phi(k,w) = (n_kw + beta) / (n_k + V*beta); rows sum to 1.
Eigen::MatrixXd phi(const TopicModelState& state);

/// theta(d,k) = (n_dk + alpha_k) / (N_d + sum alpha); rows sum to 1.
Eigen::MatrixXd theta(const TopicModelState& state);

/// Joint log p(w, z | alpha, beta) in collapsed form.
double logLikelihood(const TopicModelState& state);

/// JSON checkpoint with params, docs, assignments and generator state; reload
/// rebuilds the count tables and reproduces identical phi/theta.
void saveCheckpoint(const TopicModelState& state, const std::string& path);
TopicModelState loadCheckpoint(const std::string& path);

}  // namespace stagetopics
