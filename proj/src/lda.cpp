#include "stagetopics/lda.hpp"

#include <cmath>
#include <fstream>

#include <json.hpp>

#include "stagetopics/errors.hpp"

namespace stagetopics {

namespace {

double digamma(double x) {
  double result = 0.0;
  while (x < 6.0) {
    result -= 1.0 / x;
    x += 1.0;
  }
  const double r = 1.0 / x;
  result += std::log(x) - 0.5 * r;
  const double r2 = r * r;
  result -= r2 * (1.0 / 12.0 -
                  r2 * (1.0 / 120.0 -
                        r2 * (1.0 / 252.0 - r2 * (1.0 / 240.0 - r2 * (1.0 / 132.0)))));
  return result;
}

void validateParams(const TopicModelParams& params) {
  if (params.K < 1) throw Error("topic count K must be >= 1");
  if (params.alpha.size() != params.K)
    throw Error("alpha must have exactly K entries");
  if ((params.alpha.array() <= 0.0).any()) throw Error("alpha entries must be > 0");
  if (params.beta <= 0.0) throw Error("beta must be > 0");
}

}  // namespace

TopicModelParams TopicModelParams::defaults(int K, std::uint64_t seed) {
  TopicModelParams p;
  p.K = K;
  p.alpha = Eigen::VectorXd::Constant(K, 1.0 / K);
  p.beta = 1.0 / K;
  p.seed = seed;
  return p;
}

TopicModelState initState(std::span<const TokenizedDoc> docs, int vocab_size,
                          const TopicModelParams& params) {
  if (docs.empty()) throw EmptyCorpusError("no documents to model");
  validateParams(params);
  TopicModelState state;
  state.params = params;
  state.vocab_size = vocab_size;
  state.rng = Pcg32(params.seed);
  const int K = params.K;
  const auto D = static_cast<Eigen::Index>(docs.size());
  state.doc_topic = Eigen::MatrixXi::Zero(D, K);
  state.topic_word = Eigen::MatrixXi::Zero(K, vocab_size);
  state.topic_total = Eigen::VectorXi::Zero(K);
  state.docs.reserve(docs.size());
  state.assignments.reserve(docs.size());
  for (Eigen::Index d = 0; d < D; ++d) {
    const auto& tokens = docs[d].tokens;
    for (int w : tokens)
      if (w < 0 || w >= vocab_size)
        throw UnknownTokenError("token id " + std::to_string(w) +
                                " outside vocabulary of size " + std::to_string(vocab_size));
    std::vector<int> z(tokens.size());
    for (std::size_t i = 0; i < tokens.size(); ++i) {
      int k = static_cast<int>(state.rng.bounded(static_cast<std::uint32_t>(K)));
      z[i] = k;
      ++state.doc_topic(d, k);
      ++state.topic_word(k, tokens[i]);
      ++state.topic_total(k);
    }
    state.docs.push_back(tokens);
    state.assignments.push_back(std::move(z));
  }
  return state;
}

namespace {

// Collapsed conditional over topics for word w in doc d, with `exclude` (the
// token's current topic, or -1 if its counts were already removed).
void conditional(const TopicModelState& state, int d, int w, int exclude,
                 Eigen::VectorXd& out) {
  const int K = state.params.K;
  const double beta = state.params.beta;
  const double vbeta = state.vocab_size * beta;
  out.resize(K);
  for (int k = 0; k < K; ++k) {
    const int delta = k == exclude ? 1 : 0;
    out[k] = (state.doc_topic(d, k) - delta + state.params.alpha[k]) *
             (state.topic_word(k, w) - delta + beta) /
             (state.topic_total(k) - delta + vbeta);
  }
}

}  // namespace

Eigen::VectorXd gibbsConditional(const TopicModelState& state, int d, int pos) {
  Eigen::VectorXd p;
  conditional(state, d, state.docs[d][pos], state.assignments[d][pos], p);
  return p;
}

void gibbsSweep(TopicModelState& state) {
  const int K = state.params.K;
  Eigen::VectorXd p(K);
  for (std::size_t d = 0; d < state.docs.size(); ++d) {
    const auto& tokens = state.docs[d];
    auto& z = state.assignments[d];
    for (std::size_t i = 0; i < tokens.size(); ++i) {
      const int w = tokens[i];
      const int old_k = z[i];
      --state.doc_topic(d, old_k);
      --state.topic_word(old_k, w);
      --state.topic_total(old_k);
      conditional(state, static_cast<int>(d), w, -1, p);
      double total = 0.0;
      for (int k = 0; k < K; ++k) total += p[k];
      const double u = state.rng.nextDouble() * total;
      int new_k = K - 1;
      double cum = 0.0;
      for (int k = 0; k < K; ++k) {
        cum += p[k];
        if (u < cum) {
          new_k = k;
          break;
        }
      }
      z[i] = new_k;
      ++state.doc_topic(d, new_k);
      ++state.topic_word(new_k, w);
      ++state.topic_total(new_k);
    }
  }
  ++state.sweeps_done;
}

void optimizeAlpha(TopicModelState& state) {
  constexpr int kMaxIters = 50;
  constexpr double kTolerance = 1e-6;
  constexpr double kFloor = 1e-6;
  const int K = state.params.K;
  const auto D = static_cast<Eigen::Index>(state.docs.size());
  Eigen::VectorXd& alpha = state.params.alpha;
  for (int iter = 0; iter < kMaxIters; ++iter) {
    const double alpha_sum = alpha.sum();
    double denom = 0.0;
    for (Eigen::Index d = 0; d < D; ++d) {
      const auto n_d = static_cast<double>(state.docs[d].size());
      if (n_d > 0) denom += digamma(n_d + alpha_sum) - digamma(alpha_sum);
    }
    if (denom <= 0.0) return;
    double max_delta = 0.0;
    for (int k = 0; k < K; ++k) {
      double num = 0.0;
      const double psi_alpha_k = digamma(alpha[k]);
      for (Eigen::Index d = 0; d < D; ++d) {
        const int n_dk = state.doc_topic(d, k);
        if (n_dk > 0) num += digamma(n_dk + alpha[k]) - psi_alpha_k;
      }
      const double updated = std::max(alpha[k] * num / denom, kFloor);
      max_delta = std::max(max_delta, std::abs(updated - alpha[k]));
      alpha[k] = updated;
    }
    if (max_delta < kTolerance) break;
  }
  ++state.alpha_opt_events;
}

TopicModelState train(std::span<const TokenizedDoc> docs, int vocab_size,
                      const TopicModelParams& params) {
  TopicModelState state = initState(docs, vocab_size, params);
  for (int t = 1; t <= params.iterations; ++t) {
    gibbsSweep(state);
    if (params.optimize_interval > 0 && t > params.burn_in &&
        (t - params.burn_in) % params.optimize_interval == 0)
      optimizeAlpha(state);
  }
  return state;
}

Eigen::MatrixXd phi(const TopicModelState& state) {
  const double beta = state.params.beta;
  const double vbeta = state.vocab_size * beta;
  Eigen::MatrixXd out = (state.topic_word.cast<double>().array() + beta);
  out.array().colwise() /= (state.topic_total.cast<double>().array() + vbeta);
  return out;
}

Eigen::MatrixXd theta(const TopicModelState& state) {
  const auto D = static_cast<Eigen::Index>(state.docs.size());
  const double alpha_sum = state.params.alpha.sum();
  Eigen::MatrixXd out(D, state.params.K);
  for (Eigen::Index d = 0; d < D; ++d) {
    const double n_d = static_cast<double>(state.docs[d].size());
    out.row(d) = (state.doc_topic.row(d).cast<double>().array() +
                  state.params.alpha.transpose().array()) /
                 (n_d + alpha_sum);
  }
  return out;
}

double logLikelihood(const TopicModelState& state) {
  const int K = state.params.K;
  const int V = state.vocab_size;
  const double beta = state.params.beta;
  const auto D = static_cast<Eigen::Index>(state.docs.size());
  double ll = K * (std::lgamma(V * beta) - V * std::lgamma(beta));
  const double lgamma_beta = std::lgamma(beta);
  for (int k = 0; k < K; ++k) {
    for (int w = 0; w < V; ++w) {
      const int n = state.topic_word(k, w);
      ll += n > 0 ? std::lgamma(n + beta) : lgamma_beta;
    }
    ll -= std::lgamma(state.topic_total(k) + V * beta);
  }
  const Eigen::VectorXd& alpha = state.params.alpha;
  const double alpha_sum = alpha.sum();
  double lgamma_alpha_sum = std::lgamma(alpha_sum);
  double sum_lgamma_alpha = 0.0;
  for (int k = 0; k < K; ++k) sum_lgamma_alpha += std::lgamma(alpha[k]);
  for (Eigen::Index d = 0; d < D; ++d) {
    ll += lgamma_alpha_sum - sum_lgamma_alpha;
    for (int k = 0; k < K; ++k) ll += std::lgamma(state.doc_topic(d, k) + alpha[k]);
    ll -= std::lgamma(static_cast<double>(state.docs[d].size()) + alpha_sum);
  }
  return ll;
}

// ---------------------------------------------------------------------------
// Checkpointing
// ---------------------------------------------------------------------------

void saveCheckpoint(const TopicModelState& state, const std::string& path) {
  nlohmann::json obj;
  obj["params"] = {
      {"K", state.params.K},
      {"alpha", std::vector<double>(state.params.alpha.data(),
                                    state.params.alpha.data() + state.params.K)},
      {"beta", state.params.beta},
      {"iterations", state.params.iterations},
      {"burn_in", state.params.burn_in},
      {"optimize_interval", state.params.optimize_interval},
      {"seed", state.params.seed},
  };
  obj["vocab_size"] = state.vocab_size;
  obj["docs"] = state.docs;
  obj["z"] = state.assignments;
  obj["rng"] = {{"state", state.rng.state()}, {"inc", state.rng.inc()}};
  obj["alpha_opt_events"] = state.alpha_opt_events;
  obj["sweeps_done"] = state.sweeps_done;
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write checkpoint: " + path);
  out << obj.dump() << '\n';
}

TopicModelState loadCheckpoint(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ParseError("cannot open checkpoint: " + path);
  nlohmann::json obj = nlohmann::json::parse(in, nullptr, false);
  if (obj.is_discarded()) throw ParseError("malformed checkpoint JSON: " + path);
  try {
    TopicModelParams params;
    const auto& p = obj.at("params");
    params.K = p.at("K").get<int>();
    auto alpha = p.at("alpha").get<std::vector<double>>();
    params.alpha = Eigen::Map<const Eigen::VectorXd>(alpha.data(),
                                                     static_cast<Eigen::Index>(alpha.size()));
    params.beta = p.at("beta").get<double>();
    params.iterations = p.at("iterations").get<int>();
    params.burn_in = p.at("burn_in").get<int>();
    params.optimize_interval = p.at("optimize_interval").get<int>();
    params.seed = p.at("seed").get<std::uint64_t>();
    validateParams(params);

    const int V = obj.at("vocab_size").get<int>();
    auto docs = obj.at("docs").get<std::vector<std::vector<int>>>();
    auto z = obj.at("z").get<std::vector<std::vector<int>>>();
    if (docs.size() != z.size() || docs.empty())
      throw ParseError("checkpoint docs/z shape mismatch");

    TopicModelState state;
    state.params = std::move(params);
    state.vocab_size = V;
    const auto D = static_cast<Eigen::Index>(docs.size());
    state.doc_topic = Eigen::MatrixXi::Zero(D, state.params.K);
    state.topic_word = Eigen::MatrixXi::Zero(state.params.K, V);
    state.topic_total = Eigen::VectorXi::Zero(state.params.K);
    for (Eigen::Index d = 0; d < D; ++d) {
      if (docs[d].size() != z[d].size())
        throw ParseError("checkpoint docs/z shape mismatch in doc " + std::to_string(d));
      for (std::size_t i = 0; i < docs[d].size(); ++i) {
        const int w = docs[d][i];
        const int k = z[d][i];
        if (w < 0 || w >= V || k < 0 || k >= state.params.K)
          throw ParseError("checkpoint entry out of range in doc " + std::to_string(d));
        ++state.doc_topic(d, k);
        ++state.topic_word(k, w);
        ++state.topic_total(k);
      }
    }
    state.docs = std::move(docs);
    state.assignments = std::move(z);
    state.rng = Pcg32::fromState(obj.at("rng").at("state").get<std::uint64_t>(),
                                 obj.at("rng").at("inc").get<std::uint64_t>());
    state.alpha_opt_events = obj.value("alpha_opt_events", 0);
    state.sweeps_done = obj.value("sweeps_done", 0);
    return state;
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(path + ": " + e.what());
  }
}

}  // namespace stagetopics
