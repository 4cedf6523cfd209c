#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <string>
#include <utility>
#include <vector>

#include "oracles.hpp"
#include "slangdef/decoding.hpp"
#include "slangdef/random.hpp"

namespace slangdef::table {

/// Next-token log-probabilities looked up by the emitted prefix.
/// The BOS id doubles as a regular token in these toy vocabularies, so the
/// state remembers whether the start marker has been consumed.
struct TableScorer {
  struct State {
    bool started = false;
    std::vector<TokenId> prefix;
  };
  std::function<std::vector<double>(const std::vector<TokenId>&)> table;

  State initial_state() const { return {}; }
  std::pair<std::vector<double>, State> advance(const State& s, TokenId prev) const {
    State next = s;
    if (next.started) next.prefix.push_back(prev);
    next.started = true;
    return {table(next.prefix), next};
  }
};

inline std::vector<double> log_normalize(std::vector<double> logits) {
  const double mx = *std::max_element(logits.begin(), logits.end());
  double z = 0.0;
  for (double v : logits) z += std::exp(v - mx);
  for (double& v : logits) v -= mx + std::log(z);
  return logits;
}

/// Random but reproducible distributions keyed by (seed, prefix).
inline TableScorer random_table(std::uint64_t seed, std::size_t vocab) {
  return {[seed, vocab](const std::vector<TokenId>& prefix) {
    std::string key;
    for (TokenId t : prefix) key += std::to_string(t) + ",";
    Rng rng(derive_seed(seed, key));
    std::vector<double> logits(vocab);
    for (double& v : logits) v = rng.uniform(-2.0, 2.0);
    return log_normalize(logits);
  }};
}

struct Ranked {
  std::vector<TokenId> tokens;
  double score;
};

/// Every sequence up to `horizon`, scored and sorted the way beam search
/// ranks its output.
inline std::vector<Ranked> oracle_ranking(const TableScorer& s, std::size_t horizon, double alpha) {
  std::vector<Ranked> out;
  for (const auto& e : oracle::enumerate(s.table, horizon)) {
    const double len = static_cast<double>(e.tokens.size() + (e.ended ? 1 : 0));
    out.push_back({e.tokens, e.log_prob / std::pow(len, alpha)});
  }
  std::sort(out.begin(), out.end(), [](const Ranked& a, const Ranked& b) {
    if (a.score != b.score) return a.score > b.score;
    return a.tokens < b.tokens;
  });
  return out;
}

}  // namespace slangdef::table
