#pragma once

#include <algorithm>
#include <cmath>
#include <concepts>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <utility>
#include <vector>

#include "slangdef/model.hpp"
#include "slangdef/types.hpp"

namespace slangdef {

enum class DecodeMode : std::uint8_t { Greedy, Beam };

struct DecodeConfig {
  std::size_t max_len = 32;  ///< emitted tokens, EOS excluded
  DecodeMode mode = DecodeMode::Greedy;
  std::size_t beam_width = 4;
  double length_alpha = 0.0;  ///< score = log_prob / length^alpha

  void validate() const {
    if (max_len == 0) throw std::invalid_argument("decode: max_len must be at least 1");
    if (beam_width == 0) throw std::invalid_argument("decode: beam_width must be at least 1");
  }
};

struct Hypothesis {
  std::vector<TokenId> tokens;  ///< EOS-free
  double log_prob = 0.0;        ///< summed, including the EOS step when ended
  double score = 0.0;           ///< length-normalized log_prob
  bool ended = false;           ///< false when cut off at max_len

  friend bool operator==(const Hypothesis&, const Hypothesis&) = default;
};

/// Something that yields next-token log-probabilities. `advance` must be
/// pure: the same state and token always give the same answer.
template <typename S>
concept StepScorer = requires(const S& s, const typename S::State& state, TokenId prev) {
  { s.initial_state() } -> std::convertible_to<typename S::State>;
  { s.advance(state, prev) } -> std::convertible_to<std::pair<std::vector<double>, typename S::State>>;
};

/// log_prob / length^alpha where length counts the EOS when present.
inline double normalized_score(double log_prob, std::size_t tokens, bool ended, double alpha) {
  if (alpha == 0.0) return log_prob;
  const double length = static_cast<double>(tokens + (ended ? 1 : 0));
  return log_prob / std::pow(length, alpha);
}

/// Argmax at each step, lowest id on ties.
template <StepScorer S>
Hypothesis greedy_search(const S& scorer, const DecodeConfig& cfg) {
  cfg.validate();
  Hypothesis out;
  typename S::State state = scorer.initial_state();
  TokenId prev = kBosId;
  for (std::size_t t = 0; t < cfg.max_len; ++t) {
    auto [logprobs, next] = scorer.advance(state, prev);
    const auto best = static_cast<TokenId>(std::max_element(logprobs.begin(), logprobs.end()) -
                                           logprobs.begin());
    out.log_prob += logprobs[best];
    if (best == kEosId) {
      out.ended = true;
      break;
    }
    out.tokens.push_back(best);
    prev = best;
    state = std::move(next);
  }
  out.score = normalized_score(out.log_prob, out.tokens.size(), out.ended, cfg.length_alpha);
  return out;
}

/// Beam search over summed log-probabilities.
///
/// Each round expands every live hypothesis by every token and keeps the
/// beam_width best by raw log-prob (ties: lexicographically smaller token
/// sequence). Survivors ending in EOS retire. The search stops when nothing
/// is live or beam_width hypotheses have retired; hypotheses still live at
/// max_len retire unended. Returns at most beam_width hypotheses sorted by
/// normalized score, ties again lexicographic. Width 1 reproduces
/// greedy_search exactly.
template <StepScorer S>
std::vector<Hypothesis> beam_search(const S& scorer, const DecodeConfig& cfg) {
  cfg.validate();
  struct Live {
    std::vector<TokenId> tokens;
    double log_prob;
    typename S::State state;
  };
  struct Candidate {
    std::size_t parent;
    TokenId token;
    double log_prob;
  };

  std::vector<Live> live;
  live.push_back({{}, 0.0, scorer.initial_state()});
  std::vector<Hypothesis> finished;

  for (std::size_t t = 0; t < cfg.max_len && !live.empty() && finished.size() < cfg.beam_width; ++t) {
    std::vector<typename S::State> next_states;
    std::vector<Candidate> candidates;
    for (std::size_t p = 0; p < live.size(); ++p) {
      const TokenId prev = live[p].tokens.empty() ? kBosId : live[p].tokens.back();
      auto [logprobs, next] = scorer.advance(live[p].state, prev);
      next_states.push_back(std::move(next));
      for (std::size_t v = 0; v < logprobs.size(); ++v) {
        candidates.push_back({p, static_cast<TokenId>(v), live[p].log_prob + logprobs[v]});
      }
    }
    // Lexicographic order of (parent tokens + token): parents are distinct
    // sequences of equal length, so compare parents first, then the token.
    auto better = [&](const Candidate& a, const Candidate& b) {
      if (a.log_prob != b.log_prob) return a.log_prob > b.log_prob;
      if (a.parent != b.parent) return live[a.parent].tokens < live[b.parent].tokens;
      return a.token < b.token;
    };
    const std::size_t keep = std::min(cfg.beam_width, candidates.size());
    std::partial_sort(candidates.begin(), candidates.begin() + static_cast<std::ptrdiff_t>(keep),
                      candidates.end(), better);

    std::vector<Live> survivors;
    for (std::size_t k = 0; k < keep; ++k) {
      const Candidate& c = candidates[k];
      if (c.token == kEosId) {
        finished.push_back({live[c.parent].tokens, c.log_prob, 0.0, true});
      } else {
        std::vector<TokenId> tokens = live[c.parent].tokens;
        tokens.push_back(c.token);
        survivors.push_back({std::move(tokens), c.log_prob, next_states[c.parent]});
      }
    }
    live = std::move(survivors);
  }
  for (auto& l : live) finished.push_back({std::move(l.tokens), l.log_prob, 0.0, false});

  for (auto& h : finished) h.score = normalized_score(h.log_prob, h.tokens.size(), h.ended, cfg.length_alpha);
  std::stable_sort(finished.begin(), finished.end(), [](const Hypothesis& a, const Hypothesis& b) {
    if (a.score != b.score) return a.score > b.score;
    return a.tokens < b.tokens;
  });
  if (finished.size() > cfg.beam_width) finished.resize(cfg.beam_width);
  return finished;
}

/// Adapts a model and one encoded query to StepScorer.
class ModelScorer {
 public:
  using State = DecoderState;

  ModelScorer(const DualEncoderModel& model, std::span<const TokenId> context_ids,
              std::span<const TokenId> target_char_ids);

  State initial_state() const { return encoding_.initial; }
  std::pair<std::vector<double>, State> advance(const State& state, TokenId prev) const;

 private:
  const DualEncoderModel* model_;
  Encoding encoding_;
};

/// Greedy tokens, EOS-free.
std::vector<TokenId> greedy_decode(const DualEncoderModel& model, std::span<const TokenId> context_ids,
                                   std::span<const TokenId> target_char_ids, const DecodeConfig& cfg);

std::vector<Hypothesis> beam_decode(const DualEncoderModel& model, std::span<const TokenId> context_ids,
                                    std::span<const TokenId> target_char_ids, const DecodeConfig& cfg);

/// Greedy or the top beam hypothesis, per cfg.mode.
std::vector<TokenId> decode(const DualEncoderModel& model, const SequencePair& query,
                            const DecodeConfig& cfg);

}  // namespace slangdef
