#include "slangdef/decoding.hpp"

#include "slangdef/matrix.hpp"

namespace slangdef {

ModelScorer::ModelScorer(const DualEncoderModel& model, std::span<const TokenId> context_ids,
                         std::span<const TokenId> target_char_ids)
    : model_(&model), encoding_(encode(model, context_ids, target_char_ids)) {}

std::pair<std::vector<double>, ModelScorer::State> ModelScorer::advance(const State& state,
                                                                        TokenId prev) const {
  DecoderStep step = decoder_step(*model_, encoding_.memory, state, prev);
  const Matrix logp = log_softmax_row(step.logits);
  const auto values = logp.values();
  return {std::vector<double>(values.begin(), values.end()), std::move(step.next)};
}

std::vector<TokenId> greedy_decode(const DualEncoderModel& model, std::span<const TokenId> context_ids,
                                   std::span<const TokenId> target_char_ids, const DecodeConfig& cfg) {
  return greedy_search(ModelScorer(model, context_ids, target_char_ids), cfg).tokens;
}

std::vector<Hypothesis> beam_decode(const DualEncoderModel& model, std::span<const TokenId> context_ids,
                                    std::span<const TokenId> target_char_ids, const DecodeConfig& cfg) {
  return beam_search(ModelScorer(model, context_ids, target_char_ids), cfg);
}

std::vector<TokenId> decode(const DualEncoderModel& model, const SequencePair& query,
                            const DecodeConfig& cfg) {
  if (cfg.mode == DecodeMode::Greedy) {
    return greedy_decode(model, query.context_ids, query.target_char_ids, cfg);
  }
  auto ranked = beam_decode(model, query.context_ids, query.target_char_ids, cfg);
  return ranked.front().tokens;
}

}  // namespace slangdef
