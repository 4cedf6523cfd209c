#pragma once

#include <span>
#include <string>
#include <vector>

#include "slangdef/data.hpp"
#include "slangdef/decoding.hpp"
#include "slangdef/metrics.hpp"
#include "slangdef/model.hpp"
#include "slangdef/vocab.hpp"

namespace slangdef {

struct VocabConfig {
  std::size_t word_max_size = 50000;
  std::size_t word_min_count = 2;
  std::size_t char_max_size = 0;  ///< 0 means uncapped
  std::size_t char_min_count = 1;
};

struct Vocabularies {
  Vocabulary words;
  Vocabulary chars;
};

/// Word vocabulary over every example and definition (context and output
/// share it); character vocabulary over every target and example, so it
/// also serves character-level contexts.
Vocabularies build_vocabularies(std::span<const Entry> entries, const VocabConfig& cfg);

inline ContextKind context_kind(Variant v) {
  return v == Variant::FullCharLevel ? ContextKind::Chars : ContextKind::Words;
}

/// Model config sized to the vocabularies.
ModelConfig sized_config(ModelConfig config, const Vocabularies& vocabs);

struct Prediction {
  std::vector<TokenId> output;
  std::vector<TokenId> reference;
};

/// Decodes every pair and scores the outputs against the pairs' reference
/// definitions at the token-id level.
std::vector<Prediction> predict(const DualEncoderModel& model, std::span<const SequencePair> pairs,
                                const DecodeConfig& cfg);
BleuReport score(std::span<const Prediction> predictions);

/// Fraction of predictions whose output equals the reference exactly.
double exact_match_rate(std::span<const Prediction> predictions);

std::string join_tokens(const std::vector<std::string>& tokens);

}  // namespace slangdef
