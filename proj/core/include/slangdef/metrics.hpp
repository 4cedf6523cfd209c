#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "slangdef/types.hpp"

namespace slangdef {

/// Corpus-level BLEU-1 and BLEU-2 on a 0-100 scale, one reference per
/// candidate, no smoothing.
struct BleuReport {
  double b1 = 0.0;
  double b2 = 0.0;
  double brevity_penalty = 0.0;
  double p1 = 0.0;  ///< clipped unigram matches / candidate unigrams
  double p2 = 0.0;  ///< clipped bigram matches / candidate bigrams
  std::size_t candidate_tokens = 0;
  std::size_t reference_tokens = 0;
  std::size_t matches1 = 0;
  std::size_t total1 = 0;
  std::size_t matches2 = 0;
  std::size_t total2 = 0;

  friend bool operator==(const BleuReport&, const BleuReport&) = default;
};

/// Throws std::invalid_argument on an empty corpus or mismatched lengths.
///
/// An empty candidate adds nothing but its zero length. If every candidate
/// is empty, BP is reported as 0 (1 when the references are empty too) and
/// both scores are 0.
BleuReport bleu(std::span<const std::vector<std::string>> candidates,
                std::span<const std::vector<std::string>> references);
BleuReport bleu(std::span<const std::vector<TokenId>> candidates,
                std::span<const std::vector<TokenId>> references);

/// One JSON object holding every field.
std::string to_json(const BleuReport& report);

}  // namespace slangdef
