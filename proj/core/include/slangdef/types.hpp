#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

namespace slangdef {

using TokenId = std::uint32_t;

/// Special ids shared by every vocabulary.
inline constexpr TokenId kPadId = 0;
inline constexpr TokenId kBosId = 1;
inline constexpr TokenId kEosId = 2;
inline constexpr TokenId kUnkId = 3;
inline constexpr std::size_t kNumSpecials = 4;

/// One training/evaluation instance: the usage sentence, the characters of
/// the expression to explain, and the reference explanation.
///
/// `context_ids` index the word vocabulary, except for the full
/// character-level variant where they index the character vocabulary.
struct SequencePair {
  std::vector<TokenId> context_ids;
  std::vector<TokenId> target_char_ids;
  std::vector<TokenId> output_ids;

  friend bool operator==(const SequencePair&, const SequencePair&) = default;
  friend auto operator<=>(const SequencePair&, const SequencePair&) = default;
};

}  // namespace slangdef
