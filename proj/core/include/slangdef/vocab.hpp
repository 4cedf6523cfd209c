#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "slangdef/types.hpp"

namespace slangdef {

inline constexpr std::array<std::string_view, kNumSpecials> kSpecialTokens = {"<pad>", "<bos>",
                                                                              "<eos>", "<unk>"};

/// ASCII lowercasing; bytes >= 0x80 pass through untouched.
std::string lowercase(std::string_view text);

/// Lowercases, splits on whitespace and emits every ASCII punctuation
/// character as its own token: "loltastic!!1!" -> loltastic ! ! 1 !
std::vector<std::string> tokenize_words(std::string_view text);

/// One token per Unicode scalar value of the lowercased text, each encoded
/// as UTF-8. Any whitespace becomes a single " " token. Invalid UTF-8 bytes
/// are kept as one-byte tokens.
std::vector<std::string> tokenize_chars(std::string_view text);

enum class VocabKind : std::uint8_t { Word, Char };

/// Dense token <-> id map. Ids 0..3 are always <pad>, <bos>, <eos>, <unk>.
class Vocabulary {
 public:
  /// Keeps tokens seen at least `min_count` times, most frequent first
  /// (ties in lexicographic order), up to `max_size` entries including the
  /// specials. max_size must exceed the number of specials.
  static Vocabulary build(std::span<const std::vector<std::string>> corpus, std::size_t max_size,
                          std::size_t min_count, VocabKind kind);
  /// Throws DataError unless the list starts with the specials and has no
  /// duplicates.
  static Vocabulary from_tokens(std::vector<std::string> tokens, VocabKind kind);
  static Vocabulary load(const std::filesystem::path& path, VocabKind kind);
  void save(const std::filesystem::path& path) const;

  std::size_t size() const noexcept { return tokens_.size(); }
  VocabKind kind() const noexcept { return kind_; }
  const std::vector<std::string>& tokens() const noexcept { return tokens_; }

  bool contains(std::string_view token) const;
  /// Id of `token`, or the <unk> id.
  TokenId id(std::string_view token) const;
  /// Throws RangeError for ids >= size().
  const std::string& token(TokenId id) const;

  std::vector<TokenId> encode(std::span<const std::string> tokens) const;
  std::vector<std::string> decode(std::span<const TokenId> ids) const;

  /// File contents exactly as save() writes them.
  std::string serialize() const;
  /// FNV-1a of serialize(); recorded in checkpoints.
  std::uint64_t content_hash() const;

  friend bool operator==(const Vocabulary& a, const Vocabulary& b) {
    return a.kind_ == b.kind_ && a.tokens_ == b.tokens_;
  }

 private:
  Vocabulary(std::vector<std::string> tokens, VocabKind kind);

  std::vector<std::string> tokens_;
  std::unordered_map<std::string, TokenId> index_;
  VocabKind kind_;
};

}  // namespace slangdef
