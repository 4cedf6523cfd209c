#include "slangdef/vocab.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <map>
#include <sstream>
#include <stdexcept>

#include "slangdef/errors.hpp"
#include "slangdef/random.hpp"

namespace slangdef {

namespace {

bool is_ascii_space(unsigned char c) {
  return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' || c == '\v';
}

bool is_ascii_punct(unsigned char c) {
  return c < 0x80 && std::ispunct(c) != 0;
}

/// Length of the UTF-8 sequence starting at `i`, or 1 for an invalid lead
/// or truncated/invalid continuation.
std::size_t utf8_length(std::string_view s, std::size_t i) {
  const auto lead = static_cast<unsigned char>(s[i]);
  std::size_t len = 1;
  if (lead >= 0xF0 && lead <= 0xF4) {
    len = 4;
  } else if (lead >= 0xE0) {
    len = lead <= 0xEF ? 3 : 1;
  } else if (lead >= 0xC2) {
    len = 2;
  }
  if (len == 1 || i + len > s.size()) return 1;
  for (std::size_t k = 1; k < len; ++k) {
    if ((static_cast<unsigned char>(s[i + k]) & 0xC0) != 0x80) return 1;
  }
  return len;
}

}  // namespace

std::string lowercase(std::string_view text) {
  std::string out(text);
  for (char& c : out) {
    const auto u = static_cast<unsigned char>(c);
    if (u >= 'A' && u <= 'Z') c = static_cast<char>(u - 'A' + 'a');
  }
  return out;
}

std::vector<std::string> tokenize_words(std::string_view text) {
  const std::string lower = lowercase(text);
  std::vector<std::string> tokens;
  std::string current;
  auto flush = [&] {
    if (!current.empty()) tokens.push_back(std::move(current));
    current.clear();
  };
  for (char c : lower) {
    const auto u = static_cast<unsigned char>(c);
    if (is_ascii_space(u)) {
      flush();
    } else if (is_ascii_punct(u)) {
      flush();
      tokens.emplace_back(1, c);
    } else {
      current.push_back(c);
    }
  }
  flush();
  return tokens;
}

std::vector<std::string> tokenize_chars(std::string_view text) {
  const std::string lower = lowercase(text);
  std::vector<std::string> chars;
  std::size_t i = 0;
  while (i < lower.size()) {
    const auto u = static_cast<unsigned char>(lower[i]);
    if (is_ascii_space(u)) {
      chars.emplace_back(" ");
      ++i;
      continue;
    }
    const std::size_t len = utf8_length(lower, i);
    chars.push_back(lower.substr(i, len));
    i += len;
  }
  return chars;
}

Vocabulary::Vocabulary(std::vector<std::string> tokens, VocabKind kind)
    : tokens_(std::move(tokens)), kind_(kind) {
  index_.reserve(tokens_.size());
  for (std::size_t i = 0; i < tokens_.size(); ++i) {
    if (!index_.emplace(tokens_[i], static_cast<TokenId>(i)).second) {
      throw DataError("vocabulary: duplicate token '" + tokens_[i] + "' at id " + std::to_string(i));
    }
  }
}

Vocabulary Vocabulary::build(std::span<const std::vector<std::string>> corpus, std::size_t max_size,
                             std::size_t min_count, VocabKind kind) {
  if (max_size <= kNumSpecials) {
    throw std::invalid_argument("vocabulary: max_size must exceed the " +
                                std::to_string(kNumSpecials) + " special tokens");
  }
  std::map<std::string, std::size_t> counts;
  for (const auto& sequence : corpus)
    for (const auto& token : sequence) ++counts[token];
  for (std::string_view special : kSpecialTokens) counts.erase(std::string(special));

  std::vector<std::pair<std::string, std::size_t>> ranked;
  for (auto& [token, count] : counts) {
    if (count >= min_count) ranked.emplace_back(token, count);
  }
  // std::map iteration is lexicographic, so a stable sort on count alone
  // keeps ties in lexicographic order.
  std::stable_sort(ranked.begin(), ranked.end(),
                   [](const auto& a, const auto& b) { return a.second > b.second; });

  std::vector<std::string> tokens(kSpecialTokens.begin(), kSpecialTokens.end());
  for (auto& [token, count] : ranked) {
    if (tokens.size() >= max_size) break;
    tokens.push_back(std::move(token));
  }
  return Vocabulary(std::move(tokens), kind);
}

Vocabulary Vocabulary::from_tokens(std::vector<std::string> tokens, VocabKind kind) {
  if (tokens.size() < kNumSpecials) throw DataError("vocabulary: missing special tokens");
  for (std::size_t i = 0; i < kNumSpecials; ++i) {
    if (tokens[i] != kSpecialTokens[i]) {
      throw DataError("vocabulary: line " + std::to_string(i + 1) + " must be '" +
                      std::string(kSpecialTokens[i]) + "', found '" + tokens[i] + "'");
    }
  }
  return Vocabulary(std::move(tokens), kind);
}

Vocabulary Vocabulary::load(const std::filesystem::path& path, VocabKind kind) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot read vocabulary file " + path.string());
  std::vector<std::string> tokens;
  std::string line;
  while (std::getline(in, line)) tokens.push_back(line);
  return from_tokens(std::move(tokens), kind);
}

void Vocabulary::save(const std::filesystem::path& path) const {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw DataError("cannot write vocabulary file " + path.string());
  out << serialize();
  if (!out) throw DataError("failed writing vocabulary file " + path.string());
}

bool Vocabulary::contains(std::string_view token) const {
  return index_.find(std::string(token)) != index_.end();
}

TokenId Vocabulary::id(std::string_view token) const {
  const auto it = index_.find(std::string(token));
  return it == index_.end() ? kUnkId : it->second;
}

const std::string& Vocabulary::token(TokenId id) const {
  if (id >= tokens_.size()) {
    throw RangeError("vocabulary: id " + std::to_string(id) + " out of range (size " +
                     std::to_string(tokens_.size()) + ")");
  }
  return tokens_[id];
}

std::vector<TokenId> Vocabulary::encode(std::span<const std::string> tokens) const {
  std::vector<TokenId> ids;
  ids.reserve(tokens.size());
  for (const auto& t : tokens) ids.push_back(id(t));
  return ids;
}

std::vector<std::string> Vocabulary::decode(std::span<const TokenId> ids) const {
  std::vector<std::string> out;
  out.reserve(ids.size());
  for (TokenId i : ids) out.push_back(token(i));
  return out;
}

std::string Vocabulary::serialize() const {
  std::string out;
  for (const auto& t : tokens_) {
    out += t;
    out += '\n';
  }
  return out;
}

std::uint64_t Vocabulary::content_hash() const { return fnv1a64(serialize()); }

}  // namespace slangdef
