#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "slangdef/types.hpp"
#include "slangdef/vocab.hpp"

namespace slangdef {

/// One dictionary record: an expression, one of its definitions, and the
/// usage examples attached to that definition.
struct Entry {
  std::string target;
  std::string definition;
  std::vector<std::string> examples;

  friend bool operator==(const Entry&, const Entry&) = default;
};

struct LoadReport {
  std::size_t records = 0;    ///< non-blank lines seen
  std::size_t malformed = 0;  ///< lines rejected
  std::vector<std::size_t> malformed_lines;  ///< 1-based
};

/// Fraction of malformed lines above which loading aborts.
inline constexpr double kMaxMalformedFraction = 0.01;

/// Reads one JSON object per line with string fields "target", "definition"
/// and "example" (a string or an array of strings; "examples" is accepted as
/// an alias). Unknown fields are ignored, blank lines skipped. Throws
/// DataError if the file is unreadable or more than 1% of its records are
/// malformed.
std::vector<Entry> load_corpus(const std::filesystem::path& path, LoadReport* report = nullptr);
std::vector<Entry> parse_corpus(std::istream& in, const std::string& source_name,
                                LoadReport* report = nullptr);
/// Writes entries in the same line format load_corpus reads.
void write_corpus(const std::filesystem::path& path, std::span<const Entry> entries);
std::string entry_to_json_line(const Entry& entry);

/// Drops examples that do not contain the target (case-folded), then any
/// entry left without examples.
std::vector<Entry> keep_containing_examples(std::span<const Entry> entries);

struct Split {
  std::vector<Entry> train;
  std::vector<Entry> test;
};

/// Partitions by case-folded target expression so no expression appears on
/// both sides. round(test_fraction * #targets) targets go to test. Entry
/// order within each side follows the input. Throws std::invalid_argument
/// for a fraction outside (0, 1), or DataError when either side would be
/// empty.
Split split_entries(std::span<const Entry> entries, double test_fraction, std::uint64_t seed);

struct SequenceCaps {
  std::size_t context_words = 64;
  std::size_t context_chars = 256;
  std::size_t target_chars = 32;
  std::size_t output_words = 32;
};

enum class ContextKind : std::uint8_t { Words, Chars };

struct PairStats {
  std::size_t produced = 0;
  std::size_t dropped = 0;    ///< empty context, target or definition after tokenizing
  std::size_t truncated = 0;  ///< pairs with at least one capped sequence
};

/// One pair per example of every entry, in entry then example order.
std::vector<SequencePair> make_pairs(std::span<const Entry> entries, const Vocabulary& words,
                                     const Vocabulary& chars, ContextKind context_kind,
                                     const SequenceCaps& caps = {}, PairStats* stats = nullptr);

/// Tokenizes and encodes a single query the same way make_pairs does; the
/// output side is left empty.
SequencePair make_query(std::string_view sentence, std::string_view target, const Vocabulary& words,
                        const Vocabulary& chars, ContextKind context_kind,
                        const SequenceCaps& caps = {});

}  // namespace slangdef
