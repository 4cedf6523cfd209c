#include "slangdef/data.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <spdlog/spdlog.h>
#include <stdexcept>

#include "json.hpp"
#include "slangdef/errors.hpp"
#include "slangdef/random.hpp"

namespace slangdef {

namespace {

using nlohmann::json;

bool is_blank(const std::string& line) {
  return std::all_of(line.begin(), line.end(),
                     [](unsigned char c) { return c == ' ' || c == '\t' || c == '\r'; });
}

/// Parses one record; returns false if it is malformed.
bool parse_record(const std::string& line, Entry& entry) {
  const json record = json::parse(line, nullptr, /*allow_exceptions=*/false);
  if (!record.is_object()) return false;
  const auto target = record.find("target");
  const auto definition = record.find("definition");
  if (target == record.end() || !target->is_string()) return false;
  if (definition == record.end() || !definition->is_string()) return false;

  auto examples = record.find("example");
  if (examples == record.end()) examples = record.find("examples");
  if (examples == record.end()) return false;

  entry.target = target->get<std::string>();
  entry.definition = definition->get<std::string>();
  entry.examples.clear();
  if (examples->is_string()) {
    entry.examples.push_back(examples->get<std::string>());
  } else if (examples->is_array() && !examples->empty()) {
    for (const auto& e : *examples) {
      if (!e.is_string()) return false;
      entry.examples.push_back(e.get<std::string>());
    }
  } else {
    return false;
  }
  return !entry.target.empty() && !entry.definition.empty();
}

template <typename T>
bool cap(std::vector<T>& v, std::size_t limit) {
  if (v.size() <= limit) return false;
  v.resize(limit);
  return true;
}

}  // namespace

std::vector<Entry> parse_corpus(std::istream& in, const std::string& source_name,
                                LoadReport* report) {
  LoadReport local;
  std::vector<Entry> entries;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (is_blank(line)) continue;
    ++local.records;
    Entry entry;
    if (parse_record(line, entry)) {
      entries.push_back(std::move(entry));
    } else {
      ++local.malformed;
      local.malformed_lines.push_back(line_no);
    }
  }

  if (local.records == 0) spdlog::warn("corpus {} contains no records", source_name);
  if (local.malformed > 0) {
    const double fraction = static_cast<double>(local.malformed) / static_cast<double>(local.records);
    std::string lines;
    for (std::size_t i = 0; i < local.malformed_lines.size(); ++i) {
      if (i == 20) {
        lines += ", ...";
        break;
      }
      lines += (i ? ", " : "") + std::to_string(local.malformed_lines[i]);
    }
    if (fraction > kMaxMalformedFraction) {
      throw DataError("corpus " + source_name + ": " + std::to_string(local.malformed) + " of " +
                      std::to_string(local.records) + " records malformed (lines " + lines + ")");
    }
    spdlog::warn("corpus {}: skipped {} malformed record(s) at line(s) {}", source_name,
                 local.malformed, lines);
  }
  if (report) *report = std::move(local);
  return entries;
}

std::vector<Entry> load_corpus(const std::filesystem::path& path, LoadReport* report) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot read corpus file " + path.string());
  return parse_corpus(in, path.string(), report);
}

std::string entry_to_json_line(const Entry& entry) {
  json record = json::object();
  record["target"] = entry.target;
  record["definition"] = entry.definition;
  if (entry.examples.size() == 1) {
    record["example"] = entry.examples.front();
  } else {
    record["example"] = entry.examples;
  }
  return record.dump(-1, ' ', false, json::error_handler_t::replace);
}

void write_corpus(const std::filesystem::path& path, std::span<const Entry> entries) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw DataError("cannot write corpus file " + path.string());
  for (const Entry& e : entries) out << entry_to_json_line(e) << '\n';
  if (!out) throw DataError("failed writing corpus file " + path.string());
}

std::vector<Entry> keep_containing_examples(std::span<const Entry> entries) {
  std::vector<Entry> kept;
  for (const Entry& e : entries) {
    const std::string target = lowercase(e.target);
    Entry filtered{e.target, e.definition, {}};
    for (const auto& example : e.examples) {
      if (lowercase(example).find(target) != std::string::npos) filtered.examples.push_back(example);
    }
    if (!filtered.examples.empty()) kept.push_back(std::move(filtered));
  }
  return kept;
}

Split split_entries(std::span<const Entry> entries, double test_fraction, std::uint64_t seed) {
  if (!(test_fraction > 0.0 && test_fraction < 1.0)) {
    throw std::invalid_argument("split: test fraction must lie in (0, 1)");
  }
  std::map<std::string, bool> is_test;  // sorted => independent of entry order
  for (const Entry& e : entries) is_test.emplace(lowercase(e.target), false);
  if (is_test.size() < 2) {
    throw DataError("split: need at least 2 distinct targets, found " + std::to_string(is_test.size()));
  }

  std::vector<std::string> targets;
  targets.reserve(is_test.size());
  for (const auto& [t, flag] : is_test) targets.push_back(t);
  Rng rng(seed);
  shuffle(std::span<std::string>(targets), rng);

  const auto n_test = static_cast<std::size_t>(
      std::llround(test_fraction * static_cast<double>(targets.size())));
  if (n_test == 0 || n_test >= targets.size()) {
    throw DataError("split: fraction " + std::to_string(test_fraction) + " of " +
                    std::to_string(targets.size()) + " targets leaves " +
                    (n_test == 0 ? "the test set" : "the training set") + " empty");
  }
  for (std::size_t i = 0; i < n_test; ++i) is_test[targets[i]] = true;

  Split split;
  for (const Entry& e : entries) {
    (is_test.at(lowercase(e.target)) ? split.test : split.train).push_back(e);
  }
  return split;
}

SequencePair make_query(std::string_view sentence, std::string_view target, const Vocabulary& words,
                        const Vocabulary& chars, ContextKind context_kind,
                        const SequenceCaps& caps) {
  SequencePair pair;
  if (context_kind == ContextKind::Words) {
    auto tokens = tokenize_words(sentence);
    cap(tokens, caps.context_words);
    pair.context_ids = words.encode(tokens);
  } else {
    auto tokens = tokenize_chars(sentence);
    cap(tokens, caps.context_chars);
    pair.context_ids = chars.encode(tokens);
  }
  auto target_chars = tokenize_chars(target);
  cap(target_chars, caps.target_chars);
  pair.target_char_ids = chars.encode(target_chars);
  return pair;
}

std::vector<SequencePair> make_pairs(std::span<const Entry> entries, const Vocabulary& words,
                                     const Vocabulary& chars, ContextKind context_kind,
                                     const SequenceCaps& caps, PairStats* stats) {
  PairStats local;
  std::vector<SequencePair> pairs;
  for (const Entry& e : entries) {
    auto definition = tokenize_words(e.definition);
    auto target_chars = tokenize_chars(e.target);
    const bool output_capped = cap(definition, caps.output_words);
    const bool target_capped = cap(target_chars, caps.target_chars);
    const std::vector<TokenId> output_ids = words.encode(definition);
    const std::vector<TokenId> target_ids = chars.encode(target_chars);

    for (const auto& example : e.examples) {
      std::vector<std::string> context = context_kind == ContextKind::Words
                                             ? tokenize_words(example)
                                             : tokenize_chars(example);
      const bool context_capped = cap(
          context, context_kind == ContextKind::Words ? caps.context_words : caps.context_chars);
      if (context.empty() || target_ids.empty() || output_ids.empty()) {
        ++local.dropped;
        continue;
      }
      if (context_capped || target_capped || output_capped) ++local.truncated;
      SequencePair pair;
      pair.context_ids = context_kind == ContextKind::Words ? words.encode(context) : chars.encode(context);
      pair.target_char_ids = target_ids;
      pair.output_ids = output_ids;
      pairs.push_back(std::move(pair));
      ++local.produced;
    }
  }
  if (local.truncated > 0) {
    spdlog::warn("truncated {} of {} pairs to the sequence caps (context {} / target {} / output {})",
                 local.truncated, local.produced,
                 context_kind == ContextKind::Words ? caps.context_words : caps.context_chars,
                 caps.target_chars, caps.output_words);
  }
  if (local.dropped > 0) spdlog::warn("dropped {} pairs with an empty sequence", local.dropped);
  if (stats) *stats = local;
  return pairs;
}

}  // namespace slangdef
