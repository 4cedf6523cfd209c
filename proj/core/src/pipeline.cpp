#include "slangdef/pipeline.hpp"

#include <stdexcept>

namespace slangdef {

Vocabularies build_vocabularies(std::span<const Entry> entries, const VocabConfig& cfg) {
  std::vector<std::vector<std::string>> word_corpus;
  std::vector<std::vector<std::string>> char_corpus;
  for (const Entry& e : entries) {
    word_corpus.push_back(tokenize_words(e.definition));
    char_corpus.push_back(tokenize_chars(e.target));
    for (const auto& ex : e.examples) {
      word_corpus.push_back(tokenize_words(ex));
      char_corpus.push_back(tokenize_chars(ex));
    }
  }
  const std::size_t char_cap = cfg.char_max_size == 0 ? std::size_t(-1) : cfg.char_max_size;
  return {Vocabulary::build(word_corpus, cfg.word_max_size, cfg.word_min_count, VocabKind::Word),
          Vocabulary::build(char_corpus, char_cap, cfg.char_min_count, VocabKind::Char)};
}

ModelConfig sized_config(ModelConfig config, const Vocabularies& vocabs) {
  config.word_vocab = vocabs.words.size();
  config.char_vocab = config.uses_char_vocab() ? vocabs.chars.size() : 0;
  return config;
}

std::vector<Prediction> predict(const DualEncoderModel& model, std::span<const SequencePair> pairs,
                                const DecodeConfig& cfg) {
  std::vector<Prediction> out;
  out.reserve(pairs.size());
  for (const auto& pair : pairs) out.push_back({decode(model, pair, cfg), pair.output_ids});
  return out;
}

BleuReport score(std::span<const Prediction> predictions) {
  std::vector<std::vector<TokenId>> candidates, references;
  for (const auto& p : predictions) {
    candidates.push_back(p.output);
    references.push_back(p.reference);
  }
  return bleu(candidates, references);
}

double exact_match_rate(std::span<const Prediction> predictions) {
  if (predictions.empty()) throw std::invalid_argument("exact_match_rate: no predictions");
  std::size_t hits = 0;
  for (const auto& p : predictions) hits += p.output == p.reference;
  return static_cast<double>(hits) / static_cast<double>(predictions.size());
}

std::string join_tokens(const std::vector<std::string>& tokens) {
  std::string out;
  for (std::size_t i = 0; i < tokens.size(); ++i) out += (i ? " " : "") + tokens[i];
  return out;
}

}  // namespace slangdef
