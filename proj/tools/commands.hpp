#pragma once

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>

#include "run_config.hpp"

namespace slangdef::cli {

struct PrepareResult {
  std::size_t train_entries = 0;
  std::size_t dev_entries = 0;
  std::size_t test_entries = 0;
};

/// Splits the corpus (entry-disjoint test, then dev carved from train),
/// builds vocabularies from the training side and writes vocabs/ and
/// manifests/.
PrepareResult cmd_prepare(const RunConfig& cfg, std::ostream& out);

/// Trains from the prepared manifests. Writes checkpoints/init, last and
/// best, and one JSON line per epoch to logs/train.jsonl. With `resume`,
/// continues from checkpoints/last.ckpt.
TrainState cmd_train(const RunConfig& cfg, bool resume, std::ostream& out);

/// Decodes every pair of `split` (train, dev or test) and writes
/// reports/bleu_<split>.json and reports/examples_<split>.txt.
BleuReport cmd_evaluate(const RunConfig& cfg, const std::optional<std::filesystem::path>& checkpoint,
                        const std::string& split, std::ostream& out);

/// Generated explanation for one sentence and target, space-joined.
std::string cmd_explain(const RunConfig& cfg, const std::optional<std::filesystem::path>& checkpoint,
                        const std::string& sentence, const std::string& target);

/// Prints the epoch log as a table.
void cmd_report(const RunConfig& cfg, std::ostream& out);

}  // namespace slangdef::cli
