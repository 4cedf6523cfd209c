#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>

#include "slangdef/decoding.hpp"
#include "slangdef/model.hpp"
#include "slangdef/pipeline.hpp"
#include "slangdef/training.hpp"

namespace slangdef::cli {

/// Bad configuration or flags; maps to exit status 1.
class UsageError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Everything one run needs, read from an INI file:
///
///   [data]   corpus, test_fraction, dev_fraction, strict
///   [vocab]  word_max_size, word_min_count, char_max_size, char_min_count
///   [model]  variant, hidden, word_embed, char_embed, attn, layers
///   [train]  initial_lr, lr_decay, patience, clip_norm, batch_size,
///            max_epochs, min_lr
///   [decode] mode, beam_width, max_len, length_alpha
///   [run]    seed, output_dir
///
/// Relative paths resolve against the config file's directory. Unknown
/// keys are rejected so typos do not silently fall back to defaults.
struct RunConfig {
  std::filesystem::path corpus;
  double test_fraction = 0.1;
  double dev_fraction = 0.05;  ///< of the training side's targets
  bool strict = false;         ///< drop examples that do not contain their target
  SequenceCaps caps;

  VocabConfig vocab;
  ModelConfig model;  ///< vocabulary sizes are filled in from the vocab files
  TrainConfig train;
  DecodeConfig decode;

  std::uint64_t seed = 1;
  std::filesystem::path output_dir;

  /// Throws UsageError for inconsistent values.
  void validate() const;

  std::uint64_t split_seed() const;
  std::uint64_t dev_seed() const;
  std::uint64_t init_seed() const;
  std::uint64_t shuffle_seed() const;
};

RunConfig load_run_config(const std::filesystem::path& path);

/// Command-line overrides; unset members leave the file's values alone.
struct Overrides {
  std::optional<std::uint64_t> seed;
  std::optional<std::string> variant;
  std::optional<std::size_t> hidden;
  std::optional<std::size_t> beam;
  std::optional<std::size_t> max_len;
  bool strict = false;
};

void apply(RunConfig& cfg, const Overrides& o);

/// Fixed layout under the output directory.
struct Layout {
  std::filesystem::path root;

  std::filesystem::path vocabs() const { return root / "vocabs"; }
  std::filesystem::path word_vocab() const { return vocabs() / "words.txt"; }
  std::filesystem::path char_vocab() const { return vocabs() / "chars.txt"; }
  std::filesystem::path manifests() const { return root / "manifests"; }
  std::filesystem::path manifest(const std::string& split) const { return manifests() / (split + ".jsonl"); }
  std::filesystem::path summary() const { return manifests() / "summary.json"; }
  std::filesystem::path checkpoints() const { return root / "checkpoints"; }
  std::filesystem::path checkpoint(const std::string& name) const { return checkpoints() / (name + ".ckpt"); }
  std::filesystem::path logs() const { return root / "logs"; }
  std::filesystem::path train_log() const { return logs() / "train.jsonl"; }
  std::filesystem::path reports() const { return root / "reports"; }
};

}  // namespace slangdef::cli
