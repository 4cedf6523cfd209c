#pragma once

#include <cstdint>
#include <filesystem>
#include <limits>

#include "slangdef/model.hpp"
#include "slangdef/vocab.hpp"

namespace slangdef {

inline constexpr std::uint32_t kCheckpointVersion = 1;

/// Where training stood when the checkpoint was written; lets a run resume
/// with its epoch numbering and learning-rate schedule intact.
struct TrainProgress {
  std::uint64_t epoch = 0;  ///< completed epochs
  std::uint64_t step = 0;   ///< completed updates
  double lr = 0.0;
  double best_dev_loss = std::numeric_limits<double>::infinity();
  std::uint64_t epochs_since_improvement = 0;

  friend bool operator==(const TrainProgress&, const TrainProgress&) = default;
};

struct CheckpointMeta {
  std::uint64_t word_vocab_hash = 0;
  std::uint64_t char_vocab_hash = 0;  ///< 0 when the variant has no character vocabulary
  std::uint64_t seed = 0;
  TrainProgress progress;
};

struct LoadedCheckpoint {
  DualEncoderModel model;
  CheckpointMeta meta;
};

/// Binary layout, all integers and floats little-endian:
///
///   magic      8 bytes  "SLGDCKPT"
///   version    u32
///   variant    u32      0 single, 1 dual, 2 char
///   dims       7 x u64  hidden, word_embed, char_embed, attn, layers,
///                       word_vocab, char_vocab
///   hashes     2 x u64  word vocab, char vocab
///   seed       u64
///   progress   u64 epoch, u64 step, f64 lr, f64 best_dev_loss,
///              u64 epochs_since_improvement
///   count      u32      number of parameter blocks
///   blocks     count x { u32 name_len, name bytes, u64 rows, u64 cols,
///                        rows*cols x f64 }
///   checksum   u64      FNV-1a over every preceding byte
///
/// The file is written to a sibling temporary and renamed into place.
void save_checkpoint(const std::filesystem::path& path, const DualEncoderModel& model,
                     const CheckpointMeta& meta);

/// Throws CheckpointError on a bad magic, version, checksum, truncation or
/// a parameter block that does not fit the declared dimensions. No model is
/// constructed unless the whole file validates.
LoadedCheckpoint load_checkpoint(const std::filesystem::path& path);

/// As above, and additionally rejects the checkpoint unless its vocabulary
/// hashes and sizes match the supplied vocabularies. `chars` may be null for
/// the single-encoder variant.
LoadedCheckpoint load_checkpoint(const std::filesystem::path& path, const Vocabulary& words,
                                 const Vocabulary* chars);

}  // namespace slangdef
