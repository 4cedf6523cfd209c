#pragma once

#include <cstdint>
#include <functional>
#include <limits>
#include <optional>
#include <span>
#include <vector>

#include "slangdef/checkpoint.hpp"
#include "slangdef/model.hpp"

namespace slangdef {

struct TrainConfig {
  double initial_lr = 0.5;
  double lr_decay = 0.5;      ///< multiplier applied on a plateau, in (0, 1)
  std::size_t patience = 1;   ///< epochs without dev improvement before decaying
  double clip_norm = 5.0;     ///< global gradient norm cap; may be +inf
  std::size_t batch_size = 32;
  std::size_t max_epochs = 10;
  double min_lr = 1e-4;       ///< training stops once lr drops below this
  std::uint64_t seed = 0;     ///< batch shuffling

  /// Throws std::invalid_argument. initial_lr may be 0 (a frozen run).
  void validate() const;
};

struct EpochRecord {
  std::size_t epoch = 0;  ///< 1-based
  double train_loss = 0.0;  ///< per-token mean over the epoch's batches
  std::optional<double> dev_loss;  ///< absent when there is no dev set
  double lr = 0.0;          ///< rate used during this epoch
  double seconds = 0.0;

  friend bool operator==(const EpochRecord&, const EpochRecord&) = default;
};

struct TrainState {
  TrainProgress progress;
  std::vector<EpochRecord> history;  ///< this run's epochs only
  bool stopped_on_min_lr = false;
};

/// Called after every epoch. `improved` is true when this epoch set a new
/// best monitored loss (dev loss, or train loss without a dev set).
using EpochCallback =
    std::function<void(const DualEncoderModel& model, const TrainState& state, bool improved)>;

/// Mini-batch SGD with plateau halving.
///
/// Each step sums per-example losses over the batch, scales the gradient by
/// 1/batch, clips its global norm and applies theta -= lr * g. After each
/// epoch the dev loss is measured; `patience` epochs without improvement
/// multiply lr by lr_decay. Stops after max_epochs (counted including any
/// resumed epochs) or once lr < min_lr.
///
/// Pass `resume` to continue from a checkpoint's progress. Throws
/// NumericError on a non-finite loss or gradient, naming the step, lr and
/// batch.
TrainState train(DualEncoderModel& model, std::span<const SequencePair> train_pairs,
                 std::span<const SequencePair> dev_pairs, const TrainConfig& cfg,
                 const EpochCallback& on_epoch = {}, std::optional<TrainProgress> resume = {});

/// Summed cross-entropy over all predicted tokens divided by their count.
/// Throws std::invalid_argument on an empty set.
double evaluate_loss(const DualEncoderModel& model, std::span<const SequencePair> pairs);

/// Batches of indices into `pairs` for one epoch.
///
/// Pairs are first put in a canonical content order, so the result does not
/// depend on how the input was ordered. That order is seed-shuffled, stably
/// sorted by context length (so batches hold similar lengths), cut into
/// batches, and the batch order shuffled again.
std::vector<std::vector<std::size_t>> make_batches(std::span<const SequencePair> pairs,
                                                   std::size_t batch_size, std::uint64_t seed,
                                                   std::size_t epoch);

/// Plateau schedule step: records `monitored_loss` for a finished epoch,
/// multiplies lr by lr_decay after `patience` epochs without a strict
/// improvement, and returns whether this epoch improved on the best.
bool update_schedule(TrainProgress& progress, double monitored_loss, const TrainConfig& cfg);

/// sqrt of the sum of squares over every gradient matrix.
double global_norm(const ModelParams& grads);
/// Rescales `grads` so its global norm is at most max_norm; returns the
/// norm before clipping.
double clip_global_norm(ModelParams& grads, double max_norm);
void scale(ModelParams& grads, double factor);

}  // namespace slangdef
