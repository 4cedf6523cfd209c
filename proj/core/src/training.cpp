#include "slangdef/training.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <numeric>
#include <spdlog/spdlog.h>
#include <stdexcept>
#include <string>

#include "slangdef/errors.hpp"
#include "slangdef/random.hpp"

namespace slangdef {

void TrainConfig::validate() const {
  if (!(initial_lr >= 0.0) || !std::isfinite(initial_lr)) {
    throw std::invalid_argument("train: initial_lr must be finite and >= 0");
  }
  if (!(lr_decay > 0.0 && lr_decay < 1.0)) throw std::invalid_argument("train: lr_decay must lie in (0, 1)");
  if (patience == 0) throw std::invalid_argument("train: patience must be positive");
  if (!(clip_norm > 0.0)) throw std::invalid_argument("train: clip_norm must be positive");
  if (batch_size == 0) throw std::invalid_argument("train: batch_size must be positive");
  if (max_epochs == 0) throw std::invalid_argument("train: max_epochs must be positive");
  if (!(min_lr > 0.0)) throw std::invalid_argument("train: min_lr must be positive");
}

double global_norm(const ModelParams& grads) {
  double total = 0.0;
  for (const auto& [name, m] : named_parameters(grads)) total += squared_norm(*m);
  return std::sqrt(total);
}

void scale(ModelParams& grads, double factor) {
  for (auto& [name, m] : named_parameters(grads)) *m *= factor;
}

double clip_global_norm(ModelParams& grads, double max_norm) {
  const double norm = global_norm(grads);
  if (norm > max_norm) scale(grads, max_norm / norm);
  return norm;
}

double evaluate_loss(const DualEncoderModel& model, std::span<const SequencePair> pairs) {
  if (pairs.empty()) throw std::invalid_argument("evaluate_loss: empty pair set");
  double total = 0.0;
  std::size_t tokens = 0;
  for (const auto& pair : pairs) {
    total += forward_loss(model, pair);
    tokens += pair.output_ids.size() + 1;
  }
  return total / static_cast<double>(tokens);
}

std::vector<std::vector<std::size_t>> make_batches(std::span<const SequencePair> pairs,
                                                   std::size_t batch_size, std::uint64_t seed,
                                                   std::size_t epoch) {
  if (batch_size == 0) throw std::invalid_argument("make_batches: batch_size must be positive");
  std::vector<std::size_t> order(pairs.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return pairs[a] < pairs[b]; });

  Rng rng(derive_seed(seed, "shuffle-epoch-" + std::to_string(epoch)));
  shuffle(std::span<std::size_t>(order), rng);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return pairs[a].context_ids.size() < pairs[b].context_ids.size();
  });

  std::vector<std::vector<std::size_t>> batches;
  for (std::size_t start = 0; start < order.size(); start += batch_size) {
    const std::size_t end = std::min(order.size(), start + batch_size);
    batches.emplace_back(order.begin() + static_cast<std::ptrdiff_t>(start),
                         order.begin() + static_cast<std::ptrdiff_t>(end));
  }
  shuffle(std::span<std::vector<std::size_t>>(batches), rng);
  return batches;
}

bool update_schedule(TrainProgress& progress, double monitored_loss, const TrainConfig& cfg) {
  if (monitored_loss < progress.best_dev_loss) {
    progress.best_dev_loss = monitored_loss;
    progress.epochs_since_improvement = 0;
    return true;
  }
  if (++progress.epochs_since_improvement >= cfg.patience) {
    progress.lr *= cfg.lr_decay;
    progress.epochs_since_improvement = 0;
  }
  return false;
}

namespace {

std::string batch_ids(const std::vector<std::size_t>& batch) {
  std::string out;
  for (std::size_t i = 0; i < batch.size(); ++i) out += (i ? "," : "") + std::to_string(batch[i]);
  return out;
}

}  // namespace

TrainState train(DualEncoderModel& model, std::span<const SequencePair> train_pairs,
                 std::span<const SequencePair> dev_pairs, const TrainConfig& cfg,
                 const EpochCallback& on_epoch, std::optional<TrainProgress> resume) {
  cfg.validate();
  if (train_pairs.empty()) throw std::invalid_argument("train: empty training set");

  TrainState state;
  if (resume) {
    state.progress = *resume;
  } else {
    state.progress.lr = cfg.initial_lr;
  }

  while (state.progress.epoch < cfg.max_epochs) {
    if (state.progress.lr < cfg.min_lr && state.progress.epoch > 0) {
      state.stopped_on_min_lr = true;
      break;
    }
    const auto started = std::chrono::steady_clock::now();
    const std::size_t epoch = state.progress.epoch + 1;
    const double lr = state.progress.lr;

    double epoch_loss = 0.0;
    std::size_t epoch_tokens = 0;
    for (const auto& batch : make_batches(train_pairs, cfg.batch_size, cfg.seed, epoch)) {
      ModelParams grads = zeros_like(model.params());
      double batch_loss = 0.0;
      for (std::size_t i : batch) {
        batch_loss += loss_and_gradient(model, train_pairs[i], grads);
        epoch_tokens += train_pairs[i].output_ids.size() + 1;
      }
      scale(grads, 1.0 / static_cast<double>(batch.size()));
      const double norm = clip_global_norm(grads, cfg.clip_norm);
      if (!std::isfinite(batch_loss) || !std::isfinite(norm)) {
        throw NumericError("non-finite " + std::string(std::isfinite(batch_loss) ? "gradient" : "loss") +
                           " at step " + std::to_string(state.progress.step + 1) + " (epoch " +
                           std::to_string(epoch) + ", lr " + std::to_string(lr) + ", batch pairs [" +
                           batch_ids(batch) + "])");
      }
      model.apply_gradient(grads, lr);
      epoch_loss += batch_loss;
      ++state.progress.step;
    }

    EpochRecord record;
    record.epoch = epoch;
    record.train_loss = epoch_loss / static_cast<double>(epoch_tokens);
    record.lr = lr;
    if (!dev_pairs.empty()) record.dev_loss = evaluate_loss(model, dev_pairs);
    const double monitored = record.dev_loss.value_or(record.train_loss);
    if (!std::isfinite(monitored)) {
      throw NumericError("non-finite monitored loss after epoch " + std::to_string(epoch) + " (lr " +
                         std::to_string(lr) + ")");
    }

    const bool improved = update_schedule(state.progress, monitored, cfg);
    state.progress.epoch = epoch;
    record.seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
    state.history.push_back(record);
    spdlog::info("epoch {} train {:.5f} dev {} lr {:.5g} ({:.1f}s)", epoch, record.train_loss,
                 record.dev_loss ? fmt::format("{:.5f}", *record.dev_loss) : std::string("-"), lr,
                 record.seconds);
    if (on_epoch) on_epoch(model, state, improved);
  }
  if (state.progress.lr < cfg.min_lr) state.stopped_on_min_lr = true;
  return state;
}

}  // namespace slangdef
