#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "slangdef/attention.hpp"
#include "slangdef/layers.hpp"
#include "slangdef/matrix.hpp"
#include "slangdef/types.hpp"

namespace slangdef {

enum class Variant : std::uint32_t {
  SingleEncoder = 0,  ///< word-level context encoder only
  DualEncoder = 1,    ///< word-level context encoder + character-level target encoder
  FullCharLevel = 2,  ///< character-level context encoder only
};

/// "single", "dual", "char"
std::string_view variant_name(Variant v);
/// Inverse of variant_name; throws std::invalid_argument on anything else.
Variant parse_variant(std::string_view name);

struct ModelConfig {
  Variant variant = Variant::DualEncoder;
  std::size_t hidden = 32;
  std::size_t word_embed = 0;  ///< 0 means "same as hidden"
  std::size_t char_embed = 0;  ///< 0 means "same as hidden"
  std::size_t attn = 0;        ///< 0 means "same as hidden"
  std::size_t layers = 1;
  std::size_t word_vocab = 0;
  std::size_t char_vocab = 0;

  /// Copy with the zero ("same as hidden") sizes filled in.
  ModelConfig resolved() const;
  /// Throws std::invalid_argument when sizes are inconsistent with the variant.
  void validate() const;

  bool uses_char_vocab() const noexcept { return variant != Variant::SingleEncoder; }
  bool has_target_encoder() const noexcept { return variant == Variant::DualEncoder; }

  friend bool operator==(const ModelConfig&, const ModelConfig&) = default;
};

/// Affine fusion of the two encoder summaries: h_new = h1 W1 + h2 W2 + B.
struct FusionParams {
  Matrix w1;    ///< hidden x hidden, context side
  Matrix w2;    ///< hidden x hidden, target-expression side
  Matrix bias;  ///< 1 x hidden

  static FusionParams zeros(std::size_t hidden);
  /// W1 = I, W2 = 0, B = 0: passes the context representation through.
  static FusionParams identity(std::size_t hidden);
  static FusionParams random(std::size_t hidden, Rng& rng, double scale);
};

Matrix fuse(const Matrix& h1, const Matrix& h2, const FusionParams& p);

struct FusionGrad {
  Matrix h1;
  Matrix h2;
};

/// Accumulates into `grads`; returns the gradients on both inputs.
FusionGrad fuse_backward(const FusionParams& p, const Matrix& h1, const Matrix& h2,
                         const Matrix& grad_out, FusionParams& grads);

/// Every learnable matrix of the model. Groups that a variant does not use
/// are left empty (char_embedding for SingleEncoder; target_encoder and the
/// fusion groups for everything but DualEncoder).
///
/// The same struct carries gradients (see zeros_like).
struct ModelParams {
  EmbeddingTable word_embedding;  ///< context words (word variants) and decoder inputs
  EmbeddingTable char_embedding;  ///< target expression, or the context for FullCharLevel
  std::vector<LstmCellParams> context_encoder;
  std::vector<LstmCellParams> target_encoder;
  std::vector<FusionParams> fusion_h;  ///< per layer, fuses final hidden states
  std::vector<FusionParams> fusion_m;  ///< per layer, fuses final cell memories
  std::vector<LstmCellParams> decoder;
  AttentionParams attention;
  Projection output;  ///< (2 * hidden) x word_vocab
};

struct NamedMatrix {
  std::string name;
  Matrix* value;
};

struct ConstNamedMatrix {
  std::string name;
  const Matrix* value;
};

/// Stable, deterministic ordering of all non-empty parameter matrices.
std::vector<NamedMatrix> named_parameters(ModelParams& params);
std::vector<ConstNamedMatrix> named_parameters(const ModelParams& params);
ModelParams zeros_like(const ModelParams& params);
std::size_t parameter_count(const ModelParams& params);

/// The dual-encoder attentive sequence-to-sequence explainer, plus the
/// single-encoder and full-character-level baselines selected by
/// ModelConfig::variant.
///
/// The decoder starts from the fused encoder state (or the context encoder's
/// final state for the baselines). At step t its input is
/// [embedding(y_{t-1}), d'_{t-1}], where d'_{t-1} is the previous attention
/// context (zeros at t = 0). Attention reads the context encoder's top-layer
/// states only, and the output projection consumes [d'_t, d_t].
class DualEncoderModel {
 public:
  /// Parameters drawn uniformly from [-scale, scale].
  static DualEncoderModel random(const ModelConfig& config, std::uint64_t seed,
                                 double scale = kInitScale);
  static DualEncoderModel zeros(const ModelConfig& config);
  /// Takes ownership of `params`; throws ShapeError if they do not fit `config`.
  static DualEncoderModel from_params(const ModelConfig& config, ModelParams params);

  const ModelConfig& config() const noexcept { return config_; }
  const ModelParams& params() const noexcept { return params_; }
  /// Mutable access. Invalidates outstanding forward caches.
  ModelParams& mutable_params() noexcept {
    ++generation_;
    return params_;
  }
  /// theta <- theta - lr * grads
  void apply_gradient(const ModelParams& grads, double lr);
  std::uint64_t generation() const noexcept { return generation_; }

  const EmbeddingTable& context_embedding() const noexcept {
    return config_.variant == Variant::FullCharLevel ? params_.char_embedding
                                                     : params_.word_embedding;
  }

 private:
  DualEncoderModel(ModelConfig config, ModelParams params);

  ModelConfig config_;
  ModelParams params_;
  std::uint64_t generation_ = 0;
};

/// Throws ShapeError unless `params` has exactly the shapes `config` implies.
void validate_params(const ModelConfig& config, const ModelParams& params);

/// Per-layer encoder pass; layer l reads layer l-1's hidden states.
struct StackedEncoding {
  std::vector<LstmSequence> layers;

  const std::vector<Matrix>& top_states() const { return layers.back().states; }
};

StackedEncoding encode_stack(std::span<const LstmCellParams> params, std::span<const Matrix> inputs);

/// Backward through encode_stack. `grad_top` holds per-step gradients on the
/// top layer's states; `grad_final` per-layer gradients on the final states.
/// Returns gradients on the inputs.
std::vector<Matrix> encode_stack_backward(std::span<const LstmCellParams> params,
                                          const StackedEncoding& encoding,
                                          std::span<const Matrix> grad_top,
                                          std::span<const LstmState> grad_final,
                                          std::span<LstmCellParams> grads);

struct DecoderState {
  std::vector<LstmState> layers;
  Matrix context;  ///< previous attention context d'_{t-1}
};

/// Everything computed before the first decoder step.
struct Encoding {
  StackedEncoding context;
  StackedEncoding target;  ///< empty unless DualEncoder
  AttentionMemory memory;
  DecoderState initial;
};

/// Runs the encoders and builds the decoder's initial state. Throws
/// ShapeError on an empty context (or empty target for DualEncoder).
Encoding encode(const DualEncoderModel& model, std::span<const TokenId> context_ids,
                std::span<const TokenId> target_char_ids);

struct DecoderStepCache {
  TokenId input_token = 0;
  Matrix input_context;
  std::vector<LstmStepCache> layers;
  AttentionCache attention;
  Matrix combined;
};

struct DecoderStep {
  DecoderState next;
  Matrix logits;
  DecoderStepCache cache;
};

/// One decoder step fed with the previous output token.
DecoderStep decoder_step(const DualEncoderModel& model, const AttentionMemory& memory,
                         const DecoderState& state, TokenId prev_token);

struct ForwardCache {
  std::uint64_t generation = 0;
  const DualEncoderModel* model = nullptr;
  std::vector<TokenId> context_ids;
  std::vector<TokenId> target_char_ids;
  Encoding encoding;
  std::vector<DecoderStepCache> steps;
  std::vector<Matrix> grad_logits;  ///< softmax - onehot per step
};

struct ForwardResult {
  double loss = 0.0;            ///< summed cross-entropy over all predictions
  std::size_t predictions = 0;  ///< output length + 1 (the EOS)
  std::vector<Matrix> logits;
  ForwardCache cache;
};

/// Teacher-forced pass over BOS + output_ids predicting output_ids + EOS.
ForwardResult forward(const DualEncoderModel& model, const SequencePair& pair);

/// Loss only; skips building the backward cache.
double forward_loss(const DualEncoderModel& model, const SequencePair& pair);

/// Accumulates dL/dtheta for the cached pass into `grads`. Throws
/// StaleCacheError if the model changed since the forward pass.
void backward(const DualEncoderModel& model, const ForwardCache& cache, ModelParams& grads);

/// forward + backward into `grads`; returns the summed loss.
double loss_and_gradient(const DualEncoderModel& model, const SequencePair& pair,
                         ModelParams& grads);

}  // namespace slangdef
