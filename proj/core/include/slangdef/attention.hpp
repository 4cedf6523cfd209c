#pragma once

#include <span>
#include <vector>

#include "slangdef/matrix.hpp"
#include "slangdef/random.hpp"

namespace slangdef {

/// Parameters of additive attention
///   u_i = v^T tanh(h_i W_enc + d_t W_dec),  a = softmax(u),  d'_t = sum_i a_i h_i.
struct AttentionParams {
  Matrix w_enc;  ///< hidden x attn, applied to encoder states
  Matrix w_dec;  ///< hidden x attn, applied to the decoder state
  Matrix v;      ///< attn x 1

  static AttentionParams random(std::size_t hidden, std::size_t attn, Rng& rng, double scale);
  static AttentionParams zeros(std::size_t hidden, std::size_t attn);
  std::size_t hidden_dim() const noexcept { return w_enc.rows(); }
  std::size_t attn_dim() const noexcept { return w_enc.cols(); }
  void validate() const;
};

/// Encoder states with their projections h_i W_enc precomputed. The
/// projection does not depend on the decoder step, so one memory serves
/// every step of a decode.
struct AttentionMemory {
  Matrix states;  ///< T x hidden
  Matrix keys;    ///< T x attn

  std::size_t length() const noexcept { return states.rows(); }
};

AttentionMemory make_memory(const AttentionParams& params, std::span<const Matrix> encoder_states);

struct AttentionCache {
  Matrix decoder_state;  ///< d_t
  Matrix scores_hidden;  ///< tanh(keys + d_t W_dec), T x attn
  Matrix weights;        ///< 1 x T
};

struct AttentionOutput {
  Matrix weights;   ///< 1 x T, sums to one
  Matrix context;   ///< d'_t, 1 x hidden
  Matrix combined;  ///< [d'_t, d_t], 1 x 2*hidden
  AttentionCache cache;
};

AttentionOutput attend(const AttentionParams& params, const AttentionMemory& memory,
                       const Matrix& decoder_state);
/// Convenience overload that builds the memory on the fly.
AttentionOutput attend(const AttentionParams& params, std::span<const Matrix> encoder_states,
                       const Matrix& decoder_state);

/// Gradients w.r.t. the memory rather than the raw encoder states; see
/// memory_backward for the final step.
struct MemoryGrad {
  Matrix states;  ///< T x hidden
  Matrix keys;    ///< T x attn

  static MemoryGrad zeros(const AttentionMemory& memory);
};

/// Backward of one attend call given dL/d(combined). Accumulates into
/// `grads` (w_dec and v) and `memory_grad`; returns dL/d(decoder_state).
Matrix attend_backward(const AttentionParams& params, const AttentionMemory& memory,
                       const AttentionCache& cache, const Matrix& grad_combined,
                       AttentionParams& grads, MemoryGrad& memory_grad);

/// Folds key gradients back through W_enc: accumulates grads.w_enc and
/// returns dL/dh_i for every encoder state (rows of the result).
Matrix memory_backward(const AttentionParams& params, const AttentionMemory& memory,
                       const MemoryGrad& memory_grad, AttentionParams& grads);

struct AttentionBackward {
  AttentionParams params;
  std::vector<Matrix> encoder_states;
  Matrix decoder_state;
};

/// Self-contained backward for a single attend over raw encoder states.
AttentionBackward attend_backward(const AttentionParams& params,
                                  std::span<const Matrix> encoder_states,
                                  const AttentionOutput& output, const Matrix& grad_combined);

}  // namespace slangdef
