#include "slangdef/attention.hpp"

#include <cmath>
#include <string>

#include "slangdef/errors.hpp"

namespace slangdef {

AttentionParams AttentionParams::random(std::size_t hidden, std::size_t attn, Rng& rng,
                                        double scale) {
  AttentionParams p;
  p.w_enc = random_uniform(hidden, attn, -scale, scale, rng);
  p.w_dec = random_uniform(hidden, attn, -scale, scale, rng);
  p.v = random_uniform(attn, 1, -scale, scale, rng);
  return p;
}

AttentionParams AttentionParams::zeros(std::size_t hidden, std::size_t attn) {
  return {Matrix(hidden, attn), Matrix(hidden, attn), Matrix(attn, 1)};
}

void AttentionParams::validate() const {
  if (!w_enc.same_shape(w_dec)) {
    throw ShapeError("attention: W_enc " + w_enc.shape_string() + " and W_dec " +
                     w_dec.shape_string() + " differ");
  }
  if (v.rows() != w_enc.cols() || v.cols() != 1) {
    throw ShapeError("attention: v must be " + std::to_string(w_enc.cols()) + "x1, got " +
                     v.shape_string());
  }
}

AttentionMemory make_memory(const AttentionParams& params, std::span<const Matrix> encoder_states) {
  if (encoder_states.empty()) throw ShapeError("attention: empty encoder sequence");
  params.validate();
  AttentionMemory memory;
  memory.states = stack_rows(encoder_states);
  if (memory.states.cols() != params.hidden_dim()) {
    throw ShapeError("attention: encoder states are " + memory.states.shape_string() +
                     " but W_enc expects width " + std::to_string(params.hidden_dim()));
  }
  memory.keys = matmul(memory.states, params.w_enc);
  return memory;
}

AttentionOutput attend(const AttentionParams& params, const AttentionMemory& memory,
                       const Matrix& decoder_state) {
  if (memory.length() == 0) throw ShapeError("attention: empty encoder sequence");
  if (decoder_state.rows() != 1 || decoder_state.cols() != params.hidden_dim()) {
    throw ShapeError("attention: decoder state must be 1x" + std::to_string(params.hidden_dim()) +
                     ", got " + decoder_state.shape_string());
  }
  const std::size_t steps = memory.length();
  const std::size_t attn = params.attn_dim();
  const Matrix query = matmul(decoder_state, params.w_dec);

  AttentionOutput out;
  AttentionCache& cache = out.cache;
  cache.decoder_state = decoder_state;
  cache.scores_hidden = Matrix(steps, attn);
  Matrix scores(1, steps);
  for (std::size_t t = 0; t < steps; ++t) {
    double u = 0.0;
    for (std::size_t k = 0; k < attn; ++k) {
      const double s = std::tanh(memory.keys(t, k) + query[k]);
      cache.scores_hidden(t, k) = s;
      u += s * params.v[k];
    }
    scores[t] = u;
  }
  cache.weights = softmax_row(scores);
  out.weights = cache.weights;
  out.context = matmul(cache.weights, memory.states);
  out.combined = hconcat(out.context, decoder_state);
  return out;
}

AttentionOutput attend(const AttentionParams& params, std::span<const Matrix> encoder_states,
                       const Matrix& decoder_state) {
  return attend(params, make_memory(params, encoder_states), decoder_state);
}

MemoryGrad MemoryGrad::zeros(const AttentionMemory& memory) {
  return {Matrix(memory.states.rows(), memory.states.cols()),
          Matrix(memory.keys.rows(), memory.keys.cols())};
}

Matrix attend_backward(const AttentionParams& params, const AttentionMemory& memory,
                       const AttentionCache& cache, const Matrix& grad_combined,
                       AttentionParams& grads, MemoryGrad& memory_grad) {
  const std::size_t hidden = params.hidden_dim();
  const std::size_t attn = params.attn_dim();
  const std::size_t steps = memory.length();
  if (grad_combined.rows() != 1 || grad_combined.cols() != 2 * hidden) {
    throw ShapeError("attend_backward: gradient must be 1x" + std::to_string(2 * hidden) +
                     ", got " + grad_combined.shape_string());
  }
  const Matrix dcontext = slice_cols(grad_combined, 0, hidden);
  Matrix ddecoder = slice_cols(grad_combined, hidden, hidden);

  // context = a * states
  const Matrix dweights = matmul_nt(dcontext, memory.states);
  add_matmul_tn(memory_grad.states, cache.weights, dcontext);

  // softmax
  double dot = 0.0;
  for (std::size_t t = 0; t < steps; ++t) dot += cache.weights[t] * dweights[t];
  Matrix dpre(steps, attn);
  for (std::size_t t = 0; t < steps; ++t) {
    const double du = cache.weights[t] * (dweights[t] - dot);
    if (du == 0.0) continue;
    for (std::size_t k = 0; k < attn; ++k) {
      const double s = cache.scores_hidden(t, k);
      grads.v[k] += s * du;
      dpre(t, k) = du * params.v[k] * (1.0 - s * s);
    }
  }
  memory_grad.keys += dpre;

  const Matrix dquery = column_sums(dpre);
  add_matmul_tn(grads.w_dec, cache.decoder_state, dquery);
  ddecoder += matmul_nt(dquery, params.w_dec);
  return ddecoder;
}

Matrix memory_backward(const AttentionParams& params, const AttentionMemory& memory,
                       const MemoryGrad& memory_grad, AttentionParams& grads) {
  add_matmul_tn(grads.w_enc, memory.states, memory_grad.keys);
  Matrix dstates = memory_grad.states;
  dstates += matmul_nt(memory_grad.keys, params.w_enc);
  return dstates;
}

AttentionBackward attend_backward(const AttentionParams& params,
                                  std::span<const Matrix> encoder_states,
                                  const AttentionOutput& output, const Matrix& grad_combined) {
  const AttentionMemory memory = make_memory(params, encoder_states);
  AttentionBackward out;
  out.params = AttentionParams::zeros(params.hidden_dim(), params.attn_dim());
  MemoryGrad memory_grad = MemoryGrad::zeros(memory);
  out.decoder_state =
      attend_backward(params, memory, output.cache, grad_combined, out.params, memory_grad);
  const Matrix dstates = memory_backward(params, memory, memory_grad, out.params);
  out.encoder_states.reserve(memory.length());
  for (std::size_t t = 0; t < memory.length(); ++t) out.encoder_states.push_back(dstates.row_at(t));
  return out;
}

}  // namespace slangdef
