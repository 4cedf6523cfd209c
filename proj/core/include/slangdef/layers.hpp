#pragma once

#include <span>
#include <vector>

#include "slangdef/matrix.hpp"
#include "slangdef/random.hpp"
#include "slangdef/types.hpp"

namespace slangdef {

/// Default half-width of the uniform parameter initializer.
inline constexpr double kInitScale = 0.08;

/// Gate weights of one LSTM cell. Each matrix maps the concatenation
/// [x_t, h_{t-1}] (width input + hidden) to hidden units.
///
/// There are no gate biases: the cell computes exactly
///   i = sigma([x,h] W_i), f = sigma([x,h] W_f), o = sigma([x,h] W_o),
///   c~ = tanh([x,h] W_c), m_t = m_{t-1} * f + i * c~, h_t = m_t * o
/// and in particular h_t is not squashed by a second tanh.
struct LstmCellParams {
  Matrix w_i;
  Matrix w_f;
  Matrix w_o;
  Matrix w_c;

  static LstmCellParams zeros(std::size_t input_dim, std::size_t hidden_dim);
  static LstmCellParams random(std::size_t input_dim, std::size_t hidden_dim, Rng& rng,
                               double scale = kInitScale);

  std::size_t hidden_dim() const noexcept { return w_i.cols(); }
  std::size_t input_dim() const noexcept { return w_i.rows() - w_i.cols(); }
  /// Throws ShapeError unless all four gates share one valid shape.
  void validate() const;
};

struct LstmState {
  Matrix h;  ///< hidden state, 1 x hidden
  Matrix m;  ///< cell memory, 1 x hidden

  static LstmState zeros(std::size_t hidden_dim);
};

/// Intermediates of one lstm_step, consumed by lstm_step_backward.
struct LstmStepCache {
  Matrix concat;  ///< [x_t, h_{t-1}]
  Matrix i, f, o, c_tilde;
  Matrix m_prev;
  Matrix m;
};

struct LstmStep {
  LstmState next;
  LstmStepCache cache;
};

LstmStep lstm_step(const LstmCellParams& params, const Matrix& x, const LstmState& prev);

struct LstmStepGrad {
  Matrix dx;
  Matrix dh_prev;
  Matrix dm_prev;
};

/// Backward through one step given the total gradient on h_t and m_t.
/// Parameter gradients are accumulated into `grads`.
LstmStepGrad lstm_step_backward(const LstmCellParams& params, const LstmStepCache& cache,
                                const Matrix& dh, const Matrix& dm, LstmCellParams& grads);

struct LstmSequence {
  std::vector<Matrix> states;  ///< h_1 .. h_T
  LstmState final;
  std::vector<LstmStepCache> caches;
};

/// Runs the cell over `inputs` starting from `init`. Throws ShapeError on an
/// empty sequence.
LstmSequence lstm_encode(const LstmCellParams& params, std::span<const Matrix> inputs,
                         const LstmState& init);

struct LstmBackward {
  LstmCellParams params;       ///< parameter gradients
  std::vector<Matrix> inputs;  ///< dL/dx_t per step
  LstmState init;              ///< dL/d(initial h, m)
};

/// Backpropagation through time over a full lstm_encode pass.
///
/// `grad_states[t]` is the upstream gradient on h_{t+1} (zero if unused);
/// `grad_final` carries any additional gradient on the final (h, m).
LstmBackward lstm_backward(const LstmCellParams& params, std::span<const LstmStepCache> caches,
                           std::span<const Matrix> grad_states, const LstmState& grad_final);

/// Same as lstm_backward but accumulates parameter gradients into `grads`
/// and returns only the input and initial-state gradients.
LstmBackward lstm_backward_accumulate(const LstmCellParams& params,
                                      std::span<const LstmStepCache> caches,
                                      std::span<const Matrix> grad_states,
                                      const LstmState& grad_final, LstmCellParams& grads);

/// vocab_size x embed_dim lookup table.
struct EmbeddingTable {
  Matrix table;

  std::size_t vocab_size() const noexcept { return table.rows(); }
  std::size_t dim() const noexcept { return table.cols(); }
};

std::vector<Matrix> embed(const EmbeddingTable& table, std::span<const TokenId> ids);
/// table_grad.row(ids[t]) += grads[t]
void embed_backward(EmbeddingTable& table_grad, std::span<const TokenId> ids,
                    std::span<const Matrix> grads);

/// Affine output layer: logits = s W + b.
struct Projection {
  Matrix w;
  Matrix b;
};

Matrix project(const Projection& p, const Matrix& s);
/// Accumulates dW, db into `grads`; returns dL/ds.
Matrix project_backward(const Projection& p, const Matrix& s, const Matrix& dlogits,
                        Projection& grads);

}  // namespace slangdef
