#include "slangdef/layers.hpp"

#include <string>

#include "slangdef/errors.hpp"

namespace slangdef {

namespace {

void require_row_width(const Matrix& v, std::size_t width, const char* what) {
  if (v.rows() != 1 || v.cols() != width) {
    throw ShapeError(std::string(what) + ": expected 1x" + std::to_string(width) + ", got " +
                     v.shape_string());
  }
}

}  // namespace

LstmCellParams LstmCellParams::zeros(std::size_t input_dim, std::size_t hidden_dim) {
  const std::size_t rows = input_dim + hidden_dim;
  return {Matrix(rows, hidden_dim), Matrix(rows, hidden_dim), Matrix(rows, hidden_dim),
          Matrix(rows, hidden_dim)};
}

LstmCellParams LstmCellParams::random(std::size_t input_dim, std::size_t hidden_dim, Rng& rng,
                                      double scale) {
  const std::size_t rows = input_dim + hidden_dim;
  LstmCellParams p;
  p.w_i = random_uniform(rows, hidden_dim, -scale, scale, rng);
  p.w_f = random_uniform(rows, hidden_dim, -scale, scale, rng);
  p.w_o = random_uniform(rows, hidden_dim, -scale, scale, rng);
  p.w_c = random_uniform(rows, hidden_dim, -scale, scale, rng);
  return p;
}

void LstmCellParams::validate() const {
  if (w_i.empty() || w_i.rows() <= w_i.cols()) {
    throw ShapeError("LSTM gate matrix must be (input + hidden) x hidden, got " + w_i.shape_string());
  }
  for (const Matrix* w : {&w_f, &w_o, &w_c}) {
    if (!w->same_shape(w_i)) {
      throw ShapeError("LSTM gate matrices differ in shape: " + w_i.shape_string() + " vs " +
                       w->shape_string());
    }
  }
}

LstmState LstmState::zeros(std::size_t hidden_dim) {
  return {Matrix(1, hidden_dim), Matrix(1, hidden_dim)};
}

LstmStep lstm_step(const LstmCellParams& params, const Matrix& x, const LstmState& prev) {
  const std::size_t hidden = params.hidden_dim();
  require_row_width(x, params.input_dim(), "lstm_step input");
  require_row_width(prev.h, hidden, "lstm_step h");
  require_row_width(prev.m, hidden, "lstm_step m");

  LstmStep step;
  LstmStepCache& c = step.cache;
  c.concat = hconcat(x, prev.h);
  c.i = sigmoid(matmul(c.concat, params.w_i));
  c.f = sigmoid(matmul(c.concat, params.w_f));
  c.o = sigmoid(matmul(c.concat, params.w_o));
  c.c_tilde = tanh(matmul(c.concat, params.w_c));
  c.m_prev = prev.m;
  c.m = Matrix(1, hidden);
  Matrix h(1, hidden);
  for (std::size_t k = 0; k < hidden; ++k) {
    c.m[k] = prev.m[k] * c.f[k] + c.i[k] * c.c_tilde[k];
    h[k] = c.m[k] * c.o[k];
  }
  step.next = {std::move(h), c.m};
  return step;
}

LstmStepGrad lstm_step_backward(const LstmCellParams& params, const LstmStepCache& cache,
                                const Matrix& dh, const Matrix& dm, LstmCellParams& grads) {
  const std::size_t hidden = params.hidden_dim();
  require_row_width(dh, hidden, "lstm_step_backward dh");
  require_row_width(dm, hidden, "lstm_step_backward dm");

  Matrix dz_i(1, hidden), dz_f(1, hidden), dz_o(1, hidden), dz_c(1, hidden);
  LstmStepGrad out;
  out.dm_prev = Matrix(1, hidden);
  for (std::size_t k = 0; k < hidden; ++k) {
    const double i = cache.i[k], f = cache.f[k], o = cache.o[k], ct = cache.c_tilde[k];
    const double dm_total = dm[k] + dh[k] * o;
    const double d_o = dh[k] * cache.m[k];
    const double d_f = dm_total * cache.m_prev[k];
    const double d_i = dm_total * ct;
    const double d_c = dm_total * i;
    out.dm_prev[k] = dm_total * f;
    dz_i[k] = d_i * i * (1.0 - i);
    dz_f[k] = d_f * f * (1.0 - f);
    dz_o[k] = d_o * o * (1.0 - o);
    dz_c[k] = d_c * (1.0 - ct * ct);
  }

  add_matmul_tn(grads.w_i, cache.concat, dz_i);
  add_matmul_tn(grads.w_f, cache.concat, dz_f);
  add_matmul_tn(grads.w_o, cache.concat, dz_o);
  add_matmul_tn(grads.w_c, cache.concat, dz_c);

  Matrix dconcat = matmul_nt(dz_i, params.w_i);
  dconcat += matmul_nt(dz_f, params.w_f);
  dconcat += matmul_nt(dz_o, params.w_o);
  dconcat += matmul_nt(dz_c, params.w_c);

  const std::size_t input = params.input_dim();
  out.dx = slice_cols(dconcat, 0, input);
  out.dh_prev = slice_cols(dconcat, input, hidden);
  return out;
}

LstmSequence lstm_encode(const LstmCellParams& params, std::span<const Matrix> inputs,
                         const LstmState& init) {
  if (inputs.empty()) throw ShapeError("lstm_encode: empty input sequence");
  LstmSequence seq;
  seq.states.reserve(inputs.size());
  seq.caches.reserve(inputs.size());
  LstmState state = init;
  for (const Matrix& x : inputs) {
    LstmStep step = lstm_step(params, x, state);
    seq.states.push_back(step.next.h);
    seq.caches.push_back(std::move(step.cache));
    state = std::move(step.next);
  }
  seq.final = std::move(state);
  return seq;
}

LstmBackward lstm_backward_accumulate(const LstmCellParams& params,
                                      std::span<const LstmStepCache> caches,
                                      std::span<const Matrix> grad_states,
                                      const LstmState& grad_final, LstmCellParams& grads) {
  if (caches.empty()) throw ShapeError("lstm_backward: empty cache");
  if (grad_states.size() != caches.size()) {
    throw ShapeError("lstm_backward: " + std::to_string(grad_states.size()) +
                     " state gradients for " + std::to_string(caches.size()) + " steps");
  }
  const std::size_t steps = caches.size();
  LstmBackward out;
  out.inputs.resize(steps);
  Matrix dh_carry = grad_final.h;
  Matrix dm_carry = grad_final.m;
  for (std::size_t t = steps; t-- > 0;) {
    Matrix dh = grad_states[t] + dh_carry;
    LstmStepGrad g = lstm_step_backward(params, caches[t], dh, dm_carry, grads);
    out.inputs[t] = std::move(g.dx);
    dh_carry = std::move(g.dh_prev);
    dm_carry = std::move(g.dm_prev);
  }
  out.init = {std::move(dh_carry), std::move(dm_carry)};
  return out;
}

LstmBackward lstm_backward(const LstmCellParams& params, std::span<const LstmStepCache> caches,
                           std::span<const Matrix> grad_states, const LstmState& grad_final) {
  params.validate();
  LstmCellParams grads = LstmCellParams::zeros(params.input_dim(), params.hidden_dim());
  LstmBackward out = lstm_backward_accumulate(params, caches, grad_states, grad_final, grads);
  out.params = std::move(grads);
  return out;
}

std::vector<Matrix> embed(const EmbeddingTable& table, std::span<const TokenId> ids) {
  std::vector<Matrix> rows;
  rows.reserve(ids.size());
  for (TokenId id : ids) {
    if (id >= table.vocab_size()) {
      throw RangeError("embed: token id " + std::to_string(id) + " outside table of " +
                       std::to_string(table.vocab_size()) + " rows");
    }
    rows.push_back(table.table.row_at(id));
  }
  return rows;
}

void embed_backward(EmbeddingTable& table_grad, std::span<const TokenId> ids,
                    std::span<const Matrix> grads) {
  if (ids.size() != grads.size()) {
    throw ShapeError("embed_backward: " + std::to_string(ids.size()) + " ids but " +
                     std::to_string(grads.size()) + " gradients");
  }
  const std::size_t dim = table_grad.dim();
  for (std::size_t t = 0; t < ids.size(); ++t) {
    if (ids[t] >= table_grad.vocab_size()) {
      throw RangeError("embed_backward: token id " + std::to_string(ids[t]) + " out of range");
    }
    require_row_width(grads[t], dim, "embed_backward gradient");
    for (std::size_t k = 0; k < dim; ++k) table_grad.table(ids[t], k) += grads[t][k];
  }
}

Matrix project(const Projection& p, const Matrix& s) {
  Matrix logits = matmul(s, p.w);
  logits += p.b;
  return logits;
}

Matrix project_backward(const Projection& p, const Matrix& s, const Matrix& dlogits,
                        Projection& grads) {
  add_matmul_tn(grads.w, s, dlogits);
  grads.b += dlogits;
  return matmul_nt(dlogits, p.w);
}

}  // namespace slangdef
