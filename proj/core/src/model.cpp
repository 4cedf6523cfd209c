#include "slangdef/model.hpp"

#include <stdexcept>

#include "slangdef/errors.hpp"

namespace slangdef {

std::string_view variant_name(Variant v) {
  switch (v) {
    case Variant::SingleEncoder:
      return "single";
    case Variant::DualEncoder:
      return "dual";
    case Variant::FullCharLevel:
      return "char";
  }
  return "unknown";
}

Variant parse_variant(std::string_view name) {
  if (name == "single") return Variant::SingleEncoder;
  if (name == "dual") return Variant::DualEncoder;
  if (name == "char") return Variant::FullCharLevel;
  throw std::invalid_argument("unknown model variant '" + std::string(name) +
                              "' (expected single, dual or char)");
}

ModelConfig ModelConfig::resolved() const {
  ModelConfig c = *this;
  if (c.word_embed == 0) c.word_embed = c.hidden;
  if (c.char_embed == 0) c.char_embed = c.hidden;
  if (c.attn == 0) c.attn = c.hidden;
  return c;
}

void ModelConfig::validate() const {
  if (hidden == 0) throw std::invalid_argument("model: hidden size must be positive");
  if (layers == 0) throw std::invalid_argument("model: layer count must be positive");
  if (word_vocab <= kNumSpecials) {
    throw std::invalid_argument("model: word vocabulary must hold more than the special tokens");
  }
  if (uses_char_vocab() && char_vocab <= kNumSpecials) {
    throw std::invalid_argument(std::string("model: variant '") +
                                std::string(variant_name(variant)) +
                                "' needs a character vocabulary");
  }
}

FusionParams FusionParams::zeros(std::size_t hidden) {
  return {Matrix(hidden, hidden), Matrix(hidden, hidden), Matrix(1, hidden)};
}

FusionParams FusionParams::identity(std::size_t hidden) {
  return {Matrix::identity(hidden), Matrix(hidden, hidden), Matrix(1, hidden)};
}

FusionParams FusionParams::random(std::size_t hidden, Rng& rng, double scale) {
  FusionParams p;
  p.w1 = random_uniform(hidden, hidden, -scale, scale, rng);
  p.w2 = random_uniform(hidden, hidden, -scale, scale, rng);
  p.bias = random_uniform(1, hidden, -scale, scale, rng);
  return p;
}

Matrix fuse(const Matrix& h1, const Matrix& h2, const FusionParams& p) {
  if (h1.rows() != 1 || h2.rows() != 1 || !h1.same_shape(h2)) {
    throw ShapeError("fuse: inputs must be equal-width rows, got " + h1.shape_string() + " and " +
                     h2.shape_string());
  }
  Matrix out = matmul(h1, p.w1);
  out += matmul(h2, p.w2);
  out += p.bias;
  return out;
}

FusionGrad fuse_backward(const FusionParams& p, const Matrix& h1, const Matrix& h2,
                         const Matrix& grad_out, FusionParams& grads) {
  add_matmul_tn(grads.w1, h1, grad_out);
  add_matmul_tn(grads.w2, h2, grad_out);
  grads.bias += grad_out;
  return {matmul_nt(grad_out, p.w1), matmul_nt(grad_out, p.w2)};
}

namespace {

template <typename Params, typename Named>
std::vector<Named> collect(Params& p) {
  std::vector<Named> out;
  auto add = [&](std::string name, auto& m) {
    if (!m.empty()) out.push_back({std::move(name), &m});
  };
  auto add_cells = [&](const std::string& prefix, auto& cells) {
    for (std::size_t l = 0; l < cells.size(); ++l) {
      const std::string base = prefix + "." + std::to_string(l) + ".";
      add(base + "w_i", cells[l].w_i);
      add(base + "w_f", cells[l].w_f);
      add(base + "w_o", cells[l].w_o);
      add(base + "w_c", cells[l].w_c);
    }
  };
  auto add_fusion = [&](const std::string& prefix, auto& fusions) {
    for (std::size_t l = 0; l < fusions.size(); ++l) {
      const std::string base = prefix + "." + std::to_string(l) + ".";
      add(base + "w1", fusions[l].w1);
      add(base + "w2", fusions[l].w2);
      add(base + "bias", fusions[l].bias);
    }
  };
  add("word_embedding", p.word_embedding.table);
  add("char_embedding", p.char_embedding.table);
  add_cells("context_encoder", p.context_encoder);
  add_cells("target_encoder", p.target_encoder);
  add_fusion("fusion_h", p.fusion_h);
  add_fusion("fusion_m", p.fusion_m);
  add_cells("decoder", p.decoder);
  add("attention.w_enc", p.attention.w_enc);
  add("attention.w_dec", p.attention.w_dec);
  add("attention.v", p.attention.v);
  add("output.w", p.output.w);
  add("output.b", p.output.b);
  return out;
}

ModelParams build_params(const ModelConfig& c, Rng* rng, double scale) {
  auto mat = [&](std::size_t r, std::size_t k) {
    return rng ? random_uniform(r, k, -scale, scale, *rng) : Matrix(r, k);
  };
  auto cell = [&](std::size_t in) {
    return rng ? LstmCellParams::random(in, c.hidden, *rng, scale)
               : LstmCellParams::zeros(in, c.hidden);
  };
  auto fusion = [&] {
    return rng ? FusionParams::random(c.hidden, *rng, scale) : FusionParams::zeros(c.hidden);
  };

  ModelParams p;
  p.word_embedding.table = mat(c.word_vocab, c.word_embed);
  if (c.uses_char_vocab()) p.char_embedding.table = mat(c.char_vocab, c.char_embed);
  const std::size_t context_in =
      c.variant == Variant::FullCharLevel ? c.char_embed : c.word_embed;
  for (std::size_t l = 0; l < c.layers; ++l) p.context_encoder.push_back(cell(l == 0 ? context_in : c.hidden));
  if (c.has_target_encoder()) {
    for (std::size_t l = 0; l < c.layers; ++l) p.target_encoder.push_back(cell(l == 0 ? c.char_embed : c.hidden));
    for (std::size_t l = 0; l < c.layers; ++l) p.fusion_h.push_back(fusion());
    for (std::size_t l = 0; l < c.layers; ++l) p.fusion_m.push_back(fusion());
  }
  for (std::size_t l = 0; l < c.layers; ++l) {
    p.decoder.push_back(cell(l == 0 ? c.word_embed + c.hidden : c.hidden));
  }
  p.attention = rng ? AttentionParams::random(c.hidden, c.attn, *rng, scale)
                    : AttentionParams::zeros(c.hidden, c.attn);
  p.output.w = mat(2 * c.hidden, c.word_vocab);
  p.output.b = mat(1, c.word_vocab);
  return p;
}

}  // namespace

std::vector<NamedMatrix> named_parameters(ModelParams& params) {
  return collect<ModelParams, NamedMatrix>(params);
}

std::vector<ConstNamedMatrix> named_parameters(const ModelParams& params) {
  return collect<const ModelParams, ConstNamedMatrix>(params);
}

ModelParams zeros_like(const ModelParams& params) {
  ModelParams z = params;
  for (auto& [name, m] : named_parameters(z)) m->fill(0.0);
  return z;
}

std::size_t parameter_count(const ModelParams& params) {
  std::size_t n = 0;
  for (const auto& [name, m] : named_parameters(params)) n += m->size();
  return n;
}

void validate_params(const ModelConfig& config, const ModelParams& params) {
  const ModelConfig c = config.resolved();
  const ModelParams expected = build_params(c, nullptr, 0.0);
  const auto want = named_parameters(expected);
  const auto got = named_parameters(params);
  if (want.size() != got.size()) {
    throw ShapeError("model parameters: expected " + std::to_string(want.size()) +
                     " matrices for variant '" + std::string(variant_name(c.variant)) + "', got " +
                     std::to_string(got.size()));
  }
  for (std::size_t i = 0; i < want.size(); ++i) {
    if (want[i].name != got[i].name || !want[i].value->same_shape(*got[i].value)) {
      throw ShapeError("model parameter '" + got[i].name + "' " + got[i].value->shape_string() +
                       " does not match expected '" + want[i].name + "' " +
                       want[i].value->shape_string());
    }
  }
}

DualEncoderModel::DualEncoderModel(ModelConfig config, ModelParams params)
    : config_(std::move(config)), params_(std::move(params)) {}

DualEncoderModel DualEncoderModel::random(const ModelConfig& config, std::uint64_t seed,
                                          double scale) {
  const ModelConfig c = config.resolved();
  c.validate();
  Rng rng(seed);
  return DualEncoderModel(c, build_params(c, &rng, scale));
}

DualEncoderModel DualEncoderModel::zeros(const ModelConfig& config) {
  const ModelConfig c = config.resolved();
  c.validate();
  return DualEncoderModel(c, build_params(c, nullptr, 0.0));
}

DualEncoderModel DualEncoderModel::from_params(const ModelConfig& config, ModelParams params) {
  const ModelConfig c = config.resolved();
  c.validate();
  validate_params(c, params);
  return DualEncoderModel(c, std::move(params));
}

void DualEncoderModel::apply_gradient(const ModelParams& grads, double lr) {
  auto mine = named_parameters(params_);
  const auto theirs = named_parameters(grads);
  if (mine.size() != theirs.size()) throw ShapeError("apply_gradient: parameter set mismatch");
  for (std::size_t i = 0; i < mine.size(); ++i) mine[i].value->add_scaled(*theirs[i].value, -lr);
  ++generation_;
}

StackedEncoding encode_stack(std::span<const LstmCellParams> params, std::span<const Matrix> inputs) {
  StackedEncoding enc;
  enc.layers.reserve(params.size());
  for (std::size_t l = 0; l < params.size(); ++l) {
    std::span<const Matrix> layer_inputs = l == 0 ? inputs : std::span<const Matrix>(enc.layers.back().states);
    enc.layers.push_back(lstm_encode(params[l], layer_inputs, LstmState::zeros(params[l].hidden_dim())));
  }
  return enc;
}

std::vector<Matrix> encode_stack_backward(std::span<const LstmCellParams> params,
                                          const StackedEncoding& encoding,
                                          std::span<const Matrix> grad_top,
                                          std::span<const LstmState> grad_final,
                                          std::span<LstmCellParams> grads) {
  std::vector<Matrix> grad_states(grad_top.begin(), grad_top.end());
  for (std::size_t l = params.size(); l-- > 0;) {
    LstmBackward back = lstm_backward_accumulate(params[l], encoding.layers[l].caches, grad_states,
                                                 grad_final[l], grads[l]);
    grad_states = std::move(back.inputs);
  }
  return grad_states;
}

Encoding encode(const DualEncoderModel& model, std::span<const TokenId> context_ids,
                std::span<const TokenId> target_char_ids) {
  const ModelConfig& c = model.config();
  const ModelParams& p = model.params();
  if (context_ids.empty()) throw ShapeError("forward: empty context");

  Encoding enc;
  const std::vector<Matrix> context_inputs = embed(model.context_embedding(), context_ids);
  enc.context = encode_stack(p.context_encoder, context_inputs);
  enc.memory = make_memory(p.attention, enc.context.top_states());
  enc.initial.context = Matrix(1, c.hidden);
  enc.initial.layers.reserve(c.layers);

  if (c.has_target_encoder()) {
    if (target_char_ids.empty()) throw ShapeError("forward: empty target expression");
    const std::vector<Matrix> target_inputs = embed(p.char_embedding, target_char_ids);
    enc.target = encode_stack(p.target_encoder, target_inputs);
    for (std::size_t l = 0; l < c.layers; ++l) {
      const LstmState& ctx = enc.context.layers[l].final;
      const LstmState& tgt = enc.target.layers[l].final;
      enc.initial.layers.push_back(
          {fuse(ctx.h, tgt.h, p.fusion_h[l]), fuse(ctx.m, tgt.m, p.fusion_m[l])});
    }
  } else {
    for (std::size_t l = 0; l < c.layers; ++l) enc.initial.layers.push_back(enc.context.layers[l].final);
  }
  return enc;
}

DecoderStep decoder_step(const DualEncoderModel& model, const AttentionMemory& memory,
                         const DecoderState& state, TokenId prev_token) {
  const ModelParams& p = model.params();
  const std::size_t layers = p.decoder.size();
  if (prev_token >= p.word_embedding.vocab_size()) {
    throw RangeError("decoder: token id " + std::to_string(prev_token) + " out of range");
  }
  DecoderStep out;
  out.cache.input_token = prev_token;
  out.cache.input_context = state.context;
  out.cache.layers.reserve(layers);
  out.next.layers.reserve(layers);

  Matrix x = hconcat(p.word_embedding.table.row_at(prev_token), state.context);
  for (std::size_t l = 0; l < layers; ++l) {
    LstmStep step = lstm_step(p.decoder[l], x, state.layers[l]);
    x = step.next.h;
    out.cache.layers.push_back(std::move(step.cache));
    out.next.layers.push_back(std::move(step.next));
  }
  AttentionOutput att = attend(p.attention, memory, x);
  out.logits = project(p.output, att.combined);
  out.next.context = std::move(att.context);
  out.cache.attention = std::move(att.cache);
  out.cache.combined = std::move(att.combined);
  return out;
}

ForwardResult forward(const DualEncoderModel& model, const SequencePair& pair) {
  if (pair.output_ids.empty()) throw ShapeError("forward: empty output sequence");
  ForwardResult result;
  ForwardCache& cache = result.cache;
  cache.generation = model.generation();
  cache.model = &model;
  cache.context_ids = pair.context_ids;
  cache.target_char_ids = pair.target_char_ids;
  cache.encoding = encode(model, pair.context_ids, pair.target_char_ids);

  const std::size_t steps = pair.output_ids.size() + 1;
  cache.steps.reserve(steps);
  cache.grad_logits.reserve(steps);
  result.logits.reserve(steps);

  DecoderState state = cache.encoding.initial;
  TokenId prev = kBosId;
  for (std::size_t t = 0; t < steps; ++t) {
    const TokenId target = t < pair.output_ids.size() ? pair.output_ids[t] : kEosId;
    DecoderStep step = decoder_step(model, cache.encoding.memory, state, prev);
    CrossEntropy ce = cross_entropy(step.logits, target);
    result.loss += ce.loss;
    cache.grad_logits.push_back(std::move(ce.grad_logits));
    result.logits.push_back(std::move(step.logits));
    cache.steps.push_back(std::move(step.cache));
    state = std::move(step.next);
    prev = target;
  }
  result.predictions = steps;
  return result;
}

double forward_loss(const DualEncoderModel& model, const SequencePair& pair) {
  return forward(model, pair).loss;
}

void backward(const DualEncoderModel& model, const ForwardCache& cache, ModelParams& grads) {
  if (cache.model != &model || cache.generation != model.generation()) {
    throw StaleCacheError("backward: forward cache does not belong to the current model parameters");
  }
  const ModelConfig& c = model.config();
  const ModelParams& p = model.params();
  const std::size_t layers = c.layers;
  const std::size_t hidden = c.hidden;
  const std::size_t embed_dim = c.word_embed;
  const Encoding& enc = cache.encoding;

  MemoryGrad memory_grad = MemoryGrad::zeros(enc.memory);
  std::vector<Matrix> dh_carry(layers, Matrix(1, hidden));
  std::vector<Matrix> dm_carry(layers, Matrix(1, hidden));
  Matrix dcontext_carry(1, hidden);

  for (std::size_t t = cache.steps.size(); t-- > 0;) {
    const DecoderStepCache& step = cache.steps[t];
    Matrix dcombined = project_backward(p.output, step.combined, cache.grad_logits[t], grads.output);
    // d'_t also feeds step t+1's input.
    for (std::size_t k = 0; k < hidden; ++k) dcombined[k] += dcontext_carry[k];
    Matrix dx = attend_backward(p.attention, enc.memory, step.attention, dcombined, grads.attention,
                                memory_grad);
    for (std::size_t l = layers; l-- > 0;) {
      Matrix dh = dh_carry[l] + dx;
      LstmStepGrad g = lstm_step_backward(p.decoder[l], step.layers[l], dh, dm_carry[l], grads.decoder[l]);
      dh_carry[l] = std::move(g.dh_prev);
      dm_carry[l] = std::move(g.dm_prev);
      dx = std::move(g.dx);
    }
    for (std::size_t k = 0; k < embed_dim; ++k) {
      grads.word_embedding.table(step.input_token, k) += dx[k];
    }
    dcontext_carry = slice_cols(dx, embed_dim, hidden);
  }

  // Initial decoder state -> encoder final states.
  std::vector<LstmState> context_final_grad(layers);
  std::vector<LstmState> target_final_grad;
  if (c.has_target_encoder()) {
    target_final_grad.resize(layers);
    for (std::size_t l = 0; l < layers; ++l) {
      const LstmState& ctx = enc.context.layers[l].final;
      const LstmState& tgt = enc.target.layers[l].final;
      FusionGrad gh = fuse_backward(p.fusion_h[l], ctx.h, tgt.h, dh_carry[l], grads.fusion_h[l]);
      FusionGrad gm = fuse_backward(p.fusion_m[l], ctx.m, tgt.m, dm_carry[l], grads.fusion_m[l]);
      context_final_grad[l] = {std::move(gh.h1), std::move(gm.h1)};
      target_final_grad[l] = {std::move(gh.h2), std::move(gm.h2)};
    }
  } else {
    for (std::size_t l = 0; l < layers; ++l) {
      context_final_grad[l] = {std::move(dh_carry[l]), std::move(dm_carry[l])};
    }
  }

  const Matrix dstates = memory_backward(p.attention, enc.memory, memory_grad, grads.attention);
  std::vector<Matrix> grad_top;
  grad_top.reserve(dstates.rows());
  for (std::size_t t = 0; t < dstates.rows(); ++t) grad_top.push_back(dstates.row_at(t));

  const std::vector<Matrix> dcontext_inputs = encode_stack_backward(
      p.context_encoder, enc.context, grad_top, context_final_grad, grads.context_encoder);
  EmbeddingTable& context_table =
      c.variant == Variant::FullCharLevel ? grads.char_embedding : grads.word_embedding;
  embed_backward(context_table, cache.context_ids, dcontext_inputs);

  if (c.has_target_encoder()) {
    const std::size_t target_len = cache.target_char_ids.size();
    const std::vector<Matrix> zero_top(target_len, Matrix(1, hidden));
    const std::vector<Matrix> dtarget_inputs = encode_stack_backward(
        p.target_encoder, enc.target, zero_top, target_final_grad, grads.target_encoder);
    embed_backward(grads.char_embedding, cache.target_char_ids, dtarget_inputs);
  }
}

double loss_and_gradient(const DualEncoderModel& model, const SequencePair& pair,
                         ModelParams& grads) {
  ForwardResult result = forward(model, pair);
  backward(model, result.cache, grads);
  return result.loss;
}

}  // namespace slangdef
