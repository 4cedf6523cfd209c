#include "gradchecks.hpp"

#include "slangdef/attention.hpp"
#include "slangdef/gradcheck.hpp"
#include "slangdef/layers.hpp"
#include "slangdef/random.hpp"

namespace slangdef::gradcheck {

namespace {

std::size_t between(Rng& rng, std::size_t lo, std::size_t hi) {
  return lo + static_cast<std::size_t>(rng.below(hi - lo + 1));
}

Matrix rand(std::size_t r, std::size_t c, Rng& rng, double scale = 1.0) {
  return random_uniform(r, c, -scale, scale, rng);
}

double dot(const Matrix& a, const Matrix& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

void compare(Result& out, const std::string& name, const Matrix& analytic,
             const std::function<double(const Matrix&)>& f, const Matrix& at) {
  out.add(name, relative_error(analytic, finite_difference_gradient(f, at, kStep)));
}

}  // namespace

Result lstm(std::uint64_t seed) {
  Rng rng(seed);
  const std::size_t in = between(rng, 1, 4);
  const std::size_t hid = between(rng, 1, 4);
  const std::size_t len = between(rng, 1, 5);
  const LstmCellParams params = LstmCellParams::random(in, hid, rng, 0.8);
  std::vector<Matrix> xs;
  std::vector<Matrix> rs;  // upstream weights on each h_t
  for (std::size_t t = 0; t < len; ++t) {
    xs.push_back(rand(1, in, rng));
    rs.push_back(rand(1, hid, rng));
  }
  const LstmState init{rand(1, hid, rng, 0.5), rand(1, hid, rng, 0.5)};
  const LstmState rf{rand(1, hid, rng), rand(1, hid, rng)};

  auto loss = [&](const LstmCellParams& p, const std::vector<Matrix>& x, const LstmState& s0) {
    const LstmSequence seq = lstm_encode(p, x, s0);
    double l = dot(seq.final.h, rf.h) + dot(seq.final.m, rf.m);
    for (std::size_t t = 0; t < len; ++t) l += dot(seq.states[t], rs[t]);
    return l;
  };

  const LstmSequence seq = lstm_encode(params, xs, init);
  const LstmBackward g = lstm_backward(params, seq.caches, rs, rf);

  Result out;
  const std::pair<const char*, Matrix LstmCellParams::*> gates[] = {
      {"w_i", &LstmCellParams::w_i}, {"w_f", &LstmCellParams::w_f},
      {"w_o", &LstmCellParams::w_o}, {"w_c", &LstmCellParams::w_c}};
  for (const auto& [name, member] : gates) {
    compare(out, std::string("lstm.") + name, g.params.*member,
            [&](const Matrix& w) {
              LstmCellParams p = params;
              p.*member = w;
              return loss(p, xs, init);
            },
            params.*member);
  }
  for (std::size_t t = 0; t < len; ++t) {
    compare(out, "lstm.x" + std::to_string(t), g.inputs[t],
            [&](const Matrix& x) {
              auto copy = xs;
              copy[t] = x;
              return loss(params, copy, init);
            },
            xs[t]);
  }
  compare(out, "lstm.h0", g.init.h,
          [&](const Matrix& h) { return loss(params, xs, {h, init.m}); }, init.h);
  compare(out, "lstm.m0", g.init.m,
          [&](const Matrix& m) { return loss(params, xs, {init.h, m}); }, init.m);
  return out;
}

Result attention(std::uint64_t seed) {
  Rng rng(seed);
  const std::size_t hid = between(rng, 1, 4);
  const std::size_t att = between(rng, 1, 4);
  const std::size_t len = between(rng, 1, 5);
  const AttentionParams params = AttentionParams::random(hid, att, rng, 1.0);
  std::vector<Matrix> states;
  for (std::size_t t = 0; t < len; ++t) states.push_back(rand(1, hid, rng));
  const Matrix d = rand(1, hid, rng);
  const Matrix r = rand(1, 2 * hid, rng);

  auto loss = [&](const AttentionParams& p, const std::vector<Matrix>& hs, const Matrix& dd) {
    return dot(attend(p, hs, dd).combined, r);
  };
  const AttentionOutput fwd = attend(params, states, d);
  const AttentionBackward g = attend_backward(params, states, fwd, r);

  Result out;
  const std::pair<const char*, Matrix AttentionParams::*> members[] = {
      {"w_enc", &AttentionParams::w_enc}, {"w_dec", &AttentionParams::w_dec}, {"v", &AttentionParams::v}};
  for (const auto& [name, member] : members) {
    compare(out, std::string("attention.") + name, g.params.*member,
            [&](const Matrix& w) {
              AttentionParams p = params;
              p.*member = w;
              return loss(p, states, d);
            },
            params.*member);
  }
  for (std::size_t t = 0; t < len; ++t) {
    compare(out, "attention.h" + std::to_string(t), g.encoder_states[t],
            [&](const Matrix& h) {
              auto copy = states;
              copy[t] = h;
              return loss(params, copy, d);
            },
            states[t]);
  }
  compare(out, "attention.d", g.decoder_state, [&](const Matrix& dd) { return loss(params, states, dd); }, d);
  return out;
}

Result fusion(std::uint64_t seed) {
  Rng rng(seed);
  const std::size_t hid = between(rng, 1, 4);
  const FusionParams params = FusionParams::random(hid, rng, 1.0);
  const Matrix h1 = rand(1, hid, rng), h2 = rand(1, hid, rng), r = rand(1, hid, rng);

  auto loss = [&](const FusionParams& p, const Matrix& a, const Matrix& b) {
    const Matrix y = fuse(a, b, p);
    // Squared so the check is not purely linear.
    return dot(hadamard(y, y), r);
  };
  const Matrix y = fuse(h1, h2, params);
  FusionParams grads = FusionParams::zeros(hid);
  const FusionGrad g = fuse_backward(params, h1, h2, hadamard(y, r) * 2.0, grads);

  Result out;
  const std::pair<const char*, Matrix FusionParams::*> members[] = {
      {"w1", &FusionParams::w1}, {"w2", &FusionParams::w2}, {"bias", &FusionParams::bias}};
  for (const auto& [name, member] : members) {
    compare(out, std::string("fusion.") + name, grads.*member,
            [&](const Matrix& w) {
              FusionParams p = params;
              p.*member = w;
              return loss(p, h1, h2);
            },
            params.*member);
  }
  compare(out, "fusion.h1", g.h1, [&](const Matrix& a) { return loss(params, a, h2); }, h1);
  compare(out, "fusion.h2", g.h2, [&](const Matrix& b) { return loss(params, h1, b); }, h2);
  return out;
}

Result projection(std::uint64_t seed) {
  Rng rng(seed);
  const std::size_t in = between(rng, 1, 8);
  const std::size_t vocab = between(rng, 2, 8);
  const Projection params{rand(in, vocab, rng), rand(1, vocab, rng)};
  const Matrix s = rand(1, in, rng);
  const auto target = static_cast<std::size_t>(rng.below(vocab));

  auto loss = [&](const Projection& p, const Matrix& x) { return cross_entropy(project(p, x), target).loss; };
  Projection grads{Matrix(in, vocab), Matrix(1, vocab)};
  const Matrix ds = project_backward(params, s, cross_entropy(project(params, s), target).grad_logits, grads);

  Result out;
  compare(out, "projection.w", grads.w,
          [&](const Matrix& w) { return loss({w, params.b}, s); }, params.w);
  compare(out, "projection.b", grads.b,
          [&](const Matrix& b) { return loss({params.w, b}, s); }, params.b);
  compare(out, "projection.s", ds, [&](const Matrix& x) { return loss(params, x); }, s);
  return out;
}

Result embedding(std::uint64_t seed) {
  Rng rng(seed);
  const std::size_t vocab = between(rng, 2, 8);
  const std::size_t dim = between(rng, 1, 4);
  const std::size_t len = between(rng, 1, 5);
  const EmbeddingTable table{rand(vocab, dim, rng)};
  std::vector<TokenId> ids;
  std::vector<Matrix> rs;
  for (std::size_t t = 0; t < len; ++t) {
    ids.push_back(static_cast<TokenId>(rng.below(vocab)));
    rs.push_back(rand(1, dim, rng));
  }
  auto loss = [&](const Matrix& tbl) {
    const auto rows = embed({tbl}, ids);
    double l = 0.0;
    for (std::size_t t = 0; t < len; ++t) l += dot(hadamard(rows[t], rows[t]), rs[t]);
    return l;
  };
  std::vector<Matrix> upstream;
  const auto rows = embed(table, ids);
  for (std::size_t t = 0; t < len; ++t) upstream.push_back(hadamard(rows[t], rs[t]) * 2.0);
  EmbeddingTable grads{Matrix(vocab, dim)};
  embed_backward(grads, ids, upstream);

  Result out;
  compare(out, "embedding.table", grads.table, loss, table.table);
  return out;
}

ToyProblem toy_problem(std::uint64_t seed, Variant variant, std::size_t layers, double scale) {
  Rng rng(derive_seed(seed, "toy-problem"));
  ModelConfig c;
  c.variant = variant;
  c.hidden = between(rng, 2, 4);
  c.word_embed = between(rng, 1, 4);
  c.char_embed = between(rng, 1, 4);
  c.attn = between(rng, 1, 4);
  c.layers = layers;
  c.word_vocab = 8;
  c.char_vocab = 8;
  DualEncoderModel model = DualEncoderModel::random(c, seed, scale);

  const std::size_t context_vocab = variant == Variant::FullCharLevel ? c.char_vocab : c.word_vocab;
  auto draw = [&](std::size_t len, std::size_t vocab) {
    std::vector<TokenId> ids;
    for (std::size_t i = 0; i < len; ++i) ids.push_back(static_cast<TokenId>(rng.below(vocab)));
    return ids;
  };
  SequencePair pair;
  pair.context_ids = draw(between(rng, 1, 5), context_vocab);
  pair.target_char_ids = draw(between(rng, 1, 5), c.char_vocab);
  pair.output_ids = draw(between(rng, 1, 4), c.word_vocab);
  return {std::move(model), std::move(pair)};
}

Result full_model(std::uint64_t seed, Variant variant, std::size_t layers) {
  // Weights at the usual init scale leave attention nearly flat, and the w_dec
  // gradient then sits below central-difference noise.
  ToyProblem toy = toy_problem(seed, variant, layers, 1.5);
  ModelParams grads = zeros_like(toy.model.params());
  loss_and_gradient(toy.model, toy.pair, grads);

  Result out;
  const auto analytic = named_parameters(grads);
  const ModelParams base = toy.model.params();
  for (std::size_t k = 0; k < analytic.size(); ++k) {
    const std::string& name = analytic[k].name;
    auto f = [&](const Matrix& w) {
      ModelParams p = base;
      *named_parameters(p)[k].value = w;
      return forward_loss(DualEncoderModel::from_params(toy.model.config(), std::move(p)), toy.pair);
    };
    compare(out, "model." + name, *analytic[k].value, f, *named_parameters(base)[k].value);
  }
  return out;
}

}  // namespace slangdef::gradcheck
