#include <gtest/gtest.h>

#include "gradchecks.hpp"
#include "oracles.hpp"
#include "slangdef/errors.hpp"
#include "slangdef/layers.hpp"

namespace slangdef {
namespace {

TEST(Lstm, StepMatchesScalarOracle) {
  Rng rng(21);
  for (int trial = 0; trial < 10; ++trial) {
    const std::size_t in = 1 + rng.below(5), hid = 1 + rng.below(5);
    const auto p = LstmCellParams::random(in, hid, rng, 0.7);
    const Matrix x = random_uniform(1, in, -1, 1, rng);
    const LstmState prev{random_uniform(1, hid, -1, 1, rng), random_uniform(1, hid, -1, 1, rng)};
    const LstmStep got = lstm_step(p, x, prev);
    const auto want = oracle::lstm_step(p, oracle::to_vec(x), oracle::to_vec(prev.h), oracle::to_vec(prev.m));
    for (std::size_t k = 0; k < hid; ++k) {
      EXPECT_NEAR(got.next.h[k], want.h[k], 1e-14);
      EXPECT_NEAR(got.next.m[k], want.m[k], 1e-14);
    }
  }
}

TEST(Lstm, ZeroWeightsZeroStateStayZero) {
  // All gates read 0: i = f = o = 1/2, c~ = 0, so m and h stay exactly 0.
  const auto p = LstmCellParams::zeros(3, 4);
  Rng rng(1);
  std::vector<Matrix> xs;
  for (int t = 0; t < 5; ++t) xs.push_back(random_uniform(1, 3, -5, 5, rng));
  const LstmSequence seq = lstm_encode(p, xs, LstmState::zeros(4));
  for (const auto& h : seq.states) EXPECT_EQ(h, Matrix(1, 4));
  EXPECT_EQ(seq.final.m, Matrix(1, 4));
}

TEST(Lstm, ZeroWeightsHalveTheMemory) {
  const auto p = LstmCellParams::zeros(2, 2);
  const LstmState prev{Matrix::row({0.3, -0.2}), Matrix::row({1.0, -4.0})};
  const LstmStep s = lstm_step(p, Matrix::row({7, 8}), prev);
  EXPECT_EQ(s.next.m, Matrix::row({0.5, -2.0}));
  EXPECT_EQ(s.next.h, Matrix::row({0.25, -1.0}));
}

TEST(Lstm, EmptySequenceRejected) {
  const auto p = LstmCellParams::zeros(2, 2);
  EXPECT_THROW(lstm_encode(p, {}, LstmState::zeros(2)), ShapeError);
}

TEST(Lstm, InputWidthChecked) {
  const auto p = LstmCellParams::zeros(2, 3);
  EXPECT_THROW(lstm_step(p, Matrix(1, 3), LstmState::zeros(3)), ShapeError);
}

TEST(Lstm, GradientsMatchFiniteDifferences) {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const auto r = gradcheck::lstm(seed);
    EXPECT_LT(r.max_error, 1e-6) << "seed " << seed << " worst " << r.worst;
  }
}

TEST(Embedding, LookupAndGradientAccumulate) {
  const EmbeddingTable t{Matrix::from_rows({{1, 2}, {3, 4}, {5, 6}})};
  const std::vector<TokenId> ids = {2, 0, 2};
  const auto rows = embed(t, ids);
  EXPECT_EQ(rows[0], Matrix::row({5, 6}));
  EXPECT_EQ(rows[1], Matrix::row({1, 2}));
  EmbeddingTable g{Matrix(3, 2)};
  embed_backward(g, ids, std::vector<Matrix>{Matrix::row({1, 1}), Matrix::row({2, 2}), Matrix::row({3, 3})});
  EXPECT_EQ(g.table, Matrix::from_rows({{2, 2}, {0, 0}, {4, 4}}));
  const std::vector<TokenId> bad = {3};
  EXPECT_THROW(embed(t, bad), RangeError);
}

TEST(Embedding, GradientsMatchFiniteDifferences) {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const auto r = gradcheck::embedding(seed);
    EXPECT_LT(r.max_error, 1e-6) << "seed " << seed;
  }
}

TEST(Projection, GradientsMatchFiniteDifferences) {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const auto r = gradcheck::projection(seed);
    EXPECT_LT(r.max_error, 1e-6) << "seed " << seed << " worst " << r.worst;
  }
}

TEST(Projection, AffineMap) {
  const Projection p{Matrix::from_rows({{1, 0, 2}, {0, 1, -1}}), Matrix::row({0.5, 0, 0})};
  EXPECT_EQ(project(p, Matrix::row({2, 3})), Matrix::row({2.5, 3, 1}));
}

}  // namespace
}  // namespace slangdef
