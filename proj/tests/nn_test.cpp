#include "conceptflow/nn.hpp"

#include <gtest/gtest.h>

#include "support.hpp"

using namespace conceptflow;

namespace {

GruCell zero_gru(int hidden, int input) {
  GruCell cell;
  cell.hidden_dim = hidden;
  cell.input_dim = input;
  Shape ws{hidden, hidden + input};
  cell.w_update = Tensor::zeros(ws);
  cell.b_update = Tensor::zeros({hidden});
  cell.w_reset = Tensor::zeros(ws);
  cell.b_reset = Tensor::zeros({hidden});
  cell.w_cand = Tensor::zeros(ws);
  cell.b_cand = Tensor::zeros({hidden});
  return cell;
}

}  // namespace

TEST(Gru, ZeroWeightsFixedPoint) {
  GruCell cell = zero_gru(3, 2);
  Tensor h = Tensor::zeros({3});
  Tensor x({2}, {0.7, -0.3});
  Tensor out = gru_step(nullptr, cell, h, x);
  for (int i = 0; i < 3; ++i) EXPECT_DOUBLE_EQ(out[i], 0.0);
}

TEST(Gru, SaturatedUpdateGateCarriesState) {
  GruCell cell = zero_gru(3, 2);
  cell.b_update = Tensor({3}, {-1e9, -1e9, -1e9});  // z == 0 exactly
  Tensor h({3}, {0.25, -1.5, 3.0});
  Tensor x({2}, {0.9, 0.1});
  Tensor out = gru_step(nullptr, cell, h, x);
  for (int i = 0; i < 3; ++i) EXPECT_EQ(out[i], h[i]);
}

TEST(Gru, ShapeMismatchRejected) {
  GruCell cell = zero_gru(3, 2);
  EXPECT_THROW(gru_step(nullptr, cell, Tensor::zeros({2}), Tensor::zeros({2})),
               DimensionError);
  EXPECT_THROW(gru_step(nullptr, cell, Tensor::zeros({3}), Tensor::zeros({3})),
               DimensionError);
}

TEST(Gru, GradientsMatchFiniteDifferences) {
  RandomSource rng(5);
  GruCell cell = make_gru(4, 3, 0.6, rng);
  Tensor h = random_tensor({4}, 0.5, rng, false);
  Tensor x = random_tensor({3}, 0.5, rng, false);

  auto forward = [&](Tape* tape) { return sum(tape, gru_step(tape, cell, h, x)); };

  Tape tape;
  tape.backward(forward(&tape));
  std::vector<Tensor> params = {cell.w_update, cell.b_update, cell.w_reset,
                                cell.b_reset,  cell.w_cand,  cell.b_cand};
  double err = cftest::fd_rel_error(params, [&]() { return forward(nullptr).value(); });
  EXPECT_LT(err, 1e-4);
}

TEST(Ffn, OutputDimensionAndActivations) {
  RandomSource rng(6);
  Ffn f = make_ffn(4, 2, Ffn::Activation::identity, 0.5, rng);
  Tensor out = apply(nullptr, f, Tensor({2}, {1.0, -1.0}));
  EXPECT_EQ(out.size(), 4);

  Ffn t = make_ffn(2, 2, Ffn::Activation::tanh, 0.0, rng);
  Tensor zero_out = apply(nullptr, t, Tensor({2}, {3.0, -3.0}));
  EXPECT_DOUBLE_EQ(zero_out[0], 0.0);
  EXPECT_DOUBLE_EQ(zero_out[1], 0.0);
}

// Composite chain from the numeric kernel: GRU -> FFN -> softmax -> CE.
TEST(Backward, CompositeChainMatchesFiniteDifferences) {
  RandomSource rng(9);
  GruCell cell = make_gru(3, 2, 0.7, rng);
  Ffn head = make_ffn(3, 3, Ffn::Activation::identity, 0.7, rng);
  Tensor h0 = Tensor::zeros({3});
  Tensor x1 = random_tensor({2}, 0.8, rng, false);
  Tensor x2 = random_tensor({2}, 0.8, rng, false);

  auto forward = [&](Tape* tape) {
    Tensor h1 = gru_step(tape, cell, h0, x1);
    Tensor h2 = gru_step(tape, cell, h1, x2);
    Tensor logits = apply(tape, head, h2);
    return cross_entropy(tape, softmax(tape, logits), 1);
  };

  Tape tape;
  tape.backward(forward(&tape));
  std::vector<Tensor> params = {cell.w_update, cell.b_update, cell.w_reset,
                                cell.b_reset,  cell.w_cand,  cell.b_cand,
                                head.weight,   head.bias};
  double err = cftest::fd_rel_error(params, [&]() { return forward(nullptr).value(); });
  EXPECT_LT(err, 1e-4);
}

TEST(RandomSource, DeterministicAcrossInstances) {
  RandomSource a(42), b(42);
  for (int i = 0; i < 100; ++i) EXPECT_EQ(a.next_u64(), b.next_u64());
  RandomSource c(43);
  EXPECT_NE(a.next_u64(), c.next_u64());
}
