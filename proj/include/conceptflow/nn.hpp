#pragma once

#include <cstdint>
#include <vector>

#include "conceptflow/tensor.hpp"

namespace conceptflow {

// Deterministic random source used for every stochastic choice in the
// project. Draws are identical across platforms for a given seed.
class RandomSource {
 public:
  explicit RandomSource(uint64_t seed) : state_(seed ? seed : 0x9e3779b97f4a7c15ULL) {}

  uint64_t next_u64() {
    // splitmix64
    uint64_t z = (state_ += 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }

  // [0, 1)
  double next_double() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * next_double(); }

  // [0, n)
  int next_int(int n) { return static_cast<int>(next_u64() % static_cast<uint64_t>(n)); }

  template <typename T>
  void shuffle(std::vector<T>& v) {
    for (size_t i = v.size(); i > 1; --i) {
      size_t j = static_cast<size_t>(next_u64() % i);
      std::swap(v[i - 1], v[j]);
    }
  }

 private:
  uint64_t state_;
};

inline Tensor random_tensor(Shape shape, double scale, RandomSource& rng,
                            bool requires_grad = true) {
  Vec data(static_cast<size_t>(numel(shape)));
  for (double& x : data) x = rng.uniform(-scale, scale);
  return Tensor(std::move(shape), std::move(data), requires_grad);
}

// Gated recurrent unit. Gate convention:
//   z = sigmoid(Wz.[h;x] + bz)
//   r = sigmoid(Wr.[h;x] + br)
//   cand = tanh(Wc.[r*h;x] + bc)
//   h' = (1-z)*h + z*cand
struct GruCell {
  int hidden_dim = 0;
  int input_dim = 0;
  Tensor w_update, b_update;
  Tensor w_reset, b_reset;
  Tensor w_cand, b_cand;
};

inline GruCell make_gru(int hidden_dim, int input_dim, double scale, RandomSource& rng) {
  GruCell cell;
  cell.hidden_dim = hidden_dim;
  cell.input_dim = input_dim;
  Shape wshape{hidden_dim, hidden_dim + input_dim};
  cell.w_update = random_tensor(wshape, scale, rng);
  cell.b_update = Tensor({hidden_dim}, Vec(static_cast<size_t>(hidden_dim), 0.0), true);
  cell.w_reset = random_tensor(wshape, scale, rng);
  cell.b_reset = Tensor({hidden_dim}, Vec(static_cast<size_t>(hidden_dim), 0.0), true);
  cell.w_cand = random_tensor(wshape, scale, rng);
  cell.b_cand = Tensor({hidden_dim}, Vec(static_cast<size_t>(hidden_dim), 0.0), true);
  return cell;
}

inline Tensor gru_step(Tape* tape, const GruCell& cell, const Tensor& h_prev,
                       const Tensor& x) {
  if (h_prev.size() != cell.hidden_dim || x.size() != cell.input_dim)
    throw DimensionError("gru_step: got h" + shape_str(h_prev.shape()) + " x" +
                         shape_str(x.shape()) + " for cell " +
                         std::to_string(cell.hidden_dim) + "/" +
                         std::to_string(cell.input_dim));
  Tensor hx = concat(tape, h_prev, x);
  Tensor z = sigmoid(tape, add(tape, matvec(tape, cell.w_update, hx), cell.b_update));
  Tensor r = sigmoid(tape, add(tape, matvec(tape, cell.w_reset, hx), cell.b_reset));
  Tensor rx = concat(tape, mul(tape, r, h_prev), x);
  Tensor cand = tanh(tape, add(tape, matvec(tape, cell.w_cand, rx), cell.b_cand));
  // h + z*(cand - h) == (1-z)*h + z*cand
  return add(tape, h_prev, mul(tape, z, sub(tape, cand, h_prev)));
}

// Single-layer feed-forward transform.
struct Ffn {
  enum class Activation { identity, tanh };
  Tensor weight;  // (out, in)
  Tensor bias;    // (out)
  Activation activation = Activation::identity;

  int out_dim() const { return weight.shape()[0]; }
  int in_dim() const { return weight.shape()[1]; }
};

inline Ffn make_ffn(int out_dim, int in_dim, Ffn::Activation act, double scale,
                    RandomSource& rng) {
  Ffn f;
  f.weight = random_tensor({out_dim, in_dim}, scale, rng);
  f.bias = Tensor({out_dim}, Vec(static_cast<size_t>(out_dim), 0.0), true);
  f.activation = act;
  return f;
}

inline Tensor apply(Tape* tape, const Ffn& f, const Tensor& x) {
  Tensor pre = add(tape, matvec(tape, f.weight, x), f.bias);
  return f.activation == Ffn::Activation::tanh ? tanh(tape, pre) : pre;
}

}  // namespace conceptflow
