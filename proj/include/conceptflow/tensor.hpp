#pragma once

// Dense double-precision tensors with tape-based reverse-mode differentiation.
// Tensors are immutable values once created; a Tape records the operations
// that produced non-leaf tensors and replays them in exact reverse order to
// accumulate gradients.

#include <cmath>
#include <cstddef>
#include <functional>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "conceptflow/errors.hpp"

namespace conceptflow {

using Vec = std::vector<double>;
using Shape = std::vector<int>;

inline int numel(const Shape& shape) {
  int n = 1;
  for (int d : shape) n *= d;
  return n;
}

inline std::string shape_str(const Shape& shape) {
  std::string s = "(";
  for (size_t i = 0; i < shape.size(); ++i) {
    if (i) s += ",";
    s += std::to_string(shape[i]);
  }
  return s + ")";
}

struct TensorNode {
  Shape shape;
  Vec value;
  Vec grad;  // same length as value, zero until backward touches it
  bool requires_grad = false;
  std::vector<std::shared_ptr<TensorNode>> parents;
  std::function<void(TensorNode&)> backprop;  // adds into parents' grads
};

class Tensor {
 public:
  Tensor() = default;
  Tensor(Shape shape, Vec data, bool requires_grad = false) {
    if (numel(shape) != static_cast<int>(data.size()))
      throw DimensionError("tensor data length " + std::to_string(data.size()) +
                           " does not match shape " + shape_str(shape));
    node_ = std::make_shared<TensorNode>();
    node_->shape = std::move(shape);
    node_->value = std::move(data);
    node_->grad.assign(node_->value.size(), 0.0);
    node_->requires_grad = requires_grad;
  }

  static Tensor scalar(double v) { return Tensor({}, {v}); }
  static Tensor zeros(Shape shape) {
    Vec data(static_cast<size_t>(numel(shape)), 0.0);
    return Tensor(std::move(shape), std::move(data));
  }

  bool defined() const { return node_ != nullptr; }
  const Shape& shape() const { return node_->shape; }
  int size() const { return static_cast<int>(node_->value.size()); }
  const Vec& values() const { return node_->value; }
  double operator[](int i) const { return node_->value[static_cast<size_t>(i)]; }

  // Scalar read; only valid for single-element tensors.
  double value() const {
    if (size() != 1) throw DimensionError("value() on non-scalar tensor");
    return node_->value[0];
  }

  bool requires_grad() const { return node_->requires_grad; }
  const Vec& grad() const { return node_->grad; }
  void zero_grad() { std::fill(node_->grad.begin(), node_->grad.end(), 0.0); }

  // In-place access for optimizers and loaders. Never call while a Tape
  // recorded against this tensor is still alive.
  Vec& mutable_values() { return node_->value; }

  const std::shared_ptr<TensorNode>& node() const { return node_; }

 private:
  std::shared_ptr<TensorNode> node_;
};

// Ordered record of the primitive operations of one forward computation.
// Single owner, not shareable across threads.
class Tape {
 public:
  Tape() = default;
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  void record(std::shared_ptr<TensorNode> n) { ops_.push_back(std::move(n)); }
  size_t size() const { return ops_.size(); }

  // Seeds d(loss)/d(loss) = 1 and walks the recorded operations in exact
  // reverse order. Gradients land on the tensors themselves; parameters that
  // never fed into the loss keep their (zeroed) gradient.
  void backward(const Tensor& loss) {
    if (!loss.defined() || loss.size() != 1)
      throw DimensionError("backward requires a scalar loss");
    loss.node()->grad[0] += 1.0;
    for (auto it = ops_.rbegin(); it != ops_.rend(); ++it) {
      if ((*it)->backprop) (*it)->backprop(**it);
    }
  }

 private:
  std::vector<std::shared_ptr<TensorNode>> ops_;
};

namespace detail {

inline void check_finite(const Vec& v, const char* op) {
  for (double x : v) {
    if (!std::isfinite(x))
      throw NumericError(std::string("non-finite value produced by ") + op);
  }
}

inline Tensor make_result(Tape* tape, Shape shape, Vec value,
                          std::vector<Tensor> parents,
                          std::function<void(TensorNode&)> backprop,
                          const char* op) {
  check_finite(value, op);
  bool needs_grad = false;
  for (const Tensor& p : parents) needs_grad = needs_grad || p.requires_grad();
  Tensor out(std::move(shape), std::move(value), needs_grad);
  if (tape != nullptr && needs_grad) {
    auto& node = *out.node();
    node.parents.reserve(parents.size());
    for (const Tensor& p : parents) node.parents.push_back(p.node());
    node.backprop = std::move(backprop);
    tape->record(out.node());
  }
  return out;
}

inline void require_same_shape(const Tensor& a, const Tensor& b, const char* op) {
  if (a.shape() != b.shape())
    throw DimensionError(std::string(op) + ": shape mismatch " +
                         shape_str(a.shape()) + " vs " + shape_str(b.shape()));
}

inline void accumulate(TensorNode& parent, size_t i, double g) {
  if (parent.requires_grad) parent.grad[i] += g;
}

}  // namespace detail

inline Tensor add(Tape* tape, const Tensor& a, const Tensor& b) {
  detail::require_same_shape(a, b, "add");
  Vec out(a.values());
  for (size_t i = 0; i < out.size(); ++i) out[i] += b[static_cast<int>(i)];
  return detail::make_result(
      tape, a.shape(), std::move(out), {a, b},
      [](TensorNode& n) {
        for (size_t i = 0; i < n.grad.size(); ++i) {
          detail::accumulate(*n.parents[0], i, n.grad[i]);
          detail::accumulate(*n.parents[1], i, n.grad[i]);
        }
      },
      "add");
}

inline Tensor sub(Tape* tape, const Tensor& a, const Tensor& b) {
  detail::require_same_shape(a, b, "sub");
  Vec out(a.values());
  for (size_t i = 0; i < out.size(); ++i) out[i] -= b[static_cast<int>(i)];
  return detail::make_result(
      tape, a.shape(), std::move(out), {a, b},
      [](TensorNode& n) {
        for (size_t i = 0; i < n.grad.size(); ++i) {
          detail::accumulate(*n.parents[0], i, n.grad[i]);
          detail::accumulate(*n.parents[1], i, -n.grad[i]);
        }
      },
      "sub");
}

// Elementwise product.
inline Tensor mul(Tape* tape, const Tensor& a, const Tensor& b) {
  detail::require_same_shape(a, b, "mul");
  Vec out(a.values());
  for (size_t i = 0; i < out.size(); ++i) out[i] *= b[static_cast<int>(i)];
  return detail::make_result(
      tape, a.shape(), std::move(out), {a, b},
      [](TensorNode& n) {
        const Vec& av = n.parents[0]->value;
        const Vec& bv = n.parents[1]->value;
        for (size_t i = 0; i < n.grad.size(); ++i) {
          detail::accumulate(*n.parents[0], i, n.grad[i] * bv[i]);
          detail::accumulate(*n.parents[1], i, n.grad[i] * av[i]);
        }
      },
      "mul");
}

inline Tensor scale(Tape* tape, const Tensor& a, double c) {
  Vec out(a.values());
  for (double& x : out) x *= c;
  return detail::make_result(
      tape, a.shape(), std::move(out), {a},
      [c](TensorNode& n) {
        for (size_t i = 0; i < n.grad.size(); ++i)
          detail::accumulate(*n.parents[0], i, n.grad[i] * c);
      },
      "scale");
}

// Elementwise product with a constant weight vector (no gradient into w).
inline Tensor scale_elems(Tape* tape, const Tensor& a, const Vec& w) {
  if (a.values().size() != w.size())
    throw DimensionError("scale_elems: weight length mismatch");
  Vec out(a.values());
  for (size_t i = 0; i < out.size(); ++i) out[i] *= w[i];
  return detail::make_result(
      tape, a.shape(), std::move(out), {a},
      [w](TensorNode& n) {
        for (size_t i = 0; i < n.grad.size(); ++i)
          detail::accumulate(*n.parents[0], i, n.grad[i] * w[i]);
      },
      "scale_elems");
}

// x / sum(x). Callers guarantee sum(x) > 0.
inline Tensor normalize(Tape* tape, const Tensor& a) {
  double total = 0.0;
  for (double x : a.values()) total += x;
  if (!(total > 0.0)) throw DataError("normalize: non-positive mass");
  Vec out(a.values());
  for (double& x : out) x /= total;
  return detail::make_result(
      tape, a.shape(), std::move(out), {a},
      [total](TensorNode& n) {
        double mix = 0.0;
        for (size_t i = 0; i < n.grad.size(); ++i) mix += n.grad[i] * n.value[i];
        for (size_t i = 0; i < n.grad.size(); ++i)
          detail::accumulate(*n.parents[0], i, (n.grad[i] - mix) / total);
      },
      "normalize");
}

// 1-D concatenation; scalars contribute one element each.
inline Tensor concat(Tape* tape, std::span<const Tensor> parts) {
  if (parts.empty()) throw DimensionError("concat: no inputs");
  Vec out;
  std::vector<Tensor> parents;
  parents.reserve(parts.size());
  for (const Tensor& p : parts) {
    out.insert(out.end(), p.values().begin(), p.values().end());
    parents.push_back(p);
  }
  int n = static_cast<int>(out.size());
  return detail::make_result(
      tape, {n}, std::move(out), std::move(parents),
      [](TensorNode& n) {
        size_t offset = 0;
        for (auto& parent : n.parents) {
          for (size_t i = 0; i < parent->value.size(); ++i)
            detail::accumulate(*parent, i, n.grad[offset + i]);
          offset += parent->value.size();
        }
      },
      "concat");
}

inline Tensor concat(Tape* tape, const Tensor& a, const Tensor& b) {
  const Tensor parts[] = {a, b};
  return concat(tape, std::span<const Tensor>(parts, 2));
}

// Element i of a vector, as a scalar tensor.
inline Tensor index(Tape* tape, const Tensor& v, int i) {
  if (i < 0 || i >= v.size())
    throw DataError("index " + std::to_string(i) + " out of range for size " +
                    std::to_string(v.size()));
  return detail::make_result(
      tape, {}, {v[i]}, {v},
      [i](TensorNode& n) { detail::accumulate(*n.parents[0], static_cast<size_t>(i), n.grad[0]); },
      "index");
}

inline Tensor dot(Tape* tape, const Tensor& a, const Tensor& b) {
  detail::require_same_shape(a, b, "dot");
  double acc = 0.0;
  for (size_t i = 0; i < a.values().size(); ++i) acc += a.values()[i] * b.values()[i];
  return detail::make_result(
      tape, {}, {acc}, {a, b},
      [](TensorNode& n) {
        double g = n.grad[0];
        const Vec& av = n.parents[0]->value;
        const Vec& bv = n.parents[1]->value;
        for (size_t i = 0; i < av.size(); ++i) {
          detail::accumulate(*n.parents[0], i, g * bv[i]);
          detail::accumulate(*n.parents[1], i, g * av[i]);
        }
      },
      "dot");
}

// (r,c) matrix times (c) vector.
inline Tensor matvec(Tape* tape, const Tensor& m, const Tensor& v) {
  if (m.shape().size() != 2 || v.shape().size() != 1 || m.shape()[1] != v.shape()[0])
    throw DimensionError("matvec: incompatible shapes " + shape_str(m.shape()) +
                         " x " + shape_str(v.shape()));
  int rows = m.shape()[0], cols = m.shape()[1];
  Vec out(static_cast<size_t>(rows), 0.0);
  const Vec& mv = m.values();
  const Vec& vv = v.values();
  for (int r = 0; r < rows; ++r) {
    double acc = 0.0;
    for (int c = 0; c < cols; ++c) acc += mv[static_cast<size_t>(r) * cols + c] * vv[static_cast<size_t>(c)];
    out[static_cast<size_t>(r)] = acc;
  }
  return detail::make_result(
      tape, {rows}, std::move(out), {m, v},
      [rows, cols](TensorNode& n) {
        TensorNode& mp = *n.parents[0];
        TensorNode& vp = *n.parents[1];
        for (int r = 0; r < rows; ++r) {
          double g = n.grad[static_cast<size_t>(r)];
          if (g == 0.0) continue;
          for (int c = 0; c < cols; ++c) {
            size_t mi = static_cast<size_t>(r) * cols + c;
            detail::accumulate(mp, mi, g * vp.value[static_cast<size_t>(c)]);
            detail::accumulate(vp, static_cast<size_t>(c), g * mp.value[mi]);
          }
        }
      },
      "matvec");
}

inline Tensor sigmoid(Tape* tape, const Tensor& a) {
  Vec out(a.values());
  for (double& x : out) {
    if (x >= 0.0) {
      x = 1.0 / (1.0 + std::exp(-x));
    } else {
      double e = std::exp(x);
      x = e / (1.0 + e);
    }
  }
  return detail::make_result(
      tape, a.shape(), std::move(out), {a},
      [](TensorNode& n) {
        for (size_t i = 0; i < n.grad.size(); ++i) {
          double y = n.value[i];
          detail::accumulate(*n.parents[0], i, n.grad[i] * y * (1.0 - y));
        }
      },
      "sigmoid");
}

inline Tensor tanh(Tape* tape, const Tensor& a) {
  Vec out(a.values());
  for (double& x : out) x = std::tanh(x);
  return detail::make_result(
      tape, a.shape(), std::move(out), {a},
      [](TensorNode& n) {
        for (size_t i = 0; i < n.grad.size(); ++i) {
          double y = n.value[i];
          detail::accumulate(*n.parents[0], i, n.grad[i] * (1.0 - y * y));
        }
      },
      "tanh");
}

// Max-subtracted softmax over a vector.
inline Tensor softmax(Tape* tape, const Tensor& a) {
  if (!a.defined() || a.size() == 0) throw DataError("softmax: empty input");
  Vec out(a.values());
  double mx = out[0];
  for (double x : out) mx = std::max(mx, x);
  double total = 0.0;
  for (double& x : out) {
    x = std::exp(x - mx);
    total += x;
  }
  for (double& x : out) x /= total;
  return detail::make_result(
      tape, a.shape(), std::move(out), {a},
      [](TensorNode& n) {
        double mix = 0.0;
        for (size_t i = 0; i < n.grad.size(); ++i) mix += n.grad[i] * n.value[i];
        for (size_t i = 0; i < n.grad.size(); ++i)
          detail::accumulate(*n.parents[0], i, n.value[i] * (n.grad[i] - mix));
      },
      "softmax");
}

inline Tensor sum(Tape* tape, const Tensor& a) {
  double acc = 0.0;
  for (double x : a.values()) acc += x;
  return detail::make_result(
      tape, {}, {acc}, {a},
      [](TensorNode& n) {
        for (size_t i = 0; i < n.parents[0]->value.size(); ++i)
          detail::accumulate(*n.parents[0], i, n.grad[0]);
      },
      "sum");
}

constexpr double kProbabilityFloor = 1e-12;

// -log(dist[target]) with the probability clamped at 1e-12 before the log.
inline Tensor cross_entropy(Tape* tape, const Tensor& dist, int target) {
  if (target < 0 || target >= dist.size())
    throw DataError("cross_entropy: target " + std::to_string(target) +
                    " out of range for size " + std::to_string(dist.size()));
  double p = dist[target];
  bool clamped = p < kProbabilityFloor;
  double pc = clamped ? kProbabilityFloor : p;
  return detail::make_result(
      tape, {}, {-std::log(pc)}, {dist},
      [target, clamped, pc](TensorNode& n) {
        if (!clamped)
          detail::accumulate(*n.parents[0], static_cast<size_t>(target), -n.grad[0] / pc);
      },
      "cross_entropy");
}

// Vector of s.v_j over a list of equally shaped vectors.
inline Tensor dots(Tape* tape, const Tensor& s, std::span<const Tensor> vs) {
  if (vs.empty()) throw DataError("dots: empty list");
  Vec out;
  out.reserve(vs.size());
  std::vector<Tensor> parents;
  parents.reserve(vs.size() + 1);
  parents.push_back(s);
  for (const Tensor& v : vs) {
    detail::require_same_shape(s, v, "dots");
    double acc = 0.0;
    for (size_t i = 0; i < s.values().size(); ++i) acc += s.values()[i] * v.values()[i];
    out.push_back(acc);
    parents.push_back(v);
  }
  int n = static_cast<int>(out.size());
  return detail::make_result(
      tape, {n}, std::move(out), std::move(parents),
      [](TensorNode& n) {
        TensorNode& sp = *n.parents[0];
        for (size_t j = 0; j + 1 < n.parents.size(); ++j) {
          double g = n.grad[j];
          if (g == 0.0) continue;
          TensorNode& vp = *n.parents[j + 1];
          for (size_t i = 0; i < sp.value.size(); ++i) {
            detail::accumulate(sp, i, g * vp.value[i]);
            detail::accumulate(vp, i, g * sp.value[i]);
          }
        }
      },
      "dots");
}

// sum_j w[j] * v_j over a list of equally shaped tensors.
inline Tensor weighted_sum(Tape* tape, const Tensor& w, std::span<const Tensor> vs) {
  if (vs.empty()) throw DataError("weighted_sum: empty list");
  if (w.size() != static_cast<int>(vs.size()))
    throw DimensionError("weighted_sum: weight count mismatch");
  Vec out(vs.front().values().size(), 0.0);
  std::vector<Tensor> parents;
  parents.reserve(vs.size() + 1);
  parents.push_back(w);
  for (size_t j = 0; j < vs.size(); ++j) {
    detail::require_same_shape(vs.front(), vs[j], "weighted_sum");
    double wj = w[static_cast<int>(j)];
    for (size_t i = 0; i < out.size(); ++i) out[i] += wj * vs[j].values()[i];
    parents.push_back(vs[j]);
  }
  return detail::make_result(
      tape, vs.front().shape(), std::move(out), std::move(parents),
      [](TensorNode& n) {
        TensorNode& wp = *n.parents[0];
        for (size_t j = 0; j + 1 < n.parents.size(); ++j) {
          TensorNode& vp = *n.parents[j + 1];
          double wj = wp.value[j];
          double gv = 0.0;
          for (size_t i = 0; i < n.grad.size(); ++i) {
            gv += n.grad[i] * vp.value[i];
            detail::accumulate(vp, i, n.grad[i] * wj);
          }
          detail::accumulate(wp, j, gv);
        }
      },
      "weighted_sum");
}

// Row i of a (r,c) matrix; the usual embedding lookup.
inline Tensor row(Tape* tape, const Tensor& m, int i) {
  if (m.shape().size() != 2) throw DimensionError("row: expected a matrix");
  int rows = m.shape()[0], cols = m.shape()[1];
  if (i < 0 || i >= rows)
    throw DataError("row " + std::to_string(i) + " out of range for " + shape_str(m.shape()));
  Vec out(m.values().begin() + static_cast<size_t>(i) * cols,
          m.values().begin() + static_cast<size_t>(i + 1) * cols);
  return detail::make_result(
      tape, {cols}, std::move(out), {m},
      [i, cols](TensorNode& n) {
        for (int c = 0; c < cols; ++c)
          detail::accumulate(*n.parents[0], static_cast<size_t>(i) * cols + c,
                             n.grad[static_cast<size_t>(c)]);
      },
      "row");
}

}  // namespace conceptflow
