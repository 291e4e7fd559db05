#pragma once

// Dense row-major tensors with reverse-mode automatic differentiation.
//
// Every operation is a pure function: inputs are never modified and the
// result is a fresh tensor. When any input participates in gradient
// tracking, the result records its parents and a backward rule; calling
// backward() on a scalar root walks the recorded tape once in reverse
// topological order and accumulates gradients into every tracked tensor.
// The tape is dismantled after backward(), so one graph lives per forward
// pass. All reductions accumulate in sequential element order, which keeps
// results deterministic.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <limits>
#include <memory>
#include <random>
#include <span>
#include <string>
#include <unordered_set>
#include <utility>
#include <vector>

#include "skyseg/errors.hpp"

namespace skyseg {

enum class DType { F32, F64 };

inline const char* dtype_name(DType d) { return d == DType::F32 ? "f32" : "f64"; }

using Shape = std::vector<std::size_t>;

inline std::size_t shape_size(const Shape& dims) {
  std::size_t n = 1;
  for (std::size_t d : dims) {
    if (d != 0 && n > std::numeric_limits<std::size_t>::max() / d)
      throw ShapeError("tensor element count overflows size_t");
    n *= d;
  }
  return n;  // empty product = 1, i.e. rank-0 holds one element
}

inline std::string shape_str(const Shape& dims) {
  std::string s = "[";
  for (std::size_t i = 0; i < dims.size(); ++i) {
    if (i) s += ",";
    s += std::to_string(dims[i]);
  }
  return s + "]";
}

template <class T>
class Tensor {
  static_assert(std::is_floating_point_v<T>, "Tensor element type must be f32 or f64");

public:
  struct Node {
    Shape dims;
    std::vector<T> data;
    std::vector<T> grad;  // empty until touched by backward()
    bool requires_grad = false;
    std::vector<std::shared_ptr<Node>> parents;
    std::function<void(Node&)> backprop;

    std::vector<T>& grad_buf() {
      if (grad.empty()) grad.assign(data.size(), T(0));
      return grad;
    }
  };

  Tensor() = default;

  static Tensor full(Shape dims, T value) {
    auto n = std::make_shared<Node>();
    n->data.assign(shape_size(dims), value);
    n->dims = std::move(dims);
    return Tensor(std::move(n));
  }

  static Tensor zeros(Shape dims) { return full(std::move(dims), T(0)); }

  static Tensor scalar(T value) { return full({}, value); }

  static Tensor from_data(Shape dims, std::vector<T> values) {
    if (values.size() != shape_size(dims))
      throw ShapeError("from_data: " + std::to_string(values.size()) +
                       " values for shape " + shape_str(dims));
    auto n = std::make_shared<Node>();
    n->dims = std::move(dims);
    n->data = std::move(values);
    return Tensor(std::move(n));
  }

  // Seeded fills. Identical (dims, seed, bounds) yield bit-identical data.
  static Tensor uniform(Shape dims, std::uint64_t seed, T lo = T(0), T hi = T(1)) {
    auto n = std::make_shared<Node>();
    n->data.resize(shape_size(dims));
    n->dims = std::move(dims);
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<T> dist(lo, hi);
    for (auto& v : n->data) v = dist(rng);
    return Tensor(std::move(n));
  }

  static Tensor normal(Shape dims, std::uint64_t seed, T mean = T(0), T stddev = T(1)) {
    auto n = std::make_shared<Node>();
    n->data.resize(shape_size(dims));
    n->dims = std::move(dims);
    std::mt19937_64 rng(seed);
    std::normal_distribution<T> dist(mean, stddev);
    for (auto& v : n->data) v = dist(rng);
    return Tensor(std::move(n));
  }

  bool defined() const { return node_ != nullptr; }
  const Shape& dims() const { return node_->dims; }
  std::size_t rank() const { return node_->dims.size(); }
  std::size_t size() const { return node_->data.size(); }
  DType dtype() const { return std::is_same_v<T, float> ? DType::F32 : DType::F64; }

  std::span<const T> data() const { return node_->data; }
  T item() const {
    if (size() != 1) throw ShapeError("item() on tensor of size " + std::to_string(size()));
    return node_->data[0];
  }

  // In-place access for optimizer updates; never call on tensors that are
  // part of a live graph.
  std::span<T> mutable_data() { return node_->data; }

  bool requires_grad() const { return node_->requires_grad; }
  Tensor& set_requires_grad(bool v = true) {
    node_->requires_grad = v;
    return *this;
  }

  bool has_grad() const { return !node_->grad.empty(); }
  std::span<const T> grad() const { return node_->grad; }
  T grad_at(std::size_t i) const { return node_->grad.empty() ? T(0) : node_->grad[i]; }
  void zero_grad() { node_->grad.clear(); }

  // Shares the value but drops graph history and gradient tracking.
  Tensor detach() const {
    auto n = std::make_shared<Node>();
    n->dims = node_->dims;
    n->data = node_->data;
    return Tensor(std::move(n));
  }

  bool same_node(const Tensor& other) const { return node_ == other.node_; }

  // Reverse-mode sweep from a scalar root. Visits every recorded node once,
  // then releases the tape.
  void backward() const {
    if (!defined() || rank() != 0)
      throw ShapeError("backward() requires a rank-0 (scalar) root");
    std::vector<Node*> order;
    topo_order(node_.get(), order);
    node_->grad_buf()[0] = T(1);
    for (auto it = order.rbegin(); it != order.rend(); ++it) {
      if ((*it)->backprop) (*it)->backprop(**it);
    }
    for (Node* n : order) {
      n->backprop = nullptr;
      n->parents.clear();
    }
  }

  // --- graph construction (used by the op layer) ---

  static Tensor make_op(Shape dims, std::vector<T> data,
                        std::vector<Tensor> inputs,
                        std::function<void(Node&)> backprop) {
    if (data.size() != shape_size(dims)) throw ShapeError("make_op: data/shape mismatch");
    auto n = std::make_shared<Node>();
    n->dims = std::move(dims);
    n->data = std::move(data);
    bool track = false;
    for (const auto& in : inputs) track = track || in.tracked();
    if (track) {
      n->requires_grad = true;
      n->parents.reserve(inputs.size());
      for (auto& in : inputs) n->parents.push_back(in.node_);
      n->backprop = std::move(backprop);
    }
    return Tensor(std::move(n));
  }

  bool tracked() const { return node_->requires_grad || node_->backprop != nullptr; }

  std::shared_ptr<Node> node() const { return node_; }

private:
  explicit Tensor(std::shared_ptr<Node> n) : node_(std::move(n)) {}

  static void topo_order(Node* root, std::vector<Node*>& order) {
    std::unordered_set<Node*> seen;
    // Iterative post-order DFS; recorded order is a valid topological order.
    std::vector<std::pair<Node*, std::size_t>> stack;
    stack.emplace_back(root, 0);
    seen.insert(root);
    while (!stack.empty()) {
      auto& [node, idx] = stack.back();
      if (idx < node->parents.size()) {
        Node* p = node->parents[idx++].get();
        if (seen.insert(p).second) stack.emplace_back(p, 0);
      } else {
        order.push_back(node);
        stack.pop_back();
      }
    }
  }

  std::shared_ptr<Node> node_;
};

// ---------------------------------------------------------------------------
// Element-wise operations. Binary ops require identical shapes or a rank-0
// operand (scalar broadcast); no other broadcasting exists.
// ---------------------------------------------------------------------------

namespace detail {

template <class T>
void check_binary_dims(const Tensor<T>& a, const Tensor<T>& b, const char* op) {
  if (a.dims() == b.dims() || a.rank() == 0 || b.rank() == 0) return;
  throw ShapeError(std::string(op) + ": shape mismatch " + shape_str(a.dims()) +
                   " vs " + shape_str(b.dims()));
}

template <class T>
void accumulate_grad(typename Tensor<T>::Node& dst, std::span<const T> g) {
  auto& buf = dst.grad_buf();
  if (buf.size() == 1 && g.size() > 1) {
    T s = 0;  // rank-0 operand: fold the broadcast back down
    for (T v : g) s += v;
    buf[0] += s;
  } else {
    for (std::size_t i = 0; i < g.size(); ++i) buf[i] += g[i];
  }
}

}  // namespace detail

template <class T, class Fwd, class Bwd>
Tensor<T> binary_op(const Tensor<T>& a, const Tensor<T>& b, const char* name, Fwd fwd, Bwd bwd) {
  detail::check_binary_dims(a, b, name);
  const bool abc = a.rank() == 0 && b.rank() != 0;  // broadcast a
  const bool bbc = b.rank() == 0 && a.rank() != 0;
  const auto& big = bbc || !abc ? a : b;
  std::size_t n = big.size();
  std::vector<T> out(n);
  auto ad = a.data(), bd = b.data();
  for (std::size_t i = 0; i < n; ++i) fwd(out[i], ad[abc ? 0 : i], bd[bbc ? 0 : i]);

  auto an = a.node(), bn = b.node();
  return Tensor<T>::make_op(
      big.dims(), std::move(out), {a, b},
      [an, bn, abc, bbc, bwd](typename Tensor<T>::Node& self) {
        std::size_t n = self.data.size();
        std::vector<T> ga(n), gb(n);
        for (std::size_t i = 0; i < n; ++i)
          bwd(ga[i], gb[i], self.grad[i], an->data[abc ? 0 : i], bn->data[bbc ? 0 : i]);
        if (an->requires_grad || an->backprop) detail::accumulate_grad<T>(*an, ga);
        if (bn->requires_grad || bn->backprop) detail::accumulate_grad<T>(*bn, gb);
      });
}

template <class T>
Tensor<T> add(const Tensor<T>& a, const Tensor<T>& b) {
  return binary_op<T>(
      a, b, "add", [](T& o, T x, T y) { o = x + y; },
      [](T& ga, T& gb, T g, T, T) { ga = g; gb = g; });
}

template <class T>
Tensor<T> sub(const Tensor<T>& a, const Tensor<T>& b) {
  return binary_op<T>(
      a, b, "sub", [](T& o, T x, T y) { o = x - y; },
      [](T& ga, T& gb, T g, T, T) { ga = g; gb = -g; });
}

template <class T>
Tensor<T> mul(const Tensor<T>& a, const Tensor<T>& b) {
  return binary_op<T>(
      a, b, "mul", [](T& o, T x, T y) { o = x * y; },
      [](T& ga, T& gb, T g, T x, T y) { ga = g * y; gb = g * x; });
}

template <class T, class Fwd, class Bwd>
Tensor<T> unary_op(const Tensor<T>& a, Fwd fwd, Bwd bwd) {
  std::size_t n = a.size();
  std::vector<T> out(n);
  auto ad = a.data();
  for (std::size_t i = 0; i < n; ++i) out[i] = fwd(ad[i]);
  auto an = a.node();
  return Tensor<T>::make_op(a.dims(), std::move(out), {a},
                            [an, bwd](typename Tensor<T>::Node& self) {
                              auto& ga = an->grad_buf();
                              for (std::size_t i = 0; i < self.data.size(); ++i)
                                ga[i] += bwd(self.grad[i], an->data[i], self.data[i]);
                            });
}

template <class T>
Tensor<T> negate(const Tensor<T>& a) {
  return unary_op(a, [](T x) { return -x; }, [](T g, T, T) { return -g; });
}

template <class T>
Tensor<T> relu(const Tensor<T>& a) {
  return unary_op(a, [](T x) { return x > T(0) ? x : T(0); },
                  [](T g, T x, T) { return x > T(0) ? g : T(0); });
}

template <class T>
Tensor<T> log(const Tensor<T>& a) {
  for (T v : a.data())
    if (!(v > T(0))) throw DomainError("log of non-positive value " + std::to_string(v));
  return unary_op(a, [](T x) { return std::log(x); }, [](T g, T x, T) { return g / x; });
}

template <class T>
Tensor<T> exp(const Tensor<T>& a) {
  return unary_op(a, [](T x) { return std::exp(x); }, [](T g, T, T y) { return g * y; });
}

template <class T>
Tensor<T> scalar_mul(const Tensor<T>& a, T s) {
  return unary_op(a, [s](T x) { return s * x; }, [s](T g, T, T) { return s * g; });
}

// ---------------------------------------------------------------------------
// Reductions. Axes are removed from the output shape; reducing over all axes
// yields a rank-0 tensor. Accumulation is sequential in element order.
// ---------------------------------------------------------------------------

namespace detail {

// For each input element, the flat index of the output cell it reduces into.
template <class T>
struct ReduceMap {
  Shape out_dims;
  std::vector<std::size_t> in_strides;   // per input dim
  std::vector<std::size_t> out_strides;  // 0 for reduced dims
  std::vector<std::size_t> in_dims;
  std::size_t group = 1;  // elements folded into each output cell

  ReduceMap(const Shape& dims, std::vector<std::size_t> axes) {
    std::sort(axes.begin(), axes.end());
    for (std::size_t i = 1; i < axes.size(); ++i)
      if (axes[i] == axes[i - 1]) throw ShapeError("reduce: duplicate axis");
    for (std::size_t a : axes)
      if (a >= dims.size()) throw ShapeError("reduce: axis " + std::to_string(a) +
                                             " out of range for " + shape_str(dims));
    std::vector<bool> reduced(dims.size(), false);
    for (std::size_t a : axes) reduced[a] = true;
    in_dims.assign(dims.begin(), dims.end());
    in_strides.assign(dims.size(), 1);
    for (std::size_t d = dims.size(); d-- > 1;)
      in_strides[d - 1] = in_strides[d] * dims[d];
    for (std::size_t d = 0; d < dims.size(); ++d) {
      if (reduced[d]) group *= dims[d];
      else out_dims.push_back(dims[d]);
    }
    out_strides.assign(dims.size(), 0);
    std::size_t s = 1;
    for (std::size_t d = dims.size(); d-- > 0;) {
      if (!reduced[d]) {
        out_strides[d] = s;
        s *= dims[d];
      }
    }
  }

  std::size_t out_index(std::size_t flat) const {
    std::size_t o = 0;
    for (std::size_t d = 0; d < in_dims.size(); ++d)
      o += ((flat / in_strides[d]) % in_dims[d]) * out_strides[d];
    return o;
  }
};

inline std::vector<std::size_t> all_axes(std::size_t rank) {
  std::vector<std::size_t> axes(rank);
  for (std::size_t i = 0; i < rank; ++i) axes[i] = i;
  return axes;
}

}  // namespace detail

template <class T>
Tensor<T> sum(const Tensor<T>& t, std::vector<std::size_t> axes) {
  detail::ReduceMap<T> map(t.dims(), std::move(axes));
  std::vector<T> out(shape_size(map.out_dims), T(0));
  auto d = t.data();
  for (std::size_t i = 0; i < d.size(); ++i) out[map.out_index(i)] += d[i];
  auto tn = t.node();
  return Tensor<T>::make_op(map.out_dims, std::move(out), {t},
                            [tn, map](typename Tensor<T>::Node& self) {
                              auto& g = tn->grad_buf();
                              for (std::size_t i = 0; i < g.size(); ++i)
                                g[i] += self.grad[map.out_index(i)];
                            });
}

template <class T>
Tensor<T> sum(const Tensor<T>& t) { return sum(t, detail::all_axes(t.rank())); }

template <class T>
Tensor<T> mean(const Tensor<T>& t, std::vector<std::size_t> axes) {
  detail::ReduceMap<T> map(t.dims(), std::move(axes));
  if (map.group == 0) throw ShapeError("mean over zero elements");
  std::vector<T> out(shape_size(map.out_dims), T(0));
  auto d = t.data();
  for (std::size_t i = 0; i < d.size(); ++i) out[map.out_index(i)] += d[i];
  const T inv = T(1) / T(map.group);
  for (auto& v : out) v *= inv;
  auto tn = t.node();
  return Tensor<T>::make_op(map.out_dims, std::move(out), {t},
                            [tn, map, inv](typename Tensor<T>::Node& self) {
                              auto& g = tn->grad_buf();
                              for (std::size_t i = 0; i < g.size(); ++i)
                                g[i] += self.grad[map.out_index(i)] * inv;
                            });
}

template <class T>
Tensor<T> mean(const Tensor<T>& t) { return mean(t, detail::all_axes(t.rank())); }

// Gradient is routed to the lowest-index maximal element of each group.
template <class T>
Tensor<T> max(const Tensor<T>& t, std::vector<std::size_t> axes) {
  detail::ReduceMap<T> map(t.dims(), std::move(axes));
  std::size_t on = shape_size(map.out_dims);
  std::vector<T> out(on, -std::numeric_limits<T>::infinity());
  std::vector<std::size_t> arg(on, 0);
  auto d = t.data();
  if (d.empty()) throw ShapeError("max over empty tensor");
  for (std::size_t i = 0; i < d.size(); ++i) {
    std::size_t o = map.out_index(i);
    if (d[i] > out[o]) {
      out[o] = d[i];
      arg[o] = i;
    }
  }
  auto tn = t.node();
  return Tensor<T>::make_op(map.out_dims, std::move(out), {t},
                            [tn, arg](typename Tensor<T>::Node& self) {
                              auto& g = tn->grad_buf();
                              for (std::size_t o = 0; o < arg.size(); ++o)
                                g[arg[o]] += self.grad[o];
                            });
}

template <class T>
Tensor<T> max(const Tensor<T>& t) { return max(t, detail::all_axes(t.rank())); }

// ---------------------------------------------------------------------------
// Shape operations: exact element rearrangements, backward is the inverse.
// ---------------------------------------------------------------------------

template <class T>
Tensor<T> reshape(const Tensor<T>& t, Shape dims) {
  if (shape_size(dims) != t.size())
    throw ShapeError("reshape " + shape_str(t.dims()) + " -> " + shape_str(dims) +
                     " changes element count");
  std::vector<T> out(t.data().begin(), t.data().end());
  auto tn = t.node();
  return Tensor<T>::make_op(std::move(dims), std::move(out), {t},
                            [tn](typename Tensor<T>::Node& self) {
                              auto& g = tn->grad_buf();
                              for (std::size_t i = 0; i < g.size(); ++i) g[i] += self.grad[i];
                            });
}

template <class T>
Tensor<T> concat(const std::vector<Tensor<T>>& parts, std::size_t axis) {
  if (parts.empty()) throw ShapeError("concat of zero tensors");
  const Shape& d0 = parts[0].dims();
  if (axis >= d0.size()) throw ShapeError("concat: bad axis");
  Shape out_dims = d0;
  out_dims[axis] = 0;
  for (const auto& p : parts) {
    if (p.rank() != d0.size()) throw ShapeError("concat: rank mismatch");
    for (std::size_t d = 0; d < d0.size(); ++d)
      if (d != axis && p.dims()[d] != d0[d])
        throw ShapeError("concat: non-axis dims differ: " + shape_str(p.dims()) +
                         " vs " + shape_str(d0));
    out_dims[axis] += p.dims()[axis];
  }
  std::size_t outer = 1, rest = 1;
  for (std::size_t d = 0; d < axis; ++d) outer *= d0[d];
  for (std::size_t d = axis + 1; d < d0.size(); ++d) rest *= d0[d];

  std::vector<T> out(shape_size(out_dims));
  std::size_t block_total = out_dims[axis] * rest;
  std::vector<std::size_t> offsets;  // element offset of each part within a block
  {
    std::size_t off = 0;
    for (const auto& p : parts) {
      offsets.push_back(off);
      std::size_t blk = p.dims()[axis] * rest;
      auto pd = p.data();
      for (std::size_t o = 0; o < outer; ++o)
        std::copy_n(pd.data() + o * blk, blk, out.data() + o * block_total + off);
      off += blk;
    }
  }
  std::vector<std::shared_ptr<typename Tensor<T>::Node>> nodes;
  std::vector<std::size_t> blocks;
  for (const auto& p : parts) {
    nodes.push_back(p.node());
    blocks.push_back(p.dims()[axis] * rest);
  }
  return Tensor<T>::make_op(
      out_dims, std::move(out), parts,
      [nodes, blocks, offsets, outer, block_total](typename Tensor<T>::Node& self) {
        for (std::size_t k = 0; k < nodes.size(); ++k) {
          auto& n = *nodes[k];
          if (!n.requires_grad && !n.backprop) continue;
          auto& g = n.grad_buf();
          for (std::size_t o = 0; o < outer; ++o) {
            const T* src = self.grad.data() + o * block_total + offsets[k];
            T* dst = g.data() + o * blocks[k];
            for (std::size_t i = 0; i < blocks[k]; ++i) dst[i] += src[i];
          }
        }
      });
}

template <class T>
Tensor<T> slice(const Tensor<T>& t, const std::vector<std::size_t>& starts,
                const Shape& sizes) {
  const Shape& dims = t.dims();
  if (starts.size() != dims.size() || sizes.size() != dims.size())
    throw ShapeError("slice: starts/sizes rank mismatch");
  for (std::size_t d = 0; d < dims.size(); ++d)
    if (starts[d] + sizes[d] > dims[d])
      throw ShapeError("slice out of bounds on axis " + std::to_string(d));
  std::vector<std::size_t> in_strides(dims.size(), 1);
  for (std::size_t d = dims.size(); d-- > 1;) in_strides[d - 1] = in_strides[d] * dims[d];

  std::size_t on = shape_size(sizes);
  std::vector<T> out(on);
  std::vector<std::size_t> out_strides(sizes.size(), 1);
  for (std::size_t d = sizes.size(); d-- > 1;) out_strides[d - 1] = out_strides[d] * sizes[d];
  auto src_index = [starts, sizes, out_strides, in_strides](std::size_t flat) {
    std::size_t s = 0;
    for (std::size_t d = 0; d < sizes.size(); ++d)
      s += (starts[d] + (flat / out_strides[d]) % std::max<std::size_t>(sizes[d], 1)) *
           in_strides[d];
    return s;
  };
  auto td = t.data();
  for (std::size_t i = 0; i < on; ++i) out[i] = td[src_index(i)];
  auto tn = t.node();
  return Tensor<T>::make_op(sizes, std::move(out), {t},
                            [tn, src_index, on](typename Tensor<T>::Node& self) {
                              auto& g = tn->grad_buf();
                              for (std::size_t i = 0; i < on; ++i)
                                g[src_index(i)] += self.grad[i];
                            });
}

// Zero padding; pads[d] = {before, after} per axis.
template <class T>
Tensor<T> pad_zero(const Tensor<T>& t,
                   const std::vector<std::pair<std::size_t, std::size_t>>& pads) {
  const Shape& dims = t.dims();
  if (pads.size() != dims.size()) throw ShapeError("pad_zero: pads rank mismatch");
  Shape out_dims(dims.size());
  for (std::size_t d = 0; d < dims.size(); ++d)
    out_dims[d] = dims[d] + pads[d].first + pads[d].second;

  std::vector<std::size_t> in_strides(dims.size(), 1), out_strides(dims.size(), 1);
  for (std::size_t d = dims.size(); d-- > 1;) {
    in_strides[d - 1] = in_strides[d] * dims[d];
    out_strides[d - 1] = out_strides[d] * out_dims[d];
  }
  auto dst_index = [dims, pads, in_strides, out_strides](std::size_t flat) {
    std::size_t o = 0;
    for (std::size_t d = 0; d < dims.size(); ++d)
      o += (pads[d].first + (flat / in_strides[d]) % dims[d]) * out_strides[d];
    return o;
  };
  std::vector<T> out(shape_size(out_dims), T(0));
  auto td = t.data();
  for (std::size_t i = 0; i < td.size(); ++i) out[dst_index(i)] = td[i];
  auto tn = t.node();
  return Tensor<T>::make_op(out_dims, std::move(out), {t},
                            [tn, dst_index](typename Tensor<T>::Node& self) {
                              auto& g = tn->grad_buf();
                              for (std::size_t i = 0; i < g.size(); ++i)
                                g[i] += self.grad[dst_index(i)];
                            });
}

// Max-subtracted softmax along one axis; outputs are positive and sum to 1.
template <class T>
Tensor<T> softmax(const Tensor<T>& t, std::size_t axis) {
  const Shape& dims = t.dims();
  if (axis >= dims.size()) throw ShapeError("softmax: bad axis");
  std::size_t outer = 1, inner = 1, c = dims[axis];
  for (std::size_t d = 0; d < axis; ++d) outer *= dims[d];
  for (std::size_t d = axis + 1; d < dims.size(); ++d) inner *= dims[d];

  std::vector<T> out(t.size());
  auto td = t.data();
  for (std::size_t o = 0; o < outer; ++o) {
    for (std::size_t i = 0; i < inner; ++i) {
      std::size_t base = o * c * inner + i;
      T m = td[base];
      for (std::size_t k = 1; k < c; ++k) m = std::max(m, td[base + k * inner]);
      T z = 0;
      for (std::size_t k = 0; k < c; ++k) {
        T e = std::exp(td[base + k * inner] - m);
        out[base + k * inner] = e;
        z += e;
      }
      for (std::size_t k = 0; k < c; ++k) out[base + k * inner] /= z;
    }
  }
  auto tn = t.node();
  return Tensor<T>::make_op(
      dims, std::move(out), {t},
      [tn, outer, inner, c](typename Tensor<T>::Node& self) {
        auto& g = tn->grad_buf();
        for (std::size_t o = 0; o < outer; ++o) {
          for (std::size_t i = 0; i < inner; ++i) {
            std::size_t base = o * c * inner + i;
            T dot = 0;
            for (std::size_t k = 0; k < c; ++k)
              dot += self.grad[base + k * inner] * self.data[base + k * inner];
            for (std::size_t k = 0; k < c; ++k) {
              std::size_t idx = base + k * inner;
              g[idx] += self.data[idx] * (self.grad[idx] - dot);
            }
          }
        }
      });
}

using TensorF = Tensor<float>;
using TensorD = Tensor<double>;

}  // namespace skyseg
