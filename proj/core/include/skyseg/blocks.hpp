#pragma once

// Segmentation network building blocks: SL, FDB, FRSR, CRASPP, LKBR, and the
// DoS/UpS transitions. Each unit is a bundle of named parameter tensors
// plus a pure forward function over the autodiff ops.

#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "skyseg/layers.hpp"
#include "skyseg/tensor.hpp"

namespace skyseg {

// Owns the ordered list of (name, tensor) parameters of a network and
// hands out freshly initialized tensors. Names are unique and stable, so
// they double as the serialization key. Each parameter draws from its own
// seed derived from the base seed and a running counter, which keeps
// initialization reproducible and independent of tensor sizes.
template <class T>
class ParamRegistry {
public:
  explicit ParamRegistry(std::uint64_t base_seed = 0) : base_seed_(base_seed) {}

  Tensor<T> he_uniform(const std::string& name, Shape dims, std::size_t fan_in) {
    auto t = he_uniform_init<T>(std::move(dims), fan_in, next_seed());
    return track(name, std::move(t));
  }

  Tensor<T> constant(const std::string& name, Shape dims, T value) {
    next_seed();  // keep the seed stream aligned regardless of init kind
    return track(name, Tensor<T>::full(std::move(dims), value));
  }

  // Jump the seed counter; used to give each task branch its own offset.
  void reseed_offset(std::uint64_t offset) { counter_ = offset; }

  std::vector<std::pair<std::string, Tensor<T>>>& params() { return params_; }
  const std::vector<std::pair<std::string, Tensor<T>>>& params() const { return params_; }

  std::size_t element_count() const {
    std::size_t n = 0;
    for (const auto& [name, t] : params_) n += t.size();
    return n;
  }

  void zero_grads() {
    for (auto& [name, t] : params_) t.zero_grad();
  }

private:
  std::uint64_t next_seed() {
    return base_seed_ + 0x9E3779B97F4A7C15ull * (++counter_);
  }

  Tensor<T> track(const std::string& name, Tensor<T> t) {
    for (const auto& [n, unused] : params_)
      if (n == name) throw ConfigError("duplicate parameter name: " + name);
    t.set_requires_grad(true);
    params_.emplace_back(name, t);
    return t;
  }

  std::uint64_t base_seed_;
  std::uint64_t counter_ = 0;
  std::vector<std::pair<std::string, Tensor<T>>> params_;
};

template <class T>
struct Conv2dLayer {
  Tensor<T> weight, bias;
  std::size_t stride = 1, dilation = 1;

  Conv2dLayer() = default;
  Conv2dLayer(ParamRegistry<T>& reg, const std::string& name, std::size_t cout,
              std::size_t cin, std::size_t kh, std::size_t kw, std::size_t stride_ = 1,
              std::size_t dilation_ = 1)
      : weight(reg.he_uniform(name + ".weight", {cout, cin, kh, kw}, cin * kh * kw)),
        bias(reg.constant(name + ".bias", {cout}, T(0))),
        stride(stride_),
        dilation(dilation_) {}

  Tensor<T> operator()(const Tensor<T>& x) const {
    return conv2d(x, weight, bias, stride, dilation);
  }
};

template <class T>
struct BatchNormLayer {
  Tensor<T> gamma, beta;
  T eps = T(1e-5);

  BatchNormLayer() = default;
  BatchNormLayer(ParamRegistry<T>& reg, const std::string& name, std::size_t channels)
      : gamma(reg.constant(name + ".gamma", {channels}, T(1))),
        beta(reg.constant(name + ".beta", {channels}, T(0))) {}

  Tensor<T> operator()(const Tensor<T>& x) const { return batchnorm(x, gamma, beta, eps); }
};

template <class T>
struct SeparableConvLayer {
  Tensor<T> depthwise, pointwise, bias;

  SeparableConvLayer() = default;
  SeparableConvLayer(ParamRegistry<T>& reg, const std::string& name, std::size_t cout,
                     std::size_t cin, std::size_t k = 3)
      : depthwise(reg.he_uniform(name + ".depthwise", {cin, 1, k, k}, k * k)),
        pointwise(reg.he_uniform(name + ".pointwise", {cout, cin, 1, 1}, cin)),
        bias(reg.constant(name + ".bias", {cout}, T(0))) {}

  Tensor<T> operator()(const Tensor<T>& x) const {
    return separable_conv2d(x, depthwise, pointwise, bias);
  }
};

// Separable Layer: BN -> ReLU -> depthwise-separable conv, growth_rate outputs.
template <class T>
struct SLUnit {
  BatchNormLayer<T> bn;
  SeparableConvLayer<T> sep;

  SLUnit() = default;
  SLUnit(ParamRegistry<T>& reg, const std::string& name, std::size_t cin, std::size_t growth)
      : bn(reg, name + ".bn", cin), sep(reg, name + ".sep", growth, cin) {}

  Tensor<T> operator()(const Tensor<T>& x) const { return sep(relu(bn(x))); }
};

// Fully Dense Block. Layer i consumes the concatenation of the block input
// and all previous layer outputs. With include_input, the block output is
// concat(input, layer outputs) and the input is additionally added onto the
// leading channels (the extra residual connection); channels out =
// in + n*growth. Decoder blocks set include_input=false and emit only the
// n*growth new channels.
template <class T>
struct FDBUnit {
  std::vector<SLUnit<T>> layers;
  std::size_t in_channels = 0, growth = 0;
  bool include_input = true;
  bool input_residual = true;

  FDBUnit() = default;
  FDBUnit(ParamRegistry<T>& reg, const std::string& name, std::size_t cin,
          std::size_t n_layers, std::size_t growth_, bool include_input_ = true,
          bool input_residual_ = true)
      : in_channels(cin), growth(growth_), include_input(include_input_),
        input_residual(input_residual_) {
    for (std::size_t i = 0; i < n_layers; ++i)
      layers.emplace_back(reg, name + ".sl" + std::to_string(i),
                          cin + i * growth_, growth_);
  }

  std::size_t out_channels() const {
    return (include_input ? in_channels : 0) + layers.size() * growth;
  }

  Tensor<T> operator()(const Tensor<T>& x) const {
    if (x.dims()[1] != in_channels)
      throw ShapeError("FDB: expected " + std::to_string(in_channels) +
                       " input channels, got " + std::to_string(x.dims()[1]));
    std::vector<Tensor<T>> feats{x};
    for (const auto& layer : layers) {
      Tensor<T> in = feats.size() == 1 ? x : concat(feats, 1);
      feats.push_back(layer(in));
    }
    std::vector<Tensor<T>> outs;
    if (include_input)
      outs.push_back(input_residual ? add(x, x) : x);
    outs.insert(outs.end(), feats.begin() + 1, feats.end());
    return outs.size() == 1 ? outs[0] : concat(outs, 1);
  }
};

// Full-Resolution Separable Residual unit. The residual stream carries the
// input conv output at full resolution; the pooling stream downsamples
// exactly once, widens to 2F, and is folded back in additively. `tap` is the
// pooling-stream activation at half resolution (2F channels), used by the
// encoder to feed the next stage.
template <class T>
struct FRSRUnit {
  Conv2dLayer<T> input_conv;       // 3x3 on the first unit, 1x1 afterwards
  Conv2dLayer<T> pool_conv;        // F -> 2F
  BatchNormLayer<T> pool_bn;
  SeparableConvLayer<T> sep;       // 2F -> 2F
  BatchNormLayer<T> sep_bn;
  Conv2dLayer<T> out_conv;         // 1x1, 2F -> F
  std::size_t features = 0;

  FRSRUnit() = default;
  FRSRUnit(ParamRegistry<T>& reg, const std::string& name, std::size_t cin,
           std::size_t features_, bool first)
      : input_conv(reg, name + ".in", features_, cin, first ? 3 : 1, first ? 3 : 1),
        pool_conv(reg, name + ".pool_conv", 2 * features_, features_, 3, 3),
        pool_bn(reg, name + ".pool_bn", 2 * features_),
        sep(reg, name + ".sep", 2 * features_, 2 * features_),
        sep_bn(reg, name + ".sep_bn", 2 * features_),
        out_conv(reg, name + ".out", features_, 2 * features_, 1, 1),
        features(features_) {}

  struct Result {
    Tensor<T> main;  // F channels, input resolution
    Tensor<T> tap;   // 2F channels, half resolution
  };

  Result forward(const Tensor<T>& x) const {
    Tensor<T> residual = input_conv(x);
    Tensor<T> p = maxpool2(residual);
    p = relu(pool_bn(pool_conv(p)));
    p = relu(sep_bn(sep(p)));
    Tensor<T> tap = p;
    Tensor<T> up = upsample_nn2(out_conv(p));
    return {add(residual, up), tap};
  }

  Tensor<T> operator()(const Tensor<T>& x) const { return forward(x).main; }
};

// Concatenated Reversed ASPP: one atrous branch per rate in the given order
// plus a duplicate set in reversed order; outputs are concatenated and fused
// by a 1x1 convolution.
template <class T>
struct CRASPPUnit {
  std::vector<Conv2dLayer<T>> branches;
  Conv2dLayer<T> fuse;
  std::vector<std::size_t> rates;  // forward order then reversed

  CRASPPUnit() = default;
  CRASPPUnit(ParamRegistry<T>& reg, const std::string& name, std::size_t cin,
             std::vector<std::size_t> atrous_rates, std::size_t width, std::size_t cout) {
    rates = atrous_rates;
    rates.insert(rates.end(), atrous_rates.rbegin(), atrous_rates.rend());
    for (std::size_t i = 0; i < rates.size(); ++i)
      branches.emplace_back(reg, name + ".branch" + std::to_string(i), width, cin, 3, 3,
                            1, rates[i]);
    fuse = Conv2dLayer<T>(reg, name + ".fuse", cout, rates.size() * width, 1, 1);
  }

  Tensor<T> operator()(const Tensor<T>& x) const {
    std::vector<Tensor<T>> outs;
    outs.reserve(branches.size());
    for (const auto& b : branches) outs.push_back(relu(b(x)));
    return fuse(concat(outs, 1));
  }
};

// Large Kernel with Boundary Refinement: two separable large-kernel paths
// (kx1 then 1xk, and 1xk then kx1) summed, followed by a residual 3x3
// refinement unit. Internal width is 21 channels and the output stays at 21.
template <class T>
struct LKBRUnit {
  Conv2dLayer<T> a1, a2;  // kx1 then 1xk
  Conv2dLayer<T> b1, b2;  // 1xk then kx1
  Conv2dLayer<T> br1, br2;
  static constexpr std::size_t kWidth = 21;

  LKBRUnit() = default;
  LKBRUnit(ParamRegistry<T>& reg, const std::string& name, std::size_t cin, std::size_t k)
      : a1(reg, name + ".a1", kWidth, cin, k, 1),
        a2(reg, name + ".a2", kWidth, kWidth, 1, k),
        b1(reg, name + ".b1", kWidth, cin, 1, k),
        b2(reg, name + ".b2", kWidth, kWidth, k, 1),
        br1(reg, name + ".br1", kWidth, kWidth, 3, 3),
        br2(reg, name + ".br2", kWidth, kWidth, 3, 3) {}

  Tensor<T> operator()(const Tensor<T>& x) const {
    Tensor<T> gcn = add(a2(a1(x)), b2(b1(x)));
    return add(gcn, br2(relu(br1(gcn))));
  }
};

// Downsampling transition: channel-compressing conv followed by 2x2 max-pool.
// Encoder-facing instances use a 3x3 conv, decoder-facing ones 1x1.
template <class T>
struct DoSUnit {
  Conv2dLayer<T> conv;

  DoSUnit() = default;
  DoSUnit(ParamRegistry<T>& reg, const std::string& name, std::size_t cout, std::size_t cin,
          std::size_t k = 1)
      : conv(reg, name + ".conv", cout, cin, k, k) {}

  Tensor<T> operator()(const Tensor<T>& x) const { return maxpool2(conv(x)); }
};

// Upsampling transition: nearest-neighbor x2 followed by a 3x3 conv.
template <class T>
struct UpSUnit {
  Conv2dLayer<T> conv;

  UpSUnit() = default;
  UpSUnit(ParamRegistry<T>& reg, const std::string& name, std::size_t cout, std::size_t cin)
      : conv(reg, name + ".conv", cout, cin, 3, 3) {}

  Tensor<T> operator()(const Tensor<T>& x) const { return conv(upsample_nn2(x)); }
};

}  // namespace skyseg
