#pragma once

// Differentiable layer primitives on NCHW tensors.
//
// Convolutions use "same" zero padding: at stride 1 spatial dims are
// preserved for any kernel size and dilation; at stride s the output is
// ceil(in/s). When the total padding is odd, the extra zero goes to the
// bottom/right. conv2d is im2col + a small hand-rolled GEMM; the inner
// loops are sequential, so results are deterministic.

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <vector>

#include "skyseg/errors.hpp"
#include "skyseg/tensor.hpp"

namespace skyseg {

namespace detail {

// C[M,N] (+)= A[M,K] * B[K,N]
template <class T>
void gemm(const T* a, const T* b, T* c, std::size_t m, std::size_t k, std::size_t n,
          bool accumulate) {
  for (std::size_t i = 0; i < m; ++i) {
    T* ci = c + i * n;
    if (!accumulate)
      for (std::size_t j = 0; j < n; ++j) ci[j] = T(0);
    const T* ai = a + i * k;
    for (std::size_t p = 0; p < k; ++p) {
      T av = ai[p];
      if (av == T(0)) continue;
      const T* bp = b + p * n;
      for (std::size_t j = 0; j < n; ++j) ci[j] += av * bp[j];
    }
  }
}

// C[M,K] += A[M,N] * B[K,N]^T
template <class T>
void gemm_nt_acc(const T* a, const T* b, T* c, std::size_t m, std::size_t n, std::size_t k) {
  for (std::size_t i = 0; i < m; ++i) {
    const T* ai = a + i * n;
    T* ci = c + i * k;
    for (std::size_t p = 0; p < k; ++p) {
      const T* bp = b + p * n;
      T s = 0;
      for (std::size_t j = 0; j < n; ++j) s += ai[j] * bp[j];
      ci[p] += s;
    }
  }
}

// C[K,N] = A[M,K]^T * B[M,N]
template <class T>
void gemm_tn(const T* a, const T* b, T* c, std::size_t m, std::size_t k, std::size_t n) {
  for (std::size_t i = 0; i < k * n; ++i) c[i] = T(0);
  for (std::size_t p = 0; p < m; ++p) {
    const T* bp = b + p * n;
    const T* ap = a + p * k;
    for (std::size_t i = 0; i < k; ++i) {
      T av = ap[i];
      if (av == T(0)) continue;
      T* ci = c + i * n;
      for (std::size_t j = 0; j < n; ++j) ci[j] += av * bp[j];
    }
  }
}

struct ConvGeom {
  std::size_t cin, h, w, kh, kw, stride, dil;
  std::size_t ho, wo;
  std::size_t pad_t, pad_l;

  ConvGeom(std::size_t cin_, std::size_t h_, std::size_t w_, std::size_t kh_,
           std::size_t kw_, std::size_t stride_, std::size_t dil_)
      : cin(cin_), h(h_), w(w_), kh(kh_), kw(kw_), stride(stride_), dil(dil_) {
    if (stride == 0 || dil == 0) throw ShapeError("conv2d: stride/dilation must be positive");
    ho = (h + stride - 1) / stride;
    wo = (w + stride - 1) / stride;
    std::size_t eff_kh = (kh - 1) * dil + 1;
    std::size_t eff_kw = (kw - 1) * dil + 1;
    std::size_t need_h = (ho - 1) * stride + eff_kh;
    std::size_t need_w = (wo - 1) * stride + eff_kw;
    pad_t = (need_h > h ? need_h - h : 0) / 2;
    pad_l = (need_w > w ? need_w - w : 0) / 2;
  }

  std::size_t patch() const { return cin * kh * kw; }
  std::size_t cols() const { return ho * wo; }
};

// x: one image [Cin,H,W] -> col [Cin*kh*kw, Ho*Wo]; out-of-bounds taps are 0.
template <class T>
void im2col(const T* x, const ConvGeom& g, T* col) {
  const std::size_t l = g.cols();
  for (std::size_t c = 0; c < g.cin; ++c) {
    const T* xc = x + c * g.h * g.w;
    for (std::size_t ky = 0; ky < g.kh; ++ky) {
      for (std::size_t kx = 0; kx < g.kw; ++kx) {
        T* row = col + ((c * g.kh + ky) * g.kw + kx) * l;
        for (std::size_t oy = 0; oy < g.ho; ++oy) {
          std::ptrdiff_t iy = std::ptrdiff_t(oy * g.stride + ky * g.dil) -
                              std::ptrdiff_t(g.pad_t);
          T* dst = row + oy * g.wo;
          if (iy < 0 || iy >= std::ptrdiff_t(g.h)) {
            for (std::size_t ox = 0; ox < g.wo; ++ox) dst[ox] = T(0);
            continue;
          }
          const T* src = xc + std::size_t(iy) * g.w;
          for (std::size_t ox = 0; ox < g.wo; ++ox) {
            std::ptrdiff_t ix = std::ptrdiff_t(ox * g.stride + kx * g.dil) -
                                std::ptrdiff_t(g.pad_l);
            dst[ox] = (ix < 0 || ix >= std::ptrdiff_t(g.w)) ? T(0) : src[ix];
          }
        }
      }
    }
  }
}

// Scatter-add the column gradient back into the image gradient.
template <class T>
void col2im_acc(const T* col, const ConvGeom& g, T* gx) {
  const std::size_t l = g.cols();
  for (std::size_t c = 0; c < g.cin; ++c) {
    T* xc = gx + c * g.h * g.w;
    for (std::size_t ky = 0; ky < g.kh; ++ky) {
      for (std::size_t kx = 0; kx < g.kw; ++kx) {
        const T* row = col + ((c * g.kh + ky) * g.kw + kx) * l;
        for (std::size_t oy = 0; oy < g.ho; ++oy) {
          std::ptrdiff_t iy = std::ptrdiff_t(oy * g.stride + ky * g.dil) -
                              std::ptrdiff_t(g.pad_t);
          if (iy < 0 || iy >= std::ptrdiff_t(g.h)) continue;
          const T* src = row + oy * g.wo;
          T* dst = xc + std::size_t(iy) * g.w;
          for (std::size_t ox = 0; ox < g.wo; ++ox) {
            std::ptrdiff_t ix = std::ptrdiff_t(ox * g.stride + kx * g.dil) -
                                std::ptrdiff_t(g.pad_l);
            if (ix >= 0 && ix < std::ptrdiff_t(g.w)) dst[ix] += src[ox];
          }
        }
      }
    }
  }
}

template <class T>
bool wants_grad(const std::shared_ptr<typename Tensor<T>::Node>& n) {
  return n->requires_grad || n->backprop != nullptr;
}

}  // namespace detail

// x [N,Cin,H,W], weight [Cout,Cin,kh,kw], bias [Cout] -> [N,Cout,H',W']
template <class T>
Tensor<T> conv2d(const Tensor<T>& x, const Tensor<T>& weight, const Tensor<T>& bias,
                 std::size_t stride = 1, std::size_t dilation = 1) {
  if (x.rank() != 4) throw ShapeError("conv2d: input must be [N,C,H,W], got " + shape_str(x.dims()));
  if (weight.rank() != 4) throw ShapeError("conv2d: weight must be rank 4");
  const std::size_t n = x.dims()[0], cin = x.dims()[1], h = x.dims()[2], w = x.dims()[3];
  const std::size_t cout = weight.dims()[0], kh = weight.dims()[2], kw = weight.dims()[3];
  if (weight.dims()[1] != cin)
    throw ShapeError("conv2d: channel mismatch, input " + std::to_string(cin) +
                     " vs weight " + std::to_string(weight.dims()[1]));
  if (bias.rank() != 1 || bias.dims()[0] != cout)
    throw ShapeError("conv2d: bias must be [out_channels]");
  if (h == 0 || w == 0) throw ShapeError("conv2d: empty spatial dims");

  detail::ConvGeom geom(cin, h, w, kh, kw, stride, dilation);
  const std::size_t k = geom.patch(), l = geom.cols();

  std::vector<T> out(n * cout * l);
  std::vector<T> col(k * l);
  for (std::size_t b = 0; b < n; ++b) {
    detail::im2col(x.data().data() + b * cin * h * w, geom, col.data());
    detail::gemm(weight.data().data(), col.data(), out.data() + b * cout * l, cout, k, l,
                 false);
    for (std::size_t c = 0; c < cout; ++c) {
      T bv = bias.data()[c];
      T* oc = out.data() + (b * cout + c) * l;
      for (std::size_t i = 0; i < l; ++i) oc[i] += bv;
    }
  }

  auto xn = x.node(), wn = weight.node(), bn = bias.node();
  return Tensor<T>::make_op(
      {n, cout, geom.ho, geom.wo}, std::move(out), {x, weight, bias},
      [xn, wn, bn, geom, n, cout, k, l](typename Tensor<T>::Node& self) {
        const bool gx = detail::wants_grad<T>(xn);
        const bool gw = detail::wants_grad<T>(wn);
        const bool gb = detail::wants_grad<T>(bn);
        if (gb) {
          auto& gbias = bn->grad_buf();
          for (std::size_t b = 0; b < n; ++b)
            for (std::size_t c = 0; c < cout; ++c) {
              const T* gout = self.grad.data() + (b * cout + c) * l;
              T s = 0;
              for (std::size_t i = 0; i < l; ++i) s += gout[i];
              gbias[c] += s;
            }
        }
        if (!gx && !gw) return;
        std::vector<T> col(k * l);
        std::vector<T> gcol(gx ? k * l : 0);
        const std::size_t img = geom.cin * geom.h * geom.w;
        for (std::size_t b = 0; b < n; ++b) {
          const T* gout = self.grad.data() + b * cout * l;
          if (gw) {
            detail::im2col(xn->data.data() + b * img, geom, col.data());
            detail::gemm_nt_acc(gout, col.data(), wn->grad_buf().data(), cout, l, k);
          }
          if (gx) {
            detail::gemm_tn(wn->data.data(), gout, gcol.data(), cout, k, l);
            detail::col2im_acc(gcol.data(), geom, xn->grad_buf().data() + b * img);
          }
        }
      });
}

// Depthwise convolution: one kh x kw filter per channel, stride 1, same pad.
// weight [C,1,kh,kw].
template <class T>
Tensor<T> depthwise_conv2d(const Tensor<T>& x, const Tensor<T>& weight) {
  if (x.rank() != 4 || weight.rank() != 4 || weight.dims()[1] != 1)
    throw ShapeError("depthwise_conv2d: expects x [N,C,H,W] and weight [C,1,kh,kw]");
  const std::size_t n = x.dims()[0], c = x.dims()[1], h = x.dims()[2], w = x.dims()[3];
  const std::size_t kh = weight.dims()[2], kw = weight.dims()[3];
  if (weight.dims()[0] != c) throw ShapeError("depthwise_conv2d: channel mismatch");
  const std::size_t pad_t = (kh - 1) / 2, pad_l = (kw - 1) / 2;

  std::vector<T> out(x.size(), T(0));
  auto xd = x.data();
  auto wd = weight.data();
  for (std::size_t b = 0; b < n; ++b) {
    for (std::size_t ch = 0; ch < c; ++ch) {
      const T* xc = xd.data() + (b * c + ch) * h * w;
      const T* wc = wd.data() + ch * kh * kw;
      T* oc = out.data() + (b * c + ch) * h * w;
      for (std::size_t ky = 0; ky < kh; ++ky) {
        for (std::size_t kx = 0; kx < kw; ++kx) {
          T wv = wc[ky * kw + kx];
          std::ptrdiff_t dy = std::ptrdiff_t(ky) - std::ptrdiff_t(pad_t);
          std::ptrdiff_t dx = std::ptrdiff_t(kx) - std::ptrdiff_t(pad_l);
          std::size_t y0 = dy < 0 ? std::size_t(-dy) : 0;
          std::size_t y1 = dy > 0 ? h - std::size_t(dy) : h;
          std::size_t x0 = dx < 0 ? std::size_t(-dx) : 0;
          std::size_t x1 = dx > 0 ? w - std::size_t(dx) : w;
          if (std::size_t(std::abs(dy)) >= h || std::size_t(std::abs(dx)) >= w) continue;
          for (std::size_t y = y0; y < y1; ++y) {
            const T* src = xc + (y + dy) * w + dx;
            T* dst = oc + y * w;
            for (std::size_t px = x0; px < x1; ++px) dst[px] += wv * src[px];
          }
        }
      }
    }
  }
  auto xn = x.node(), wn = weight.node();
  return Tensor<T>::make_op(
      x.dims(), std::move(out), {x, weight},
      [xn, wn, n, c, h, w, kh, kw, pad_t, pad_l](typename Tensor<T>::Node& self) {
        const bool gx = detail::wants_grad<T>(xn);
        const bool gw = detail::wants_grad<T>(wn);
        if (!gx && !gw) return;
        for (std::size_t b = 0; b < n; ++b) {
          for (std::size_t ch = 0; ch < c; ++ch) {
            const T* go = self.grad.data() + (b * c + ch) * h * w;
            const T* xc = xn->data.data() + (b * c + ch) * h * w;
            const T* wc = wn->data.data() + ch * kh * kw;
            for (std::size_t ky = 0; ky < kh; ++ky) {
              for (std::size_t kx = 0; kx < kw; ++kx) {
                std::ptrdiff_t dy = std::ptrdiff_t(ky) - std::ptrdiff_t(pad_t);
                std::ptrdiff_t dx = std::ptrdiff_t(kx) - std::ptrdiff_t(pad_l);
                if (std::size_t(std::abs(dy)) >= h || std::size_t(std::abs(dx)) >= w) continue;
                std::size_t y0 = dy < 0 ? std::size_t(-dy) : 0;
                std::size_t y1 = dy > 0 ? h - std::size_t(dy) : h;
                std::size_t x0 = dx < 0 ? std::size_t(-dx) : 0;
                std::size_t x1 = dx > 0 ? w - std::size_t(dx) : w;
                if (gw) {
                  T s = 0;
                  for (std::size_t y = y0; y < y1; ++y) {
                    const T* src = xc + (y + dy) * w + dx;
                    const T* g = go + y * w;
                    for (std::size_t px = x0; px < x1; ++px) s += g[px] * src[px];
                  }
                  wn->grad_buf()[ch * kh * kw + ky * kw + kx] += s;
                }
                if (gx) {
                  T wv = wc[ky * kw + kx];
                  T* gxi = xn->grad_buf().data() + (b * c + ch) * h * w;
                  for (std::size_t y = y0; y < y1; ++y) {
                    T* dst = gxi + (y + dy) * w + dx;
                    const T* g = go + y * w;
                    for (std::size_t px = x0; px < x1; ++px) dst[px] += wv * g[px];
                  }
                }
              }
            }
          }
        }
      });
}

// Depthwise followed by 1x1 pointwise projection; stride fixed to 1.
// depthwise [Cin,1,kh,kw], pointwise [Cout,Cin,1,1], bias [Cout].
template <class T>
Tensor<T> separable_conv2d(const Tensor<T>& x, const Tensor<T>& depthwise,
                           const Tensor<T>& pointwise, const Tensor<T>& bias) {
  return conv2d(depthwise_conv2d(x, depthwise), pointwise, bias);
}

// 2x2 max pooling with stride 2; ties route the gradient to the lowest index.
template <class T>
Tensor<T> maxpool2(const Tensor<T>& x) {
  if (x.rank() != 4) throw ShapeError("maxpool2: input must be [N,C,H,W]");
  const std::size_t n = x.dims()[0], c = x.dims()[1], h = x.dims()[2], w = x.dims()[3];
  if (h % 2 != 0 || w % 2 != 0)
    throw ShapeError("maxpool2: spatial dims must be even, got " + shape_str(x.dims()));
  const std::size_t ho = h / 2, wo = w / 2;
  std::vector<T> out(n * c * ho * wo);
  std::vector<std::uint32_t> arg(out.size());
  auto xd = x.data();
  for (std::size_t bc = 0; bc < n * c; ++bc) {
    const T* xc = xd.data() + bc * h * w;
    T* oc = out.data() + bc * ho * wo;
    std::uint32_t* ac = arg.data() + bc * ho * wo;
    for (std::size_t oy = 0; oy < ho; ++oy) {
      for (std::size_t ox = 0; ox < wo; ++ox) {
        std::size_t base = (2 * oy) * w + 2 * ox;
        std::size_t idx[4] = {base, base + 1, base + w, base + w + 1};
        std::size_t best = idx[0];
        T bv = xc[idx[0]];
        for (int k = 1; k < 4; ++k)
          if (xc[idx[k]] > bv) { bv = xc[idx[k]]; best = idx[k]; }
        oc[oy * wo + ox] = bv;
        ac[oy * wo + ox] = std::uint32_t(best);
      }
    }
  }
  auto xn = x.node();
  return Tensor<T>::make_op({n, c, ho, wo}, std::move(out), {x},
                            [xn, arg, n, c, h, w, ho, wo](typename Tensor<T>::Node& self) {
                              auto& g = xn->grad_buf();
                              for (std::size_t bc = 0; bc < n * c; ++bc) {
                                const std::uint32_t* ac = arg.data() + bc * ho * wo;
                                const T* go = self.grad.data() + bc * ho * wo;
                                T* gc = g.data() + bc * h * w;
                                for (std::size_t i = 0; i < ho * wo; ++i) gc[ac[i]] += go[i];
                              }
                            });
}

// Nearest-neighbor x2 upsampling; backward sums each 2x2 block.
template <class T>
Tensor<T> upsample_nn2(const Tensor<T>& x) {
  if (x.rank() != 4) throw ShapeError("upsample_nn2: input must be [N,C,H,W]");
  const std::size_t n = x.dims()[0], c = x.dims()[1], h = x.dims()[2], w = x.dims()[3];
  const std::size_t ho = h * 2, wo = w * 2;
  std::vector<T> out(n * c * ho * wo);
  auto xd = x.data();
  for (std::size_t bc = 0; bc < n * c; ++bc) {
    const T* xc = xd.data() + bc * h * w;
    T* oc = out.data() + bc * ho * wo;
    for (std::size_t y = 0; y < h; ++y) {
      for (std::size_t px = 0; px < w; ++px) {
        T v = xc[y * w + px];
        oc[(2 * y) * wo + 2 * px] = v;
        oc[(2 * y) * wo + 2 * px + 1] = v;
        oc[(2 * y + 1) * wo + 2 * px] = v;
        oc[(2 * y + 1) * wo + 2 * px + 1] = v;
      }
    }
  }
  auto xn = x.node();
  return Tensor<T>::make_op({n, c, ho, wo}, std::move(out), {x},
                            [xn, n, c, h, w, ho, wo](typename Tensor<T>::Node& self) {
                              auto& g = xn->grad_buf();
                              for (std::size_t bc = 0; bc < n * c; ++bc) {
                                const T* go = self.grad.data() + bc * ho * wo;
                                T* gc = g.data() + bc * h * w;
                                for (std::size_t y = 0; y < h; ++y)
                                  for (std::size_t px = 0; px < w; ++px)
                                    gc[y * w + px] += go[(2 * y) * wo + 2 * px] +
                                                      go[(2 * y) * wo + 2 * px + 1] +
                                                      go[(2 * y + 1) * wo + 2 * px] +
                                                      go[(2 * y + 1) * wo + 2 * px + 1];
                              }
                            });
}

// Batch normalization over (N,H,W) per channel, always with current-batch
// statistics; differentiable through mean and variance. A single-element
// channel normalizes to zero (variance 0 against epsilon).
template <class T>
Tensor<T> batchnorm(const Tensor<T>& x, const Tensor<T>& gamma, const Tensor<T>& beta,
                    T eps = T(1e-5)) {
  if (x.rank() != 4) throw ShapeError("batchnorm: input must be [N,C,H,W]");
  const std::size_t n = x.dims()[0], c = x.dims()[1], h = x.dims()[2], w = x.dims()[3];
  if (gamma.size() != c || beta.size() != c)
    throw ShapeError("batchnorm: gamma/beta must have one entry per channel");
  const std::size_t m = n * h * w;
  if (m == 0) throw ShapeError("batchnorm: empty batch");

  std::vector<T> mu(c, T(0)), inv_std(c), xhat(x.size());
  auto xd = x.data();
  const std::size_t hw = h * w;
  for (std::size_t ch = 0; ch < c; ++ch) {
    T s = 0;
    for (std::size_t b = 0; b < n; ++b) {
      const T* p = xd.data() + (b * c + ch) * hw;
      for (std::size_t i = 0; i < hw; ++i) s += p[i];
    }
    mu[ch] = s / T(m);
    T v = 0;
    for (std::size_t b = 0; b < n; ++b) {
      const T* p = xd.data() + (b * c + ch) * hw;
      for (std::size_t i = 0; i < hw; ++i) {
        T d = p[i] - mu[ch];
        v += d * d;
      }
    }
    inv_std[ch] = T(1) / std::sqrt(v / T(m) + eps);
  }
  std::vector<T> out(x.size());
  auto gd = gamma.data(), bd = beta.data();
  for (std::size_t b = 0; b < n; ++b)
    for (std::size_t ch = 0; ch < c; ++ch) {
      const T* p = xd.data() + (b * c + ch) * hw;
      T* xh = xhat.data() + (b * c + ch) * hw;
      T* o = out.data() + (b * c + ch) * hw;
      for (std::size_t i = 0; i < hw; ++i) {
        xh[i] = (p[i] - mu[ch]) * inv_std[ch];
        o[i] = gd[ch] * xh[i] + bd[ch];
      }
    }

  auto xn = x.node(), gn = gamma.node(), bn = beta.node();
  return Tensor<T>::make_op(
      x.dims(), std::move(out), {x, gamma, beta},
      [xn, gn, bn, n, c, hw, m, inv_std, xhat](typename Tensor<T>::Node& self) {
        const bool gx = detail::wants_grad<T>(xn);
        for (std::size_t ch = 0; ch < c; ++ch) {
          T sum_g = 0, sum_gx = 0;
          for (std::size_t b = 0; b < n; ++b) {
            std::size_t off = (b * c + ch) * hw;
            for (std::size_t i = 0; i < hw; ++i) {
              sum_g += self.grad[off + i];
              sum_gx += self.grad[off + i] * xhat[off + i];
            }
          }
          if (detail::wants_grad<T>(gn)) gn->grad_buf()[ch] += sum_gx;
          if (detail::wants_grad<T>(bn)) bn->grad_buf()[ch] += sum_g;
          if (gx) {
            // dx = gamma*inv_std/m * (m*g - sum(g) - xhat*sum(g*xhat))
            T gam = gn->data[ch];
            T scale = gam * inv_std[ch] / T(m);
            auto& gbuf = xn->grad_buf();
            for (std::size_t b = 0; b < n; ++b) {
              std::size_t off = (b * c + ch) * hw;
              for (std::size_t i = 0; i < hw; ++i)
                gbuf[off + i] += scale * (T(m) * self.grad[off + i] - sum_g -
                                          xhat[off + i] * sum_gx);
            }
          }
        }
      });
}

// HeUniform: samples uniform in [-b, b] with b = sqrt(6 / fan_in).
template <class T>
Tensor<T> he_uniform_init(Shape dims, std::size_t fan_in, std::uint64_t seed) {
  if (fan_in == 0) throw ShapeError("he_uniform_init: fan_in must be >= 1");
  T b = std::sqrt(T(6) / T(fan_in));
  return Tensor<T>::uniform(std::move(dims), seed, -b, b);
}

}  // namespace skyseg
