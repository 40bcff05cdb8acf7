#include "lcs/ops.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <vector>

#include "lcs/gemm.hpp"

namespace lcs {

namespace {

template <typename S>
void im2col(const S* x, int channels, int h, int w, int k, int stride, int pad, int oh, int ow,
            S* col) {
  for (int ci = 0; ci < channels; ++ci) {
    for (int kh = 0; kh < k; ++kh) {
      for (int kw = 0; kw < k; ++kw) {
        S* dst = col + (static_cast<std::size_t>((ci * k + kh) * k + kw)) * oh * ow;
        const S* plane = x + static_cast<std::size_t>(ci) * h * w;
        for (int r = 0; r < oh; ++r) {
          int ih = r * stride - pad + kh;
          if (ih < 0 || ih >= h) {
            std::fill(dst, dst + ow, S(0));
            dst += ow;
            continue;
          }
          const S* row = plane + static_cast<std::size_t>(ih) * w;
          if (stride == 1) {
            int iw0 = -pad + kw;
            int lo = std::max(0, -iw0);
            int hi = std::min(ow, w - iw0);
            for (int c = 0; c < lo; ++c) *dst++ = S(0);
            if (hi > lo) {
              std::copy(row + iw0 + lo, row + iw0 + hi, dst);
              dst += hi - lo;
            }
            for (int c = std::max(hi, lo); c < ow; ++c) *dst++ = S(0);
          } else {
            for (int c = 0; c < ow; ++c) {
              int iw = c * stride - pad + kw;
              *dst++ = (iw >= 0 && iw < w) ? row[iw] : S(0);
            }
          }
        }
      }
    }
  }
}

template <typename S>
void col2im_acc(const S* col, int channels, int h, int w, int k, int stride, int pad, int oh,
                int ow, S* x_grad) {
  for (int ci = 0; ci < channels; ++ci) {
    for (int kh = 0; kh < k; ++kh) {
      for (int kw = 0; kw < k; ++kw) {
        const S* src = col + (static_cast<std::size_t>((ci * k + kh) * k + kw)) * oh * ow;
        S* plane = x_grad + static_cast<std::size_t>(ci) * h * w;
        for (int r = 0; r < oh; ++r) {
          int ih = r * stride - pad + kh;
          if (ih < 0 || ih >= h) {
            src += ow;
            continue;
          }
          S* row = plane + static_cast<std::size_t>(ih) * w;
          for (int c = 0; c < ow; ++c) {
            int iw = c * stride - pad + kw;
            if (iw >= 0 && iw < w) row[iw] += src[c];
          }
          src += ow;
        }
      }
    }
  }
}

template <typename S>
S stable_sigmoid(S x) {
  if (x >= S(0)) return S(1) / (S(1) + std::exp(-x));
  S e = std::exp(x);
  return e / (S(1) + e);
}

}  // namespace

template <typename S>
VarT<S> conv2d(TapeT<S>& tape, const VarT<S>& input, const VarT<S>& weight, const VarT<S>& bias,
               int stride, int padding) {
  expect_ndim(*input, 4, "conv2d", "input");
  expect_ndim(*weight, 4, "conv2d", "weight");
  expect_ndim(*bias, 1, "conv2d", "bias");
  const int n = input->dim(0), in_c = input->dim(1), h = input->dim(2), w = input->dim(3);
  const int out_c = weight->dim(0), k = weight->dim(2);
  expect_axis(*weight, 1, in_c, "conv2d", "weight");
  expect_axis(*weight, 3, k, "conv2d", "weight");
  expect_axis(*bias, 0, out_c, "conv2d", "bias");
  if (k < 1) throw ParameterError("conv2d: kernel size must be >= 1");
  if (stride < 1) throw ParameterError("conv2d: stride must be >= 1");
  if (padding < 0) throw ParameterError("conv2d: padding must be >= 0");
  const int oh = (h + 2 * padding - k) / stride + 1;
  const int ow = (w + 2 * padding - k) / stride + 1;
  if (oh < 1 || ow < 1)
    throw DimensionError("conv2d: input axis 2/3 too small for kernel, shape " +
                         shape_str(input->shape));

  const int kk = in_c * k * k;
  const std::size_t plane_in = static_cast<std::size_t>(in_c) * h * w;
  const std::size_t plane_out = static_cast<std::size_t>(out_c) * oh * ow;

  auto out = make_var(TensorT<S>::zeros({n, out_c, oh, ow}));
  {
    std::vector<S> col(static_cast<std::size_t>(kk) * oh * ow);
    for (int i = 0; i < n; ++i) {
      im2col(input->data.data() + i * plane_in, in_c, h, w, k, stride, padding, oh, ow, col.data());
      detail::gemm(false, false, out_c, oh * ow, kk, S(1), weight->data.data(), kk, col.data(),
                   oh * ow, S(0), out->data.data() + i * plane_out, oh * ow);
      S* dst = out->data.data() + i * plane_out;
      for (int oc = 0; oc < out_c; ++oc) {
        S bv = bias->data[oc];
        S* p = dst + static_cast<std::size_t>(oc) * oh * ow;
        for (int e = 0; e < oh * ow; ++e) p[e] += bv;
      }
    }
  }

  tape.record("conv2d", {input, weight, bias}, out, [=]() {
    const bool need_x = input->requires_grad;
    const bool need_w = weight->requires_grad;
    const bool need_b = bias->requires_grad;
    if (need_x) input->ensure_grad();
    if (need_w) weight->ensure_grad();
    if (need_b) bias->ensure_grad();
    std::vector<S> col(need_w ? static_cast<std::size_t>(kk) * oh * ow : 0);
    std::vector<S> dcol(need_x ? static_cast<std::size_t>(kk) * oh * ow : 0);
    for (int i = 0; i < n; ++i) {
      const S* dy = out->grad.data() + i * plane_out;
      if (need_b) {
        for (int oc = 0; oc < out_c; ++oc) {
          S acc = 0;
          const S* p = dy + static_cast<std::size_t>(oc) * oh * ow;
          for (int e = 0; e < oh * ow; ++e) acc += p[e];
          bias->grad[oc] += acc;
        }
      }
      if (need_w) {
        im2col(input->data.data() + i * plane_in, in_c, h, w, k, stride, padding, oh, ow,
               col.data());
        detail::gemm(false, true, out_c, kk, oh * ow, S(1), dy, oh * ow, col.data(), oh * ow, S(1),
                     weight->grad.data(), kk);
      }
      if (need_x) {
        detail::gemm(true, false, kk, oh * ow, out_c, S(1), weight->data.data(), kk, dy, oh * ow,
                     S(0), dcol.data(), oh * ow);
        col2im_acc(dcol.data(), in_c, h, w, k, stride, padding, oh, ow,
                   input->grad.data() + i * plane_in);
      }
    }
  });
  return out;
}

template <typename S>
VarT<S> batchnorm2d(TapeT<S>& tape, const VarT<S>& input, const VarT<S>& gamma,
                    const VarT<S>& beta, TensorT<S>& running_mean, TensorT<S>& running_var,
                    bool training, S momentum, S eps) {
  expect_ndim(*input, 4, "batchnorm2d", "input");
  const int n = input->dim(0), c = input->dim(1), h = input->dim(2), w = input->dim(3);
  expect_axis(*gamma, 0, c, "batchnorm2d", "gamma");
  expect_axis(*beta, 0, c, "batchnorm2d", "beta");
  expect_axis(running_mean, 0, c, "batchnorm2d", "running_mean");
  expect_axis(running_var, 0, c, "batchnorm2d", "running_var");

  const std::size_t m = static_cast<std::size_t>(n) * h * w;
  auto out = make_var(TensorT<S>::zeros({n, c, h, w}));
  auto mean = std::make_shared<std::vector<S>>(c);
  auto invstd = std::make_shared<std::vector<S>>(c);

  const std::size_t hw = static_cast<std::size_t>(h) * w;
  auto channel_ptr = [&](const std::vector<S>& buf, int i, int ch) {
    return buf.data() + (static_cast<std::size_t>(i) * c + ch) * hw;
  };

  if (training) {
    for (int ch = 0; ch < c; ++ch) {
      S mu = 0;
      for (int i = 0; i < n; ++i) {
        const S* p = channel_ptr(input->data, i, ch);
        for (std::size_t e = 0; e < hw; ++e) mu += p[e];
      }
      mu /= static_cast<S>(m);
      S var = 0;
      for (int i = 0; i < n; ++i) {
        const S* p = channel_ptr(input->data, i, ch);
        for (std::size_t e = 0; e < hw; ++e) {
          S d = p[e] - mu;
          var += d * d;
        }
      }
      var /= static_cast<S>(m);
      (*mean)[ch] = mu;
      (*invstd)[ch] = S(1) / std::sqrt(var + eps);
      running_mean.data[ch] = (S(1) - momentum) * running_mean.data[ch] + momentum * mu;
      running_var.data[ch] = (S(1) - momentum) * running_var.data[ch] + momentum * var;
    }
  } else {
    for (int ch = 0; ch < c; ++ch) {
      (*mean)[ch] = running_mean.data[ch];
      (*invstd)[ch] = S(1) / std::sqrt(running_var.data[ch] + eps);
    }
  }

  for (int i = 0; i < n; ++i) {
    for (int ch = 0; ch < c; ++ch) {
      const S* src = channel_ptr(input->data, i, ch);
      S* dst = out->data.data() + (static_cast<std::size_t>(i) * c + ch) * hw;
      const S g = gamma->data[ch], b = beta->data[ch], mu = (*mean)[ch], is = (*invstd)[ch];
      for (std::size_t e = 0; e < hw; ++e) dst[e] = g * (src[e] - mu) * is + b;
    }
  }

  tape.record("batchnorm2d", {input, gamma, beta}, out, [=]() {
    const bool need_x = input->requires_grad;
    if (need_x) input->ensure_grad();
    if (gamma->requires_grad) gamma->ensure_grad();
    if (beta->requires_grad) beta->ensure_grad();
    for (int ch = 0; ch < c; ++ch) {
      const S mu = (*mean)[ch], is = (*invstd)[ch], g = gamma->data[ch];
      S sum_dy = 0, sum_dy_xhat = 0;
      for (int i = 0; i < n; ++i) {
        const std::size_t off = (static_cast<std::size_t>(i) * c + ch) * hw;
        const S* x = input->data.data() + off;
        const S* dy = out->grad.data() + off;
        for (std::size_t e = 0; e < hw; ++e) {
          sum_dy += dy[e];
          sum_dy_xhat += dy[e] * (x[e] - mu) * is;
        }
      }
      if (gamma->requires_grad) gamma->grad[ch] += sum_dy_xhat;
      if (beta->requires_grad) beta->grad[ch] += sum_dy;
      if (!need_x) continue;
      for (int i = 0; i < n; ++i) {
        const std::size_t off = (static_cast<std::size_t>(i) * c + ch) * hw;
        const S* x = input->data.data() + off;
        const S* dy = out->grad.data() + off;
        S* dx = input->grad.data() + off;
        if (training) {
          const S inv_m = S(1) / static_cast<S>(m);
          for (std::size_t e = 0; e < hw; ++e) {
            S xhat = (x[e] - mu) * is;
            dx[e] += g * is * (dy[e] - inv_m * sum_dy - xhat * inv_m * sum_dy_xhat);
          }
        } else {
          for (std::size_t e = 0; e < hw; ++e) dx[e] += dy[e] * g * is;
        }
      }
    }
  });
  return out;
}

template <typename S>
VarT<S> relu(TapeT<S>& tape, const VarT<S>& input) {
  auto out = make_var(TensorT<S>::zeros(input->shape));
  for (std::size_t i = 0; i < input->size(); ++i)
    out->data[i] = input->data[i] > S(0) ? input->data[i] : S(0);
  tape.record("relu", {input}, out, [=]() {
    input->ensure_grad();
    for (std::size_t i = 0; i < input->size(); ++i)
      if (input->data[i] > S(0)) input->grad[i] += out->grad[i];
  });
  return out;
}

template <typename S>
VarT<S> sigmoid(TapeT<S>& tape, const VarT<S>& input) {
  auto out = make_var(TensorT<S>::zeros(input->shape));
  for (std::size_t i = 0; i < input->size(); ++i) out->data[i] = stable_sigmoid(input->data[i]);
  tape.record("sigmoid", {input}, out, [=]() {
    input->ensure_grad();
    for (std::size_t i = 0; i < input->size(); ++i) {
      S y = out->data[i];
      input->grad[i] += out->grad[i] * y * (S(1) - y);
    }
  });
  return out;
}

template <typename S>
VarT<S> dropout(TapeT<S>& tape, const VarT<S>& input, double rate, bool training,
                CounterRng& rng) {
  if (rate < 0.0 || rate >= 1.0)
    throw ParameterError("dropout: rate must be in [0, 1), got " + std::to_string(rate));
  if (!training || rate == 0.0) return input;

  const S scale = S(1.0 / (1.0 - rate));
  auto mask = std::make_shared<std::vector<std::uint8_t>>(input->size());
  auto out = make_var(TensorT<S>::zeros(input->shape));
  for (std::size_t i = 0; i < input->size(); ++i) {
    bool keep = rng.uniform() >= rate;
    (*mask)[i] = keep;
    out->data[i] = keep ? input->data[i] * scale : S(0);
  }
  tape.record("dropout", {input}, out, [=]() {
    input->ensure_grad();
    for (std::size_t i = 0; i < input->size(); ++i)
      if ((*mask)[i]) input->grad[i] += out->grad[i] * scale;
  });
  return out;
}

template <typename S>
VarT<S> maxpool2d(TapeT<S>& tape, const VarT<S>& input, int k, int stride) {
  expect_ndim(*input, 4, "maxpool2d", "input");
  const int n = input->dim(0), c = input->dim(1), h = input->dim(2), w = input->dim(3);
  if (h < k || (h - k) % stride != 0)
    throw DimensionError("maxpool2d: input axis 2 (" + std::to_string(h) +
                         ") not divisible by stride " + std::to_string(stride));
  if (w < k || (w - k) % stride != 0)
    throw DimensionError("maxpool2d: input axis 3 (" + std::to_string(w) +
                         ") not divisible by stride " + std::to_string(stride));
  const int oh = (h - k) / stride + 1;
  const int ow = (w - k) / stride + 1;

  auto out = make_var(TensorT<S>::zeros({n, c, oh, ow}));
  auto argmax = std::make_shared<std::vector<std::size_t>>(out->size());
  std::size_t oi = 0;
  for (int i = 0; i < n; ++i) {
    for (int ch = 0; ch < c; ++ch) {
      const S* plane = input->data.data() + (static_cast<std::size_t>(i) * c + ch) * h * w;
      const std::size_t base = (static_cast<std::size_t>(i) * c + ch) * h * w;
      for (int r = 0; r < oh; ++r) {
        for (int col = 0; col < ow; ++col) {
          S best = plane[static_cast<std::size_t>(r * stride) * w + col * stride];
          std::size_t best_idx = static_cast<std::size_t>(r * stride) * w + col * stride;
          for (int kh = 0; kh < k; ++kh) {
            for (int kw = 0; kw < k; ++kw) {
              std::size_t idx = static_cast<std::size_t>(r * stride + kh) * w + col * stride + kw;
              if (plane[idx] > best) {  // strict: first max in row-major order wins ties
                best = plane[idx];
                best_idx = idx;
              }
            }
          }
          out->data[oi] = best;
          (*argmax)[oi] = base + best_idx;
          ++oi;
        }
      }
    }
  }
  tape.record("maxpool2d", {input}, out, [=]() {
    input->ensure_grad();
    for (std::size_t e = 0; e < out->size(); ++e) input->grad[(*argmax)[e]] += out->grad[e];
  });
  return out;
}

template <typename S>
VarT<S> avgpool2d(TapeT<S>& tape, const VarT<S>& input, int k, int stride) {
  expect_ndim(*input, 4, "avgpool2d", "input");
  const int n = input->dim(0), c = input->dim(1), h = input->dim(2), w = input->dim(3);
  if (h < k || (h - k) % stride != 0 || w < k || (w - k) % stride != 0)
    throw DimensionError("avgpool2d: input axes 2/3 " + shape_str({h, w}) +
                         " incompatible with k=" + std::to_string(k) +
                         " stride=" + std::to_string(stride));
  const int oh = (h - k) / stride + 1;
  const int ow = (w - k) / stride + 1;
  const S inv = S(1) / static_cast<S>(k * k);

  auto out = make_var(TensorT<S>::zeros({n, c, oh, ow}));
  std::size_t oi = 0;
  for (int i = 0; i < n; ++i) {
    for (int ch = 0; ch < c; ++ch) {
      const S* plane = input->data.data() + (static_cast<std::size_t>(i) * c + ch) * h * w;
      for (int r = 0; r < oh; ++r) {
        for (int col = 0; col < ow; ++col) {
          S acc = 0;
          for (int kh = 0; kh < k; ++kh)
            for (int kw = 0; kw < k; ++kw)
              acc += plane[static_cast<std::size_t>(r * stride + kh) * w + col * stride + kw];
          out->data[oi++] = acc * inv;
        }
      }
    }
  }
  tape.record("avgpool2d", {input}, out, [=]() {
    input->ensure_grad();
    std::size_t e = 0;
    for (int i = 0; i < n; ++i) {
      for (int ch = 0; ch < c; ++ch) {
        S* plane = input->grad.data() + (static_cast<std::size_t>(i) * c + ch) * h * w;
        for (int r = 0; r < oh; ++r) {
          for (int col = 0; col < ow; ++col) {
            S g = out->grad[e++] * inv;
            for (int kh = 0; kh < k; ++kh)
              for (int kw = 0; kw < k; ++kw)
                plane[static_cast<std::size_t>(r * stride + kh) * w + col * stride + kw] += g;
          }
        }
      }
    }
  });
  return out;
}

template <typename S>
VarT<S> upsample2x(TapeT<S>& tape, const VarT<S>& input) {
  expect_ndim(*input, 4, "upsample2x", "input");
  const int n = input->dim(0), c = input->dim(1), h = input->dim(2), w = input->dim(3);
  auto out = make_var(TensorT<S>::zeros({n, c, 2 * h, 2 * w}));
  for (int i = 0; i < n; ++i) {
    for (int ch = 0; ch < c; ++ch) {
      const S* src = input->data.data() + (static_cast<std::size_t>(i) * c + ch) * h * w;
      S* dst = out->data.data() + (static_cast<std::size_t>(i) * c + ch) * 4 * h * w;
      for (int r = 0; r < h; ++r) {
        for (int col = 0; col < w; ++col) {
          S v = src[static_cast<std::size_t>(r) * w + col];
          std::size_t o = static_cast<std::size_t>(2 * r) * 2 * w + 2 * col;
          dst[o] = v;
          dst[o + 1] = v;
          dst[o + 2 * w] = v;
          dst[o + 2 * w + 1] = v;
        }
      }
    }
  }
  tape.record("upsample2x", {input}, out, [=]() {
    input->ensure_grad();
    for (int i = 0; i < n; ++i) {
      for (int ch = 0; ch < c; ++ch) {
        S* src = input->grad.data() + (static_cast<std::size_t>(i) * c + ch) * h * w;
        const S* dst = out->grad.data() + (static_cast<std::size_t>(i) * c + ch) * 4 * h * w;
        for (int r = 0; r < h; ++r) {
          for (int col = 0; col < w; ++col) {
            std::size_t o = static_cast<std::size_t>(2 * r) * 2 * w + 2 * col;
            src[static_cast<std::size_t>(r) * w + col] +=
                dst[o] + dst[o + 1] + dst[o + 2 * w] + dst[o + 2 * w + 1];
          }
        }
      }
    }
  });
  return out;
}

template <typename S>
VarT<S> concat_channels(TapeT<S>& tape, const VarT<S>& a, const VarT<S>& b) {
  expect_ndim(*a, 4, "concat_channels", "a");
  expect_ndim(*b, 4, "concat_channels", "b");
  expect_axis(*b, 0, a->dim(0), "concat_channels", "b");
  expect_axis(*b, 2, a->dim(2), "concat_channels", "b");
  expect_axis(*b, 3, a->dim(3), "concat_channels", "b");
  const int n = a->dim(0), ca = a->dim(1), cb = b->dim(1), h = a->dim(2), w = a->dim(3);
  const std::size_t hw = static_cast<std::size_t>(h) * w;

  auto out = make_var(TensorT<S>::zeros({n, ca + cb, h, w}));
  for (int i = 0; i < n; ++i) {
    std::copy(a->data.begin() + i * ca * hw, a->data.begin() + (i + 1) * ca * hw,
              out->data.begin() + static_cast<std::size_t>(i) * (ca + cb) * hw);
    std::copy(b->data.begin() + i * cb * hw, b->data.begin() + (i + 1) * cb * hw,
              out->data.begin() + static_cast<std::size_t>(i) * (ca + cb) * hw + ca * hw);
  }
  tape.record("concat_channels", {a, b}, out, [=]() {
    if (a->requires_grad) {
      a->ensure_grad();
      for (int i = 0; i < n; ++i) {
        const S* g = out->grad.data() + static_cast<std::size_t>(i) * (ca + cb) * hw;
        S* dst = a->grad.data() + static_cast<std::size_t>(i) * ca * hw;
        for (std::size_t e = 0; e < ca * hw; ++e) dst[e] += g[e];
      }
    }
    if (b->requires_grad) {
      b->ensure_grad();
      for (int i = 0; i < n; ++i) {
        const S* g = out->grad.data() + static_cast<std::size_t>(i) * (ca + cb) * hw + ca * hw;
        S* dst = b->grad.data() + static_cast<std::size_t>(i) * cb * hw;
        for (std::size_t e = 0; e < cb * hw; ++e) dst[e] += g[e];
      }
    }
  });
  return out;
}

template <typename S>
VarT<S> add(TapeT<S>& tape, const VarT<S>& a, const VarT<S>& b) {
  return weighted_sum(tape, a, b, S(1), S(1));
}

template <typename S>
VarT<S> weighted_sum(TapeT<S>& tape, const VarT<S>& a, const VarT<S>& b, S wa, S wb) {
  if (a->shape != b->shape) {
    for (int ax = 0; ax < std::max(a->ndim(), b->ndim()); ++ax) {
      int da = ax < a->ndim() ? a->dim(ax) : -1;
      int db = ax < b->ndim() ? b->dim(ax) : -1;
      if (da != db)
        throw DimensionError("add: axis " + std::to_string(ax) + " mismatch, " +
                             shape_str(a->shape) + " vs " + shape_str(b->shape));
    }
  }
  auto out = make_var(TensorT<S>::zeros(a->shape));
  for (std::size_t i = 0; i < a->size(); ++i) out->data[i] = wa * a->data[i] + wb * b->data[i];
  tape.record("add", {a, b}, out, [=]() {
    if (a->requires_grad) {
      a->ensure_grad();
      for (std::size_t i = 0; i < a->size(); ++i) a->grad[i] += wa * out->grad[i];
    }
    if (b->requires_grad) {
      b->ensure_grad();
      for (std::size_t i = 0; i < b->size(); ++i) b->grad[i] += wb * out->grad[i];
    }
  });
  return out;
}

#define LCS_INSTANTIATE_OPS(S)                                                                \
  template VarT<S> conv2d<S>(TapeT<S>&, const VarT<S>&, const VarT<S>&, const VarT<S>&, int,  \
                             int);                                                            \
  template VarT<S> batchnorm2d<S>(TapeT<S>&, const VarT<S>&, const VarT<S>&, const VarT<S>&, \
                                  TensorT<S>&, TensorT<S>&, bool, S, S);                      \
  template VarT<S> relu<S>(TapeT<S>&, const VarT<S>&);                                       \
  template VarT<S> sigmoid<S>(TapeT<S>&, const VarT<S>&);                                    \
  template VarT<S> dropout<S>(TapeT<S>&, const VarT<S>&, double, bool, CounterRng&);         \
  template VarT<S> maxpool2d<S>(TapeT<S>&, const VarT<S>&, int, int);                        \
  template VarT<S> avgpool2d<S>(TapeT<S>&, const VarT<S>&, int, int);                        \
  template VarT<S> upsample2x<S>(TapeT<S>&, const VarT<S>&);                                 \
  template VarT<S> concat_channels<S>(TapeT<S>&, const VarT<S>&, const VarT<S>&);            \
  template VarT<S> add<S>(TapeT<S>&, const VarT<S>&, const VarT<S>&);                        \
  template VarT<S> weighted_sum<S>(TapeT<S>&, const VarT<S>&, const VarT<S>&, S, S);

LCS_INSTANTIATE_OPS(float)
LCS_INSTANTIATE_OPS(double)

#undef LCS_INSTANTIATE_OPS

}  // namespace lcs
