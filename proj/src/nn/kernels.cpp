#include "kernels.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

#include <Eigen/Core>

namespace vpet::nn::kernels {

namespace {

template <typename T>
using MatR = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
template <typename T>
using Strided = Eigen::Map<MatR<T>, 0, Eigen::OuterStride<>>;
template <typename T>
using ConstStrided = Eigen::Map<const MatR<T>, 0, Eigen::OuterStride<>>;

// Upper bound on the scratch patch matrix, in elements.
constexpr std::size_t kMaxPatchElements = std::size_t{1} << 22;

std::size_t chunk_cols(const PatchGeom& g) {
  return std::max<std::size_t>(1, std::min(g.cols(), kMaxPatchElements / g.rows()));
}

// Column j enumerates (n, oy, ox) over the small grid.
struct ColumnCursor {
  int n, oy, ox;
  const PatchGeom& g;

  ColumnCursor(const PatchGeom& geom, std::size_t j) : g(geom) {
    const std::size_t plane = static_cast<std::size_t>(g.small_h) * g.small_w;
    n = static_cast<int>(j / plane);
    const std::size_t p = j % plane;
    oy = static_cast<int>(p / g.small_w);
    ox = static_cast<int>(p % g.small_w);
  }
  void next() {
    if (++ox == g.small_w) {
      ox = 0;
      if (++oy == g.small_h) {
        oy = 0;
        ++n;
      }
    }
  }
};

template <typename T>
void im2col(const T* big, const PatchGeom& g, std::size_t j0, std::size_t count, T* col) {
  const std::size_t plane = static_cast<std::size_t>(g.big_h) * g.big_w;
  for (int c = 0; c < g.big_c; ++c) {
    for (int ky = 0; ky < g.kh; ++ky) {
      for (int kx = 0; kx < g.kw; ++kx) {
        T* dst = col + ((static_cast<std::size_t>(c) * g.kh + ky) * g.kw + kx) * count;
        ColumnCursor cur(g, j0);
        const int dy = ky * g.dilation - g.pad_h;
        const int dx = kx * g.dilation - g.pad_w;
        for (std::size_t j = 0; j < count; ++j, cur.next()) {
          const int iy = cur.oy * g.stride + dy;
          const int ix = cur.ox * g.stride + dx;
          dst[j] = (iy >= 0 && iy < g.big_h && ix >= 0 && ix < g.big_w)
                       ? big[(static_cast<std::size_t>(c) * g.batch + cur.n) * plane +
                             static_cast<std::size_t>(iy) * g.big_w + ix]
                       : T(0);
        }
      }
    }
  }
}

template <typename T>
void col2im_add(const T* col, const PatchGeom& g, std::size_t j0, std::size_t count, T* big) {
  const std::size_t plane = static_cast<std::size_t>(g.big_h) * g.big_w;
  for (int c = 0; c < g.big_c; ++c) {
    for (int ky = 0; ky < g.kh; ++ky) {
      for (int kx = 0; kx < g.kw; ++kx) {
        const T* src = col + ((static_cast<std::size_t>(c) * g.kh + ky) * g.kw + kx) * count;
        ColumnCursor cur(g, j0);
        const int dy = ky * g.dilation - g.pad_h;
        const int dx = kx * g.dilation - g.pad_w;
        for (std::size_t j = 0; j < count; ++j, cur.next()) {
          const int iy = cur.oy * g.stride + dy;
          const int ix = cur.ox * g.stride + dx;
          if (iy >= 0 && iy < g.big_h && ix >= 0 && ix < g.big_w) {
            big[(static_cast<std::size_t>(c) * g.batch + cur.n) * plane + static_cast<std::size_t>(iy) * g.big_w +
                ix] += src[j];
          }
        }
      }
    }
  }
}

template <typename T>
void add_channel_bias(T* out, const T* bias, int channels, std::size_t plane) {
  for (int c = 0; c < channels; ++c) {
    T* row = out + static_cast<std::size_t>(c) * plane;
    const T b = bias[c];
    for (std::size_t j = 0; j < plane; ++j) row[j] += b;
  }
}

template <typename T>
void accumulate_channel_sums(const T* grad, int channels, std::size_t plane, T* d_bias) {
  for (int c = 0; c < channels; ++c) {
    const T* row = grad + static_cast<std::size_t>(c) * plane;
    T s = 0;
    for (std::size_t j = 0; j < plane; ++j) s += row[j];
    d_bias[c] += s;
  }
}

}  // namespace

template <typename T>
void conv_forward(const T* in, const T* weight, const T* bias, const PatchGeom& g, int cout, T* out) {
  const auto k = static_cast<Eigen::Index>(g.rows());
  const std::size_t np = g.cols();
  Eigen::Map<const MatR<T>> w(weight, cout, k);
  if (g.is_pointwise()) {
    Eigen::Map<const MatR<T>> x(in, k, static_cast<Eigen::Index>(np));
    Eigen::Map<MatR<T>>(out, cout, static_cast<Eigen::Index>(np)).noalias() = w * x;
  } else {
    const std::size_t chunk = chunk_cols(g);
    std::vector<T> col(g.rows() * chunk);
    for (std::size_t j0 = 0; j0 < np; j0 += chunk) {
      const std::size_t count = std::min(chunk, np - j0);
      im2col(in, g, j0, count, col.data());
      Eigen::Map<const MatR<T>> c(col.data(), k, static_cast<Eigen::Index>(count));
      Strided<T>(out + j0, cout, static_cast<Eigen::Index>(count), Eigen::OuterStride<>(np)).noalias() = w * c;
    }
  }
  add_channel_bias(out, bias, cout, np);
}

template <typename T>
void conv_backward(const T* in, const T* weight, const T* d_out, const PatchGeom& g, int cout, T* d_weight,
                   T* d_bias, T* d_in) {
  const auto k = static_cast<Eigen::Index>(g.rows());
  const std::size_t np = g.cols();
  Eigen::Map<const MatR<T>> w(weight, cout, k);
  Eigen::Map<MatR<T>> dw(d_weight, cout, k);
  if (g.is_pointwise()) {
    Eigen::Map<const MatR<T>> x(in, k, static_cast<Eigen::Index>(np));
    Eigen::Map<const MatR<T>> dy(d_out, cout, static_cast<Eigen::Index>(np));
    dw.noalias() += dy * x.transpose();
    if (d_in != nullptr) Eigen::Map<MatR<T>>(d_in, k, static_cast<Eigen::Index>(np)).noalias() += w.transpose() * dy;
  } else {
    const std::size_t chunk = chunk_cols(g);
    std::vector<T> col(g.rows() * chunk);
    std::vector<T> dcol(d_in != nullptr ? g.rows() * chunk : 0);
    for (std::size_t j0 = 0; j0 < np; j0 += chunk) {
      const std::size_t count = std::min(chunk, np - j0);
      const auto cnt = static_cast<Eigen::Index>(count);
      im2col(in, g, j0, count, col.data());
      Eigen::Map<const MatR<T>> c(col.data(), k, cnt);
      ConstStrided<T> dy(d_out + j0, cout, cnt, Eigen::OuterStride<>(np));
      dw.noalias() += dy * c.transpose();
      if (d_in != nullptr) {
        Eigen::Map<MatR<T>>(dcol.data(), k, cnt).noalias() = w.transpose() * dy;
        col2im_add(dcol.data(), g, j0, count, d_in);
      }
    }
  }
  accumulate_channel_sums(d_out, cout, np, d_bias);
}

template <typename T>
void transposed_conv_forward(const T* in, const T* weight, const T* bias, const PatchGeom& g, int cin, T* out) {
  const auto k = static_cast<Eigen::Index>(g.rows());
  const std::size_t np = g.cols();
  const std::size_t big_count = static_cast<std::size_t>(g.big_c) * g.batch * g.big_h * g.big_w;
  std::fill(out, out + big_count, T(0));
  Eigen::Map<const MatR<T>> w(weight, cin, k);
  const std::size_t chunk = chunk_cols(g);
  std::vector<T> col(g.rows() * chunk);
  for (std::size_t j0 = 0; j0 < np; j0 += chunk) {
    const std::size_t count = std::min(chunk, np - j0);
    const auto cnt = static_cast<Eigen::Index>(count);
    ConstStrided<T> x(in + j0, cin, cnt, Eigen::OuterStride<>(np));
    Eigen::Map<MatR<T>>(col.data(), k, cnt).noalias() = w.transpose() * x;
    col2im_add(col.data(), g, j0, count, out);
  }
  add_channel_bias(out, bias, g.big_c, big_count / static_cast<std::size_t>(g.big_c));
}

template <typename T>
void transposed_conv_backward(const T* in, const T* weight, const T* d_out, const PatchGeom& g, int cin,
                              T* d_weight, T* d_bias, T* d_in) {
  const auto k = static_cast<Eigen::Index>(g.rows());
  const std::size_t np = g.cols();
  Eigen::Map<const MatR<T>> w(weight, cin, k);
  Eigen::Map<MatR<T>> dw(d_weight, cin, k);
  const std::size_t chunk = chunk_cols(g);
  std::vector<T> col(g.rows() * chunk);
  for (std::size_t j0 = 0; j0 < np; j0 += chunk) {
    const std::size_t count = std::min(chunk, np - j0);
    const auto cnt = static_cast<Eigen::Index>(count);
    im2col(d_out, g, j0, count, col.data());
    Eigen::Map<const MatR<T>> c(col.data(), k, cnt);
    ConstStrided<T> x(in + j0, cin, cnt, Eigen::OuterStride<>(np));
    dw.noalias() += x * c.transpose();
    if (d_in != nullptr) Strided<T>(d_in + j0, cin, cnt, Eigen::OuterStride<>(np)).noalias() += w * c;
  }
  const std::size_t big_count = static_cast<std::size_t>(g.big_c) * g.batch * g.big_h * g.big_w;
  accumulate_channel_sums(d_out, g.big_c, big_count / static_cast<std::size_t>(g.big_c), d_bias);
}

template <typename T>
void maxpool_forward(const T* in, int c, int n, int h, int w, int window, T* out, std::int32_t* argmax) {
  const int oh = h / window;
  const int ow = w / window;
  std::size_t o = 0;
  for (int plane = 0; plane < c * n; ++plane) {
    const std::size_t base = static_cast<std::size_t>(plane) * h * w;
    for (int oy = 0; oy < oh; ++oy) {
      for (int ox = 0; ox < ow; ++ox, ++o) {
        T best = -std::numeric_limits<T>::infinity();
        std::size_t best_i = base + static_cast<std::size_t>(oy * window) * w + ox * window;
        for (int dy = 0; dy < window; ++dy) {
          for (int dx = 0; dx < window; ++dx) {
            const std::size_t i = base + static_cast<std::size_t>(oy * window + dy) * w + ox * window + dx;
            if (in[i] > best) {
              best = in[i];
              best_i = i;
            }
          }
        }
        out[o] = best;
        argmax[o] = static_cast<std::int32_t>(best_i);
      }
    }
  }
}

template <typename T>
void maxpool_backward(const T* d_out, const std::int32_t* argmax, std::size_t out_count, T* d_in) {
  for (std::size_t o = 0; o < out_count; ++o) d_in[argmax[o]] += d_out[o];
}

template <typename T>
void upsample_forward(const T* in, int c, int n, int h, int w, int factor, T* out) {
  const int oh = h * factor;
  const int ow = w * factor;
  for (int plane = 0; plane < c * n; ++plane) {
    const T* src = in + static_cast<std::size_t>(plane) * h * w;
    T* dst = out + static_cast<std::size_t>(plane) * oh * ow;
    for (int y = 0; y < oh; ++y) {
      for (int x = 0; x < ow; ++x) dst[static_cast<std::size_t>(y) * ow + x] = src[(y / factor) * w + x / factor];
    }
  }
}

template <typename T>
void upsample_backward(const T* d_out, int c, int n, int h, int w, int factor, T* d_in) {
  const int oh = h * factor;
  const int ow = w * factor;
  for (int plane = 0; plane < c * n; ++plane) {
    const T* src = d_out + static_cast<std::size_t>(plane) * oh * ow;
    T* dst = d_in + static_cast<std::size_t>(plane) * h * w;
    for (int y = 0; y < oh; ++y) {
      for (int x = 0; x < ow; ++x) dst[(y / factor) * w + x / factor] += src[static_cast<std::size_t>(y) * ow + x];
    }
  }
}

namespace {

// (C, N, H, W) -> (C*H*W) x N feature matrix, row-major.
template <typename T>
std::vector<T> gather_features(const T* in, int c, int n, int h, int w) {
  const std::size_t hw = static_cast<std::size_t>(h) * w;
  std::vector<T> x(static_cast<std::size_t>(c) * hw * n);
  for (int ch = 0; ch < c; ++ch) {
    for (int s = 0; s < n; ++s) {
      const T* src = in + (static_cast<std::size_t>(ch) * n + s) * hw;
      for (std::size_t p = 0; p < hw; ++p) x[(ch * hw + p) * n + s] = src[p];
    }
  }
  return x;
}

}  // namespace

template <typename T>
void dense_forward(const T* in, int c, int n, int h, int w, const T* weight, const T* bias, int units, T* out) {
  const auto f = static_cast<Eigen::Index>(static_cast<std::size_t>(c) * h * w);
  const std::vector<T> x = gather_features(in, c, n, h, w);
  Eigen::Map<const MatR<T>> wm(weight, units, f);
  Eigen::Map<const MatR<T>> xm(x.data(), f, n);
  Eigen::Map<MatR<T>>(out, units, n).noalias() = wm * xm;
  add_channel_bias(out, bias, units, static_cast<std::size_t>(n));
}

template <typename T>
void dense_backward(const T* in, int c, int n, int h, int w, const T* weight, const T* d_out, int units,
                    T* d_weight, T* d_bias, T* d_in) {
  const std::size_t hw = static_cast<std::size_t>(h) * w;
  const auto f = static_cast<Eigen::Index>(static_cast<std::size_t>(c) * hw);
  const std::vector<T> x = gather_features(in, c, n, h, w);
  Eigen::Map<const MatR<T>> wm(weight, units, f);
  Eigen::Map<const MatR<T>> xm(x.data(), f, n);
  Eigen::Map<const MatR<T>> dy(d_out, units, n);
  Eigen::Map<MatR<T>>(d_weight, units, f).noalias() += dy * xm.transpose();
  accumulate_channel_sums(d_out, units, static_cast<std::size_t>(n), d_bias);
  if (d_in == nullptr) return;
  const MatR<T> dx = wm.transpose() * dy;
  for (int ch = 0; ch < c; ++ch) {
    for (int s = 0; s < n; ++s) {
      T* dst = d_in + (static_cast<std::size_t>(ch) * n + s) * hw;
      for (std::size_t p = 0; p < hw; ++p) dst[p] += dx(static_cast<Eigen::Index>(ch * hw + p), s);
    }
  }
}

template <typename T>
void softmax_forward(T* data, int c, std::size_t plane) {
  for (std::size_t j = 0; j < plane; ++j) {
    T top = data[j];
    for (int k = 1; k < c; ++k) top = std::max(top, data[k * plane + j]);
    T sum = 0;
    for (int k = 0; k < c; ++k) {
      T& v = data[k * plane + j];
      v = std::exp(v - top);
      sum += v;
    }
    for (int k = 0; k < c; ++k) data[k * plane + j] /= sum;
  }
}

template <typename T>
void softmax_backward(const T* out, T* grad, int c, std::size_t plane) {
  for (std::size_t j = 0; j < plane; ++j) {
    T dot = 0;
    for (int k = 0; k < c; ++k) dot += grad[k * plane + j] * out[k * plane + j];
    for (int k = 0; k < c; ++k) grad[k * plane + j] = out[k * plane + j] * (grad[k * plane + j] - dot);
  }
}

template <typename T>
void activation_forward(Activation a, T* data, std::size_t count) {
  switch (a) {
    case Activation::kLinear: return;
    case Activation::kRelu:
      for (std::size_t i = 0; i < count; ++i) data[i] = data[i] > T(0) ? data[i] : T(0);
      return;
    case Activation::kLeakyRelu:
      for (std::size_t i = 0; i < count; ++i) data[i] = data[i] > T(0) ? data[i] : T(kLeakySlope) * data[i];
      return;
  }
}

template <typename T>
void activation_backward(Activation a, const T* out, T* grad, std::size_t count) {
  switch (a) {
    case Activation::kLinear: return;
    case Activation::kRelu:
      for (std::size_t i = 0; i < count; ++i) grad[i] = out[i] > T(0) ? grad[i] : T(0);
      return;
    case Activation::kLeakyRelu:
      for (std::size_t i = 0; i < count; ++i) grad[i] = out[i] > T(0) ? grad[i] : T(kLeakySlope) * grad[i];
      return;
  }
}

#define VPET_INSTANTIATE_KERNELS(T)                                                                               \
  template void conv_forward<T>(const T*, const T*, const T*, const PatchGeom&, int, T*);                        \
  template void conv_backward<T>(const T*, const T*, const T*, const PatchGeom&, int, T*, T*, T*);               \
  template void transposed_conv_forward<T>(const T*, const T*, const T*, const PatchGeom&, int, T*);             \
  template void transposed_conv_backward<T>(const T*, const T*, const T*, const PatchGeom&, int, T*, T*, T*);    \
  template void maxpool_forward<T>(const T*, int, int, int, int, int, T*, std::int32_t*);                        \
  template void maxpool_backward<T>(const T*, const std::int32_t*, std::size_t, T*);                             \
  template void upsample_forward<T>(const T*, int, int, int, int, int, T*);                                      \
  template void upsample_backward<T>(const T*, int, int, int, int, int, T*);                                     \
  template void dense_forward<T>(const T*, int, int, int, int, const T*, const T*, int, T*);                     \
  template void dense_backward<T>(const T*, int, int, int, int, const T*, const T*, int, T*, T*, T*);            \
  template void softmax_forward<T>(T*, int, std::size_t);                                                        \
  template void softmax_backward<T>(const T*, T*, int, std::size_t);                                             \
  template void activation_forward<T>(Activation, T*, std::size_t);                                              \
  template void activation_backward<T>(Activation, const T*, T*, std::size_t);

VPET_INSTANTIATE_KERNELS(float)
VPET_INSTANTIATE_KERNELS(double)

#undef VPET_INSTANTIATE_KERNELS

}  // namespace vpet::nn::kernels
