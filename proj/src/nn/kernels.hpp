#pragma once

// Layer kernels over channel-major (C, N, H, W) buffers. In that layout the
// GEMM result of a convolution, (C_out x N*H*W), is already the output
// tensor, and channel concatenation is buffer concatenation.

#include <cstddef>
#include <cstdint>

#include "vpet/netgraph.hpp"

namespace vpet::nn::kernels {

/// Patch-extraction geometry. "big" is the tensor patches are read from
/// (the input of a convolution, the output of a transposed convolution);
/// "small" is the grid with one column per pixel.
struct PatchGeom {
  int batch = 1;
  int big_c = 1;
  int big_h = 1;
  int big_w = 1;
  int small_h = 1;
  int small_w = 1;
  int kh = 1;
  int kw = 1;
  int stride = 1;
  int dilation = 1;
  int pad_h = 0;
  int pad_w = 0;

  std::size_t rows() const { return static_cast<std::size_t>(big_c) * kh * kw; }
  std::size_t cols() const { return static_cast<std::size_t>(batch) * small_h * small_w; }
  bool is_pointwise() const {
    return kh == 1 && kw == 1 && stride == 1 && pad_h == 0 && pad_w == 0 && big_h == small_h && big_w == small_w;
  }
};

template <typename T>
void conv_forward(const T* in, const T* weight, const T* bias, const PatchGeom& g, int cout, T* out);

/// Accumulates into d_weight / d_bias, and into d_in when non-null.
template <typename T>
void conv_backward(const T* in, const T* weight, const T* d_out, const PatchGeom& g, int cout, T* d_weight,
                   T* d_bias, T* d_in);

/// `g` describes the equivalent convolution from output (big) to input (small).
template <typename T>
void transposed_conv_forward(const T* in, const T* weight, const T* bias, const PatchGeom& g, int cin, T* out);

template <typename T>
void transposed_conv_backward(const T* in, const T* weight, const T* d_out, const PatchGeom& g, int cin,
                              T* d_weight, T* d_bias, T* d_in);

template <typename T>
void maxpool_forward(const T* in, int c, int n, int h, int w, int window, T* out, std::int32_t* argmax);

template <typename T>
void maxpool_backward(const T* d_out, const std::int32_t* argmax, std::size_t out_count, T* d_in);

template <typename T>
void upsample_forward(const T* in, int c, int n, int h, int w, int factor, T* out);

template <typename T>
void upsample_backward(const T* d_out, int c, int n, int h, int w, int factor, T* d_in);

template <typename T>
void dense_forward(const T* in, int c, int n, int h, int w, const T* weight, const T* bias, int units, T* out);

template <typename T>
void dense_backward(const T* in, int c, int n, int h, int w, const T* weight, const T* d_out, int units,
                    T* d_weight, T* d_bias, T* d_in);

/// Softmax across channels at every (sample, pixel).
template <typename T>
void softmax_forward(T* data, int c, std::size_t plane);

template <typename T>
void softmax_backward(const T* out, T* grad, int c, std::size_t plane);

template <typename T>
void activation_forward(Activation a, T* data, std::size_t count);

/// Chain rule through an activation, using its output.
template <typename T>
void activation_backward(Activation a, const T* out, T* grad, std::size_t count);

}  // namespace vpet::nn::kernels
