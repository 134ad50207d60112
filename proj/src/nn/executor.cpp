#include <algorithm>

#include "kernels.hpp"
#include "vpet/error.hpp"
#include "vpet/network.hpp"

namespace vpet::nn {

namespace {

template <typename T>
std::vector<T> to_channel_major(const BasicTensor<T>& t) {
  const Shape4& s = t.shape();
  const std::size_t hw = static_cast<std::size_t>(s.h) * s.w;
  std::vector<T> out(t.size());
  const auto src = t.data();
  for (int n = 0; n < s.n; ++n) {
    for (int c = 0; c < s.c; ++c) {
      std::copy_n(src.begin() + static_cast<std::ptrdiff_t>((static_cast<std::size_t>(n) * s.c + c) * hw), hw,
                  out.begin() + static_cast<std::ptrdiff_t>((static_cast<std::size_t>(c) * s.n + n) * hw));
    }
  }
  return out;
}

template <typename T>
BasicTensor<T> to_sample_major(const std::vector<T>& v, int n, const Shape3& s) {
  BasicTensor<T> t(Shape4{n, s.c, s.h, s.w});
  const std::size_t hw = static_cast<std::size_t>(s.h) * s.w;
  auto dst = t.data();
  for (int i = 0; i < n; ++i) {
    for (int c = 0; c < s.c; ++c) {
      std::copy_n(v.begin() + static_cast<std::ptrdiff_t>((static_cast<std::size_t>(c) * n + i) * hw), hw,
                  dst.begin() + static_cast<std::ptrdiff_t>((static_cast<std::size_t>(i) * s.c + c) * hw));
    }
  }
  return t;
}

std::size_t volume_of(const Shape3& s, int n) {
  return static_cast<std::size_t>(s.c) * static_cast<std::size_t>(n) * static_cast<std::size_t>(s.h) *
         static_cast<std::size_t>(s.w);
}

kernels::PatchGeom conv_geom(const LayerSpec& l, const Shape3& in, const Shape3& out, int n) {
  return {.batch = n,
          .big_c = in.c,
          .big_h = in.h,
          .big_w = in.w,
          .small_h = out.h,
          .small_w = out.w,
          .kh = l.kernel_h,
          .kw = l.kernel_w,
          .stride = l.stride,
          .dilation = l.dilation,
          .pad_h = l.dilation * (l.kernel_h - 1) / 2,
          .pad_w = l.dilation * (l.kernel_w - 1) / 2};
}

kernels::PatchGeom transposed_geom(const LayerSpec& l, const Shape3& in, const Shape3& out, int n) {
  return {.batch = n,
          .big_c = out.c,
          .big_h = out.h,
          .big_w = out.w,
          .small_h = in.h,
          .small_w = in.w,
          .kh = l.kernel_h,
          .kw = l.kernel_w,
          .stride = l.stride,
          .dilation = 1,
          .pad_h = (l.kernel_h - l.stride) / 2,
          .pad_w = (l.kernel_w - l.stride) / 2};
}

}  // namespace

template <typename T>
Executor<T>::Executor(NetworkGraph graph) : graph_(std::move(graph)), shapes_(propagate_shapes(graph_)) {}

template <typename T>
BasicTensor<T> Executor<T>::forward(const BasicParamSet<T>& params, const BasicTensor<T>& input,
                                    ForwardTape<T>* tape) const {
  const Shape4& is = input.shape();
  require(is.n >= 1 && is.c == shapes_[0].c && is.h == shapes_[0].h && is.w == shapes_[0].w,
          ErrorCode::kShapeMismatch,
          std::string(to_string(graph_.kind)) + " expects " + std::to_string(shapes_[0].c) + "x" +
              std::to_string(shapes_[0].h) + "x" + std::to_string(shapes_[0].w) + " inputs");
  const int n = is.n;
  const int count = static_cast<int>(graph_.layers.size());
  std::vector<std::vector<T>> values(static_cast<std::size_t>(count));
  std::vector<std::vector<std::int32_t>> argmax(static_cast<std::size_t>(count));
  values[0] = to_channel_major(input);

  for (int i = 1; i < count; ++i) {
    const LayerSpec& l = graph_.layers[static_cast<std::size_t>(i)];
    const int src = graph_.source_index(i);
    const Shape3& in = shapes_[static_cast<std::size_t>(src)];
    const Shape3& out = shapes_[static_cast<std::size_t>(i)];
    const std::vector<T>& x = values[static_cast<std::size_t>(src)];
    std::vector<T>& y = values[static_cast<std::size_t>(i)];
    y.assign(volume_of(out, n), T(0));
    switch (l.kind) {
      case LayerKind::kInput: break;
      case LayerKind::kConv:
        kernels::conv_forward(x.data(), params.get(l.name + ".weight").values.data(),
                              params.get(l.name + ".bias").values.data(), conv_geom(l, in, out, n), out.c, y.data());
        break;
      case LayerKind::kTransposedConv:
        kernels::transposed_conv_forward(x.data(), params.get(l.name + ".weight").values.data(),
                                         params.get(l.name + ".bias").values.data(), transposed_geom(l, in, out, n),
                                         in.c, y.data());
        break;
      case LayerKind::kMaxPool:
        argmax[static_cast<std::size_t>(i)].resize(y.size());
        kernels::maxpool_forward(x.data(), in.c, n, in.h, in.w, l.stride, y.data(),
                                 argmax[static_cast<std::size_t>(i)].data());
        break;
      case LayerKind::kUpsampleNearest:
        kernels::upsample_forward(x.data(), in.c, n, in.h, in.w, l.stride, y.data());
        break;
      case LayerKind::kConcat: {
        const auto& s = values[static_cast<std::size_t>(graph_.skip_index(i))];
        std::copy(x.begin(), x.end(), y.begin());
        std::copy(s.begin(), s.end(), y.begin() + static_cast<std::ptrdiff_t>(x.size()));
        break;
      }
      case LayerKind::kAdd: {
        const auto& s = values[static_cast<std::size_t>(graph_.skip_index(i))];
        for (std::size_t k = 0; k < y.size(); ++k) y[k] = x[k] + s[k];
        break;
      }
      case LayerKind::kDense:
        kernels::dense_forward(x.data(), in.c, n, in.h, in.w, params.get(l.name + ".weight").values.data(),
                               params.get(l.name + ".bias").values.data(), out.c, y.data());
        break;
      case LayerKind::kSoftmax:
        std::copy(x.begin(), x.end(), y.begin());
        kernels::softmax_forward(y.data(), out.c, static_cast<std::size_t>(n) * out.h * out.w);
        break;
      case LayerKind::kActivation:
        std::copy(x.begin(), x.end(), y.begin());
        break;
    }
    kernels::activation_forward(l.activation, y.data(), y.size());
  }

  BasicTensor<T> result = to_sample_major(values.back(), n, shapes_.back());
  if (tape != nullptr) {
    tape->values = std::move(values);
    tape->argmax = std::move(argmax);
    tape->batch = n;
  }
  return result;
}

template <typename T>
BasicTensor<T> Executor<T>::backward(const BasicParamSet<T>& params, const ForwardTape<T>& tape,
                                     const BasicTensor<T>& grad_output, BasicParamSet<T>* grads,
                                     bool want_input_grad) const {
  const int n = tape.batch;
  const int count = static_cast<int>(graph_.layers.size());
  require(static_cast<int>(tape.values.size()) == count, ErrorCode::kShapeMismatch, "tape does not match graph");
  const Shape3& os = shapes_.back();
  require(grad_output.shape() == Shape4{n, os.c, os.h, os.w}, ErrorCode::kShapeMismatch,
          "output gradient does not match the forward output");

  std::vector<std::vector<T>> g(static_cast<std::size_t>(count));
  g.back() = to_channel_major(grad_output);

  // Gradient buffer for layer j, or nullptr when nothing upstream needs it.
  auto sink = [&](int j) -> T* {
    if (j == 0 && !want_input_grad) return nullptr;
    auto& buf = g[static_cast<std::size_t>(j)];
    if (buf.empty()) buf.assign(volume_of(shapes_[static_cast<std::size_t>(j)], n), T(0));
    return buf.data();
  };
  auto param_grad = [&](const std::string& name) -> T* {
    if (grads == nullptr) return nullptr;
    auto* a = grads->find(name);
    require(a != nullptr, ErrorCode::kShapeMismatch, "gradient set lacks '" + name + "'");
    return a->values.data();
  };

  for (int i = count - 1; i >= 1; --i) {
    auto& dy = g[static_cast<std::size_t>(i)];
    if (dy.empty()) continue;
    const LayerSpec& l = graph_.layers[static_cast<std::size_t>(i)];
    const int src = graph_.source_index(i);
    const Shape3& in = shapes_[static_cast<std::size_t>(src)];
    const Shape3& out = shapes_[static_cast<std::size_t>(i)];
    const std::vector<T>& x = tape.values[static_cast<std::size_t>(src)];
    const std::vector<T>& y = tape.values[static_cast<std::size_t>(i)];
    kernels::activation_backward(l.activation, y.data(), dy.data(), dy.size());

    switch (l.kind) {
      case LayerKind::kInput: break;
      case LayerKind::kConv:
      case LayerKind::kTransposedConv:
      case LayerKind::kDense: {
        const T* w = params.get(l.name + ".weight").values.data();
        T* dw = param_grad(l.name + ".weight");
        T* db = param_grad(l.name + ".bias");
        std::vector<T> dw_scratch, db_scratch;
        if (dw == nullptr) {
          dw_scratch.assign(params.get(l.name + ".weight").values.size(), T(0));
          db_scratch.assign(params.get(l.name + ".bias").values.size(), T(0));
          dw = dw_scratch.data();
          db = db_scratch.data();
        }
        T* dx = sink(src);
        if (l.kind == LayerKind::kConv) {
          kernels::conv_backward(x.data(), w, dy.data(), conv_geom(l, in, out, n), out.c, dw, db, dx);
        } else if (l.kind == LayerKind::kTransposedConv) {
          kernels::transposed_conv_backward(x.data(), w, dy.data(), transposed_geom(l, in, out, n), in.c, dw, db,
                                            dx);
        } else {
          kernels::dense_backward(x.data(), in.c, n, in.h, in.w, w, dy.data(), out.c, dw, db, dx);
        }
        break;
      }
      case LayerKind::kMaxPool:
        if (T* dx = sink(src)) {
          kernels::maxpool_backward(dy.data(), tape.argmax[static_cast<std::size_t>(i)].data(), dy.size(), dx);
        }
        break;
      case LayerKind::kUpsampleNearest:
        if (T* dx = sink(src)) kernels::upsample_backward(dy.data(), in.c, n, in.h, in.w, l.stride, dx);
        break;
      case LayerKind::kConcat: {
        const std::size_t first = x.size();
        if (T* dx = sink(src)) {
          for (std::size_t k = 0; k < first; ++k) dx[k] += dy[k];
        }
        if (T* ds = sink(graph_.skip_index(i))) {
          for (std::size_t k = first; k < dy.size(); ++k) ds[k - first] += dy[k];
        }
        break;
      }
      case LayerKind::kAdd:
        if (T* dx = sink(src)) {
          for (std::size_t k = 0; k < dy.size(); ++k) dx[k] += dy[k];
        }
        if (T* ds = sink(graph_.skip_index(i))) {
          for (std::size_t k = 0; k < dy.size(); ++k) ds[k] += dy[k];
        }
        break;
      case LayerKind::kSoftmax:
        kernels::softmax_backward(y.data(), dy.data(), out.c, static_cast<std::size_t>(n) * out.h * out.w);
        [[fallthrough]];
      case LayerKind::kActivation:
        if (T* dx = sink(src)) {
          for (std::size_t k = 0; k < dy.size(); ++k) dx[k] += dy[k];
        }
        break;
    }
    std::vector<T>().swap(dy);
  }

  if (!want_input_grad) return {};
  if (g[0].empty()) g[0].assign(volume_of(shapes_[0], n), T(0));
  return to_sample_major(g[0], n, shapes_[0]);
}

template class Executor<float>;
template class Executor<double>;

Tensor forward(const NetworkGraph& g, const ParamSet& params, const Tensor& batch) {
  return Executor<float>(g).forward(params, batch);
}

}  // namespace vpet::nn
