#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "vpet/netgraph.hpp"
#include "vpet/tensor.hpp"

namespace vpet::nn {

template <typename T>
struct ParamArray {
  std::string name;  // "<layer>.weight" or "<layer>.bias"
  std::vector<int> shape;
  std::vector<T> values;
};

/// Named parameter arrays in graph order. Weight layouts:
///   conv             [out, in, kh, kw]
///   transposed conv  [in, out, kh, kw]
///   dense            [units, in_c * in_h * in_w]   (per-sample CHW flatten)
template <typename T>
class BasicParamSet {
 public:
  std::vector<ParamArray<T>>& arrays() { return arrays_; }
  const std::vector<ParamArray<T>>& arrays() const { return arrays_; }

  const ParamArray<T>* find(std::string_view name) const;
  ParamArray<T>* find(std::string_view name);
  const ParamArray<T>& get(std::string_view name) const;

  std::size_t scalar_count() const;
  /// Same names and shapes, all values zero.
  BasicParamSet zeros_like() const;
  void fill(T value);
  bool all_finite() const;

  template <typename U>
  BasicParamSet<U> cast() const {
    BasicParamSet<U> out;
    for (const auto& a : arrays_) out.arrays().push_back({a.name, a.shape, std::vector<U>(a.values.begin(), a.values.end())});
    return out;
  }

  friend bool operator==(const BasicParamSet& a, const BasicParamSet& b) {
    if (a.arrays_.size() != b.arrays_.size()) return false;
    for (std::size_t i = 0; i < a.arrays_.size(); ++i) {
      if (a.arrays_[i].name != b.arrays_[i].name || a.arrays_[i].shape != b.arrays_[i].shape ||
          a.arrays_[i].values != b.arrays_[i].values) {
        return false;
      }
    }
    return true;
  }

 private:
  std::vector<ParamArray<T>> arrays_;
};

using ParamSet = BasicParamSet<float>;

/// Zero-valued arrays with the graph's parameter names and shapes.
ParamSet zero_params(const NetworkGraph& g);

/// He-uniform weights and zero biases for convolutions and dense layers;
/// transposed convolutions start as bilinear interpolation kernels.
ParamSet init_params(const NetworkGraph& g, std::uint64_t seed);

/// Activations retained by a forward pass for the matching backward pass.
template <typename T>
struct ForwardTape {
  std::vector<std::vector<T>> values;         // per layer, channel-major (C, N, H, W)
  std::vector<std::vector<std::int32_t>> argmax;  // per max-pool layer
  int batch = 0;
};

/// Runs layer graphs. Stateless apart from the bound graph and its shapes,
/// so one executor may serve concurrent callers with disjoint inputs.
template <typename T>
class Executor {
 public:
  explicit Executor(NetworkGraph graph);

  const NetworkGraph& graph() const { return graph_; }
  const std::vector<Shape3>& shapes() const { return shapes_; }

  /// (N, C_in, H, W) -> (N, C_out, H_out, W_out). Pass a tape to keep what
  /// backward() needs.
  BasicTensor<T> forward(const BasicParamSet<T>& params, const BasicTensor<T>& input,
                         ForwardTape<T>* tape = nullptr) const;

  /// Accumulates parameter gradients into `grads` (which must match the
  /// parameter layout) and returns d(loss)/d(input) when requested.
  BasicTensor<T> backward(const BasicParamSet<T>& params, const ForwardTape<T>& tape,
                          const BasicTensor<T>& grad_output, BasicParamSet<T>* grads, bool want_input_grad) const;

 private:
  NetworkGraph graph_;
  std::vector<Shape3> shapes_;
};

extern template class Executor<float>;
extern template class Executor<double>;

/// One-shot forward pass.
Tensor forward(const NetworkGraph& g, const ParamSet& params, const Tensor& batch);

}  // namespace vpet::nn
