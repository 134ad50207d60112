#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace vpet::nn {

enum class LayerKind {
  kInput,
  kConv,
  kTransposedConv,
  kMaxPool,
  kUpsampleNearest,
  kConcat,
  kAdd,
  kDense,
  kSoftmax,
  kActivation,
};

enum class Activation { kLinear, kRelu, kLeakyRelu };

/// Negative slope of every LeakyReLU in the generator and discriminator.
inline constexpr double kLeakySlope = 0.2;

std::string_view to_string(LayerKind k);
std::string_view to_string(Activation a);

/// One node of a layer graph. Convolutions use "same" padding
/// (dilation * (kernel - 1) / 2); transposed convolutions pad by
/// (kernel - stride) / 2 so they upsample by exactly `stride`. `stride` is
/// also the pooling window and the nearest-neighbour upsampling factor.
struct LayerSpec {
  std::string name;
  LayerKind kind = LayerKind::kConv;
  int kernel_h = 1;
  int kernel_w = 1;
  int channels_out = 1;
  int stride = 1;
  int dilation = 1;
  Activation activation = Activation::kLinear;
  std::optional<std::string> source;       // primary input; the previous layer when unset
  std::optional<std::string> skip_source;  // second operand of concat / add

  bool has_params() const {
    return kind == LayerKind::kConv || kind == LayerKind::kTransposedConv || kind == LayerKind::kDense;
  }
};

enum class NetworkKind { kFcn4s, kFcn8s, kFcn2s, kUNetGenerator, kDiscriminator, kUNetStandalone };

std::string_view to_string(NetworkKind k);
NetworkKind network_kind_from_string(std::string_view s);

/// Per-sample activation shape.
struct Shape3 {
  int c = 0;
  int h = 0;
  int w = 0;
  friend bool operator==(const Shape3&, const Shape3&) = default;
};

struct NetworkGraph {
  NetworkKind kind = NetworkKind::kFcn4s;
  int input_channels = 1;
  int input_h = 0;
  int input_w = 0;
  double width_scale = 1.0;
  std::vector<LayerSpec> layers;  // layers[0] is the input node

  /// Index of the named layer; throws when absent.
  int index_of(std::string_view name) const;
  /// Index of the primary / skip operand of layer `i`.
  int source_index(int i) const;
  int skip_index(int i) const;
};

/// Builds one of the architecture families. Channel counts are multiplied by
/// `width_scale` (rounded, at least 1) except for single-channel score and
/// output layers.
NetworkGraph build_network(NetworkKind kind, int input_channels, int input_h, int input_w, double width_scale = 1.0);

/// Static shape propagation; throws kShapeMismatch on any inconsistency
/// (odd pooling input, concat/add spatial mismatch, bad references).
std::vector<Shape3> propagate_shapes(const NetworkGraph& g);

Shape3 output_shape(const NetworkGraph& g);

/// Weight + bias scalar count.
std::int64_t count_parameters(const NetworkGraph& g);
std::int64_t count_parameters(const NetworkGraph& g, int layer_index);

/// Text layer table: one line per layer with kind, kernel, stride, dilation,
/// activation, operands and propagated output shape.
std::string to_manifest(const NetworkGraph& g);

/// Required divisor of the input size for the given family.
int input_size_divisor(NetworkKind kind);

}  // namespace vpet::nn
