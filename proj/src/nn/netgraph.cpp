#include <cstdio>
#include <sstream>

#include "vpet/error.hpp"
#include "vpet/netgraph.hpp"

namespace vpet::nn {

std::string_view to_string(LayerKind k) {
  switch (k) {
    case LayerKind::kInput: return "input";
    case LayerKind::kConv: return "conv";
    case LayerKind::kTransposedConv: return "transposed_conv";
    case LayerKind::kMaxPool: return "maxpool";
    case LayerKind::kUpsampleNearest: return "upsample_nn";
    case LayerKind::kConcat: return "concat";
    case LayerKind::kAdd: return "add";
    case LayerKind::kDense: return "dense";
    case LayerKind::kSoftmax: return "softmax";
    case LayerKind::kActivation: return "activation";
  }
  return "?";
}

std::string_view to_string(Activation a) {
  switch (a) {
    case Activation::kLinear: return "linear";
    case Activation::kRelu: return "relu";
    case Activation::kLeakyRelu: return "leaky_relu(0.2)";
  }
  return "?";
}

std::string_view to_string(NetworkKind k) {
  switch (k) {
    case NetworkKind::kFcn4s: return "FCN4s";
    case NetworkKind::kFcn8s: return "FCN8s";
    case NetworkKind::kFcn2s: return "FCN2s";
    case NetworkKind::kUNetGenerator: return "UNetGen";
    case NetworkKind::kDiscriminator: return "Discriminator";
    case NetworkKind::kUNetStandalone: return "UNetStandalone";
  }
  return "?";
}

NetworkKind network_kind_from_string(std::string_view s) {
  for (NetworkKind k : {NetworkKind::kFcn4s, NetworkKind::kFcn8s, NetworkKind::kFcn2s, NetworkKind::kUNetGenerator,
                        NetworkKind::kDiscriminator, NetworkKind::kUNetStandalone}) {
    if (to_string(k) == s) return k;
  }
  fail(ErrorCode::kInvalidArgument, "unknown network '" + std::string(s) + "'");
}

int NetworkGraph::index_of(std::string_view name) const {
  for (std::size_t i = 0; i < layers.size(); ++i) {
    if (layers[i].name == name) return static_cast<int>(i);
  }
  fail(ErrorCode::kInvalidArgument, "no layer named '" + std::string(name) + "'");
}

int NetworkGraph::source_index(int i) const {
  const auto& l = layers[static_cast<std::size_t>(i)];
  const int s = l.source ? index_of(*l.source) : i - 1;
  require(s >= 0 && s < i, ErrorCode::kShapeMismatch, "layer '" + l.name + "' reads a later or missing layer");
  return s;
}

int NetworkGraph::skip_index(int i) const {
  const auto& l = layers[static_cast<std::size_t>(i)];
  require(l.skip_source.has_value(), ErrorCode::kShapeMismatch, "layer '" + l.name + "' needs a skip_source");
  const int s = index_of(*l.skip_source);
  require(s < i, ErrorCode::kShapeMismatch, "skip source of '" + l.name + "' does not precede it");
  return s;
}

std::vector<Shape3> propagate_shapes(const NetworkGraph& g) {
  require(!g.layers.empty() && g.layers[0].kind == LayerKind::kInput, ErrorCode::kShapeMismatch,
          "graph must start with an input layer");
  std::vector<Shape3> shapes(g.layers.size());
  shapes[0] = {g.input_channels, g.input_h, g.input_w};
  for (int i = 1; i < static_cast<int>(g.layers.size()); ++i) {
    const LayerSpec& l = g.layers[static_cast<std::size_t>(i)];
    const std::string where = "layer '" + l.name + "': ";
    require(l.kernel_h >= 1 && l.kernel_w >= 1 && l.stride >= 1 && l.dilation >= 1 && l.channels_out >= 1,
            ErrorCode::kShapeMismatch, where + "kernel, stride, dilation and channels must be >= 1");
    const Shape3 in = shapes[static_cast<std::size_t>(g.source_index(i))];
    Shape3 out = in;
    switch (l.kind) {
      case LayerKind::kInput:
        fail(ErrorCode::kShapeMismatch, where + "only the first layer may be an input");
      case LayerKind::kConv: {
        require(l.kernel_h % 2 == 1 && l.kernel_w % 2 == 1, ErrorCode::kShapeMismatch, where + "odd kernels only");
        const int ph = l.dilation * (l.kernel_h - 1) / 2;
        const int pw = l.dilation * (l.kernel_w - 1) / 2;
        out.h = (in.h + 2 * ph - l.dilation * (l.kernel_h - 1) - 1) / l.stride + 1;
        out.w = (in.w + 2 * pw - l.dilation * (l.kernel_w - 1) - 1) / l.stride + 1;
        out.c = l.channels_out;
        break;
      }
      case LayerKind::kTransposedConv: {
        require(l.dilation == 1, ErrorCode::kShapeMismatch, where + "transposed conv supports dilation 1 only");
        require(l.kernel_h >= l.stride && (l.kernel_h - l.stride) % 2 == 0 && l.kernel_w >= l.stride &&
                    (l.kernel_w - l.stride) % 2 == 0,
                ErrorCode::kShapeMismatch, where + "kernel - stride must be even and non-negative");
        out = {l.channels_out, in.h * l.stride, in.w * l.stride};
        break;
      }
      case LayerKind::kMaxPool:
        require(in.h % l.stride == 0 && in.w % l.stride == 0, ErrorCode::kShapeMismatch,
                where + "pooling input " + std::to_string(in.h) + "x" + std::to_string(in.w) +
                    " not divisible by " + std::to_string(l.stride));
        out = {in.c, in.h / l.stride, in.w / l.stride};
        break;
      case LayerKind::kUpsampleNearest:
        out = {in.c, in.h * l.stride, in.w * l.stride};
        break;
      case LayerKind::kConcat: {
        const Shape3 skip = shapes[static_cast<std::size_t>(g.skip_index(i))];
        require(skip.h == in.h && skip.w == in.w, ErrorCode::kShapeMismatch, where + "concat spatial mismatch");
        out = {in.c + skip.c, in.h, in.w};
        break;
      }
      case LayerKind::kAdd: {
        const Shape3 skip = shapes[static_cast<std::size_t>(g.skip_index(i))];
        require(skip == in, ErrorCode::kShapeMismatch, where + "add operands differ in shape");
        break;
      }
      case LayerKind::kDense:
        out = {l.channels_out, 1, 1};
        break;
      case LayerKind::kSoftmax:
      case LayerKind::kActivation:
        break;
    }
    require(out.h >= 1 && out.w >= 1, ErrorCode::kShapeMismatch, where + "spatial size collapsed to zero");
    shapes[static_cast<std::size_t>(i)] = out;
  }
  return shapes;
}

Shape3 output_shape(const NetworkGraph& g) { return propagate_shapes(g).back(); }

std::int64_t count_parameters(const NetworkGraph& g, int layer_index) {
  const auto shapes = propagate_shapes(g);
  const LayerSpec& l = g.layers[static_cast<std::size_t>(layer_index)];
  if (!l.has_params()) return 0;
  const Shape3 in = shapes[static_cast<std::size_t>(g.source_index(layer_index))];
  const std::int64_t cout = l.channels_out;
  if (l.kind == LayerKind::kDense) return static_cast<std::int64_t>(in.c) * in.h * in.w * cout + cout;
  return static_cast<std::int64_t>(l.kernel_h) * l.kernel_w * in.c * cout + cout;
}

std::int64_t count_parameters(const NetworkGraph& g) {
  std::int64_t total = 0;
  for (int i = 1; i < static_cast<int>(g.layers.size()); ++i) total += count_parameters(g, i);
  return total;
}

std::string to_manifest(const NetworkGraph& g) {
  const auto shapes = propagate_shapes(g);
  std::ostringstream os;
  os << "# network " << to_string(g.kind) << " input " << g.input_h << "x" << g.input_w << "x" << g.input_channels
     << " width_scale " << g.width_scale << "\n";
  os << "# name kind kernel stride dilation activation source skip -> HxWxC params\n";
  for (int i = 0; i < static_cast<int>(g.layers.size()); ++i) {
    const LayerSpec& l = g.layers[static_cast<std::size_t>(i)];
    const Shape3& s = shapes[static_cast<std::size_t>(i)];
    os << l.name << ' ' << to_string(l.kind) << ' ' << l.kernel_h << 'x' << l.kernel_w << ' ' << l.stride << ' '
       << l.dilation << ' ' << to_string(l.activation) << ' '
       << (i == 0 ? std::string("-") : g.layers[static_cast<std::size_t>(g.source_index(i))].name) << ' '
       << l.skip_source.value_or("-") << " -> " << s.h << 'x' << s.w << 'x' << s.c << ' '
       << (i == 0 ? 0 : count_parameters(g, i)) << '\n';
  }
  os << "# total parameters " << count_parameters(g) << '\n';
  return os.str();
}

int input_size_divisor(NetworkKind kind) {
  switch (kind) {
    case NetworkKind::kFcn4s:
    case NetworkKind::kFcn8s:
    case NetworkKind::kFcn2s: return 32;
    case NetworkKind::kUNetGenerator:
    case NetworkKind::kUNetStandalone: return 16;
    case NetworkKind::kDiscriminator: return 8;
  }
  return 1;
}

}  // namespace vpet::nn
