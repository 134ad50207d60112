#include <algorithm>
#include <cmath>

#include "vpet/error.hpp"
#include "vpet/netgraph.hpp"

namespace vpet::nn {

namespace {

class GraphBuilder {
 public:
  GraphBuilder(NetworkKind kind, int channels, int h, int w, double width_scale) {
    g_.kind = kind;
    g_.input_channels = channels;
    g_.input_h = h;
    g_.input_w = w;
    g_.width_scale = width_scale;
    g_.layers.push_back(LayerSpec{.name = "input", .kind = LayerKind::kInput, .channels_out = channels});
  }

  int width(int channels) const {
    return std::max(1, static_cast<int>(std::lround(channels * g_.width_scale)));
  }

  // Appends a layer; `from` overrides the implicit "previous layer" input.
  GraphBuilder& conv(const std::string& name, int k, int channels, Activation act, int stride = 1, int dilation = 1,
                     std::optional<std::string> from = std::nullopt) {
    return add(LayerSpec{.name = name,
                         .kind = LayerKind::kConv,
                         .kernel_h = k,
                         .kernel_w = k,
                         .channels_out = channels,
                         .stride = stride,
                         .dilation = dilation,
                         .activation = act,
                         .source = std::move(from)});
  }
  GraphBuilder& upconv(const std::string& name, int k, int stride, int channels) {
    return add(LayerSpec{.name = name,
                         .kind = LayerKind::kTransposedConv,
                         .kernel_h = k,
                         .kernel_w = k,
                         .channels_out = channels,
                         .stride = stride});
  }
  GraphBuilder& pool(const std::string& name) {
    return add(LayerSpec{.name = name, .kind = LayerKind::kMaxPool, .kernel_h = 2, .kernel_w = 2, .stride = 2});
  }
  GraphBuilder& upsample(const std::string& name) {
    return add(
        LayerSpec{.name = name, .kind = LayerKind::kUpsampleNearest, .kernel_h = 2, .kernel_w = 2, .stride = 2});
  }
  GraphBuilder& concat(const std::string& name, const std::string& skip) {
    return add(LayerSpec{.name = name, .kind = LayerKind::kConcat, .skip_source = skip});
  }
  GraphBuilder& sum(const std::string& name, const std::string& skip) {
    return add(LayerSpec{.name = name, .kind = LayerKind::kAdd, .skip_source = skip});
  }
  GraphBuilder& dense(const std::string& name, int units) {
    return add(LayerSpec{.name = name, .kind = LayerKind::kDense, .channels_out = units});
  }
  GraphBuilder& softmax(const std::string& name) {
    return add(LayerSpec{.name = name, .kind = LayerKind::kSoftmax});
  }

  NetworkGraph finish() {
    propagate_shapes(g_);
    return std::move(g_);
  }

 private:
  GraphBuilder& add(LayerSpec l) {
    g_.layers.push_back(std::move(l));
    return *this;
  }

  NetworkGraph g_;
};

// VGG-16 trunk with the fully connected layers recast as convolutions,
// followed by the score layer and the skip-fusion upsampling path. `finest`
// is the last pool stage (4 -> pool4, 3 -> pool3 ...) whose scores are fused.
NetworkGraph build_fcn(NetworkKind kind, int channels, int h, int w, double scale, int finest) {
  GraphBuilder b(kind, channels, h, w, scale);
  const int widths[5] = {64, 128, 256, 512, 512};
  const int depths[5] = {2, 2, 3, 3, 3};
  for (int block = 0; block < 5; ++block) {
    for (int j = 0; j < depths[block]; ++j) {
      b.conv("conv" + std::to_string(block + 1) + "_" + std::to_string(j + 1), 3, b.width(widths[block]),
             Activation::kRelu);
    }
    b.pool("pool" + std::to_string(block + 1));
  }
  b.conv("fc6", 7, b.width(4096), Activation::kRelu);
  b.conv("fc7", 1, b.width(4096), Activation::kRelu);
  b.conv("score_fr", 1, 1, Activation::kLinear);

  // Each fusion stage doubles the resolution of the running score map and
  // adds the 1x1 score of the matching pool output.
  for (int stage = 4; stage >= finest; --stage) {
    const std::string pool = "pool" + std::to_string(stage);
    const std::string up = stage == 4 ? "upscore2" : "upscore_pool" + std::to_string(stage + 1);
    b.upconv(up, 4, 2, 1);
    b.conv("score_" + pool, 1, 1, Activation::kLinear, 1, 1, pool);
    b.sum("fuse_" + pool, up);
  }
  const int factor = 1 << finest;  // stride of pool<finest>
  b.upconv("upscore_final", 2 * factor, factor, 1);
  return b.finish();
}

NetworkGraph build_unet(NetworkKind kind, int channels, int h, int w, double scale) {
  GraphBuilder b(kind, channels, h, w, scale);
  const auto lrelu = Activation::kLeakyRelu;
  b.conv("conv1_1", 3, b.width(32), lrelu, 1, 3).conv("conv1_2", 3, b.width(32), lrelu, 1, 3).pool("pool1");
  b.conv("conv2_1", 3, b.width(64), lrelu, 1, 2).conv("conv2_2", 3, b.width(64), lrelu, 1, 2).pool("pool2");
  b.conv("conv3_1", 3, b.width(128), lrelu).conv("conv3_2", 3, b.width(128), lrelu).pool("pool3");
  b.conv("conv4_1", 3, b.width(256), lrelu).conv("conv4_2", 3, b.width(256), lrelu).pool("pool4");
  b.conv("conv5_1", 3, b.width(512), lrelu).conv("conv5_2", 3, b.width(512), lrelu);

  b.upsample("upsampling1_up").concat("upsampling1", "conv4_2");
  b.conv("conv6_1", 3, b.width(256), lrelu).conv("conv6_2", 3, b.width(256), lrelu);
  b.upsample("upsampling2_up").concat("upsampling2", "conv3_2");
  b.conv("conv7_1", 3, b.width(128), lrelu).conv("conv7_2", 3, b.width(128), lrelu);
  b.upsample("upsampling3_up").concat("upsampling3", "conv2_2");
  b.conv("conv8_1", 3, b.width(64), lrelu, 1, 2).conv("conv8_2", 3, b.width(64), lrelu, 1, 2);
  b.upsample("upsampling4_up").concat("upsampling4", "conv1_2");
  b.conv("conv9_1", 3, b.width(32), lrelu, 1, 3).conv("conv9_2", 3, b.width(32), lrelu, 1, 3);
  b.conv("conv10", 1, 1, Activation::kLinear);
  return b.finish();
}

NetworkGraph build_discriminator(int channels, int h, int w, double scale) {
  GraphBuilder b(NetworkKind::kDiscriminator, channels, h, w, scale);
  const auto lrelu = Activation::kLeakyRelu;
  b.conv("conv1", 3, b.width(32), lrelu, 2);
  b.conv("conv2", 3, b.width(64), lrelu, 2);
  b.conv("conv3", 3, b.width(128), lrelu, 2);
  b.conv("conv4", 3, b.width(256), lrelu, 1);
  b.dense("dense", 2);
  b.softmax("softmax");
  return b.finish();
}

}  // namespace

NetworkGraph build_network(NetworkKind kind, int input_channels, int input_h, int input_w, double width_scale) {
  require(width_scale > 0.0 && width_scale <= 1.0, ErrorCode::kInvalidArgument, "width_scale must lie in (0, 1]");
  require(input_channels >= 1, ErrorCode::kInvalidArgument, "input_channels must be >= 1");
  const int div = input_size_divisor(kind);
  require(input_h >= div && input_w >= div && input_h % div == 0 && input_w % div == 0, ErrorCode::kInvalidArgument,
          std::string(to_string(kind)) + " input size must be a positive multiple of " + std::to_string(div));
  switch (kind) {
    case NetworkKind::kFcn8s: return build_fcn(kind, input_channels, input_h, input_w, width_scale, 3);
    case NetworkKind::kFcn4s: return build_fcn(kind, input_channels, input_h, input_w, width_scale, 2);
    case NetworkKind::kFcn2s: return build_fcn(kind, input_channels, input_h, input_w, width_scale, 1);
    case NetworkKind::kUNetGenerator:
    case NetworkKind::kUNetStandalone: return build_unet(kind, input_channels, input_h, input_w, width_scale);
    case NetworkKind::kDiscriminator: return build_discriminator(input_channels, input_h, input_w, width_scale);
  }
  fail(ErrorCode::kInvalidArgument, "unknown network kind");
}

}  // namespace vpet::nn
