#include <cmath>

#include "vpet/error.hpp"
#include "vpet/network.hpp"
#include "vpet/random.hpp"

namespace vpet::nn {

template <typename T>
const ParamArray<T>* BasicParamSet<T>::find(std::string_view name) const {
  for (const auto& a : arrays_) {
    if (a.name == name) return &a;
  }
  return nullptr;
}

template <typename T>
ParamArray<T>* BasicParamSet<T>::find(std::string_view name) {
  for (auto& a : arrays_) {
    if (a.name == name) return &a;
  }
  return nullptr;
}

template <typename T>
const ParamArray<T>& BasicParamSet<T>::get(std::string_view name) const {
  const auto* a = find(name);
  require(a != nullptr, ErrorCode::kShapeMismatch, "missing parameter '" + std::string(name) + "'");
  return *a;
}

template <typename T>
std::size_t BasicParamSet<T>::scalar_count() const {
  std::size_t n = 0;
  for (const auto& a : arrays_) n += a.values.size();
  return n;
}

template <typename T>
BasicParamSet<T> BasicParamSet<T>::zeros_like() const {
  BasicParamSet out;
  for (const auto& a : arrays_) out.arrays_.push_back({a.name, a.shape, std::vector<T>(a.values.size(), T(0))});
  return out;
}

template <typename T>
void BasicParamSet<T>::fill(T value) {
  for (auto& a : arrays_) std::fill(a.values.begin(), a.values.end(), value);
}

template <typename T>
bool BasicParamSet<T>::all_finite() const {
  for (const auto& a : arrays_) {
    for (T v : a.values) {
      if (!std::isfinite(v)) return false;
    }
  }
  return true;
}

template class BasicParamSet<float>;
template class BasicParamSet<double>;

namespace {

std::size_t product(const std::vector<int>& shape) {
  std::size_t n = 1;
  for (int d : shape) n *= static_cast<std::size_t>(d);
  return n;
}

}  // namespace

ParamSet zero_params(const NetworkGraph& g) {
  const auto shapes = propagate_shapes(g);
  ParamSet p;
  for (int i = 1; i < static_cast<int>(g.layers.size()); ++i) {
    const LayerSpec& l = g.layers[static_cast<std::size_t>(i)];
    if (!l.has_params()) continue;
    const Shape3 in = shapes[static_cast<std::size_t>(g.source_index(i))];
    std::vector<int> wshape;
    switch (l.kind) {
      case LayerKind::kConv: wshape = {l.channels_out, in.c, l.kernel_h, l.kernel_w}; break;
      case LayerKind::kTransposedConv: wshape = {in.c, l.channels_out, l.kernel_h, l.kernel_w}; break;
      default: wshape = {l.channels_out, in.c * in.h * in.w}; break;
    }
    p.arrays().push_back({l.name + ".weight", wshape, std::vector<float>(product(wshape), 0.0f)});
    p.arrays().push_back({l.name + ".bias", {l.channels_out}, std::vector<float>(l.channels_out, 0.0f)});
  }
  return p;
}

ParamSet init_params(const NetworkGraph& g, std::uint64_t seed) {
  ParamSet p = zero_params(g);
  std::uint64_t layer = 0;
  for (auto& a : p.arrays()) {
    if (a.name.ends_with(".bias")) continue;
    ++layer;
    const std::string lname = a.name.substr(0, a.name.size() - std::string_view(".weight").size());
    const LayerSpec& spec = g.layers[static_cast<std::size_t>(g.index_of(lname))];
    if (spec.kind == LayerKind::kTransposedConv) {
      // Bilinear upsampling kernel on the channel diagonal.
      const int cin = a.shape[0];
      const int cout = a.shape[1];
      const int kh = a.shape[2];
      const int kw = a.shape[3];
      auto tap = [](int k, int i) {
        const double factor = (k + 1) / 2;
        const double centre = k % 2 == 1 ? factor - 1 : factor - 0.5;
        return 1.0 - std::abs(i - centre) / factor;
      };
      for (int c = 0; c < std::min(cin, cout); ++c) {
        for (int y = 0; y < kh; ++y) {
          for (int x = 0; x < kw; ++x) {
            a.values[((static_cast<std::size_t>(c) * cout + c) * kh + y) * kw + x] =
                static_cast<float>(tap(kh, y) * tap(kw, x));
          }
        }
      }
      continue;
    }
    const std::size_t fan_in = a.values.size() / static_cast<std::size_t>(a.shape[0]);
    const double limit = std::sqrt(6.0 / static_cast<double>(fan_in));
    Rng rng = make_rng(seed, {0x1417, layer});
    std::uniform_real_distribution<double> u(-limit, limit);
    for (float& v : a.values) v = static_cast<float>(u(rng));
  }
  return p;
}

}  // namespace vpet::nn
