#include <cmath>

#include "vpet/error.hpp"
#include "vpet/training.hpp"

namespace vpet::train {

AdamState adam_init(const nn::ParamSet& params) {
  return AdamState{params.zeros_like(), params.zeros_like(), 0};
}

void adam_step(nn::ParamSet& params, const nn::ParamSet& grads, AdamState& state, const AdamConfig& cfg) {
  auto& p = params.arrays();
  const auto& g = grads.arrays();
  auto& m = state.m.arrays();
  auto& v = state.v.arrays();
  require(g.size() == p.size() && m.size() == p.size() && v.size() == p.size(), ErrorCode::kShapeMismatch,
          "optimizer state does not match the parameter set");
  ++state.t;
  const double c1 = 1.0 - std::pow(cfg.beta1, static_cast<double>(state.t));
  const double c2 = 1.0 - std::pow(cfg.beta2, static_cast<double>(state.t));
  for (std::size_t a = 0; a < p.size(); ++a) {
    require(g[a].values.size() == p[a].values.size(), ErrorCode::kShapeMismatch,
            "gradient for '" + p[a].name + "' has the wrong size");
    auto& pv = p[a].values;
    auto& mv = m[a].values;
    auto& vv = v[a].values;
    const auto& gv = g[a].values;
    for (std::size_t i = 0; i < pv.size(); ++i) {
      const double gi = gv[i];
      const double mi = cfg.beta1 * mv[i] + (1.0 - cfg.beta1) * gi;
      const double vi = cfg.beta2 * vv[i] + (1.0 - cfg.beta2) * gi * gi;
      mv[i] = static_cast<float>(mi);
      vv[i] = static_cast<float>(vi);
      pv[i] = static_cast<float>(pv[i] - cfg.learning_rate * (mi / c1) / (std::sqrt(vi / c2) + cfg.epsilon));
    }
  }
}

}  // namespace vpet::train
