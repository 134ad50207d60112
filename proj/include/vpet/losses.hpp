#pragma once

// Reconstruction and adversarial objectives with analytic gradients.
// Templated on the scalar type so the same code serves training (float)
// and 64-bit finite-difference checks. Sums always accumulate in double.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <span>

#include "vpet/error.hpp"

namespace vpet::train {

/// Column of the discriminator output holding P(real); column 0 is P(fake).
inline constexpr int kRealClass = 1;
/// Probability clamp used inside every log.
inline constexpr double kProbEpsilon = 1e-7;

namespace detail {

template <typename T>
void check_pair(std::span<const T> pred, std::span<const T> target, std::span<T> grad) {
  require(pred.size() == target.size(), ErrorCode::kShapeMismatch, "prediction and target sizes differ");
  require(grad.empty() || grad.size() == pred.size(), ErrorCode::kShapeMismatch, "gradient buffer size mismatch");
}

}  // namespace detail

/// mean_i target(i) * (pred(i) - target(i))^2. When `grad` is non-empty it
/// receives d(loss)/d(pred).
template <typename T>
double weighted_l2_loss(std::span<const T> pred, std::span<const T> target, std::span<T> grad = {}) {
  detail::check_pair(pred, target, grad);
  if (pred.empty()) return 0.0;
  const double inv_n = 1.0 / static_cast<double>(pred.size());
  double sum = 0.0;
  for (std::size_t i = 0; i < pred.size(); ++i) {
    const double t = target[i];
    const double d = static_cast<double>(pred[i]) - t;
    sum += t * d * d;
    if (!grad.empty()) grad[i] = static_cast<T>(2.0 * t * d * inv_n);
  }
  return sum * inv_n;
}

/// The weighted loss evaluated separately over {target <= threshold} and
/// {target > threshold}, each normalised by its own voxel count, then
/// summed. An empty subset contributes zero.
template <typename T>
double split_suv_loss(std::span<const T> pred, std::span<const T> target, double threshold,
                      std::span<T> grad = {}) {
  detail::check_pair(pred, target, grad);
  std::size_t n_high = 0;
  for (T t : target) n_high += static_cast<double>(t) > threshold ? 1 : 0;
  const std::size_t n_low = target.size() - n_high;
  const double inv_high = n_high > 0 ? 1.0 / static_cast<double>(n_high) : 0.0;
  const double inv_low = n_low > 0 ? 1.0 / static_cast<double>(n_low) : 0.0;
  double low = 0.0;
  double high = 0.0;
  for (std::size_t i = 0; i < pred.size(); ++i) {
    const double t = target[i];
    const double d = static_cast<double>(pred[i]) - t;
    const bool is_high = t > threshold;
    (is_high ? high : low) += t * d * d;
    if (!grad.empty()) grad[i] = static_cast<T>(2.0 * t * d * (is_high ? inv_high : inv_low));
  }
  return low * inv_low + high * inv_high;
}

struct AdversarialLosses {
  double discriminator = 0.0;
  double generator = 0.0;
};

/// Discriminator cross-entropy and the non-saturating generator term from
/// (N x 2) row-major class distributions. Optional gradients are taken with
/// respect to those probabilities; clamped entries get zero gradient.
template <typename T>
AdversarialLosses adversarial_losses(std::span<const T> d_real, std::span<const T> d_fake,
                                     std::span<T> grad_d_real = {}, std::span<T> grad_d_fake_disc = {},
                                     std::span<T> grad_d_fake_gen = {}) {
  require(d_real.size() == d_fake.size() && d_real.size() % 2 == 0 && !d_real.empty(), ErrorCode::kShapeMismatch,
          "discriminator outputs must be matching (N x 2) arrays");
  const std::size_t n = d_real.size() / 2;
  const double inv_n = 1.0 / static_cast<double>(n);
  for (auto g : {grad_d_real, grad_d_fake_disc, grad_d_fake_gen}) {
    require(g.empty() || g.size() == d_real.size(), ErrorCode::kShapeMismatch, "gradient buffer size mismatch");
    std::fill(g.begin(), g.end(), T(0));
  }
  auto clamp = [](double p) { return std::clamp(p, kProbEpsilon, 1.0 - kProbEpsilon); };
  auto inside = [](double p) { return p > kProbEpsilon && p < 1.0 - kProbEpsilon; };

  AdversarialLosses out;
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t k = 2 * i + kRealClass;
    const double pr = d_real[k];
    const double pf = d_fake[k];
    out.discriminator += -std::log(clamp(pr)) - std::log(1.0 - clamp(pf));
    out.generator += -std::log(clamp(pf));
    if (!grad_d_real.empty() && inside(pr)) grad_d_real[k] = static_cast<T>(-inv_n / pr);
    if (!grad_d_fake_disc.empty() && inside(pf)) grad_d_fake_disc[k] = static_cast<T>(inv_n / (1.0 - pf));
    if (!grad_d_fake_gen.empty() && inside(pf)) grad_d_fake_gen[k] = static_cast<T>(-inv_n / pf);
  }
  out.discriminator *= inv_n;
  out.generator *= inv_n;
  return out;
}

/// Non-saturating adversarial term plus lambda times the split SUV loss.
/// `grad_pred` receives the reconstruction part of d/d(pred); the
/// adversarial part reaches the prediction through the discriminator, via
/// `grad_d_fake`.
template <typename T>
double generator_objective(std::span<const T> pred, std::span<const T> target, std::span<const T> d_fake,
                           double lambda, double threshold, std::span<T> grad_pred = {},
                           std::span<T> grad_d_fake = {}) {
  const AdversarialLosses adv = adversarial_losses<T>(d_fake, d_fake, {}, {}, grad_d_fake);
  const double recon = split_suv_loss(pred, target, threshold, grad_pred);
  for (auto& g : grad_pred) g = static_cast<T>(lambda * static_cast<double>(g));
  return adv.generator + lambda * recon;
}

}  // namespace vpet::train
