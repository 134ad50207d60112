#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include "vpet/error.hpp"
#include "vpet/losses.hpp"
#include "vpet/random.hpp"
#include "vpet/training.hpp"

namespace vpet::train {

namespace {

constexpr std::uint64_t kShuffleStream = 0x5A11;
constexpr std::uint64_t kAugmentStream = 0xA06;
constexpr std::uint64_t kNoiseStream = 0x401;
constexpr std::uint64_t kInitStream = 0x1417;

using nn::Tensor;

AdamConfig adam_of(const TrainConfig& c) {
  return {.learning_rate = c.learning_rate, .beta1 = c.adam_beta1, .beta2 = c.adam_beta2, .epsilon = c.adam_epsilon};
}

std::uint64_t init_seed(const TrainConfig& cfg, nn::NetworkKind kind) {
  Rng rng = make_rng(cfg.seed, {kInitStream, static_cast<std::uint64_t>(kind)});
  return rng();
}

NetState make_net(nn::NetworkKind kind, int channels, const TrainConfig& cfg) {
  NetState s{.kind = kind,
             .input_channels = channels,
             .input_size = cfg.input_size,
             .width_scale = cfg.width_scale,
             .params = {},
             .adam = {}};
  s.params = nn::init_params(s.graph(), init_seed(cfg, kind));
  s.adam = adam_init(s.params);
  return s;
}

void check_finite(double value, std::string_view name, std::int64_t step) {
  if (std::isfinite(value)) return;
  std::ostringstream os;
  os << "non-finite " << name << " (" << value << ") at step " << step;
  fail(ErrorCode::kDivergence, os.str());
}

Tensor stack_images(const std::vector<const prep::Image2D*>& images) {
  const int h = images.front()->height;
  const int w = images.front()->width;
  Tensor t(nn::Shape4{static_cast<int>(images.size()), 1, h, w});
  auto dst = t.data().begin();
  for (const auto* im : images) dst = std::copy(im->pixels.begin(), im->pixels.end(), dst);
  return t;
}

/// Channel-wise concatenation of same-sized NCHW tensors.
Tensor concat_channels(std::initializer_list<const Tensor*> parts) {
  const nn::Shape4 first = (*parts.begin())->shape();
  int channels = 0;
  for (const Tensor* p : parts) {
    require(p->shape().n == first.n && p->shape().h == first.h && p->shape().w == first.w,
            ErrorCode::kShapeMismatch, "channel concatenation needs equal N, H, W");
    channels += p->shape().c;
  }
  Tensor out(nn::Shape4{first.n, channels, first.h, first.w});
  auto dst = out.data().begin();
  const std::size_t plane = static_cast<std::size_t>(first.h) * first.w;
  for (int n = 0; n < first.n; ++n) {
    for (const Tensor* p : parts) {
      const std::size_t len = plane * p->shape().c;
      auto src = p->data().begin() + static_cast<std::ptrdiff_t>(len * n);
      dst = std::copy(src, src + static_cast<std::ptrdiff_t>(len), dst);
    }
  }
  return out;
}

Tensor take_channel(const Tensor& t, int c) {
  const nn::Shape4 s = t.shape();
  Tensor out(nn::Shape4{s.n, 1, s.h, s.w});
  const std::size_t plane = static_cast<std::size_t>(s.h) * s.w;
  for (int n = 0; n < s.n; ++n) {
    auto src = t.data().begin() + static_cast<std::ptrdiff_t>(t.offset(n, c, 0, 0));
    std::copy(src, src + static_cast<std::ptrdiff_t>(plane),
              out.data().begin() + static_cast<std::ptrdiff_t>(plane * n));
  }
  return out;
}

Tensor concat_batch(const Tensor& a, const Tensor& b) {
  require(a.shape().c == b.shape().c && a.shape().h == b.shape().h && a.shape().w == b.shape().w,
          ErrorCode::kShapeMismatch, "batch concatenation needs equal C, H, W");
  std::vector<float> data(a.data().begin(), a.data().end());
  data.insert(data.end(), b.data().begin(), b.data().end());
  return Tensor(nn::Shape4{a.shape().n + b.shape().n, a.shape().c, a.shape().h, a.shape().w}, std::move(data));
}

void clip01(Tensor& t) {
  for (float& v : t.data()) v = std::clamp(v, 0.0f, 1.0f);
}

void check_slices(SliceSpan data, int input_size, std::string_view what) {
  for (const auto& s : data) {
    require(s.ct.height == input_size && s.ct.width == input_size && s.pet.height == input_size &&
                s.pet.width == input_size,
            ErrorCode::kShapeMismatch,
            std::string(what) + " slices must be " + std::to_string(input_size) + "x" + std::to_string(input_size));
  }
}

/// Deterministic batch stream. Sample k of the run is item perm_e[k mod n]
/// of epoch e = k / n, so any step can be rebuilt from (seed, step).
class BatchSource {
 public:
  BatchSource(SliceSpan data, const TrainConfig& cfg) : data_(data), cfg_(cfg) {
    aug_ = prep::AugmentConfig::for_input_size(cfg.input_size);
    aug_.noise_bound = cfg.noise_bound;
  }

  struct Batch {
    Tensor ct;
    Tensor ct_noisy;
    Tensor pet;
  };

  Batch get(std::int64_t step, bool with_noise) {
    std::vector<prep::SlicePair> samples;
    samples.reserve(static_cast<std::size_t>(cfg_.batch_size));
    for (int b = 0; b < cfg_.batch_size; ++b) {
      const prep::SlicePair& s = sample(step * cfg_.batch_size + b);
      if (cfg_.augment) {
        Rng rng = make_rng(cfg_.seed, {kAugmentStream, static_cast<std::uint64_t>(step), static_cast<std::uint64_t>(b)});
        samples.push_back(prep::augment(s, aug_, rng));
      } else {
        samples.push_back(s);
      }
    }
    std::vector<const prep::Image2D*> ct;
    std::vector<const prep::Image2D*> pet;
    for (const auto& s : samples) {
      ct.push_back(&s.ct);
      pet.push_back(&s.pet);
    }
    Batch out{stack_images(ct), {}, stack_images(pet)};
    if (with_noise) {
      Rng rng = make_rng(cfg_.seed, {kNoiseStream, static_cast<std::uint64_t>(step)});
      std::vector<prep::Image2D> noisy;
      noisy.reserve(samples.size());
      for (const auto& s : samples) noisy.push_back(prep::add_input_noise(s.ct, aug_, rng));
      std::vector<const prep::Image2D*> ptrs;
      for (const auto& im : noisy) ptrs.push_back(&im);
      out.ct_noisy = stack_images(ptrs);
    } else {
      out.ct_noisy = out.ct;
    }
    return out;
  }

 private:
  const prep::SlicePair& sample(std::int64_t k) {
    const auto n = static_cast<std::int64_t>(data_.size());
    const std::int64_t epoch = k / n;
    if (epoch != cached_epoch_) {
      perm_.resize(data_.size());
      std::iota(perm_.begin(), perm_.end(), std::size_t{0});
      Rng rng = make_rng(cfg_.seed, {kShuffleStream, static_cast<std::uint64_t>(epoch)});
      std::shuffle(perm_.begin(), perm_.end(), rng);
      cached_epoch_ = epoch;
    }
    return data_[perm_[static_cast<std::size_t>(k % n)]];
  }

  SliceSpan data_;
  TrainConfig cfg_;
  prep::AugmentConfig aug_;
  std::vector<std::size_t> perm_;
  std::int64_t cached_epoch_ = -1;
};

/// Unaugmented, noise-free (ct, pet) tensors for a contiguous chunk.
std::pair<Tensor, Tensor> plain_chunk(SliceSpan data, std::size_t begin, std::size_t end) {
  std::vector<const prep::Image2D*> ct;
  std::vector<const prep::Image2D*> pet;
  for (std::size_t i = begin; i < end; ++i) {
    ct.push_back(&data[i].ct);
    pet.push_back(&data[i].pet);
  }
  return {stack_images(ct), stack_images(pet)};
}

const nn::ParamSet& fcn_params_for(const TrainState& cgan, const TrainState& fcn_state) {
  return cgan.tuned_fcn ? cgan.tuned_fcn->params : fcn_state.generator.params;
}

/// Records a validation loss and applies the early-stopping rule. Returns
/// true when training should stop.
bool validation_check(TrainState& s, double val_loss) {
  check_finite(val_loss, "val_loss", s.step);
  s.history.push_back({s.step, "val_loss", val_loss});
  const int patience = s.config.early_stop_patience;
  if (val_loss < s.best_val) {
    s.best_val = val_loss;
    s.evals_since_best = 0;
    if (patience > 0) s.best_params = s.generator.params;
    return false;
  }
  ++s.evals_since_best;
  if (patience > 0 && s.evals_since_best >= patience) {
    s.generator.params = *s.best_params;
    s.stopped_early = true;
    return true;
  }
  return false;
}

bool due_for_validation(const TrainState& s, SliceSpan val) {
  return !val.empty() && s.step % s.config.val_interval == 0;
}

double fcn_val_loss(const TrainState& s, const nn::Executor<float>& ex, SliceSpan val) {
  double sum = 0.0;
  const auto bs = static_cast<std::size_t>(std::max(1, s.config.batch_size));
  for (std::size_t i = 0; i < val.size(); i += bs) {
    const std::size_t end = std::min(val.size(), i + bs);
    auto [ct, pet] = plain_chunk(val, i, end);
    const Tensor pred = ex.forward(s.generator.params, ct);
    sum += weighted_l2_loss<float>(pred.data(), pet.data()) * static_cast<double>(end - i);
  }
  return sum / static_cast<double>(val.size());
}

struct CganExecutors {
  nn::Executor<float> fcn;
  nn::Executor<float> gen;
  nn::Executor<float> disc;
};

}  // namespace

nn::NetworkGraph NetState::graph() const {
  return nn::build_network(kind, input_channels, input_size, input_size, width_scale);
}

// --- stage one ---------------------------------------------------------------

TrainState init_fcn_state(const TrainConfig& cfg) {
  cfg.validate();
  TrainState s;
  s.stage = Stage::kFcn;
  s.config = cfg;
  s.generator = make_net(cfg.fcn_kind, 1, cfg);
  return s;
}

TrainState train_fcn(SliceSpan data, const TrainConfig& cfg, SliceSpan val) {
  TrainState s = init_fcn_state(cfg);
  continue_fcn(s, data, cfg.max_steps, val);
  return s;
}

void continue_fcn(TrainState& s, SliceSpan data, std::int64_t until_step, SliceSpan val) {
  require(s.stage == Stage::kFcn, ErrorCode::kInvalidArgument, "state is not an FCN-stage state");
  require(!data.empty(), ErrorCode::kEmptyInput, "FCN training needs at least one slice pair");
  s.config.validate();
  check_slices(data, s.config.input_size, "training");
  check_slices(val, s.config.input_size, "validation");
  const nn::Executor<float> ex(s.generator.graph());
  BatchSource source(data, s.config);
  const AdamConfig adam = adam_of(s.config);

  while (s.step < until_step && !s.stopped_early) {
    const auto batch = source.get(s.step, false);
    nn::ForwardTape<float> tape;
    const Tensor pred = ex.forward(s.generator.params, batch.ct, &tape);
    Tensor grad(pred.shape());
    const double loss = weighted_l2_loss<float>(pred.data(), batch.pet.data(), grad.data());
    check_finite(loss, "fcn_l2", s.step);
    nn::ParamSet grads = s.generator.params.zeros_like();
    ex.backward(s.generator.params, tape, grad, &grads, false);
    adam_step(s.generator.params, grads, s.generator.adam, adam);
    s.history.push_back({s.step, "fcn_l2", loss});
    ++s.step;
    if (due_for_validation(s, val) && validation_check(s, fcn_val_loss(s, ex, val))) break;
  }
}

// --- stage two ---------------------------------------------------------------

TrainState init_cgan_state(const TrainState& fcn_state, const TrainConfig& cfg) {
  require(fcn_state.stage == Stage::kFcn, ErrorCode::kInvalidArgument, "cGAN training needs an FCN-stage state");
  cfg.validate();
  require(cfg.input_size == fcn_state.generator.input_size, ErrorCode::kInvalidArgument,
          "cGAN input_size must match the trained FCN's input size");
  TrainState s;
  s.stage = Stage::kCgan;
  s.config = cfg;
  s.generator = make_net(nn::NetworkKind::kUNetGenerator, 2, cfg);
  s.discriminator = make_net(nn::NetworkKind::kDiscriminator, 3, cfg);
  if (cfg.joint_finetune) {
    s.tuned_fcn = fcn_state.generator;
    s.tuned_fcn->adam = adam_init(s.tuned_fcn->params);
  }
  return s;
}

TrainState train_cgan(SliceSpan data, const TrainState& fcn_state, const TrainConfig& cfg, SliceSpan val) {
  TrainState s = init_cgan_state(fcn_state, cfg);
  continue_cgan(s, data, fcn_state, cfg.max_steps, val);
  return s;
}

void continue_cgan(TrainState& s, SliceSpan data, const TrainState& fcn_state, std::int64_t until_step,
                   SliceSpan val) {
  require(s.stage == Stage::kCgan && s.discriminator.has_value(), ErrorCode::kInvalidArgument,
          "state is not a cGAN-stage state");
  require(fcn_state.stage == Stage::kFcn, ErrorCode::kInvalidArgument, "cGAN training needs an FCN-stage state");
  require(!data.empty(), ErrorCode::kEmptyInput, "cGAN training needs at least one slice pair");
  s.config.validate();
  check_slices(data, s.config.input_size, "training");
  check_slices(val, s.config.input_size, "validation");

  const CganExecutors ex{nn::Executor<float>(fcn_state.generator.graph()), nn::Executor<float>(s.generator.graph()),
                         nn::Executor<float>(s.discriminator->graph())};
  BatchSource source(data, s.config);
  const AdamConfig adam = adam_of(s.config);
  const double threshold = s.config.threshold_norm();
  const bool joint = s.tuned_fcn.has_value();
  NetState& disc = *s.discriminator;

  while (s.step < until_step && !s.stopped_early) {
    const auto batch = source.get(s.step, true);
    const int n = batch.ct.shape().n;

    nn::ForwardTape<float> fcn_tape;
    const Tensor fcn_raw = ex.fcn.forward(fcn_params_for(s, fcn_state), batch.ct, joint ? &fcn_tape : nullptr);
    Tensor fcn_out = fcn_raw;
    clip01(fcn_out);

    nn::ForwardTape<float> gen_tape;
    const Tensor fake = ex.gen.forward(s.generator.params, concat_channels({&batch.ct_noisy, &fcn_out}), &gen_tape);

    // Discriminator update on [real; fake].
    {
      const Tensor d_in = concat_batch(concat_channels({&fcn_out, &batch.ct, &batch.pet}),
                                       concat_channels({&fcn_out, &batch.ct, &fake}));
      nn::ForwardTape<float> tape;
      const Tensor d_out = ex.disc.forward(disc.params, d_in, &tape);
      Tensor grad(d_out.shape());
      const std::size_t half = static_cast<std::size_t>(n) * 2;
      const auto probs = d_out.data();
      auto g = grad.data();
      const AdversarialLosses adv = adversarial_losses<float>(probs.first(half), probs.subspan(half),
                                                              g.first(half), g.subspan(half));
      check_finite(adv.discriminator, "d_loss", s.step);
      int correct = 0;
      for (int i = 0; i < n; ++i) {
        correct += probs[2 * static_cast<std::size_t>(i) + kRealClass] > 0.5f ? 1 : 0;
        correct += probs[half + 2 * static_cast<std::size_t>(i) + kRealClass] < 0.5f ? 1 : 0;
      }
      nn::ParamSet grads = disc.params.zeros_like();
      ex.disc.backward(disc.params, tape, grad, &grads, false);
      adam_step(disc.params, grads, disc.adam, adam);
      s.history.push_back({s.step, "d_loss", adv.discriminator});
      s.history.push_back({s.step, "d_acc", correct / (2.0 * n)});
    }

    // Generator update against the refreshed discriminator.
    {
      nn::ForwardTape<float> tape;
      const Tensor d_out = ex.disc.forward(disc.params, concat_channels({&fcn_out, &batch.ct, &fake}), &tape);
      Tensor grad_fake(fake.shape());
      Tensor grad_d(d_out.shape());
      const double total = generator_objective<float>(fake.data(), batch.pet.data(), d_out.data(), s.config.lambda,
                                                      threshold, grad_fake.data(), grad_d.data());
      check_finite(total, "g_total", s.step);
      const double recon = split_suv_loss<float>(fake.data(), batch.pet.data(), threshold);
      const Tensor d_in_grad = ex.disc.backward(disc.params, tape, grad_d, nullptr, true);
      const Tensor via_disc = take_channel(d_in_grad, 2);
      for (std::size_t i = 0; i < grad_fake.size(); ++i) grad_fake.data()[i] += via_disc.data()[i];

      nn::ParamSet grads = s.generator.params.zeros_like();
      const Tensor g_in_grad = ex.gen.backward(s.generator.params, gen_tape, grad_fake, &grads, joint);
      adam_step(s.generator.params, grads, s.generator.adam, adam);

      if (joint) {
        Tensor grad_fcn = take_channel(g_in_grad, 1);
        const Tensor d_fcn = take_channel(d_in_grad, 0);
        for (std::size_t i = 0; i < grad_fcn.size(); ++i) {
          const float raw = fcn_raw.data()[i];
          const bool passes = raw > 0.0f && raw < 1.0f;
          grad_fcn.data()[i] = passes ? grad_fcn.data()[i] + d_fcn.data()[i] : 0.0f;
        }
        nn::ParamSet fgrads = s.tuned_fcn->params.zeros_like();
        ex.fcn.backward(s.tuned_fcn->params, fcn_tape, grad_fcn, &fgrads, false);
        adam_step(s.tuned_fcn->params, fgrads, s.tuned_fcn->adam, adam);
      }
      s.history.push_back({s.step, "g_adv", total - s.config.lambda * recon});
      s.history.push_back({s.step, "g_recon", recon});
      s.history.push_back({s.step, "g_total", total});
    }
    ++s.step;

    if (due_for_validation(s, val)) {
      double sum = 0.0;
      const auto bs = static_cast<std::size_t>(s.config.batch_size);
      for (std::size_t i = 0; i < val.size(); i += bs) {
        const std::size_t end = std::min(val.size(), i + bs);
        auto [ct, pet] = plain_chunk(val, i, end);
        Tensor f = ex.fcn.forward(fcn_params_for(s, fcn_state), ct);
        clip01(f);
        const Tensor out = ex.gen.forward(s.generator.params, concat_channels({&ct, &f}));
        sum += split_suv_loss<float>(out.data(), pet.data(), threshold) * static_cast<double>(end - i);
      }
      if (validation_check(s, sum / static_cast<double>(val.size()))) break;
    }
  }
}

double discriminator_accuracy(const TrainState& cgan, const TrainState& fcn_state, SliceSpan data) {
  require(cgan.stage == Stage::kCgan && cgan.discriminator.has_value(), ErrorCode::kInvalidArgument,
          "discriminator accuracy needs a cGAN-stage state");
  require(!data.empty(), ErrorCode::kEmptyInput, "no slices to score");
  check_slices(data, cgan.config.input_size, "evaluation");
  const CganExecutors ex{nn::Executor<float>(fcn_state.generator.graph()),
                         nn::Executor<float>(cgan.generator.graph()),
                         nn::Executor<float>(cgan.discriminator->graph())};
  std::size_t correct = 0;
  const std::size_t bs = 8;
  for (std::size_t i = 0; i < data.size(); i += bs) {
    const std::size_t end = std::min(data.size(), i + bs);
    auto [ct, pet] = plain_chunk(data, i, end);
    Tensor f = ex.fcn.forward(fcn_params_for(cgan, fcn_state), ct);
    clip01(f);
    const Tensor fake = ex.gen.forward(cgan.generator.params, concat_channels({&ct, &f}));
    const Tensor real_p = ex.disc.forward(cgan.discriminator->params, concat_channels({&f, &ct, &pet}));
    const Tensor fake_p = ex.disc.forward(cgan.discriminator->params, concat_channels({&f, &ct, &fake}));
    for (std::size_t k = 0; k < end - i; ++k) {
      correct += real_p.data()[2 * k + kRealClass] > 0.5f ? 1 : 0;
      correct += fake_p.data()[2 * k + kRealClass] < 0.5f ? 1 : 0;
    }
  }
  return static_cast<double>(correct) / (2.0 * static_cast<double>(data.size()));
}

// --- inference -----------------------------------------------------------------

Tensor synthesize_batch(const Tensor& ct, const TrainState& fcn_state, const TrainState* cgan_state) {
  require(fcn_state.stage == Stage::kFcn, ErrorCode::kInvalidArgument, "synthesis needs an FCN-stage state");
  require(cgan_state == nullptr || cgan_state->stage == Stage::kCgan, ErrorCode::kInvalidArgument,
          "second-stage state must come from cGAN training");
  const int size = fcn_state.generator.input_size;
  require(ct.shape().c == 1 && ct.shape().h == size && ct.shape().w == size, ErrorCode::kGridMismatch,
          "CT slices must be 1x" + std::to_string(size) + "x" + std::to_string(size) + " to match the network");
  const nn::ParamSet& fp = cgan_state ? fcn_params_for(*cgan_state, fcn_state) : fcn_state.generator.params;
  Tensor f = nn::Executor<float>(fcn_state.generator.graph()).forward(fp, ct);
  clip01(f);
  if (cgan_state == nullptr) return f;
  Tensor out = nn::Executor<float>(cgan_state->generator.graph())
                   .forward(cgan_state->generator.params, concat_channels({&ct, &f}));
  clip01(out);
  return out;
}

Volume3D synthesize(const Volume3D& ct, const TrainState& fcn_state, const TrainState* cgan_state) {
  require(ct.modality() == Modality::kNormalized, ErrorCode::kInvalidArgument, "synthesis expects a NORMALIZED CT");
  const Dims d = ct.dims();
  const int size = fcn_state.generator.input_size;
  require(d.x == size && d.y == size, ErrorCode::kGridMismatch,
          "CT slices are " + std::to_string(d.x) + "x" + std::to_string(d.y) + " but the network expects " +
              std::to_string(size) + "x" + std::to_string(size));
  const std::size_t plane = static_cast<std::size_t>(d.x) * d.y;
  std::vector<float> out(ct.size());
  const int chunk = 8;
  for (int z0 = 0; z0 < d.z; z0 += chunk) {
    const int z1 = std::min(d.z, z0 + chunk);
    Tensor batch(nn::Shape4{z1 - z0, 1, d.y, d.x});
    const auto src = ct.data();
    std::copy(src.begin() + static_cast<std::ptrdiff_t>(plane * z0), src.begin() + static_cast<std::ptrdiff_t>(plane * z1),
              batch.data().begin());
    const Tensor pred = synthesize_batch(batch, fcn_state, cgan_state);
    std::copy(pred.data().begin(), pred.data().end(), out.begin() + static_cast<std::ptrdiff_t>(plane * z0));
  }
  return Volume3D(ct.grid(), Modality::kNormalized, std::move(out));
}

}  // namespace vpet::train
