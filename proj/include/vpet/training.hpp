#pragma once

#include <cstdint>
#include <filesystem>
#include <limits>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "vpet/dataprep.hpp"
#include "vpet/netgraph.hpp"
#include "vpet/network.hpp"
#include "vpet/volume.hpp"

namespace vpet::train {

struct TrainConfig {
  double learning_rate = 1e-5;
  int batch_size = 4;
  double adam_beta1 = 0.5;
  double adam_beta2 = 0.999;
  double adam_epsilon = 1e-8;
  double lambda = 20.0;
  double suv_threshold = 2.5;  // SUV; see threshold_norm()
  std::int64_t max_steps = 0;
  std::uint64_t seed = 0;
  double width_scale = 0.25;
  int input_size = 64;
  nn::NetworkKind fcn_kind = nn::NetworkKind::kFcn4s;
  bool augment = true;
  double noise_bound = 0.005;
  bool joint_finetune = false;
  int early_stop_patience = 0;  // validation checks without improvement; 0 disables
  int val_interval = 50;

  /// suv_threshold in normalized units of the SUV window.
  double threshold_norm() const;
  void validate() const;

  /// Flat key/value echo; the same keys are accepted by from_key_values.
  std::map<std::string, std::string> to_key_values() const;
  /// Starts from `base` and overrides every key present. Unknown keys and
  /// unparsable values raise kInvalidArgument.
  static TrainConfig from_key_values(const std::map<std::string, std::string>& kv, const TrainConfig& base);
  static TrainConfig from_key_values(const std::map<std::string, std::string>& kv);
};

struct AdamConfig {
  double learning_rate = 1e-5;
  double beta1 = 0.5;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

struct AdamState {
  nn::ParamSet m;
  nn::ParamSet v;
  std::int64_t t = 0;
};

AdamState adam_init(const nn::ParamSet& params);
void adam_step(nn::ParamSet& params, const nn::ParamSet& grads, AdamState& state, const AdamConfig& cfg);

/// A network identified by how its graph is rebuilt, plus its weights and
/// optimizer moments.
struct NetState {
  nn::NetworkKind kind = nn::NetworkKind::kFcn4s;
  int input_channels = 1;
  int input_size = 64;
  double width_scale = 1.0;
  nn::ParamSet params;
  AdamState adam;

  nn::NetworkGraph graph() const;
};

struct LossRecord {
  std::int64_t step = 0;
  std::string name;
  double value = 0.0;

  friend bool operator==(const LossRecord&, const LossRecord&) = default;
};

enum class Stage { kFcn, kCgan };
std::string_view to_string(Stage s);

struct TrainState {
  Stage stage = Stage::kFcn;
  TrainConfig config;
  std::int64_t step = 0;
  NetState generator;                     // the FCN in stage one, the U-Net in stage two
  std::optional<NetState> discriminator;  // stage two only
  std::optional<NetState> tuned_fcn;      // stage two with joint_finetune only
  std::vector<LossRecord> history;

  double best_val = std::numeric_limits<double>::infinity();
  int evals_since_best = 0;
  bool stopped_early = false;
  std::optional<nn::ParamSet> best_params;

  /// Values of one loss series in step order.
  std::vector<double> series(std::string_view name) const;
};

using SliceSpan = std::span<const prep::SlicePair>;

/// Fresh FCN state (step 0) from cfg.seed.
TrainState init_fcn_state(const TrainConfig& cfg);
/// init_fcn_state followed by continue_fcn up to cfg.max_steps.
TrainState train_fcn(SliceSpan data, const TrainConfig& cfg, SliceSpan val = {});
/// Advances an FCN state to `until_step`; resuming from a checkpoint gives
/// the same trajectory as an uninterrupted run.
void continue_fcn(TrainState& state, SliceSpan data, std::int64_t until_step, SliceSpan val = {});

TrainState init_cgan_state(const TrainState& fcn_state, const TrainConfig& cfg);
TrainState train_cgan(SliceSpan data, const TrainState& fcn_state, const TrainConfig& cfg, SliceSpan val = {});
void continue_cgan(TrainState& state, SliceSpan data, const TrainState& fcn_state, std::int64_t until_step,
                   SliceSpan val = {});

/// Fraction of real and fake validation samples the discriminator labels
/// correctly (threshold 0.5 on P(real)).
double discriminator_accuracy(const TrainState& cgan_state, const TrainState& fcn_state, SliceSpan data);

/// Stage-one or two-stage prediction for a (N, 1, H, W) batch of normalized
/// CT slices; output clipped to [0, 1].
nn::Tensor synthesize_batch(const nn::Tensor& ct, const TrainState& fcn_state, const TrainState* cgan_state);

/// Slice-by-slice synthesis of a normalized CT volume, returned on the same
/// grid with modality NORMALIZED.
Volume3D synthesize(const Volume3D& ct, const TrainState& fcn_state, const TrainState* cgan_state = nullptr);

void save_checkpoint(const TrainState& state, const std::filesystem::path& path);
TrainState load_checkpoint(const std::filesystem::path& path);

/// CSV with header `step,loss_name,value`.
void write_loss_csv(std::span<const LossRecord> history, const std::filesystem::path& path);

/// Trailing moving average.
std::vector<double> moving_average(std::span<const double> values, std::size_t window);

}  // namespace vpet::train
