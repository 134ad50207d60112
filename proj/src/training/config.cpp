#include <charconv>
#include <sstream>

#include "vpet/error.hpp"
#include "vpet/training.hpp"

namespace vpet::train {

namespace {

template <typename T>
T parse_number(const std::string& key, const std::string& text) {
  T value{};
  const char* end = text.data() + text.size();
  auto [ptr, ec] = std::from_chars(text.data(), end, value);
  require(ec == std::errc() && ptr == end, ErrorCode::kInvalidArgument,
          "config key '" + key + "': cannot parse '" + text + "'");
  return value;
}

bool parse_bool(const std::string& key, const std::string& text) {
  if (text == "true" || text == "1" || text == "yes") return true;
  if (text == "false" || text == "0" || text == "no") return false;
  fail(ErrorCode::kInvalidArgument, "config key '" + key + "': expected a boolean, got '" + text + "'");
}

std::string format_double(double v) {
  std::ostringstream os;
  os.precision(17);
  os << v;
  return os.str();
}

}  // namespace

double TrainConfig::threshold_norm() const { return (suv_threshold - kSuvWindow.lo()) / kSuvWindow.width(); }

void TrainConfig::validate() const {
  require(learning_rate > 0.0, ErrorCode::kInvalidArgument, "learning_rate must be > 0");
  require(batch_size >= 1, ErrorCode::kInvalidArgument, "batch_size must be >= 1");
  require(lambda >= 0.0, ErrorCode::kInvalidArgument, "lambda must be >= 0");
  require(adam_beta1 >= 0.0 && adam_beta1 < 1.0 && adam_beta2 >= 0.0 && adam_beta2 < 1.0,
          ErrorCode::kInvalidArgument, "Adam betas must lie in [0, 1)");
  require(adam_epsilon > 0.0, ErrorCode::kInvalidArgument, "adam_epsilon must be > 0");
  require(max_steps >= 0, ErrorCode::kInvalidArgument, "max_steps must be >= 0");
  require(width_scale > 0.0, ErrorCode::kInvalidArgument, "width_scale must be > 0");
  require(input_size >= 1, ErrorCode::kInvalidArgument, "input_size must be >= 1");
  require(noise_bound >= 0.0, ErrorCode::kInvalidArgument, "noise_bound must be >= 0");
  require(early_stop_patience >= 0 && val_interval >= 1, ErrorCode::kInvalidArgument,
          "early stopping needs patience >= 0 and val_interval >= 1");
  require(fcn_kind == nn::NetworkKind::kFcn4s || fcn_kind == nn::NetworkKind::kFcn8s ||
              fcn_kind == nn::NetworkKind::kFcn2s,
          ErrorCode::kInvalidArgument, "fcn_kind must be one of FCN4s, FCN8s, FCN2s");
  const int div = nn::input_size_divisor(fcn_kind);
  require(input_size % div == 0, ErrorCode::kInvalidArgument,
          "input_size must be a multiple of " + std::to_string(div));
}

std::map<std::string, std::string> TrainConfig::to_key_values() const {
  return {
      {"learning_rate", format_double(learning_rate)},
      {"batch_size", std::to_string(batch_size)},
      {"adam_beta1", format_double(adam_beta1)},
      {"adam_beta2", format_double(adam_beta2)},
      {"adam_epsilon", format_double(adam_epsilon)},
      {"lambda", format_double(lambda)},
      {"suv_threshold", format_double(suv_threshold)},
      {"max_steps", std::to_string(max_steps)},
      {"seed", std::to_string(seed)},
      {"width_scale", format_double(width_scale)},
      {"input_size", std::to_string(input_size)},
      {"fcn_kind", std::string(nn::to_string(fcn_kind))},
      {"augment", augment ? "true" : "false"},
      {"noise_bound", format_double(noise_bound)},
      {"joint_finetune", joint_finetune ? "true" : "false"},
      {"early_stop_patience", std::to_string(early_stop_patience)},
      {"val_interval", std::to_string(val_interval)},
  };
}

TrainConfig TrainConfig::from_key_values(const std::map<std::string, std::string>& kv) {
  return from_key_values(kv, TrainConfig{});
}

TrainConfig TrainConfig::from_key_values(const std::map<std::string, std::string>& kv, const TrainConfig& base) {
  TrainConfig c = base;
  for (const auto& [k, v] : kv) {
    if (k == "learning_rate") c.learning_rate = parse_number<double>(k, v);
    else if (k == "batch_size") c.batch_size = parse_number<int>(k, v);
    else if (k == "adam_beta1") c.adam_beta1 = parse_number<double>(k, v);
    else if (k == "adam_beta2") c.adam_beta2 = parse_number<double>(k, v);
    else if (k == "adam_epsilon") c.adam_epsilon = parse_number<double>(k, v);
    else if (k == "lambda") c.lambda = parse_number<double>(k, v);
    else if (k == "suv_threshold") c.suv_threshold = parse_number<double>(k, v);
    else if (k == "max_steps") c.max_steps = parse_number<std::int64_t>(k, v);
    else if (k == "seed") c.seed = parse_number<std::uint64_t>(k, v);
    else if (k == "width_scale") c.width_scale = parse_number<double>(k, v);
    else if (k == "input_size") c.input_size = parse_number<int>(k, v);
    else if (k == "fcn_kind") c.fcn_kind = nn::network_kind_from_string(v);
    else if (k == "augment") c.augment = parse_bool(k, v);
    else if (k == "noise_bound") c.noise_bound = parse_number<double>(k, v);
    else if (k == "joint_finetune") c.joint_finetune = parse_bool(k, v);
    else if (k == "early_stop_patience") c.early_stop_patience = parse_number<int>(k, v);
    else if (k == "val_interval") c.val_interval = parse_number<int>(k, v);
    else fail(ErrorCode::kInvalidArgument, "unknown training config key '" + k + "'");
  }
  return c;
}

std::string_view to_string(Stage s) { return s == Stage::kFcn ? "fcn" : "cgan"; }

std::vector<double> TrainState::series(std::string_view name) const {
  std::vector<double> out;
  for (const auto& r : history) {
    if (r.name == name) out.push_back(r.value);
  }
  return out;
}

std::vector<double> moving_average(std::span<const double> values, std::size_t window) {
  require(window >= 1, ErrorCode::kInvalidArgument, "moving average window must be >= 1");
  std::vector<double> out(values.size());
  double sum = 0.0;
  for (std::size_t i = 0; i < values.size(); ++i) {
    sum += values[i];
    if (i >= window) sum -= values[i - window];
    out[i] = sum / static_cast<double>(std::min(i + 1, window));
  }
  return out;
}

}  // namespace vpet::train
