// Checkpoint container:
//   8 bytes   magic "VPETCKPT"
//   8 bytes   little-endian header length L
//   L bytes   UTF-8 JSON header (config echo, step, nets, array table, history)
//   ...       f32 little-endian payload of every array in table order
// The file must end exactly after the last array.

#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>

#include <json.hpp>
#include "vpet/error.hpp"
#include "vpet/training.hpp"

namespace vpet::train {

namespace {

using nlohmann::json;

constexpr char kMagic[8] = {'V', 'P', 'E', 'T', 'C', 'K', 'P', 'T'};
constexpr int kFormatVersion = 1;

[[noreturn]] void corrupt(const std::filesystem::path& path, const std::string& what) {
  fail(ErrorCode::kCorruptCheckpoint, path.string() + ": " + what);
}

void put_u64(std::ostream& os, std::uint64_t v) {
  unsigned char b[8];
  for (int i = 0; i < 8; ++i) b[i] = static_cast<unsigned char>(v >> (8 * i));
  os.write(reinterpret_cast<const char*>(b), 8);
}

std::uint64_t get_u64(const unsigned char* b) {
  std::uint64_t v = 0;
  for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(b[i]) << (8 * i);
  return v;
}

void put_floats(std::ostream& os, const std::vector<float>& values) {
  std::vector<unsigned char> buf(values.size() * 4);
  for (std::size_t i = 0; i < values.size(); ++i) {
    const auto u = std::bit_cast<std::uint32_t>(values[i]);
    for (int k = 0; k < 4; ++k) buf[4 * i + k] = static_cast<unsigned char>(u >> (8 * k));
  }
  os.write(reinterpret_cast<const char*>(buf.data()), static_cast<std::streamsize>(buf.size()));
}

struct Entry {
  std::string name;
  const nn::ParamArray<float>* array;
};

void collect(std::vector<Entry>& out, const std::string& prefix, const nn::ParamSet& set) {
  for (const auto& a : set.arrays()) out.push_back({prefix + a.name, &a});
}

json net_header(const NetState& n) {
  return {{"kind", std::string(nn::to_string(n.kind))},
          {"input_channels", n.input_channels},
          {"input_size", n.input_size},
          {"width_scale", n.width_scale},
          {"adam_t", n.adam.t}};
}

}  // namespace

void save_checkpoint(const TrainState& state, const std::filesystem::path& path) {
  std::vector<Entry> entries;
  json nets = json::object();
  auto add_net = [&](const std::string& role, const NetState& n) {
    nets[role] = net_header(n);
    collect(entries, role + "/params/", n.params);
    collect(entries, role + "/adam_m/", n.adam.m);
    collect(entries, role + "/adam_v/", n.adam.v);
  };
  add_net("generator", state.generator);
  if (state.discriminator) add_net("discriminator", *state.discriminator);
  if (state.tuned_fcn) add_net("tuned_fcn", *state.tuned_fcn);
  if (state.best_params) collect(entries, "best/", *state.best_params);

  json header;
  header["format_version"] = kFormatVersion;
  header["stage"] = std::string(to_string(state.stage));
  header["step"] = state.step;
  header["config"] = state.config.to_key_values();
  header["nets"] = nets;
  json table = json::array();
  for (const auto& e : entries) table.push_back({{"name", e.name}, {"shape", e.array->shape}});
  header["arrays"] = table;
  json history = json::array();
  for (const auto& r : state.history) history.push_back(json::array({r.step, r.name, r.value}));
  header["history"] = history;
  header["early_stop"] = {{"best_val", std::isfinite(state.best_val) ? json(state.best_val) : json(nullptr)},
                          {"evals_since_best", state.evals_since_best},
                          {"stopped_early", state.stopped_early}};
  const std::string text = header.dump();

  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  const std::filesystem::path tmp = path.string() + ".tmp";
  {
    std::ofstream os(tmp, std::ios::binary | std::ios::trunc);
    require(static_cast<bool>(os), ErrorCode::kIoFailure, "cannot write " + tmp.string());
    os.write(kMagic, sizeof kMagic);
    put_u64(os, text.size());
    os.write(text.data(), static_cast<std::streamsize>(text.size()));
    for (const auto& e : entries) put_floats(os, e.array->values);
    require(static_cast<bool>(os.flush()), ErrorCode::kIoFailure, "write failed for " + tmp.string());
  }
  std::filesystem::rename(tmp, path);
}

TrainState load_checkpoint(const std::filesystem::path& path) {
  require(std::filesystem::is_regular_file(path), ErrorCode::kMissingFile, "no checkpoint at " + path.string());
  std::ifstream is(path, std::ios::binary);
  require(static_cast<bool>(is), ErrorCode::kIoFailure, "cannot open " + path.string());
  const std::vector<unsigned char> bytes((std::istreambuf_iterator<char>(is)), std::istreambuf_iterator<char>());

  if (bytes.size() < 16 || std::memcmp(bytes.data(), kMagic, sizeof kMagic) != 0) corrupt(path, "bad magic");
  const std::uint64_t header_len = get_u64(bytes.data() + 8);
  if (header_len > bytes.size() - 16) corrupt(path, "header length exceeds file size");
  const json header =
      json::parse(bytes.begin() + 16, bytes.begin() + 16 + static_cast<std::ptrdiff_t>(header_len), nullptr, false);
  if (header.is_discarded() || !header.is_object()) corrupt(path, "header is not valid JSON");

  TrainState s;
  std::size_t cursor = 16 + header_len;
  try {
    if (header.at("format_version").get<int>() != kFormatVersion) corrupt(path, "unsupported format version");
    const std::string stage = header.at("stage").get<std::string>();
    if (stage != "fcn" && stage != "cgan") corrupt(path, "unknown stage '" + stage + "'");
    s.stage = stage == "fcn" ? Stage::kFcn : Stage::kCgan;
    s.step = header.at("step").get<std::int64_t>();
    s.config = TrainConfig::from_key_values(header.at("config").get<std::map<std::string, std::string>>());

    std::map<std::string, nn::ParamSet> sets;
    for (const auto& entry : header.at("arrays")) {
      const std::string name = entry.at("name").get<std::string>();
      const auto shape = entry.at("shape").get<std::vector<int>>();
      std::size_t count = 1;
      for (int d : shape) {
        if (d < 1) corrupt(path, "array '" + name + "' has a non-positive extent");
        count *= static_cast<std::size_t>(d);
      }
      if (count * 4 > bytes.size() - cursor) corrupt(path, "payload truncated at '" + name + "'");
      std::vector<float> values(count);
      for (std::size_t i = 0; i < count; ++i) {
        std::uint32_t u = 0;
        for (int k = 0; k < 4; ++k) u |= static_cast<std::uint32_t>(bytes[cursor + 4 * i + k]) << (8 * k);
        values[i] = std::bit_cast<float>(u);
      }
      cursor += count * 4;
      const auto split = name.rfind('/');
      if (split == std::string::npos) corrupt(path, "array name '" + name + "' lacks a group");
      sets[name.substr(0, split)].arrays().push_back({name.substr(split + 1), shape, std::move(values)});
    }
    if (cursor != bytes.size()) corrupt(path, "trailing bytes after the payload");

    auto take = [&](const std::string& group) {
      auto it = sets.find(group);
      if (it == sets.end()) corrupt(path, "missing array group '" + group + "'");
      return std::move(it->second);
    };
    auto load_net = [&](const std::string& role) {
      const json& h = header.at("nets").at(role);
      NetState n;
      n.kind = nn::network_kind_from_string(h.at("kind").get<std::string>());
      n.input_channels = h.at("input_channels").get<int>();
      n.input_size = h.at("input_size").get<int>();
      n.width_scale = h.at("width_scale").get<double>();
      n.params = take(role + "/params");
      n.adam.m = take(role + "/adam_m");
      n.adam.v = take(role + "/adam_v");
      n.adam.t = h.at("adam_t").get<std::int64_t>();
      const nn::ParamSet expected = nn::zero_params(n.graph());
      for (const nn::ParamSet* set : {&n.params, &n.adam.m, &n.adam.v}) {
        if (set->zeros_like() != expected) corrupt(path, role + " arrays do not match its architecture");
      }
      return n;
    };
    const json& nets = header.at("nets");
    s.generator = load_net("generator");
    if (nets.contains("discriminator")) s.discriminator = load_net("discriminator");
    if (nets.contains("tuned_fcn")) s.tuned_fcn = load_net("tuned_fcn");
    if (sets.contains("best")) s.best_params = take("best");
    if (s.stage == Stage::kCgan && !s.discriminator) corrupt(path, "cGAN checkpoint without a discriminator");

    for (const auto& row : header.at("history")) {
      s.history.push_back({row.at(0).get<std::int64_t>(), row.at(1).get<std::string>(), row.at(2).get<double>()});
    }
    const json& es = header.at("early_stop");
    s.best_val = es.at("best_val").is_null() ? std::numeric_limits<double>::infinity()
                                             : es.at("best_val").get<double>();
    s.evals_since_best = es.at("evals_since_best").get<int>();
    s.stopped_early = es.at("stopped_early").get<bool>();
  } catch (const json::exception& e) {
    corrupt(path, std::string("malformed header: ") + e.what());
  } catch (const Error& e) {
    if (e.code() == ErrorCode::kCorruptCheckpoint) throw;
    corrupt(path, e.what());
  }
  if (!s.generator.params.all_finite()) corrupt(path, "non-finite parameters");
  return s;
}

void write_loss_csv(std::span<const LossRecord> history, const std::filesystem::path& path) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream os(path, std::ios::trunc);
  require(static_cast<bool>(os), ErrorCode::kIoFailure, "cannot write " + path.string());
  os.precision(17);
  os << "step,loss_name,value\n";
  for (const auto& r : history) os << r.step << ',' << r.name << ',' << r.value << '\n';
  require(static_cast<bool>(os.flush()), ErrorCode::kIoFailure, "write failed for " + path.string());
}

}  // namespace vpet::train
