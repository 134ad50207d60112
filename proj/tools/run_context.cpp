#include "run_context.hpp"

#include <openssl/evp.h>

#include <charconv>
#include <ctime>
#include <fstream>
#include <iomanip>
#include <memory>
#include <sstream>

#include <json.hpp>

namespace vpet::cli {

namespace fs = std::filesystem;

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

template <typename T>
T parse(const std::string& key, const std::string& text) {
  T value{};
  const char* end = text.data() + text.size();
  auto [ptr, ec] = std::from_chars(text.data(), end, value);
  if (ec != std::errc() || ptr != end) throw UsageError("option '" + key + "': cannot parse '" + text + "'");
  return value;
}

std::string iso_time(std::chrono::system_clock::time_point t) {
  const std::time_t tt = std::chrono::system_clock::to_time_t(t);
  std::tm tm{};
  gmtime_r(&tt, &tm);
  std::ostringstream os;
  os << std::put_time(&tm, "%Y-%m-%dT%H:%M:%SZ");
  return os.str();
}

}  // namespace

Options read_config_file(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw UsageError("cannot read config file " + path.string());
  Options out;
  std::string raw;
  int line = 0;
  while (std::getline(in, raw)) {
    ++line;
    const std::string text = trim(raw.substr(0, raw.find('#')));
    if (text.empty()) continue;
    const auto eq = text.find('=');
    if (eq == std::string::npos) {
      throw UsageError(path.string() + ":" + std::to_string(line) + ": expected 'key = value'");
    }
    std::string key = trim(text.substr(0, eq));
    for (char& c : key) c = c == '-' ? '_' : c;
    if (key.empty()) throw UsageError(path.string() + ":" + std::to_string(line) + ": empty key");
    out[key] = trim(text.substr(eq + 1));
  }
  return out;
}

std::string sha256_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read " + path.string() + " for hashing");
  std::unique_ptr<EVP_MD_CTX, decltype(&EVP_MD_CTX_free)> ctx(EVP_MD_CTX_new(), &EVP_MD_CTX_free);
  if (!ctx || EVP_DigestInit_ex(ctx.get(), EVP_sha256(), nullptr) != 1) throw std::runtime_error("SHA-256 init failed");
  std::vector<char> buf(1 << 16);
  while (in) {
    in.read(buf.data(), static_cast<std::streamsize>(buf.size()));
    if (in.gcount() > 0) EVP_DigestUpdate(ctx.get(), buf.data(), static_cast<std::size_t>(in.gcount()));
  }
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  EVP_DigestFinal_ex(ctx.get(), digest, &len);
  std::ostringstream os;
  for (unsigned int i = 0; i < len; ++i) os << std::hex << std::setw(2) << std::setfill('0') << int(digest[i]);
  return os.str();
}

RunContext::RunContext(std::string command, Options options)
    : command_(std::move(command)),
      options_(std::move(options)),
      start_(std::chrono::steady_clock::now()),
      start_wall_(std::chrono::system_clock::now()) {}

bool RunContext::has(const std::string& key) const {
  auto it = options_.find(key);
  return it != options_.end() && !it->second.empty();
}

std::string RunContext::text(const std::string& key) const {
  auto it = options_.find(key);
  return it == options_.end() ? std::string() : it->second;
}

int RunContext::integer(const std::string& key) const { return parse<int>(key, text(key)); }
double RunContext::real(const std::string& key) const { return parse<double>(key, text(key)); }
std::uint64_t RunContext::u64(const std::string& key) const { return parse<std::uint64_t>(key, text(key)); }

fs::path RunContext::path(const std::string& key, bool is_input) {
  if (!has(key)) throw UsageError("missing required option --" + [&] {
    std::string flag = key;
    for (char& c : flag) c = c == '_' ? '-' : c;
    return flag;
  }());
  fs::path p(text(key));
  if (is_input) add_input(p);
  return p;
}

fs::path RunContext::out_dir() const {
  if (!has("out")) throw UsageError("missing required option --out");
  return fs::path(text("out"));
}

void RunContext::add_input(const fs::path& p) { inputs_.push_back(p); }

void RunContext::add_output(const fs::path& p) {
  outputs_.push_back(p);
  const std::string s = p.string();
  if (s.ends_with(".mvol.json")) outputs_.push_back(s.substr(0, s.size() - 5) + ".raw");
}

std::optional<fs::path> RunContext::write_manifest(const std::string& status, const std::string& error) const {
  if (!has("out")) return std::nullopt;
  using nlohmann::json;
  json m;
  m["command"] = command_;
  m["status"] = status;
  if (!error.empty()) m["error"] = error;
  m["config"] = options_;
  m["seed"] = text("seed");
  json in = json::array();
  for (const auto& p : inputs_) in.push_back(p.generic_string());
  m["inputs"] = in;
  json out = json::array();
  for (const auto& p : outputs_) {
    json entry{{"path", p.generic_string()}};
    if (fs::is_regular_file(p)) {
      entry["sha256"] = sha256_file(p);
      entry["bytes"] = fs::file_size(p);
    }
    out.push_back(entry);
  }
  m["outputs"] = out;
  m["started_utc"] = iso_time(start_wall_);
  m["wall_clock_s"] = std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();

  const fs::path dir = out_dir();
  fs::create_directories(dir);
  const fs::path path = dir / (command_ + ".manifest.json");
  std::ofstream os(path, std::ios::trunc);
  os << m.dump(2) << '\n';
  return path;
}

}  // namespace vpet::cli
