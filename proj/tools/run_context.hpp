#pragma once

#include <chrono>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace vpet::cli {

enum ExitCode : int { kExitOk = 0, kExitUsage = 2, kExitData = 3, kExitDivergence = 4 };

/// Bad flags, config keys or option values.
class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

using Options = std::map<std::string, std::string>;

/// `key = value` lines; '#' starts a comment. Keys use underscores.
Options read_config_file(const std::filesystem::path& path);

/// Hex SHA-256 of a file's bytes.
std::string sha256_file(const std::filesystem::path& path);

/// Resolved options of one command plus the inputs and artifacts it touched,
/// written out as `<out>/<command>.manifest.json`.
class RunContext {
 public:
  RunContext(std::string command, Options options);

  const std::string& command() const { return command_; }
  const Options& options() const { return options_; }

  std::string text(const std::string& key) const;
  bool has(const std::string& key) const;
  int integer(const std::string& key) const;
  double real(const std::string& key) const;
  std::uint64_t u64(const std::string& key) const;
  /// Required path option; records it as an input when `is_input`.
  std::filesystem::path path(const std::string& key, bool is_input = true);
  std::filesystem::path out_dir() const;

  void add_input(const std::filesystem::path& p);
  /// Registers an artifact; a `.mvol.json` sidecar also registers its raster.
  void add_output(const std::filesystem::path& p);

  /// Writes the manifest (status "ok" or "failed"). Returns its path, or
  /// nothing when no output directory was resolved.
  std::optional<std::filesystem::path> write_manifest(const std::string& status, const std::string& error = {}) const;

 private:
  std::string command_;
  Options options_;
  std::vector<std::filesystem::path> inputs_;
  std::vector<std::filesystem::path> outputs_;
  std::chrono::steady_clock::time_point start_;
  std::chrono::system_clock::time_point start_wall_;
};

}  // namespace vpet::cli
