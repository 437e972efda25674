#pragma once

// Shared CLI plumbing: run manifests with SHA-256 output hashes, exit
// codes, and small parsing helpers.

#include <filesystem>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace chfkit::cli {

enum ExitCode : int {
  kOk = 0,
  kIoError = 1,
  kConfigError = 2,
  kTrainingDiverged = 3,
};

/// Raised for invalid or inconsistent options; maps to kConfigError.
class ConfigError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

std::string sha256_hex(std::string_view bytes);
std::string sha256_file(const std::filesystem::path& path);

/// Collects outputs and statistics of one command run and writes
/// manifest.json next to them.
class Manifest {
public:
  Manifest(std::string command, std::string resolved_config);

  /// Writes the file and records its hash.
  void write_output(const std::filesystem::path& path, std::string_view contents);
  void add_output(const std::filesystem::path& path);
  void set(const std::string& key, double value);
  void set(const std::string& key, const std::string& value);

  void save(const std::filesystem::path& path) const;

private:
  std::string command_;
  std::string config_;
  std::vector<std::pair<std::string, std::string>> outputs_; // path, sha256
  std::vector<std::pair<std::string, std::string>> text_;
  std::vector<std::pair<std::string, double>> numbers_;
};

/// "44,64,41" -> {44, 64, 41}; throws ConfigError.
std::vector<std::size_t> parse_widths(const std::string& text);

} // namespace chfkit::cli
