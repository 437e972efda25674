#include "config.hpp"

#include "chfkit/csv.hpp"

#include <openssl/evp.h>

#include <json.hpp>

#include <charconv>
#include <cstdio>

namespace chfkit::cli {

std::string sha256_hex(std::string_view bytes) {
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (EVP_Digest(bytes.data(), bytes.size(), digest, &len, EVP_sha256(), nullptr) != 1) {
    throw std::runtime_error("SHA-256 failed");
  }
  std::string hex;
  char buf[3];
  for (unsigned int k = 0; k < len; ++k) {
    std::snprintf(buf, sizeof buf, "%02x", digest[k]);
    hex += buf;
  }
  return hex;
}

std::string sha256_file(const std::filesystem::path& path) { return sha256_hex(csv::read_file(path.string())); }

Manifest::Manifest(std::string command, std::string resolved_config)
    : command_(std::move(command)), config_(std::move(resolved_config)) {}

void Manifest::write_output(const std::filesystem::path& path, std::string_view contents) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  csv::write_file(path.string(), contents);
  outputs_.emplace_back(path.generic_string(), sha256_hex(contents));
}

void Manifest::add_output(const std::filesystem::path& path) {
  outputs_.emplace_back(path.generic_string(), sha256_file(path));
}

void Manifest::set(const std::string& key, double value) { numbers_.emplace_back(key, value); }
void Manifest::set(const std::string& key, const std::string& value) { text_.emplace_back(key, value); }

void Manifest::save(const std::filesystem::path& path) const {
  nlohmann::ordered_json j;
  j["tool"] = "chfkit";
  j["command"] = command_;
  j["config"] = config_;
  auto& outs = j["outputs"] = nlohmann::ordered_json::array();
  for (const auto& [p, h] : outputs_) outs.push_back({{"path", p}, {"sha256", h}});
  auto& stats = j["summary"] = nlohmann::ordered_json::object();
  for (const auto& [k, v] : text_) stats[k] = v;
  for (const auto& [k, v] : numbers_) stats[k] = v;
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  csv::write_file(path.string(), j.dump(2) + "\n");
}

std::vector<std::size_t> parse_widths(const std::string& text) {
  std::vector<std::size_t> out;
  std::size_t start = 0;
  while (start <= text.size()) {
    auto comma = text.find(',', start);
    if (comma == std::string::npos) comma = text.size();
    auto tok = std::string_view(text).substr(start, comma - start);
    while (!tok.empty() && tok.front() == ' ') tok.remove_prefix(1);
    while (!tok.empty() && tok.back() == ' ') tok.remove_suffix(1);
    std::size_t v = 0;
    auto res = std::from_chars(tok.data(), tok.data() + tok.size(), v);
    if (tok.empty() || res.ec != std::errc() || res.ptr != tok.data() + tok.size() || v == 0) {
      throw ConfigError("invalid layer width list '" + text + "'");
    }
    out.push_back(v);
    start = comma + 1;
  }
  return out;
}

} // namespace chfkit::cli
