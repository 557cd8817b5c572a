#pragma once

#include <filesystem>
#include <string>
#include <string_view>

#include <json.hpp>

namespace smrep::app {

inline constexpr std::string_view kSoftwareVersion = "0.1.0";

/// Streaming SHA-256 (OpenSSL EVP), hex-encoded.
class Sha256 {
 public:
  Sha256();
  ~Sha256();
  Sha256(const Sha256&) = delete;
  Sha256& operator=(const Sha256&) = delete;

  void update(const void* data, std::size_t size);
  void update(std::string_view text) { update(text.data(), text.size()); }
  std::string hex_digest();

 private:
  void* ctx_;
};

std::string sha256_file(const std::filesystem::path& path);
std::string sha256_string(std::string_view bytes);

/// manifest.json in an output directory. Loading an existing manifest lets later
/// commands (train after generate, ...) add to it.
class Manifest {
 public:
  explicit Manifest(std::filesystem::path dir);

  /// Records a produced file and its digest; path is stored relative to the directory.
  void add_file(const std::filesystem::path& file);
  void set(const std::string& key, nlohmann::json value) { doc_[key] = std::move(value); }
  void add_timing(const std::string& stage, double seconds) { doc_["timings_seconds"][stage] = seconds; }
  void add_command(const std::string& name);
  const nlohmann::json& json() const { return doc_; }
  void save() const;

 private:
  std::filesystem::path dir_;
  nlohmann::json doc_;
};

}  // namespace smrep::app
