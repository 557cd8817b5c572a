#include "app/manifest.hpp"

#include <openssl/evp.h>

#include <array>
#include <fstream>
#include <stdexcept>

namespace smrep::app {

Sha256::Sha256() : ctx_(EVP_MD_CTX_new()) {
  if (ctx_ == nullptr || EVP_DigestInit_ex(static_cast<EVP_MD_CTX*>(ctx_), EVP_sha256(), nullptr) != 1)
    throw std::runtime_error("cannot initialise SHA-256");
}

Sha256::~Sha256() { EVP_MD_CTX_free(static_cast<EVP_MD_CTX*>(ctx_)); }

void Sha256::update(const void* data, std::size_t size) {
  EVP_DigestUpdate(static_cast<EVP_MD_CTX*>(ctx_), data, size);
}

std::string Sha256::hex_digest() {
  std::array<unsigned char, EVP_MAX_MD_SIZE> md{};
  unsigned int len = 0;
  EVP_DigestFinal_ex(static_cast<EVP_MD_CTX*>(ctx_), md.data(), &len);
  static constexpr char kHex[] = "0123456789abcdef";
  std::string out;
  for (unsigned int i = 0; i < len; ++i) {
    out.push_back(kHex[md[i] >> 4]);
    out.push_back(kHex[md[i] & 0xF]);
  }
  return out;
}

std::string sha256_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read " + path.string());
  Sha256 h;
  std::array<char, 1 << 16> buf{};
  while (in) {
    in.read(buf.data(), buf.size());
    h.update(buf.data(), static_cast<std::size_t>(in.gcount()));
  }
  return h.hex_digest();
}

std::string sha256_string(std::string_view bytes) {
  Sha256 h;
  h.update(bytes);
  return h.hex_digest();
}

Manifest::Manifest(std::filesystem::path dir) : dir_(std::move(dir)) {
  const auto path = dir_ / "manifest.json";
  if (std::filesystem::exists(path)) {
    std::ifstream in(path);
    doc_ = nlohmann::json::parse(in, nullptr, false);
    if (doc_.is_discarded()) doc_ = nlohmann::json::object();
  }
  if (!doc_.is_object()) doc_ = nlohmann::json::object();
  doc_["software"] = {{"name", "smrep"}, {"version", std::string(kSoftwareVersion)}};
}

void Manifest::add_file(const std::filesystem::path& file) {
  const auto rel = std::filesystem::relative(file, dir_).generic_string();
  doc_["files"][rel] = sha256_file(file);
}

void Manifest::add_command(const std::string& name) {
  auto& cmds = doc_["commands"];
  if (!cmds.is_array()) cmds = nlohmann::json::array();
  cmds.push_back(name);
}

void Manifest::save() const {
  std::filesystem::create_directories(dir_);
  std::ofstream out(dir_ / "manifest.json");
  out << doc_.dump(2) << '\n';
  if (!out) throw std::runtime_error("cannot write manifest in " + dir_.string());
}

}  // namespace smrep::app
