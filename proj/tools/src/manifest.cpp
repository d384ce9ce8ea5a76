// SPDX-License-Identifier: Apache-2.0
#include "manifest.hpp"

#include <openssl/evp.h>

#include <cstdio>

#include "gatsv/binary_io.hpp"
#include "json.hpp"

namespace gatsv::cli {

std::string git_blob_sha1(std::string_view bytes) {
  const std::string header = "blob " + std::to_string(bytes.size()) + '\0';
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int length = 0;
  EVP_MD_CTX* ctx = EVP_MD_CTX_new();
  EVP_DigestInit_ex(ctx, EVP_sha1(), nullptr);
  EVP_DigestUpdate(ctx, header.data(), header.size());
  EVP_DigestUpdate(ctx, bytes.data(), bytes.size());
  EVP_DigestFinal_ex(ctx, digest, &length);
  EVP_MD_CTX_free(ctx);
  std::string hex;
  char buf[3];
  for (unsigned int i = 0; i < length; ++i) {
    std::snprintf(buf, sizeof buf, "%02x", digest[i]);
    hex += buf;
  }
  return hex;
}

std::string git_blob_sha1_file(const std::filesystem::path& path) {
  return git_blob_sha1(read_file_bytes(path));
}

Manifest::Manifest(std::string command) : command_(std::move(command)) {}

void Manifest::set(const std::string& key, const std::string& value) { strings_[key] = value; }
void Manifest::set(const std::string& key, double value) { reals_[key] = value; }
void Manifest::set(const std::string& key, std::uint64_t value) { integers_[key] = value; }
void Manifest::set(const std::string& key, bool value) { flags_[key] = value; }

void Manifest::add_input(const std::filesystem::path& path) {
  inputs_.emplace_back(path.string(), git_blob_sha1_file(path));
}

void Manifest::add_output(const std::filesystem::path& path) { outputs_.push_back(path.string()); }

void Manifest::add_timing(const std::string& phase, double seconds) {
  timings_.emplace_back(phase, seconds);
}

std::string Manifest::to_json() const {
  nlohmann::ordered_json j;
  j["command"] = command_;
  nlohmann::ordered_json config = nlohmann::ordered_json::object();
  for (const auto& [k, v] : strings_) config[k] = v;
  for (const auto& [k, v] : reals_) config[k] = v;
  for (const auto& [k, v] : integers_) config[k] = v;
  for (const auto& [k, v] : flags_) config[k] = v;
  j["config"] = config;
  if (has_seed_) j["seed"] = seed_;
  j["inputs"] = nlohmann::ordered_json::array();
  for (const auto& [path, hash] : inputs_) j["inputs"].push_back({{"path", path}, {"sha1", hash}});
  j["outputs"] = outputs_;
  nlohmann::ordered_json timings = nlohmann::ordered_json::object();
  for (const auto& [phase, s] : timings_) timings[phase] = s;
  j["timings_seconds"] = timings;
  return j.dump(2) + "\n";
}

void Manifest::write(const std::filesystem::path& path) const {
  write_file_bytes(path, to_json());
}

}  // namespace gatsv::cli
