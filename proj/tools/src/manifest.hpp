// SPDX-License-Identifier: Apache-2.0
//
// Run manifests: one JSON file per command invocation recording the flags,
// seed, content hashes of inputs and the outputs written.

#pragma once

#include <chrono>
#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

namespace gatsv::cli {

// Hex SHA-1 of "blob <size>\0<bytes>", as `git hash-object` prints it.
std::string git_blob_sha1(std::string_view bytes);
std::string git_blob_sha1_file(const std::filesystem::path& path);

class Manifest {
 public:
  explicit Manifest(std::string command);

  void set(const std::string& key, const std::string& value);
  void set(const std::string& key, double value);
  void set(const std::string& key, std::uint64_t value);
  void set(const std::string& key, bool value);
  void set_seed(std::uint64_t seed) { seed_ = seed; has_seed_ = true; }
  void add_input(const std::filesystem::path& path);
  void add_output(const std::filesystem::path& path);
  void add_timing(const std::string& phase, double seconds);

  std::string to_json() const;
  void write(const std::filesystem::path& path) const;

 private:
  std::string command_;
  std::map<std::string, std::string> strings_;
  std::map<std::string, double> reals_;
  std::map<std::string, std::uint64_t> integers_;
  std::map<std::string, bool> flags_;
  std::vector<std::pair<std::string, std::string>> inputs_;
  std::vector<std::string> outputs_;
  std::vector<std::pair<std::string, double>> timings_;
  std::uint64_t seed_ = 0;
  bool has_seed_ = false;
};

class Stopwatch {
 public:
  Stopwatch() : start_(std::chrono::steady_clock::now()) {}
  double seconds() const {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
  }

 private:
  std::chrono::steady_clock::time_point start_;
};

}  // namespace gatsv::cli
