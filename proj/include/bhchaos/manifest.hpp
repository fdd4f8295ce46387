#pragma once

#include <cstdint>
#include <filesystem>
#include <memory>
#include <string>
#include <vector>

#include "bhchaos/job_config.hpp"

namespace bhchaos {

inline constexpr const char* kToolVersion = "0.1.0";

// Record of one CLI run: inputs, defaults, outputs with checksums, timings.
class RunManifest {
 public:
  explicit RunManifest(std::string command);
  ~RunManifest();
  RunManifest(RunManifest&&) noexcept;
  RunManifest& operator=(RunManifest&&) noexcept;

  void set_config(const JobConfig& config);
  void set_argument(const std::string& key, const std::string& value);
  void add_seed(const std::string& name, std::uint64_t seed);
  void add_timing(const std::string& name, double seconds);
  void add_note(const std::string& note);
  void add_warning(const std::string& warning);
  // Hashes the file now; throws if it does not exist.
  void add_output(const std::filesystem::path& path);
  void set_failure(const std::string& error);

  bool ok() const;
  const std::vector<std::filesystem::path>& outputs() const;
  // Re-hashes every listed output and compares with the recorded digest.
  bool verify_outputs() const;

  std::string json() const;
  void write(const std::filesystem::path& path) const;

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

}  // namespace bhchaos
