#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "bhchaos/spectrum.hpp"

namespace bhchaos {

struct SystemPoint {
  int sites = 0;
  int particles = 0;

  std::string tag() const;  // "L5N17"
  friend bool operator==(const SystemPoint&, const SystemPoint&) = default;
};

enum class TrajectoryKind { fixed_L, fixed_N, fixed_n };

std::string to_string(TrajectoryKind k);
TrajectoryKind parse_trajectory_kind(const std::string& text);

// How the eta = 20 reference variance enters trajectory ratios.
enum class ReferenceSmoothing {
  none,
  // Geometric mean of the reference variances at (L, N) and (L, N + 1).
  parity_pair,
};

std::string to_string(ReferenceSmoothing s);
ReferenceSmoothing parse_reference_smoothing(const std::string& text);

struct EtaGrid {
  double min = 1e-2;
  double max = 1e2;
  std::size_t points = 64;

  // Log-spaced values, endpoints included.
  std::vector<double> values() const;
};

// Parsed job specification. Field defaults are the documented defaults.
struct JobConfig {
  std::string label = "run";
  std::vector<SystemPoint> systems;

  std::optional<TrajectoryKind> trajectory_kind;
  std::optional<double> trajectory_value;

  EtaGrid eta_grid;
  std::size_t eps_bins = 100;
  std::size_t min_levels = 10;
  std::size_t r_bins = 50;
  std::vector<double> vector_etas;

  double window_eps = 0.5;
  std::size_t window_count = 100;
  std::vector<double> chaos_etas = {0.23, 0.24, 0.25, 0.26, 0.27};
  double reference_eta = 20.0;
  ReferenceSmoothing reference_smoothing = ReferenceSmoothing::none;

  std::vector<double> q_grid = {0.5, 1.0, 2.0};
  std::size_t goe_samples = 2000;
  std::size_t goe_dimension = 0;  // goe-pool only
  std::size_t kl_bins = 50;

  std::uint64_t seed = 20240601;
  unsigned threads = 1;
  std::size_t max_dimension = 200000;
  double memory_budget_mb = 2048.0;

  WindowMethod window_method = WindowMethod::automatic;
  std::size_t dense_threshold = 4000;
  double residual_tolerance = 1e-9;

  // Canonical "key = value" lines, schema order; stable across runs and the
  // input to config_digest.
  std::vector<std::pair<std::string, std::string>> canonical() const;
  std::string canonical_text() const;
  std::string digest() const;
};

// Parses "key = value" lines; '#' starts a comment. Errors carry the source
// name and line number.
JobConfig parse_config(std::string_view text, const std::string& source = "<config>");
JobConfig load_config(const std::filesystem::path& path);

// Applies one "key = value" pair on top of an existing config.
void set_config_value(JobConfig& config, const std::string& key, const std::string& value);

struct SchemaEntry {
  const char* key;
  const char* type;
  const char* description;
};

const std::vector<SchemaEntry>& config_schema();
// Human-readable schema with defaults.
std::string schema_text();

// Throws ConfigError if the systems do not lie on the declared trajectory.
void check_trajectory(const JobConfig& config);

}  // namespace bhchaos
