#pragma once

#include <atomic>
#include <condition_variable>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <limits>
#include <map>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include "bhchaos/eigenstate_stats.hpp"
#include "bhchaos/hamiltonian.hpp"
#include "bhchaos/job_config.hpp"
#include "bhchaos/spectrum.hpp"

namespace bhchaos {

// Bumped whenever a cached quantity would change meaning.
inline constexpr const char* kProtocolVersion = "bhchaos-protocol-1";
// Identifier of the basis enumeration order (descending lexicographic).
inline constexpr const char* kBasisOrdering = "desc-lex-v1";

// ---------------------------------------------------------------- cache

struct CacheRecord {
  std::map<std::string, std::vector<double>> arrays;
  std::map<std::string, std::string> text;  // single-line values
};

// SHA-256 over the protocol version, basis ordering, model parameters and a
// task description (solver settings, window, q grid, ...).
std::string cache_key(const ModelParams& params, const std::string& task);

// Directory of checksummed text records; doubles are stored as hex floats so
// a hit reproduces the computed bits. A disabled cache stores nothing.
class Cache {
 public:
  Cache() = default;
  explicit Cache(std::filesystem::path dir);

  bool enabled() const { return dir_.has_value(); }
  const std::optional<std::filesystem::path>& dir() const { return dir_; }
  std::filesystem::path path_for(const std::string& key) const;

  // nullopt on a miss. A record failing its checksum or parse is reported in
  // `problem` and treated as a miss.
  std::optional<CacheRecord> load(const std::string& key, std::string* problem = nullptr) const;
  void store(const std::string& key, const CacheRecord& record) const;

  std::size_t hits() const { return hits_; }
  std::size_t misses() const { return misses_; }
  std::size_t corrupt() const { return corrupt_; }

 private:
  std::optional<std::filesystem::path> dir_;
  mutable std::atomic<std::size_t> hits_{0};
  mutable std::atomic<std::size_t> misses_{0};
  mutable std::atomic<std::size_t> corrupt_{0};
};

std::string serialize(const CacheRecord& record, const std::string& key);
// Throws Error on malformed input or checksum mismatch.
CacheRecord deserialize(const std::string& text, const std::string& key);

// Serves `key` from the cache or computes and stores it. Corrupt entries are
// recomputed and a warning is appended.
CacheRecord load_or_compute(const Cache& cache, const std::string& key,
                            const std::function<CacheRecord()>& compute,
                            std::vector<std::string>& warnings, bool* hit = nullptr);

// ---------------------------------------------------------------- engine

// Limits the estimated memory of concurrently running solves. A single
// request larger than the whole budget is refused.
class MemoryBudget {
 public:
  explicit MemoryBudget(double bytes) : capacity_(bytes) {}

  class Lease {
   public:
    Lease(MemoryBudget* owner, double bytes) : owner_(owner), bytes_(bytes) {}
    Lease(Lease&& o) noexcept : owner_(o.owner_), bytes_(o.bytes_) { o.owner_ = nullptr; }
    Lease(const Lease&) = delete;
    Lease& operator=(const Lease&) = delete;
    Lease& operator=(Lease&&) = delete;
    ~Lease();

   private:
    MemoryBudget* owner_;
    double bytes_;
  };

  Lease acquire(double bytes, const std::string& what);
  double capacity() const { return capacity_; }

 private:
  double capacity_;
  double in_use_ = 0.0;
  std::mutex mutex_;
  std::condition_variable cv_;
};

struct EngineOptions {
  unsigned threads = 1;
  std::size_t max_dimension = 200000;
  double memory_budget_mb = 2048.0;
  std::optional<std::filesystem::path> cache_dir;
  WindowMethod window_method = WindowMethod::automatic;
  std::size_t dense_threshold = 4000;
  double residual_tolerance = 1e-9;
};

EngineOptions engine_options(const JobConfig& config,
                             std::optional<std::filesystem::path> cache_dir = std::nullopt);

class Engine {
 public:
  explicit Engine(EngineOptions options = {});

  const EngineOptions& options() const { return options_; }
  const Cache& cache() const { return cache_; }
  MemoryBudget& budget() { return budget_; }

  // Throws CapacityError past the configured sector dimension.
  void check_capacity(const SystemPoint& p) const;

  void warn(const std::string& message);
  std::vector<std::string> warnings() const;

 private:
  EngineOptions options_;
  Cache cache_;
  MemoryBudget budget_;
  mutable std::mutex log_mutex_;
  std::vector<std::string> warnings_;
};

// ---------------------------------------------------------------- windows

struct WindowRequest {
  double target_eps = 0.5;
  std::size_t count = 100;
  std::vector<double> q_grid = {0.5, 1.0, 2.0};
};

// Eigenvalues and fractal dimensions of one eigenvector window; eigenvectors
// themselves are not retained.
struct WindowResult {
  SystemPoint point;
  double eta = 0.0;
  std::size_t dimension = 0;
  std::vector<double> eigenvalues;
  std::vector<double> eps;
  std::vector<double> q;
  std::vector<std::vector<double>> d;  // d[k][state]
  double e_min = 0.0;
  double e_max = 0.0;
  std::int64_t first_index = -1;  // -1 when unknown
  double max_residual = 0.0;
  std::string solver;
  std::vector<std::string> warnings;
  bool from_cache = false;

  const std::vector<double>& d_for(double q) const;
  const std::vector<double>& d1() const { return d_for(1.0); }
  std::vector<StateId> state_ids() const;
};

// Window of `count` states closest to target_eps at the given eta (U = 1,
// J = eta N, odd sector). A count above the dimension is clamped with a
// warning.
WindowResult compute_window(const SystemPoint& point, double eta, const WindowRequest& request,
                            Engine& engine);

// ---------------------------------------------------------------- phase grid

struct PhaseCell {
  std::size_t levels = 0;
  bool masked = true;
  std::size_t r_count = 0;
  double mean_r = std::numeric_limits<double>::quiet_NaN();
  double kl_goe = std::numeric_limits<double>::quiet_NaN();
  double mean_d1 = std::numeric_limits<double>::quiet_NaN();
  double var_d1 = std::numeric_limits<double>::quiet_NaN();
};

struct PhaseColumn {
  double eta = 0.0;
  double e_min = 0.0;
  double e_max = 0.0;
  bool vectors = false;
  std::vector<PhaseCell> cells;  // one per eps bin
  std::string error;             // non-empty when the solve failed
};

struct PhaseGridSpec {
  std::vector<double> etas;
  std::size_t eps_bins = 100;
  std::size_t min_levels = 10;
  std::size_t r_bins = 50;
  std::vector<double> vector_etas;
};

PhaseGridSpec phase_grid_spec(const JobConfig& config);

struct PhaseGrid {
  SystemPoint point;
  std::size_t dimension = 0;
  PhaseGridSpec spec;
  std::vector<PhaseColumn> columns;  // one per eta, in grid order

  double eps_lo(std::size_t bin) const;
  double eps_hi(std::size_t bin) const;
};

// Full solve per eta, levels binned in scaled energy. r values use spacings
// inside a bin only; bins with fewer than min_levels levels are masked.
// Solver failures are recorded per column.
PhaseGrid phase_diagram(const SystemPoint& point, const PhaseGridSpec& spec, Engine& engine);

// ---------------------------------------------------------------- trajectories

struct TrajectorySpec {
  std::optional<TrajectoryKind> kind;
  std::optional<double> value;
  std::vector<SystemPoint> points;
  WindowSpec chaos{0.5, 100, {0.23, 0.24, 0.25, 0.26, 0.27}};
  WindowSpec reference{0.5, 100, {20.0}};
  ReferenceSmoothing smoothing = ReferenceSmoothing::none;
  std::vector<double> q_grid = {0.5, 1.0, 2.0};
  std::size_t goe_samples = 2000;
  std::size_t kl_bins = 50;
  std::uint64_t seed = 20240601;
};

TrajectorySpec trajectory_spec(const JobConfig& config);

struct PointReport {
  SystemPoint point;
  std::size_t dimension = 0;
  WindowStats chaos;
  WindowStats reference;
  // Reference variance at (L, N + 1) and the geometric mean with the raw one;
  // only with parity_pair smoothing.
  std::optional<double> reference_pair_var;
  std::optional<double> reference_var_smoothed;
  WindowStats goe;
  std::uint64_t goe_seed = 0;
  double goe_mean_truncated = 0.0;

  double ratio_reference = 0.0;           // chaos var / reference var
  std::optional<double> ratio_reference_smoothed;
  double ratio_goe = 0.0;                 // chaos var / GOE pool var
  double delta1 = 0.0;                    // truncated GOE mean - chaos mean
  double delta1_log = 0.0;                // delta1 ln N
  std::optional<double> kl_goe;           // KL(P(D1) chaos, Gaussian fit of GOE pool)

  // Raw inputs of the derived quantities.
  std::vector<WindowResult> chaos_windows;  // one per chaos eta
  std::optional<WindowResult> reference_window;
  std::optional<WindowResult> pair_window;  // (L, N + 1) reference
  std::vector<double> goe_d1;

  // Pooled chaos-centre D1 in (eta, energy) order.
  std::vector<double> chaos_d1() const;

  std::vector<std::string> warnings;
  std::string error;

  bool ok() const { return error.empty(); }
};

struct TrajectoryReport {
  TrajectorySpec spec;
  std::vector<PointReport> points;
};

// Collects the chaos, reference and GOE statistics of every point.
// Failures are recorded per point.
TrajectoryReport run_trajectory(const TrajectorySpec& spec, Engine& engine);

// Fills every statistic and ratio from the raw windows and GOE samples.
void derive_point(PointReport& report, std::size_t kl_bins);

// ---------------------------------------------------------------- output

// Comma-separated, header row, '.' decimal, LF endings, %.17g numbers,
// "nan" for undefined values.
void write_grid_csv(const PhaseGrid& grid, const std::filesystem::path& path);
void write_trajectory_csv(const TrajectoryReport& report, const std::filesystem::path& path);
// One row per raw window: point, role, eta, samples, mean and variance of D1.
void write_windows_csv(const TrajectoryReport& report, const std::filesystem::path& path);
// One row per (state, q): system, eta, index, eps, q, D_q.
void write_gfd_csv(const std::vector<WindowResult>& windows, const std::filesystem::path& path);

std::string format_double(double v);

}  // namespace bhchaos
