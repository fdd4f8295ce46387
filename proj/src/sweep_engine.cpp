#include "bhchaos/sweep_engine.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <thread>

#include "bhchaos/errors.hpp"
#include "bhchaos/goe_baseline.hpp"
#include "bhchaos/spectral_stats.hpp"
#include "bhchaos/util/digest.hpp"
#include "bhchaos/util/parallel.hpp"
#include "bhchaos/util/rng.hpp"

namespace bhchaos {

namespace {

constexpr const char* kCacheMagic = "bhchaos-cache-v1";

std::string hexfloat(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%a", v);
  return buf;
}

std::string escape_line(const std::string& s) {
  std::string out;
  for (char c : s) {
    if (c == '\\') out += "\\\\";
    else if (c == '\n') out += "\\n";
    else out += c;
  }
  return out;
}

std::string unescape_line(const std::string& s) {
  std::string out;
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (s[i] == '\\' && i + 1 < s.size()) {
      out += s[i + 1] == 'n' ? '\n' : s[i + 1];
      ++i;
    } else {
      out += s[i];
    }
  }
  return out;
}

std::string join(const std::vector<std::string>& items, const char* sep) {
  std::string out;
  for (std::size_t i = 0; i < items.size(); ++i) out += (i ? sep : "") + items[i];
  return out;
}

std::vector<std::string> split(const std::string& s, const std::string& sep) {
  std::vector<std::string> out;
  if (s.empty()) return out;
  std::size_t pos = 0;
  while (true) {
    const auto next = s.find(sep, pos);
    out.push_back(s.substr(pos, next - pos));
    if (next == std::string::npos) break;
    pos = next + sep.size();
  }
  return out;
}

std::size_t sector_dimension(const SystemPoint& p) {
  const BigInt d = dim_sector(p.sites, p.particles, Parity::odd);
  if (d > BigInt(std::numeric_limits<std::int64_t>::max())) return std::numeric_limits<std::size_t>::max();
  return static_cast<std::size_t>(d.convert_to<std::int64_t>());
}

double scalar(const CacheRecord& r, const std::string& name) {
  const auto it = r.arrays.find(name);
  if (it == r.arrays.end() || it->second.size() != 1) throw Error("cache record lacks scalar " + name);
  return it->second[0];
}

const std::vector<double>& array(const CacheRecord& r, const std::string& name) {
  const auto it = r.arrays.find(name);
  if (it == r.arrays.end()) throw Error("cache record lacks array " + name);
  return it->second;
}

std::string text(const CacheRecord& r, const std::string& name) {
  const auto it = r.text.find(name);
  return it == r.text.end() ? std::string() : it->second;
}

bool same_eta(double a, double b) { return std::abs(a - b) <= 1e-12 * std::max(std::abs(a), std::abs(b)); }

std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

std::ofstream open_csv(const std::filesystem::path& path) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write " + path.string());
  return out;
}

std::string opt(const std::optional<double>& v) {
  return format_double(v ? *v : std::numeric_limits<double>::quiet_NaN());
}

}  // namespace

std::string format_double(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

// ---------------------------------------------------------------- cache

std::string cache_key(const ModelParams& params, const std::string& task) {
  util::Sha256 h;
  h.update(kProtocolVersion).update("\n").update(kBasisOrdering).update("\n");
  std::ostringstream p;
  p << "L=" << params.sites << " N=" << params.particles << " J=" << hexfloat(params.tunneling)
    << " U=" << hexfloat(params.interaction)
    << " parity=" << (params.parity ? to_string(*params.parity) : std::string("none")) << "\n";
  h.update(p.str()).update(task);
  return h.hex();
}

std::string serialize(const CacheRecord& record, const std::string& key) {
  std::string body = std::string(kCacheMagic) + "\nkey " + key + "\n";
  for (const auto& [name, value] : record.text) body += "text " + name + " " + escape_line(value) + "\n";
  for (const auto& [name, values] : record.arrays) {
    body += "array " + name + " " + std::to_string(values.size());
    for (double v : values) body += " " + hexfloat(v);
    body += "\n";
  }
  return body + "checksum " + util::sha256_hex(body) + "\n";
}

CacheRecord deserialize(const std::string& content, const std::string& key) {
  const auto mark = content.rfind("checksum ");
  if (mark == std::string::npos) throw Error("cache record has no checksum");
  const std::string body = content.substr(0, mark);
  std::string stored = content.substr(mark + 9);
  while (!stored.empty() && (stored.back() == '\n' || stored.back() == '\r')) stored.pop_back();
  if (util::sha256_hex(body) != stored) throw Error("cache checksum mismatch");

  std::istringstream in(body);
  std::string line;
  if (!std::getline(in, line) || line != kCacheMagic) throw Error("cache record has a bad header");
  if (!std::getline(in, line) || line != "key " + key) throw Error("cache record key mismatch");
  CacheRecord rec;
  while (std::getline(in, line)) {
    if (line.rfind("text ", 0) == 0) {
      const auto sp = line.find(' ', 5);
      if (sp == std::string::npos) throw Error("malformed cache text line");
      rec.text[line.substr(5, sp - 5)] = unescape_line(line.substr(sp + 1));
    } else if (line.rfind("array ", 0) == 0) {
      std::istringstream fields(line.substr(6));
      std::string name;
      std::size_t n = 0;
      if (!(fields >> name >> n)) throw Error("malformed cache array line");
      std::vector<double> values(n);
      std::string token;
      for (std::size_t i = 0; i < n; ++i) {
        if (!(fields >> token)) throw Error("truncated cache array " + name);
        char* end = nullptr;
        values[i] = std::strtod(token.c_str(), &end);
        if (end != token.c_str() + token.size()) throw Error("bad number in cache array " + name);
      }
      rec.arrays[name] = std::move(values);
    } else if (!line.empty()) {
      throw Error("unexpected cache line");
    }
  }
  return rec;
}

Cache::Cache(std::filesystem::path dir) : dir_(std::move(dir)) {}

std::filesystem::path Cache::path_for(const std::string& key) const {
  if (!dir_) throw Error("cache is disabled");
  return *dir_ / key.substr(0, 2) / (key + ".rec");
}

std::optional<CacheRecord> Cache::load(const std::string& key, std::string* problem) const {
  if (!dir_) return std::nullopt;
  const auto path = path_for(key);
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    ++misses_;
    return std::nullopt;
  }
  std::ostringstream buf;
  buf << in.rdbuf();
  try {
    CacheRecord rec = deserialize(buf.str(), key);
    ++hits_;
    return rec;
  } catch (const Error& e) {
    ++corrupt_;
    ++misses_;
    if (problem) *problem = path.string() + ": " + e.what();
    return std::nullopt;
  }
}

void Cache::store(const std::string& key, const CacheRecord& record) const {
  if (!dir_) return;
  const auto path = path_for(key);
  std::filesystem::create_directories(path.parent_path());
  const auto tid = std::hash<std::thread::id>{}(std::this_thread::get_id());
  auto tmp = path;
  tmp += ".tmp" + std::to_string(tid);
  {
    std::ofstream out(tmp, std::ios::binary);
    if (!out) throw Error("cannot write cache file " + tmp.string());
    out << serialize(record, key);
    if (!out) throw Error("cannot write cache file " + tmp.string());
  }
  std::filesystem::rename(tmp, path);
}

CacheRecord load_or_compute(const Cache& cache, const std::string& key,
                            const std::function<CacheRecord()>& compute,
                            std::vector<std::string>& warnings, bool* hit) {
  std::string problem;
  if (auto rec = cache.load(key, &problem)) {
    if (hit) *hit = true;
    return *rec;
  }
  if (!problem.empty()) warnings.push_back("corrupt cache entry recomputed: " + problem);
  if (hit) *hit = false;
  CacheRecord rec = compute();
  cache.store(key, rec);
  return rec;
}

// ---------------------------------------------------------------- engine

MemoryBudget::Lease::~Lease() {
  if (!owner_) return;
  {
    std::lock_guard lock(owner_->mutex_);
    owner_->in_use_ -= bytes_;
  }
  owner_->cv_.notify_all();
}

MemoryBudget::Lease MemoryBudget::acquire(double bytes, const std::string& what) {
  if (bytes > capacity_)
    throw CapacityError(what + " needs an estimated " + std::to_string(static_cast<long long>(bytes / 1048576)) +
                        " MB, above the memory budget of " +
                        std::to_string(static_cast<long long>(capacity_ / 1048576)) + " MB");
  std::unique_lock lock(mutex_);
  cv_.wait(lock, [&] { return in_use_ + bytes <= capacity_; });
  in_use_ += bytes;
  return Lease(this, bytes);
}

EngineOptions engine_options(const JobConfig& config, std::optional<std::filesystem::path> cache_dir) {
  EngineOptions o;
  o.threads = config.threads == 0 ? util::default_threads() : config.threads;
  o.max_dimension = config.max_dimension;
  o.memory_budget_mb = config.memory_budget_mb;
  o.cache_dir = std::move(cache_dir);
  o.window_method = config.window_method;
  o.dense_threshold = config.dense_threshold;
  o.residual_tolerance = config.residual_tolerance;
  return o;
}

Engine::Engine(EngineOptions options)
    : options_(std::move(options)),
      cache_(options_.cache_dir ? Cache(*options_.cache_dir) : Cache()),
      budget_(options_.memory_budget_mb * 1048576.0) {
  if (options_.threads == 0) options_.threads = util::default_threads();
}

void Engine::check_capacity(const SystemPoint& p) const {
  if (p.sites < 1 || p.particles < 0) throw DomainError("system " + p.tag() + " is not valid");
  const std::size_t dim = sector_dimension(p);
  if (dim > options_.max_dimension)
    throw CapacityError("system " + p.tag() + " has sector dimension " + std::to_string(dim) +
                        ", above the cap " + std::to_string(options_.max_dimension));
}

void Engine::warn(const std::string& message) {
  std::lock_guard lock(log_mutex_);
  warnings_.push_back(message);
}

std::vector<std::string> Engine::warnings() const {
  std::lock_guard lock(log_mutex_);
  return warnings_;
}

// ---------------------------------------------------------------- windows

const std::vector<double>& WindowResult::d_for(double value) const {
  for (std::size_t k = 0; k < q.size(); ++k)
    if (std::abs(q[k] - value) < 1e-12) return d[k];
  throw DomainError("q = " + format_double(value) + " was not computed for this window");
}

std::vector<StateId> WindowResult::state_ids() const {
  std::vector<StateId> ids(eigenvalues.size());
  for (std::size_t i = 0; i < ids.size(); ++i) {
    ids[i].system = point.tag();
    ids[i].eta = eta;
    ids[i].index = first_index < 0 ? -1 : first_index + static_cast<std::int64_t>(i);
    ids[i].eps = eps[i];
  }
  return ids;
}

WindowResult compute_window(const SystemPoint& point, double eta_value, const WindowRequest& request,
                            Engine& engine) {
  engine.check_capacity(point);
  const std::size_t dim = sector_dimension(point);
  if (dim == 0) throw DegenerateError("system " + point.tag() + " has an empty odd sector");
  if (request.q_grid.empty()) throw DomainError("window needs at least one q");

  WindowResult out;
  out.point = point;
  out.eta = eta_value;
  out.dimension = dim;
  out.q = request.q_grid;

  std::size_t count = request.count;
  if (count > dim) {
    out.warnings.push_back("window of " + std::to_string(count) + " states clamped to the dimension " +
                           std::to_string(dim) + " of " + point.tag());
    count = dim;
  }

  const EngineOptions& eo = engine.options();
  const ModelParams params = params_from_eta(point.sites, point.particles, eta_value);
  std::ostringstream task;
  task << "window eps=" << hexfloat(request.target_eps) << " count=" << count << " q=";
  for (double q : request.q_grid) task << hexfloat(q) << ";";
  task << " method=" << to_string(eo.window_method) << " dense_threshold=" << eo.dense_threshold
       << " tol=" << hexfloat(eo.residual_tolerance);
  const std::string key = cache_key(params, task.str());

  auto compute = [&]() -> CacheRecord {
    const double n = static_cast<double>(dim);
    const bool dense = eo.window_method == WindowMethod::dense ||
                       (eo.window_method == WindowMethod::automatic &&
                        (dim <= eo.dense_threshold || 3 * count >= dim));
    // Dense: matrix, eigenvectors and workspace. Sparse: Krylov basis plus a
    // rough allowance for factor fill.
    const double bytes = dense ? 24.0 * n * n
                               : 8.0 * n * (4.0 * static_cast<double>(count) + 300.0) +
                                     7200.0 * n * (2.0 * point.sites - 1.0);
    const auto lease = engine.budget().acquire(bytes, "window solve of " + point.tag());

    const FockBasis basis = build_basis(point.sites, point.particles, Parity::odd, BasisLimits{});
    const SparseHamiltonian h = assemble(params, basis, AssemblyOptions{1, eo.max_dimension});
    WindowOptions wo;
    wo.method = eo.window_method;
    wo.dense_threshold = eo.dense_threshold;
    wo.with_vectors = true;
    wo.residual_tolerance = eo.residual_tolerance;
    wo.dense.max_dimension = std::max(eo.max_dimension, eo.dense_threshold);
    const SpectrumResult s = window_spectrum(h, request.target_eps, count, wo);

    CacheRecord rec;
    rec.arrays["eigenvalues"] = s.eigenvalues;
    rec.arrays["eps"] = s.scaled();
    rec.arrays["q"] = request.q_grid;
    const auto& v = *s.eigenvectors;
    for (std::size_t k = 0; k < request.q_grid.size(); ++k) {
      std::vector<double> d(s.eigenvalues.size());
      for (Eigen::Index c = 0; c < v.cols(); ++c)
        d[static_cast<std::size_t>(c)] = gfd(std::span(v.col(c).data(), dim), request.q_grid[k], dim);
      rec.arrays["d" + std::to_string(k)] = std::move(d);
    }
    rec.arrays["e_min"] = {s.e_min};
    rec.arrays["e_max"] = {s.e_max};
    rec.arrays["max_residual"] = {s.max_residual};
    rec.arrays["first_index"] = {s.first_index ? static_cast<double>(*s.first_index) : -1.0};
    rec.text["solver"] = s.solver;
    rec.text["warnings"] = join(s.warnings, " | ");
    return rec;
  };

  std::vector<std::string> cache_warnings;
  bool hit = false;
  const CacheRecord rec = load_or_compute(engine.cache(), key, compute, cache_warnings, &hit);
  for (const auto& w : cache_warnings) engine.warn(w);

  out.eigenvalues = array(rec, "eigenvalues");
  out.eps = array(rec, "eps");
  for (std::size_t k = 0; k < request.q_grid.size(); ++k) out.d.push_back(array(rec, "d" + std::to_string(k)));
  out.e_min = scalar(rec, "e_min");
  out.e_max = scalar(rec, "e_max");
  out.max_residual = scalar(rec, "max_residual");
  out.first_index = static_cast<std::int64_t>(scalar(rec, "first_index"));
  out.solver = text(rec, "solver");
  for (auto& w : split(text(rec, "warnings"), " | ")) out.warnings.push_back(std::move(w));
  out.warnings.insert(out.warnings.end(), cache_warnings.begin(), cache_warnings.end());
  out.from_cache = hit;
  return out;
}

// ---------------------------------------------------------------- phase grid

PhaseGridSpec phase_grid_spec(const JobConfig& config) {
  PhaseGridSpec s;
  s.etas = config.eta_grid.values();
  s.eps_bins = config.eps_bins;
  s.min_levels = config.min_levels;
  s.r_bins = config.r_bins;
  s.vector_etas = config.vector_etas;
  return s;
}

double PhaseGrid::eps_lo(std::size_t bin) const {
  return static_cast<double>(bin) / static_cast<double>(spec.eps_bins);
}

double PhaseGrid::eps_hi(std::size_t bin) const {
  return static_cast<double>(bin + 1) / static_cast<double>(spec.eps_bins);
}

namespace {

PhaseColumn bin_column(const std::vector<double>& levels, const std::vector<double>* d1, double eta_value,
                       const PhaseGridSpec& spec) {
  PhaseColumn col;
  col.eta = eta_value;
  col.vectors = d1 != nullptr;
  col.cells.assign(spec.eps_bins, PhaseCell{});
  col.e_min = levels.front();
  col.e_max = levels.back();
  const double width = col.e_max - col.e_min;
  std::vector<std::size_t> bin_of(levels.size(), 0);
  if (width > 0) {
    for (std::size_t i = 0; i < levels.size(); ++i) {
      const double eps = scaled_energy(levels[i], col.e_min, col.e_max);
      bin_of[i] = std::min(spec.eps_bins - 1, static_cast<std::size_t>(eps * static_cast<double>(spec.eps_bins)));
    }
  }
  std::size_t start = 0;
  while (start < levels.size()) {
    std::size_t end = start;
    while (end < levels.size() && bin_of[end] == bin_of[start]) ++end;
    PhaseCell& cell = col.cells[bin_of[start]];
    cell.levels = end - start;
    cell.masked = cell.levels < spec.min_levels;
    if (cell.levels >= 3 && width > 0) {
      RValueOptions ro;
      ro.spectral_width = width;
      const RSample r = r_values(std::span(levels.data() + start, cell.levels), ro);
      const auto clean = r.clean();
      cell.r_count = clean.size();
      if (!clean.empty()) {
        cell.mean_r = r.mean();
        if (!cell.masked) cell.kl_goe = kl_to_goe(clean, spec.r_bins).value;
      }
    }
    if (d1) {
      const WindowStats st = window_stats(std::span(d1->data() + start, cell.levels));
      cell.mean_d1 = st.mean_d1;
      cell.var_d1 = cell.levels > 1 ? st.var_d1 : std::numeric_limits<double>::quiet_NaN();
    }
    start = end;
  }
  return col;
}

}  // namespace

PhaseGrid phase_diagram(const SystemPoint& point, const PhaseGridSpec& spec, Engine& engine) {
  if (spec.eps_bins == 0) throw DomainError("phase grid needs at least one scaled-energy bin");
  if (spec.etas.empty()) throw DomainError("phase grid needs at least one eta");
  engine.check_capacity(point);
  PhaseGrid grid;
  grid.point = point;
  grid.spec = spec;
  grid.dimension = sector_dimension(point);
  grid.columns.resize(spec.etas.size());
  if (grid.dimension == 0) throw DegenerateError("system " + point.tag() + " has an empty odd sector");

  const EngineOptions& eo = engine.options();
  util::parallel_for(spec.etas.size(), eo.threads, [&](std::size_t j) {
    const double eta_value = spec.etas[j];
    const bool vectors = std::any_of(spec.vector_etas.begin(), spec.vector_etas.end(),
                                     [&](double e) { return same_eta(e, eta_value); });
    try {
      const ModelParams params = params_from_eta(point.sites, point.particles, eta_value);
      const std::string key = cache_key(params, vectors ? "full dense vectors=1" : "full dense vectors=0");
      auto compute = [&]() -> CacheRecord {
        const double n = static_cast<double>(grid.dimension);
        const auto lease = engine.budget().acquire((vectors ? 24.0 : 16.0) * n * n,
                                                   "full solve of " + point.tag());
        const FockBasis basis = build_basis(point.sites, point.particles, Parity::odd, BasisLimits{});
        const SparseHamiltonian h = assemble(params, basis, AssemblyOptions{1, eo.max_dimension});
        const SpectrumResult s = full_spectrum(h, vectors, DenseLimits{eo.max_dimension});
        CacheRecord rec;
        rec.arrays["eigenvalues"] = s.eigenvalues;
        if (vectors) {
          const auto& v = *s.eigenvectors;
          std::vector<double> d(s.eigenvalues.size());
          for (Eigen::Index c = 0; c < v.cols(); ++c)
            d[static_cast<std::size_t>(c)] =
                grid.dimension >= 2 ? gfd(std::span(v.col(c).data(), grid.dimension), 1.0, grid.dimension)
                                    : std::numeric_limits<double>::quiet_NaN();
          rec.arrays["d1"] = std::move(d);
        }
        return rec;
      };
      std::vector<std::string> warnings;
      const CacheRecord rec = load_or_compute(engine.cache(), key, compute, warnings);
      for (const auto& w : warnings) engine.warn(w);
      grid.columns[j] = bin_column(array(rec, "eigenvalues"), vectors ? &array(rec, "d1") : nullptr, eta_value,
                                   spec);
    } catch (const Error& e) {
      PhaseColumn col;
      col.eta = eta_value;
      col.cells.assign(spec.eps_bins, PhaseCell{});
      col.error = e.what();
      grid.columns[j] = std::move(col);
    }
  });
  return grid;
}

// ---------------------------------------------------------------- trajectories

TrajectorySpec trajectory_spec(const JobConfig& config) {
  check_trajectory(config);
  TrajectorySpec s;
  s.kind = config.trajectory_kind;
  s.value = config.trajectory_value;
  s.points = config.systems;
  s.chaos = WindowSpec{config.window_eps, config.window_count, config.chaos_etas};
  s.reference = WindowSpec{config.window_eps, config.window_count, {config.reference_eta}};
  s.smoothing = config.reference_smoothing;
  s.q_grid = config.q_grid;
  if (std::none_of(s.q_grid.begin(), s.q_grid.end(), [](double q) { return q == 1.0; }))
    s.q_grid.push_back(1.0);
  s.goe_samples = config.goe_samples;
  s.kl_bins = config.kl_bins;
  s.seed = config.seed;
  return s;
}

std::vector<double> PointReport::chaos_d1() const {
  std::vector<double> out;
  for (const auto& w : chaos_windows) {
    const auto& d = w.d1();
    out.insert(out.end(), d.begin(), d.end());
  }
  return out;
}

void derive_point(PointReport& r, std::size_t kl_bins) {
  const auto pooled = r.chaos_d1();
  r.chaos = window_stats(pooled);
  if (!r.reference_window) throw Error("point " + r.point.tag() + " lacks its reference window");
  r.reference = window_stats(r.reference_window->d1());
  r.goe = window_stats(r.goe_d1);
  r.goe_mean_truncated = goe_mean_d1(r.dimension);

  const double nan = std::numeric_limits<double>::quiet_NaN();
  r.ratio_reference = r.reference.var_d1 > 0 ? r.chaos.var_d1 / r.reference.var_d1 : nan;
  r.ratio_goe = r.goe.var_d1 > 0 ? r.chaos.var_d1 / r.goe.var_d1 : nan;
  r.delta1 = delta1(r.chaos.mean_d1, r.dimension);
  r.delta1_log = r.delta1 * std::log(static_cast<double>(r.dimension));
  if (r.pair_window) {
    r.reference_pair_var = window_stats(r.pair_window->d1()).var_d1;
    r.reference_var_smoothed = std::sqrt(r.reference.var_d1 * *r.reference_pair_var);
    r.ratio_reference_smoothed = *r.reference_var_smoothed > 0 ? r.chaos.var_d1 / *r.reference_var_smoothed : nan;
  }
  try {
    CompareOptions co;
    co.bins = kl_bins;
    r.kl_goe = distribution_compare(pooled, r.goe_d1, co);
  } catch (const Error& e) {
    r.kl_goe.reset();
    r.warnings.push_back(std::string("KL(P(D1), GOE) not computed: ") + e.what());
  }
}

TrajectoryReport run_trajectory(const TrajectorySpec& spec, Engine& engine) {
  if (spec.points.empty()) throw ConfigError("trajectory needs at least one system");
  if (spec.chaos.etas.empty()) throw ConfigError("trajectory needs at least one chaos eta");
  if (spec.reference.etas.size() != 1) throw ConfigError("trajectory needs exactly one reference eta");
  if (spec.kind) {
    JobConfig c;
    c.systems = spec.points;
    c.trajectory_kind = spec.kind;
    c.trajectory_value = spec.value;
    check_trajectory(c);
  }

  TrajectoryReport report;
  report.spec = spec;
  report.points.resize(spec.points.size());

  struct Task {
    std::size_t point;
    int role;  // 0 chaos, 1 reference, 2 pair reference
    std::size_t slot;
    SystemPoint system;
    double eta;
    const WindowSpec* window;
  };
  std::vector<Task> tasks;
  for (std::size_t i = 0; i < spec.points.size(); ++i) {
    PointReport& pr = report.points[i];
    pr.point = spec.points[i];
    try {
      engine.check_capacity(pr.point);
      pr.dimension = sector_dimension(pr.point);
      if (pr.dimension < 2) throw DegenerateError("system " + pr.point.tag() + " has fewer than 2 odd states");
      if (spec.smoothing == ReferenceSmoothing::parity_pair)
        engine.check_capacity(SystemPoint{pr.point.sites, pr.point.particles + 1});
    } catch (const Error& e) {
      pr.error = e.what();
      continue;
    }
    pr.chaos_windows.resize(spec.chaos.etas.size());
    for (std::size_t k = 0; k < spec.chaos.etas.size(); ++k)
      tasks.push_back({i, 0, k, pr.point, spec.chaos.etas[k], &spec.chaos});
    tasks.push_back({i, 1, 0, pr.point, spec.reference.etas[0], &spec.reference});
    if (spec.smoothing == ReferenceSmoothing::parity_pair)
      tasks.push_back({i, 2, 0, SystemPoint{pr.point.sites, pr.point.particles + 1}, spec.reference.etas[0],
                       &spec.reference});
  }

  std::vector<std::string> errors(tasks.size());
  std::vector<WindowResult> results(tasks.size());
  const unsigned threads = engine.options().threads;
  util::parallel_for(tasks.size(), threads, [&](std::size_t t) {
    const Task& task = tasks[t];
    try {
      results[t] = compute_window(task.system, task.eta,
                                  WindowRequest{task.window->target_eps, task.window->count, spec.q_grid}, engine);
    } catch (const Error& e) {
      errors[t] = task.system.tag() + " at eta " + format_double(task.eta) + ": " + e.what();
    }
  });

  for (std::size_t t = 0; t < tasks.size(); ++t) {
    PointReport& pr = report.points[tasks[t].point];
    if (!errors[t].empty()) {
      if (pr.error.empty()) pr.error = errors[t];
      continue;
    }
    for (const auto& w : results[t].warnings) pr.warnings.push_back(w);
    switch (tasks[t].role) {
      case 0: pr.chaos_windows[tasks[t].slot] = std::move(results[t]); break;
      case 1: pr.reference_window = std::move(results[t]); break;
      default: pr.pair_window = std::move(results[t]); break;
    }
  }

  for (auto& pr : report.points) {
    if (!pr.ok()) continue;
    try {
      pr.goe_seed = util::mix64(spec.seed ^ util::mix64(pr.dimension));
      const double q1[] = {1.0};
      pr.goe_d1 = sample_goe_eigenvector_gfd(pr.dimension, spec.goe_samples, q1, pr.goe_seed,
                                             GoePoolOptions{threads})
                      .d1();
      derive_point(pr, spec.kl_bins);
    } catch (const Error& e) {
      pr.error = e.what();
    }
  }
  return report;
}

// ---------------------------------------------------------------- output

void write_grid_csv(const PhaseGrid& grid, const std::filesystem::path& path) {
  auto out = open_csv(path);
  out << "L,N,dimension,eta,bin,eps_lo,eps_hi,levels,masked,r_count,mean_r,kl_goe,mean_d1,var_d1,status\n";
  for (const auto& col : grid.columns) {
    for (std::size_t b = 0; b < col.cells.size(); ++b) {
      const PhaseCell& c = col.cells[b];
      out << grid.point.sites << ',' << grid.point.particles << ',' << grid.dimension << ','
          << format_double(col.eta) << ',' << b << ',' << format_double(grid.eps_lo(b)) << ','
          << format_double(grid.eps_hi(b)) << ',' << c.levels << ',' << (c.masked ? 1 : 0) << ',' << c.r_count
          << ',' << format_double(c.mean_r) << ',' << format_double(c.kl_goe) << ','
          << format_double(c.mean_d1) << ',' << format_double(c.var_d1) << ','
          << csv_field(col.error.empty() ? "ok" : "error: " + col.error) << '\n';
    }
  }
  if (!out) throw Error("failed writing " + path.string());
}

void write_trajectory_csv(const TrajectoryReport& report, const std::filesystem::path& path) {
  auto out = open_csv(path);
  out << "kind,value,L,N,dimension,status,chaos_samples,chaos_mean_d1,chaos_var_d1,reference_eta,"
         "reference_samples,reference_mean_d1,reference_var_d1,reference_pair_var_d1,reference_var_smoothed,"
         "goe_samples,goe_seed,goe_mean_d1,goe_var_d1,goe_mean_d1_truncated,ratio_reference,"
         "ratio_reference_smoothed,ratio_goe,delta1,delta1_ln_dim,kl_goe\n";
  const auto& s = report.spec;
  for (const auto& p : report.points) {
    out << (s.kind ? to_string(*s.kind) : std::string("list")) << ',' << opt(s.value) << ',' << p.point.sites
        << ',' << p.point.particles << ',' << p.dimension << ',' << csv_field(p.ok() ? "ok" : "error: " + p.error);
    if (!p.ok()) {
      for (int i = 0; i < 20; ++i) out << ",nan";
      out << '\n';
      continue;
    }
    out << ',' << p.chaos.samples << ',' << format_double(p.chaos.mean_d1) << ','
        << format_double(p.chaos.var_d1) << ',' << format_double(s.reference.etas[0]) << ','
        << p.reference.samples << ',' << format_double(p.reference.mean_d1) << ','
        << format_double(p.reference.var_d1) << ',' << opt(p.reference_pair_var) << ','
        << opt(p.reference_var_smoothed) << ',' << p.goe.samples << ',' << p.goe_seed << ','
        << format_double(p.goe.mean_d1) << ',' << format_double(p.goe.var_d1) << ','
        << format_double(p.goe_mean_truncated) << ',' << format_double(p.ratio_reference) << ','
        << opt(p.ratio_reference_smoothed) << ',' << format_double(p.ratio_goe) << ','
        << format_double(p.delta1) << ',' << format_double(p.delta1_log) << ',' << opt(p.kl_goe) << '\n';
  }
  if (!out) throw Error("failed writing " + path.string());
}

void write_windows_csv(const TrajectoryReport& report, const std::filesystem::path& path) {
  auto out = open_csv(path);
  out << "L,N,role,eta,dimension,samples,mean_d1,var_d1,eps_min,eps_max,e_min,e_max,solver,max_residual,"
         "cached,warnings\n";
  auto row = [&](const WindowResult& w, const char* role) {
    const WindowStats st = window_stats(w.d1());
    const auto [lo, hi] = std::minmax_element(w.eps.begin(), w.eps.end());
    out << w.point.sites << ',' << w.point.particles << ',' << role << ',' << format_double(w.eta) << ','
        << w.dimension << ',' << st.samples << ',' << format_double(st.mean_d1) << ','
        << format_double(st.var_d1) << ',' << format_double(*lo) << ',' << format_double(*hi) << ','
        << format_double(w.e_min) << ',' << format_double(w.e_max) << ',' << csv_field(w.solver) << ','
        << format_double(w.max_residual) << ',' << (w.from_cache ? 1 : 0) << ','
        << csv_field(join(w.warnings, " | ")) << '\n';
  };
  for (const auto& p : report.points) {
    for (const auto& w : p.chaos_windows)
      if (!w.eigenvalues.empty()) row(w, "chaos");
    if (p.reference_window) row(*p.reference_window, "reference");
    if (p.pair_window) row(*p.pair_window, "reference_pair");
  }
  if (!out) throw Error("failed writing " + path.string());
}

void write_gfd_csv(const std::vector<WindowResult>& windows, const std::filesystem::path& path) {
  auto out = open_csv(path);
  out << "system,eta,index,eps,q,d_q\n";
  for (const auto& w : windows) {
    const auto ids = w.state_ids();
    for (std::size_t i = 0; i < ids.size(); ++i)
      for (std::size_t k = 0; k < w.q.size(); ++k)
        out << ids[i].system << ',' << format_double(ids[i].eta) << ',' << ids[i].index << ','
            << format_double(ids[i].eps) << ',' << format_double(w.q[k]) << ',' << format_double(w.d[k][i])
            << '\n';
  }
  if (!out) throw Error("failed writing " + path.string());
}

}  // namespace bhchaos
