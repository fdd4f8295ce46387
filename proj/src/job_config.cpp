#include "bhchaos/job_config.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>

#include "bhchaos/errors.hpp"
#include "bhchaos/util/digest.hpp"

namespace bhchaos {

std::string SystemPoint::tag() const {
  return "L" + std::to_string(sites) + "N" + std::to_string(particles);
}

std::string to_string(TrajectoryKind k) {
  switch (k) {
    case TrajectoryKind::fixed_L: return "fixed-L";
    case TrajectoryKind::fixed_N: return "fixed-N";
    case TrajectoryKind::fixed_n: return "fixed-n";
  }
  return "?";
}

TrajectoryKind parse_trajectory_kind(const std::string& text) {
  if (text == "fixed-L") return TrajectoryKind::fixed_L;
  if (text == "fixed-N") return TrajectoryKind::fixed_N;
  if (text == "fixed-n") return TrajectoryKind::fixed_n;
  throw ConfigError("unknown trajectory kind '" + text + "' (fixed-L, fixed-N, fixed-n)");
}

std::string to_string(ReferenceSmoothing s) {
  return s == ReferenceSmoothing::none ? "none" : "parity_pair";
}

ReferenceSmoothing parse_reference_smoothing(const std::string& text) {
  if (text == "none") return ReferenceSmoothing::none;
  if (text == "parity_pair") return ReferenceSmoothing::parity_pair;
  throw ConfigError("unknown reference smoothing '" + text + "' (none, parity_pair)");
}

std::vector<double> EtaGrid::values() const {
  if (!(min > 0 && max >= min)) throw ConfigError("eta grid needs 0 < min <= max");
  if (points == 0) throw ConfigError("eta grid needs at least one point");
  std::vector<double> out(points);
  if (points == 1) {
    out[0] = min;
    return out;
  }
  const double a = std::log(min);
  const double b = std::log(max);
  for (std::size_t i = 0; i < points; ++i)
    out[i] = std::exp(a + (b - a) * static_cast<double>(i) / static_cast<double>(points - 1));
  out.front() = min;
  out.back() = max;
  return out;
}

namespace {

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

std::vector<std::string> split_list(const std::string& value) {
  std::vector<std::string> out;
  std::string item;
  std::istringstream in(value);
  while (std::getline(in, item, ',')) {
    item = trim(item);
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

double to_double(const std::string& s) {
  std::size_t used = 0;
  double v = 0;
  try {
    v = std::stod(s, &used);
  } catch (const std::exception&) {
    throw ConfigError("expected a number, got '" + s + "'");
  }
  if (used != s.size() || !std::isfinite(v)) throw ConfigError("expected a number, got '" + s + "'");
  return v;
}

template <class T>
T to_unsigned(const std::string& s) {
  T v{};
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size())
    throw ConfigError("expected a non-negative integer, got '" + s + "'");
  return v;
}

std::vector<double> to_doubles(const std::string& s) {
  std::vector<double> out;
  for (const auto& item : split_list(s)) out.push_back(to_double(item));
  return out;
}

std::vector<SystemPoint> to_systems(const std::string& s) {
  std::vector<SystemPoint> out;
  for (const auto& item : split_list(s)) {
    const auto colon = item.find(':');
    if (colon == std::string::npos) throw ConfigError("system '" + item + "' is not of the form L:N");
    SystemPoint p;
    p.sites = to_unsigned<int>(trim(item.substr(0, colon)));
    p.particles = to_unsigned<int>(trim(item.substr(colon + 1)));
    if (p.sites < 1) throw ConfigError("system '" + item + "' needs L >= 1");
    out.push_back(p);
  }
  return out;
}

std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string fmt_list(const std::vector<double>& v) {
  std::string out;
  for (std::size_t i = 0; i < v.size(); ++i) out += (i ? ", " : "") + fmt(v[i]);
  return out;
}

struct Field {
  SchemaEntry entry;
  std::function<void(JobConfig&, const std::string&)> set;
  std::function<std::string(const JobConfig&)> get;
};

const std::vector<Field>& fields() {
  using C = JobConfig;
  static const std::vector<Field> table = {
      {{"label", "string", "run label, used in output file names"},
       [](C& c, const std::string& v) { c.label = v; }, [](const C& c) { return c.label; }},
      {{"systems", "list of L:N", "systems to process, e.g. 5:17, 5:29"},
       [](C& c, const std::string& v) { c.systems = to_systems(v); },
       [](const C& c) {
         std::string out;
         for (std::size_t i = 0; i < c.systems.size(); ++i)
           out += (i ? ", " : "") + std::to_string(c.systems[i].sites) + ":" +
                  std::to_string(c.systems[i].particles);
         return out;
       }},
      {{"trajectory.kind", "fixed-L | fixed-N | fixed-n", "constraint the systems must satisfy"},
       [](C& c, const std::string& v) {
         if (v.empty()) c.trajectory_kind.reset();
         else c.trajectory_kind = parse_trajectory_kind(v);
       },
       [](const C& c) { return c.trajectory_kind ? to_string(*c.trajectory_kind) : std::string(); }},
      {{"trajectory.value", "number", "fixed L, N or filling n = N/L"},
       [](C& c, const std::string& v) {
         if (v.empty()) c.trajectory_value.reset();
         else c.trajectory_value = to_double(v);
       },
       [](const C& c) { return c.trajectory_value ? fmt(*c.trajectory_value) : std::string(); }},
      {{"eta.min", "number > 0", "smallest eta of the phase grid"},
       [](C& c, const std::string& v) { c.eta_grid.min = to_double(v); },
       [](const C& c) { return fmt(c.eta_grid.min); }},
      {{"eta.max", "number", "largest eta of the phase grid"},
       [](C& c, const std::string& v) { c.eta_grid.max = to_double(v); },
       [](const C& c) { return fmt(c.eta_grid.max); }},
      {{"eta.points", "integer", "number of log-spaced eta values"},
       [](C& c, const std::string& v) { c.eta_grid.points = to_unsigned<std::size_t>(v); },
       [](const C& c) { return std::to_string(c.eta_grid.points); }},
      {{"grid.eps_bins", "integer", "equal-width scaled-energy bins on [0, 1]"},
       [](C& c, const std::string& v) { c.eps_bins = to_unsigned<std::size_t>(v); },
       [](const C& c) { return std::to_string(c.eps_bins); }},
      {{"grid.min_levels", "integer", "cells with fewer levels are masked"},
       [](C& c, const std::string& v) { c.min_levels = to_unsigned<std::size_t>(v); },
       [](const C& c) { return std::to_string(c.min_levels); }},
      {{"grid.r_bins", "integer", "histogram bins for per-cell KL of P(r)"},
       [](C& c, const std::string& v) { c.r_bins = to_unsigned<std::size_t>(v); },
       [](const C& c) { return std::to_string(c.r_bins); }},
      {{"grid.vector_etas", "list of numbers", "eta values of the grid that keep eigenvectors"},
       [](C& c, const std::string& v) { c.vector_etas = to_doubles(v); },
       [](const C& c) { return fmt_list(c.vector_etas); }},
      {{"window.eps", "number in [0, 1]", "target scaled energy of eigenvector windows"},
       [](C& c, const std::string& v) { c.window_eps = to_double(v); },
       [](const C& c) { return fmt(c.window_eps); }},
      {{"window.count", "integer", "states per eta in a window"},
       [](C& c, const std::string& v) { c.window_count = to_unsigned<std::size_t>(v); },
       [](const C& c) { return std::to_string(c.window_count); }},
      {{"chaos.etas", "list of numbers", "eta values pooled at the chaos centre"},
       [](C& c, const std::string& v) { c.chaos_etas = to_doubles(v); },
       [](const C& c) { return fmt_list(c.chaos_etas); }},
      {{"reference.eta", "number", "eta of the weakly interacting reference window"},
       [](C& c, const std::string& v) { c.reference_eta = to_double(v); },
       [](const C& c) { return fmt(c.reference_eta); }},
      {{"reference.smoothing", "none | parity_pair", "reference variance used in ratio_ref_smoothed"},
       [](C& c, const std::string& v) { c.reference_smoothing = parse_reference_smoothing(v); },
       [](const C& c) { return to_string(c.reference_smoothing); }},
      {{"q", "list of numbers > 0", "fractal-dimension orders"},
       [](C& c, const std::string& v) { c.q_grid = to_doubles(v); },
       [](const C& c) { return fmt_list(c.q_grid); }},
      {{"goe.samples", "integer", "surrogate GOE eigenvectors per pool"},
       [](C& c, const std::string& v) { c.goe_samples = to_unsigned<std::size_t>(v); },
       [](const C& c) { return std::to_string(c.goe_samples); }},
      {{"goe.dimension", "integer", "pool dimension for the goe-pool command"},
       [](C& c, const std::string& v) { c.goe_dimension = to_unsigned<std::size_t>(v); },
       [](const C& c) { return std::to_string(c.goe_dimension); }},
      {{"kl.bins", "integer", "histogram bins of D1 distribution comparisons"},
       [](C& c, const std::string& v) { c.kl_bins = to_unsigned<std::size_t>(v); },
       [](const C& c) { return std::to_string(c.kl_bins); }},
      {{"seed", "integer", "master seed of every random stream"},
       [](C& c, const std::string& v) { c.seed = to_unsigned<std::uint64_t>(v); },
       [](const C& c) { return std::to_string(c.seed); }},
      {{"threads", "integer", "worker threads (0 = hardware concurrency)"},
       [](C& c, const std::string& v) { c.threads = to_unsigned<unsigned>(v); },
       [](const C& c) { return std::to_string(c.threads); }},
      {{"max_dim", "integer", "largest sector dimension the engine accepts"},
       [](C& c, const std::string& v) { c.max_dimension = to_unsigned<std::size_t>(v); },
       [](const C& c) { return std::to_string(c.max_dimension); }},
      {{"memory_budget_mb", "number", "memory shared by concurrent solves"},
       [](C& c, const std::string& v) { c.memory_budget_mb = to_double(v); },
       [](const C& c) { return fmt(c.memory_budget_mb); }},
      {{"solver.method", "automatic | dense | shift-invert", "window eigensolver"},
       [](C& c, const std::string& v) { c.window_method = parse_window_method(v); },
       [](const C& c) { return to_string(c.window_method); }},
      {{"solver.dense_threshold", "integer", "automatic solver: dense up to this dimension"},
       [](C& c, const std::string& v) { c.dense_threshold = to_unsigned<std::size_t>(v); },
       [](const C& c) { return std::to_string(c.dense_threshold); }},
      {{"solver.residual_tolerance", "number", "eigenpair residual bound relative to the norm of H"},
       [](C& c, const std::string& v) { c.residual_tolerance = to_double(v); },
       [](const C& c) { return fmt(c.residual_tolerance); }},
  };
  return table;
}

const Field* find_field(const std::string& key) {
  for (const auto& f : fields())
    if (key == f.entry.key) return &f;
  return nullptr;
}

void validate(const JobConfig& c) {
  if (c.eps_bins == 0) throw ConfigError("grid.eps_bins must be positive");
  if (c.r_bins == 0 || c.kl_bins == 0) throw ConfigError("histogram bins must be positive");
  if (c.window_count == 0) throw ConfigError("window.count must be positive");
  if (!(c.window_eps >= 0 && c.window_eps <= 1)) throw ConfigError("window.eps must lie in [0, 1]");
  if (!(c.reference_eta > 0)) throw ConfigError("reference.eta must be positive");
  for (double e : c.chaos_etas)
    if (!(e > 0)) throw ConfigError("chaos.etas must be positive");
  for (double e : c.vector_etas)
    if (!(e > 0)) throw ConfigError("grid.vector_etas must be positive");
  for (double q : c.q_grid)
    if (!(q > 0)) throw ConfigError("q values must be positive");
  if (!(c.memory_budget_mb > 0)) throw ConfigError("memory_budget_mb must be positive");
  if (!(c.residual_tolerance > 0)) throw ConfigError("solver.residual_tolerance must be positive");
  c.eta_grid.values();
  if (c.trajectory_kind.has_value() != c.trajectory_value.has_value())
    throw ConfigError("trajectory.kind and trajectory.value must be given together");
}

}  // namespace

void set_config_value(JobConfig& config, const std::string& key, const std::string& value) {
  const Field* f = find_field(key);
  if (!f) throw ConfigError("unknown key '" + key + "'");
  f->set(config, value);
}

JobConfig parse_config(std::string_view text, const std::string& source) {
  JobConfig config;
  std::map<std::string, std::size_t> seen;
  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    auto end = text.find('\n', pos);
    if (end == std::string_view::npos) end = text.size();
    std::string_view raw = text.substr(pos, end - pos);
    pos = end + 1;
    ++line_no;
    if (const auto hash = raw.find('#'); hash != std::string_view::npos) raw = raw.substr(0, hash);
    const std::string line = trim(raw);
    if (line.empty()) continue;
    const std::string where = source + ":" + std::to_string(line_no) + ": ";
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw ConfigError(where + "expected 'key = value', got '" + line + "'");
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (key.empty()) throw ConfigError(where + "missing key");
    if (auto it = seen.find(key); it != seen.end())
      throw ConfigError(where + "duplicate key '" + key + "' (first set on line " +
                        std::to_string(it->second) + ")");
    seen[key] = line_no;
    try {
      set_config_value(config, key, value);
    } catch (const ConfigError& e) {
      throw ConfigError(where + e.what());
    } catch (const Error& e) {
      throw ConfigError(where + e.what());
    }
  }
  try {
    validate(config);
  } catch (const ConfigError& e) {
    throw ConfigError(source + ": " + e.what());
  }
  return config;
}

JobConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot read config " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_config(buf.str(), path.string());
}

std::vector<std::pair<std::string, std::string>> JobConfig::canonical() const {
  validate(*this);
  std::vector<std::pair<std::string, std::string>> out;
  for (const auto& f : fields()) out.emplace_back(f.entry.key, f.get(*this));
  return out;
}

std::string JobConfig::canonical_text() const {
  std::string out;
  for (const auto& [k, v] : canonical()) out += k + " = " + v + "\n";
  return out;
}

std::string JobConfig::digest() const { return util::sha256_hex(canonical_text()); }

const std::vector<SchemaEntry>& config_schema() {
  static const std::vector<SchemaEntry> schema = [] {
    std::vector<SchemaEntry> out;
    for (const auto& f : fields()) out.push_back(f.entry);
    return out;
  }();
  return schema;
}

std::string schema_text() {
  const JobConfig defaults;
  std::string out;
  for (const auto& f : fields()) {
    out += std::string(f.entry.key) + " (" + f.entry.type + "): " + f.entry.description;
    const std::string d = f.get(defaults);
    out += d.empty() ? "; no default\n" : "; default " + d + "\n";
  }
  return out;
}

void check_trajectory(const JobConfig& config) {
  if (!config.trajectory_kind) return;
  const double v = *config.trajectory_value;
  for (const auto& p : config.systems) {
    bool ok = false;
    switch (*config.trajectory_kind) {
      case TrajectoryKind::fixed_L: ok = p.sites == v; break;
      case TrajectoryKind::fixed_N: ok = p.particles == v; break;
      case TrajectoryKind::fixed_n:
        ok = std::abs(static_cast<double>(p.particles) - v * p.sites) < 1e-9;
        break;
    }
    if (!ok)
      throw ConfigError("system " + p.tag() + " violates " + to_string(*config.trajectory_kind) + " = " +
                        fmt(v));
  }
}

}  // namespace bhchaos
