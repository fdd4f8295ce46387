// Command-line driver: combinatorial tables, single spectra, phase grids,
// trajectories and GOE pools. Parallel work is delegated to the engine.

#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "bhchaos/eigenstate_stats.hpp"
#include "bhchaos/errors.hpp"
#include "bhchaos/fock_basis.hpp"
#include "bhchaos/goe_baseline.hpp"
#include "bhchaos/hamiltonian.hpp"
#include "bhchaos/job_config.hpp"
#include "bhchaos/manifest.hpp"
#include "bhchaos/spectrum.hpp"
#include "bhchaos/sweep_engine.hpp"
#include "bhchaos/util/digest.hpp"

namespace fs = std::filesystem;
using namespace bhchaos;

namespace {

struct Globals {
  std::string config_path;
  std::string out_dir = ".";
  std::optional<unsigned> threads;
  std::optional<std::size_t> max_dim;
  std::optional<std::uint64_t> seed;
  std::vector<std::string> overrides;
};

// "5", "2-10", "2-10:2" or comma-separated combinations thereof.
std::vector<int> parse_range(const std::string& text) {
  std::vector<int> out;
  std::stringstream in(text);
  std::string part;
  auto number = [&](const std::string& s) {
    std::size_t used = 0;
    int v = 0;
    try {
      v = std::stoi(s, &used);
    } catch (const std::exception&) {
      throw ConfigError("malformed range '" + text + "'");
    }
    if (used != s.size() || v < 0) throw ConfigError("malformed range '" + text + "'");
    return v;
  };
  while (std::getline(in, part, ',')) {
    if (part.empty()) continue;
    int step = 1;
    if (const auto colon = part.find(':'); colon != std::string::npos) {
      step = number(part.substr(colon + 1));
      part = part.substr(0, colon);
      if (step < 1) throw ConfigError("malformed range '" + text + "'");
    }
    const auto dash = part.find('-');
    if (dash == std::string::npos) {
      out.push_back(number(part));
      continue;
    }
    const int lo = number(part.substr(0, dash));
    const int hi = number(part.substr(dash + 1));
    if (hi < lo) throw ConfigError("malformed range '" + text + "'");
    for (int v = lo; v <= hi; v += step) out.push_back(v);
  }
  if (out.empty()) throw ConfigError("empty range '" + text + "'");
  return out;
}

JobConfig resolve_config(const Globals& g) {
  JobConfig c = g.config_path.empty() ? JobConfig{} : load_config(g.config_path);
  for (const auto& kv : g.overrides) {
    const auto eq = kv.find('=');
    if (eq == std::string::npos) throw ConfigError("--set expects key=value, got '" + kv + "'");
    auto trim = [](std::string s) {
      s.erase(0, s.find_first_not_of(' '));
      s.erase(s.find_last_not_of(' ') + 1);
      return s;
    };
    set_config_value(c, trim(kv.substr(0, eq)), trim(kv.substr(eq + 1)));
  }
  if (g.threads) c.threads = *g.threads;
  if (g.max_dim) c.max_dimension = *g.max_dim;
  if (g.seed) c.seed = *g.seed;
  c.canonical();  // validates
  return c;
}

std::optional<fs::path> cache_dir() {
  const char* env = std::getenv("BHCHAOS_CACHE_DIR");
  if (!env || !*env) return std::nullopt;
  return fs::path(env);
}

class Timer {
 public:
  double seconds() const {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
  }

 private:
  std::chrono::steady_clock::time_point start_ = std::chrono::steady_clock::now();
};

std::string fmt(double v) { return format_double(v); }

// Runs `body`, then writes the manifest whatever happened. Exit status 0 only
// if the body succeeded and every listed output re-hashes to its digest.
int with_manifest(const Globals& g, const std::string& command, const std::string& stem,
                  const std::function<void(RunManifest&, const fs::path&)>& body) {
  RunManifest manifest(command);
  const fs::path out_dir = g.out_dir;
  const fs::path manifest_path = out_dir / (stem + ".manifest.json");
  int status = 0;
  Timer timer;
  try {
    fs::create_directories(out_dir);
    body(manifest, out_dir);
    if (!manifest.verify_outputs()) throw Error("output verification failed");
  } catch (const std::exception& e) {
    manifest.set_failure(e.what());
    std::cerr << "bhchaos " << command << ": " << e.what() << '\n';
    status = dynamic_cast<const ConfigError*>(&e) ? 2 : 1;
  }
  manifest.add_timing("total", timer.seconds());
  try {
    manifest.write(manifest_path);
  } catch (const std::exception& e) {
    std::cerr << "bhchaos " << command << ": " << e.what() << '\n';
    return 1;
  }
  return status;
}

std::optional<Parity> parse_sector(const std::string& s) {
  if (s == "full") return std::nullopt;
  return parse_parity(s);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Parity-resolved Bose-Hubbard chaos diagnostics"};
  app.require_subcommand(1);
  app.fallthrough();
  app.set_version_flag("--version", kToolVersion);

  Globals g;
  app.add_option("--config", g.config_path, "Job specification (key = value)")->check(CLI::ExistingFile);
  app.add_option("--out-dir", g.out_dir, "Directory for outputs and the manifest");
  app.add_option("--threads", g.threads, "Worker threads (0 = all cores)");
  app.add_option("--max-dim", g.max_dim, "Largest accepted sector dimension");
  app.add_option("--seed", g.seed, "Master seed");
  app.add_option("--set", g.overrides, "Override a config key: --set key=value");

  // dim
  std::string L_text;
  std::string N_text;
  std::string sector_text = "odd";
  auto* dim = app.add_subcommand("dim", "Sector dimension; CSV for ranges");
  dim->add_option("--L", L_text, "Sites: value, a-b, a-b:step, comma lists")->required();
  dim->add_option("--N", N_text, "Bosons: same syntax")->required();
  dim->add_option("--sector", sector_text, "odd | even")->check(CLI::IsMember({"odd", "even"}));

  // combinatorics
  std::vector<double> isoline_R = {1.0};
  auto* comb = app.add_subcommand("combinatorics", "Table of dim, Delta, R, C, eta*, isolines");
  comb->add_option("--L", L_text, "Sites range")->required();
  comb->add_option("--N", N_text, "Bosons range")->required();
  comb->add_option("--isoline-R", isoline_R, "R values of the N_R isoline columns");

  // ratio
  int L = 0;
  int N = 0;
  auto* ratio = app.add_subcommand("ratio", "Exact ratio R of non-interacting to interacting states");
  ratio->add_option("--L", L, "Sites")->required();
  ratio->add_option("--N", N, "Bosons")->required();

  // basis
  auto* basis = app.add_subcommand("basis", "Export a sector basis as CSV");
  std::string basis_sector = "odd";
  basis->add_option("--L", L, "Sites")->required();
  basis->add_option("--N", N, "Bosons")->required();
  basis->add_option("--sector", basis_sector, "odd | even | full")
      ->check(CLI::IsMember({"odd", "even", "full"}));

  // hamiltonian
  double eta_value = 0.25;
  auto* ham = app.add_subcommand("hamiltonian", "Export H in coordinate format");
  ham->add_option("--L", L, "Sites")->required();
  ham->add_option("--N", N, "Bosons")->required();
  ham->add_option("--eta", eta_value, "Scaled tunneling J/(UN)");

  // spectrum
  std::optional<double> window_eps;
  std::optional<std::size_t> window_count;
  bool vectors = false;
  auto* spec = app.add_subcommand("spectrum", "Full spectrum, or an eigenvector window with --eps");
  spec->add_option("--L", L, "Sites (default: first config system)");
  spec->add_option("--N", N, "Bosons (default: first config system)");
  spec->add_option("--eta", eta_value, "Scaled tunneling J/(UN)");
  spec->add_option("--eps", window_eps, "Target scaled energy of a window");
  spec->add_option("--count", window_count, "Window size (default window.count)");
  spec->add_flag("--vectors", vectors, "Full solve: also write fractal dimensions per state");

  // grid, trajectory, goe-pool
  auto* grid = app.add_subcommand("grid", "(eps, eta) phase diagram for every config system");
  auto* traj = app.add_subcommand("trajectory", "Chaos-centre, reference and GOE statistics per system");
  std::optional<std::size_t> pool_dim;
  std::optional<std::size_t> pool_samples;
  auto* pool = app.add_subcommand("goe-pool", "Surrogate GOE eigenvector pool");
  pool->add_option("--dimension", pool_dim, "N (default goe.dimension)");
  pool->add_option("--samples", pool_samples, "Samples (default goe.samples)");

  // stats
  std::string eta_list = "0.25";
  bool full_fock = false;
  auto* stats = app.add_subcommand("stats", "Matrix-element statistics D");
  stats->add_option("--L", L_text, "Sites range")->required();
  stats->add_option("--N", N_text, "Bosons range")->required();
  stats->add_option("--eta", eta_list, "Comma-separated eta values");
  stats->add_flag("--full-fock", full_fock, "Use the unsymmetrized Fock basis");

  auto* schema = app.add_subcommand("schema", "Print the job-spec schema");

  CLI11_PARSE(app, argc, argv);

  try {
    if (schema->parsed()) {
      std::cout << schema_text();
      return 0;
    }

    if (dim->parsed()) {
      const auto Ls = parse_range(L_text);
      const auto Ns = parse_range(N_text);
      const Parity p = parse_parity(sector_text);
      if (Ls.size() == 1 && Ns.size() == 1) {
        if (Ls[0] < 1) throw ConfigError("L must be at least 1");
        std::cout << dim_sector(Ls[0], Ns[0], p) << '\n';
        return 0;
      }
      std::cout << "L,N,sector,dim\n";
      for (int l : Ls) {
        if (l < 1) throw ConfigError("L must be at least 1");
        for (int n : Ns) std::cout << l << ',' << n << ',' << sector_text << ',' << dim_sector(l, n, p) << '\n';
      }
      return 0;
    }

    if (ratio->parsed()) {
      std::cout << to_string(ratio_R(L, N)) << '\n';
      return 0;
    }

    if (comb->parsed()) {
      const auto Ls = parse_range(L_text);
      const auto Ns = parse_range(N_text);
      std::cout << "L,N,full_dim,delta,dim_odd,dim_even,R,R_value,C_hard_wall,C_periodic,eta_star";
      for (double r : isoline_R) std::cout << ",N_R=" << fmt(r);
      std::cout << '\n';
      for (int l : Ls) {
        if (l < 1) throw ConfigError("L must be at least 1");
        for (int n : Ns) {
          std::cout << l << ',' << n << ',' << full_dimension(l, n) << ',' << palindrome_count(l, n) << ','
                    << dim_sector(l, n, Parity::odd) << ',' << dim_sector(l, n, Parity::even) << ',';
          try {
            const Rational r = ratio_R(l, n);
            std::cout << to_string(r) << ',' << fmt(to_double(r));
          } catch (const DegenerateError&) {
            std::cout << "undefined,nan";
          } catch (const DomainError&) {
            std::cout << "undefined,nan";
          }
          if (l >= 2 && n >= 1)
            std::cout << ',' << to_string(connectivity(l, n, Boundary::hard_wall)) << ','
                      << to_string(connectivity(l, n, Boundary::periodic));
          else
            std::cout << ",undefined,undefined";
          std::cout << ',' << (n >= 1 ? fmt(eta_star(l, n)) : std::string("nan"));
          for (double r : isoline_R) std::cout << ',' << fmt(isoline_N_of_R(r, l));
          std::cout << '\n';
        }
      }
      return 0;
    }

    if (stats->parsed()) {
      const auto Ls = parse_range(L_text);
      const auto Ns = parse_range(N_text);
      std::vector<double> etas;
      {
        std::stringstream in(eta_list);
        std::string item;
        while (std::getline(in, item, ',')) etas.push_back(std::stod(item));
      }
      const JobConfig c = resolve_config(g);
      return with_manifest(g, "stats", "stats", [&](RunManifest& m, const fs::path& dir) {
        m.set_config(c);
        m.set_argument("basis", full_fock ? "full_fock" : "odd");
        const fs::path out = dir / "stats.csv";
        std::ofstream csv(out, std::ios::binary);
        csv << "L,N,eta,basis,mean_diag,mean_abs_offdiag,std_abs_offdiag,D,diag_count,offdiag_count,status\n";
        for (int l : Ls)
          for (int n : Ns)
            for (double e : etas) {
              csv << l << ',' << n << ',' << fmt(e) << ',' << (full_fock ? "full_fock" : "odd") << ',';
              try {
                Engine(engine_options(c)).check_capacity(SystemPoint{l, n});
                const ElementStats st = element_stats(params_from_eta(l, n, e),
                                                      full_fock ? StatsBasis::full_fock : StatsBasis::sector);
                csv << fmt(st.mean_diag) << ',' << fmt(st.mean_abs_offdiag) << ',' << fmt(st.std_abs_offdiag)
                    << ',' << fmt(st.distance) << ',' << st.diag_count << ',' << st.offdiag_count << ",ok\n";
              } catch (const Error& err) {
                csv << "nan,nan,nan,nan,0,0,\"error: " << err.what() << "\"\n";
              }
            }
        csv.close();
        m.add_output(out);
        std::cout << out.string() << '\n';
      });
    }

    if (basis->parsed()) {
      const JobConfig c = resolve_config(g);
      const std::string stem = "basis_L" + std::to_string(L) + "N" + std::to_string(N) + "_" + basis_sector;
      return with_manifest(g, "basis", stem, [&](RunManifest& m, const fs::path& dir) {
        m.set_config(c);
        m.set_argument("L", std::to_string(L));
        m.set_argument("N", std::to_string(N));
        m.set_argument("sector", basis_sector);
        BasisLimits limits;
        const FockBasis b = build_basis(L, N, parse_sector(basis_sector), limits);
        const fs::path out = dir / (stem + ".csv");
        export_basis_csv(b, out);
        m.add_output(out);
        m.set_argument("basis_sha256", b.digest());
        std::cout << out.string() << " (" << b.size() << " states)\n";
      });
    }

    if (ham->parsed()) {
      const JobConfig c = resolve_config(g);
      const std::string stem = "hamiltonian_L" + std::to_string(L) + "N" + std::to_string(N);
      return with_manifest(g, "hamiltonian", stem, [&](RunManifest& m, const fs::path& dir) {
        m.set_config(c);
        m.set_argument("L", std::to_string(L));
        m.set_argument("N", std::to_string(N));
        m.set_argument("eta", fmt(eta_value));
        Engine(engine_options(c)).check_capacity(SystemPoint{L, N});
        const SparseHamiltonian h = assemble(params_from_eta(L, N, eta_value), BasisLimits{},
                                             AssemblyOptions{c.threads == 0 ? 1u : c.threads, c.max_dimension});
        const fs::path out = dir / (stem + ".coo");
        export_coordinate(h, out);
        m.add_output(out);
        m.add_output(out.string() + ".json");
        std::cout << out.string() << " (dimension " << h.dimension() << ", " << h.matrix.nonZeros()
                  << " stored entries)\n";
      });
    }

    if (spec->parsed()) {
      const JobConfig c = resolve_config(g);
      if (L == 0 && N == 0) {
        if (c.systems.empty()) throw ConfigError("spectrum needs --L/--N or a config with systems");
        L = c.systems.front().sites;
        N = c.systems.front().particles;
      }
      const std::string stem = "spectrum_L" + std::to_string(L) + "N" + std::to_string(N) + "_eta" + fmt(eta_value);
      return with_manifest(g, "spectrum", stem, [&](RunManifest& m, const fs::path& dir) {
        m.set_config(c);
        m.set_argument("L", std::to_string(L));
        m.set_argument("N", std::to_string(N));
        m.set_argument("eta", fmt(eta_value));
        Engine engine(engine_options(c, cache_dir()));
        engine.check_capacity(SystemPoint{L, N});
        const ModelParams params = params_from_eta(L, N, eta_value);
        const SparseHamiltonian h = assemble(params, BasisLimits{}, AssemblyOptions{1, c.max_dimension});
        SpectrumResult s;
        if (window_eps) {
          m.set_argument("eps", fmt(*window_eps));
          const std::size_t count = window_count.value_or(c.window_count);
          m.set_argument("count", std::to_string(count));
          WindowOptions wo;
          wo.method = c.window_method;
          wo.dense_threshold = c.dense_threshold;
          wo.residual_tolerance = c.residual_tolerance;
          wo.dense.max_dimension = std::max(c.max_dimension, c.dense_threshold);
          s = window_spectrum(h, *window_eps, std::min<std::size_t>(count, h.dimension()), wo);
        } else {
          s = full_spectrum(h, vectors, DenseLimits{c.max_dimension});
        }
        const fs::path out = dir / (stem + ".csv");
        export_spectrum(s, h.digest(), out);
        m.add_output(out);
        m.add_output(out.string() + ".json");
        if (s.eigenvectors && h.dimension() >= 2) {
          WindowResult w;
          w.point = SystemPoint{L, N};
          w.eta = eta_value;
          w.dimension = static_cast<std::size_t>(h.dimension());
          w.eigenvalues = s.eigenvalues;
          w.eps = s.e_max > s.e_min ? s.scaled() : std::vector<double>(s.eigenvalues.size(), 0.0);
          w.first_index = s.first_index ? static_cast<std::int64_t>(*s.first_index) : -1;
          w.q = c.q_grid;
          for (double q : c.q_grid) {
            std::vector<double> d;
            for (Eigen::Index col = 0; col < s.eigenvectors->cols(); ++col)
              d.push_back(gfd(std::span(s.eigenvectors->col(col).data(), w.dimension), q, w.dimension));
            w.d.push_back(std::move(d));
          }
          const fs::path gfd_out = dir / (stem + "_gfd.csv");
          write_gfd_csv({w}, gfd_out);
          m.add_output(gfd_out);
        }
        for (const auto& w : s.warnings) m.add_warning(w);
        std::cout << out.string() << " (" << s.eigenvalues.size() << " levels, " << s.solver << ")\n";
      });
    }

    if (grid->parsed()) {
      const JobConfig c = resolve_config(g);
      return with_manifest(g, "grid", "grid_" + c.label, [&](RunManifest& m, const fs::path& dir) {
        m.set_config(c);
        if (c.systems.empty()) throw ConfigError("grid needs systems in the config");
        Engine engine(engine_options(c, cache_dir()));
        const PhaseGridSpec ps = phase_grid_spec(c);
        m.add_note("eta grid: " + std::to_string(ps.etas.size()) + " log-spaced values on [" + fmt(c.eta_grid.min) +
                   ", " + fmt(c.eta_grid.max) + "]");
        for (const auto& p : c.systems) {
          Timer t;
          const PhaseGrid pg = phase_diagram(p, ps, engine);
          const fs::path out = dir / ("grid_" + c.label + "_" + p.tag() + ".csv");
          write_grid_csv(pg, out);
          m.add_output(out);
          m.add_timing(p.tag(), t.seconds());
          for (const auto& col : pg.columns)
            if (!col.error.empty()) m.add_warning(p.tag() + " eta " + fmt(col.eta) + ": " + col.error);
          std::cout << out.string() << '\n';
        }
        for (const auto& w : engine.warnings()) m.add_warning(w);
      });
    }

    if (traj->parsed()) {
      const JobConfig c = resolve_config(g);
      return with_manifest(g, "trajectory", "trajectory_" + c.label, [&](RunManifest& m, const fs::path& dir) {
        m.set_config(c);
        if (c.systems.empty()) throw ConfigError("trajectory needs systems in the config");
        Engine engine(engine_options(c, cache_dir()));
        const TrajectorySpec ts = trajectory_spec(c);
        const TrajectoryReport report = run_trajectory(ts, engine);
        const fs::path out = dir / ("trajectory_" + c.label + ".csv");
        const fs::path windows = dir / ("trajectory_" + c.label + "_windows.csv");
        const fs::path states = dir / ("trajectory_" + c.label + "_gfd.csv");
        write_trajectory_csv(report, out);
        write_windows_csv(report, windows);
        std::vector<WindowResult> all;
        for (const auto& p : report.points) {
          all.insert(all.end(), p.chaos_windows.begin(), p.chaos_windows.end());
          if (p.reference_window) all.push_back(*p.reference_window);
          if (p.pair_window) all.push_back(*p.pair_window);
          if (p.ok()) m.add_seed("goe_" + p.point.tag(), p.goe_seed);
          for (const auto& w : p.warnings) m.add_warning(p.point.tag() + ": " + w);
        }
        std::erase_if(all, [](const WindowResult& w) { return w.eigenvalues.empty(); });
        write_gfd_csv(all, states);
        m.add_output(out);
        m.add_output(windows);
        m.add_output(states);
        for (const auto& w : engine.warnings()) m.add_warning(w);
        std::string failed;
        for (const auto& p : report.points)
          if (!p.ok()) failed += (failed.empty() ? "" : "; ") + p.point.tag() + ": " + p.error;
        std::cout << out.string() << '\n';
        if (!failed.empty()) throw Error("trajectory points failed: " + failed);
      });
    }

    if (pool->parsed()) {
      const JobConfig c = resolve_config(g);
      const std::size_t n = pool_dim.value_or(c.goe_dimension);
      const std::size_t samples = pool_samples.value_or(c.goe_samples);
      const std::string stem = "goe_pool_N" + std::to_string(n) + "_seed" + std::to_string(c.seed);
      return with_manifest(g, "goe-pool", stem, [&](RunManifest& m, const fs::path& dir) {
        m.set_config(c);
        m.set_argument("dimension", std::to_string(n));
        m.set_argument("samples", std::to_string(samples));
        if (n < 2) throw ConfigError("goe-pool needs --dimension >= 2");
        const GoePool p = sample_goe_eigenvector_gfd(n, samples, c.q_grid, c.seed,
                                                     GoePoolOptions{c.threads == 0 ? 1u : c.threads});
        const fs::path out = dir / (stem + ".csv");
        export_pool(p, out);
        m.add_output(out);
        m.add_output(out.string() + ".json");
        std::cout << out.string() << '\n';
      });
    }
  } catch (const ConfigError& e) {
    std::cerr << "bhchaos: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "bhchaos: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
