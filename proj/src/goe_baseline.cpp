#include "bhchaos/goe_baseline.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>

#include <nlohmann/json.hpp>

#include "bhchaos/errors.hpp"
#include "bhchaos/spectral_stats.hpp"
#include "bhchaos/util/parallel.hpp"
#include "bhchaos/util/rng.hpp"

namespace bhchaos {

Eigen::MatrixXd sample_goe_matrix(std::size_t dim, std::uint64_t seed, std::uint64_t stream) {
  util::CounterRng rng(seed, stream);
  const auto n = static_cast<Eigen::Index>(dim);
  Eigen::MatrixXd m(n, n);
  const double off = std::sqrt(0.5);
  for (Eigen::Index j = 0; j < n; ++j) {
    m(j, j) = rng.normal();
    for (Eigen::Index i = j + 1; i < n; ++i) {
      const double v = off * rng.normal();
      m(i, j) = v;
      m(j, i) = v;
    }
  }
  return m;
}

std::vector<double> sample_goe_spectrum(std::size_t dim, std::size_t realizations, std::uint64_t seed,
                                        const GoeSpectrumOptions& options) {
  if (dim < 8) throw DomainError("GOE spectral sampling needs dim >= 8");
  if (!(options.central_fraction > 0 && options.central_fraction <= 1))
    throw DomainError("central fraction must lie in (0, 1]");
  std::vector<std::vector<double>> per(realizations);
  util::parallel_for(realizations, options.threads, [&](std::size_t k) {
    const Eigen::MatrixXd m = sample_goe_matrix(dim, seed, k);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(m, Eigen::EigenvaluesOnly);
    const auto& ev = es.eigenvalues();
    const auto keep = static_cast<std::size_t>(std::llround(options.central_fraction * static_cast<double>(dim)));
    const std::size_t first = (dim - keep) / 2;
    std::vector<double> levels(ev.data() + first, ev.data() + first + keep);
    per[k] = r_values(levels).clean();
  });
  std::vector<double> out;
  for (auto& v : per) out.insert(out.end(), v.begin(), v.end());
  return out;
}

const std::vector<double>& GoePool::samples_for(double value) const {
  for (std::size_t k = 0; k < q.size(); ++k)
    if (std::abs(q[k] - value) < 1e-12) return d[k];
  throw DomainError("q = " + std::to_string(value) + " is not on the pool's grid");
}

GoePool sample_goe_eigenvector_gfd(std::size_t dimension, std::size_t samples,
                                   std::span<const double> q_grid, std::uint64_t seed,
                                   const GoePoolOptions& options) {
  if (dimension < 2) throw DomainError("GOE pool needs N >= 2");
  GoePool pool;
  pool.dimension = dimension;
  pool.samples = samples;
  pool.seed = seed;
  pool.q.assign(q_grid.begin(), q_grid.end());
  pool.d.assign(q_grid.size(), std::vector<double>(samples));
  pool.generator = util::CounterRng::kAlgorithm;

  const std::size_t chunk = 64;
  const std::size_t chunks = (samples + chunk - 1) / chunk;
  util::parallel_for(chunks, options.threads, [&](std::size_t c) {
    std::vector<double> v(dimension);
    const std::size_t end = std::min(samples, (c + 1) * chunk);
    for (std::size_t s = c * chunk; s < end; ++s) {
      util::CounterRng rng(seed, s);
      double norm = 0.0;
      for (auto& x : v) {
        x = rng.normal();
        norm += x * x;
      }
      const double inv = 1.0 / std::sqrt(norm);
      for (auto& x : v) x *= inv;
      for (std::size_t k = 0; k < q_grid.size(); ++k) pool.d[k][s] = gfd(v, q_grid[k], dimension);
    }
  });
  return pool;
}

std::vector<double> goe_matrix_eigenvector_gfd(std::size_t dim, std::size_t samples, double q,
                                               std::uint64_t seed) {
  if (dim < 2) throw DomainError("GOE eigenvectors need N >= 2");
  std::vector<double> out;
  out.reserve(samples);
  for (std::size_t s = 0; s < samples; ++s) {
    const Eigen::MatrixXd m = sample_goe_matrix(dim, seed, s);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(m);
    const Eigen::VectorXd v = es.eigenvectors().col(static_cast<Eigen::Index>(dim / 2)).normalized();
    out.push_back(gfd(std::span(v.data(), dim), q, dim));
  }
  return out;
}

void export_pool(const GoePool& pool, const std::filesystem::path& csv_path) {
  {
    std::ofstream out(csv_path);
    if (!out) throw Error("cannot write " + csv_path.string());
    out << "sample";
    for (double q : pool.q) {
      char buf[48];
      std::snprintf(buf, sizeof buf, ",D_q=%g", q);
      out << buf;
    }
    out << '\n';
    char buf[48];
    for (std::size_t s = 0; s < pool.samples; ++s) {
      out << s;
      for (std::size_t k = 0; k < pool.q.size(); ++k) {
        std::snprintf(buf, sizeof buf, ",%.17g", pool.d[k][s]);
        out << buf;
      }
      out << '\n';
    }
  }
  nlohmann::json meta;
  meta["N"] = pool.dimension;
  meta["samples"] = pool.samples;
  meta["seed"] = pool.seed;
  meta["generator"] = pool.generator ? pool.generator : "";
  meta["q"] = pool.q;
  meta["goe_mean_d1_truncated"] = goe_mean_d1(pool.dimension);
  meta["note"] = kGoeMeanTruncation;
  std::ofstream side(csv_path.string() + ".json");
  side << meta.dump(2) << '\n';
}

}  // namespace bhchaos
