#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <vector>

#include <Eigen/Dense>

#include "bhchaos/eigenstate_stats.hpp"

namespace bhchaos {

// Real symmetric matrix with N(0, 1) diagonal and N(0, 1/2) off-diagonal
// entries, drawn from stream `stream` of `seed`.
Eigen::MatrixXd sample_goe_matrix(std::size_t dim, std::uint64_t seed, std::uint64_t stream);

struct GoeSpectrumOptions {
  unsigned threads = 1;
  // Central fraction of each spectrum that contributes ratios.
  double central_fraction = 0.5;
};

// r values from the central part of `realizations` sampled GOE spectra,
// concatenated in realization order.
std::vector<double> sample_goe_spectrum(std::size_t dim, std::size_t realizations, std::uint64_t seed,
                                        const GoeSpectrumOptions& options = {});

struct GoePool {
  std::size_t dimension = 0;
  std::size_t samples = 0;
  std::uint64_t seed = 0;
  std::vector<double> q;
  // d[k][s]: D_{q[k]} of sample s.
  std::vector<std::vector<double>> d;
  const char* generator = nullptr;

  // Samples of D_q for one grid value; throws if q is not on the grid.
  const std::vector<double>& samples_for(double q) const;
  const std::vector<double>& d1() const { return samples_for(1.0); }
};

struct GoePoolOptions {
  unsigned threads = 1;
};

// D_q of normalized vectors of N independent standard Gaussians, which share
// the law of GOE eigenvectors. Sample s is drawn from stream s of `seed`.
GoePool sample_goe_eigenvector_gfd(std::size_t dimension, std::size_t samples,
                                   std::span<const double> q_grid, std::uint64_t seed,
                                   const GoePoolOptions& options = {});

// D_q of eigenvectors of explicitly diagonalized GOE matrices, one eigenvector
// (column `dim / 2`) per matrix. Validation oracle for small N.
std::vector<double> goe_matrix_eigenvector_gfd(std::size_t dim, std::size_t samples, double q,
                                               std::uint64_t seed);

// CSV of samples (sample, q..., one column per q) plus `<path>.json` metadata.
void export_pool(const GoePool& pool, const std::filesystem::path& csv_path);

}  // namespace bhchaos
