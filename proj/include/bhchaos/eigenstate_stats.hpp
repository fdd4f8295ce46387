#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace bhchaos {

// c1 = 2 - gamma - ln 2 in the GOE mean <D1> = 1 - c1 / ln N + O((N ln N)^-1).
double goe_c1();

// Truncated GOE mean of the information dimension, 1 - c1 / ln N.
double goe_mean_d1(std::size_t dimension);

// Note attached to every output that depends on goe_mean_d1.
inline constexpr const char* kGoeMeanTruncation =
    "GOE <D1> uses 1 - c1/ln N; the O((N ln N)^-1) correction is omitted";

// Intensities |psi|^2 below this count as exact zeros in the entropy sum.
inline constexpr double kZeroAmplitude = 1e-154;

// Finite-size generalized fractal dimension of a normalized vector
//   D_q = -ln(sum |psi|^{2q}) / ((q - 1) ln N),
// and the Shannon form -sum |psi|^2 ln |psi|^2 / ln N for |q - 1| < 1e-8.
// `dimension` may exceed amplitudes.size() (implicit zero padding).
double gfd(std::span<const double> amplitudes, double q, std::size_t dimension);

// D_q for every q of the grid.
std::vector<double> gfd(std::span<const double> amplitudes, std::span<const double> q_grid,
                        std::size_t dimension);

inline const std::vector<double> kDefaultQGrid = {0.5, 1.0, 2.0};

struct StateId {
  std::string system;  // e.g. "L5N17"
  double eta = 0.0;
  std::int64_t index = -1;  // position in the full ascending spectrum, -1 if unknown
  double eps = 0.0;         // scaled energy
};

struct GfdRecord {
  StateId id;
  std::size_t dimension = 0;
  std::vector<double> q;
  std::vector<double> d;  // D_q per q
};

// One record per eigenvector column.
std::vector<GfdRecord> gfd_records(const Eigen::MatrixXd& vectors, std::span<const double> q_grid,
                                   std::span<const StateId> ids);

struct WindowSpec {
  double target_eps = 0.5;
  std::size_t count = 100;
  std::vector<double> etas;
};

struct WindowStats {
  double mean_d1 = 0.0;
  double var_d1 = 0.0;  // unbiased; 0 for a single sample
  std::size_t samples = 0;
  WindowSpec spec;
};

// Mean and unbiased variance of a pooled sample.
WindowStats window_stats(std::span<const double> values, const WindowSpec& spec = {});

// D_q of every column of `vectors`, reduced.
WindowStats window_stats(const Eigen::MatrixXd& vectors, double q, const WindowSpec& spec = {});

// Distance of <D1> from the truncated GOE mean.
double delta1(double mean_d1, std::size_t dimension);

enum class CompareMode {
  // q is a Gaussian fitted to the reference sample (mean, unbiased variance).
  gaussian_fit,
  // q is the reference sample's histogram on the same bins.
  empirical,
};

struct CompareOptions {
  std::size_t bins = 50;
  CompareMode mode = CompareMode::gaussian_fit;
  double floor = 1e-12;
  std::size_t min_samples = 100;
};

// KL divergence of the binned sample density against the reference. Bins span
// the sample range of `samples` (union of both ranges in empirical mode).
double distribution_compare(std::span<const double> samples, std::span<const double> reference,
                            const CompareOptions& options = {});

// KL of the binned sample density against the Gaussian N(mean, variance).
double gaussian_compare(std::span<const double> samples, double mean, double variance,
                        const CompareOptions& options = {});

}  // namespace bhchaos
