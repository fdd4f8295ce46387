#include "bhchaos/eigenstate_stats.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "bhchaos/errors.hpp"
#include "bhchaos/spectral_stats.hpp"

namespace bhchaos {

double goe_c1() { return 2.0 - std::numbers::egamma - std::numbers::ln2; }

double goe_mean_d1(std::size_t dimension) {
  if (dimension < 2) throw DomainError("GOE mean dimension needs N >= 2");
  return 1.0 - goe_c1() / std::log(static_cast<double>(dimension));
}

double gfd(std::span<const double> amplitudes, double q, std::size_t dimension) {
  if (dimension < 2) throw DomainError("fractal dimension needs N >= 2");
  if (amplitudes.size() > dimension) throw DimensionMismatch("more amplitudes than the basis size");
  if (!(q > 0)) throw DomainError("fractal dimension needs q > 0");
  double norm = 0.0;
  for (double a : amplitudes) norm += a * a;
  if (std::abs(norm - 1.0) > 1e-10) throw DomainError("vector is not normalized");

  const double log_dim = std::log(static_cast<double>(dimension));
  constexpr double zero_intensity = kZeroAmplitude * kZeroAmplitude;
  if (std::abs(q - 1.0) < 1e-8) {
    double entropy = 0.0;
    for (double a : amplitudes) {
      const double p = a * a;
      if (p > zero_intensity) entropy -= p * std::log(p);
    }
    return entropy / log_dim;
  }
  double moment = 0.0;
  if (q == 2.0) {
    for (double a : amplitudes) moment += (a * a) * (a * a);
  } else {
    for (double a : amplitudes) {
      const double p = a * a;
      if (p > 0.0) moment += std::pow(p, q);
    }
  }
  return -std::log(moment) / ((q - 1.0) * log_dim);
}

std::vector<double> gfd(std::span<const double> amplitudes, std::span<const double> q_grid,
                        std::size_t dimension) {
  std::vector<double> out;
  out.reserve(q_grid.size());
  for (double q : q_grid) out.push_back(gfd(amplitudes, q, dimension));
  return out;
}

std::vector<GfdRecord> gfd_records(const Eigen::MatrixXd& vectors, std::span<const double> q_grid,
                                   std::span<const StateId> ids) {
  if (ids.size() != static_cast<std::size_t>(vectors.cols()))
    throw DimensionMismatch("one state id per eigenvector expected");
  const auto n = static_cast<std::size_t>(vectors.rows());
  std::vector<GfdRecord> out;
  out.reserve(ids.size());
  for (Eigen::Index c = 0; c < vectors.cols(); ++c) {
    GfdRecord rec;
    rec.id = ids[static_cast<std::size_t>(c)];
    rec.dimension = n;
    rec.q.assign(q_grid.begin(), q_grid.end());
    rec.d = gfd(std::span(vectors.col(c).data(), n), q_grid, n);
    out.push_back(std::move(rec));
  }
  return out;
}

WindowStats window_stats(std::span<const double> values, const WindowSpec& spec) {
  if (values.empty()) throw DegenerateError("empty window");
  WindowStats st;
  st.spec = spec;
  st.samples = values.size();
  double sum = 0.0;
  for (double v : values) sum += v;
  st.mean_d1 = sum / static_cast<double>(values.size());
  if (values.size() > 1) {
    double ss = 0.0;
    for (double v : values) ss += (v - st.mean_d1) * (v - st.mean_d1);
    st.var_d1 = ss / static_cast<double>(values.size() - 1);
  }
  return st;
}

WindowStats window_stats(const Eigen::MatrixXd& vectors, double q, const WindowSpec& spec) {
  const auto n = static_cast<std::size_t>(vectors.rows());
  std::vector<double> d;
  d.reserve(static_cast<std::size_t>(vectors.cols()));
  for (Eigen::Index c = 0; c < vectors.cols(); ++c) d.push_back(gfd(std::span(vectors.col(c).data(), n), q, n));
  return window_stats(d, spec);
}

double delta1(double mean_d1, std::size_t dimension) { return goe_mean_d1(dimension) - mean_d1; }

namespace {

struct Moments {
  double mean;
  double variance;
};

Moments moments(std::span<const double> x) {
  double mean = 0.0;
  for (double v : x) mean += v;
  mean /= static_cast<double>(x.size());
  double ss = 0.0;
  for (double v : x) ss += (v - mean) * (v - mean);
  return {mean, ss / static_cast<double>(x.size() - 1)};
}

std::pair<double, double> padded_range(double lo, double hi) {
  if (hi > lo) return {lo, hi};
  const double pad = std::max(1e-12, std::abs(lo) * 1e-9);
  return {lo - pad, hi + pad};
}

}  // namespace

double gaussian_compare(std::span<const double> samples, double mean, double variance,
                        const CompareOptions& options) {
  if (samples.size() < options.min_samples)
    throw DomainError("distribution comparison needs at least " +
                      std::to_string(options.min_samples) + " samples");
  if (!(variance > 0)) throw DegenerateError("reference Gaussian has zero variance");
  const auto [lo_it, hi_it] = std::minmax_element(samples.begin(), samples.end());
  const auto [lo, hi] = padded_range(*lo_it, *hi_it);
  const Histogram p = make_histogram(samples, options.bins, lo, hi);
  const double sigma = std::sqrt(variance);
  const BinDensity q = [mean, sigma](double a, double b) {
    const double za = (a - mean) / (sigma * std::numbers::sqrt2);
    const double zb = (b - mean) / (sigma * std::numbers::sqrt2);
    // erfc differences keep precision in the far tails.
    double mass = 0.0;
    if (za > 0) {
      mass = 0.5 * (std::erfc(za) - std::erfc(zb));
    } else if (zb < 0) {
      mass = 0.5 * (std::erfc(-zb) - std::erfc(-za));
    } else {
      mass = 0.5 * (std::erf(zb) - std::erf(za));
    }
    return mass / (b - a);
  };
  return kl_divergence(p, q, KlOptions{options.floor}).value;
}

double distribution_compare(std::span<const double> samples, std::span<const double> reference,
                            const CompareOptions& options) {
  if (samples.size() < options.min_samples || reference.size() < options.min_samples)
    throw DomainError("distribution comparison needs at least " +
                      std::to_string(options.min_samples) + " samples each");
  if (options.mode == CompareMode::gaussian_fit) {
    const Moments m = moments(reference);
    return gaussian_compare(samples, m.mean, m.variance, options);
  }
  const auto [slo, shi] = std::minmax_element(samples.begin(), samples.end());
  const auto [rlo, rhi] = std::minmax_element(reference.begin(), reference.end());
  const auto [lo, hi] = padded_range(std::min(*slo, *rlo), std::max(*shi, *rhi));
  const Histogram p = make_histogram(samples, options.bins, lo, hi);
  const Histogram q = make_histogram(reference, options.bins, lo, hi);
  return kl_divergence(p, q, KlOptions{options.floor}).value;
}

}  // namespace bhchaos
