#include "bhchaos/spectral_stats.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <numeric>
#include <sstream>

#include "bhchaos/errors.hpp"

namespace bhchaos {

double scaled_energy(double energy, double e_min, double e_max) {
  if (!(e_max > e_min)) throw DegenerateError("scaled energy needs E_max > E_min");
  return (energy - e_min) / (e_max - e_min);
}

std::size_t RSample::degenerate_count() const {
  return static_cast<std::size_t>(std::count(degenerate.begin(), degenerate.end(), true));
}

std::vector<double> RSample::clean() const {
  std::vector<double> out;
  out.reserve(values.size());
  for (std::size_t i = 0; i < values.size(); ++i)
    if (!degenerate[i]) out.push_back(values[i]);
  return out;
}

double RSample::mean() const {
  double sum = 0.0;
  std::size_t n = 0;
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (degenerate[i]) continue;
    sum += values[i];
    ++n;
  }
  return n ? sum / static_cast<double>(n) : std::numeric_limits<double>::quiet_NaN();
}

RSample r_values(std::span<const double> levels, const RValueOptions& options) {
  if (levels.size() < 3) throw DomainError("r statistic needs at least 3 levels");
  for (std::size_t i = 1; i < levels.size(); ++i)
    if (levels[i] < levels[i - 1]) throw DomainError("levels must be ascending");
  const double width = options.spectral_width.value_or(levels.back() - levels.front());
  const double threshold = options.degeneracy_tolerance * width;
  RSample out;
  out.values.reserve(levels.size() - 2);
  out.degenerate.reserve(levels.size() - 2);
  for (std::size_t i = 0; i + 2 < levels.size(); ++i) {
    const double s0 = levels[i + 1] - levels[i];
    const double s1 = levels[i + 2] - levels[i + 1];
    const bool degenerate = s0 <= threshold || s1 <= threshold;
    out.degenerate.push_back(degenerate);
    out.values.push_back(degenerate ? 0.0 : std::min(s0, s1) / std::max(s0, s1));
  }
  return out;
}

Histogram make_histogram(std::span<const double> values, std::size_t bins, double lo, double hi) {
  if (bins == 0) throw DomainError("histogram needs at least one bin");
  if (!(hi > lo)) throw DomainError("histogram support must have positive width");
  Histogram h;
  h.edges.resize(bins + 1);
  for (std::size_t i = 0; i <= bins; ++i)
    h.edges[i] = lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(bins);
  h.edges.back() = hi;
  h.counts.assign(bins, 0);
  const double scale = static_cast<double>(bins) / (hi - lo);
  for (double v : values) {
    if (!(v >= lo && v <= hi)) {
      ++h.outside;
      continue;
    }
    auto b = static_cast<std::size_t>((v - lo) * scale);
    b = std::min(b, bins - 1);
    // Guard the rounding at interior edges.
    while (b > 0 && v < h.edges[b]) --b;
    while (b + 1 < bins && v >= h.edges[b + 1]) ++b;
    ++h.counts[b];
    ++h.total;
  }
  h.density.assign(bins, 0.0);
  if (h.total > 0)
    for (std::size_t i = 0; i < bins; ++i)
      h.density[i] = static_cast<double>(h.counts[i]) / (static_cast<double>(h.total) * h.width(i));
  return h;
}

double p_goe(double r) {
  if (!(r >= 0.0 && r <= 1.0)) throw DomainError("p_goe defined on [0, 1]");
  const double g = 1.0 + r + r * r;
  return 6.75 * (r + r * r) / (g * g * std::sqrt(g));
}

double cdf_goe(double r) {
  if (!(r >= 0.0 && r <= 1.0)) throw DomainError("cdf_goe defined on [0, 1]");
  const double g = 1.0 + r + r * r;
  return 1.0 + (r * r * r + 1.5 * r * r - 1.5 * r - 1.0) / (g * std::sqrt(g));
}

double mean_r_goe() { return 4.0 - 2.0 * std::sqrt(3.0); }

BinDensity goe_r_density() {
  return [](double lo, double hi) {
    lo = std::clamp(lo, 0.0, 1.0);
    hi = std::clamp(hi, 0.0, 1.0);
    if (!(hi > lo)) return 0.0;
    return (cdf_goe(hi) - cdf_goe(lo)) / (hi - lo);
  };
}

KlResult kl_divergence(const Histogram& p, const BinDensity& q, const KlOptions& options) {
  if (p.total == 0) throw DegenerateError("KL divergence of an empty histogram");
  KlResult out;
  for (std::size_t i = 0; i < p.bins(); ++i) {
    const double pi = p.density[i];
    if (pi <= 0.0) continue;
    double qi = q(p.edges[i], p.edges[i + 1]);
    if (!(qi >= options.floor)) {
      qi = options.floor;
      out.floored = true;
      ++out.floored_bins;
    }
    out.value += pi * std::log(pi / qi) * p.width(i);
  }
  return out;
}

KlResult kl_divergence(const Histogram& p, const Histogram& q, const KlOptions& options) {
  if (p.edges != q.edges) throw DomainError("KL divergence: histogram supports differ");
  return kl_divergence(
      p,
      [&q](double lo, double) {
        const auto it = std::lower_bound(q.edges.begin(), q.edges.end(), lo);
        const auto i = static_cast<std::size_t>(it - q.edges.begin());
        return i < q.density.size() ? q.density[i] : 0.0;
      },
      options);
}

KlResult kl_to_goe(std::span<const double> r, std::size_t bins, const KlOptions& options) {
  return kl_divergence(make_histogram(r, bins, 0.0, 1.0), goe_r_density(), options);
}

std::string histogram_csv(const Histogram& h) {
  std::ostringstream out;
  out << "left,right,density\n";
  char buf[96];
  for (std::size_t i = 0; i < h.bins(); ++i) {
    std::snprintf(buf, sizeof buf, "%.17g,%.17g,%.17g\n", h.edges[i], h.edges[i + 1], h.density[i]);
    out << buf;
  }
  return out.str();
}

}  // namespace bhchaos
