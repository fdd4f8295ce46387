#pragma once

#include <cstddef>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace bhchaos {

// Mean spacing ratio of the GOE surmise, 4 - 2 sqrt(3).
inline constexpr double kMeanRGoeSurmise = 0.53589838486224541294;
// Large-matrix GOE value from numerics.
inline constexpr double kMeanRGoeNumeric = 0.5307;

double scaled_energy(double energy, double e_min, double e_max);

// Folded ratios of consecutive level spacings.
struct RSample {
  std::vector<double> values;
  // degenerate[i] is set when either spacing of ratio i is below the
  // degeneracy threshold; such ratios carry the value 0.
  std::vector<bool> degenerate;

  std::size_t degenerate_count() const;
  // Ratios not touching a degeneracy.
  std::vector<double> clean() const;
  // Mean of clean(); NaN when empty.
  double mean() const;
};

struct RValueOptions {
  // Spacings below degeneracy_tolerance * spectral_width are exact degeneracies.
  double degeneracy_tolerance = 1e-12;
  // Width used for the degeneracy threshold; defaults to max - min of the input.
  std::optional<double> spectral_width;
};

// n - 2 ratios for n ascending levels. Throws for fewer than 3 levels or a
// descending pair.
RSample r_values(std::span<const double> levels, const RValueOptions& options = {});

// Equal-width histogram normalized to unit integral over [edges.front(), edges.back()].
struct Histogram {
  std::vector<double> edges;
  std::vector<std::size_t> counts;
  std::vector<double> density;
  std::size_t total = 0;    // samples inside the support
  std::size_t outside = 0;  // samples dropped outside the support

  std::size_t bins() const { return counts.size(); }
  double width(std::size_t i) const { return edges[i + 1] - edges[i]; }
};

// A value equal to `hi` falls in the last bin.
Histogram make_histogram(std::span<const double> values, std::size_t bins, double lo, double hi);

// Analytic surmise for the distribution of r in the GOE.
double p_goe(double r);
// Its cumulative distribution, in closed form.
double cdf_goe(double r);
double mean_r_goe();

// Average of a density over [lo, hi].
using BinDensity = std::function<double(double lo, double hi)>;

BinDensity goe_r_density();

struct KlResult {
  double value = 0.0;
  // Set when some q_i was raised to the floor.
  bool floored = false;
  std::size_t floored_bins = 0;
};

struct KlOptions {
  double floor = 1e-12;
};

// sum_i p_i ln(p_i / q_i) width_i over the bins of P; empty P bins contribute 0.
KlResult kl_divergence(const Histogram& p, const BinDensity& q, const KlOptions& options = {});
// Both histograms must share their edges.
KlResult kl_divergence(const Histogram& p, const Histogram& q, const KlOptions& options = {});

// r histogram on [0, 1] compared with the surmise; convenience for the
// per-bin and per-window diagnostics.
KlResult kl_to_goe(std::span<const double> r, std::size_t bins = 50, const KlOptions& options = {});

// CSV "left,right,density".
std::string histogram_csv(const Histogram& h);

}  // namespace bhchaos
