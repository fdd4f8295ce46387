#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <random>

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include "bhchaos/errors.hpp"
#include "bhchaos/spectral_stats.hpp"
#include "bhchaos/util/rng.hpp"

using namespace bhchaos;

namespace {

double surmise(double r) { return 27.0 / 4.0 * (r + r * r) / std::pow(1 + r + r * r, 2.5); }

// Inverse-CDF sampler from a tabulated integral of the surmise.
class SurmiseSampler {
 public:
  SurmiseSampler() : cdf_(kPoints + 1, 0.0) {
    const double h = 1.0 / kPoints;
    for (int i = 0; i < kPoints; ++i) {
      const double a = i * h;
      const double b = a + h;
      cdf_[i + 1] = cdf_[i] + h / 6.0 * (surmise(a) + 4 * surmise(0.5 * (a + b)) + surmise(b));
    }
  }
  double operator()(double u) const {
    const double target = u * cdf_.back();
    const auto it = std::upper_bound(cdf_.begin(), cdf_.end(), target);
    const auto i = static_cast<int>(std::distance(cdf_.begin(), it)) - 1;
    if (i >= kPoints) return 1.0;
    const double f = (target - cdf_[i]) / (cdf_[i + 1] - cdf_[i]);
    return (i + f) / kPoints;
  }

 private:
  static constexpr int kPoints = 20000;
  std::vector<double> cdf_;
};

}  // namespace

TEST_CASE("scaled energy") {
  CHECK(scaled_energy(0.0, -2.0, 2.0) == 0.5);
  CHECK(scaled_energy(-2.0, -2.0, 2.0) == 0.0);
  CHECK(scaled_energy(2.0, -2.0, 2.0) == 1.0);
  CHECK_THROWS_AS(scaled_energy(1.0, 1.0, 1.0), DegenerateError);
}

TEST_CASE("r values") {
  const std::vector<double> a = {0.0, 1.0, 2.0};
  const std::vector<double> b = {0.0, 1.0, 3.0};
  CHECK(r_values(a).values == std::vector<double>{1.0});
  CHECK(r_values(b).values == std::vector<double>{0.5});
  const std::vector<double> two = {0.0, 1.0};
  CHECK_THROWS_AS(r_values(two), DomainError);
  const std::vector<double> down = {0.0, 2.0, 1.0};
  CHECK_THROWS_AS(r_values(down), DomainError);

  const std::vector<double> degenerate = {0.0, 1.0, 1.0, 2.5, 3.0};
  const RSample r = r_values(degenerate);
  REQUIRE(r.values.size() == 3);
  CHECK(r.degenerate_count() == 2);
  CHECK(r.values[0] == 0.0);
  CHECK(r.values[1] == 0.0);
  CHECK(r.clean() == std::vector<double>{0.5 / 1.5});
}

TEST_CASE("r values are affine invariant") {
  bhchaos::util::CounterRng rng(3, 0);
  std::vector<double> e(200);
  double x = 0;
  for (auto& v : e) v = (x += 0.1 + rng.uniform());
  const auto base = r_values(e).values;
  for (auto [a, b] : {std::pair{2.5, -7.0}, std::pair{1e-3, 7.0}, std::pair{40.0, 0.25}}) {
    std::vector<double> f(e.size());
    for (std::size_t i = 0; i < e.size(); ++i) f[i] = a * e[i] + b;
    const auto got = r_values(f).values;
    // Rounding of a * e + b limits the agreement to ~eps * |max| / min spacing.
    for (std::size_t i = 0; i < base.size(); ++i) REQUIRE(std::abs(got[i] - base[i]) <= 1e-9);
  }
}

TEST_CASE("GOE surmise") {
  CHECK(p_goe(0.0) == 0.0);
  CHECK(p_goe(1.0) == doctest::Approx(std::sqrt(3.0) / 2).epsilon(1e-15));
  CHECK_THROWS_AS(p_goe(-0.01), DomainError);
  CHECK_THROWS_AS(p_goe(1.01), DomainError);
  using boost::math::quadrature::gauss_kronrod;
  const double integral = gauss_kronrod<double, 61>::integrate([](double r) { return p_goe(r); }, 0.0, 1.0, 10, 1e-14);
  CHECK(std::abs(integral - 1.0) < 1e-10);
  const double mean = gauss_kronrod<double, 61>::integrate([](double r) { return r * p_goe(r); }, 0.0, 1.0, 10, 1e-14);
  CHECK(std::abs(mean - mean_r_goe()) < 1e-10);
  CHECK(mean_r_goe() == doctest::Approx(4 - 2 * std::sqrt(3.0)).epsilon(1e-15));
  CHECK(mean_r_goe() == doctest::Approx(0.536).epsilon(1e-3));
  CHECK(kMeanRGoeSurmise == doctest::Approx(mean_r_goe()).epsilon(1e-15));
  for (double r : {0.0, 0.1, 0.37, 0.8, 1.0}) {
    const double want = r == 0.0 ? 0.0 : gauss_kronrod<double, 61>::integrate(surmise, 0.0, r, 10, 1e-14);
    CHECK(std::abs(cdf_goe(r) - want) < 1e-12);
  }
}

TEST_CASE("histograms") {
  const std::vector<double> v = {0.0, 0.1, 0.5, 0.99, 1.0, 1.5};
  const Histogram h = make_histogram(v, 4, 0.0, 1.0);
  CHECK(h.edges.size() == 5);
  CHECK(h.counts.size() == 4);
  CHECK(h.total == 5);
  CHECK(h.outside == 1);
  CHECK(h.counts[3] == 2);
  double integral = 0;
  for (std::size_t i = 0; i < h.bins(); ++i) integral += h.density[i] * h.width(i);
  CHECK(integral == doctest::Approx(1.0).epsilon(1e-15));
  const std::string csv = histogram_csv(h);
  CHECK(csv.rfind("left,right,density\n", 0) == 0);
}

TEST_CASE("KL divergence") {
  SurmiseSampler sample;
  bhchaos::util::CounterRng rng(11, 0);
  std::vector<double> r(1000000);
  for (auto& x : r) x = sample(rng.uniform());

  SUBCASE("identical histograms") {
    const Histogram p = make_histogram(r, 50, 0.0, 1.0);
    const KlResult kl = kl_divergence(p, p);
    CHECK(kl.value == 0.0);
    CHECK_FALSE(kl.floored);
  }
  SUBCASE("surmise samples against the surmise") {
    const KlResult kl = kl_to_goe(r, 50);
    CHECK(kl.value < 0.005);
    CHECK(kl.value >= 0.0);
  }
  SUBCASE("uniform-level spectrum is far from GOE") {
    bhchaos::util::CounterRng u(5, 1);
    std::vector<double> levels(10000);
    for (auto& x : levels) x = u.uniform();
    std::sort(levels.begin(), levels.end());
    const auto clean = r_values(levels).clean();
    CHECK(kl_to_goe(clean, 50).value > 0.05);
    CHECK(r_values(levels).mean() == doctest::Approx(2 * std::log(2.0) - 1).epsilon(0.03));
  }
  SUBCASE("support mismatch") {
    const Histogram p = make_histogram(r, 50, 0.0, 1.0);
    const Histogram q = make_histogram(r, 40, 0.0, 1.0);
    CHECK_THROWS_AS(kl_divergence(p, q), DomainError);
  }
  SUBCASE("flooring is flagged") {
    const std::vector<double> a = {0.1, 0.2, 0.8};
    const std::vector<double> b = {0.1, 0.2, 0.3};
    const KlResult kl = kl_divergence(make_histogram(a, 4, 0, 1), make_histogram(b, 4, 0, 1));
    CHECK(kl.floored);
    CHECK(kl.floored_bins == 1);
  }
  SUBCASE("non-negative without flooring") {
    for (int trial = 0; trial < 20; ++trial) {
      bhchaos::util::CounterRng g(99, static_cast<std::uint64_t>(trial));
      std::vector<double> a(2000), b(2000);
      for (auto& x : a) x = g.uniform();
      for (auto& x : b) x = std::sqrt(g.uniform());
      const KlResult kl = kl_divergence(make_histogram(a, 20, 0, 1), make_histogram(b, 20, 0, 1));
      REQUIRE_FALSE(kl.floored);
      REQUIRE(kl.value > 0.0);
    }
  }
}
