#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numeric>

#include "bhchaos/errors.hpp"
#include "bhchaos/spectrum.hpp"
#include "support/oracles.hpp"

using namespace bhchaos;

namespace {

// Indices of the `count` levels nearest in scaled energy to `target`, ascending.
std::vector<double> nearest(const std::vector<double>& levels, double target, std::size_t count) {
  const double lo = levels.front();
  const double w = levels.back() - lo;
  std::vector<std::size_t> idx(levels.size());
  std::iota(idx.begin(), idx.end(), 0);
  std::stable_sort(idx.begin(), idx.end(), [&](auto a, auto b) {
    return std::abs((levels[a] - lo) / w - target) < std::abs((levels[b] - lo) / w - target);
  });
  idx.resize(count);
  std::sort(idx.begin(), idx.end());
  std::vector<double> out;
  for (auto i : idx) out.push_back(levels[i]);
  return out;
}

}  // namespace

TEST_CASE("one-by-one spectrum") {
  const auto h = assemble(ModelParams{2, 2, 0.3, 1.7, Parity::odd});
  const auto s = full_spectrum(h, true);
  REQUIRE(s.eigenvalues.size() == 1);
  CHECK(s.eigenvalues[0] == doctest::Approx(1.7));
  CHECK(std::abs((*s.eigenvectors)(0, 0)) == doctest::Approx(1.0));
  WindowOptions o;
  o.e_min = 1.7;
  o.e_max = 1.7;
  const auto w = window_spectrum(h, 0.5, 1, o);
  CHECK(w.eigenvalues.size() == 1);
}

TEST_CASE("full spectrum matches the parity oracle") {
  const ModelParams p = params_from_eta(4, 3, 0.25);
  const auto states = oracle::fock_states(4, 3);
  const auto want = oracle::sector_eigenvalues(oracle::full_hamiltonian(states, p.tunneling, 1.0),
                                               oracle::reflection(states), -1);
  const auto s = full_spectrum(assemble(p), true);
  REQUIRE(s.eigenvalues.size() == want.size());
  for (std::size_t i = 0; i < want.size(); ++i) CHECK(s.eigenvalues[i] == doctest::Approx(want[i]).epsilon(1e-12));
  CHECK(s.max_residual <= 1e-9 * std::max(std::abs(s.e_min), std::abs(s.e_max)));
  CHECK(s.first_index == std::size_t{0});
  CHECK(std::is_sorted(s.eigenvalues.begin(), s.eigenvalues.end()));
}

TEST_CASE("caption-size full spectrum") {
  const auto s = full_spectrum(assemble(params_from_eta(5, 17, 0.25)), false);
  CHECK(s.eigenvalues.size() == 2970);
  CHECK(std::isnan(s.max_residual));
  const auto eps = s.scaled();
  CHECK(eps.front() == 0.0);
  CHECK(eps.back() == 1.0);
}

TEST_CASE("dense limit") {
  CHECK_THROWS_AS(full_spectrum(assemble(params_from_eta(5, 6, 0.25)), false, DenseLimits{10}), CapacityError);
  CHECK_THROWS_AS(window_spectrum(assemble(params_from_eta(5, 6, 0.25)), 0.5, 0), DomainError);
  CHECK_THROWS_AS(window_spectrum(assemble(params_from_eta(5, 6, 0.25)), 1.5, 3), DomainError);
}

TEST_CASE("extremal eigenvalues") {
  const auto h = assemble(params_from_eta(6, 7, 0.2));
  REQUIRE(h.dimension() == 396);
  const auto full = full_spectrum(h, false);
  const auto [lo, hi] = extremal_eigenvalues(h);
  const double scale = std::max(std::abs(full.e_min), std::abs(full.e_max));
  CHECK(std::abs(lo - full.e_min) < 1e-9 * scale);
  CHECK(std::abs(hi - full.e_max) < 1e-9 * scale);
}

TEST_CASE("shift-invert window equals the nearest levels of the full solve") {
  const auto h = assemble(params_from_eta(5, 17, 0.25));
  const auto full = full_spectrum(h, false);
  const auto want = nearest(full.eigenvalues, 0.5, 100);
  WindowOptions o;
  o.method = WindowMethod::shift_invert;
  const auto w = window_spectrum(h, 0.5, 100, o);
  REQUIRE(w.eigenvalues.size() == 100);
  const double scale = std::max(std::abs(full.e_min), std::abs(full.e_max));
  for (std::size_t i = 0; i < 100; ++i) REQUIRE(std::abs(w.eigenvalues[i] - want[i]) < 1e-9 * scale);
  CHECK(w.max_residual <= 1e-9 * h.norm_bound());
  CHECK_FALSE(w.first_index.has_value());
  CHECK(w.solver.rfind("shift-invert", 0) == 0);
  // Returned vectors are orthonormal.
  const Eigen::MatrixXd g = w.eigenvectors->transpose() * *w.eigenvectors;
  CHECK((g - Eigen::MatrixXd::Identity(100, 100)).cwiseAbs().maxCoeff() < 1e-8);
}

TEST_CASE("window and full solve agree on small systems") {
  for (auto [L, N] : {std::pair{4, 6}, std::pair{6, 5}, std::pair{5, 9}, std::pair{8, 4}, std::pair{7, 7}}) {
    for (double eta_value : {0.05, 0.25, 20.0}) {
      const auto h = assemble(params_from_eta(L, N, eta_value));
      const auto full = full_spectrum(h, false);
      const std::size_t n = full.eigenvalues.size();
      const double scale = std::max(std::abs(full.e_min), std::abs(full.e_max));
      for (double target : {0.1, 0.5, 0.9}) {
        const std::size_t count = std::min<std::size_t>(n, 40);
        const auto want = nearest(full.eigenvalues, target, count);
        for (auto method : {WindowMethod::dense, WindowMethod::shift_invert}) {
          if (method == WindowMethod::shift_invert && 3 * count >= n) continue;
          WindowOptions o;
          o.method = method;
          const auto w = window_spectrum(h, target, count, o);
          CAPTURE(L);
          CAPTURE(N);
          CAPTURE(eta_value);
          CAPTURE(target);
          REQUIRE(w.eigenvalues.size() == count);
          for (std::size_t i = 0; i < count; ++i) REQUIRE(std::abs(w.eigenvalues[i] - want[i]) < 1e-9 * scale);
          REQUIRE(w.max_residual <= 1e-9 * h.norm_bound());
        }
      }
    }
  }
}

TEST_CASE("exhaustive window equals the full spectrum") {
  const auto h = assemble(params_from_eta(5, 6, 0.25));
  const auto full = full_spectrum(h, false);
  const auto w = window_spectrum(h, 0.5, full.eigenvalues.size());
  REQUIRE(w.eigenvalues.size() == full.eigenvalues.size());
  for (std::size_t i = 0; i < w.eigenvalues.size(); ++i) CHECK(w.eigenvalues[i] == full.eigenvalues[i]);
  CHECK(w.first_index == std::size_t{0});
}

TEST_CASE("edge windows are flagged") {
  const auto h = assemble(params_from_eta(5, 6, 0.25));
  const auto w = window_spectrum(h, 0.0, 10);
  CHECK_FALSE(w.warnings.empty());
  CHECK(w.first_index == std::size_t{0});
  const auto mid = window_spectrum(h, 0.5, 10);
  CHECK(mid.warnings.empty());
}

TEST_CASE("window method names") {
  for (auto m : {WindowMethod::automatic, WindowMethod::dense, WindowMethod::shift_invert})
    CHECK(parse_window_method(to_string(m)) == m);
  CHECK_THROWS(parse_window_method("arnoldi"));
}
