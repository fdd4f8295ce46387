#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>
#include <string>

#include <Eigen/Dense>

#include "bhchaos/errors.hpp"
#include "bhchaos/hamiltonian.hpp"
#include "support/oracles.hpp"

using namespace bhchaos;

namespace {

Eigen::MatrixXd dense(const SparseHamiltonian& h) { return Eigen::MatrixXd(h.matrix); }

// <r|H|t> for the symmetrized basis vectors the library claims to use.
Eigen::MatrixXd projected(const FockBasis& basis, double J, double U) {
  const auto states = oracle::fock_states(basis.sites(), basis.particles());
  const Eigen::MatrixXd h = oracle::full_hamiltonian(states, J, U);
  std::map<oracle::State, Eigen::Index> index;
  for (std::size_t i = 0; i < states.size(); ++i) index[states[i]] = static_cast<Eigen::Index>(i);
  const int sign = basis.parity() ? bhchaos::sign(*basis.parity()) : 0;
  Eigen::MatrixXd v = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(states.size()),
                                            static_cast<Eigen::Index>(basis.size()));
  for (std::size_t k = 0; k < basis.size(); ++k) {
    const oracle::State s(basis.state(k).begin(), basis.state(k).end());
    const oracle::State m = oracle::mirror(s);
    const auto c = static_cast<Eigen::Index>(k);
    if (!basis.parity() || s == m) {
      v(index.at(s), c) = 1.0;
    } else {
      v(index.at(s), c) = 1.0 / std::sqrt(2.0);
      v(index.at(m), c) = sign / std::sqrt(2.0);
    }
  }
  return v.transpose() * h * v;
}

}  // namespace

TEST_CASE("two-site sectors") {
  const double J = 0.7;
  const double U = 1.3;
  ModelParams p{2, 1, J, U, Parity::odd};
  auto h = assemble(p);
  REQUIRE(h.dimension() == 1);
  CHECK(dense(h)(0, 0) == doctest::Approx(J).epsilon(1e-15));

  p.particles = 2;
  h = assemble(p);
  REQUIRE(h.dimension() == 1);
  CHECK(dense(h)(0, 0) == doctest::Approx(U).epsilon(1e-15));
}

TEST_CASE("matrix elements equal the projection of the full Hamiltonian") {
  for (int L = 2; L <= 6; ++L)
    for (int N = 1; N <= 5; ++N)
      for (auto parity : {std::optional<Parity>(Parity::odd), std::optional<Parity>(Parity::even),
                          std::optional<Parity>()}) {
        const FockBasis basis = build_basis(L, N, parity, BasisLimits{});
        if (basis.empty()) continue;
        const ModelParams p{L, N, 0.37 * N, 1.0, parity};
        const Eigen::MatrixXd got = dense(assemble(p, basis));
        const Eigen::MatrixXd want = projected(basis, p.tunneling, p.interaction);
        CAPTURE(L);
        CAPTURE(N);
        REQUIRE((got - want).cwiseAbs().maxCoeff() < 1e-12);
      }
}

TEST_CASE("odd-sector spectrum equals the odd half of the full spectrum") {
  const auto states = oracle::fock_states(4, 3);
  REQUIRE(states.size() == 20);
  const ModelParams p = params_from_eta(4, 3, 0.25);
  const Eigen::MatrixXd full = oracle::full_hamiltonian(states, p.tunneling, p.interaction);
  const auto want = oracle::sector_eigenvalues(full, oracle::reflection(states), -1);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(dense(assemble(p)), Eigen::EigenvaluesOnly);
  REQUIRE(static_cast<std::size_t>(es.eigenvalues().size()) == want.size());
  for (std::size_t i = 0; i < want.size(); ++i)
    CHECK(es.eigenvalues()[static_cast<Eigen::Index>(i)] == doctest::Approx(want[i]).epsilon(1e-12));
}

TEST_CASE("structural invariants") {
  for (auto [L, N] : {std::pair{6, 5}, std::pair{5, 8}, std::pair{9, 4}}) {
    CAPTURE(L);
    CAPTURE(N);
    const ModelParams p = params_from_eta(L, N, 0.3);
    const auto h = assemble(p);
    const RowSparse t = h.matrix.transpose();
    CHECK((h.matrix - t).norm() == 0.0);
    for (Eigen::Index r = 0; r < h.matrix.outerSize(); ++r) {
      const auto nnz = h.matrix.outerIndexPtr()[r + 1] - h.matrix.outerIndexPtr()[r];
      REQUIRE(nnz <= 2 * (L - 1) + 1);
    }
    // Columns sorted within each row.
    for (Eigen::Index r = 0; r < h.matrix.outerSize(); ++r) {
      int last = -1;
      for (RowSparse::InnerIterator it(h.matrix, r); it; ++it) {
        REQUIRE(it.col() > last);
        last = static_cast<int>(it.col());
      }
    }
  }
}

TEST_CASE("J = 0 gives the interaction diagonal") {
  const ModelParams p{6, 6, 0.0, 0.8, Parity::odd};
  const FockBasis b = build_basis(6, 6, Parity::odd, BasisLimits{});
  const Eigen::MatrixXd h = dense(assemble(p, b));
  for (std::size_t i = 0; i < b.size(); ++i) {
    double want = 0.0;
    for (auto n : b.state(i)) want += 0.4 * n * (n - 1.0);
    REQUIRE(h(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(i)) == doctest::Approx(want));
  }
  CHECK((h - Eigen::MatrixXd(h.diagonal().asDiagonal())).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("full-basis sparsity equals the connectivity") {
  for (int L = 2; L <= 7; ++L)
    for (int N = 1; N <= 6; ++N) {
      const ModelParams p{L, N, 1.0, 1.0, std::nullopt};
      const auto h = assemble(p);
      BigInt off = 0;
      for (Eigen::Index r = 0; r < h.matrix.outerSize(); ++r)
        for (RowSparse::InnerIterator it(h.matrix, r); it; ++it) off += it.col() != r;
      CAPTURE(L);
      CAPTURE(N);
      REQUIRE(Rational(off, BigInt(h.dimension())) == connectivity(L, N, Boundary::hard_wall));
    }
}

TEST_CASE("scaling covariance") {
  const ModelParams p{5, 5, 1.1, 0.9, Parity::odd};
  ModelParams q = p;
  q.tunneling *= 3.0;
  q.interaction *= 3.0;
  CHECK(eta(p) == doctest::Approx(eta(q)).epsilon(1e-15));
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> a(dense(assemble(p)), Eigen::EigenvaluesOnly);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> b(dense(assemble(q)), Eigen::EigenvaluesOnly);
  const auto& ea = a.eigenvalues();
  const auto& eb = b.eigenvalues();
  const double wa = ea[ea.size() - 1] - ea[0];
  const double wb = eb[eb.size() - 1] - eb[0];
  for (Eigen::Index i = 0; i < ea.size(); ++i) {
    REQUIRE(eb[i] == doctest::Approx(3.0 * ea[i]).epsilon(1e-12));
    REQUIRE((eb[i] - eb[0]) / wb == doctest::Approx((ea[i] - ea[0]) / wa).epsilon(1e-10));
  }
}

TEST_CASE("eta parametrization") {
  CHECK(eta(ModelParams{3, 40, 1.0, 0.1}) == doctest::Approx(0.25));
  const ModelParams p = params_from_eta(5, 17, 0.25);
  CHECK(p.interaction == 1.0);
  CHECK(p.tunneling == doctest::Approx(4.25));
  for (double x : {0.01, 0.25, 20.0}) CHECK(eta(params_from_eta(4, 7, x)) == doctest::Approx(x).epsilon(1e-15));
  CHECK(eta_star(5, 36) == doctest::Approx(0.1));
  CHECK(eta_star(1, 1) == 0.0);
  CHECK(eta_star(100000, 100000) == doctest::Approx(0.125).epsilon(1e-4));
  CHECK_THROWS_AS(eta(ModelParams{3, 4, 1.0, 0.0}), DomainError);
}

TEST_CASE("assembly errors") {
  const FockBasis b = build_basis(4, 3, Parity::odd, BasisLimits{});
  CHECK_THROWS_AS(assemble(params_from_eta(4, 4, 0.2), b), DimensionMismatch);
  CHECK_THROWS_AS(assemble(params_from_eta(4, 3, 0.2, Parity::even), b), DimensionMismatch);
  CHECK_THROWS_AS(assemble(params_from_eta(4, 3, 0.2), b, AssemblyOptions{1, 3}), CapacityError);
}

TEST_CASE("parallel assembly is deterministic") {
  const ModelParams p = params_from_eta(7, 9, 0.25);
  const FockBasis b = build_basis(7, 9, Parity::odd, BasisLimits{});
  const auto a = assemble(p, b, AssemblyOptions{1});
  const auto c = assemble(p, b, AssemblyOptions{3});
  CHECK(a.digest() == c.digest());
  CHECK(a.basis_digest == b.digest());
}

TEST_CASE("element statistics") {
  CHECK_THROWS_AS(element_stats(assemble(ModelParams{2, 1, 1.0, 1.0, Parity::odd})), DegenerateError);

  const auto h = assemble(params_from_eta(4, 3, 0.25));
  const ElementStats st = element_stats(h);
  const Eigen::MatrixXd d = dense(h);
  double diag = 0.0;
  std::vector<double> off;
  for (Eigen::Index i = 0; i < d.rows(); ++i) {
    diag += d(i, i);
    for (Eigen::Index j = 0; j < d.cols(); ++j)
      if (i != j && d(i, j) != 0.0) off.push_back(std::abs(d(i, j)));
  }
  diag /= static_cast<double>(d.rows());
  const double m = oracle::mean(off);
  double ss = 0.0;
  for (double x : off) ss += (x - m) * (x - m);
  const double sd = std::sqrt(ss / static_cast<double>(off.size()));
  CHECK(st.mean_diag == doctest::Approx(diag).epsilon(1e-14));
  CHECK(st.mean_abs_offdiag == doctest::Approx(m).epsilon(1e-14));
  CHECK(st.std_abs_offdiag == doctest::Approx(sd).epsilon(1e-12));
  CHECK(st.distance == doctest::Approx((diag - m) / sd).epsilon(1e-12));
  CHECK(st.distance == doctest::Approx((st.mean_diag - st.mean_abs_offdiag) / st.std_abs_offdiag));
  CHECK(st.offdiag_count == off.size());

  const double dense_filling = element_stats(params_from_eta(4, 4, 0.25), StatsBasis::sector).distance;
  const double sparse_filling = element_stats(params_from_eta(8, 2, 0.25), StatsBasis::sector).distance;
  CHECK(dense_filling > sparse_filling);

  const ElementStats full = element_stats(params_from_eta(4, 3, 0.25), StatsBasis::full_fock);
  CHECK(full.diag_count == 20);
}

TEST_CASE("coordinate export") {
  const auto path = std::filesystem::temp_directory_path() / "bhchaos_h_test.coo";
  const auto h = assemble(params_from_eta(4, 3, 0.25));
  export_coordinate(h, path);
  std::ifstream in(path);
  std::string header;
  std::getline(in, header);
  CHECK(header == "row col value");
  Eigen::MatrixXd back = Eigen::MatrixXd::Zero(h.dimension(), h.dimension());
  long r = 0, c = 0;
  double v = 0;
  std::size_t n = 0;
  while (in >> r >> c >> v) {
    back(r, c) = v;
    ++n;
  }
  CHECK(n == static_cast<std::size_t>(h.matrix.nonZeros()));
  CHECK((back - dense(h)).cwiseAbs().maxCoeff() == 0.0);
  CHECK(std::filesystem::exists(path.string() + ".json"));
  std::filesystem::remove(path);
  std::filesystem::remove(path.string() + ".json");
}
