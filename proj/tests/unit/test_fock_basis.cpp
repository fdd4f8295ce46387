#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <functional>
#include <set>
#include <vector>

#include "bhchaos/errors.hpp"
#include "bhchaos/fock_basis.hpp"

using namespace bhchaos;

namespace {

// Independent enumeration of all occupation vectors by recursion.
std::vector<FockState> all_states(int L, int N) {
  std::vector<FockState> out;
  FockState cur(static_cast<std::size_t>(L), 0);
  std::function<void(int, int)> rec = [&](int site, int left) {
    if (site == L - 1) {
      cur[static_cast<std::size_t>(site)] = static_cast<Occupation>(left);
      out.push_back(cur);
      return;
    }
    for (int k = left; k >= 0; --k) {
      cur[static_cast<std::size_t>(site)] = static_cast<Occupation>(k);
      rec(site + 1, left - k);
    }
  };
  rec(0, N);
  return out;
}

FockState mirror(const FockState& s) { return FockState(s.rbegin(), s.rend()); }

std::uint64_t brute_dim(int L, int N, Parity p) {
  std::uint64_t n = 0;
  for (const auto& s : all_states(L, N)) {
    const FockState m = mirror(s);
    if (s == m) {
      if (p == Parity::even) ++n;
    } else if (s > m) {
      ++n;
    }
  }
  return n;
}

std::uint64_t brute_palindromes(int L, int N) {
  std::uint64_t n = 0;
  for (const auto& s : all_states(L, N)) n += s == mirror(s);
  return n;
}

// Average number of distinct configurations reached by one hop.
Rational brute_connectivity(int L, int N, Boundary b) {
  const auto states = all_states(L, N);
  BigInt total = 0;
  for (const auto& s : states) {
    std::set<FockState> reached;
    const int bonds = b == Boundary::periodic ? L : L - 1;
    for (int j = 0; j < bonds; ++j) {
      const int k = (j + 1) % L;
      if (k == j) continue;
      for (auto [from, to] : {std::pair{j, k}, std::pair{k, j}}) {
        if (s[static_cast<std::size_t>(from)] == 0) continue;
        FockState t = s;
        --t[static_cast<std::size_t>(from)];
        ++t[static_cast<std::size_t>(to)];
        reached.insert(t);
      }
    }
    total += reached.size();
  }
  return Rational(total, BigInt(states.size()));
}

}  // namespace

TEST_CASE("small sector bases") {
  const FockBasis b21 = enumerate_basis(2, 1, Parity::odd);
  REQUIRE(b21.size() == 1);
  CHECK(std::vector<Occupation>(b21.state(0).begin(), b21.state(0).end()) == FockState{1, 0});

  const FockBasis b22 = enumerate_basis(2, 2, Parity::odd);
  REQUIRE(b22.size() == 1);
  CHECK(std::vector<Occupation>(b22.state(0).begin(), b22.state(0).end()) == FockState{2, 0});

  const FockBasis e22 = enumerate_basis(2, 2, Parity::even);
  CHECK(e22.size() == 2);
  int palindromes = 0;
  for (std::size_t i = 0; i < e22.size(); ++i) palindromes += e22.is_palindrome(i);
  CHECK(palindromes == 1);
}

TEST_CASE("caption-size basis") {
  const FockBasis b = enumerate_basis(5, 36, Parity::odd);
  CHECK(b.size() == 45600);
}

TEST_CASE("dim_sector caption values") {
  CHECK(dim_sector(5, 36, Parity::odd) == 45600);
  CHECK(dim_sector(5, 17, Parity::odd) == 2970);
  CHECK(dim_sector(5, 29, Parity::odd) == 20400);
  CHECK(dim_sector(5, 43, Parity::odd) == 89056);
  CHECK(dim_sector(18, 4, Parity::odd) == 2970);
  CHECK(dim_sector(26, 4, Parity::odd) == 11830);
  CHECK(dim_sector(44, 4, Parity::odd) == 89056);
  CHECK(dim_sector(9, 9, Parity::odd) == 12120);
  CHECK(dim_sector(9, 21, Parity::odd) == 2145572);
  CHECK(dim_sector(1, 7, Parity::odd) == 0);
  CHECK(dim_sector(1, 7, Parity::even) == 1);
}

TEST_CASE("sector dimensions add up to the Fock dimension") {
  for (int L = 1; L <= 50; ++L)
    for (int N = 0; N <= 50; ++N)
      REQUIRE(dim_sector(L, N, Parity::odd) + dim_sector(L, N, Parity::even) == full_dimension(L, N));
}

TEST_CASE("dimension and palindrome count against brute force") {
  for (int L = 1; L <= 8; ++L)
    for (int N = 0; N <= 8; ++N) {
      CAPTURE(L);
      CAPTURE(N);
      REQUIRE(dim_sector(L, N, Parity::odd) == brute_dim(L, N, Parity::odd));
      REQUIRE(dim_sector(L, N, Parity::even) == brute_dim(L, N, Parity::even));
      REQUIRE(palindrome_count(L, N) == brute_palindromes(L, N));
    }
}

TEST_CASE("enumerated sector sizes match dim_sector up to L, N = 12") {
  for (int L = 1; L <= 12; ++L)
    for (int N = 0; N <= 12; ++N) {
      CAPTURE(L);
      CAPTURE(N);
      const auto odd = enumerate_basis(L, N, Parity::odd);
      const auto even = enumerate_basis(L, N, Parity::even);
      REQUIRE(BigInt(odd.size()) == dim_sector(L, N, Parity::odd));
      REQUIRE(BigInt(even.size()) == dim_sector(L, N, Parity::even));
    }
}

TEST_CASE("palindrome count covers all four parity classes") {
  // even L even N, odd L even N, even L odd N, odd L odd N
  for (auto [L, N] : {std::pair{6, 4}, std::pair{7, 4}, std::pair{6, 5}, std::pair{7, 5}}) {
    CAPTURE(L);
    CAPTURE(N);
    CHECK(palindrome_count(L, N) == brute_palindromes(L, N));
  }
  CHECK(palindrome_count(6, 5) == 0);
}

TEST_CASE("basis structure") {
  SUBCASE("representatives, palindromes and index map") {
    for (int L = 1; L <= 7; ++L)
      for (int N = 0; N <= 7; ++N)
        for (Parity p : {Parity::odd, Parity::even}) {
          const FockBasis b = enumerate_basis(L, N, p);
          std::set<FockState> seen;
          for (std::size_t i = 0; i < b.size(); ++i) {
            const FockState s(b.state(i).begin(), b.state(i).end());
            const FockState m = mirror(s);
            REQUIRE(s >= m);
            if (p == Parity::odd) REQUIRE(s != m);
            REQUIRE(b.is_palindrome(i) == (s == m));
            REQUIRE(seen.insert(s).second);
            REQUIRE(b.index_of(s) == i);
            const auto hit = b.find(m);
            REQUIRE(hit.has_value());
            REQUIRE(hit->index == i);
            REQUIRE(hit->reflected == (s != m));
            int total = 0;
            for (auto n : s) total += n;
            REQUIRE(total == N);
          }
        }
  }
  SUBCASE("descending lexicographic order") {
    const FockBasis b = enumerate_basis(6, 5, Parity::odd);
    for (std::size_t i = 1; i < b.size(); ++i) {
      const FockState prev(b.state(i - 1).begin(), b.state(i - 1).end());
      const FockState cur(b.state(i).begin(), b.state(i).end());
      REQUIRE(prev > cur);
    }
  }
  SUBCASE("deterministic") {
    const FockBasis a = enumerate_basis(7, 6, Parity::odd);
    const FockBasis b = enumerate_basis(7, 6, Parity::odd);
    REQUIRE(a.size() == b.size());
    for (std::size_t i = 0; i < a.size(); ++i)
      REQUIRE(std::equal(a.state(i).begin(), a.state(i).end(), b.state(i).begin()));
    CHECK(a.digest() == b.digest());
    CHECK(a.digest() != enumerate_basis(7, 6, Parity::even).digest());
  }
  SUBCASE("full basis") {
    const FockBasis f = enumerate_full_basis(4, 3);
    CHECK(f.size() == 20);
    CHECK_FALSE(f.parity().has_value());
  }
}

TEST_CASE("capacity limit") {
  CHECK_THROWS_AS(enumerate_basis(20, 20, Parity::odd, BasisLimits{1000}), CapacityError);
  CHECK_THROWS_AS(enumerate_basis(0, 2, Parity::odd), DomainError);
}

TEST_CASE("basis CSV export") {
  const auto path = std::filesystem::temp_directory_path() / "bhchaos_basis_test.csv";
  export_basis_csv(enumerate_basis(3, 2, Parity::even), path);
  std::ifstream in(path);
  std::string header, first;
  std::getline(in, header);
  std::getline(in, first);
  CHECK(header == "index,occupations,palindrome");
  CHECK(first == "0,2 0 0,0");
  std::filesystem::remove(path);
}

TEST_CASE("connectivity closed forms") {
  CHECK(connectivity(2, 1, Boundary::hard_wall) == 1);
  CHECK(connectivity(7, 1, Boundary::periodic) == 2);
  CHECK(connectivity(6, 3, Boundary::hard_wall) == Rational(15, 4));
  CHECK(connectivity(5, 2, Boundary::hard_wall) == Rational(8, 3));
  CHECK(connectivity_enumerated(enumerate_full_basis(2, 1), Boundary::hard_wall) == 1);
  CHECK(connectivity_enumerated(enumerate_full_basis(6, 3), Boundary::hard_wall) == Rational(15, 4));
  CHECK(connectivity_enumerated(enumerate_full_basis(5, 2), Boundary::hard_wall) == Rational(8, 3));
}

TEST_CASE("connectivity equals the enumeration for L, N <= 10") {
  for (int L = 2; L <= 10; ++L)
    for (int N = 1; N <= 10; ++N) {
      CAPTURE(L);
      CAPTURE(N);
      const FockBasis full = enumerate_full_basis(L, N);
      REQUIRE(connectivity(L, N, Boundary::hard_wall) == connectivity_enumerated(full, Boundary::hard_wall));
      REQUIRE(connectivity(L, N, Boundary::periodic) == connectivity_enumerated(full, Boundary::periodic));
    }
}

TEST_CASE("connectivity enumeration against a distinct-state oracle") {
  for (int L = 3; L <= 7; ++L)
    for (int N = 1; N <= 6; ++N) {
      CAPTURE(L);
      CAPTURE(N);
      const FockBasis full = enumerate_full_basis(L, N);
      REQUIRE(connectivity_enumerated(full, Boundary::hard_wall) == brute_connectivity(L, N, Boundary::hard_wall));
      REQUIRE(connectivity_enumerated(full, Boundary::periodic) == brute_connectivity(L, N, Boundary::periodic));
    }
}

TEST_CASE("ratio R") {
  CHECK(ratio_R(6, 3) == Rational(5, 9));
  CHECK(ratio_R_enumerated(enumerate_basis(6, 3, Parity::odd)) == Rational(5, 9));
  CHECK(noninteracting_count(6, 3) == 10);
  CHECK(ratio_R(4, 5) == 0);
  CHECK_THROWS_AS(ratio_R(5, 1), DegenerateError);
  CHECK_THROWS_AS(ratio_R_closed_form(5, 3), DomainError);

  const double r100 = to_double(ratio_R(100, 3));
  CHECK(std::abs(r100 - (100.0 / 6.0 - 0.5)) < 1.0);
  CHECK(std::abs(r100 - ratio_R_large_L(100, 3)) * 100 < 10.0);
}

TEST_CASE("ratio R closed form equals enumeration") {
  for (int L = 2; L <= 14; L += 2)
    for (int N = 1; N <= L; N += 2) {
      CAPTURE(L);
      CAPTURE(N);
      const FockBasis odd = enumerate_basis(L, N, Parity::odd);
      if (BigInt(odd.size()) == noninteracting_count(L, N)) continue;  // interacting set empty
      REQUIRE(ratio_R_closed_form(L, N) == ratio_R_enumerated(odd));
      REQUIRE(ratio_R(L, N) == ratio_R_enumerated(odd));
    }
}

TEST_CASE("ratio R by exact counting outside the closed-form parities") {
  for (int L = 2; L <= 10; ++L)
    for (int N = 1; N <= 10; ++N) {
      if (L % 2 == 0 && N % 2 == 1 && L >= N) continue;
      const FockBasis odd = enumerate_basis(L, N, Parity::odd);
      if (odd.empty() || BigInt(odd.size()) == noninteracting_count(L, N)) continue;
      CAPTURE(L);
      CAPTURE(N);
      REQUIRE(ratio_R(L, N) == ratio_R_enumerated(odd));
    }
}

TEST_CASE("large-L expansion error is O(1/L)") {
  // L * error approaches a constant; its increments shrink.
  for (int N : {3, 5, 7}) {
    CAPTURE(N);
    double prev = 0.0;
    double prev_step = std::numeric_limits<double>::infinity();
    double bound = 0.0;
    for (int L = 100; L <= 2000; L += 100) {
      const double exact = to_double(ratio_R(L, N));
      const double scaled = std::abs(exact - ratio_R_large_L(L, N)) * L;
      CAPTURE(L);
      if (L > 100) {
        const double step = std::abs(scaled - prev);
        REQUIRE(step < prev_step + 1e-9);
        prev_step = step;
      }
      prev = scaled;
      bound = std::max(bound, scaled);
    }
    CHECK(bound < 50.0);
  }
}

TEST_CASE("isolines") {
  CHECK(isoline_N_of_R(0.0, 1) == doctest::Approx(2.0));
  const double n = isoline_N_of_R(1.5, 8);
  CHECK(n == doctest::Approx(0.5 + 0.5 * std::sqrt(17.0)).epsilon(1e-14));
  // The isoline inverts the expansion L / (N (N - 1)) - 1/2.
  CHECK(8.0 / (n * (n - 1)) - 0.5 == doctest::Approx(1.5).epsilon(1e-12));
  // Exact R brackets the isoline value between neighbouring integer N.
  CHECK(to_double(ratio_R(8, 2)) > 1.5);
  CHECK(to_double(ratio_R(8, 3)) < 1.5);
  CHECK(isoline_N_of_R(std::numeric_limits<double>::infinity(), 9) == 1.0);
  CHECK(isoline_N_of_R(1e12, 9) == doctest::Approx(1.0).epsilon(1e-5));
  CHECK_THROWS_AS(isoline_N_of_R(-0.1, 4), DomainError);
}

TEST_CASE("fixed-density asymptotics of R") {
  CHECK(asymptotic_R_fixed_density(1e-9, 10) == doctest::Approx(1.0).epsilon(1e-6));
  CHECK_THROWS_AS(asymptotic_R_fixed_density(1.0, 10), DomainError);
  CHECK_THROWS_AS(asymptotic_R_fixed_density(0.0, 10), DomainError);
  const double base = std::pow(1.5, 1.5) * std::pow(0.5, 0.5);
  CHECK(base == doctest::Approx(1.2990).epsilon(1e-4));
  CHECK(asymptotic_R_fixed_density(0.5, 10) ==
        doctest::Approx(std::sqrt(3.0) * std::pow(base, -10)).epsilon(1e-12));
  // Along N = L/2 the exact ratio approaches the asymptotic form.
  // The relative error crosses zero near L = 26 and then decays like 1/L.
  auto rel_err = [&](int L) { return std::abs(to_double(ratio_R(L, L / 2)) / asymptotic_R_fixed_density(0.5, L) - 1.0); };
  double prev = std::numeric_limits<double>::infinity();
  for (int L = 8; L <= 24; L += 4) {
    CAPTURE(L);
    REQUIRE(rel_err(L) < prev);
    prev = rel_err(L);
  }
  prev = std::numeric_limits<double>::infinity();
  for (int L = 36; L <= 80; L += 4) {
    CAPTURE(L);
    REQUIRE(rel_err(L) < prev);
    prev = rel_err(L);
  }
  CHECK(rel_err(40) < 0.002);
  CHECK(prev < 0.001);
}

TEST_CASE("Hilbert-space growth estimators converge") {
  // ln C(N/n + N - 1, N) minus the estimate tends to a constant at fixed n.
  double prev_step = std::numeric_limits<double>::infinity();
  double prev_gap = 0.0;
  for (int N = 20; N <= 320; N *= 2) {
    const int L = 2 * N;
    const double exact = std::log(to_double(Rational(full_dimension(L, N))));
    const double gap = exact - log_growth_fixed_density(0.5, N);
    if (N > 20) {
      const double step = std::abs(gap - prev_gap);
      REQUIRE(step < prev_step);
      prev_step = step;
    }
    prev_gap = gap;
  }
  // ln C(N + L - 1, N) - (L - 1) ln N -> -ln (L - 1)!.
  for (int L : {3, 5, 8}) {
    const double limit = -std::lgamma(static_cast<double>(L));
    double prev = std::numeric_limits<double>::infinity();
    for (int N = 100; N <= 100000; N *= 10) {
      const double exact = std::lgamma(N + L) - std::lgamma(N + 1) - std::lgamma(L);
      const double err = std::abs(exact - log_growth_fixed_sites(L, N) - limit);
      REQUIRE(err < prev);
      prev = err;
    }
    CHECK(prev < 1e-2);
  }
}
