#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <boost/multiprecision/cpp_int.hpp>

namespace bhchaos {

using BigInt = boost::multiprecision::cpp_int;
using Rational = boost::multiprecision::cpp_rational;

// Eigenvalue of the lattice reflection n_j -> n_{L+1-j}.
enum class Parity : int { even = 1, odd = -1 };

constexpr int sign(Parity p) { return static_cast<int>(p); }
std::string to_string(Parity p);
Parity parse_parity(const std::string& text);

enum class Boundary { hard_wall, periodic };

std::string to_string(Boundary b);

using Occupation = std::uint16_t;

// Occupation numbers n_1..n_L of one Fock configuration.
using FockState = std::vector<Occupation>;

inline constexpr std::uint64_t kDefaultMaxFullDimension = 50'000'000;

struct BasisLimits {
  // Cap on C(N+L-1, N), the number of Fock configurations scanned.
  std::uint64_t max_full_dimension = kDefaultMaxFullDimension;
};

// Ordered list of Fock configurations (optionally parity-symmetrized) with an
// O(L) index lookup. Immutable after construction.
//
// With a parity, each entry is the lexicographically larger member of a
// reflection pair and stands for (|n> + sign * |Pn>) / sqrt(2); palindromes
// stand for themselves and only exist in the even sector. Without a parity the
// basis is the plain Fock basis. Entries appear in descending lexicographic
// order, (N,0,...,0) first.
class FockBasis {
 public:
  struct Lookup {
    std::size_t index;
    // True when the queried configuration is the mirror of the stored
    // representative.
    bool reflected;
  };

  int sites() const { return sites_; }
  int particles() const { return particles_; }
  const std::optional<Parity>& parity() const { return parity_; }
  std::size_t size() const { return palindrome_.size(); }
  bool empty() const { return palindrome_.empty(); }

  std::span<const Occupation> state(std::size_t i) const {
    return {flat_.data() + i * static_cast<std::size_t>(sites_),
            static_cast<std::size_t>(sites_)};
  }
  bool is_palindrome(std::size_t i) const { return palindrome_[i] != 0; }

  // Index of this exact configuration if it is a stored entry.
  std::optional<std::size_t> index_of(std::span<const Occupation> occ) const;

  // Basis entry representing `occ` or its mirror image. Returns nullopt when
  // neither is stored (a palindrome in the odd sector).
  std::optional<Lookup> find(std::span<const Occupation> occ) const;

  // Position of `occ` in the descending lexicographic order of all Fock
  // configurations with the same (L, N).
  std::uint64_t full_rank(std::span<const Occupation> occ) const;

  // SHA-256 over (L, N, parity, ordered occupations).
  std::string digest() const;

 private:
  friend FockBasis build_basis(int, int, std::optional<Parity>, const BasisLimits&);

  int sites_ = 0;
  int particles_ = 0;
  std::optional<Parity> parity_;
  std::vector<Occupation> flat_;
  std::vector<std::uint8_t> palindrome_;
  std::vector<std::int32_t> index_by_rank_;
  // count_[l * (N + 1) + m] = C(m + l - 1, m): configurations of m bosons on l sites.
  std::vector<std::uint64_t> count_;
};

FockBasis build_basis(int sites, int particles, std::optional<Parity> parity,
                      const BasisLimits& limits);

// Parity-sector basis; for the odd sector its size equals dim_sector(L, N, odd).
FockBasis enumerate_basis(int sites, int particles, Parity parity,
                          const BasisLimits& limits = {});

// Unsymmetrized Fock basis of all C(N+L-1, N) configurations.
FockBasis enumerate_full_basis(int sites, int particles, const BasisLimits& limits = {});

FockState reflect(std::span<const Occupation> occ);
bool is_palindrome(std::span<const Occupation> occ);

BigInt binomial(std::int64_t n, std::int64_t k);

// C(N+L-1, N).
BigInt full_dimension(int sites, int particles);

// Number of palindromic Fock configurations (the Delta correction of the
// sector dimension), from the parity table of L and N.
BigInt palindrome_count(int sites, int particles);

// (S + sign * Delta) / 2.
BigInt dim_sector(int sites, int particles, Parity parity);

// Odd-sector basis states whose every occupation is 0 or 1 (zero interaction
// energy).
BigInt noninteracting_count(int sites, int particles);

// Ratio of non-interacting to interacting odd-sector basis states. Uses the
// closed form for even L, odd N, L >= N and exact counting otherwise. Throws
// DegenerateError when the interacting set is empty.
Rational ratio_R(int sites, int particles);

// [2 dim / C(L, N) - 1]^{-1}; DomainError unless L even, N odd, L >= N.
Rational ratio_R_closed_form(int sites, int particles);

// Brute-force count over an odd-sector basis.
Rational ratio_R_enumerated(const FockBasis& odd_basis);

// L / (N (N - 1)) - 1/2, the large-L expansion of ratio_R.
double ratio_R_large_L(int sites, int particles);

// Particle number on the isoline of constant ratio R.
double isoline_N_of_R(double ratio, int sites);

// Exponential decay of R along a trajectory of fixed density 0 < n < 1.
double asymptotic_R_fixed_density(double density, int sites);

// Average number of hopping moves available from a Fock state.
Rational connectivity(int sites, int particles, Boundary boundary);

// Exact average over `basis` of the number of nonzero single-hop moves
// (one per bond and direction) out of each stored configuration. On the full
// Fock basis this is the number of distinct hopping partners, except for the
// doubled bond of a periodic two-site ring.
Rational connectivity_enumerated(const FockBasis& basis, Boundary boundary);

// Leading growth of C(N+L-1, N) along a fixed density n = N / L:
// [n^{-1} (1+n)^{1+1/n}]^N / sqrt(N), returned as its natural logarithm.
double log_growth_fixed_density(double density, int particles);

// Leading growth N^{L-1} along fixed L, returned as its natural logarithm.
double log_growth_fixed_sites(int sites, int particles);

double to_double(const Rational& r);
std::string to_string(const Rational& r);

// CSV "index,occupations,palindrome" with space-separated occupations.
void export_basis_csv(const FockBasis& basis, const std::filesystem::path& path);

}  // namespace bhchaos
