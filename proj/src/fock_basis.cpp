#include "bhchaos/fock_basis.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>

#include "bhchaos/errors.hpp"
#include "bhchaos/util/digest.hpp"

namespace bhchaos {

std::string to_string(Parity p) { return p == Parity::even ? "even" : "odd"; }

Parity parse_parity(const std::string& text) {
  if (text == "odd" || text == "-1" || text == "-" || text == "minus") return Parity::odd;
  if (text == "even" || text == "+1" || text == "1" || text == "+" || text == "plus")
    return Parity::even;
  throw ConfigError("unknown parity sector '" + text + "' (expected odd or even)");
}

std::string to_string(Boundary b) { return b == Boundary::hard_wall ? "hard-wall" : "periodic"; }

namespace {

void check_system(int sites, int particles) {
  if (sites < 1) throw DomainError("number of sites must be >= 1");
  if (particles < 0) throw DomainError("particle number must be >= 0");
  if (particles > std::numeric_limits<Occupation>::max())
    throw CapacityError("particle number exceeds the occupation type range");
}

// Index of rank in descending lexicographic order; walks the sites backwards
// when `mirrored` so that the rank of the reflection needs no copy.
std::uint64_t rank_of(std::span<const Occupation> occ, int particles,
                      const std::vector<std::uint64_t>& count, bool mirrored) {
  const int L = static_cast<int>(occ.size());
  const std::size_t stride = static_cast<std::size_t>(particles) + 1;
  std::uint64_t rank = 0;
  int remaining = particles;
  for (int i = 0; i + 1 < L; ++i) {
    const int n = occ[mirrored ? L - 1 - i : i];
    const int above = remaining - n - 1;
    if (above >= 0) rank += count[static_cast<std::size_t>(L - i) * stride + above];
    remaining -= n;
  }
  return rank;
}

}  // namespace

FockState reflect(std::span<const Occupation> occ) { return FockState(occ.rbegin(), occ.rend()); }

bool is_palindrome(std::span<const Occupation> occ) {
  return std::equal(occ.begin(), occ.begin() + occ.size() / 2, occ.rbegin());
}

FockBasis build_basis(int sites, int particles, std::optional<Parity> parity,
                      const BasisLimits& limits) {
  check_system(sites, particles);
  const BigInt total = full_dimension(sites, particles);
  if (total > limits.max_full_dimension ||
      total > std::numeric_limits<std::int32_t>::max())
    throw CapacityError("Fock dimension " + total.str() + " of L=" + std::to_string(sites) +
                        ", N=" + std::to_string(particles) + " exceeds the configured limit " +
                        std::to_string(limits.max_full_dimension));
  const auto full = static_cast<std::uint64_t>(total);

  FockBasis b;
  b.sites_ = sites;
  b.particles_ = particles;
  b.parity_ = parity;

  const std::size_t stride = static_cast<std::size_t>(particles) + 1;
  b.count_.assign(static_cast<std::size_t>(sites + 1) * stride, 0);
  b.count_[0] = 1;
  for (int l = 1; l <= sites; ++l)
    for (int m = 0; m <= particles; ++m)
      b.count_[l * stride + m] =
          b.count_[(l - 1) * stride + m] + (m > 0 ? b.count_[l * stride + m - 1] : 0);

  b.index_by_rank_.assign(full, -1);
  const auto expected = parity ? static_cast<std::size_t>(dim_sector(sites, particles, *parity))
                               : static_cast<std::size_t>(full);
  b.flat_.reserve(expected * static_cast<std::size_t>(sites));
  b.palindrome_.reserve(expected);

  FockState occ(static_cast<std::size_t>(sites), 0);
  occ[0] = static_cast<Occupation>(particles);
  for (std::uint64_t rank = 0;; ++rank) {
    bool keep = true;
    bool pal = false;
    if (parity) {
      const bool reflected_smaller = std::lexicographical_compare(occ.rbegin(), occ.rend(),
                                                                  occ.begin(), occ.end());
      pal = !reflected_smaller && is_palindrome(occ);
      keep = reflected_smaller || (pal && *parity == Parity::even);
    } else {
      pal = is_palindrome(occ);
    }
    if (keep) {
      b.index_by_rank_[rank] = static_cast<std::int32_t>(b.palindrome_.size());
      b.flat_.insert(b.flat_.end(), occ.begin(), occ.end());
      b.palindrome_.push_back(pal ? 1 : 0);
    }

    // Next configuration in descending lexicographic order: take one boson
    // from the last populated site before the end and pile everything to its
    // right onto the following site.
    int k = sites - 2;
    while (k >= 0 && occ[k] == 0) --k;
    if (k < 0) break;
    const int tail = occ[sites - 1];
    occ[sites - 1] = 0;
    --occ[k];
    occ[k + 1] = static_cast<Occupation>(tail + 1);
  }
  return b;
}

FockBasis enumerate_basis(int sites, int particles, Parity parity, const BasisLimits& limits) {
  return build_basis(sites, particles, parity, limits);
}

FockBasis enumerate_full_basis(int sites, int particles, const BasisLimits& limits) {
  return build_basis(sites, particles, std::nullopt, limits);
}

std::uint64_t FockBasis::full_rank(std::span<const Occupation> occ) const {
  return rank_of(occ, particles_, count_, false);
}

std::optional<std::size_t> FockBasis::index_of(std::span<const Occupation> occ) const {
  if (occ.size() != static_cast<std::size_t>(sites_)) return std::nullopt;
  int total = 0;
  for (auto n : occ) total += n;
  if (total != particles_) return std::nullopt;
  const auto idx = index_by_rank_[rank_of(occ, particles_, count_, false)];
  if (idx < 0) return std::nullopt;
  return static_cast<std::size_t>(idx);
}

std::optional<FockBasis::Lookup> FockBasis::find(std::span<const Occupation> occ) const {
  const auto direct = index_by_rank_[rank_of(occ, particles_, count_, false)];
  if (direct >= 0) return Lookup{static_cast<std::size_t>(direct), false};
  if (!parity_) return std::nullopt;
  const auto mirrored = index_by_rank_[rank_of(occ, particles_, count_, true)];
  if (mirrored >= 0) return Lookup{static_cast<std::size_t>(mirrored), true};
  return std::nullopt;
}

std::string FockBasis::digest() const {
  util::Sha256 h;
  std::ostringstream header;
  header << "fock-basis-v1 L=" << sites_ << " N=" << particles_
         << " parity=" << (parity_ ? to_string(*parity_) : std::string("none")) << '\n';
  h.update(header.str());
  h.update(std::as_bytes(std::span(flat_)));
  return h.hex();
}

// ---------------------------------------------------------------------------
// Exact combinatorics

BigInt binomial(std::int64_t n, std::int64_t k) {
  if (k < 0 || n < 0 || k > n) return 0;
  k = std::min(k, n - k);
  BigInt result = 1;
  for (std::int64_t i = 1; i <= k; ++i) {
    result *= n - k + i;
    result /= i;
  }
  return result;
}

BigInt full_dimension(int sites, int particles) {
  check_system(sites, particles);
  return binomial(particles + sites - 1, particles);
}

BigInt palindrome_count(int sites, int particles) {
  check_system(sites, particles);
  const int L = sites;
  const int N = particles;
  const bool even_L = L % 2 == 0;
  const bool even_N = N % 2 == 0;
  if (even_N && even_L) return binomial((N + L - 2) / 2, N / 2);
  if (even_N) return binomial((N + L - 1) / 2, N / 2);
  if (even_L) return 0;
  return binomial((N + L - 2) / 2, (N - 1) / 2);
}

BigInt dim_sector(int sites, int particles, Parity parity) {
  const BigInt s = full_dimension(sites, particles);
  const BigInt delta = palindrome_count(sites, particles);
  if (parity == Parity::odd) return BigInt((s - delta) / 2);
  return BigInt((s + delta) / 2);
}

BigInt noninteracting_count(int sites, int particles) {
  check_system(sites, particles);
  const int L = sites;
  const int N = particles;
  // Binary strings with N ones, minus the palindromic ones, paired by reflection.
  BigInt palindromic = 0;
  if (L % 2 == 0) {
    palindromic = N % 2 == 0 ? binomial(L / 2, N / 2) : BigInt(0);
  } else {
    palindromic = binomial((L - 1) / 2, (N - N % 2) / 2);
  }
  return (binomial(L, N) - palindromic) / 2;
}

Rational ratio_R_closed_form(int sites, int particles) {
  check_system(sites, particles);
  if (sites % 2 != 0 || particles % 2 == 0 || sites < particles)
    throw DomainError("closed-form R requires even L, odd N and L >= N");
  const Rational dim(dim_sector(sites, particles, Parity::odd));
  const Rational inv = 2 * dim / Rational(binomial(sites, particles)) - 1;
  if (inv == 0) throw DegenerateError("no interacting configurations: R diverges");
  return 1 / inv;
}

Rational ratio_R(int sites, int particles) {
  check_system(sites, particles);
  if (particles < 1) throw DomainError("ratio_R requires N >= 1");
  if (sites % 2 == 0 && particles % 2 == 1 && sites >= particles)
    return ratio_R_closed_form(sites, particles);
  const BigInt free = noninteracting_count(sites, particles);
  const BigInt interacting = dim_sector(sites, particles, Parity::odd) - free;
  if (interacting == 0)
    throw DegenerateError("no interacting configurations for L=" + std::to_string(sites) +
                          ", N=" + std::to_string(particles) + ": R diverges");
  return Rational(free, interacting);
}

Rational ratio_R_enumerated(const FockBasis& odd_basis) {
  if (odd_basis.parity() != Parity::odd)
    throw DomainError("ratio_R_enumerated expects an odd-sector basis");
  std::uint64_t free = 0;
  for (std::size_t i = 0; i < odd_basis.size(); ++i) {
    const auto s = odd_basis.state(i);
    if (std::all_of(s.begin(), s.end(), [](Occupation n) { return n <= 1; })) ++free;
  }
  const std::uint64_t interacting = odd_basis.size() - free;
  if (interacting == 0) throw DegenerateError("no interacting configurations: R diverges");
  return Rational(BigInt(free), BigInt(interacting));
}

double ratio_R_large_L(int sites, int particles) {
  if (particles < 2) throw DomainError("large-L expansion of R requires N >= 2");
  return static_cast<double>(sites) / (static_cast<double>(particles) * (particles - 1)) - 0.5;
}

double isoline_N_of_R(double ratio, int sites) {
  if (!(ratio >= 0)) throw DomainError("isoline requires R >= 0");
  if (sites < 1) throw DomainError("isoline requires L >= 1");
  if (std::isinf(ratio)) return 1.0;
  return 0.5 + 0.5 * std::sqrt(1.0 + 8.0 * sites / (1.0 + 2.0 * ratio));
}

double asymptotic_R_fixed_density(double density, int sites) {
  if (!(density > 0 && density < 1)) throw DomainError("fixed-density asymptote requires 0 < n < 1");
  if (sites < 1) throw DomainError("fixed-density asymptote requires L >= 1");
  const double n = density;
  const double log_base = (1 + n) * std::log1p(n) + (1 - n) * std::log1p(-n);
  return std::sqrt((1 + n) / (1 - n)) * std::exp(-sites * log_base);
}

Rational connectivity(int sites, int particles, Boundary boundary) {
  if (sites < 2 || particles < 1) throw DomainError("connectivity requires L >= 2 and N >= 1");
  const BigInt L = sites;
  const BigInt N = particles;
  const BigInt bonds_factor = boundary == Boundary::periodic ? L : L - 1;
  return Rational(2 * N * bonds_factor, N + L - 1);
}

Rational connectivity_enumerated(const FockBasis& basis, Boundary boundary) {
  if (basis.empty()) throw DegenerateError("connectivity of an empty basis");
  const int L = basis.sites();
  const int bonds = boundary == Boundary::periodic ? L : L - 1;
  std::uint64_t moves = 0;
  for (std::size_t i = 0; i < basis.size(); ++i) {
    const auto s = basis.state(i);
    for (int b = 0; b < bonds; ++b) {
      const int right = (b + 1) % L;
      if (right == b) continue;
      moves += (s[b] > 0) + (s[right] > 0);
    }
  }
  return Rational(BigInt(moves), BigInt(basis.size()));
}

double log_growth_fixed_density(double density, int particles) {
  if (!(density > 0)) throw DomainError("density must be positive");
  if (particles < 1) throw DomainError("growth estimate requires N >= 1");
  const double n = density;
  const double log_base = -std::log(n) + (1 + 1 / n) * std::log1p(n);
  return particles * log_base - 0.5 * std::log(static_cast<double>(particles));
}

double log_growth_fixed_sites(int sites, int particles) {
  if (sites < 1 || particles < 1) throw DomainError("growth estimate requires L, N >= 1");
  return (sites - 1) * std::log(static_cast<double>(particles));
}

double to_double(const Rational& r) { return static_cast<double>(r); }

std::string to_string(const Rational& r) {
  const BigInt num = boost::multiprecision::numerator(r);
  const BigInt den = boost::multiprecision::denominator(r);
  if (den == 1) return num.str();
  return num.str() + "/" + den.str();
}

void export_basis_csv(const FockBasis& basis, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write " + path.string());
  out << "index,occupations,palindrome\n";
  for (std::size_t i = 0; i < basis.size(); ++i) {
    out << i << ',';
    const auto occ = basis.state(i);
    for (std::size_t j = 0; j < occ.size(); ++j) out << (j ? " " : "") << occ[j];
    out << ',' << (basis.is_palindrome(i) ? 1 : 0) << '\n';
  }
}

}  // namespace bhchaos
