#pragma once

#include <cstddef>
#include <filesystem>
#include <optional>
#include <string>

#include <Eigen/SparseCore>

#include "bhchaos/fock_basis.hpp"

namespace bhchaos {

// Parameters of the open-chain Bose-Hubbard model
//   H = -J sum_j (a+_j a_{j+1} + h.c.) + U/2 sum_j n_j (n_j - 1).
struct ModelParams {
  int sites = 0;
  int particles = 0;
  double tunneling = 0.0;    // J
  double interaction = 1.0;  // U > 0
  // Reflection sector of the basis; nullopt selects the unsymmetrized Fock basis.
  std::optional<Parity> parity = Parity::odd;

  bool operator==(const ModelParams&) const = default;
};

// Scaled tunneling eta = J / (U N).
double eta(const ModelParams& params);

// Gauge U = 1, J = eta N.
ModelParams params_from_eta(int sites, int particles, double eta,
                            std::optional<Parity> parity = Parity::odd);

// Estimated centre of the crossover between interaction- and
// tunneling-dominated spectral widths, (1 - 1/min(N, L)) / 8.
double eta_star(int sites, int particles);

using RowSparse = Eigen::SparseMatrix<double, Eigen::RowMajor, int>;

// Symmetric Hamiltonian in a (sector) basis. Row-major with sorted columns.
struct SparseHamiltonian {
  ModelParams params;
  RowSparse matrix;
  std::string basis_digest;

  Eigen::Index dimension() const { return matrix.rows(); }
  // Largest absolute row sum, an upper bound on the spectral norm.
  double norm_bound() const;
  // SHA-256 over the stored sparsity pattern and values.
  std::string digest() const;
};

struct AssemblyOptions {
  unsigned threads = 1;
  // Sector dimension above which assembly is refused.
  std::size_t max_dimension = 20'000'000;
};

// Builds H directly in the representative basis; hops landing on a mirrored
// configuration pick up the sector sign. Only the upper triangle is computed
// and mirrored, so the stored matrix is exactly symmetric.
SparseHamiltonian assemble(const ModelParams& params, const FockBasis& basis,
                           const AssemblyOptions& options = {});

// Convenience: enumerate the basis that `params` names and assemble.
SparseHamiltonian assemble(const ModelParams& params, const BasisLimits& limits = {},
                           const AssemblyOptions& options = {});

struct ElementStats {
  double mean_diag = 0.0;
  double mean_abs_offdiag = 0.0;
  double std_abs_offdiag = 0.0;
  double distance = 0.0;  // (mean_diag - mean_abs_offdiag) / std_abs_offdiag
  std::size_t diag_count = 0;
  std::size_t offdiag_count = 0;
};

// Diagonal statistics over all diagonal entries; off-diagonal statistics over
// every stored nonzero |h_ij| with i != j (both triangles). Population
// standard deviation. DegenerateError when the off-diagonal spread vanishes.
ElementStats element_stats(const SparseHamiltonian& h);

enum class StatsBasis { sector, full_fock };

// Assembles in the requested basis and reduces. `sector` uses params.parity.
ElementStats element_stats(const ModelParams& params, StatsBasis basis,
                           const BasisLimits& limits = {});

// Coordinate text file "row col value" (0-based, both triangles, %.17g) plus a
// JSON sidecar `<path>.json` with the parameters and digests.
void export_coordinate(const SparseHamiltonian& h, const std::filesystem::path& path);

}  // namespace bhchaos
