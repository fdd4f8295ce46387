#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "bhchaos/hamiltonian.hpp"

namespace bhchaos {

// Eigenvalues in ascending order, optionally with eigenvectors (one column per
// eigenvalue, in the sector basis).
struct SpectrumResult {
  ModelParams params;
  std::vector<double> eigenvalues;
  std::optional<Eigen::MatrixXd> eigenvectors;
  double e_min = 0.0;
  double e_max = 0.0;
  // Position of eigenvalues[0] in the full ascending spectrum; unknown after
  // shift-invert.
  std::optional<std::size_t> first_index;
  std::size_t dimension = 0;
  std::string solver;
  // max ||H v - lambda v|| over the returned pairs; NaN without vectors.
  double max_residual = 0.0;
  std::vector<std::string> warnings;

  // (E - E_min) / (E_max - E_min) per eigenvalue.
  std::vector<double> scaled() const;
};

struct DenseLimits {
  std::size_t max_dimension = 8000;
};

// Dense symmetric solve of the whole spectrum.
SpectrumResult full_spectrum(const SparseHamiltonian& h, bool with_vectors,
                             const DenseLimits& limits = {});

struct ExtremalOptions {
  double tolerance = 1e-12;  // relative to the norm bound
  std::size_t max_iterations = 600;
  std::uint64_t seed = 0x5eed;
};

// Lowest and highest eigenvalue by Lanczos with full reorthogonalization.
std::pair<double, double> extremal_eigenvalues(const SparseHamiltonian& h,
                                               const ExtremalOptions& options = {});

enum class WindowMethod { automatic, dense, shift_invert };

struct WindowOptions {
  WindowMethod method = WindowMethod::automatic;
  // automatic: dense below this dimension, shift-invert above.
  std::size_t dense_threshold = 4000;
  bool with_vectors = true;
  // Spectral bounds; computed when absent.
  std::optional<double> e_min;
  std::optional<double> e_max;
  // Per-pair residual bound, relative to the norm bound of H.
  double residual_tolerance = 1e-9;
  std::size_t max_krylov = 0;  // 0 = automatic
  std::uint64_t seed = 0x5eed;
  DenseLimits dense;
};

// The `count` eigenpairs closest in scaled energy to `target_eps`, ascending.
SpectrumResult window_spectrum(const SparseHamiltonian& h, double target_eps, std::size_t count,
                               const WindowOptions& options = {});

// CSV "index,eigenvalue,eps" plus `<path>.json` with parameters, solver,
// residual and the digest of H. Index is empty when unknown.
void export_spectrum(const SpectrumResult& s, const std::string& hamiltonian_digest,
                     const std::filesystem::path& path);

std::string to_string(WindowMethod m);
WindowMethod parse_window_method(const std::string& text);

}  // namespace bhchaos
