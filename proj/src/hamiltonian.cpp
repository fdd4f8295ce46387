#include "bhchaos/hamiltonian.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <vector>

#include <nlohmann/json.hpp>

#include "bhchaos/errors.hpp"
#include "bhchaos/util/digest.hpp"
#include "bhchaos/util/parallel.hpp"

namespace bhchaos {

double eta(const ModelParams& params) {
  if (!(params.interaction > 0)) throw DomainError("eta requires U > 0");
  if (params.particles < 1) throw DomainError("eta requires N >= 1");
  return params.tunneling / (params.interaction * params.particles);
}

ModelParams params_from_eta(int sites, int particles, double eta_value,
                            std::optional<Parity> parity) {
  if (particles < 1) throw DomainError("params_from_eta requires N >= 1");
  ModelParams p;
  p.sites = sites;
  p.particles = particles;
  p.interaction = 1.0;
  p.tunneling = eta_value * particles;
  p.parity = parity;
  return p;
}

double eta_star(int sites, int particles) {
  if (sites < 1 || particles < 1) throw DomainError("eta_star requires L, N >= 1");
  return (1.0 - 1.0 / std::min(sites, particles)) / 8.0;
}

double SparseHamiltonian::norm_bound() const {
  double best = 0.0;
  for (Eigen::Index r = 0; r < matrix.outerSize(); ++r) {
    double row = 0.0;
    for (RowSparse::InnerIterator it(matrix, r); it; ++it) row += std::abs(it.value());
    best = std::max(best, row);
  }
  return best;
}

std::string SparseHamiltonian::digest() const {
  util::Sha256 h;
  h.update("sparse-hamiltonian-v1\n");
  h.update(basis_digest);
  const Eigen::Index n = matrix.rows();
  h.update_pod(n);
  for (Eigen::Index r = 0; r < matrix.outerSize(); ++r) {
    for (RowSparse::InnerIterator it(matrix, r); it; ++it) {
      const std::int64_t col = it.col();
      const double v = it.value();
      h.update_pod(col);
      h.update_pod(v);
    }
  }
  return h.hex();
}

namespace {

struct UpperEntry {
  int col;
  double value;
};

// Normalization of a stored entry written as c (|n> + s |Pn>).
double norm_factor(const FockBasis& basis, std::size_t i) {
  if (!basis.parity()) return 1.0;
  return basis.is_palindrome(i) ? 0.5 : 1.0 / std::sqrt(2.0);
}

void build_row(const ModelParams& params, const FockBasis& basis, std::size_t row,
               FockState& scratch, std::vector<UpperEntry>& out) {
  const auto occ = basis.state(row);
  const int L = basis.sites();
  const double J = params.tunneling;
  const double U = params.interaction;
  const int s = basis.parity() ? sign(*basis.parity()) : 1;
  const double self_norm = norm_factor(basis, row);

  std::map<int, double> acc;
  double interaction_energy = 0.0;
  for (int j = 0; j < L; ++j) interaction_energy += 0.5 * U * occ[j] * (occ[j] - 1.0);
  acc[static_cast<int>(row)] = interaction_energy;

  if (J != 0.0) {
    scratch.assign(occ.begin(), occ.end());
    for (int j = 0; j + 1 < L; ++j) {
      for (int dir = 0; dir < 2; ++dir) {
        const int from = dir == 0 ? j : j + 1;
        const int to = dir == 0 ? j + 1 : j;
        if (scratch[from] == 0) continue;
        const double amplitude =
            -J * std::sqrt(static_cast<double>(scratch[from]) * (scratch[to] + 1.0));
        --scratch[from];
        ++scratch[to];
        if (const auto hit = basis.find(scratch)) {
          if (hit->index >= row) {
            const double phase = hit->reflected ? s : 1;
            acc[static_cast<int>(hit->index)] +=
                amplitude * phase * self_norm / norm_factor(basis, hit->index);
          }
        }
        ++scratch[from];
        --scratch[to];
      }
    }
  }
  out.clear();
  for (const auto& [col, value] : acc) out.push_back({col, value});
}

}  // namespace

SparseHamiltonian assemble(const ModelParams& params, const FockBasis& basis,
                           const AssemblyOptions& options) {
  if (params.sites != basis.sites() || params.particles != basis.particles() ||
      params.parity != basis.parity())
    throw DimensionMismatch("basis (L, N, parity) does not match the model parameters");
  if (!(params.interaction > 0)) throw DomainError("interaction energy U must be positive");
  if (!std::isfinite(params.tunneling)) throw DomainError("tunneling J must be finite");
  if (basis.size() > options.max_dimension)
    throw CapacityError("sector dimension " + std::to_string(basis.size()) +
                        " exceeds the assembly cap " + std::to_string(options.max_dimension));

  const std::size_t n = basis.size();
  // Row blocks write disjoint slices of `rows`.
  std::vector<std::vector<UpperEntry>> rows(n);
  const std::size_t block = 4096;
  const std::size_t blocks = (n + block - 1) / block;
  util::parallel_for(blocks, options.threads, [&](std::size_t b) {
    FockState scratch;
    const std::size_t end = std::min(n, (b + 1) * block);
    for (std::size_t r = b * block; r < end; ++r) build_row(params, basis, r, scratch, rows[r]);
  });

  std::vector<Eigen::Triplet<double, int>> triplets;
  std::size_t upper = 0;
  for (const auto& r : rows) upper += r.size();
  triplets.reserve(2 * upper);
  for (std::size_t r = 0; r < n; ++r) {
    for (const auto& e : rows[r]) {
      triplets.emplace_back(static_cast<int>(r), e.col, e.value);
      if (e.col != static_cast<int>(r)) triplets.emplace_back(e.col, static_cast<int>(r), e.value);
    }
  }
  SparseHamiltonian h;
  h.params = params;
  h.basis_digest = basis.digest();
  h.matrix.resize(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
  h.matrix.setFromTriplets(triplets.begin(), triplets.end());
  h.matrix.makeCompressed();
  return h;
}

SparseHamiltonian assemble(const ModelParams& params, const BasisLimits& limits,
                           const AssemblyOptions& options) {
  const FockBasis basis = build_basis(params.sites, params.particles, params.parity, limits);
  return assemble(params, basis, options);
}

ElementStats element_stats(const SparseHamiltonian& h) {
  ElementStats st;
  double diag_sum = 0.0;
  double off_sum = 0.0;
  double off_sq = 0.0;
  for (Eigen::Index r = 0; r < h.matrix.outerSize(); ++r) {
    double d = 0.0;
    for (RowSparse::InnerIterator it(h.matrix, r); it; ++it) {
      if (it.col() == r) {
        d = it.value();
      } else if (it.value() != 0.0) {
        const double a = std::abs(it.value());
        off_sum += a;
        off_sq += a * a;
        ++st.offdiag_count;
      }
    }
    diag_sum += d;
    ++st.diag_count;
  }
  if (st.offdiag_count == 0) throw DegenerateError("no nonzero off-diagonal matrix elements");
  st.mean_diag = diag_sum / static_cast<double>(st.diag_count);
  st.mean_abs_offdiag = off_sum / static_cast<double>(st.offdiag_count);
  const double var =
      std::max(0.0, off_sq / static_cast<double>(st.offdiag_count) -
                        st.mean_abs_offdiag * st.mean_abs_offdiag);
  st.std_abs_offdiag = std::sqrt(var);
  if (!(st.std_abs_offdiag > 1e-14 * std::max(1.0, st.mean_abs_offdiag)))
    throw DegenerateError("off-diagonal matrix elements have zero spread");
  st.distance = (st.mean_diag - st.mean_abs_offdiag) / st.std_abs_offdiag;
  return st;
}

ElementStats element_stats(const ModelParams& params, StatsBasis which,
                           const BasisLimits& limits) {
  ModelParams p = params;
  if (which == StatsBasis::full_fock) p.parity = std::nullopt;
  return element_stats(assemble(p, limits));
}

void export_coordinate(const SparseHamiltonian& h, const std::filesystem::path& path) {
  {
    std::ofstream out(path);
    if (!out) throw Error("cannot write " + path.string());
    out << "row col value\n";
    char buf[64];
    for (Eigen::Index r = 0; r < h.matrix.outerSize(); ++r) {
      for (RowSparse::InnerIterator it(h.matrix, r); it; ++it) {
        std::snprintf(buf, sizeof buf, "%.17g", it.value());
        out << r << ' ' << it.col() << ' ' << buf << '\n';
      }
    }
  }
  nlohmann::json meta;
  meta["L"] = h.params.sites;
  meta["N"] = h.params.particles;
  meta["J"] = h.params.tunneling;
  meta["U"] = h.params.interaction;
  meta["eta"] = eta(h.params);
  meta["boundary"] = "hard-wall";
  meta["sector"] = h.params.parity ? to_string(*h.params.parity) : "none";
  meta["dimension"] = h.dimension();
  meta["nonzeros"] = h.matrix.nonZeros();
  meta["basis_digest"] = h.basis_digest;
  meta["matrix_digest"] = h.digest();
  std::ofstream side(path.string() + ".json");
  side << meta.dump(2) << '\n';
}

}  // namespace bhchaos
