#include "bhchaos/spectrum.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <numeric>
#include <random>

#include <Eigen/SparseLU>
#ifdef BHCHAOS_HAVE_UMFPACK
#include <Eigen/UmfPackSupport>
#endif

#include <nlohmann/json.hpp>

#include "bhchaos/errors.hpp"

namespace bhchaos {

using Eigen::Index;
using Eigen::MatrixXd;
using Eigen::VectorXd;

std::vector<double> SpectrumResult::scaled() const {
  const double width = e_max - e_min;
  if (!(width > 0)) throw DegenerateError("spectrum has zero width");
  std::vector<double> out(eigenvalues.size());
  for (std::size_t i = 0; i < eigenvalues.size(); ++i)
    out[i] = (eigenvalues[i] - e_min) / width;
  return out;
}

std::string to_string(WindowMethod m) {
  switch (m) {
    case WindowMethod::automatic: return "automatic";
    case WindowMethod::dense: return "dense";
    case WindowMethod::shift_invert: return "shift-invert";
  }
  return "automatic";
}

WindowMethod parse_window_method(const std::string& text) {
  if (text == "automatic" || text == "auto") return WindowMethod::automatic;
  if (text == "dense") return WindowMethod::dense;
  if (text == "shift-invert" || text == "shift_invert") return WindowMethod::shift_invert;
  throw ConfigError("unknown window solver '" + text + "'");
}

namespace {

double max_residual(const SparseHamiltonian& h, const std::vector<double>& values,
                    const MatrixXd& vectors) {
  double worst = 0.0;
  for (Index k = 0; k < vectors.cols(); ++k) {
    const VectorXd r = h.matrix * vectors.col(k) - values[static_cast<std::size_t>(k)] * vectors.col(k);
    worst = std::max(worst, r.norm());
  }
  return worst;
}

VectorXd random_unit(Index n, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  VectorXd v(n);
  for (Index i = 0; i < n; ++i) v[i] = u(rng);
  return v.normalized();
}

// Classical Gram-Schmidt against the first `cols` columns, applied twice.
void orthogonalize(const MatrixXd& basis, Index cols, VectorXd& w) {
  if (cols == 0) return;
  for (int pass = 0; pass < 2; ++pass) {
    const VectorXd c = basis.leftCols(cols).transpose() * w;
    w.noalias() -= basis.leftCols(cols) * c;
  }
}

// Plain Lanczos recursion with full reorthogonalization. `apply` maps x to
// A x for a symmetric operator A. After each step `converged(m)` is asked
// whether to stop.
template <class Apply, class Done>
void lanczos(Index n, Index max_steps, std::uint64_t seed, Apply&& apply, Done&& done,
             MatrixXd& basis, std::vector<double>& alpha, std::vector<double>& beta) {
  std::mt19937_64 rng(seed);
  basis.resize(n, max_steps);
  alpha.clear();
  beta.clear();
  basis.col(0) = random_unit(n, rng);
  VectorXd w(n);
  for (Index j = 0; j < max_steps; ++j) {
    apply(basis.col(j), w);
    const double a = basis.col(j).dot(w);
    alpha.push_back(a);
    orthogonalize(basis, j + 1, w);
    double b = w.norm();
    if (j + 1 == max_steps) {
      beta.push_back(b);
      break;
    }
    if (b < 1e-13 * std::max(1.0, std::abs(a))) {
      // Invariant subspace reached: continue from a fresh orthogonal direction.
      w = random_unit(n, rng);
      orthogonalize(basis, j + 1, w);
      w.normalize();
      b = 0.0;
      basis.col(j + 1) = w;
    } else {
      basis.col(j + 1) = w / b;
    }
    beta.push_back(b);
    if (done(j + 1)) break;
  }
}

struct Ritz {
  VectorXd values;
  MatrixXd vectors;
};

Ritz tridiagonal_eigen(const std::vector<double>& alpha, const std::vector<double>& beta, Index m) {
  VectorXd d(m);
  VectorXd e(std::max<Index>(m - 1, 0));
  for (Index i = 0; i < m; ++i) d[i] = alpha[static_cast<std::size_t>(i)];
  for (Index i = 0; i + 1 < m; ++i) e[i] = beta[static_cast<std::size_t>(i)];
  Eigen::SelfAdjointEigenSolver<MatrixXd> es;
  es.computeFromTridiagonal(d, e, Eigen::ComputeEigenvectors);
  if (es.info() != Eigen::Success) throw ConvergenceError("tridiagonal eigensolver failed");
  return {es.eigenvalues(), es.eigenvectors()};
}

// Indices of the `count` values closest to `target`, as a contiguous,
// ascending block of `sorted`.
std::pair<std::size_t, std::size_t> closest_block(const std::vector<double>& sorted, double target,
                                                  std::size_t count) {
  const std::size_t n = sorted.size();
  std::size_t lo = static_cast<std::size_t>(
      std::lower_bound(sorted.begin(), sorted.end(), target) - sorted.begin());
  std::size_t hi = lo;  // block is [lo, hi)
  while (hi - lo < count) {
    if (lo == 0) {
      ++hi;
    } else if (hi == n) {
      --lo;
    } else if (target - sorted[lo - 1] <= sorted[hi] - target) {
      --lo;
    } else {
      ++hi;
    }
  }
  return {lo, hi};
}

void flag_edges(SpectrumResult& out, std::size_t requested) {
  if (out.eigenvalues.empty()) return;
  const double width = out.e_max - out.e_min;
  const double tol = 1e-9 * std::max(1.0, std::abs(width));
  if (requested > out.eigenvalues.size())
    out.warnings.push_back("window truncated: requested " + std::to_string(requested) +
                           " states, sector has " + std::to_string(out.eigenvalues.size()));
  if (out.eigenvalues.front() <= out.e_min + tol || out.eigenvalues.back() >= out.e_max - tol)
    out.warnings.push_back("window abuts the spectrum edge");
}

SpectrumResult dense_window(const SparseHamiltonian& h, double target_eps, std::size_t count,
                            const WindowOptions& options) {
  SpectrumResult full = full_spectrum(h, options.with_vectors, options.dense);
  SpectrumResult out;
  out.params = h.params;
  out.dimension = full.dimension;
  out.e_min = options.e_min.value_or(full.e_min);
  out.e_max = options.e_max.value_or(full.e_max);
  out.solver = "dense-window";
  const std::size_t k = std::min(count, full.eigenvalues.size());
  const double target = out.e_min + target_eps * (out.e_max - out.e_min);
  const auto [lo, hi] = closest_block(full.eigenvalues, target, k);
  out.eigenvalues.assign(full.eigenvalues.begin() + static_cast<std::ptrdiff_t>(lo),
                         full.eigenvalues.begin() + static_cast<std::ptrdiff_t>(hi));
  out.first_index = lo;
  if (full.eigenvectors)
    out.eigenvectors = full.eigenvectors->middleCols(static_cast<Index>(lo), static_cast<Index>(k));
  out.max_residual =
      out.eigenvectors ? max_residual(h, out.eigenvalues, *out.eigenvectors)
                       : std::numeric_limits<double>::quiet_NaN();
  flag_edges(out, count);
  return out;
}

SpectrumResult shift_invert_window(const SparseHamiltonian& h, double target_eps, std::size_t count,
                                   double e_min, double e_max, const WindowOptions& options) {
  const Index n = h.dimension();
  const std::size_t k = std::min<std::size_t>(count, static_cast<std::size_t>(n));
  const double width = e_max - e_min;
  const double norm = std::max(h.norm_bound(), std::numeric_limits<double>::min());

  Eigen::SparseMatrix<double> shifted = h.matrix;  // column-major copy
  Eigen::SparseMatrix<double> identity(n, n);
  identity.setIdentity();
#ifdef BHCHAOS_HAVE_UMFPACK
  Eigen::UmfPackLU<Eigen::SparseMatrix<double>> lu;
  const char* backend = "umfpack";
#else
  Eigen::SparseLU<Eigen::SparseMatrix<double>, Eigen::COLAMDOrdering<int>> lu;
  const char* backend = "sparselu";
#endif

  double sigma = e_min + target_eps * width;
  bool factored = false;
  // The factorization object keeps referring to `a` while solving.
  Eigen::SparseMatrix<double> a;
  for (int attempt = 0; attempt < 4 && !factored; ++attempt) {
    a = shifted - sigma * identity;
    if (attempt == 0) lu.analyzePattern(a);
    lu.factorize(a);
    factored = lu.info() == Eigen::Success;
    // An eigenvalue sitting on the shift makes the factorization singular.
    if (!factored) sigma += (attempt + 1) * 1e-7 * width;
  }
  if (!factored) throw ConvergenceError(std::string("shift-invert factorization failed (") + backend + ")");

  const std::size_t guard = std::min<std::size_t>(static_cast<std::size_t>(n) - k,
                                                  std::max<std::size_t>(4, k / 10));
  const std::size_t wanted = k + guard;
  Index max_steps = options.max_krylov > 0 ? static_cast<Index>(options.max_krylov)
                                           : static_cast<Index>(std::max<std::size_t>(
                                                 4 * wanted + 60, 2 * wanted + 200));
  max_steps = std::min(max_steps, n);

  MatrixXd basis;
  std::vector<double> alpha;
  std::vector<double> beta;
  const double shifted_norm = norm + std::abs(sigma);
  const double tol = options.residual_tolerance * norm;

  std::vector<double> values;
  MatrixXd vectors;
  bool converged = false;

  auto select = [&](Index m) {
    const Ritz ritz = tridiagonal_eigen(alpha, beta, m);
    std::vector<Index> order(static_cast<std::size_t>(m));
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](Index a, Index b) {
      return std::abs(ritz.values[a]) > std::abs(ritz.values[b]);
    });
    return std::pair{ritz, order};
  };

  auto done = [&](Index m) {
    if (static_cast<std::size_t>(m) < wanted) return false;
    if (m < max_steps && m % 10 != 0) return false;
    const auto [ritz, order] = select(m);
    const double b = beta[static_cast<std::size_t>(m - 1)];
    for (std::size_t i = 0; i < wanted; ++i) {
      const Index c = order[i];
      const double theta = ritz.values[c];
      const double estimate = shifted_norm * std::abs(b * ritz.vectors(m - 1, c)) / std::abs(theta);
      if (estimate > 0.01 * tol) return false;
    }
    // Estimates look converged; confirm with explicit residuals.
    std::vector<std::pair<double, Index>> picked;
    for (std::size_t i = 0; i < k; ++i) picked.emplace_back(sigma + 1.0 / ritz.values[order[i]], order[i]);
    std::sort(picked.begin(), picked.end());
    const MatrixXd s = [&] {
      MatrixXd sel(m, static_cast<Index>(k));
      for (std::size_t i = 0; i < k; ++i) sel.col(static_cast<Index>(i)) = ritz.vectors.col(picked[i].second);
      return sel;
    }();
    MatrixXd x = basis.leftCols(m) * s;
    std::vector<double> lam(k);
    for (std::size_t i = 0; i < k; ++i) {
      x.col(static_cast<Index>(i)).normalize();
      // Rayleigh quotient refines the eigenvalue.
      lam[i] = x.col(static_cast<Index>(i)).dot(h.matrix * x.col(static_cast<Index>(i)));
    }
    if (max_residual(h, lam, x) > tol) return false;
    values = std::move(lam);
    vectors = std::move(x);
    converged = true;
    return true;
  };

  auto apply = [&](const auto& x, VectorXd& y) { y = lu.solve(x); };
  lanczos(n, max_steps, options.seed, apply, done, basis, alpha, beta);
  if (!converged) {
    // Out of steps: accept only when explicit residuals pass.
    if (!done(static_cast<Index>(alpha.size())))
      throw ConvergenceError("shift-invert Lanczos did not converge within " +
                             std::to_string(max_steps) + " steps");
  }

  SpectrumResult out;
  out.params = h.params;
  out.dimension = static_cast<std::size_t>(n);
  out.e_min = e_min;
  out.e_max = e_max;
  out.solver = std::string("shift-invert-lanczos/") + backend;
  // Ritz values of a clustered pair may come out infinitesimally unsorted.
  std::vector<std::size_t> idx(values.size());
  std::iota(idx.begin(), idx.end(), 0);
  std::stable_sort(idx.begin(), idx.end(), [&](auto a, auto b) { return values[a] < values[b]; });
  out.eigenvalues.resize(values.size());
  MatrixXd sorted(vectors.rows(), vectors.cols());
  for (std::size_t i = 0; i < idx.size(); ++i) {
    out.eigenvalues[i] = values[idx[i]];
    sorted.col(static_cast<Index>(i)) = vectors.col(static_cast<Index>(idx[i]));
  }
  out.max_residual = max_residual(h, out.eigenvalues, sorted);
  if (options.with_vectors) out.eigenvectors = std::move(sorted);
  flag_edges(out, count);
  return out;
}

}  // namespace

SpectrumResult full_spectrum(const SparseHamiltonian& h, bool with_vectors, const DenseLimits& limits) {
  const Index n = h.dimension();
  if (n == 0) throw DegenerateError("empty Hamiltonian");
  if (static_cast<std::size_t>(n) > limits.max_dimension)
    throw CapacityError("dimension " + std::to_string(n) + " exceeds the dense solver limit " +
                        std::to_string(limits.max_dimension));
  const MatrixXd dense = MatrixXd(h.matrix);
  Eigen::SelfAdjointEigenSolver<MatrixXd> es(
      dense, with_vectors ? Eigen::ComputeEigenvectors : Eigen::EigenvaluesOnly);
  if (es.info() != Eigen::Success) throw ConvergenceError("dense eigensolver did not converge");

  SpectrumResult out;
  out.params = h.params;
  out.dimension = static_cast<std::size_t>(n);
  out.solver = "dense";
  out.first_index = 0;
  out.eigenvalues.assign(es.eigenvalues().data(), es.eigenvalues().data() + n);
  out.e_min = out.eigenvalues.front();
  out.e_max = out.eigenvalues.back();
  if (with_vectors) {
    out.eigenvectors = es.eigenvectors();
    out.max_residual = max_residual(h, out.eigenvalues, *out.eigenvectors);
    const double scale = std::max(std::abs(out.e_min), std::abs(out.e_max));
    if (out.max_residual > 1e-9 * std::max(scale, std::numeric_limits<double>::min()))
      throw ConvergenceError("dense eigenpairs fail the residual check");
  } else {
    out.max_residual = std::numeric_limits<double>::quiet_NaN();
  }
  return out;
}

std::pair<double, double> extremal_eigenvalues(const SparseHamiltonian& h, const ExtremalOptions& options) {
  const Index n = h.dimension();
  if (n == 0) throw DegenerateError("empty Hamiltonian");
  if (n <= 400) {
    const auto s = full_spectrum(h, false);
    return {s.e_min, s.e_max};
  }
  const double norm = std::max(h.norm_bound(), std::numeric_limits<double>::min());
  const Index steps = std::min<Index>(n, static_cast<Index>(options.max_iterations));
  MatrixXd basis;
  std::vector<double> alpha;
  std::vector<double> beta;
  std::pair<double, double> result{0.0, 0.0};
  bool converged = false;
  auto done = [&](Index m) {
    if (m % 10 != 0 && m < steps) return false;
    const Ritz ritz = tridiagonal_eigen(alpha, beta, m);
    const double b = beta[static_cast<std::size_t>(m - 1)];
    const double lo_err = std::abs(b * ritz.vectors(m - 1, 0));
    const double hi_err = std::abs(b * ritz.vectors(m - 1, m - 1));
    result = {ritz.values[0], ritz.values[m - 1]};
    // Eigenvalue error of a Ritz value scales with the residual squared over
    // the gap; the residual bound itself is conservative.
    converged = lo_err <= std::sqrt(options.tolerance) * norm * 1e-2 &&
                hi_err <= std::sqrt(options.tolerance) * norm * 1e-2;
    return converged;
  };
  auto apply = [&](const auto& x, VectorXd& y) { y.noalias() = h.matrix * x; };
  lanczos(n, steps, options.seed, apply, done, basis, alpha, beta);
  if (!converged) throw ConvergenceError("extremal Lanczos did not converge");
  return result;
}

SpectrumResult window_spectrum(const SparseHamiltonian& h, double target_eps, std::size_t count,
                               const WindowOptions& options) {
  const auto n = static_cast<std::size_t>(h.dimension());
  if (n == 0) throw DegenerateError("empty Hamiltonian");
  if (count == 0) throw DomainError("window must contain at least one state");
  if (!(target_eps >= 0.0 && target_eps <= 1.0)) throw DomainError("target scaled energy outside [0, 1]");

  WindowMethod method = options.method;
  if (method == WindowMethod::automatic)
    method = (n <= options.dense_threshold || 3 * count >= n) ? WindowMethod::dense
                                                             : WindowMethod::shift_invert;
  if (method == WindowMethod::dense) return dense_window(h, target_eps, count, options);

  double e_min = 0.0;
  double e_max = 0.0;
  if (options.e_min && options.e_max) {
    e_min = *options.e_min;
    e_max = *options.e_max;
  } else {
    std::tie(e_min, e_max) = extremal_eigenvalues(h, ExtremalOptions{.seed = options.seed});
  }
  if (!(e_max > e_min)) throw DegenerateError("spectrum has zero width");
  return shift_invert_window(h, target_eps, count, e_min, e_max, options);
}

void export_spectrum(const SpectrumResult& s, const std::string& hamiltonian_digest,
                     const std::filesystem::path& path) {
  const double width = s.e_max - s.e_min;
  {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error("cannot write " + path.string());
    out << "index,eigenvalue,eps\n";
    char buf[80];
    for (std::size_t i = 0; i < s.eigenvalues.size(); ++i) {
      if (s.first_index) out << *s.first_index + i;
      const double eps = width > 0 ? (s.eigenvalues[i] - s.e_min) / width : std::nan("");
      std::snprintf(buf, sizeof buf, ",%.17g,%.17g\n", s.eigenvalues[i], eps);
      out << buf;
    }
  }
  nlohmann::ordered_json meta;
  meta["L"] = s.params.sites;
  meta["N"] = s.params.particles;
  meta["J"] = s.params.tunneling;
  meta["U"] = s.params.interaction;
  meta["eta"] = s.params.particles > 0 ? eta(s.params) : 0.0;
  meta["parity"] = s.params.parity ? to_string(*s.params.parity) : "none";
  meta["dimension"] = s.dimension;
  meta["count"] = s.eigenvalues.size();
  meta["e_min"] = s.e_min;
  meta["e_max"] = s.e_max;
  meta["solver"] = s.solver;
  if (std::isnan(s.max_residual)) meta["max_residual"] = nullptr;
  else meta["max_residual"] = s.max_residual;
  meta["hamiltonian_sha256"] = hamiltonian_digest;
  meta["warnings"] = s.warnings;
  std::ofstream side(path.string() + ".json", std::ios::binary);
  side << meta.dump(2) << '\n';
}

}  // namespace bhchaos
