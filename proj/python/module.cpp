#include <pybind11/eigen.h>
#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "bhchaos/eigenstate_stats.hpp"
#include "bhchaos/errors.hpp"
#include "bhchaos/fock_basis.hpp"
#include "bhchaos/goe_baseline.hpp"
#include "bhchaos/hamiltonian.hpp"
#include "bhchaos/job_config.hpp"
#include "bhchaos/manifest.hpp"
#include "bhchaos/spectral_stats.hpp"
#include "bhchaos/spectrum.hpp"
#include "bhchaos/sweep_engine.hpp"

namespace py = pybind11;
using namespace bhchaos;

namespace {

std::optional<Parity> sector(const std::string& s) {
  if (s == "full") return std::nullopt;
  return parse_parity(s);
}

py::object to_py_int(const BigInt& v) { return py::int_(py::str(v.str())); }

py::array_t<double> as_array(const std::vector<double>& v) { return py::array_t<double>(v.size(), v.data()); }

py::dict point_dict(const PointReport& p) {
  py::dict d;
  d["L"] = p.point.sites;
  d["N"] = p.point.particles;
  d["dimension"] = p.dimension;
  d["error"] = p.error;
  if (!p.ok()) return d;
  d["chaos_mean_d1"] = p.chaos.mean_d1;
  d["chaos_var_d1"] = p.chaos.var_d1;
  d["chaos_samples"] = p.chaos.samples;
  d["reference_var_d1"] = p.reference.var_d1;
  d["goe_var_d1"] = p.goe.var_d1;
  d["goe_mean_d1_truncated"] = p.goe_mean_truncated;
  d["ratio_reference"] = p.ratio_reference;
  d["ratio_reference_smoothed"] = p.ratio_reference_smoothed ? py::object(py::float_(*p.ratio_reference_smoothed))
                                                              : py::object(py::none());
  d["ratio_goe"] = p.ratio_goe;
  d["delta1"] = p.delta1;
  d["delta1_ln_dim"] = p.delta1_log;
  d["kl_goe"] = p.kl_goe ? py::object(py::float_(*p.kl_goe)) : py::object(py::none());
  d["chaos_d1"] = as_array(p.chaos_d1());
  d["warnings"] = p.warnings;
  return d;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Parity-resolved Bose-Hubbard chaos diagnostics";
  m.attr("__version__") = kToolVersion;

  // Translators run newest first, so the base class goes first.
  py::register_exception<Error>(m, "Error", PyExc_RuntimeError);
  py::register_exception<ConfigError>(m, "ConfigError", PyExc_ValueError);
  py::register_exception<CapacityError>(m, "CapacityError", PyExc_MemoryError);
  py::register_exception<DomainError>(m, "DomainError", PyExc_ValueError);
  py::register_exception<DegenerateError>(m, "DegenerateError", PyExc_ArithmeticError);
  py::register_exception<ConvergenceError>(m, "ConvergenceError", PyExc_RuntimeError);

  m.def("full_dimension", [](int L, int N) { return to_py_int(full_dimension(L, N)); }, py::arg("L"), py::arg("N"));
  m.def(
      "dim_sector", [](int L, int N, const std::string& parity) { return to_py_int(dim_sector(L, N, parse_parity(parity))); },
      py::arg("L"), py::arg("N"), py::arg("parity") = "odd");
  m.def(
      "ratio_R",
      [](int L, int N) {
        const Rational r = ratio_R(L, N);
        return py::make_tuple(to_py_int(numerator(r)), to_py_int(denominator(r)));
      },
      py::arg("L"), py::arg("N"), "Exact ratio as (numerator, denominator).");
  m.def(
      "basis_states",
      [](int L, int N, const std::string& parity) {
        const FockBasis b = build_basis(L, N, sector(parity), BasisLimits{});
        py::array_t<int> out({static_cast<py::ssize_t>(b.size()), static_cast<py::ssize_t>(L)});
        auto v = out.mutable_unchecked<2>();
        for (std::size_t i = 0; i < b.size(); ++i) {
          const auto s = b.state(i);
          for (int j = 0; j < L; ++j) v(static_cast<py::ssize_t>(i), j) = static_cast<int>(s[static_cast<std::size_t>(j)]);
        }
        return out;
      },
      py::arg("L"), py::arg("N"), py::arg("parity") = "odd");

  m.def("eta_star", &eta_star, py::arg("L"), py::arg("N"));
  m.def(
      "hamiltonian",
      [](int L, int N, double eta_value, const std::string& parity) {
        const SparseHamiltonian h = assemble(params_from_eta(L, N, eta_value, sector(parity)));
        const Eigen::SparseMatrix<double> col = h.matrix;
        return col;
      },
      py::arg("L"), py::arg("N"), py::arg("eta"), py::arg("parity") = "odd",
      "Sparse H (U = 1, J = eta N) as a scipy.sparse matrix.");
  m.def(
      "eigenvalues",
      [](int L, int N, double eta_value) {
        return as_array(full_spectrum(assemble(params_from_eta(L, N, eta_value)), false).eigenvalues);
      },
      py::arg("L"), py::arg("N"), py::arg("eta"));
  m.def(
      "window",
      [](int L, int N, double eta_value, double eps, std::size_t count, const std::string& method) {
        WindowOptions o;
        o.method = parse_window_method(method);
        const SpectrumResult s = window_spectrum(assemble(params_from_eta(L, N, eta_value)), eps, count, o);
        return py::make_tuple(as_array(s.eigenvalues), *s.eigenvectors, s.e_min, s.e_max);
      },
      py::arg("L"), py::arg("N"), py::arg("eta"), py::arg("eps") = 0.5, py::arg("count") = 100,
      py::arg("method") = "automatic", "(eigenvalues, vectors, e_min, e_max) of the window nearest eps.");

  m.def(
      "r_values", [](const std::vector<double>& levels) { return as_array(r_values(levels).clean()); },
      py::arg("levels"), "Spacing ratios not touching a degeneracy.");
  m.def("p_goe", py::vectorize(&p_goe), py::arg("r"));
  m.def("mean_r_goe", &mean_r_goe);
  m.def(
      "kl_to_goe", [](const std::vector<double>& r, std::size_t bins) { return kl_to_goe(r, bins).value; },
      py::arg("r"), py::arg("bins") = 50);
  m.def(
      "goe_r_samples",
      [](std::size_t dim, std::size_t realizations, std::uint64_t seed) {
        return as_array(sample_goe_spectrum(dim, realizations, seed));
      },
      py::arg("dim"), py::arg("realizations"), py::arg("seed"));

  m.def(
      "gfd",
      [](const std::vector<double>& amplitudes, double q, std::size_t dimension) {
        return gfd(amplitudes, q, dimension == 0 ? amplitudes.size() : dimension);
      },
      py::arg("amplitudes"), py::arg("q"), py::arg("dimension") = 0);
  m.def("goe_mean_d1", &goe_mean_d1, py::arg("N"));
  m.def("goe_c1", &goe_c1);
  m.def("delta1", &delta1, py::arg("mean_d1"), py::arg("N"));
  m.def(
      "goe_pool",
      [](std::size_t dim, std::size_t samples, const std::vector<double>& q, std::uint64_t seed) {
        const GoePool pool = sample_goe_eigenvector_gfd(dim, samples, q, seed);
        py::dict out;
        for (std::size_t k = 0; k < pool.q.size(); ++k) out[py::float_(pool.q[k])] = as_array(pool.d[k]);
        return out;
      },
      py::arg("dim"), py::arg("samples"), py::arg("q") = std::vector<double>{1.0}, py::arg("seed") = 0,
      "D_q samples of GOE-distributed eigenvectors, keyed by q.");

  m.def(
      "canonical_config", [](const std::string& text) { return parse_config(text).canonical_text(); },
      py::arg("text"));
  m.def(
      "run_trajectory",
      [](const std::string& config_text) {
        const JobConfig c = parse_config(config_text, "<python>");
        TrajectoryReport rep;
        {
          py::gil_scoped_release release;
          Engine engine(engine_options(c));
          rep = run_trajectory(trajectory_spec(c), engine);
        }
        py::list out;
        for (const auto& p : rep.points) out.append(point_dict(p));
        return out;
      },
      py::arg("config_text"), "Per-point trajectory statistics for a job specification.");
}
