#include <pybind11/complex.h>
#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "uhcm/chain.hpp"
#include "uhcm/cli.hpp"
#include "uhcm/config.hpp"
#include "uhcm/fock.hpp"
#include "uhcm/moments.hpp"
#include "uhcm/scan.hpp"
#include "uhcm/version.hpp"
#include "uhcm/witness.hpp"

namespace py = pybind11;
using namespace uhcm;

namespace {

StateSpec spec_with_options(StateSpec spec, double loss, double tail_tol, int n_max) {
    spec.loss = loss;
    spec.cutoff = n_max >= 0 ? CutoffPolicy::fixed(n_max) : CutoffPolicy::adaptive(tail_tol);
    return spec;
}

}  // namespace

PYBIND11_MODULE(_uhcm, m) {
    m.doc() = "Displaced photon-number moments, correlation-measurement simulation, "
              "and nonclassicality witnesses in a truncated Fock basis";
    m.attr("__version__") = kVersion;

    py::register_exception<ConfigError>(m, "ConfigError", PyExc_ValueError);
    py::register_exception<TruncationError>(m, "TruncationError", PyExc_RuntimeError);
    py::register_exception<SeriesError>(m, "SeriesError", PyExc_RuntimeError);
    py::register_exception<NumericError>(m, "NumericError", PyExc_RuntimeError);
    py::register_exception<DataError>(m, "DataError", PyExc_RuntimeError);

    py::class_<DensityMatrix>(m, "DensityMatrix")
        .def_static("from_matrix", &DensityMatrix::from_matrix, py::arg("entries"),
                    py::arg("tail_tol") = 1.0)
        .def_property_readonly("dim", &DensityMatrix::dim)
        .def_property_readonly("matrix",
                               [](const DensityMatrix& rho) { return rho.entries(); })
        .def("tail_mass", &DensityMatrix::tail_mass)
        .def("validate", [](const DensityMatrix& rho) { rho.validate(); });

    m.def(
        "vacuum",
        [](double tail_tol, int n_max) {
            return build_state(spec_with_options(StateSpec::vacuum(), 1.0, tail_tol, n_max));
        },
        py::arg("tail_tol") = 1e-10, py::arg("n_max") = -1);
    m.def(
        "fock",
        [](int n, double loss, double tail_tol, int n_max) {
            return build_state(spec_with_options(StateSpec::fock(n), loss, tail_tol, n_max));
        },
        py::arg("n"), py::arg("loss") = 1.0, py::arg("tail_tol") = 1e-10, py::arg("n_max") = -1);
    m.def(
        "coherent",
        [](Complex beta, double loss, double tail_tol, int n_max) {
            return build_state(spec_with_options(StateSpec::coherent(beta), loss, tail_tol, n_max));
        },
        py::arg("beta"), py::arg("loss") = 1.0, py::arg("tail_tol") = 1e-10, py::arg("n_max") = -1);
    m.def(
        "thermal",
        [](double nbar, double loss, double tail_tol, int n_max) {
            return build_state(spec_with_options(StateSpec::thermal(nbar), loss, tail_tol, n_max));
        },
        py::arg("nbar"), py::arg("loss") = 1.0, py::arg("tail_tol") = 1e-10, py::arg("n_max") = -1);
    m.def(
        "squeezed_vacuum",
        [](Complex xi, double loss, double tail_tol, int n_max) {
            return build_state(
                spec_with_options(StateSpec::squeezed_vacuum(xi), loss, tail_tol, n_max));
        },
        py::arg("xi"), py::arg("loss") = 1.0, py::arg("tail_tol") = 1e-10, py::arg("n_max") = -1);
    m.def(
        "spats",
        [](double nbar, double loss, double tail_tol, int n_max) {
            return build_state(spec_with_options(StateSpec::spats(nbar, loss), loss, tail_tol, n_max));
        },
        py::arg("nbar"), py::arg("loss") = 1.0, py::arg("tail_tol") = 1e-10, py::arg("n_max") = -1);

    m.def("displace", &displace, py::arg("rho"), py::arg("alpha"));
    m.def("loss_channel", &loss_channel, py::arg("rho"), py::arg("eta"));
    m.def("displacement_operator", &displacement_operator, py::arg("alpha"), py::arg("dim"));

    m.def("moment_direct", &moment_direct, py::arg("rho"), py::arg("alpha"), py::arg("m"));
    m.def("moment_via_displacement", &moment_via_displacement, py::arg("rho"), py::arg("alpha"),
          py::arg("m"));
    m.def(
        "moments",
        [](const DensityMatrix& rho, Complex alpha, int max_order) {
            return analytic_moments(rho, alpha, max_order).values;
        },
        py::arg("rho"), py::arg("alpha"), py::arg("max_order"));
    m.def(
        "photocount_direct",
        [](const DensityMatrix& rho, Complex alpha, double eta, int n_max) {
            return photocount_direct(rho, alpha, eta, n_max).probs;
        },
        py::arg("rho"), py::arg("alpha"), py::arg("eta") = 1.0, py::arg("n_max") = -1);
    m.def(
        "photocount_from_moments",
        [](const std::vector<double>& values, Complex alpha, double eta, int n) {
            MomentSet set;
            set.alpha = alpha;
            set.values = values;
            return photocount_from_moments(set, eta, n);
        },
        py::arg("moments"), py::arg("alpha"), py::arg("eta"), py::arg("n"));
    m.def("quasiprob_s", &quasiprob_s, py::arg("rho"), py::arg("alpha"), py::arg("s"),
          py::arg("eta") = 1.0);

    py::class_<MomentMatrix>(m, "MomentMatrix")
        .def_readonly("k", &MomentMatrix::k)
        .def_readonly("w", &MomentMatrix::w)
        .def_readonly("entries", &MomentMatrix::entries);

    m.def(
        "moment_matrix",
        [](const std::vector<double>& values, Complex alpha, int k, double w) {
            MomentSet set;
            set.alpha = alpha;
            set.values = values;
            return build_moment_matrix(set, k, w);
        },
        py::arg("moments"), py::arg("alpha"), py::arg("k"), py::arg("w") = 1.0);
    m.def(
        "filter_vector",
        [](double q, double w, int k) { return filter_vector(q, w, k).components; },
        py::arg("q"), py::arg("w"), py::arg("k"));
    m.def(
        "truncated_regularized_p",
        [](const MomentMatrix& mat, double q) {
            return truncated_regularized_p(mat, filter_vector(q, std::max(mat.w, 1e-300), mat.k));
        },
        py::arg("matrix"), py::arg("q") = 10.0);
    m.def(
        "min_eigenvalue_witness",
        [](const MomentMatrix& mat) {
            const EigenResult res = min_eigenvalue_witness(mat);
            return py::make_tuple(res.min_eigenvalue, res.eigenvector, res.degenerate);
        },
        py::arg("matrix"));

    m.def(
        "witness_scan",
        [](const DensityMatrix& rho, double lo, double hi, int points, double envelope_c,
           std::vector<int> k_list, double w, double q, int threads) {
            ScanSpec scan;
            scan.min = lo;
            scan.max = hi;
            scan.points = points;
            scan.envelope_c = envelope_c;
            WitnessParams params;
            params.k_list = std::move(k_list);
            params.w = w;
            params.q = q;
            const WitnessReport report = witness_scan(rho, scan, params, threads);
            py::list rows;
            for (const WitnessPoint& pt : report.points) {
                py::dict row;
                row["alpha"] = pt.alpha;
                row["k"] = pt.k;
                row["P_trunc"] = pt.p_trunc;
                row["F_min"] = pt.f_min;
                row["envelope"] = pt.envelope;
                rows.append(std::move(row));
            }
            return rows;
        },
        py::arg("rho"), py::arg("lo"), py::arg("hi"), py::arg("points"),
        py::arg("envelope_c") = 0.0, py::arg("k_list") = std::vector<int>{1, 2},
        py::arg("w") = 1.0, py::arg("q") = 10.0, py::arg("threads") = 0);

    py::class_<ShotMatrix>(m, "ShotMatrix")
        .def_readonly("shots", &ShotMatrix::shots)
        .def_readonly("channels", &ShotMatrix::channels)
        .def_readonly("alpha", &ShotMatrix::alpha)
        .def_readonly("zeta_tilde", &ShotMatrix::zeta_tilde)
        .def("current", &ShotMatrix::at, py::arg("shot"), py::arg("channel"));

    m.def(
        "simulate",
        [](const std::string& config_json, int threads) {
            const RunConfig cfg = parse_config(config_json, false);
            if (!cfg.chain || !cfg.signal)
                throw ConfigError("config error: simulate needs chain and chain.signal");
            SimulateOptions opts;
            opts.threads = threads;
            return simulate_run(*cfg.chain, *cfg.signal, opts);
        },
        py::arg("config_json"), py::arg("threads") = 0,
        "Run the measurement chain from a JSON configuration string");
    m.def(
        "estimate_moment",
        [](const ShotMatrix& shots, int order) {
            const MomentEstimate est = gamma_to_moment(estimate_gamma(shots, order));
            return py::make_tuple(est.value, est.std_error);
        },
        py::arg("shots"), py::arg("order"));
    m.def(
        "bootstrap_witness",
        [](const ShotMatrix& shots, int k, double w, double q, int resamples,
           std::uint64_t seed) {
            const WitnessReport rep =
                bootstrap_witness(shots, k, w / shots.zeta_tilde, q, resamples, seed);
            const WitnessPoint& pt = rep.points.front();
            py::dict out;
            out["P_trunc"] = pt.p_trunc;
            out["F_min"] = pt.f_min;
            out["P_ci"] = py::make_tuple(pt.p_ci_low, pt.p_ci_high);
            out["F_ci"] = py::make_tuple(pt.f_ci_low, pt.f_ci_high);
            out["F_z"] = pt.f_z;
            return out;
        },
        py::arg("shots"), py::arg("k"), py::arg("w"), py::arg("q") = 10.0,
        py::arg("resamples") = 200, py::arg("seed") = 1);
}
