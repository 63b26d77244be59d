#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "fputlab/check.hpp"
#include "fputlab/errors.hpp"
#include "fputlab/gibbs.hpp"
#include "fputlab/integrate.hpp"
#include "fputlab/spectral.hpp"
#include "fputlab/toda_lax.hpp"

namespace py = pybind11;
using namespace fputlab;

namespace {

py::dict theta_dict(double beta, const std::string& model, double chi) {
    const ThetaMeasure tm = solve_theta(beta, parse_model(model), chi);
    py::dict d;
    d["theta"] = tm.theta;
    d["z"] = tm.z;
    d["log_z"] = tm.log_z;
    d["residual"] = tm.r_mean_residual;
    return d;
}

py::list density_terms(int m) {
    py::list out;
    for (const auto& t : build_density(m).terms) {
        py::dict d;
        d["sign"] = t.sign;
        d["rho"] = t.rho;
        d["n"] = t.n_exp;
        d["k"] = t.k_exp;
        out.append(d);
    }
    return out;
}

} // namespace

PYBIND11_MODULE(_core, m) {
    m.doc() = "FPUT and Toda chain integrals, Gibbs sampling and integrators";

    py::register_exception<Error>(m, "FputlabError", PyExc_RuntimeError);

    py::class_<ChainState>(m, "ChainState")
        .def(py::init<std::vector<double>, std::vector<double>>(), py::arg("p"), py::arg("r"))
        .def_readwrite("p", &ChainState::p)
        .def_readwrite("r", &ChainState::r)
        .def("on_manifold", &ChainState::on_manifold)
        .def("center", &ChainState::center)
        .def("__len__", &ChainState::size);

    m.def("hamiltonian", [](const ChainState& s, const std::string& model, double chi) {
        return hamiltonian(s, ChainParams{s.size(), 1.0, chi, parse_model(model)});
    }, py::arg("state"), py::arg("model"), py::arg("chi") = 1.0);

    m.def("toda_integral", py::overload_cast<const ChainState&, int>(&toda_integral), py::arg("state"), py::arg("m"),
          "J^(m) from the closed-form local density");
    m.def("toda_integral_trace", &toda_integral_trace, py::arg("state"), py::arg("m"), "Tr(L^m)/m");
    m.def("density_terms", &density_terms, py::arg("m"));

    m.def("hartley", &hartley, py::arg("x"));
    m.def("normal_modes", &normal_modes, py::arg("state"));

    m.def("solve_theta", &theta_dict, py::arg("beta"), py::arg("model"), py::arg("chi") = 1.0);
    m.def("moment", [](double beta, const std::string& model, double chi, int k) {
        return moments_quadrature(solve_theta(beta, parse_model(model), chi), k);
    }, py::arg("beta"), py::arg("model"), py::arg("chi"), py::arg("k"));

    m.def("sample", [](const std::string& model, double beta, double chi, int n, std::uint64_t seed,
                       std::uint64_t index, const std::string& method) {
        SamplerConfig cfg;
        cfg.seed = seed;
        cfg.method = parse_sampler(method);
        return sample_member(solve_theta(beta, parse_model(model), chi), n, cfg, index);
    }, py::arg("model"), py::arg("beta"), py::arg("chi"), py::arg("n"), py::arg("seed"), py::arg("index") = 0,
          py::arg("method") = "constrained_mcmc");

    m.def("evolve", [](const ChainState& s, const std::string& model, double chi, double t, double dt,
                       const std::string& scheme) {
        Integrator integ(s, ChainParams{s.size(), 1.0, chi, parse_model(model)}, dt, parse_scheme(scheme));
        integ.advance(std::lround(t / dt));
        return integ.state();
    }, py::arg("state"), py::arg("model"), py::arg("chi"), py::arg("t"), py::arg("dt") = 0.05,
          py::arg("scheme") = "yoshida4");

    m.def("run_checks", [](bool quick) {
        CheckOptions o;
        o.quick = quick;
        py::list out;
        for (const auto& r : run_checks(o)) {
            py::dict d;
            d["name"] = r.name;
            d["passed"] = r.passed;
            d["detail"] = r.detail;
            out.append(d);
        }
        return out;
    }, py::arg("quick") = true);
}
