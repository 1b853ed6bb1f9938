#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <json.hpp>

#include "prodiso/halfspace.hpp"
#include "prodiso/isoprofile.hpp"
#include "prodiso/measure.hpp"
#include "prodiso/perturb.hpp"
#include "prodiso/spectral.hpp"

namespace py = pybind11;
using namespace prodiso;

namespace {

py::object to_py(const nlohmann::json& j) {
    return py::module_::import("json").attr("loads")(j.dump());
}

MeasureSpec measure_arg(const std::string& s) { return MeasureSpec::parse(s); }

BumpFunction bump_arg(const std::string& s) {
    if (s.empty()) return design_bump(default_design_basis()).bump;
    return BumpFunction::from_json(nlohmann::json::parse(s));
}

}  // namespace

PYBIND11_MODULE(_prodiso, mod) {
    static py::exception<Error> error(mod, "Error");
    py::register_exception_translator([](std::exception_ptr p) {
        try {
            if (p) std::rethrow_exception(p);
        } catch (const Error& e) {
            py::set_error(error, e.what());
        }
    });

    mod.def("density", [](const std::string& m, double x) { return density(measure_arg(m), x); });
    mod.def("cdf", [](const std::string& m, double x) { return cdf(measure_arg(m), x); });
    mod.def("quantile", [](const std::string& m, double p) { return quantile(measure_arg(m), p); });
    mod.def("variance", [](const std::string& m) { return variance(measure_arg(m)); });

    mod.def(
        "spectral_gap",
        [](const std::string& m, int n) {
            SpectralOptions o;
            o.n = n;
            return spectral_gap(measure_arg(m), o);
        },
        py::arg("measure") = "logistic", py::arg("n") = 4001);

    mod.def("profile_1d", [](const std::string& m, double t) { return profile_1d(measure_arg(m), t); });
    mod.def("compute_c", [] {
        ConstantC c = compute_c();
        return py::dict(py::arg("c") = c.c, py::arg("u_star") = c.u_star, py::arg("foc_residual") = c.foc_residual);
    });
    mod.def(
        "clt_upper_bound",
        [](const std::string& m, double t, int n_max) { return to_py(clt_upper_bound(measure_arg(m), t, n_max).to_json()); },
        py::arg("measure") = "logistic", py::arg("t") = 0.5, py::arg("n_max") = 16);

    mod.def(
        "boundary_measure",
        [](const std::string& m, std::vector<double> v, double t) {
            std::vector<MeasureSpec> ms(v.size(), measure_arg(m));
            return boundary_measure(ms, HalfSpace::make(std::move(v), t));
        },
        py::arg("measure"), py::arg("v"), py::arg("t") = 0.0);

    mod.def(
        "coordinate_stability",
        [](const std::string& m, double t, double margin) {
            StabilityOptions o;
            o.solver_margin = margin;
            return to_py(coordinate_stability(measure_arg(m), t, o).to_json());
        },
        py::arg("measure"), py::arg("t"), py::arg("solver_margin") = 0.01);

    mod.def(
        "noncoordinate_stability",
        [](const std::string& m, double alpha, double tau, int dim, double margin) {
            StabilityOptions o;
            o.solver_margin = margin;
            return to_py(noncoordinate_stability(measure_arg(m), alpha, tau, dim, o).to_json());
        },
        py::arg("measure"), py::arg("alpha") = 1.0, py::arg("tau") = 0.0, py::arg("dim") = 2,
        py::arg("solver_margin") = 0.01);

    mod.def(
        "perturbation_slopes", [](const std::string& bump) { return to_py(perturbation_slopes(bump_arg(bump)).to_json()); },
        py::arg("bump") = "");

    mod.def(
        "design_bump",
        [](int budget) {
            DesignResult r = design_bump(default_design_basis(), budget);
            py::dict d;
            d["bump"] = to_py(r.bump.to_json());
            d["report"] = to_py(r.report.to_json());
            d["max_abs_d2"] = r.max_abs_d2;
            return d;
        },
        py::arg("budget") = 500);
}
