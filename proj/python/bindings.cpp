#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "fpgadiag/diagnosis.hpp"
#include "fpgadiag/error.hpp"
#include "fpgadiag/report.hpp"
#include "fpgadiag/scenario.hpp"
#include "fpgadiag/sensing.hpp"
#include "fpgadiag/svg.hpp"

namespace py = pybind11;
using namespace fpgadiag;

namespace {

struct RunOutput {
    std::string records_csv;
    std::string report_json;
    std::size_t record_count = 0;
};

RunOutput to_output(const PipelineResult& r) {
    return {r.records_csv, r.report_json, r.store.size()};
}

}  // namespace

PYBIND11_MODULE(_core, m) {
    m.doc() = "Timing-degradation simulator and diagnosis core";
    m.attr("__version__") = kToolVersion;

    static py::exception<DiagError> diag_error(m, "DiagError", PyExc_RuntimeError);
    py::register_exception_translator([](std::exception_ptr p) {
        try {
            if (p) std::rethrow_exception(p);
        } catch (const DiagError& e) {
            py::object exc = py::reinterpret_borrow<py::object>(diag_error.ptr())(e.what());
            exc.attr("code") = std::string(to_string(e.code()));
            PyErr_SetObject(diag_error.ptr(), exc.ptr());
        }
    });

    py::class_<Scenario>(m, "Scenario")
        .def_property_readonly("seed", [](const Scenario& s) { return s.fabric.seed; })
        .def_property_readonly("width", [](const Scenario& s) { return s.fabric.width; })
        .def_property_readonly("height", [](const Scenario& s) { return s.fabric.height; })
        .def_property_readonly("condition_names",
                               [](const Scenario& s) {
                                   std::vector<std::string> out;
                                   for (const auto& c : s.conditions) out.push_back(c.name);
                                   return out;
                               })
        .def("to_json", [](const Scenario& s) { return scenario_to_json(s).dump(); });

    py::class_<RunOutput>(m, "RunOutput")
        .def_readonly("records_csv", &RunOutput::records_csv)
        .def_readonly("report_json", &RunOutput::report_json)
        .def_readonly("record_count", &RunOutput::record_count);

    m.def("parse_scenario", &parse_scenario, py::arg("text"));
    m.def("load_scenario", &load_scenario, py::arg("path"));

    m.def(
        "run",
        [](const Scenario& s, unsigned threads) {
            py::gil_scoped_release release;
            return to_output(run_pipeline(s, threads));
        },
        py::arg("scenario"), py::arg("threads") = 1);
    m.def(
        "analyze",
        [](const Scenario& s, const std::string& csv) {
            py::gil_scoped_release release;
            return to_output(analyze_pipeline(s, csv));
        },
        py::arg("scenario"), py::arg("records_csv"));
    m.def(
        "render",
        [](const std::string& report_json) { return render_report(Json::parse(report_json)); },
        py::arg("report_json"));

    m.def(
        "error_probability",
        [](double mu, double sigma, double t) { return error_probability({mu, sigma}, t); },
        py::arg("mu"), py::arg("sigma"), py::arg("sample_time"));
    m.def(
        "pearson", [](const std::vector<double>& x, const std::vector<double>& y) { return pearson(x, y); },
        py::arg("x"), py::arg("y"));
    m.def(
        "pav_nonincreasing",
        [](const std::vector<double>& v, const std::vector<double>& w) { return pav_nonincreasing(v, w); },
        py::arg("values"), py::arg("weights") = std::vector<double>{});
    m.def(
        "classify",
        [](double s, double u, double v, double v_max, double decay_length) {
            Evidence e;
            e.mean_abs_shift_rel = s;
            e.uniformity_cv = u;
            e.median_dsigma_steps = v;
            e.max_dsigma_steps = v_max;
            e.decay_length = decay_length;
            return std::string(to_string(classify_mechanism(e).mechanism));
        },
        py::arg("shift"), py::arg("uniformity"), py::arg("spread"), py::arg("max_spread"), py::arg("decay_length"));
}
