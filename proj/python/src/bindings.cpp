#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <sstream>
#include <string>
#include <vector>

#include "orbitfit/bounds.hpp"
#include "orbitfit/cli.hpp"
#include "orbitfit/data.hpp"
#include "orbitfit/errors.hpp"
#include "orbitfit/serialize.hpp"
#include "orbitfit/train.hpp"

namespace py = pybind11;
using namespace orbitfit;

namespace {

Json parse(const std::string& text, const std::string& what) {
    return parse_json(text.empty() ? "{}" : text, what);
}

// {"m", "interval", "family", "encoder", "flow"}; the family dimension comes from the data.
ModelSpec model_spec_from(const std::string& text, int dim) {
    const Json j = parse(text, "model");
    const JsonObject o(j, "model", {"m", "interval", "family", "encoder", "flow"});
    ModelSpec spec;
    spec.family = family_from_json(o.at("family"), o.child("family"), dim);
    spec.m = o.integer("m", 1);
    if (o.has("interval")) spec.interval = json_interval(o.at("interval"), o.child("interval"));
    if (o.has("encoder")) spec.encoder = encoder_spec_from_json(o.at("encoder"), o.child("encoder"));
    if (o.has("flow")) spec.flow = flow_from_json(o.at("flow"), o.child("flow"));
    return spec;
}

Mat generate_points(const std::string& config, std::uint64_t seed) {
    return generate(generator_from_json(parse(config, "data"), "data", seed)).points();
}

py::dict fit_points(const Mat& points, const std::string& model, const std::string& train, std::uint64_t seed) {
    const Dataset S(points);
    const ModelSpec spec = model_spec_from(model, S.dim());
    const TrainConfig cfg = train_from_json(parse(train, "train"), "train", seed);
    FitReport report;
    {
        py::gil_scoped_release release;
        report = fit(S, spec, cfg);
    }
    py::dict out;
    out["model"] = dump(to_json(report.best_model));
    out["report"] = dump(to_json(report));
    out["final_empirical_risk"] = report.final_empirical_risk;
    return out;
}

Mat reconstruct_points(const std::string& model, const Mat& points) {
    const ReconstructionMap G = model_from_json(parse(model, "model"));
    Mat out(points.rows(), points.cols());
    for (Eigen::Index i = 0; i < points.rows(); ++i) out.row(i) = reconstruct(G, points.row(i).transpose()).transpose();
    return out;
}

double evaluate_points(const std::string& model, const Mat& points) {
    return evaluate(model_from_json(parse(model, "model")), Dataset(points));
}

std::string bound(const std::string& cls, int n, const std::string& options) {
    const ClassSpec spec = class_from_json(parse(cls, "bounds.class"), "bounds.class");
    const DudleyOptions opt = dudley_options_from_json(parse(options, "bounds"), "bounds");
    return dump(to_json(dudley_bound(spec, n, opt)));
}

py::tuple cli(const std::vector<std::string>& args) {
    std::ostringstream out;
    std::ostringstream err;
    int code = 0;
    {
        py::gil_scoped_release release;
        code = run_cli(args, out, err);
    }
    return py::make_tuple(code, out.str(), err.str());
}

}  // namespace

PYBIND11_MODULE(_core, m) {
    m.doc() = "Flow-composition manifold fitting and generalization bounds.";

    py::register_exception_translator([](std::exception_ptr p) {
        try {
            if (p) std::rethrow_exception(p);
        } catch (const IoError& e) {
            PyErr_SetString(PyExc_OSError, e.what());
        } catch (const NumericError& e) {
            PyErr_SetString(PyExc_FloatingPointError, e.what());
        }
    });

    m.def("version", &version_string);
    m.def("generate", &generate_points, py::arg("config"), py::arg("seed") = 0,
          "Sample points from a generator config such as '{\"shape\": \"circle\", \"d\": 2, \"n\": 100}'.");
    m.def("fit", &fit_points, py::arg("points"), py::arg("model"), py::arg("train") = "{}", py::arg("seed") = 0,
          "Fit a reconstruction map; returns model JSON, report JSON and the final empirical risk.");
    m.def("reconstruct", &reconstruct_points, py::arg("model"), py::arg("points"));
    m.def("evaluate", &evaluate_points, py::arg("model"), py::arg("points"));
    m.def("dudley_bound", &bound, py::arg("cls"), py::arg("n"), py::arg("options") = "{}",
          "Entropy-integral bound for a class spec given as JSON; returns the report as JSON.");
    m.def("theorem2_certificate", &theorem2_certificate, py::arg("rademacher"), py::arg("diameter"), py::arg("n"),
          py::arg("confidence_delta"));
    m.def("massart_bound", &massart_bound, py::arg("class_size"), py::arg("diameter"), py::arg("n"));
    m.def("run_cli", &cli, py::arg("args"), "Run the command-line tool in-process; returns (code, stdout, stderr).");
}
