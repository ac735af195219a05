#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "mixlaw/design.hpp"
#include "mixlaw/fit.hpp"
#include "mixlaw/io.hpp"
#include "mixlaw/optimize.hpp"

namespace py = pybind11;
using namespace mixlaw;

namespace {

std::vector<std::vector<double>> as_lists(const std::vector<Mixture>& ms) {
    std::vector<std::vector<double>> out;
    for (const auto& m : ms) out.emplace_back(m.proportions().begin(), m.proportions().end());
    return out;
}

std::vector<MixtureSample> samples_of(const std::vector<std::vector<double>>& mixtures, const std::vector<double>& losses,
                                      const std::vector<std::string>& names) {
    if (mixtures.size() != losses.size()) fail(ErrorKind::DimensionMismatch, "one loss per mixture is required", "dimension");
    std::vector<MixtureSample> out;
    for (std::size_t i = 0; i < mixtures.size(); ++i) out.push_back({Mixture::from(mixtures[i], names), losses[i]});
    return out;
}

FitConfig config_of(std::uint64_t seed, int restarts, int max_iters, double huber_delta, int K, int boost_stages) {
    FitConfig c;
    c.seed = seed;
    c.restarts = restarts;
    c.max_iters = max_iters;
    c.huber_delta = huber_delta;
    c.K = K;
    c.boost_stages = boost_stages;
    return c;
}

OptimizeConfig optimize_config(std::optional<double> grid_step, int refine_iters,
                               std::optional<std::vector<std::pair<double, double>>> bounds) {
    OptimizeConfig c;
    c.grid_step = grid_step;
    c.refine_iters = refine_iters;
    c.bounds = std::move(bounds);
    return c;
}

py::dict argmin_dict(const ArgminResult& r) {
    py::dict d;
    d["mixture"] = std::vector<double>(r.mixture.proportions().begin(), r.mixture.proportions().end());
    d["loss"] = r.loss;
    d["per_domain"] = r.prediction.per_domain;
    d["grid_mixture"] = std::vector<double>(r.grid_mixture.proportions().begin(), r.grid_mixture.proportions().end());
    d["grid_loss"] = r.grid_loss;
    return d;
}

py::dict law_dict(const DomainLaw& law) {
    py::dict d;
    d["form"] = std::string(to_string(law.form));
    d["c"] = law.c;
    d["k"] = law.k;
    d["t"] = law.t;
    return d;
}

LawArtifact wrap(ArtifactModel model) {
    LawArtifact a;
    a.model = std::move(model);
    return a;
}

}  // namespace

PYBIND11_MODULE(mixlaw, m) {
    m.doc() = "Data mixing laws: fit, predict and optimize training-data mixtures";

    static py::exception<Error> error(m, "MixlawError");
    py::register_exception_translator([](std::exception_ptr p) {
        try {
            if (p) std::rethrow_exception(p);
        } catch (const Error& e) {
            py::object exc = py::reinterpret_borrow<py::object>(error.ptr())(e.what());
            exc.attr("kind") = std::string(to_string(e.kind()));
            exc.attr("rule") = e.rule();
            PyErr_SetObject(error.ptr(), exc.ptr());
        }
    });

    m.def("eval_two_domain", py::overload_cast<double, double, double, double>(&eval_two_domain), py::arg("c"), py::arg("k"),
          py::arg("t"), py::arg("r"));
    m.def(
        "eval_m4",
        [](double c, double k, std::vector<double> t, const std::vector<double>& r) { return eval_m4({c, k, std::move(t)}, r); },
        py::arg("c"), py::arg("k"), py::arg("t"), py::arg("r"));
    m.def(
        "check_mixture", [](const std::vector<double>& r) { (void)Mixture::from(r); }, py::arg("r"),
        "Raises MixlawError unless r lies on the simplex.");
    m.def("critical_proportion", py::overload_cast<double, double, double, double>(&critical_proportion), py::arg("c"),
          py::arg("k"), py::arg("t"), py::arg("L0"));

    py::class_<MixingLawModel>(m, "MixingLawModel")
        .def_property_readonly("aggregation", [](const MixingLawModel& x) { return std::string(to_string(x.aggregation())); })
        .def_property_readonly("weights", [](const MixingLawModel& x) { return std::vector<double>(x.weights().begin(), x.weights().end()); })
        .def_property_readonly("dims", &MixingLawModel::dims)
        .def_property_readonly("domain_laws", [](const MixingLawModel& x) {
            py::list out;
            for (const auto& law : x.domain_laws()) out.append(law_dict(law));
            return out;
        })
        .def("predict", [](const MixingLawModel& x, const std::vector<double>& r) { return eval_model(x, r).overall; }, py::arg("r"))
        .def("predict_domains", [](const MixingLawModel& x, const std::vector<double>& r) { return eval_model(x, r).per_domain; },
             py::arg("r"));

    py::class_<EnsembleModel>(m, "EnsembleModel")
        .def_property_readonly("member_weights", [](const EnsembleModel& x) {
            return std::vector<double>(x.member_weights().begin(), x.member_weights().end());
        })
        .def_property_readonly("size", [](const EnsembleModel& x) { return x.members().size(); })
        .def("predict", [](const EnsembleModel& x, const std::vector<double>& r) { return eval_model(x, r).overall; }, py::arg("r"));

    py::class_<PowerLaw>(m, "PowerLaw")
        .def(py::init([](double c, double k, double alpha) { return PowerLaw{c, k, alpha}; }), py::arg("c"), py::arg("k"),
             py::arg("alpha"))
        .def_readonly("c", &PowerLaw::c)
        .def_readonly("k", &PowerLaw::k)
        .def_readonly("alpha", &PowerLaw::alpha)
        .def("predict", &eval_power_law, py::arg("x"));

    m.def(
        "fit_power_law",
        [](const std::vector<double>& xs, const std::vector<double>& losses, std::uint64_t seed) {
            if (xs.size() != losses.size()) fail(ErrorKind::DimensionMismatch, "one loss per x is required", "dimension");
            std::vector<PowerPoint> pts;
            for (std::size_t i = 0; i < xs.size(); ++i) pts.push_back({xs[i], losses[i]});
            FitConfig c;
            c.seed = seed;
            const auto r = fit_power_law(pts, c);
            return py::make_tuple(r.model, r.train_mae);
        },
        py::arg("xs"), py::arg("losses"), py::arg("seed") = 0, "Returns (PowerLaw, train_mae).");

    m.def(
        "fit_explicit",
        [](const std::vector<std::vector<double>>& mixtures, const std::vector<double>& losses, const std::string& form,
           std::uint64_t seed, int restarts, int max_iters, double huber_delta) {
            const auto r = fit_explicit(samples_of(mixtures, losses, {}), form_from_string(form),
                                        config_of(seed, restarts, max_iters, huber_delta, 30, 50));
            return py::make_tuple(r.model, r.train_mae);
        },
        py::arg("mixtures"), py::arg("losses"), py::arg("form") = "M4", py::arg("seed") = 0, py::arg("restarts") = 4,
        py::arg("max_iters") = 4000, py::arg("huber_delta") = 1e-3, "Returns (MixingLawModel, train_mae).");

    m.def(
        "fit_implicit",
        [](const std::vector<std::vector<double>>& mixtures, const std::vector<double>& losses, int K, std::uint64_t seed,
           int restarts, int max_iters, double huber_delta) {
            const auto r = fit_implicit(samples_of(mixtures, losses, {}), config_of(seed, restarts, max_iters, huber_delta, K, 50));
            return py::make_tuple(r.model, r.train_mae);
        },
        py::arg("mixtures"), py::arg("losses"), py::arg("K") = 30, py::arg("seed") = 0, py::arg("restarts") = 4,
        py::arg("max_iters") = 4000, py::arg("huber_delta") = 1e-3, "Returns (MixingLawModel, train_mae).");

    m.def(
        "fit_boosted",
        [](const std::vector<std::vector<double>>& mixtures, const std::vector<double>& losses, int K, int stages,
           std::uint64_t seed) {
            const auto r = fit_boosted(samples_of(mixtures, losses, {}), config_of(seed, 4, 4000, 1e-3, K, stages));
            return py::make_tuple(r.model, r.train_mae);
        },
        py::arg("mixtures"), py::arg("losses"), py::arg("K") = 30, py::arg("stages") = 50, py::arg("seed") = 0,
        "Returns (EnsembleModel, train_mae).");

    m.def(
        "argmin_mixture",
        [](const MixingLawModel& model, std::optional<double> grid_step, int refine_iters,
           std::optional<std::vector<std::pair<double, double>>> bounds) {
            return argmin_dict(argmin_mixture(model, optimize_config(grid_step, refine_iters, std::move(bounds))));
        },
        py::arg("model"), py::arg("grid_step") = py::none(), py::arg("refine_iters") = 200, py::arg("bounds") = py::none());

    m.def(
        "enumerate_candidates",
        [](std::vector<double> r_max, double delta) {
            const auto c = enumerate_candidates({std::move(r_max), delta, 1, {}});
            return py::make_tuple(as_lists(c.zero), as_lists(c.nonzero));
        },
        py::arg("r_max"), py::arg("delta"), "Returns (with_zero, without_zero) candidate lists.");
    m.def(
        "sample_design",
        [](std::vector<double> r_max, double delta, int N, std::uint64_t seed) {
            return as_lists(sample_design({std::move(r_max), delta, N, {}}, seed).sampled);
        },
        py::arg("r_max"), py::arg("delta"), py::arg("N"), py::arg("seed") = 0);
    m.def(
        "grid_simplex", [](std::size_t dims, double step) { return as_lists(grid_simplex(dims, step)); }, py::arg("m"),
        py::arg("step"));

    py::class_<LawArtifact>(m, "LawArtifact")
        .def_static("load", [](const std::string& path) { return load_artifact(path); }, py::arg("path"))
        .def_static("parse", &parse_artifact, py::arg("text"))
        .def_static("from_model", [](const MixingLawModel& x) { return wrap(x); }, py::arg("model"))
        .def_static("from_ensemble", [](const EnsembleModel& x) { return wrap(x); }, py::arg("model"))
        .def_static("from_power_law", [](const PowerLaw& x) { return wrap(x); }, py::arg("model"))
        .def("serialize", &serialize_artifact)
        .def("save", [](const LawArtifact& a, const std::string& path) { save_artifact(path, a); }, py::arg("path"))
        .def_property_readonly("kind", &LawArtifact::kind)
        .def_property_readonly("dims", &LawArtifact::dims)
        .def_property_readonly("training_domains", &LawArtifact::training_domains)
        .def_property_readonly("fitted", [](const LawArtifact& a) {
            py::list out;
            for (const auto& f : a.fitted) out.append(py::make_tuple(f.input, f.prediction));
            return out;
        })
        .def("predict", [](const LawArtifact& a, const std::vector<double>& r) {
            const auto p = predict_artifact(a, r);
            return py::make_tuple(p.overall, p.per_domain);
        }, py::arg("r"), "Returns (overall, [(domain, loss), ...]).")
        .def("predict_x", &predict_power, py::arg("x"))
        .def("optimize", [](const LawArtifact& a, std::optional<double> grid_step, int refine_iters,
                            std::optional<std::vector<std::pair<double, double>>> bounds, const std::string& chain) {
            return argmin_dict(optimize_artifact(a, optimize_config(grid_step, refine_iters, std::move(bounds)), chain));
        }, py::arg("grid_step") = py::none(), py::arg("refine_iters") = 200, py::arg("bounds") = py::none(), py::arg("chain") = "");
}
