#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <cstring>
#include <stdexcept>

#include "mbaccel/analysis.hpp"
#include "mbaccel/dataio.hpp"
#include "mbaccel/errors.hpp"
#include "mbaccel/geometry.hpp"
#include "mbaccel/harness.hpp"
#include "mbaccel/losses.hpp"
#include "mbaccel/optimizers.hpp"
#include "mbaccel/schedules.hpp"

namespace py = pybind11;
using namespace mbaccel;

namespace {

using Array = py::array_t<double, py::array::c_style | py::array::forcecast>;

Array to_numpy(const DenseVector& v) {
  Array out(static_cast<py::ssize_t>(v.size()));
  std::memcpy(out.mutable_data(), v.values().data(), v.size() * sizeof(double));
  return out;
}

DenseVector from_numpy(const Array& a) {
  if (a.ndim() != 1) throw ValidationError("expected a 1-d array");
  return DenseVector(std::vector<double>(a.data(), a.data() + a.size()));
}

LossKind parse_loss(const std::string& s) {
  if (s == "smoothed_hinge" || s == "hinge") return LossKind::smoothed_hinge;
  if (s == "squared") return LossKind::squared;
  throw ValidationError("unknown loss '" + s + "'");
}

MirrorMap make_map(const std::string& kind, std::size_t d, double radius) {
  if (kind == "euclidean") return MirrorMap::euclidean(d, radius);
  if (kind == "entropy") return MirrorMap::entropy(d);
  throw ValidationError("unknown mirror map '" + kind + "'");
}

ProblemParams make_params(double H, std::size_t b, std::size_t n, double L_star, double w_star_norm,
                          std::optional<double> D, std::optional<double> R_star, double K) {
  ProblemParams p;
  p.H = H;
  p.b = b;
  p.n = n;
  p.L_star = L_star;
  p.w_star_norm_sq = w_star_norm * w_star_norm;
  p.D = D.value_or(w_star_norm);
  p.R_star = R_star;
  p.K = K;
  p.validate();
  return p;
}

py::dict bounds_dict(const BoundReport& r) {
  py::dict d;
  d["sgd"] = r.sgd_bound;
  d["ag"] = r.ag_bound;
  d["ag_d_form"] = r.ag_bound_d_form;
  d["smd"] = r.smd_bound;
  d["amd"] = r.amd_bound;
  d["sgd_preconditions_met"] = r.sgd_preconditions_met;
  d["ag_preconditions_met"] = r.ag_preconditions_met;
  d["smd_preconditions_met"] = r.smd_preconditions_met;
  d["amd_preconditions_met"] = r.amd_preconditions_met;
  d["warnings"] = r.warnings;
  return d;
}

Array run(const std::string& algo, const Dataset& data, std::size_t b, std::size_t n, double step, double p,
          const std::string& loss, const std::string& mirror, double radius, bool projection,
          std::size_t workers) {
  const LossModel model = LossModel::for_dataset(parse_loss(loss), data);
  const MirrorMap map = make_map(mirror, data.dimension(), radius);
  RunConfig c;
  c.batch_size = b;
  c.iterations = n;
  c.projection_enabled = projection;
  c.workers = workers;
  auto ex = data.examples();
  RunResult r;
  {
    py::gil_scoped_release release;
    switch (parse_algo(algo)) {
      case AlgoKind::sgd: r = run_sgd(model, map, Schedule::sgd(step), ex, c); break;
      case AlgoKind::smd: r = run_smd(model, map, Schedule::smd(step), ex, c); break;
      case AlgoKind::ag: r = run_ag(model, map, Schedule::ag(step, p), ex, c); break;
      case AlgoKind::amd: r = run_amd(model, map, Schedule::amd(step, p), ex, c); break;
    }
  }
  return to_numpy(r.w);
}

std::string run_spec(const std::string& command, const std::string& spec_json) {
  auto spec = spec_from_json(spec_json);
  ExperimentResult r;
  {
    py::gil_scoped_release release;
    if (command == "train") r = cmd_train(spec);
    else if (command == "sweep-b") r = cmd_sweep_b(spec);
    else if (command == "sweep-p") r = cmd_sweep_p(spec);
    else throw ValidationError("unknown command '" + command + "'");
  }
  return results_csv_string(r.rows);
}

}  // namespace

PYBIND11_MODULE(_mbaccel, m) {
  m.doc() = "Mini-batch SGD / accelerated gradient with polynomial step schedules.";

  // Exception types live for the whole process; keep raw handles.
  static PyObject* validation = py::exception<ValidationError>(m, "ValidationError", PyExc_ValueError).release().ptr();
  static PyObject* domain = py::exception<DomainError>(m, "DomainError", PyExc_ValueError).release().ptr();
  static PyObject* parse = py::exception<ParseError>(m, "ParseError", validation).release().ptr();
  static PyObject* divergence =
      py::exception<DivergenceError>(m, "DivergenceError", PyExc_RuntimeError).release().ptr();
  py::register_exception_translator([](std::exception_ptr p) {
    try {
      if (p) std::rethrow_exception(p);
    } catch (const ParseError& e) {
      py::object err = py::handle(parse)(e.what());
      err.attr("line") = e.line();
      PyErr_SetObject(parse, err.ptr());
    } catch (const ValidationError& e) {
      py::set_error(validation, e.what());
    } catch (const DomainError& e) {
      py::set_error(domain, e.what());
    } catch (const DivergenceError& e) {
      py::set_error(divergence, e.what());
    }
  });

  py::class_<Dataset>(m, "Dataset")
      .def_property_readonly("size", &Dataset::size)
      .def_property_readonly("dimension", &Dataset::dimension)
      .def("__len__", &Dataset::size)
      .def("labels", [](const Dataset& d) {
        std::vector<int> y;
        for (const auto& z : d.examples()) y.push_back(z.label);
        return y;
      })
      .def("to_dense", [](const Dataset& d) {
        py::array_t<double> x({static_cast<py::ssize_t>(d.size()), static_cast<py::ssize_t>(d.dimension())});
        auto v = x.mutable_unchecked<2>();
        for (py::ssize_t i = 0; i < v.shape(0); ++i) {
          for (py::ssize_t j = 0; j < v.shape(1); ++j) v(i, j) = 0.0;
          for (const auto& e : d[i].features.entries()) v(i, e.index - 1) = e.value;
        }
        return x;
      })
      .def("to_libsvm", [](const Dataset& d) { return write_libsvm_string(d); });

  m.def("parse_libsvm", &parse_libsvm_string, py::arg("text"));
  m.def("read_libsvm", &read_libsvm_file, py::arg("path"));
  m.def(
      "synthesize",
      [](std::size_t size, std::size_t dimension, double margin, double noise, std::uint64_t seed) {
        auto s = synthesize({size, dimension, margin, noise}, seed);
        return py::make_tuple(std::move(s.dataset), to_numpy(s.planted_w));
      },
      py::arg("m"), py::arg("d"), py::arg("margin") = 1.5, py::arg("noise") = 0.0, py::arg("seed") = 1);
  m.def(
      "censor",
      [](const Dataset& d, const Array& w) { return censor(d, from_numpy(w)); }, py::arg("data"),
      py::arg("predictor"));

  m.def(
      "mean_loss",
      [](const Dataset& d, const Array& w, const std::string& loss) {
        const auto model = LossModel::for_dataset(parse_loss(loss), d);
        return mean_loss(model, from_numpy(w), d.examples());
      },
      py::arg("data"), py::arg("w"), py::arg("loss") = "smoothed_hinge");
  m.def(
      "misclassification_rate",
      [](const Dataset& d, const Array& w) { return misclassification_rate(from_numpy(w), d.examples()); },
      py::arg("data"), py::arg("w"));
  m.def(
      "estimate_H", [](const Dataset& d, const std::string& loss) { return estimate_H(parse_loss(loss), d); },
      py::arg("data"), py::arg("loss") = "smoothed_hinge");

  m.def("ag_p", &ag_p, py::arg("b"), py::arg("n"));
  m.def("ag_p_log_ratio", &ag_p_log_ratio, py::arg("b"), py::arg("n"));
  m.def(
      "sgd_eta",
      [](double H, std::size_t b, std::size_t n, double L_star, double w_star_norm) {
        return sgd_eta(make_params(H, b, n, L_star, w_star_norm, {}, {}, 1.0));
      },
      py::arg("H"), py::arg("b"), py::arg("n"), py::arg("L_star"), py::arg("w_star_norm"));
  m.def(
      "ag_gamma",
      [](double H, std::size_t b, std::size_t n, double L_star, double w_star_norm, double p,
         std::optional<double> D, const std::string& form) {
        GammaForm f;
        if (form == "general") f = GammaForm::general;
        else if (form == "euclidean") f = GammaForm::euclidean;
        else throw ValidationError("unknown gamma form '" + form + "'");
        return ag_gamma(make_params(H, b, n, L_star, w_star_norm, D, {}, 1.0), p, f);
      },
      py::arg("H"), py::arg("b"), py::arg("n"), py::arg("L_star"), py::arg("w_star_norm"), py::arg("p"),
      py::arg("D") = py::none(), py::arg("form") = "general");
  m.def(
      "evaluate_bounds",
      [](double H, std::size_t b, std::size_t n, double L_star, double w_star_norm, std::optional<double> D,
         std::optional<double> R_star, double K) {
        return bounds_dict(evaluate_bounds(make_params(H, b, n, L_star, w_star_norm, D, R_star, K)));
      },
      py::arg("H"), py::arg("b"), py::arg("n"), py::arg("L_star"), py::arg("w_star_norm"),
      py::arg("D") = py::none(), py::arg("R_star") = py::none(), py::arg("K") = 1.0);
  m.def(
      "classify_regime",
      [](const std::string& algo, double b, double m_, double L_star, double eps) {
        Algorithm a;
        if (algo == "sgd") a = Algorithm::sgd;
        else if (algo == "ag") a = Algorithm::ag;
        else throw ValidationError("unknown algorithm '" + algo + "'");
        auto r = classify_regime(a, b, m_, L_star, eps);
        py::dict d;
        d["regime"] = r.regime_label;
        d["condition"] = r.condition;
        d["predicted_n"] = r.predicted_n;
        d["max_serial_b"] = r.max_serial_b;
        d["notes"] = r.notes;
        return d;
      },
      py::arg("algorithm"), py::arg("b"), py::arg("m"), py::arg("L_star"), py::arg("epsilon"));
  m.def("max_serial_batch", &max_serial_batch, py::arg("L_star"), py::arg("epsilon"));

  m.def("run", &run, py::arg("algorithm"), py::arg("data"), py::arg("b"), py::arg("n"), py::arg("step"),
        py::arg("p") = 0.0, py::arg("loss") = "smoothed_hinge", py::arg("mirror") = "euclidean",
        py::arg("radius") = 1e6, py::arg("projection") = true, py::arg("workers") = 1,
        "Runs one optimizer over the first n*b examples; returns the output predictor.");
  m.def("run_experiment", &run_spec, py::arg("command"), py::arg("spec_json"),
        "Runs train / sweep-b / sweep-p from a JSON spec; returns the results CSV.");
  m.def(
      "bounds_json",
      [](double H, std::size_t b, std::size_t n, double L_star, double w_star_norm, double epsilon) {
        return cmd_bounds({make_params(H, b, n, L_star, w_star_norm, {}, {}, 1.0), epsilon}).json;
      },
      py::arg("H"), py::arg("b"), py::arg("n"), py::arg("L_star"), py::arg("w_star_norm"),
      py::arg("epsilon") = 0.01);
  m.def(
      "verify_json", [](std::size_t trials, std::uint64_t seed) { return cmd_verify(trials, seed).json; },
      py::arg("trials") = 10000, py::arg("seed") = 1);
}
