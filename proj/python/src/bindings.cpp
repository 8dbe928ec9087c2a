#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "psvm/alter.hpp"
#include "psvm/conv.hpp"
#include "psvm/errors.hpp"
#include "psvm/harness.hpp"
#include "psvm/invcal.hpp"
#include "psvm/label_opt.hpp"

namespace py = pybind11;
using namespace psvm;

namespace {

BagPartition make_partition(const std::vector<std::vector<std::size_t>>& bags, const std::vector<double>& proportions) {
  BagPartition part;
  part.bags = bags;
  part.proportions = proportions;
  return part;
}

KernelConfig make_kernel(const std::string& kernel, double gamma) { return KernelConfig::parse(kernel, gamma); }

}  // namespace

PYBIND11_MODULE(_psvm, m) {
  m.doc() = "Large-margin learning from bag label proportions";

  py::register_exception<ConfigError>(m, "ConfigError", PyExc_ValueError);
  py::register_exception<ParseError>(m, "ParseError", PyExc_ValueError);
  py::register_exception<SolverError>(m, "SolverError", PyExc_RuntimeError);
  py::register_exception<DegenerateKernelError>(m, "DegenerateKernelError", PyExc_RuntimeError);

  py::class_<PsvmModel>(m, "Model")
      .def_property_readonly("method", [](const PsvmModel& s) { return method_name(s.method); })
      .def_readonly("coefficients", &PsvmModel::coefficients)
      .def_readonly("bias", &PsvmModel::bias)
      .def_readonly("objective", &PsvmModel::objective)
      .def_readonly("labels", &PsvmModel::labels)
      .def_readonly("converged", &PsvmModel::converged)
      .def("decision_function", &PsvmModel::decision_function, py::arg("x"))
      .def("predict", &PsvmModel::predict, py::arg("x"))
      .def("to_json", &PsvmModel::to_json)
      .def_static("from_json", [](const std::string& text) { return PsvmModel::from_json(text); });

  m.def(
      "train_alter",
      [](const Eigen::MatrixXd& x, const std::vector<std::vector<std::size_t>>& bags,
         const std::vector<double>& proportions, double C, double C_p, const std::string& kernel, double gamma,
         std::size_t restarts, std::uint64_t seed) {
        AlterParams p;
        p.C = C;
        p.C_p = C_p;
        p.kernel = make_kernel(kernel, gamma);
        p.restarts = restarts;
        p.seed = seed;
        py::gil_scoped_release release;
        return train_alter(x, make_partition(bags, proportions), p).model;
      },
      py::arg("x"), py::arg("bags"), py::arg("proportions"), py::arg("C") = 1.0, py::arg("C_p") = 10.0,
      py::arg("kernel") = "linear", py::arg("gamma") = 1.0, py::arg("restarts") = 10, py::arg("seed") = 0);

  m.def(
      "train_conv",
      [](const Eigen::MatrixXd& x, const std::vector<std::vector<std::size_t>>& bags,
         const std::vector<double>& proportions, double C, double eps, const std::string& kernel, double gamma) {
        ConvParams p;
        p.C = C;
        p.eps = eps;
        p.kernel = make_kernel(kernel, gamma);
        py::gil_scoped_release release;
        return train_conv(x, make_partition(bags, proportions), p).model;
      },
      py::arg("x"), py::arg("bags"), py::arg("proportions"), py::arg("C") = 1.0, py::arg("eps") = 0.0,
      py::arg("kernel") = "linear", py::arg("gamma") = 1.0);

  m.def(
      "train_invcal",
      [](const Eigen::MatrixXd& x, const std::vector<std::vector<std::size_t>>& bags,
         const std::vector<double>& proportions, double C_p, double eps, const std::string& kernel, double gamma) {
        InvCalParams p;
        p.C_p = C_p;
        p.eps_margin = eps;
        p.kernel = make_kernel(kernel, gamma);
        py::gil_scoped_release release;
        return train_invcal(x, make_partition(bags, proportions), p).model;
      },
      py::arg("x"), py::arg("bags"), py::arg("proportions"), py::arg("C_p") = 1.0, py::arg("eps") = 0.0,
      py::arg("kernel") = "linear", py::arg("gamma") = 1.0);

  m.def(
      "optimize_bag",
      [](const std::vector<double>& scores, double p, double ratio) {
        const BagLabeling b = optimize_bag_penalized(scores, p, ratio);
        return py::make_tuple(b.labels, b.objective);
      },
      py::arg("scores"), py::arg("p"), py::arg("ratio"),
      "Best labels of one bag for decision values `scores` and their objective.");

  m.def(
      "bag_error",
      [](const std::vector<int>& labels, const std::vector<std::vector<std::size_t>>& bags,
         const std::vector<double>& proportions) { return bag_error(labels, make_partition(bags, proportions)); },
      py::arg("labels"), py::arg("bags"), py::arg("proportions"));

  m.def("toy_dataset", [] {
    auto [d, part] = make_toy_dataset();
    return py::make_tuple(d.features, *d.labels, part.bags, part.proportions);
  });

  m.def(
      "run_toy",
      [](const std::vector<std::string>& methods, std::uint64_t seed) {
        std::vector<Method> ms;
        for (const auto& s : methods) ms.push_back(parse_method(s));
        py::dict out;
        for (const auto& r : run_toy(ms, seed)) out[py::str(method_name(r.method))] = r.accuracy;
        return out;
      },
      py::arg("methods") = std::vector<std::string>{"alter", "conv", "invcal"}, py::arg("seed") = 0);

  m.def(
      "run_benchmark",
      [](const std::string& config_text) {
        const ExperimentConfig cfg = parse_config(config_text);
        py::gil_scoped_release release;
        return run_experiment(cfg).to_json();
      },
      py::arg("config"), "Runs the cross-validated benchmark described by `key = value` text; returns the JSON report.");
}
