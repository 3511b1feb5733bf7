#include <sstream>

#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "gsr/analysis.hpp"
#include "gsr/design.hpp"
#include "gsr/error.hpp"
#include "gsr/estimators.hpp"
#include "gsr/experiment.hpp"

namespace py = pybind11;
using namespace gsr;

namespace {

NodeWeights weights_from(const py::object& w) {
  if (py::isinstance<py::float_>(w) || py::isinstance<py::int_>(w)) return NodeWeights::invariant(w.cast<double>());
  return NodeWeights::adaptive(w.cast<VectorXd>());
}

SolveMethod method_from(const std::string& name) {
  if (name == "direct") return SolveMethod::Direct;
  if (name == "cg") return SolveMethod::ConjugateGradient;
  if (name == "distributed") return SolveMethod::Distributed;
  throw DomainError("unknown solve method '" + name + "'");
}

py::dict design_dict(const DesignResult& r) {
  py::dict d;
  d["omega"] = r.omega;
  d["Omega"] = r.Omega;
  d["objective"] = r.objective_value;
  d["rank1_quality"] = r.rank1_quality;
  d["iterations"] = r.solver_stats.iterations;
  return d;
}

DesignProblem exact_problem(const Laplacian& lap, const VectorXd& x, double sigma2, double w0) {
  return DesignProblem{lap, ExactSignal{x}, NoiseModel::isotropic(lap.size(), sigma2), w0, {}};
}

}  // namespace

PYBIND11_MODULE(_gsr, m) {
  m.doc() = "Node-adaptive Tikhonov graph signal reconstruction";

  // Translators run newest first, so the base class goes first.
  py::register_exception<Error>(m, "Error", PyExc_RuntimeError);
  py::register_exception<DimensionError>(m, "DimensionError", PyExc_ValueError);
  py::register_exception<DomainError>(m, "DomainError", PyExc_ValueError);
  py::register_exception<ParseError>(m, "ParseError", PyExc_ValueError);
  py::register_exception<ConnectivityError>(m, "ConnectivityError", PyExc_RuntimeError);
  py::register_exception<SingularSystemError>(m, "SingularSystemError", PyExc_RuntimeError);
  py::register_exception<SolverError>(m, "SolverError", PyExc_RuntimeError);

  py::class_<Graph>(m, "Graph")
      .def(py::init([](Index n, const std::vector<std::tuple<Index, Index, double>>& edges) {
             std::vector<Edge> list;
             for (const auto& [i, j, w] : edges) list.push_back({i, j, w});
             return Graph(n, std::move(list));
           }),
           py::arg("n"), py::arg("edges"))
      .def_property_readonly("size", &Graph::size)
      .def_property_readonly("edge_count", &Graph::edge_count)
      .def("edges",
           [](const Graph& g) {
             std::vector<std::tuple<Index, Index, double>> out;
             for (const Edge& e : g.edges()) out.emplace_back(e.i, e.j, e.weight);
             return out;
           })
      .def("adjacency", &Graph::adjacency)
      .def("is_connected", &Graph::is_connected);

  m.def("erdos_renyi", &erdos_renyi, py::arg("n"), py::arg("p"), py::arg("seed"));
  m.def("knn_geometric", &knn_geometric, py::arg("coords"), py::arg("k"), py::arg("kernel_scale"));

  py::class_<Laplacian>(m, "Laplacian")
      .def(py::init<const Graph&>(), py::arg("graph"))
      .def_property_readonly("size", &Laplacian::size)
      .def("matrix", [](const Laplacian& l) { return MatrixXd(l.matrix()); })
      .def("eigenvalues", [](const Laplacian& l) { return VectorXd(l.eigenvalues()); })
      .def_property_readonly("lambda_max", &Laplacian::lambda_max);

  m.def("bandlimited_signal", &bandlimited_signal, py::arg("lap"), py::arg("bandwidth"), py::arg("seed") = 0,
        py::arg("random_coefficients") = false);
  m.def("snr_to_sigma", &snr_to_sigma, py::arg("x"), py::arg("snr_db"));
  m.def("nmse", &nmse, py::arg("estimate"), py::arg("truth"));
  m.def("add_noise",
        [](const VectorXd& x, double sigma2, std::uint64_t seed) {
          return add_noise(x, NoiseModel::isotropic(x.size(), sigma2, seed)).y;
        },
        py::arg("x"), py::arg("sigma2"), py::arg("seed"));
  m.def("optimal_w0", &optimal_w0, py::arg("lap"), py::arg("snr_db"), py::arg("multiplier") = 1.0);

  m.def("filter_matrix", [](const Laplacian& lap, const py::object& w) { return filter_matrix(lap, weights_from(w)); },
        py::arg("lap"), py::arg("weights"));
  m.def("solve",
        [](const Laplacian& lap, const py::object& w, const VectorXd& y, const std::string& method, double tol,
           int max_iterations) {
          SolveOptions opts;
          opts.method = method_from(method);
          opts.cg_tolerance = tol;
          opts.max_iterations = max_iterations;
          const SolveReport r = solve(lap, weights_from(w), Observation::full(y), opts);
          return py::make_tuple(r.estimate, r.iterations_used);
        },
        py::arg("lap"), py::arg("weights"), py::arg("y"), py::arg("method") = "direct", py::arg("tol") = 1e-10,
        py::arg("max_iterations") = 0,
        "Full-observation estimate and the iteration count; weights is a scalar w0 or a vector.");
  m.def("interpolate",
        [](const Laplacian& lap, const py::object& w, const VectorXd& y, std::vector<Index> mask) {
          return solve_interpolation(lap, weights_from(w), Observation::masked(y, std::move(mask))).estimate;
        },
        py::arg("lap"), py::arg("weights"), py::arg("y"), py::arg("mask"));

  m.def("decompose_error",
        [](const Laplacian& lap, const py::object& w, const VectorXd& x, double sigma2) {
          const ErrorDecomposition e = decompose_error(lap, weights_from(w), x, NoiseModel::isotropic(x.size(), sigma2));
          py::dict d;
          d["bias_sq"] = e.bias_sq;
          d["variance"] = e.variance;
          d["mse"] = e.mse;
          return d;
        },
        py::arg("lap"), py::arg("weights"), py::arg("x"), py::arg("sigma2"));
  m.def("check_lemma1", &check_lemma1, py::arg("w0"), py::arg("w"));
  m.def("check_theorem1",
        [](const Laplacian& lap, double w0, const VectorXd& w, const VectorXd& x, double sigma2) {
          return check_theorem1(w0, w, theorem_quantities(lap, x, NoiseModel::isotropic(x.size(), sigma2)));
        },
        py::arg("lap"), py::arg("w0"), py::arg("w"), py::arg("x"), py::arg("sigma2"));
  m.def("check_corollary1",
        [](const Laplacian& lap, const VectorXd& w, const VectorXd& x, double sigma2) {
          return check_corollary1(w, theorem_quantities(lap, x, NoiseModel::isotropic(x.size(), sigma2)));
        },
        py::arg("lap"), py::arg("w"), py::arg("x"), py::arg("sigma2"));

  m.def("design_prony",
        [](const Laplacian& lap, const VectorXd& x, double w0) {
          return design_dict(design_prony(DesignProblem{lap, ExactSignal{x}, std::nullopt, w0, {}}));
        },
        py::arg("lap"), py::arg("x"), py::arg("w0"));
  m.def("design_sdr",
        [](const Laplacian& lap, const VectorXd& x, double sigma2, double w0) {
          return design_dict(design_sdr(exact_problem(lap, x, sigma2, w0)));
        },
        py::arg("lap"), py::arg("x"), py::arg("sigma2"), py::arg("w0"));
  m.def("recover_omega",
        [](const MatrixXd& h, const Laplacian& lap, bool full_support) {
          return recover_omega(h, lap, {}, full_support ? OmegaSupport::Full : OmegaSupport::GraphEdges).Omega;
        },
        py::arg("H"), py::arg("lap"), py::arg("full_support") = false);

  m.def("run_experiment",
        [](const std::string& config_text, const std::string& data_path) {
          std::istringstream in(config_text);
          std::ostringstream out;
          emit_csv(run_experiment(parse_config(in), data_path), out);
          return out.str();
        },
        py::arg("config"), py::arg("data_path") = "",
        "Runs a `key = value` experiment config and returns the result CSV text.");
}
