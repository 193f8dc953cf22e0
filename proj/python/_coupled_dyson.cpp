#include <pybind11/complex.h>
#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <sstream>

#include "coupled_dyson/error.hpp"
#include "coupled_dyson/ldp.hpp"
#include "coupled_dyson/spectral.hpp"
#include "coupled_dyson/trace_flow.hpp"
#include "coupled_dyson/version.hpp"
#include "experiments.hpp"

namespace py = pybind11;
using namespace cdyson;

namespace {

CouplingModel make_model(const Eigen::MatrixXd& gamma, const Eigen::MatrixXd& rho, int N, double beta) {
  CouplingModel m;
  m.k = static_cast<int>(gamma.rows());
  m.N = N;
  m.beta = beta;
  m.gamma = gamma;
  m.rho = rho;
  validate_model(m);
  return m;
}

// (exit code, stdout, stderr) of one command line.
py::tuple run_cli(const std::vector<std::string>& args) {
  std::ostringstream out, err;
  int code = 0;
  {
    py::gil_scoped_release release;
    code = cli::run_cli(args, out, err);
  }
  return py::make_tuple(code, out.str(), err.str());
}

}  // namespace

PYBIND11_MODULE(_coupled_dyson, m) {
  m.doc() = "Coupled matrix Ornstein-Uhlenbeck processes: traces, spectra, large deviations.";
  m.attr("__version__") = kVersion;

  m.def("stationary_covariance",
        [](const Eigen::MatrixXd& gamma, const Eigen::MatrixXd& rho, double beta) {
          return stationary_covariance(make_model(gamma, rho, 1, beta)).sigma;
        },
        py::arg("gamma"), py::arg("rho"), py::arg("beta") = 1.0,
        "Stationary covariance of the k traces (Lyapunov solve).");
  m.def("closed_form_stationary_covariance", &closed_form_stationary_covariance, py::arg("g"), py::arg("r"));

  m.def("simulate_coupled_traces",
        [](const Eigen::MatrixXd& gamma, const Eigen::MatrixXd& rho, double T, double dt, std::uint64_t seed,
           std::uint64_t stream, double beta, const std::string& scheme, double burn_in, int record_every) {
          TraceSimOptions o;
          o.T = T;
          o.dt = dt;
          o.burn_in = burn_in;
          o.record_every = record_every;
          if (scheme == "exact") o.scheme = TraceScheme::kExact;
          else if (scheme == "euler") o.scheme = TraceScheme::kEulerMaruyama;
          else throw py::value_error("scheme must be \"exact\" or \"euler\"");
          const TracePath p = simulate_coupled_traces(make_model(gamma, rho, 1, beta), o, SeededRng{seed, stream});
          Eigen::MatrixXd values(p.values.size(), gamma.rows());
          for (std::size_t i = 0; i < p.values.size(); ++i) values.row(i) = p.values[i].transpose();
          return py::make_tuple(Eigen::VectorXd::Map(p.times.data(), p.times.size()).eval(), values);
        },
        py::arg("gamma"), py::arg("rho"), py::arg("T"), py::arg("dt"), py::arg("seed"), py::arg("stream") = 0,
        py::arg("beta") = 1.0, py::arg("scheme") = "exact", py::arg("burn_in") = 0.0, py::arg("record_every") = 1,
        "Returns (times, values) with values of shape (len(times), k).");

  m.def("rate_function",
        [](double x, double y, double gamma, double rho) { return rate_function(x, y, {gamma, rho}); },
        py::arg("x"), py::arg("y"), py::arg("gamma"), py::arg("rho"));
  m.def("hamiltonian",
        [](const Eigen::Vector2d& p, const Eigen::Vector2d& x, double gamma, double rho) {
          return hamiltonian(p, x, {gamma, rho});
        },
        py::arg("p"), py::arg("x"), py::arg("gamma"), py::arg("rho"));
  m.def("solve_instanton",
        [](const Eigen::Vector2d& target, double gamma, double rho, double T, int steps) {
          const InstantonSolution s = solve_instanton(target, {gamma, rho}, T, steps);
          Eigen::MatrixXd x(s.times.size(), 2), p(s.times.size(), 2);
          for (std::size_t i = 0; i < s.times.size(); ++i) {
            x.row(i) = s.x_path[i].transpose();
            p.row(i) = s.p_path[i].transpose();
          }
          py::dict d;
          d["times"] = Eigen::VectorXd::Map(s.times.data(), s.times.size()).eval();
          d["x"] = x;
          d["p"] = p;
          d["action"] = s.action;
          d["action_quadrature"] = s.estimates.quadrature;
          d["terminal_error"] = s.terminal_error;
          d["hamiltonian_drift"] = s.hamiltonian_drift;
          return d;
        },
        py::arg("target"), py::arg("gamma"), py::arg("rho"), py::arg("T") = 20.0, py::arg("steps") = 2000);

  m.def("semicircle_density", &semicircle_density, py::arg("x"));
  m.def("semicircle_stieltjes", &scaled_semicircle_stieltjes, py::arg("z"), py::arg("variance") = 1.0);
  m.def("stieltjes_of_sample", &stieltjes_of_sample, py::arg("sample"), py::arg("z"));
  m.def("spectral_form_factor", &spectral_form_factor, py::arg("sample"), py::arg("t"));

  m.def("subcommands", &cli::subcommands);
  m.def("run_cli", &run_cli, py::arg("args"),
        "Runs one coupled-dyson command line in process; returns (exit_code, stdout, stderr).");

  py::register_exception<Error>(m, "CoupledDysonError", PyExc_ValueError);
}
