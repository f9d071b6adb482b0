// Copyright 2026 The data2ld Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <optional>
#include <utility>
#include <vector>

#include "data2ld/errors.hpp"
#include "data2ld/inference.hpp"
#include "data2ld/ladder.hpp"
#include "data2ld/simulation.hpp"

namespace py = pybind11;

namespace {

using data2ld::BSplineBasis;
using data2ld::FitProblem;
using data2ld::LadderControls;
using data2ld::LadderTrace;
using data2ld::LinearODEModel;
using data2ld::SimulationScenario;

SimulationScenario scenario_of(double impact_time, double pulse_width,
                               double domain_start, double domain_end,
                               int n_obs, double sigma, std::uint64_t seed) {
  SimulationScenario scenario;
  scenario.impact_time = impact_time;
  scenario.pulse_width = pulse_width;
  scenario.domain_start = domain_start;
  scenario.domain_end = domain_end;
  scenario.n_obs = n_obs;
  scenario.sigma = sigma;
  scenario.base_seed = seed;
  return scenario;
}

FitProblem problem_of(const Eigen::VectorXd& t, const Eigen::VectorXd& y,
                      double impact_time, double pulse_width,
                      double domain_start, double domain_end, int order,
                      int post_pulse_knots) {
  if (t.size() != y.size())
    throw data2ld::DataError("t and y must have the same length");
  const SimulationScenario scenario = scenario_of(
      impact_time, pulse_width, domain_start, domain_end,
      static_cast<int>(t.size()), 0.0, 0u);
  const LinearODEModel model = scenario.model();
  const BSplineBasis basis =
      data2ld::pulse_basis({domain_start, domain_end}, impact_time,
                           pulse_width, order, post_pulse_knots);
  const std::vector<double> times(t.data(), t.data() + t.size());
  return data2ld::make_fit_problem(y, times, model, basis,
                                   data2ld::make_quadrature(basis));
}

py::dict simulate(int n_obs, double sigma, int replicate, std::uint64_t seed,
                  double impact_time, double pulse_width, double domain_start,
                  double domain_end) {
  const SimulationScenario scenario = scenario_of(
      impact_time, pulse_width, domain_start, domain_end, n_obs, sigma, seed);
  const data2ld::ReplicateData data =
      data2ld::generate_data(scenario, replicate);
  const data2ld::IVPSolution truth = data2ld::true_solution(scenario);
  py::dict out;
  const Eigen::VectorXd times = Eigen::Map<const Eigen::VectorXd>(
      data.times.data(), static_cast<int>(data.times.size()));
  out["t"] = times;
  out["y"] = data.y;
  out["truth"] = truth.eval_many(data.times);
  out["noise_sd"] = data.noise_sd;
  return out;
}

py::dict fit(const Eigen::VectorXd& t, const Eigen::VectorXd& y,
             double impact_time, double pulse_width, double domain_start,
             double domain_end, double rho_max,
             std::optional<Eigen::VectorXd> theta0, int order,
             int post_pulse_knots) {
  const FitProblem prob =
      problem_of(t, y, impact_time, pulse_width, domain_start, domain_end,
                 order, post_pulse_knots);
  LadderControls controls;
  controls.rho_max = rho_max;
  if (theta0) controls.theta0 = *theta0;
  const LadderTrace trace = data2ld::run_ladder(prob, controls);
  if (trace.states.empty())
    throw data2ld::NumericalError("no accepted rungs: " + trace.failure);
  const data2ld::InferenceReport report =
      data2ld::build_inference(trace.theta_hat, trace.rho_hat, prob);

  const int n_rungs = static_cast<int>(trace.states.size());
  Eigen::VectorXd ladder_rho(n_rungs);
  Eigen::MatrixXd ladder_theta(n_rungs, trace.theta_hat.size());
  for (int i = 0; i < n_rungs; ++i) {
    ladder_rho[i] = trace.states[i].rho;
    ladder_theta.row(i) = trace.states[i].theta.transpose();
  }

  py::dict out;
  out["theta_hat"] = report.theta_hat;
  out["theta_se"] = report.theta_se;
  out["theta_ci"] = report.theta_ci;
  out["rho"] = report.rho;
  out["df"] = report.df;
  out["sigma_y"] = std::sqrt(report.sigma2_y);
  out["h"] = trace.h_hat;
  out["converged"] = trace.converged;
  out["x_hat"] = report.x_hat;
  out["x_ci"] = report.x_ci;
  out["x_pi"] = report.x_pi;
  out["ladder_rho"] = ladder_rho;
  out["ladder_theta"] = ladder_theta;
  return out;
}

double h_value(const Eigen::VectorXd& theta, double rho,
               const Eigen::VectorXd& t, const Eigen::VectorXd& y,
               double impact_time, double pulse_width, double domain_start,
               double domain_end, int order, int post_pulse_knots) {
  const FitProblem prob =
      problem_of(t, y, impact_time, pulse_width, domain_start, domain_end,
                 order, post_pulse_knots);
  return data2ld::H_value(theta, rho, prob);
}

}  // namespace

PYBIND11_MODULE(_data2ld, m) {
  m.doc() =
      "Parameter and solution estimation for linear differential equations "
      "from noisy observations";

  py::register_exception_translator([](std::exception_ptr p) {
    try {
      if (p) std::rethrow_exception(p);
    } catch (const data2ld::ConfigError& e) {
      PyErr_SetString(PyExc_ValueError, e.what());
    } catch (const data2ld::DataError& e) {
      PyErr_SetString(PyExc_ValueError, e.what());
    } catch (const data2ld::NumericalError& e) {
      PyErr_SetString(PyExc_RuntimeError, e.what());
    }
  });

  m.def("simulate", &simulate, py::arg("n_obs") = 101,
        py::arg("sigma") = 0.05, py::arg("replicate") = 0,
        py::arg("seed") = 20260816u, py::arg("impact_time") = 14.0,
        py::arg("pulse_width") = 1.0, py::arg("domain_start") = 0.0,
        py::arg("domain_end") = 60.0,
        "Simulated observations of the pulse-forced second-order equation: "
        "dict with t, y, truth, noise_sd. Deterministic in (seed, "
        "replicate).");

  m.def("fit", &fit, py::arg("t"), py::arg("y"), py::arg("impact_time") = 14.0,
        py::arg("pulse_width") = 1.0, py::arg("domain_start") = 0.0,
        py::arg("domain_end") = 60.0, py::arg("rho_max") = 0.995,
        py::arg("theta0") = std::nullopt, py::arg("order") = 5,
        py::arg("post_pulse_knots") = 11,
        "Smoothing-ladder parameter estimate with confidence and prediction "
        "bands: dict with theta_hat, theta_se, theta_ci, rho, df, sigma_y, "
        "h, converged, x_hat, x_ci, x_pi, ladder_rho, ladder_theta.");

  m.def("h_value", &h_value, py::arg("theta"), py::arg("rho"), py::arg("t"),
        py::arg("y"), py::arg("impact_time") = 14.0,
        py::arg("pulse_width") = 1.0, py::arg("domain_start") = 0.0,
        py::arg("domain_end") = 60.0, py::arg("order") = 5,
        py::arg("post_pulse_knots") = 11,
        "Outer criterion value at (theta, rho): the sum of squared "
        "observation residuals at the penalized coefficient solve.");
}
