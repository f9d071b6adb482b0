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

#include "data2ld/inference.hpp"

#include <doctest.h>

#include <cmath>
#include <vector>

#include "data2ld/baselines.hpp"
#include "data2ld/errors.hpp"
#include "data2ld/ladder.hpp"
#include "data2ld/rng.hpp"
#include "data2ld/simulation.hpp"

using namespace data2ld;

namespace {

std::vector<double> linspace(double a, double b, int n) {
  std::vector<double> out(n);
  for (int i = 0; i < n; ++i) out[i] = a + (b - a) * i / (n - 1);
  return out;
}

const Eigen::VectorXd kTruth =
    (Eigen::VectorXd(3) << -0.05, -0.15, 0.39).finished();

FitProblem sim_problem(double sigma, unsigned long long seed) {
  const LinearODEModel model = head_impact_model(14.0, 1.0, {0.0, 60.0});
  const BSplineBasis basis = pulse_basis({0.0, 60.0}, 14.0, 1.0);
  const std::vector<double> times = linspace(0.0, 60.0, 101);
  const std::vector<double> grid = make_integration_grid(model, times, 0.01);
  const IVPSolution sol =
      rk4_solve(model, kTruth, Eigen::VectorXd::Zero(2), grid);
  Eigen::VectorXd y = sol.eval_many(times, 0);
  if (sigma > 0.0) {
    RngStream rng(seed);
    for (Eigen::Index i = 0; i < y.size(); ++i) y[i] += sigma * rng.normal();
  }
  return make_fit_problem(y, times, model, basis, make_quadrature(basis));
}

// Tightly converged minimizer for finite-difference refits.
Eigen::VectorXd refit_theta(const Eigen::VectorXd& start, double rho,
                            const FitProblem& prob) {
  OuterControls controls;
  controls.grad_tol = 1e-13;
  controls.step_tol = 1e-15;
  controls.max_iters = 200;
  controls.keep_trace = false;
  return minimize_H(start, rho, prob, controls).theta_hat;
}

}  // namespace

TEST_CASE("residual variance estimate follows the plain formula") {
  Eigen::VectorXd r = Eigen::VectorXd::Constant(25, 0.3);
  CHECK(sigma2_estimate(r, 0.0) == doctest::Approx(0.09).epsilon(1e-14));
  CHECK(sigma2_estimate(r, 5.0) ==
        doctest::Approx(25.0 * 0.09 / 20.0).epsilon(1e-14));
  CHECK_THROWS_AS(sigma2_estimate(r, 25.0), NumericalError);
  CHECK_THROWS_AS(sigma2_estimate(r, 30.0), NumericalError);
}

TEST_CASE("parameter sensitivity to data matches refitting") {
  // The sensitivity drops curvature terms proportional to the residual, so
  // the refit oracle runs on noise-free data where those terms vanish.
  const FitProblem prob = sim_problem(0.0, 0);
  const double rho = 0.9;
  const Eigen::VectorXd theta_hat =
      refit_theta(Eigen::VectorXd::Constant(3, 0.01), rho, prob);
  const InnerEvaluation eval = evaluate_inner(theta_hat, rho, prob);
  const Eigen::MatrixXd dtdy = dtheta_dy(eval, prob);
  REQUIRE(dtdy.rows() == 3);
  REQUIRE(dtdy.cols() == 101);

  const double h = 1e-5;
  for (int col : {0, 24, 50, 77, 100}) {
    Eigen::VectorXd y_up = prob.y;
    y_up[col] += h;
    Eigen::VectorXd y_down = prob.y;
    y_down[col] -= h;
    const Eigen::VectorXd t_up =
        refit_theta(theta_hat, rho, prob.with_observations(y_up));
    const Eigen::VectorXd t_down =
        refit_theta(theta_hat, rho, prob.with_observations(y_down));
    const Eigen::VectorXd fd = (t_up - t_down) / (2.0 * h);
    const double scale = dtdy.cwiseAbs().maxCoeff();
    CHECK((dtdy.col(col) - fd).cwiseAbs().maxCoeff() < 1e-3 * scale);
  }
}

TEST_CASE("single-parameter sensitivity matches refitting") {
  LinearODEModel model = head_impact_model(14.0, 1.0, {0.0, 60.0});
  model.coefficient_terms[1].fixed = true;
  model.coefficient_terms[1].fixed_coeffs = Eigen::VectorXd::Constant(1, -0.15);
  model.forcing_terms[0].gain_fixed = true;
  model.forcing_terms[0].gain_fixed_coeffs = Eigen::VectorXd::Constant(1, 0.39);
  const BSplineBasis basis = pulse_basis({0.0, 60.0}, 14.0, 1.0);
  const std::vector<double> times = linspace(0.0, 60.0, 101);
  const std::vector<double> grid = make_integration_grid(model, times, 0.01);
  const Eigen::VectorXd y =
      rk4_solve(head_impact_model(14.0, 1.0, {0.0, 60.0}), kTruth,
                Eigen::VectorXd::Zero(2), grid)
          .eval_many(times, 0);
  const FitProblem prob =
      make_fit_problem(y, times, model, basis, make_quadrature(basis));

  const double rho = 0.9;
  const Eigen::VectorXd theta_hat =
      refit_theta(Eigen::VectorXd::Constant(1, 0.01), rho, prob);
  const InnerEvaluation eval = evaluate_inner(theta_hat, rho, prob);
  const Eigen::MatrixXd dtdy = dtheta_dy(eval, prob);
  const double scale = dtdy.cwiseAbs().maxCoeff();
  const double h = 1e-5;
  for (int col : {5, 30, 55, 80}) {
    Eigen::VectorXd y_up = prob.y;
    y_up[col] += h;
    Eigen::VectorXd y_down = prob.y;
    y_down[col] -= h;
    const double fd =
        (refit_theta(theta_hat, rho, prob.with_observations(y_up))[0] -
         refit_theta(theta_hat, rho, prob.with_observations(y_down))[0]) /
        (2.0 * h);
    CHECK(std::abs(dtdy(0, col) - fd) < 1e-3 * scale);
  }
}

TEST_CASE("data directions the stationarity cannot see leave theta still") {
  const FitProblem prob = sim_problem(0.05, 7117);
  const double rho = 0.9;
  const Eigen::VectorXd theta_hat =
      refit_theta(Eigen::VectorXd::Constant(3, 0.01), rho, prob);
  const InnerEvaluation eval = evaluate_inner(theta_hat, rho, prob);
  const Eigen::MatrixXd dtdy = dtheta_dy(eval, prob);

  // B = d(grad H)/dy up to the Gauss-Newton approximation; projecting a
  // direction out of B's row space must zero the sensitivity response.
  const double n = static_cast<double>(prob.n_obs());
  const Eigen::MatrixXd a_hat = (1.0 - rho) / n * prob.phi *
                                eval.fit.m_factor.solve(prob.phi.transpose());
  const Eigen::MatrixXd b =
      eval.jacobian.transpose() *
      (Eigen::MatrixXd::Identity(prob.n_obs(), prob.n_obs()) - a_hat);
  RngStream rng(64);
  for (int trial = 0; trial < 10; ++trial) {
    Eigen::VectorXd v(prob.n_obs());
    for (Eigen::Index i = 0; i < v.size(); ++i)
      v[i] = 2.0 * rng.uniform01() - 1.0;
    const Eigen::VectorXd delta =
        v - b.transpose() *
                (b * b.transpose()).ldlt().solve(b * v);
    const double response = (dtdy * delta).cwiseAbs().maxCoeff();
    const double control = (dtdy * v).cwiseAbs().maxCoeff();
    CHECK(response < 1e-10 * (1.0 + control));
  }
}

TEST_CASE("coefficient sensitivity to data matches refitting") {
  const FitProblem prob = sim_problem(0.0, 0);
  const double rho = 0.9;
  const Eigen::VectorXd theta_hat =
      refit_theta(Eigen::VectorXd::Constant(3, 0.01), rho, prob);
  const InnerEvaluation eval = evaluate_inner(theta_hat, rho, prob);
  const Eigen::MatrixXd dtdy = dtheta_dy(eval, prob);
  const Eigen::MatrixXd dcdy = dc_dy_total(eval, prob, dtdy);
  REQUIRE(dcdy.rows() == prob.phi.cols());
  REQUIRE(dcdy.cols() == 101);

  const double h = 1e-5;
  for (int col : {10, 60}) {
    Eigen::VectorXd y_up = prob.y;
    y_up[col] += h;
    Eigen::VectorXd y_down = prob.y;
    y_down[col] -= h;
    const FitProblem up = prob.with_observations(y_up);
    const FitProblem down = prob.with_observations(y_down);
    const Eigen::VectorXd c_up =
        evaluate_inner(refit_theta(theta_hat, rho, up), rho, up, false)
            .fit.c_hat;
    const Eigen::VectorXd c_down =
        evaluate_inner(refit_theta(theta_hat, rho, down), rho, down, false)
            .fit.c_hat;
    const Eigen::VectorXd fd = (c_up - c_down) / (2.0 * h);
    const double scale = dcdy.cwiseAbs().maxCoeff();
    CHECK((dcdy.col(col) - fd).cwiseAbs().maxCoeff() < 1e-3 * scale);
  }
}

TEST_CASE("sensitivity is undefined when theta cannot move the fit") {
  const FitProblem prob = sim_problem(0.05, 8);
  const Eigen::VectorXd theta = Eigen::VectorXd::Constant(3, 0.01);
  const InnerEvaluation eval = evaluate_inner(theta, 0.0, prob);
  CHECK_THROWS_AS(dtheta_dy(eval, prob), NumericalError);
}

TEST_CASE("variances scale linearly in the noise variance") {
  const FitProblem prob = sim_problem(0.05, 55);
  const double rho = 0.95;
  const Eigen::VectorXd theta_hat =
      refit_theta(Eigen::VectorXd::Constant(3, 0.01), rho, prob);
  const InnerEvaluation eval = evaluate_inner(theta_hat, rho, prob);
  const Eigen::MatrixXd dtdy = dtheta_dy(eval, prob);
  const Eigen::MatrixXd v1 = var_theta(dtdy, 0.002);
  const Eigen::MatrixXd v2 = var_theta(dtdy, 0.004);
  CHECK((v2 - 2.0 * v1).cwiseAbs().maxCoeff() < 1e-14);
  const Eigen::VectorXd x1 = var_x(eval, prob, dtdy, 0.002);
  const Eigen::VectorXd x2 = var_x(eval, prob, dtdy, 0.004);
  CHECK((x2 - 2.0 * x1).cwiseAbs().maxCoeff() < 1e-14);
  CHECK(x1.minCoeff() >= 0.0);
  // Variance diagonal is nonnegative with positive diagonal entries.
  for (int j = 0; j < 3; ++j) CHECK(v1(j, j) > 0.0);
}

TEST_CASE("report assembles consistent intervals") {
  const FitProblem prob = sim_problem(0.05, 90210);
  LadderControls controls;
  controls.per_rung_intervals = false;
  const LadderTrace trace = run_ladder(prob, controls);
  REQUIRE(trace.converged);
  const InferenceReport report =
      build_inference(trace.theta_hat, trace.rho_hat, prob);

  CHECK(report.rho == doctest::Approx(trace.rho_hat));
  CHECK(report.sigma2_y > 0.0);
  CHECK(report.df > 2.0);
  CHECK(report.df < 22.0);
  CHECK((report.x_hat - prob.phi * report.c_hat).cwiseAbs().maxCoeff() <
        1e-12);

  for (int j = 0; j < 3; ++j) {
    CHECK(report.theta_se[j] ==
          doctest::Approx(std::sqrt(report.var_theta(j, j))).epsilon(1e-12));
    CHECK(report.theta_ci(j, 0) ==
          doctest::Approx(report.theta_hat[j] - kZ95 * report.theta_se[j]));
    CHECK(report.theta_ci(j, 1) ==
          doctest::Approx(report.theta_hat[j] + kZ95 * report.theta_se[j]));
    // The generating values sit inside fairly loose bands on this draw.
    CHECK(report.theta_se[j] > 0.0);
  }

  const double sigma = std::sqrt(report.sigma2_y);
  for (int i = 0; i < prob.n_obs(); ++i) {
    const double ci_half = 0.5 * (report.x_ci(i, 1) - report.x_ci(i, 0));
    const double pi_half = 0.5 * (report.x_pi(i, 1) - report.x_pi(i, 0));
    CHECK(ci_half >= 0.0);
    // Prediction adds the observation noise in quadrature.
    CHECK(pi_half ==
          doctest::Approx(std::sqrt(ci_half * ci_half +
                                    kZ95 * kZ95 * sigma * sigma))
              .epsilon(1e-10));
    CHECK(pi_half >= ci_half);
    CHECK(report.x_ci(i, 0) <= report.x_hat[i]);
    CHECK(report.x_ci(i, 1) >= report.x_hat[i]);
  }
}

TEST_CASE("curve bands evaluate the report on new times") {
  const FitProblem prob = sim_problem(0.05, 313);
  LadderControls controls;
  controls.per_rung_intervals = false;
  const LadderTrace trace = run_ladder(prob, controls);
  const InferenceReport report =
      build_inference(trace.theta_hat, trace.rho_hat, prob);
  const BSplineBasis basis = pulse_basis({0.0, 60.0}, 14.0, 1.0);

  // On the observation grid the bands reproduce the report exactly.
  const CurveBands at_obs = curve_bands(report, basis, prob.times);
  CHECK((at_obs.x_hat - report.x_hat).cwiseAbs().maxCoeff() < 1e-12);
  for (int i = 0; i < prob.n_obs(); ++i) {
    CHECK(at_obs.ci_lo[i] == doctest::Approx(report.x_ci(i, 0)));
    CHECK(at_obs.ci_hi[i] == doctest::Approx(report.x_ci(i, 1)));
    CHECK(at_obs.pi_lo[i] == doctest::Approx(report.x_pi(i, 0)));
    CHECK(at_obs.pi_hi[i] == doctest::Approx(report.x_pi(i, 1)));
  }

  // On a finer grid the bands stay ordered and finite.
  const std::vector<double> fine = linspace(0.0, 60.0, 301);
  const CurveBands bands = curve_bands(report, basis, fine);
  for (int i = 0; i < 301; ++i) {
    CHECK(bands.ci_lo[i] <= bands.x_hat[i]);
    CHECK(bands.ci_hi[i] >= bands.x_hat[i]);
    CHECK(bands.pi_lo[i] <= bands.ci_lo[i]);
    CHECK(bands.pi_hi[i] >= bands.ci_hi[i]);
    CHECK(std::isfinite(bands.pi_hi[i]));
  }
}
