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

#include "data2ld/model.hpp"

#include <doctest.h>

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>
#include <cmath>

#include "data2ld/baselines.hpp"
#include "data2ld/errors.hpp"
#include "data2ld/rng.hpp"

using namespace data2ld;

namespace {

Eigen::VectorXd random_vector(RngStream& rng, int n, double scale) {
  Eigen::VectorXd v(n);
  for (int i = 0; i < n; ++i) v[i] = scale * (2.0 * rng.uniform01() - 1.0);
  return v;
}

// Independent route to the penalty value: evaluate the residual of the
// model operator pointwise at the quadrature nodes and sum.
double direct_penalty(const LinearODEModel& model, const BSplineBasis& basis,
                      const QuadratureRule& quad, const Eigen::VectorXd& theta,
                      const Eigen::VectorXd& c) {
  double total = 0.0;
  for (int q = 0; q < quad.n_nodes(); ++q) {
    const double t = quad.nodes[q];
    double resid = 0.0;
    for (int k = 0; k < basis.size(); ++k)
      resid += c[k] * basis.eval_one(k, t, model.order);
    for (std::size_t i = 0; i < model.coefficient_terms.size(); ++i) {
      const double beta =
          model.coefficient_value(static_cast<int>(i), theta, t);
      double dx = 0.0;
      const int r = model.coefficient_terms[i].deriv_index;
      for (int k = 0; k < basis.size(); ++k)
        dx += c[k] * basis.eval_one(k, t, r);
      resid -= beta * dx;
    }
    for (std::size_t qf = 0; qf < model.forcing_terms.size(); ++qf) {
      const double alpha = model.gain_value(static_cast<int>(qf), theta, t);
      resid -= alpha * model.forcing_terms[qf].input.eval(t);
    }
    total += quad.weights[q] * resid * resid;
  }
  return total;
}

BSplineBasis dense_sim_basis() {
  std::vector<std::pair<double, int>> interior = {{14.0, 3}, {15.0, 3}};
  for (int k = 16; k <= 59; ++k) interior.emplace_back(k, 1);
  return make_basis({0.0, 60.0}, interior, 5);
}

}  // namespace

TEST_CASE("head impact model exposes the pulse and theta layout") {
  const LinearODEModel model = head_impact_model(14.0, 1.0, {0.0, 56.0});
  CHECK(model.order == 2);
  CHECK(model.theta_dim() == 3);
  CHECK(model.coefficient_terms.size() == 2);
  CHECK(model.coefficient_terms[0].deriv_index == 0);
  CHECK(model.coefficient_terms[1].deriv_index == 1);
  CHECK(model.forcing_terms.size() == 1);

  const std::vector<int> offsets = model.theta_offsets();
  REQUIRE(offsets.size() == 3);
  CHECK(offsets[0] == 0);
  CHECK(offsets[1] == 1);
  CHECK(offsets[2] == 2);

  const FunctionExpansion& u = model.forcing_terms[0].input;
  const std::vector<double> breaks = u.basis.breakpoints();
  REQUIRE(breaks.size() == 4);
  CHECK(breaks[0] == 0.0);
  CHECK(breaks[1] == 14.0);
  CHECK(breaks[2] == 15.0);
  CHECK(breaks[3] == 56.0);
  CHECK(u.coeffs.size() == 3);
  CHECK(u.coeffs[0] == 0.0);
  CHECK(u.coeffs[1] == 1.0);
  CHECK(u.coeffs[2] == 0.0);

  CHECK(u.eval(14.5) == 1.0);
  CHECK(u.eval(10.0) == 0.0);
  CHECK(u.eval(20.0) == 0.0);
  CHECK(u.eval(14.0) == 1.0);
  CHECK(u.eval(14.0, 0, EvalSide::LeftLimit) == 0.0);
  CHECK(u.eval(15.0) == 0.0);
  CHECK(u.eval(15.0, 0, EvalSide::LeftLimit) == 1.0);

  const Eigen::VectorXd theta =
      (Eigen::VectorXd(3) << -0.05, -0.15, 0.39).finished();
  CHECK(model.coefficient_value(0, theta, 7.0) == doctest::Approx(-0.05));
  CHECK(model.coefficient_value(1, theta, 33.0) == doctest::Approx(-0.15));
  CHECK(model.gain_value(0, theta, 50.0) == doctest::Approx(0.39));
}

TEST_CASE("penalty with zero theta reduces to the derivative Gram") {
  LinearODEModel model;
  model.order = 1;
  model.domain_start = 0.0;
  model.domain_end = 4.0;
  CoefficientTerm term;
  term.deriv_index = 0;
  term.expansion = make_basis({0.0, 4.0}, {}, 1);
  model.coefficient_terms.push_back(term);

  const BSplineBasis basis = make_basis({0.0, 4.0}, {{1.0, 1}, {2.5, 1}}, 4);
  const QuadratureRule quad = make_quadrature(basis);
  const PenaltyMatrices pm = assemble_penalty(
      model, basis, quad, Eigen::VectorXd::Zero(1), false);

  const Eigen::MatrixXd dvals = eval_matrix(
      basis, std::span<const double>(quad.nodes.data(), quad.nodes.size()),
      1);
  const Eigen::MatrixXd gram =
      dvals.transpose() * quad.weight_vector().asDiagonal() * dvals;
  CHECK((pm.R - gram).cwiseAbs().maxCoeff() < 1e-13);
  CHECK(pm.S.cwiseAbs().maxCoeff() == 0.0);
  CHECK(pm.f_norm == 0.0);
}

TEST_CASE("operator residual vanishes on an interpolant of the solution") {
  const LinearODEModel model = head_impact_model(14.0, 1.0, {0.0, 60.0});
  const Eigen::VectorXd theta =
      (Eigen::VectorXd(3) << -0.05, -0.15, 0.39).finished();

  // Dense reference trajectory from rest.
  std::vector<double> grid;
  for (int i = 0; i <= 6000; ++i) grid.push_back(60.0 * i / 6000.0);
  const IVPSolution truth =
      rk4_solve(model, theta, Eigen::VectorXd::Zero(2), grid);

  // Least squares interpolant over a basis with knots at every unit.
  const BSplineBasis basis = dense_sim_basis();
  std::vector<double> fit_times;
  for (int i = 0; i <= 2000; ++i) fit_times.push_back(60.0 * i / 2000.0);
  const Eigen::MatrixXd phi = eval_matrix(basis, fit_times, 0);
  const Eigen::VectorXd x = truth.eval_many(fit_times, 0);
  const Eigen::VectorXd c =
      (phi.transpose() * phi).ldlt().solve(phi.transpose() * x);

  const QuadratureRule quad = make_quadrature(basis);
  const PenaltyMatrices pm = assemble_penalty(model, basis, quad, theta,
                                              false);
  const double penalty = penalty_value(pm, c);

  // Scale: the second-derivative energy of the same interpolant.
  const Eigen::MatrixXd d2 = eval_matrix(
      basis, std::span<const double>(quad.nodes.data(), quad.nodes.size()),
      2);
  const double scale =
      (d2 * c).cwiseAbs2().dot(quad.weight_vector());
  CHECK(scale > 0.0);
  CHECK(penalty < 1e-4 * scale);
}

TEST_CASE("penalty derivatives match central differences") {
  const LinearODEModel model = head_impact_model(14.0, 1.0, {0.0, 60.0});
  const BSplineBasis basis =
      make_basis({0.0, 60.0},
                 {{14.0, 3}, {15.0, 3}, {25.0, 1}, {35.0, 1}, {45.0, 1}}, 5);
  const QuadratureRule quad = make_quadrature(basis);
  const PenaltyAssembler assembler(model, basis, quad);

  RngStream rng(17);
  const double h = 1e-6;
  for (int trial = 0; trial < 20; ++trial) {
    const Eigen::VectorXd theta = random_vector(rng, 3, 0.5);
    const PenaltyMatrices pm = assembler.assemble(theta, true);
    for (int j = 0; j < 3; ++j) {
      Eigen::VectorXd up = theta, down = theta;
      up[j] += h;
      down[j] -= h;
      const PenaltyMatrices pm_up = assembler.assemble(up, false);
      const PenaltyMatrices pm_down = assembler.assemble(down, false);
      const Eigen::MatrixXd fd_r = (pm_up.R - pm_down.R) / (2.0 * h);
      const Eigen::VectorXd fd_s = (pm_up.S - pm_down.S) / (2.0 * h);
      const double fd_f = (pm_up.f_norm - pm_down.f_norm) / (2.0 * h);
      const double scale_r = 1.0 + pm.dR[j].cwiseAbs().maxCoeff();
      const double scale_s = 1.0 + pm.dS[j].cwiseAbs().maxCoeff();
      CHECK((pm.dR[j] - fd_r).cwiseAbs().maxCoeff() < 1e-6 * scale_r);
      CHECK((pm.dS[j] - fd_s).cwiseAbs().maxCoeff() < 1e-6 * scale_s);
      CHECK(std::abs(pm.df_norm[j] - fd_f) <
            1e-6 * (1.0 + std::abs(pm.df_norm[j])));
    }
  }
}

TEST_CASE("R is symmetric positive semidefinite for random theta") {
  const LinearODEModel model = head_impact_model(14.0, 1.0, {0.0, 60.0});
  const BSplineBasis basis =
      make_basis({0.0, 60.0}, {{14.0, 3}, {15.0, 3}, {30.0, 1}, {45.0, 1}},
                 5);
  const QuadratureRule quad = make_quadrature(basis);
  const PenaltyAssembler assembler(model, basis, quad);
  RngStream rng(5);
  for (int trial = 0; trial < 100; ++trial) {
    const Eigen::VectorXd theta = random_vector(rng, 3, 2.0);
    const PenaltyMatrices pm = assembler.assemble(theta, false);
    CHECK((pm.R - pm.R.transpose()).cwiseAbs().maxCoeff() < 1e-12);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(pm.R);
    const double norm = pm.R.cwiseAbs().maxCoeff();
    CHECK(eig.eigenvalues().minCoeff() > -1e-10 * (1.0 + norm));
  }
}

TEST_CASE("expanded penalty equals the direct quadrature sum") {
  const LinearODEModel model = head_impact_model(14.0, 1.0, {0.0, 60.0});
  const BSplineBasis basis =
      make_basis({0.0, 60.0}, {{14.0, 3}, {15.0, 3}, {30.0, 1}}, 5);
  const QuadratureRule quad = make_quadrature(basis);
  const PenaltyAssembler assembler(model, basis, quad);
  RngStream rng(23);
  for (int trial = 0; trial < 10; ++trial) {
    const Eigen::VectorXd theta = random_vector(rng, 3, 1.0);
    const Eigen::VectorXd c = random_vector(rng, basis.size(), 2.0);
    const PenaltyMatrices pm = assembler.assemble(theta, false);
    const double expanded = penalty_value(pm, c);
    const double direct = direct_penalty(model, basis, quad, theta, c);
    CHECK(expanded ==
          doctest::Approx(direct).epsilon(1e-10));
  }
}

TEST_CASE("penalty pieces are quadratic in theta") {
  const LinearODEModel model = head_impact_model(14.0, 1.0, {0.0, 60.0});
  const BSplineBasis basis =
      make_basis({0.0, 60.0}, {{14.0, 3}, {15.0, 3}}, 5);
  const QuadratureRule quad = make_quadrature(basis);
  const PenaltyAssembler assembler(model, basis, quad);
  RngStream rng(31);
  for (int trial = 0; trial < 20; ++trial) {
    const Eigen::VectorXd d = random_vector(rng, 3, 1.0);
    const PenaltyMatrices p0 = assembler.assemble(0.0 * d, false);
    const PenaltyMatrices p1 = assembler.assemble(1.0 * d, false);
    const PenaltyMatrices p2 = assembler.assemble(2.0 * d, false);
    const PenaltyMatrices p3 = assembler.assemble(3.0 * d, false);
    // Third difference of a quadratic along a line is zero.
    const Eigen::MatrixXd r3 =
        p3.R - 3.0 * p2.R + 3.0 * p1.R - p0.R;
    const Eigen::VectorXd s3 = p3.S - 3.0 * p2.S + 3.0 * p1.S - p0.S;
    const double f3 =
        p3.f_norm - 3.0 * p2.f_norm + 3.0 * p1.f_norm - p0.f_norm;
    const double scale = 1.0 + p3.R.cwiseAbs().maxCoeff();
    CHECK(r3.cwiseAbs().maxCoeff() < 1e-11 * scale);
    CHECK(s3.cwiseAbs().maxCoeff() < 1e-11 * scale);
    CHECK(std::abs(f3) < 1e-11 * scale);
  }
}

TEST_CASE("fixed terms are excluded from theta") {
  LinearODEModel model = head_impact_model(14.0, 1.0, {0.0, 60.0});
  model.coefficient_terms[1].fixed = true;
  model.coefficient_terms[1].fixed_coeffs =
      Eigen::VectorXd::Constant(1, -0.15);
  CHECK(model.theta_dim() == 2);
  const std::vector<int> offsets = model.theta_offsets();
  CHECK(offsets[0] == 0);
  CHECK(offsets[1] == -1);
  CHECK(offsets[2] == 1);

  const Eigen::VectorXd theta = (Eigen::VectorXd(2) << -0.05, 0.39).finished();
  CHECK(model.coefficient_value(1, theta, 5.0) == doctest::Approx(-0.15));
  CHECK(model.gain_value(0, theta, 5.0) == doctest::Approx(0.39));

  const BSplineBasis basis =
      make_basis({0.0, 60.0}, {{14.0, 3}, {15.0, 3}}, 5);
  const QuadratureRule quad = make_quadrature(basis);
  const PenaltyMatrices pm = assemble_penalty(model, basis, quad, theta);
  CHECK(pm.dR.size() == 2);
  // Slot 1 is the forcing gain: no R dependence.
  CHECK(pm.dR[1].cwiseAbs().maxCoeff() == 0.0);
  CHECK(pm.df_norm[0] == 0.0);
  CHECK(pm.df_norm[1] != 0.0);
}

TEST_CASE("assembler rejects inconsistent setups") {
  const LinearODEModel model = head_impact_model(14.0, 1.0, {0.0, 60.0});
  const QuadratureRule quad =
      make_quadrature(make_basis({0.0, 60.0}, {{14.0, 3}, {15.0, 3}}, 5));
  // Basis order must exceed the ODE order.
  CHECK_THROWS_AS(
      PenaltyAssembler(model, make_basis({0.0, 60.0}, {}, 2), quad),
      ConfigError);
  // Basis domain must match the model domain.
  CHECK_THROWS_AS(
      PenaltyAssembler(model, make_basis({0.0, 50.0}, {{14.0, 3}}, 5), quad),
      ConfigError);
  // theta size must match.
  const BSplineBasis basis =
      make_basis({0.0, 60.0}, {{14.0, 3}, {15.0, 3}}, 5);
  PenaltyAssembler assembler(model, basis, make_quadrature(basis));
  CHECK_THROWS_AS(assembler.assemble(Eigen::VectorXd::Zero(2)), ConfigError);
}

TEST_CASE("penalty_value handles degenerate inputs") {
  LinearODEModel model;
  model.order = 1;
  model.domain_start = 0.0;
  model.domain_end = 1.0;
  CoefficientTerm term;
  term.deriv_index = 0;
  term.expansion = make_basis({0.0, 1.0}, {}, 1);
  model.coefficient_terms.push_back(term);

  const BSplineBasis basis = make_basis({0.0, 1.0}, {{0.5, 1}}, 3);
  const QuadratureRule quad = make_quadrature(basis);
  const PenaltyMatrices pm =
      assemble_penalty(model, basis, quad, Eigen::VectorXd::Constant(1, 0.3));
  // No forcing: value at c = 0 is zero.
  CHECK(penalty_value(pm, Eigen::VectorXd::Zero(basis.size())) == 0.0);
  CHECK_THROWS_AS(penalty_value(pm, Eigen::VectorXd::Zero(2)), ConfigError);
}
