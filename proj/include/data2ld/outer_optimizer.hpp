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

#ifndef DATA2LD_OUTER_OPTIMIZER_HPP_
#define DATA2LD_OUTER_OPTIMIZER_HPP_

#include <Eigen/Core>
#include <utility>
#include <vector>

#include "data2ld/inner_solver.hpp"
#include "data2ld/model.hpp"

namespace data2ld {

// Data, design matrix, and penalty machinery for one estimation problem.
// Fixed across theta and rho, so the cascade reuses all precomputation.
struct FitProblem {
  Eigen::VectorXd y;
  std::vector<double> times;
  Eigen::MatrixXd phi;
  Eigen::MatrixXd phi_gram;  // Phi'Phi, cached
  PenaltyAssembler assembler;

  double domain_length() const { return assembler.model().domain_length(); }
  int n_obs() const { return static_cast<int>(y.size()); }

  // Same design with different observations (e.g. another replicate).
  FitProblem with_observations(const Eigen::VectorXd& y_new) const;
};

FitProblem make_fit_problem(const Eigen::VectorXd& y,
                            std::span<const double> times,
                            const LinearODEModel& model,
                            const BSplineBasis& basis,
                            const QuadratureRule& quad);

// Inner solve plus the sensitivities the outer step and inference need.
// jacobian is d(y - Phi c_hat)/dtheta = -Phi dc/dtheta (N x m).
struct InnerEvaluation {
  PenaltyMatrices pm;
  PenalizedFit fit;
  Eigen::MatrixXd dc_dth;
  Eigen::MatrixXd jacobian;
  double h = 0.0;  // |y - Phi c_hat|^2
};

InnerEvaluation evaluate_inner(const Eigen::VectorXd& theta, double rho,
                               const FitProblem& prob,
                               bool with_derivatives = true);

// Outer criterion H(theta | rho) = |y - Phi c_hat(theta, rho)|^2 and its
// exact gradient 2 J' r with r = y - Phi c_hat.
double H_value(const Eigen::VectorXd& theta, double rho,
               const FitProblem& prob);
Eigen::VectorXd H_gradient(const Eigen::VectorXd& theta, double rho,
                           const FitProblem& prob);

struct OuterControls {
  double grad_tol = 1e-8;      // on |grad|_inf relative to 1 + H
  double step_tol = 1e-10;     // on |step|_inf
  int max_iters = 100;
  double damping_init = 1e-3;  // Levenberg damping, relative to mean curvature
  double damping_decrease = 0.3;
  double damping_increase = 3.0;
  double damping_max = 1e10;
  int max_halvings = 20;
  bool keep_trace = true;
};

struct OuterResult {
  Eigen::VectorXd theta_hat;
  double h = 0.0;
  double gradient_norm = 0.0;  // |grad|_inf at theta_hat
  int iterations = 0;
  bool converged = false;
  // Accepted iterates (including the start), with their H values.
  std::vector<std::pair<Eigen::VectorXd, double>> step_trace;
};

// Damped Gauss-Newton on the residual y - Phi c_hat(theta). H never
// increases along accepted steps. Hitting max_iters reports
// converged = false rather than raising.
OuterResult minimize_H(const Eigen::VectorXd& theta0, double rho,
                       const FitProblem& prob,
                       const OuterControls& controls = {});

}  // namespace data2ld

#endif  // DATA2LD_OUTER_OPTIMIZER_HPP_
