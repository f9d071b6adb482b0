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

#include "data2ld/outer_optimizer.hpp"

#include <Eigen/Cholesky>
#include <cmath>
#include <limits>

#include "data2ld/errors.hpp"

namespace data2ld {

FitProblem make_fit_problem(const Eigen::VectorXd& y,
                            std::span<const double> times,
                            const LinearODEModel& model,
                            const BSplineBasis& basis,
                            const QuadratureRule& quad) {
  if (static_cast<std::size_t>(y.size()) != times.size())
    throw DataError("observation vector and time vector lengths differ");
  if (times.empty()) throw DataError("no observations");
  for (std::size_t i = 1; i < times.size(); ++i)
    if (!(times[i] > times[i - 1]))
      throw DataError("observation times must be strictly increasing");
  Eigen::MatrixXd phi = eval_matrix(basis, times, 0);
  Eigen::MatrixXd gram = phi.transpose() * phi;
  FitProblem prob{y,
                  std::vector<double>(times.begin(), times.end()),
                  std::move(phi),
                  std::move(gram),
                  PenaltyAssembler(model, basis, quad)};
  return prob;
}

FitProblem FitProblem::with_observations(const Eigen::VectorXd& y_new) const {
  if (y_new.size() != y.size())
    throw DataError("replacement observations must match the design size");
  FitProblem out = *this;
  out.y = y_new;
  return out;
}

InnerEvaluation evaluate_inner(const Eigen::VectorXd& theta, double rho,
                               const FitProblem& prob,
                               bool with_derivatives) {
  InnerEvaluation eval;
  eval.pm = prob.assembler.assemble(theta, with_derivatives);
  eval.fit = solve_coefficients(prob.y, prob.phi, prob.phi_gram, eval.pm, rho,
                                prob.domain_length());
  eval.h = eval.fit.residuals.squaredNorm();
  if (with_derivatives) {
    eval.dc_dth = dc_dtheta(eval.fit, eval.pm);
    eval.jacobian.noalias() = -(prob.phi * eval.dc_dth);
  }
  return eval;
}

double H_value(const Eigen::VectorXd& theta, double rho,
               const FitProblem& prob) {
  return evaluate_inner(theta, rho, prob, false).h;
}

Eigen::VectorXd H_gradient(const Eigen::VectorXd& theta, double rho,
                           const FitProblem& prob) {
  const InnerEvaluation eval = evaluate_inner(theta, rho, prob, true);
  return 2.0 * (eval.jacobian.transpose() * eval.fit.residuals);
}

OuterResult minimize_H(const Eigen::VectorXd& theta0, double rho,
                       const FitProblem& prob, const OuterControls& controls) {
  OuterResult result;
  result.theta_hat = theta0;

  InnerEvaluation eval = evaluate_inner(theta0, rho, prob, true);
  result.h = eval.h;
  if (controls.keep_trace) result.step_trace.emplace_back(theta0, eval.h);

  const int n_theta = static_cast<int>(theta0.size());
  if (n_theta == 0) {
    result.converged = true;
    return result;
  }

  double damping = controls.damping_init;
  for (int iter = 0; iter < controls.max_iters; ++iter) {
    const Eigen::VectorXd grad =
        2.0 * (eval.jacobian.transpose() * eval.fit.residuals);
    result.gradient_norm = grad.lpNorm<Eigen::Infinity>();
    if (result.gradient_norm < controls.grad_tol * (1.0 + result.h)) {
      result.converged = true;
      return result;
    }

    Eigen::MatrixXd gn = eval.jacobian.transpose() * eval.jacobian;
    // Additive damping scaled by the mean curvature keeps the step
    // well-defined when the Gauss-Newton matrix is nearly singular.
    const double scale =
        gn.trace() / static_cast<double>(n_theta) + 1e-300;
    gn.diagonal().array() += damping * scale;
    Eigen::LDLT<Eigen::MatrixXd> fac(gn);
    Eigen::VectorXd step;
    bool solvable = fac.info() == Eigen::Success && fac.rcond() > 1e-14;
    if (solvable) step = fac.solve(-0.5 * grad);

    bool accepted = false;
    if (solvable) {
      double alpha = 1.0;
      for (int k = 0; k <= controls.max_halvings; ++k) {
        const Eigen::VectorXd trial = result.theta_hat + alpha * step;
        double h_trial;
        try {
          h_trial = H_value(trial, rho, prob);
        } catch (const NumericalError&) {
          h_trial = std::numeric_limits<double>::infinity();
        }
        if (h_trial < result.h) {
          result.theta_hat = trial;
          result.h = h_trial;
          eval = evaluate_inner(trial, rho, prob, true);
          accepted = true;
          if (controls.keep_trace)
            result.step_trace.emplace_back(trial, h_trial);
          const double step_norm =
              (alpha * step).lpNorm<Eigen::Infinity>();
          if (step_norm < controls.step_tol) {
            result.gradient_norm =
                (2.0 * (eval.jacobian.transpose() * eval.fit.residuals))
                    .lpNorm<Eigen::Infinity>();
            result.converged = true;
            result.iterations = iter + 1;
            return result;
          }
          break;
        }
        alpha *= 0.5;
      }
    }
    result.iterations = iter + 1;
    if (accepted) {
      damping = std::max(damping * controls.damping_decrease, 1e-12);
    } else {
      damping *= controls.damping_increase;
      if (damping > controls.damping_max) {
        // No descent direction left at maximal damping; report the current
        // point. The gradient test above decides convergence next round.
        result.converged = false;
        return result;
      }
    }
  }
  result.converged = false;
  return result;
}

}  // namespace data2ld
