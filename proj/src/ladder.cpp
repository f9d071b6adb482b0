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

#include "data2ld/ladder.hpp"

#include <cmath>
#include <limits>

#include "data2ld/errors.hpp"
#include "data2ld/inference.hpp"

namespace data2ld {

double logistic_rho(double gamma) {
  if (gamma >= 0.0) return 1.0 / (1.0 + std::exp(-gamma));
  const double e = std::exp(gamma);
  return e / (1.0 + e);
}

namespace {

double logit(double rho) { return std::log(rho / (1.0 - rho)); }

Eigen::VectorXd rung_ci_half_width(const Eigen::VectorXd& theta, double rho,
                                   const FitProblem& prob) {
  try {
    const InnerEvaluation eval = evaluate_inner(theta, rho, prob, true);
    const double sigma2 =
        sigma2_estimate(eval.fit.residuals, eval.fit.df);
    const Eigen::MatrixXd dtdy = dtheta_dy(eval, prob);
    const Eigen::MatrixXd cov = var_theta(dtdy, sigma2);
    return kZ95 * cov.diagonal().cwiseMax(0.0).cwiseSqrt();
  } catch (const NumericalError&) {
    return Eigen::VectorXd::Constant(
        theta.size(), std::numeric_limits<double>::quiet_NaN());
  }
}

}  // namespace

LadderTrace run_ladder(const FitProblem& prob,
                       const LadderControls& controls) {
  LadderTrace trace;
  const int n_theta = prob.assembler.model().theta_dim();
  Eigen::VectorXd theta =
      controls.theta0.size() == n_theta
          ? controls.theta0
          : Eigen::VectorXd::Constant(n_theta, 0.01);
  if (controls.theta0.size() != 0 && controls.theta0.size() != n_theta)
    throw ConfigError("theta0 length does not match the model's free "
                      "parameter count");
  if (!(controls.rho_max > 0.0) || !(controls.rho_max < 1.0))
    throw ConfigError("rho_max must lie in (0, 1)");
  if (!(controls.dgamma_init > 0.0) || !(controls.dgamma_floor > 0.0) ||
      controls.dgamma_floor > controls.dgamma_init)
    throw ConfigError("gamma increments must satisfy 0 < floor <= init");

  const double gamma_cap = logit(controls.rho_max);

  auto push_rung = [&](double gamma, double rho, const OuterResult& res,
                       double increment) {
    LadderState state;
    state.gamma = gamma;
    state.rho = rho;
    state.theta = res.theta_hat;
    state.h = res.h;
    state.gamma_increment = increment;
    state.ci_half_width =
        controls.per_rung_intervals
            ? rung_ci_half_width(res.theta_hat, rho, prob)
            : Eigen::VectorXd::Constant(
                  n_theta, std::numeric_limits<double>::quiet_NaN());
    trace.states.push_back(std::move(state));
  };

  double gamma = std::min(controls.gamma0, gamma_cap);
  double rho = logistic_rho(gamma);
  try {
    OuterResult res = minimize_H(theta, rho, prob, controls.outer);
    push_rung(gamma, rho, res, 0.0);
    theta = res.theta_hat;

    double h_prev = res.h;
    double dgamma = controls.dgamma_init;
    while (static_cast<int>(trace.states.size()) < controls.max_rungs &&
           trace.failure.empty()) {
      if (rho >= controls.rho_max) {
        trace.converged = true;
        break;
      }
      const double gamma_cand = std::min(gamma + dgamma, gamma_cap);
      const double rho_cand = logistic_rho(gamma_cand);
      OuterResult cand = minimize_H(theta, rho_cand, prob, controls.outer);
      // Guarded relative change in the criterion between rungs; the
      // denominator floor only matters for identically-zero criteria.
      const double rel_change =
          std::abs(cand.h - h_prev) / std::max(h_prev, 1e-300);
      const bool at_floor = dgamma <= controls.dgamma_floor * (1.0 + 1e-12);
      if (rel_change >= controls.eps0 && !at_floor) {
        // Too aggressive: halve the pending increment and re-minimize from
        // the previous rung.
        dgamma = std::max(0.5 * dgamma, controls.dgamma_floor);
        continue;
      }
      const double increment = gamma_cand - gamma;
      gamma = gamma_cand;
      rho = rho_cand;
      push_rung(gamma, rho, cand, increment);
      const double theta_change =
          (cand.theta_hat - theta).lpNorm<Eigen::Infinity>();
      theta = cand.theta_hat;
      h_prev = cand.h;
      dgamma = controls.dgamma_init;
      if (theta_change < controls.eps1) {
        trace.converged = true;
        break;
      }
    }
    if (!trace.converged && trace.failure.empty())
      trace.failure = "ladder hit the rung limit before stabilizing";
  } catch (const NumericalError& err) {
    // Keep the rungs accumulated so far and flag the failure.
    trace.failure = err.what();
  }

  if (trace.states.empty()) {
    trace.converged = false;
    if (trace.failure.empty()) trace.failure = "no rung completed";
    return trace;
  }

  const LadderState& last = trace.states.back();
  trace.theta_hat = last.theta;
  trace.rho_hat = last.rho;
  trace.h_hat = last.h;
  trace.c_hat =
      evaluate_inner(last.theta, last.rho, prob, false).fit.c_hat;
  return trace;
}

}  // namespace data2ld
