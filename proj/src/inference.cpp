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

#include <Eigen/Cholesky>
#include <cmath>

#include "data2ld/errors.hpp"

namespace data2ld {

double sigma2_estimate(const Eigen::VectorXd& residuals, double df) {
  const double n_obs = static_cast<double>(residuals.size());
  if (!(df < n_obs))
    throw NumericalError("degrees of freedom must stay below the number of "
                         "observations for a variance estimate");
  return residuals.squaredNorm() / (n_obs - df);
}

Eigen::MatrixXd dtheta_dy(const InnerEvaluation& eval,
                          const FitProblem& prob) {
  const Eigen::MatrixXd& jac = eval.jacobian;
  if (jac.size() == 0)
    throw ConfigError("inner evaluation was computed without derivatives");
  const Eigen::MatrixXd gn = jac.transpose() * jac;
  Eigen::LDLT<Eigen::MatrixXd> fac(gn);
  if (fac.info() != Eigen::Success || fac.rcond() < 1e-14 ||
      gn.trace() <= 0.0)
    throw NumericalError("parameter information matrix is singular; theta "
                         "does not influence the fit (rho too small?)");
  // J'(I - A) with A = (1 - rho)/N Phi M^{-1} Phi'.
  const double a =
      (1.0 - eval.fit.rho) / static_cast<double>(prob.n_obs());
  const Eigen::MatrixXd smoother_part =
      a * ((jac.transpose() * prob.phi) *
           eval.fit.m_factor.solve(prob.phi.transpose()));
  return fac.solve(-(jac.transpose() - smoother_part));
}

Eigen::MatrixXd var_theta(const Eigen::MatrixXd& dtdy, double sigma2) {
  if (!(sigma2 >= 0.0)) throw NumericalError("negative variance estimate");
  return sigma2 * (dtdy * dtdy.transpose());
}

Eigen::MatrixXd dc_dy_total(const InnerEvaluation& eval,
                            const FitProblem& prob,
                            const Eigen::MatrixXd& dtdy) {
  const double a =
      (1.0 - eval.fit.rho) / static_cast<double>(prob.n_obs());
  Eigen::MatrixXd out = a * eval.fit.m_factor.solve(prob.phi.transpose());
  if (dtdy.size() != 0 && eval.dc_dth.size() != 0)
    out.noalias() += eval.dc_dth * dtdy;
  return out;
}

Eigen::VectorXd var_x(const InnerEvaluation& eval, const FitProblem& prob,
                      const Eigen::MatrixXd& dtdy, double sigma2) {
  const Eigen::MatrixXd dc_dy = dc_dy_total(eval, prob, dtdy);
  const Eigen::MatrixXd influence = prob.phi * dc_dy;  // N x N
  return sigma2 * influence.rowwise().squaredNorm();
}

InferenceReport build_inference(const Eigen::VectorXd& theta_hat, double rho,
                                const FitProblem& prob) {
  const InnerEvaluation eval = evaluate_inner(theta_hat, rho, prob, true);

  InferenceReport report;
  report.theta_hat = theta_hat;
  report.rho = rho;
  report.df = eval.fit.df;
  report.sigma2_y = sigma2_estimate(eval.fit.residuals, eval.fit.df);
  report.c_hat = eval.fit.c_hat;

  const Eigen::MatrixXd dtdy = dtheta_dy(eval, prob);
  report.var_theta = var_theta(dtdy, report.sigma2_y);
  report.theta_se = report.var_theta.diagonal().cwiseMax(0.0).cwiseSqrt();
  const Eigen::Index n_theta = theta_hat.size();
  report.theta_ci.resize(n_theta, 2);
  report.theta_ci.col(0) = theta_hat - kZ95 * report.theta_se;
  report.theta_ci.col(1) = theta_hat + kZ95 * report.theta_se;

  report.dc_dy = dc_dy_total(eval, prob, dtdy);
  report.x_hat = prob.phi * report.c_hat;
  const Eigen::MatrixXd influence = prob.phi * report.dc_dy;
  report.x_var = report.sigma2_y * influence.rowwise().squaredNorm();

  const Eigen::Index n_obs = prob.n_obs();
  report.x_ci.resize(n_obs, 2);
  report.x_pi.resize(n_obs, 2);
  for (Eigen::Index i = 0; i < n_obs; ++i) {
    const double ci_half = kZ95 * std::sqrt(std::max(report.x_var[i], 0.0));
    // Prediction half-width adds the observation noise in quadrature.
    const double pi_half = std::sqrt(ci_half * ci_half +
                                     report.sigma2_y * kZ95 * kZ95);
    report.x_ci(i, 0) = report.x_hat[i] - ci_half;
    report.x_ci(i, 1) = report.x_hat[i] + ci_half;
    report.x_pi(i, 0) = report.x_hat[i] - pi_half;
    report.x_pi(i, 1) = report.x_hat[i] + pi_half;
  }
  return report;
}

CurveBands curve_bands(const InferenceReport& report,
                       const BSplineBasis& basis,
                       std::span<const double> times) {
  const Eigen::MatrixXd phi = eval_matrix(basis, times, 0);
  CurveBands bands;
  bands.x_hat = phi * report.c_hat;
  const Eigen::MatrixXd influence = phi * report.dc_dy;
  const Eigen::VectorXd x_var =
      report.sigma2_y * influence.rowwise().squaredNorm();
  const Eigen::Index n_times = static_cast<Eigen::Index>(times.size());
  bands.ci_lo.resize(n_times);
  bands.ci_hi.resize(n_times);
  bands.pi_lo.resize(n_times);
  bands.pi_hi.resize(n_times);
  for (Eigen::Index i = 0; i < n_times; ++i) {
    const double ci_half = kZ95 * std::sqrt(std::max(x_var[i], 0.0));
    const double pi_half =
        std::sqrt(ci_half * ci_half + report.sigma2_y * kZ95 * kZ95);
    bands.ci_lo[i] = bands.x_hat[i] - ci_half;
    bands.ci_hi[i] = bands.x_hat[i] + ci_half;
    bands.pi_lo[i] = bands.x_hat[i] - pi_half;
    bands.pi_hi[i] = bands.x_hat[i] + pi_half;
  }
  return bands;
}

}  // namespace data2ld
