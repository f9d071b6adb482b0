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

#ifndef DATA2LD_INFERENCE_HPP_
#define DATA2LD_INFERENCE_HPP_

#include <Eigen/Core>
#include <span>

#include "data2ld/outer_optimizer.hpp"

namespace data2ld {

// Normal quantile used for all 95% intervals.
inline constexpr double kZ95 = 1.96;

// Residual variance estimate |r|^2 / (N - df). Errors if df >= N.
double sigma2_estimate(const Eigen::VectorXd& residuals, double df);

// Sensitivity of the outer minimizer to the data,
// dtheta/dy = -(J'J)^{-1} J' (I - A) with J = -Phi dc/dtheta and
// A = (1 - rho)/N Phi M^{-1} Phi' (the Gauss-Newton approximation; curvature
// terms are dropped). Errors when J'J is singular, which includes rho = 0
// where theta has no influence on the fit.
Eigen::MatrixXd dtheta_dy(const InnerEvaluation& eval, const FitProblem& prob);

// sigma2 * (dtheta/dy)(dtheta/dy)'.
Eigen::MatrixXd var_theta(const Eigen::MatrixXd& dtdy, double sigma2);

// Total sensitivity of c_hat to the data: the direct smoother part
// (1 - rho)/N M^{-1} Phi' plus the indirect part (dc/dtheta)(dtheta/dy).
// Pass a zero dtdy (or one with zero columns) to get the direct part alone.
Eigen::MatrixXd dc_dy_total(const InnerEvaluation& eval,
                            const FitProblem& prob,
                            const Eigen::MatrixXd& dtdy);

// Pointwise variance of x_hat(t_i) = phi(t_i)'c_hat at the data times:
// the diagonal of sigma2 * Phi (dc/dy)(dc/dy)' Phi'.
Eigen::VectorXd var_x(const InnerEvaluation& eval, const FitProblem& prob,
                      const Eigen::MatrixXd& dtdy, double sigma2);

// Everything the reports need at one (theta_hat, rho).
struct InferenceReport {
  Eigen::VectorXd theta_hat;
  double rho = 0.0;
  double df = 0.0;
  double sigma2_y = 0.0;
  Eigen::MatrixXd var_theta;  // m x m
  Eigen::VectorXd theta_se;
  Eigen::MatrixXd theta_ci;   // m x 2, [lo, hi]
  Eigen::VectorXd c_hat;
  Eigen::MatrixXd dc_dy;      // K x N total sensitivity
  Eigen::VectorXd x_hat;      // at the data times
  Eigen::VectorXd x_var;
  Eigen::MatrixXd x_ci;       // N x 2
  Eigen::MatrixXd x_pi;       // N x 2; PI half-width >= CI half-width
};

InferenceReport build_inference(const Eigen::VectorXd& theta_hat, double rho,
                                const FitProblem& prob);

// Fitted curve with 95% confidence and prediction bands at arbitrary times
// inside the domain.
struct CurveBands {
  Eigen::VectorXd x_hat;
  Eigen::VectorXd ci_lo, ci_hi;
  Eigen::VectorXd pi_lo, pi_hi;
};

CurveBands curve_bands(const InferenceReport& report,
                       const BSplineBasis& basis,
                       std::span<const double> times);

}  // namespace data2ld

#endif  // DATA2LD_INFERENCE_HPP_
