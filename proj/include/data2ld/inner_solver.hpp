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

#ifndef DATA2LD_INNER_SOLVER_HPP_
#define DATA2LD_INNER_SOLVER_HPP_

#include <Eigen/Cholesky>
#include <Eigen/Core>

#include "data2ld/model.hpp"

namespace data2ld {

// Solution of the inner problem at fixed (theta, rho):
//
//   J(c) = (1 - rho)/N * |y - Phi c|^2
//        + rho/T * (c'Rc + 2c'S + f_norm)
//
// where T is the domain length. c_hat solves M c = rhs with
// M = (1 - rho)/N * Phi'Phi + rho/T * R and
// rhs = (1 - rho)/N * Phi'y - rho/T * S. The factorization is kept so
// downstream sensitivities reuse it.
//
// Both terms are normalized: data per observation, penalty per unit time.
// The penalty-to-data weight ratio is therefore rho/(1-rho) * N/T, so the
// smoothing level a given rho buys scales with the domain; matching a
// target ratio stated per observation shifts logit(rho) by ln(T).
struct PenalizedFit {
  Eigen::VectorXd c_hat;
  Eigen::VectorXd residuals;  // y - Phi c_hat
  double j_value = 0.0;
  double df = 0.0;
  double rho = 0.0;
  double domain_len = 0.0;
  Eigen::MatrixXd m;
  Eigen::MatrixXd phi_t_phi;
  Eigen::LDLT<Eigen::MatrixXd> m_factor;
};

// Solves the inner problem. rho must lie in [0, 1); domain_len is the length
// of the model domain. Raises NumericalError when M is singular or the
// estimated condition number exceeds 1e12.
PenalizedFit solve_coefficients(const Eigen::VectorXd& y,
                                const Eigen::MatrixXd& phi,
                                const PenaltyMatrices& pm, double rho,
                                double domain_len);

// Same, with Phi'Phi supplied by the caller (it is theta-independent, so
// repeated solves over theta reuse it).
PenalizedFit solve_coefficients(const Eigen::VectorXd& y,
                                const Eigen::MatrixXd& phi,
                                const Eigen::MatrixXd& phi_gram,
                                const PenaltyMatrices& pm, double rho,
                                double domain_len);

// Exact sensitivity of c_hat to each free model parameter,
// dc/dtheta_j = -M^{-1} (rho/T) (dR_j c_hat + dS_j), as a K x m matrix.
// Identically zero at rho = 0.
Eigen::MatrixXd dc_dtheta(const PenalizedFit& fit, const PenaltyMatrices& pm);

// Effective degrees of freedom of the smoother,
// (1 - rho)/N * trace(M^{-1} Phi'Phi). Equals the basis size at rho = 0 and
// decreases towards the dimension of the ODE solution space as rho -> 1.
double degrees_of_freedom(const PenalizedFit& fit);

}  // namespace data2ld

#endif  // DATA2LD_INNER_SOLVER_HPP_
