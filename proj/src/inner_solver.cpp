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

#include "data2ld/inner_solver.hpp"

#include <sstream>

#include "data2ld/errors.hpp"

namespace data2ld {

PenalizedFit solve_coefficients(const Eigen::VectorXd& y,
                                const Eigen::MatrixXd& phi,
                                const PenaltyMatrices& pm, double rho,
                                double domain_len) {
  return solve_coefficients(y, phi, phi.transpose() * phi, pm, rho,
                            domain_len);
}

PenalizedFit solve_coefficients(const Eigen::VectorXd& y,
                                const Eigen::MatrixXd& phi,
                                const Eigen::MatrixXd& phi_gram,
                                const PenaltyMatrices& pm, double rho,
                                double domain_len) {
  const Eigen::Index n_obs = y.size();
  const Eigen::Index n_basis = phi.cols();
  if (phi.rows() != n_obs)
    throw DataError("observation vector and design matrix row count differ");
  if (pm.R.rows() != n_basis || pm.R.cols() != n_basis)
    throw ConfigError("penalty size does not match the basis size");
  if (!(rho >= 0.0) || !(rho < 1.0))
    throw ConfigError("rho must lie in [0, 1)");
  if (!(domain_len > 0.0))
    throw ConfigError("domain length must be positive");
  if (n_obs == 0) throw DataError("no observations");

  PenalizedFit fit;
  fit.rho = rho;
  fit.domain_len = domain_len;
  const double a = (1.0 - rho) / static_cast<double>(n_obs);
  const double b = rho / domain_len;

  fit.phi_t_phi = phi_gram;
  fit.m = a * fit.phi_t_phi + b * pm.R;
  const Eigen::VectorXd rhs = a * (phi.transpose() * y) - b * pm.S;

  fit.m_factor.compute(fit.m);
  if (fit.m_factor.info() != Eigen::Success ||
      fit.m_factor.rcond() < 1e-12) {
    std::ostringstream os;
    os << "inner system is singular or ill conditioned (rho = " << rho
       << ", basis size = " << n_basis << ", observations = " << n_obs << ")";
    throw NumericalError(os.str());
  }

  fit.c_hat = fit.m_factor.solve(rhs);
  // One step of iterative refinement keeps the normal-equation residual at
  // machine precision even near the conditioning limit.
  fit.c_hat += fit.m_factor.solve(rhs - fit.m * fit.c_hat);

  fit.residuals = y - phi * fit.c_hat;
  fit.j_value = a * fit.residuals.squaredNorm() +
                b * (fit.c_hat.dot(pm.R * fit.c_hat) +
                     2.0 * fit.c_hat.dot(pm.S) + pm.f_norm);
  fit.df = a * fit.m_factor.solve(fit.phi_t_phi).trace();
  return fit;
}

Eigen::MatrixXd dc_dtheta(const PenalizedFit& fit, const PenaltyMatrices& pm) {
  const Eigen::Index n_basis = fit.c_hat.size();
  const Eigen::Index n_theta = static_cast<Eigen::Index>(pm.dR.size());
  if (static_cast<Eigen::Index>(pm.dS.size()) != n_theta)
    throw ConfigError("penalty derivatives are inconsistent");
  Eigen::MatrixXd rhs(n_basis, n_theta);
  const double b = fit.rho / fit.domain_len;
  for (Eigen::Index j = 0; j < n_theta; ++j)
    rhs.col(j) = -b * (pm.dR[j] * fit.c_hat + pm.dS[j]);
  if (n_theta == 0) return rhs;
  return fit.m_factor.solve(rhs);
}

double degrees_of_freedom(const PenalizedFit& fit) { return fit.df; }

}  // namespace data2ld
