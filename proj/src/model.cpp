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

#include <cmath>

#include "data2ld/errors.hpp"

namespace data2ld {

double FunctionExpansion::eval(double t, int deriv, EvalSide side) const {
  double window[32];
  const int first = basis.eval_nonzero(t, deriv, window, side);
  double out = 0.0;
  for (int s = 0; s < basis.order(); ++s) out += window[s] * coeffs[first + s];
  return out;
}

FunctionExpansion constant_function(double value,
                                    std::pair<double, double> domain) {
  FunctionExpansion fe;
  fe.basis = make_basis(domain, {}, 1);
  fe.coeffs = Eigen::VectorXd::Constant(1, value);
  return fe;
}

FunctionExpansion unit_pulse(std::pair<double, double> domain, double onset,
                             double width) {
  if (!(width > 0.0)) throw ConfigError("pulse width must be positive");
  if (!(onset > domain.first) || !(onset + width < domain.second))
    throw ConfigError("pulse must lie strictly inside the domain");
  FunctionExpansion fe;
  fe.basis = make_basis(domain, {{onset, 1}, {onset + width, 1}}, 1);
  fe.coeffs = Eigen::VectorXd::Zero(3);
  fe.coeffs[1] = 1.0;
  return fe;
}

int LinearODEModel::theta_dim() const {
  int dim = 0;
  for (const auto& term : coefficient_terms)
    if (!term.fixed) dim += term.dim();
  for (const auto& term : forcing_terms)
    if (!term.gain_fixed) dim += term.dim();
  return dim;
}

std::vector<int> LinearODEModel::theta_offsets() const {
  std::vector<int> offsets;
  int cursor = 0;
  for (const auto& term : coefficient_terms) {
    offsets.push_back(term.fixed ? -1 : cursor);
    if (!term.fixed) cursor += term.dim();
  }
  for (const auto& term : forcing_terms) {
    offsets.push_back(term.gain_fixed ? -1 : cursor);
    if (!term.gain_fixed) cursor += term.dim();
  }
  return offsets;
}

Eigen::VectorXd LinearODEModel::term_coeffs(
    int term_index, const Eigen::VectorXd& theta) const {
  const std::vector<int> offsets = theta_offsets();
  const int n_coeff = static_cast<int>(coefficient_terms.size());
  if (term_index < 0 ||
      term_index >= n_coeff + static_cast<int>(forcing_terms.size()))
    throw ConfigError("model term index out of range");
  if (theta.size() != theta_dim())
    throw ConfigError("theta length does not match the model's free "
                      "parameter count");
  const int offset = offsets[term_index];
  if (term_index < n_coeff) {
    const auto& term = coefficient_terms[term_index];
    return term.fixed ? term.fixed_coeffs : theta.segment(offset, term.dim());
  }
  const auto& term = forcing_terms[term_index - n_coeff];
  return term.gain_fixed ? term.gain_fixed_coeffs
                         : theta.segment(offset, term.dim());
}

double LinearODEModel::coefficient_value(int term_index,
                                         const Eigen::VectorXd& theta,
                                         double t, EvalSide side) const {
  const auto& term = coefficient_terms.at(term_index);
  const Eigen::VectorXd b = term_coeffs(term_index, theta);
  double window[32];
  const int first = term.expansion.eval_nonzero(t, 0, window, side);
  double out = 0.0;
  for (int s = 0; s < term.expansion.order(); ++s)
    out += window[s] * b[first + s];
  return out;
}

double LinearODEModel::gain_value(int forcing_index,
                                  const Eigen::VectorXd& theta, double t,
                                  EvalSide side) const {
  const auto& term = forcing_terms.at(forcing_index);
  const Eigen::VectorXd a = term_coeffs(
      static_cast<int>(coefficient_terms.size()) + forcing_index, theta);
  double window[32];
  const int first = term.gain_expansion.eval_nonzero(t, 0, window, side);
  double out = 0.0;
  for (int s = 0; s < term.gain_expansion.order(); ++s)
    out += window[s] * a[first + s];
  return out;
}

void LinearODEModel::validate() const {
  if (order < 1) throw ConfigError("ODE order must be at least 1");
  if (!(domain_start < domain_end))
    throw ConfigError("model domain must have positive length");
  for (const auto& term : coefficient_terms) {
    if (term.deriv_index < 0 || term.deriv_index >= order)
      throw ConfigError("coefficient term derivative index must lie in "
                        "[0, order)");
    if (term.fixed && term.fixed_coeffs.size() != term.dim())
      throw ConfigError("fixed coefficient vector length mismatch");
  }
  for (const auto& term : forcing_terms) {
    if (term.gain_fixed && term.gain_fixed_coeffs.size() != term.dim())
      throw ConfigError("fixed gain vector length mismatch");
  }
}

LinearODEModel head_impact_model(double impact_time, double pulse_width,
                                 std::pair<double, double> domain) {
  LinearODEModel model;
  model.order = 2;
  model.domain_start = domain.first;
  model.domain_end = domain.second;

  CoefficientTerm level;
  level.deriv_index = 0;
  level.expansion = make_basis(domain, {}, 1);
  model.coefficient_terms.push_back(level);

  CoefficientTerm velocity;
  velocity.deriv_index = 1;
  velocity.expansion = make_basis(domain, {}, 1);
  model.coefficient_terms.push_back(velocity);

  ForcingTerm pulse;
  pulse.gain_expansion = make_basis(domain, {}, 1);
  pulse.input = unit_pulse(domain, impact_time, pulse_width);
  model.forcing_terms.push_back(pulse);

  model.validate();
  return model;
}

namespace {

Eigen::MatrixXd expansion_values(const BSplineBasis& expansion,
                                 std::span<const double> nodes) {
  return eval_matrix(expansion, nodes, 0);
}

}  // namespace

PenaltyAssembler::PenaltyAssembler(const LinearODEModel& model,
                                   const BSplineBasis& basis,
                                   const QuadratureRule& quad)
    : model_(model), basis_(basis), quad_(quad) {
  model_.validate();
  if (basis_.order() <= model_.order)
    throw ConfigError("basis order must exceed the ODE order so the "
                      "penalized derivative exists");
  const double tol = 1e-9 * model_.domain_length();
  if (std::abs(basis_.domain_start() - model_.domain_start) > tol ||
      std::abs(basis_.domain_end() - model_.domain_end) > tol)
    throw ConfigError("basis domain must match the model domain");

  w_ = quad_.weight_vector();
  const std::span<const double> nodes(quad_.nodes.data(), quad_.nodes.size());
  dphi_.reserve(model_.order + 1);
  for (int d = 0; d <= model_.order; ++d)
    dphi_.push_back(eval_matrix(basis_, nodes, d));
  for (const auto& term : model_.coefficient_terms)
    coeff_psi_.push_back(expansion_values(term.expansion, nodes));
  for (const auto& term : model_.forcing_terms) {
    gain_psi_.push_back(expansion_values(term.gain_expansion, nodes));
    Eigen::VectorXd u(quad_.n_nodes());
    for (int q = 0; q < quad_.n_nodes(); ++q)
      u[q] = term.input.eval(quad_.nodes[q]);
    input_vals_.push_back(std::move(u));
  }
}

PenaltyMatrices PenaltyAssembler::assemble(const Eigen::VectorXd& theta,
                                           bool with_derivatives) const {
  if (theta.size() != model_.theta_dim())
    throw ConfigError("theta length does not match the model's free "
                      "parameter count");
  const int n_basis = basis_.size();
  const int n_theta = model_.theta_dim();
  const std::vector<int> offsets = model_.theta_offsets();
  const int n_coeff = static_cast<int>(model_.coefficient_terms.size());

  // Residual operator rows at the quadrature nodes: A c - g is the value of
  // L_theta x for x with coefficients c.
  Eigen::MatrixXd a_mat = dphi_[model_.order];
  for (int i = 0; i < n_coeff; ++i) {
    const Eigen::VectorXd b = model_.term_coeffs(i, theta);
    const Eigen::VectorXd beta_vals = coeff_psi_[i] * b;
    a_mat.noalias() -=
        beta_vals.asDiagonal() * dphi_[model_.coefficient_terms[i].deriv_index];
  }
  Eigen::VectorXd g = Eigen::VectorXd::Zero(quad_.n_nodes());
  for (std::size_t q = 0; q < model_.forcing_terms.size(); ++q) {
    const Eigen::VectorXd a =
        model_.term_coeffs(n_coeff + static_cast<int>(q), theta);
    g.array() += (gain_psi_[q] * a).array() * input_vals_[q].array();
  }

  PenaltyMatrices pm;
  const Eigen::MatrixXd wa = w_.asDiagonal() * a_mat;
  pm.R.noalias() = a_mat.transpose() * wa;
  pm.R = 0.5 * (pm.R + pm.R.transpose()).eval();
  const Eigen::VectorXd wg = w_.cwiseProduct(g);
  pm.S.noalias() = -(a_mat.transpose() * wg);
  pm.f_norm = g.dot(wg);

  if (!with_derivatives) return pm;

  pm.dR.assign(n_theta, Eigen::MatrixXd::Zero(n_basis, n_basis));
  pm.dS.assign(n_theta, Eigen::VectorXd::Zero(n_basis));
  pm.df_norm = Eigen::VectorXd::Zero(n_theta);

  for (int i = 0; i < n_coeff; ++i) {
    const auto& term = model_.coefficient_terms[i];
    if (term.fixed) continue;
    const int offset = offsets[i];
    const Eigen::MatrixXd& dphi_r = dphi_[term.deriv_index];
    for (int l = 0; l < term.dim(); ++l) {
      // dA/dtheta_j = -diag(psi_l) * Dphi_r.
      const Eigen::VectorXd psi_l = coeff_psi_[i].col(l);
      const Eigen::MatrixXd da =
          -(psi_l.asDiagonal() * dphi_r);
      const int j = offset + l;
      Eigen::MatrixXd cross = da.transpose() * wa;
      pm.dR[j] = cross + cross.transpose();
      pm.dS[j].noalias() = -(da.transpose() * wg);
    }
  }
  for (std::size_t q = 0; q < model_.forcing_terms.size(); ++q) {
    const auto& term = model_.forcing_terms[q];
    if (term.gain_fixed) continue;
    const int offset = offsets[n_coeff + static_cast<int>(q)];
    for (int l = 0; l < term.dim(); ++l) {
      // dg/dtheta_j = psi_l .* u_q.
      const Eigen::VectorXd dg =
          gain_psi_[q].col(l).cwiseProduct(input_vals_[q]);
      const int j = offset + l;
      pm.dS[j].noalias() = -(a_mat.transpose() * w_.cwiseProduct(dg));
      pm.df_norm[j] = 2.0 * wg.dot(dg);
    }
  }
  return pm;
}

PenaltyMatrices assemble_penalty(const LinearODEModel& model,
                                 const BSplineBasis& basis,
                                 const QuadratureRule& quad,
                                 const Eigen::VectorXd& theta,
                                 bool with_derivatives) {
  return PenaltyAssembler(model, basis, quad).assemble(theta,
                                                       with_derivatives);
}

double penalty_value(const PenaltyMatrices& pm, const Eigen::VectorXd& c) {
  if (c.size() != pm.R.rows())
    throw ConfigError("coefficient vector length does not match the penalty");
  return c.dot(pm.R * c) + 2.0 * c.dot(pm.S) + pm.f_norm;
}

}  // namespace data2ld
