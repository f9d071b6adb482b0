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

#ifndef DATA2LD_MODEL_HPP_
#define DATA2LD_MODEL_HPP_

#include <Eigen/Core>
#include <span>
#include <utility>
#include <vector>

#include "data2ld/bspline.hpp"

namespace data2ld {

// A scalar function w(t) = sum_j coeffs[j] phi_j(t) over its own basis.
// Constants use an order-1 basis with a single function, so every model
// function is handled uniformly.
struct FunctionExpansion {
  BSplineBasis basis;
  Eigen::VectorXd coeffs;

  double eval(double t, int deriv = 0,
              EvalSide side = EvalSide::Regular) const;
  double operator()(double t) const { return eval(t); }
};

// Constant function on the domain.
FunctionExpansion constant_function(double value,
                                    std::pair<double, double> domain);

// Unit box pulse: 0 before onset, 1 on [onset, onset + width), 0 after.
// Order-1 expansion, so the edges are genuine jump discontinuities.
FunctionExpansion unit_pulse(std::pair<double, double> domain, double onset,
                             double width);

// One rate term beta_r(t) * D^r x in the model equation. The coefficient is
// expanded over `expansion`; a fixed term keeps `fixed_coeffs` and occupies
// no slots in theta.
struct CoefficientTerm {
  int deriv_index = 0;
  BSplineBasis expansion;
  Eigen::VectorXd fixed_coeffs;
  bool fixed = false;

  int dim() const { return expansion.size(); }
};

// One forcing term alpha_q(t) * u_q(t). The gain alpha_q is expanded over
// `gain_expansion` (fixed or free); the input u_q is a known function.
struct ForcingTerm {
  BSplineBasis gain_expansion;
  Eigen::VectorXd gain_fixed_coeffs;
  bool gain_fixed = false;
  FunctionExpansion input;

  int dim() const { return gain_expansion.size(); }
};

// Linear ODE of order p on [domain_start, domain_end]:
//
//   D^p x(t) = sum_r beta_r(t) D^r x(t) + sum_q alpha_q(t) u_q(t)
//
// with 0 <= r < p. theta stacks the free coefficient vectors: coefficient
// terms first in declaration order, then forcing-gain terms, each
// contributing a contiguous slice.
struct LinearODEModel {
  int order = 1;
  double domain_start = 0.0;
  double domain_end = 1.0;
  std::vector<CoefficientTerm> coefficient_terms;
  std::vector<ForcingTerm> forcing_terms;

  int theta_dim() const;
  double domain_length() const { return domain_end - domain_start; }

  // Slice offset of each free block in theta; -1 for fixed terms. Entries
  // correspond to coefficient_terms followed by forcing_terms.
  std::vector<int> theta_offsets() const;

  // Coefficient vector of term i (coefficient terms indexed first), read
  // from theta or from the fixed coefficients.
  Eigen::VectorXd term_coeffs(int term_index,
                              const Eigen::VectorXd& theta) const;

  // beta_r(t) and alpha_q(t) values for the given theta.
  double coefficient_value(int term_index, const Eigen::VectorXd& theta,
                           double t, EvalSide side = EvalSide::Regular) const;
  double gain_value(int forcing_index, const Eigen::VectorXd& theta, double t,
                    EvalSide side = EvalSide::Regular) const;

  void validate() const;
};

// Second-order constant-coefficient model driven by a unit box pulse:
// D^2 x = beta_0 x + beta_1 Dx + alpha u with u = 1 on
// [impact_time, impact_time + pulse_width). theta = (beta_0, beta_1, alpha).
LinearODEModel head_impact_model(double impact_time, double pulse_width,
                                 std::pair<double, double> domain = {0.0,
                                                                     56.0});

// Penalty pieces for a fixed basis and quadrature at one theta:
//   integral of (L_theta x)^2 over the domain = c'Rc + 2c'S + f_norm
// for x = sum_k c_k phi_k, where L_theta x = D^p x - sum beta_r D^r x
// - sum alpha_q u_q. R is symmetric PSD; dR, dS, df_norm hold the exact
// derivatives with respect to each free theta entry.
struct PenaltyMatrices {
  Eigen::MatrixXd R;
  Eigen::VectorXd S;
  double f_norm = 0.0;
  std::vector<Eigen::MatrixXd> dR;
  std::vector<Eigen::VectorXd> dS;
  Eigen::VectorXd df_norm;
};

// Precomputes every theta-independent quantity (basis derivatives, expansion
// values, inputs at the quadrature nodes) so repeated assembly over theta is
// a handful of small matrix products.
class PenaltyAssembler {
 public:
  PenaltyAssembler(const LinearODEModel& model, const BSplineBasis& basis,
                   const QuadratureRule& quad);

  PenaltyMatrices assemble(const Eigen::VectorXd& theta,
                           bool with_derivatives = true) const;

  const LinearODEModel& model() const { return model_; }
  const BSplineBasis& basis() const { return basis_; }
  const QuadratureRule& quadrature() const { return quad_; }

 private:
  LinearODEModel model_;
  BSplineBasis basis_;
  QuadratureRule quad_;
  Eigen::VectorXd w_;
  // Basis derivative values at the quadrature nodes for orders 0..p.
  std::vector<Eigen::MatrixXd> dphi_;
  // Per coefficient term: expansion values (n_quad x dim).
  std::vector<Eigen::MatrixXd> coeff_psi_;
  // Per forcing term: gain expansion values and input values.
  std::vector<Eigen::MatrixXd> gain_psi_;
  std::vector<Eigen::VectorXd> input_vals_;
};

// One-shot assembly.
PenaltyMatrices assemble_penalty(const LinearODEModel& model,
                                 const BSplineBasis& basis,
                                 const QuadratureRule& quad,
                                 const Eigen::VectorXd& theta,
                                 bool with_derivatives = true);

// c'Rc + 2c'S + f_norm.
double penalty_value(const PenaltyMatrices& pm, const Eigen::VectorXd& c);

}  // namespace data2ld

#endif  // DATA2LD_MODEL_HPP_
