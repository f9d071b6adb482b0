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

#ifndef DATA2LD_BSPLINE_HPP_
#define DATA2LD_BSPLINE_HPP_

#include <Eigen/Core>
#include <span>
#include <utility>
#include <vector>

namespace data2ld {

// Interior breakpoints with multiplicities. Boundary knots are implied by the
// domain and carry multiplicity `order`, so splines interpolate to the full
// polynomial space at both ends.
struct KnotVector {
  double domain_start = 0.0;
  double domain_end = 1.0;
  // Sorted strictly increasing, strictly inside (domain_start, domain_end),
  // each multiplicity in [1, order].
  std::vector<std::pair<double, int>> interior;
};

// At a knot of multiplicity m the spline has order - m - 1 continuous
// derivatives. Evaluation at a shared breakpoint takes the right-limit by
// default; LeftLimit selects the piece to the left, which matters for
// discontinuous (order 1) inputs and for derivative jumps at repeated knots.
enum class EvalSide { Regular, LeftLimit };

// B-spline basis of a fixed order on a closed domain. Basis functions are
// indexed 0..size()-1; at any t at most order() of them are nonzero and they
// are consecutive. Sums to one everywhere on the domain.
class BSplineBasis {
 public:
  BSplineBasis() = default;
  BSplineBasis(const KnotVector& knots, int order);

  int order() const { return order_; }
  int size() const { return static_cast<int>(knots_.size()) - order_; }
  double domain_start() const { return knots_.empty() ? 0.0 : knots_.front(); }
  double domain_end() const { return knots_.empty() ? 1.0 : knots_.back(); }

  // Flattened knot sequence, boundary knots repeated order() times.
  const std::vector<double>& knots() const { return knots_; }

  // Distinct breakpoints including both domain ends.
  std::vector<double> breakpoints() const;

  // Writes the order() possibly-nonzero values of the deriv-th derivative at
  // t into out and returns the index of the first one. Values for derivatives
  // of order() and beyond are identically zero. t must lie in the closed
  // domain.
  int eval_nonzero(double t, int deriv, double* out,
                   EvalSide side = EvalSide::Regular) const;

  // Single-function convenience built on eval_nonzero.
  double eval_one(int index, double t, int deriv = 0,
                  EvalSide side = EvalSide::Regular) const;

 private:
  int find_span(double t, EvalSide side) const;

  std::vector<double> knots_;
  int order_ = 0;
};

// Validates the knot description and builds the basis. Errors on order < 1,
// an empty or inverted domain, unsorted or out-of-domain interior breaks, and
// multiplicities outside [1, order].
BSplineBasis make_basis(std::pair<double, double> domain,
                        const std::vector<std::pair<double, int>>& interior,
                        int order);

// N x K matrix of the deriv-th derivatives of all basis functions at the
// given times. Each row has at most order() nonzeros. Errors if any time
// falls outside the closed domain.
Eigen::MatrixXd eval_matrix(const BSplineBasis& basis,
                            std::span<const double> times, int deriv = 0,
                            EvalSide side = EvalSide::Regular);

// Composite Gauss-Legendre rule over the inter-breakpoint intervals of a
// basis. Nodes are strictly inside each interval, weights are positive and
// sum to the domain length. Exact for polynomials of degree
// 2 * nodes_per_interval - 1 on each interval, hence for products of two
// basis functions whenever nodes_per_interval >= order.
struct QuadratureRule {
  std::vector<double> nodes;
  std::vector<double> weights;
  // Offsets into nodes/weights; interval i spans [offsets[i], offsets[i+1]).
  std::vector<int> offsets;

  int n_nodes() const { return static_cast<int>(nodes.size()); }
  Eigen::Map<const Eigen::VectorXd> weight_vector() const {
    return Eigen::Map<const Eigen::VectorXd>(weights.data(), weights.size());
  }
};

// nodes_per_interval <= 0 selects the default max(order, 5). extra_breaks
// adds subdivision points (e.g. another basis's breakpoints) so integrands
// that are only piecewise smooth on the union are still handled exactly;
// points coinciding with existing breakpoints or lying outside the domain are
// ignored.
QuadratureRule make_quadrature(const BSplineBasis& basis,
                               int nodes_per_interval = 0,
                               std::span<const double> extra_breaks = {});

// Gauss-Legendre nodes and weights on [-1, 1], ascending.
void gauss_legendre(int n, std::vector<double>& nodes,
                    std::vector<double>& weights);

}  // namespace data2ld

#endif  // DATA2LD_BSPLINE_HPP_
