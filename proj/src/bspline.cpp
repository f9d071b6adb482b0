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

#include "data2ld/bspline.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "data2ld/errors.hpp"

namespace data2ld {

namespace {

constexpr int kMaxOrder = 32;

std::string format_time_error(double t, double lo, double hi) {
  std::ostringstream os;
  os << "evaluation time " << t << " outside basis domain [" << lo << ", "
     << hi << "]";
  return os.str();
}

}  // namespace

BSplineBasis::BSplineBasis(const KnotVector& knots, int order) : order_(order) {
  if (order < 1) throw ConfigError("basis order must be at least 1");
  if (order > kMaxOrder) throw ConfigError("basis order too large");
  if (!(knots.domain_start < knots.domain_end))
    throw ConfigError("basis domain must have positive length");
  double prev = knots.domain_start;
  std::size_t total = 0;
  for (const auto& [value, mult] : knots.interior) {
    if (!(value > prev))
      throw ConfigError("interior breakpoints must be sorted strictly "
                        "increasing and strictly inside the domain");
    if (!(value < knots.domain_end))
      throw ConfigError("interior breakpoint at or beyond the domain end");
    if (mult < 1 || mult > order)
      throw ConfigError("knot multiplicity must lie in [1, order]");
    prev = value;
    total += static_cast<std::size_t>(mult);
  }
  knots_.reserve(total + 2 * static_cast<std::size_t>(order));
  knots_.insert(knots_.end(), order, knots.domain_start);
  for (const auto& [value, mult] : knots.interior)
    knots_.insert(knots_.end(), mult, value);
  knots_.insert(knots_.end(), order, knots.domain_end);
}

std::vector<double> BSplineBasis::breakpoints() const {
  std::vector<double> out;
  for (double k : knots_)
    if (out.empty() || k > out.back()) out.push_back(k);
  return out;
}

int BSplineBasis::find_span(double t, EvalSide side) const {
  const int order = order_;
  const int n_basis = size();
  // Span mu: knots_[mu] <= t < knots_[mu + 1], clamped so t at the right
  // boundary uses the last nonempty interval. LeftLimit instead picks the
  // interval ending at t when t is a knot.
  int mu;
  if (side == EvalSide::LeftLimit) {
    mu = static_cast<int>(std::lower_bound(knots_.begin(), knots_.end(), t) -
                          knots_.begin()) -
         1;
  } else {
    mu = static_cast<int>(std::upper_bound(knots_.begin(), knots_.end(), t) -
                          knots_.begin()) -
         1;
  }
  return std::clamp(mu, order - 1, n_basis - 1);
}

int BSplineBasis::eval_nonzero(double t, int deriv, double* out,
                               EvalSide side) const {
  const int order = order_;
  if (t < domain_start() || t > domain_end())
    throw DataError(format_time_error(t, domain_start(), domain_end()));
  const int mu = find_span(t, side);
  const int first = mu - order + 1;
  std::fill(out, out + order, 0.0);
  if (deriv >= order) return first;

  // Values of the reduced-order basis at t, packed into the tail of out so
  // that out[s] tracks basis index first + s throughout.
  const int base_order = order - deriv;
  double left[kMaxOrder];
  double right[kMaxOrder];
  double* vals = out + (order - base_order);
  vals[0] = 1.0;
  for (int j = 1; j < base_order; ++j) {
    left[j] = t - knots_[mu + 1 - j];
    right[j] = knots_[mu + j] - t;
    double saved = 0.0;
    for (int r = 0; r < j; ++r) {
      const double denom = right[r + 1] + left[j - r];
      // 0/0 at repeated knots contributes nothing.
      const double term = denom != 0.0 ? vals[r] / denom : 0.0;
      vals[r] = saved + right[r + 1] * term;
      saved = left[j - r] * term;
    }
    vals[j] = saved;
  }

  // Each round lifts order m values to order m + 1 derivatives via the
  // knot-difference recurrence; after deriv rounds out holds the requested
  // derivative of the full-order basis.
  double tmp[kMaxOrder];
  for (int m = base_order; m < order; ++m) {
    for (int s = order - m - 1; s < order; ++s) {
      const int i = first + s;
      double a = 0.0;
      const double d1 = knots_[i + m] - knots_[i];
      if (d1 != 0.0) a = out[s] / d1;
      double b = 0.0;
      if (s + 1 < order) {
        const double d2 = knots_[i + m + 1] - knots_[i + 1];
        if (d2 != 0.0) b = out[s + 1] / d2;
      }
      tmp[s] = m * (a - b);
    }
    for (int s = order - m - 1; s < order; ++s) out[s] = tmp[s];
  }
  return first;
}

double BSplineBasis::eval_one(int index, double t, int deriv,
                              EvalSide side) const {
  if (index < 0 || index >= size())
    throw ConfigError("basis index out of range");
  double window[kMaxOrder];
  const int first = eval_nonzero(t, deriv, window, side);
  const int s = index - first;
  return (s >= 0 && s < order_) ? window[s] : 0.0;
}

BSplineBasis make_basis(std::pair<double, double> domain,
                        const std::vector<std::pair<double, int>>& interior,
                        int order) {
  KnotVector kv;
  kv.domain_start = domain.first;
  kv.domain_end = domain.second;
  kv.interior = interior;
  return BSplineBasis(kv, order);
}

Eigen::MatrixXd eval_matrix(const BSplineBasis& basis,
                            std::span<const double> times, int deriv,
                            EvalSide side) {
  const int order = basis.order();
  Eigen::MatrixXd out = Eigen::MatrixXd::Zero(
      static_cast<Eigen::Index>(times.size()), basis.size());
  double window[kMaxOrder];
  for (std::size_t i = 0; i < times.size(); ++i) {
    const int first = basis.eval_nonzero(times[i], deriv, window, side);
    for (int s = 0; s < order; ++s)
      out(static_cast<Eigen::Index>(i), first + s) = window[s];
  }
  return out;
}

void gauss_legendre(int n, std::vector<double>& nodes,
                    std::vector<double>& weights) {
  if (n < 1) throw ConfigError("Gauss-Legendre rule needs at least one node");
  nodes.assign(n, 0.0);
  weights.assign(n, 0.0);
  for (int i = 0; i < (n + 1) / 2; ++i) {
    // Chebyshev-based initial guess, then Newton on P_n.
    double z = std::cos(M_PI * (i + 0.75) / (n + 0.5));
    double dpn = 0.0;
    for (int iter = 0; iter < 100; ++iter) {
      double pn = 1.0;
      double pnm1 = 0.0;
      for (int j = 0; j < n; ++j) {
        const double pnm2 = pnm1;
        pnm1 = pn;
        pn = ((2.0 * j + 1.0) * z * pnm1 - j * pnm2) / (j + 1);
      }
      dpn = n * (z * pn - pnm1) / (z * z - 1.0);
      const double dz = pn / dpn;
      z -= dz;
      if (std::abs(dz) < 1e-15) break;
    }
    nodes[i] = -z;
    nodes[n - 1 - i] = z;
    weights[i] = weights[n - 1 - i] = 2.0 / ((1.0 - z * z) * dpn * dpn);
  }
}

QuadratureRule make_quadrature(const BSplineBasis& basis,
                               int nodes_per_interval,
                               std::span<const double> extra_breaks) {
  const int npi =
      nodes_per_interval > 0 ? nodes_per_interval : std::max(basis.order(), 5);
  std::vector<double> breaks = basis.breakpoints();
  for (double b : extra_breaks) {
    if (b <= basis.domain_start() || b >= basis.domain_end()) continue;
    breaks.push_back(b);
  }
  std::sort(breaks.begin(), breaks.end());
  // Drop coincident points; the spacing guard is relative to the domain.
  const double tol =
      1e-12 * (basis.domain_end() - basis.domain_start());
  std::vector<double> merged;
  for (double b : breaks)
    if (merged.empty() || b - merged.back() > tol) merged.push_back(b);
  if (merged.size() < 2)
    throw ConfigError("quadrature needs at least one nonempty interval");

  std::vector<double> ref_nodes;
  std::vector<double> ref_weights;
  gauss_legendre(npi, ref_nodes, ref_weights);

  QuadratureRule rule;
  rule.offsets.push_back(0);
  for (std::size_t i = 0; i + 1 < merged.size(); ++i) {
    const double a = merged[i];
    const double b = merged[i + 1];
    if (!(b > a)) throw NumericalError("degenerate quadrature interval");
    const double mid = 0.5 * (a + b);
    const double half = 0.5 * (b - a);
    for (int q = 0; q < npi; ++q) {
      rule.nodes.push_back(mid + half * ref_nodes[q]);
      rule.weights.push_back(half * ref_weights[q]);
    }
    rule.offsets.push_back(static_cast<int>(rule.nodes.size()));
  }
  return rule;
}

}  // namespace data2ld
