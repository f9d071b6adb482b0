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

#ifndef DATA2LD_BASELINES_HPP_
#define DATA2LD_BASELINES_HPP_

#include <Eigen/Core>
#include <cstdint>
#include <span>
#include <vector>

#include "data2ld/model.hpp"

namespace data2ld {

// Numerical solution of the initial value problem on a fixed grid, stored as
// the companion-system state [x, Dx, ..., D^{p-1}x] at every grid point plus
// per-cell values of D^p x at both cell ends, so cubic Hermite evaluation of
// any state component works even where D^p x jumps.
struct IVPSolution {
  std::vector<double> times;
  Eigen::MatrixXd states;          // (#times) x p
  Eigen::VectorXd top_slope_start; // per cell, right limit at the cell start
  Eigen::VectorXd top_slope_end;   // per cell, left limit at the cell end

  // Cubic Hermite evaluation of D^deriv x, 0 <= deriv < p.
  double eval(double t, int deriv = 0) const;
  Eigen::VectorXd eval_many(std::span<const double> ts, int deriv = 0) const;
};

// Classical fourth-order Runge-Kutta on the companion system. Stage values
// at a step's right endpoint take the left limit of the model functions, so
// steps never read across a forcing discontinuity; for that to hold, every
// interior knot of a discontinuous (order 1) model function must coincide
// with a grid point, which is validated. init holds x(t0), Dx(t0), ...
IVPSolution rk4_solve(const LinearODEModel& model,
                      const Eigen::VectorXd& theta,
                      const Eigen::VectorXd& init,
                      std::span<const double> grid);

// Grid builder for the integrators: unions the model domain endpoints, the
// base points, and every interior knot of the model's functions, then
// subdivides so no step exceeds max_step (no subdivision when max_step <= 0).
// Base points outside the domain are rejected.
std::vector<double> make_integration_grid(const LinearODEModel& model,
                                          std::span<const double> base_points,
                                          double max_step);

// Precomputed integration plan: stage-time values of every model function
// are cached once, so repeated integration over theta costs only the RK4
// sweep. Used heavily by the NLS and SA baselines.
class Rk4Plan {
 public:
  Rk4Plan(const LinearODEModel& model, std::vector<double> grid);

  IVPSolution integrate(const Eigen::VectorXd& theta,
                        const Eigen::VectorXd& init) const;

  const std::vector<double>& grid() const { return grid_; }

 private:
  struct Stages {
    Eigen::MatrixXd start, mid, end;  // (#steps) x expansion dim
  };
  LinearODEModel model_;
  std::vector<double> grid_;
  std::vector<Stages> coeff_stages_;
  std::vector<Stages> gain_stages_;
  // Forcing inputs at the stage times; end stages take the left limit.
  std::vector<Eigen::VectorXd> input_start_, input_mid_, input_end_;
};

struct NlsControls {
  int max_iters = 100;
  double grad_tol = 1e-10;
  double step_tol = 1e-12;
  double fd_rel_step = 1e-6;
  int max_halvings = 20;
  double damping_init = 1e-3;
  double damping_decrease = 0.3;
  double damping_increase = 3.0;
  double damping_max = 1e10;
  // Integration step cap; defaults to the reference resolution used for
  // simulated truth so baseline accuracy is never the bottleneck.
  double max_step = 0.01;
};

struct NlsResult {
  Eigen::VectorXd theta_hat;
  Eigen::VectorXd init_hat;
  Eigen::MatrixXd covariance;  // over (theta, init), sigma2 * (J'J)^{-1}
  double sse = 0.0;
  int iterations = 0;
  bool converged = false;
};

// Nonlinear least squares against the exact IVP solution, jointly over theta
// and the initial conditions, by damped Gauss-Newton with forward-difference
// Jacobians. Divergent integrations during the line search reject the step.
NlsResult nls_fit(const Eigen::VectorXd& y, std::span<const double> times,
                  const LinearODEModel& model, const Eigen::VectorXd& theta0,
                  const Eigen::VectorXd& init0,
                  const NlsControls& controls = {});

struct AnnealerConfig {
  enum class Rule { kBarker, kMetropolis };

  double t0 = 100.0;          // cooling schedule T_k = t0 / ln(k + e)
  int max_iters = 20000;
  std::uint64_t seed = 1u;
  Rule rule = Rule::kBarker;
  double proposal_scale_factor = 0.1;  // initial scale 0.1 * (1 + |theta_i|)
  int adapt_interval = 50;
  double target_acceptance = 0.3;
  double max_step = 0.01;     // integration step cap
  bool keep_trace = false;
  // Refine the best visited point with a damped Gauss-Newton descent over
  // theta (initial state held fixed). The walk locates the basin; the
  // descent supplies the local precision the accuracy tables report, which
  // the finite-length walk cannot reach on its own. Disable for the raw
  // sampler.
  bool polish = true;
  int polish_iters = 100;
};

struct SaResult {
  Eigen::VectorXd theta_hat;  // best visited, refined when polish is on
  double sse = 0.0;           // SSE at theta_hat
  int accepted = 0;
  int evaluated = 0;
  std::vector<double> sse_trace;  // current-state SSE per walk iteration
};

// Probability of accepting a proposal whose SSE exceeds the current one by
// delta_sse > 0 at the given temperature. Better proposals are always
// accepted upstream of this.
double sa_acceptance_probability(double delta_sse, double temperature,
                                 AnnealerConfig::Rule rule);

// Simulated annealing over theta with the initial conditions held at init0
// (the target density is conditioned on them). Gaussian random-walk
// proposals, scale adapted toward the target acceptance rate; returns the
// best parameter vector visited, refined by a local descent unless
// config.polish is off. Fixed seeds reproduce the full trace, and the trace
// always records the raw walk.
SaResult sa_fit(const Eigen::VectorXd& y, std::span<const double> times,
                const LinearODEModel& model, const Eigen::VectorXd& theta0,
                const Eigen::VectorXd& init0,
                const AnnealerConfig& config = {});

}  // namespace data2ld

#endif  // DATA2LD_BASELINES_HPP_
