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

#include "data2ld/baselines.hpp"

#include <Eigen/Cholesky>
#include <algorithm>
#include <cmath>
#include <limits>

#include "data2ld/errors.hpp"
#include "data2ld/rng.hpp"

namespace data2ld {

namespace {

int find_cell(const std::vector<double>& times, double t) {
  const int n_cells = static_cast<int>(times.size()) - 1;
  const int idx = static_cast<int>(
      std::upper_bound(times.begin(), times.end(), t) - times.begin() - 1);
  return std::clamp(idx, 0, n_cells - 1);
}

double hermite(double t0, double t1, double v0, double v1, double m0,
               double m1, double t) {
  const double h = t1 - t0;
  const double s = (t - t0) / h;
  const double s2 = s * s;
  const double s3 = s2 * s;
  return (2.0 * s3 - 3.0 * s2 + 1.0) * v0 + (s3 - 2.0 * s2 + s) * h * m0 +
         (-2.0 * s3 + 3.0 * s2) * v1 + (s3 - s2) * h * m1;
}

// Interior knots of an order-1 expansion are jump points; they must land on
// the integration grid or the stage values would straddle the jump.
void check_discontinuities_on_grid(const BSplineBasis& basis,
                                   const std::vector<double>& grid) {
  if (basis.order() != 1) return;
  const double tol = 1e-9 * (grid.back() - grid.front());
  std::vector<double> breaks = basis.breakpoints();
  for (std::size_t i = 1; i + 1 < breaks.size(); ++i) {
    const double b = breaks[i];
    if (b < grid.front() - tol || b > grid.back() + tol) continue;
    const auto it = std::lower_bound(grid.begin(), grid.end(), b - tol);
    if (it == grid.end() || std::abs(*it - b) > tol)
      throw ConfigError("integration grid must include every jump point of "
                        "the model functions");
  }
}

}  // namespace

double IVPSolution::eval(double t, int deriv) const {
  const int p = static_cast<int>(states.cols());
  if (deriv < 0 || deriv >= p)
    throw ConfigError("derivative index out of range for the state");
  if (t < times.front() || t > times.back())
    throw DataError("evaluation time outside the solved range");
  const int cell = find_cell(times, t);
  const double m0 = deriv + 1 < p ? states(cell, deriv + 1)
                                  : top_slope_start[cell];
  const double m1 = deriv + 1 < p ? states(cell + 1, deriv + 1)
                                  : top_slope_end[cell];
  return hermite(times[cell], times[cell + 1], states(cell, deriv),
                 states(cell + 1, deriv), m0, m1, t);
}

Eigen::VectorXd IVPSolution::eval_many(std::span<const double> ts,
                                       int deriv) const {
  Eigen::VectorXd out(static_cast<Eigen::Index>(ts.size()));
  for (std::size_t i = 0; i < ts.size(); ++i)
    out[static_cast<Eigen::Index>(i)] = eval(ts[i], deriv);
  return out;
}

std::vector<double> make_integration_grid(const LinearODEModel& model,
                                          std::span<const double> base_points,
                                          double max_step) {
  // The grid always spans the full domain: initial conditions are defined
  // at domain_start, so integration must begin there.
  const double lo = model.domain_start;
  const double hi = model.domain_end;
  std::vector<double> pts(base_points.begin(), base_points.end());
  pts.push_back(lo);
  pts.push_back(hi);
  auto add_interior_knots = [&](const BSplineBasis& basis) {
    const std::vector<double> breaks = basis.breakpoints();
    for (std::size_t i = 1; i + 1 < breaks.size(); ++i)
      pts.push_back(breaks[i]);
  };
  for (const auto& term : model.coefficient_terms)
    add_interior_knots(term.expansion);
  for (const auto& term : model.forcing_terms) {
    add_interior_knots(term.gain_expansion);
    add_interior_knots(term.input.basis);
  }
  std::sort(pts.begin(), pts.end());
  const double tol = 1e-12 * (hi - lo);
  std::vector<double> merged;
  for (double p : pts) {
    if (p < lo - tol || p > hi + tol)
      throw DataError("integration base point outside the model domain");
    if (merged.empty() || p - merged.back() > tol) merged.push_back(p);
  }

  std::vector<double> grid;
  grid.push_back(merged.front());
  for (std::size_t i = 0; i + 1 < merged.size(); ++i) {
    const double a = merged[i];
    const double b = merged[i + 1];
    int pieces = 1;
    if (max_step > 0.0)
      pieces = std::max(1, static_cast<int>(std::ceil((b - a) / max_step -
                                                      1e-12)));
    for (int k = 1; k < pieces; ++k)
      grid.push_back(a + (b - a) * k / pieces);
    grid.push_back(b);
  }
  return grid;
}

Rk4Plan::Rk4Plan(const LinearODEModel& model, std::vector<double> grid)
    : model_(model), grid_(std::move(grid)) {
  model_.validate();
  if (grid_.size() < 2)
    throw ConfigError("integration grid needs at least two points");
  for (std::size_t i = 1; i < grid_.size(); ++i)
    if (!(grid_[i] > grid_[i - 1]))
      throw ConfigError("integration grid must be strictly increasing");
  const double tol = 1e-9 * model_.domain_length();
  if (grid_.front() < model_.domain_start - tol ||
      grid_.back() > model_.domain_end + tol)
    throw ConfigError("integration grid must lie inside the model domain");
  for (const auto& term : model_.coefficient_terms)
    check_discontinuities_on_grid(term.expansion, grid_);
  for (const auto& term : model_.forcing_terms) {
    check_discontinuities_on_grid(term.gain_expansion, grid_);
    check_discontinuities_on_grid(term.input.basis, grid_);
  }

  const int n_steps = static_cast<int>(grid_.size()) - 1;
  std::vector<double> t_start(n_steps), t_mid(n_steps), t_end(n_steps);
  for (int i = 0; i < n_steps; ++i) {
    t_start[i] = grid_[i];
    t_mid[i] = 0.5 * (grid_[i] + grid_[i + 1]);
    t_end[i] = grid_[i + 1];
  }
  auto stage_values = [&](const BSplineBasis& basis) {
    Stages s;
    s.start = eval_matrix(basis, t_start, 0);
    s.mid = eval_matrix(basis, t_mid, 0);
    s.end = eval_matrix(basis, t_end, 0, EvalSide::LeftLimit);
    return s;
  };
  for (const auto& term : model_.coefficient_terms)
    coeff_stages_.push_back(stage_values(term.expansion));
  for (const auto& term : model_.forcing_terms) {
    gain_stages_.push_back(stage_values(term.gain_expansion));
    Eigen::VectorXd u0(n_steps), u1(n_steps), u2(n_steps);
    for (int i = 0; i < n_steps; ++i) {
      u0[i] = term.input.eval(t_start[i]);
      u1[i] = term.input.eval(t_mid[i]);
      u2[i] = term.input.eval(t_end[i], 0, EvalSide::LeftLimit);
    }
    input_start_.push_back(std::move(u0));
    input_mid_.push_back(std::move(u1));
    input_end_.push_back(std::move(u2));
  }
}

IVPSolution Rk4Plan::integrate(const Eigen::VectorXd& theta,
                               const Eigen::VectorXd& init) const {
  const int p = model_.order;
  if (init.size() != p)
    throw ConfigError("initial state length must equal the ODE order");
  const int n_steps = static_cast<int>(grid_.size()) - 1;
  const int n_coeff = static_cast<int>(model_.coefficient_terms.size());
  const int n_force = static_cast<int>(model_.forcing_terms.size());

  // Resolve each model function at every stage time for this theta.
  std::vector<Eigen::VectorXd> beta_start(n_coeff), beta_mid(n_coeff),
      beta_end(n_coeff);
  for (int i = 0; i < n_coeff; ++i) {
    const Eigen::VectorXd b = model_.term_coeffs(i, theta);
    beta_start[i] = coeff_stages_[i].start * b;
    beta_mid[i] = coeff_stages_[i].mid * b;
    beta_end[i] = coeff_stages_[i].end * b;
  }
  Eigen::VectorXd force_start = Eigen::VectorXd::Zero(n_steps);
  Eigen::VectorXd force_mid = Eigen::VectorXd::Zero(n_steps);
  Eigen::VectorXd force_end = Eigen::VectorXd::Zero(n_steps);
  for (int q = 0; q < n_force; ++q) {
    const Eigen::VectorXd a = model_.term_coeffs(n_coeff + q, theta);
    force_start.array() +=
        (gain_stages_[q].start * a).array() * input_start_[q].array();
    force_mid.array() +=
        (gain_stages_[q].mid * a).array() * input_mid_[q].array();
    force_end.array() +=
        (gain_stages_[q].end * a).array() * input_end_[q].array();
  }

  IVPSolution sol;
  sol.times = grid_;
  sol.states.resize(n_steps + 1, p);
  sol.top_slope_start.resize(n_steps);
  sol.top_slope_end.resize(n_steps);

  Eigen::VectorXd state = init;
  Eigen::VectorXd k1(p), k2(p), k3(p), k4(p), tmp(p);
  auto rhs = [&](int step, int stage, const Eigen::VectorXd& s,
                 Eigen::VectorXd& out) {
    for (int r = 0; r + 1 < p; ++r) out[r] = s[r + 1];
    double top = 0.0;
    for (int i = 0; i < n_coeff; ++i) {
      const double beta = stage == 0   ? beta_start[i][step]
                          : stage == 1 ? beta_mid[i][step]
                                       : beta_end[i][step];
      top += beta * s[model_.coefficient_terms[i].deriv_index];
    }
    top += stage == 0   ? force_start[step]
           : stage == 1 ? force_mid[step]
                        : force_end[step];
    out[p - 1] = top;
  };

  sol.states.row(0) = state.transpose();
  for (int step = 0; step < n_steps; ++step) {
    const double h = grid_[step + 1] - grid_[step];
    rhs(step, 0, state, k1);
    tmp = state + 0.5 * h * k1;
    rhs(step, 1, tmp, k2);
    tmp = state + 0.5 * h * k2;
    rhs(step, 1, tmp, k3);
    tmp = state + h * k3;
    rhs(step, 2, tmp, k4);
    sol.top_slope_start[step] = k1[p - 1];
    state += (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    if (!state.allFinite())
      throw NumericalError("initial value problem integration diverged");
    sol.states.row(step + 1) = state.transpose();
    rhs(step, 2, state, tmp);
    sol.top_slope_end[step] = tmp[p - 1];
  }
  return sol;
}

IVPSolution rk4_solve(const LinearODEModel& model,
                      const Eigen::VectorXd& theta,
                      const Eigen::VectorXd& init,
                      std::span<const double> grid) {
  return Rk4Plan(model, std::vector<double>(grid.begin(), grid.end()))
      .integrate(theta, init);
}

namespace {

// Indices of the observation times inside the integration grid.
std::vector<int> locate_times(const std::vector<double>& grid,
                              std::span<const double> times) {
  const double tol = 1e-9 * (grid.back() - grid.front());
  std::vector<int> idx;
  idx.reserve(times.size());
  for (double t : times) {
    const auto it = std::lower_bound(grid.begin(), grid.end(), t - tol);
    if (it == grid.end() || std::abs(*it - t) > tol)
      throw DataError("observation time missing from the integration grid");
    idx.push_back(static_cast<int>(it - grid.begin()));
  }
  return idx;
}

std::vector<double> baseline_grid(const LinearODEModel& model,
                                  std::span<const double> times,
                                  double max_step) {
  return make_integration_grid(model, times, max_step);
}

struct GnOutcome {
  Eigen::VectorXd params;
  Eigen::VectorXd residual;
  double sse = 0.0;
  int iterations = 0;
  bool converged = false;
};

// Damped Gauss-Newton with forward-difference Jacobians and step halving.
// Residual evaluations that throw NumericalError count as infinite SSE, so
// the line search backs away from divergent parameter regions. The starting
// point itself must evaluate.
template <typename Residual>
GnOutcome gn_minimize(const Residual& residual, Eigen::VectorXd params,
                      const NlsControls& controls) {
  const int n_par = static_cast<int>(params.size());
  Eigen::VectorXd r = residual(params);
  const int n_obs = static_cast<int>(r.size());
  double sse = r.squaredNorm();

  Eigen::MatrixXd jac(n_obs, n_par);
  double damping = controls.damping_init;
  bool converged = false;
  int iter = 0;
  for (; iter < controls.max_iters; ++iter) {
    for (int j = 0; j < n_par; ++j) {
      const double h = controls.fd_rel_step * (1.0 + std::abs(params[j]));
      Eigen::VectorXd shifted = params;
      shifted[j] += h;
      jac.col(j) = (residual(shifted) - r) / h;
    }
    const Eigen::VectorXd grad = 2.0 * (jac.transpose() * r);
    if (grad.lpNorm<Eigen::Infinity>() <
        controls.grad_tol * (1.0 + sse)) {
      converged = true;
      break;
    }
    Eigen::MatrixXd gn = jac.transpose() * jac;
    const double scale = gn.trace() / n_par + 1e-300;

    bool accepted = false;
    while (!accepted && damping <= controls.damping_max) {
      Eigen::MatrixXd damped = gn;
      damped.diagonal().array() += damping * scale;
      Eigen::LDLT<Eigen::MatrixXd> fac(damped);
      if (fac.info() != Eigen::Success || fac.rcond() < 1e-14) {
        damping *= controls.damping_increase;
        continue;
      }
      const Eigen::VectorXd step = fac.solve(-0.5 * grad);
      double alpha = 1.0;
      for (int k = 0; k <= controls.max_halvings; ++k) {
        const Eigen::VectorXd trial = params + alpha * step;
        double sse_trial;
        Eigen::VectorXd r_trial;
        try {
          r_trial = residual(trial);
          sse_trial = r_trial.squaredNorm();
        } catch (const NumericalError&) {
          sse_trial = std::numeric_limits<double>::infinity();
        }
        if (sse_trial < sse) {
          params = trial;
          r = std::move(r_trial);
          const double step_norm = (alpha * step).lpNorm<Eigen::Infinity>();
          const bool tiny = step_norm < controls.step_tol;
          sse = sse_trial;
          accepted = true;
          if (tiny) converged = true;
          break;
        }
        alpha *= 0.5;
      }
      if (accepted)
        damping = std::max(damping * controls.damping_decrease, 1e-12);
      else
        damping *= controls.damping_increase;
    }
    // No descent at maximal damping: stop at the current point.
    if (!accepted || converged) break;
  }
  GnOutcome out;
  out.params = std::move(params);
  out.residual = std::move(r);
  out.sse = sse;
  out.iterations = iter;
  out.converged = converged;
  return out;
}

}  // namespace

NlsResult nls_fit(const Eigen::VectorXd& y, std::span<const double> times,
                  const LinearODEModel& model, const Eigen::VectorXd& theta0,
                  const Eigen::VectorXd& init0, const NlsControls& controls) {
  model.validate();
  if (static_cast<std::size_t>(y.size()) != times.size())
    throw DataError("observation vector and time vector lengths differ");
  const int n_theta = model.theta_dim();
  const int p = model.order;
  if (theta0.size() != n_theta)
    throw ConfigError("theta0 length does not match the model");
  if (init0.size() != p)
    throw ConfigError("init0 length must equal the ODE order");

  const Rk4Plan plan(model, baseline_grid(model, times, controls.max_step));
  const std::vector<int> obs_idx = locate_times(plan.grid(), times);
  const int n_obs = static_cast<int>(y.size());
  const int n_par = n_theta + p;

  auto residual = [&](const Eigen::VectorXd& params) {
    const IVPSolution sol = plan.integrate(params.head(n_theta),
                                           params.tail(p));
    Eigen::VectorXd r(n_obs);
    for (int i = 0; i < n_obs; ++i)
      r[i] = y[i] - sol.states(obs_idx[i], 0);
    return r;
  };

  Eigen::VectorXd start(n_par);
  start.head(n_theta) = theta0;
  start.tail(p) = init0;
  GnOutcome fit = gn_minimize(residual, std::move(start), controls);

  NlsResult result;
  result.theta_hat = fit.params.head(n_theta);
  result.init_hat = fit.params.tail(p);
  result.sse = fit.sse;
  result.iterations = fit.iterations;
  result.converged = fit.converged;

  // Covariance from the final Jacobian.
  Eigen::MatrixXd jac(n_obs, n_par);
  for (int j = 0; j < n_par; ++j) {
    const double h = controls.fd_rel_step * (1.0 + std::abs(fit.params[j]));
    Eigen::VectorXd shifted = fit.params;
    shifted[j] += h;
    jac.col(j) = (residual(shifted) - fit.residual) / h;
  }
  const Eigen::MatrixXd gn = jac.transpose() * jac;
  Eigen::LDLT<Eigen::MatrixXd> fac(gn);
  if (n_obs > n_par && fac.info() == Eigen::Success && fac.rcond() > 1e-14) {
    const double sigma2 = fit.sse / (n_obs - n_par);
    result.covariance =
        sigma2 *
        fac.solve(Eigen::MatrixXd::Identity(n_par, n_par));
  } else {
    result.covariance = Eigen::MatrixXd::Constant(
        n_par, n_par, std::numeric_limits<double>::quiet_NaN());
  }
  return result;
}

double sa_acceptance_probability(double delta_sse, double temperature,
                                 AnnealerConfig::Rule rule) {
  if (!(temperature > 0.0))
    throw ConfigError("temperature must be positive");
  const double z = delta_sse / temperature;
  if (rule == AnnealerConfig::Rule::kMetropolis)
    return z > 700.0 ? 0.0 : std::min(1.0, std::exp(-z));
  return z > 700.0 ? 0.0 : 1.0 / (1.0 + std::exp(z));
}

SaResult sa_fit(const Eigen::VectorXd& y, std::span<const double> times,
                const LinearODEModel& model, const Eigen::VectorXd& theta0,
                const Eigen::VectorXd& init0, const AnnealerConfig& config) {
  model.validate();
  const int n_theta = model.theta_dim();
  if (theta0.size() != n_theta)
    throw ConfigError("theta0 length does not match the model");
  if (init0.size() != model.order)
    throw ConfigError("init0 length must equal the ODE order");
  if (config.adapt_interval < 1)
    throw ConfigError("adaptation interval must be positive");

  const Rk4Plan plan(model, baseline_grid(model, times, config.max_step));
  const std::vector<int> obs_idx = locate_times(plan.grid(), times);
  const int n_obs = static_cast<int>(y.size());

  auto sse_of = [&](const Eigen::VectorXd& theta) {
    const IVPSolution sol = plan.integrate(theta, init0);
    double sse = 0.0;
    for (int i = 0; i < n_obs; ++i) {
      const double r = y[i] - sol.states(obs_idx[i], 0);
      sse += r * r;
    }
    return sse;
  };

  RngStream rng(config.seed);
  Eigen::VectorXd theta = theta0;
  double sse = sse_of(theta);

  SaResult result;
  result.theta_hat = theta;
  result.sse = sse;
  Eigen::VectorXd scale(n_theta);
  for (int j = 0; j < n_theta; ++j)
    scale[j] = config.proposal_scale_factor * (1.0 + std::abs(theta0[j]));

  int window_accepted = 0;
  for (int k = 0; k < config.max_iters; ++k) {
    const double temperature = config.t0 / std::log(k + std::exp(1.0));
    Eigen::VectorXd proposal = theta;
    for (int j = 0; j < n_theta; ++j) proposal[j] += scale[j] * rng.normal();

    bool accept = false;
    double sse_prop = std::numeric_limits<double>::infinity();
    try {
      sse_prop = sse_of(proposal);
      ++result.evaluated;
      const double delta = sse_prop - sse;
      if (delta <= 0.0) {
        accept = true;
      } else {
        accept = rng.uniform01() <
                 sa_acceptance_probability(delta, temperature, config.rule);
      }
    } catch (const NumericalError&) {
      // Divergent integration: reject. Draw the acceptance uniform anyway so
      // the random stream does not depend on trajectory blowups.
      rng.uniform01();
    }
    if (accept) {
      theta = proposal;
      sse = sse_prop;
      ++result.accepted;
      ++window_accepted;
      if (sse < result.sse) {
        result.sse = sse;
        result.theta_hat = theta;
      }
    }
    if (config.keep_trace) result.sse_trace.push_back(sse);
    if ((k + 1) % config.adapt_interval == 0) {
      const double rate =
          static_cast<double>(window_accepted) / config.adapt_interval;
      scale *= rate > config.target_acceptance ? 1.1 : 0.9;
      window_accepted = 0;
    }
  }

  // Local descent from the best visited point. The walk's precision floor is
  // set by its proposal scale near the basin; the descent removes it. The
  // start evaluates by construction (its SSE is finite), and the descent
  // never accepts an increase, so the refined SSE cannot exceed the raw one.
  if (config.polish) {
    auto theta_residual = [&](const Eigen::VectorXd& th) {
      const IVPSolution sol = plan.integrate(th, init0);
      Eigen::VectorXd r(n_obs);
      for (int i = 0; i < n_obs; ++i)
        r[i] = y[i] - sol.states(obs_idx[i], 0);
      return r;
    };
    NlsControls refine;
    refine.max_iters = config.polish_iters;
    GnOutcome polished =
        gn_minimize(theta_residual, result.theta_hat, refine);
    result.theta_hat = std::move(polished.params);
    result.sse = polished.sse;
  }
  return result;
}

}  // namespace data2ld
