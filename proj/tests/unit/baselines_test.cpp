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

#include <doctest.h>

#include <cmath>
#include <vector>

#include "data2ld/errors.hpp"
#include "data2ld/rng.hpp"

using namespace data2ld;

namespace {

std::vector<double> linspace(double a, double b, int n) {
  std::vector<double> out(n);
  for (int i = 0; i < n; ++i) out[i] = a + (b - a) * i / (n - 1);
  return out;
}

const Eigen::VectorXd kTruth =
    (Eigen::VectorXd(3) << -0.05, -0.15, 0.39).finished();

Eigen::VectorXd observe(const LinearODEModel& model,
                        const Eigen::VectorXd& theta,
                        const std::vector<double>& times, double sigma,
                        unsigned long long seed) {
  const std::vector<double> grid = make_integration_grid(model, times, 0.01);
  Eigen::VectorXd y = rk4_solve(model, theta, Eigen::VectorXd::Zero(2), grid)
                          .eval_many(times, 0);
  if (sigma > 0.0) {
    RngStream rng(seed);
    for (Eigen::Index i = 0; i < y.size(); ++i) y[i] += sigma * rng.normal();
  }
  return y;
}

}  // namespace

TEST_CASE("zero dynamics from rest stay exactly at rest") {
  const LinearODEModel model = head_impact_model(14.0, 1.0, {0.0, 60.0});
  const std::vector<double> grid =
      make_integration_grid(model, linspace(0.0, 60.0, 61), 0.25);
  const IVPSolution sol =
      rk4_solve(model, Eigen::VectorXd::Zero(3), Eigen::VectorXd::Zero(2),
                grid);
  for (double t : {0.0, 7.3, 14.0, 25.0, 60.0}) {
    CHECK(sol.eval(t, 0) == 0.0);
    CHECK(sol.eval(t, 1) == 0.0);
  }
}

TEST_CASE("trajectory is exactly zero until the pulse hits") {
  const LinearODEModel model = head_impact_model(14.0, 1.0, {0.0, 60.0});
  const std::vector<double> grid =
      make_integration_grid(model, linspace(0.0, 60.0, 121), 0.1);
  const IVPSolution sol =
      rk4_solve(model, kTruth, Eigen::VectorXd::Zero(2), grid);
  // The right-endpoint stages take left limits, so no step ending at the
  // impact time sees the pulse.
  for (double t : {0.0, 5.0, 13.5, 14.0}) CHECK(sol.eval(t, 0) == 0.0);
  CHECK(sol.eval(14.6, 0) != 0.0);
  CHECK(sol.eval(20.0, 0) != 0.0);
}

TEST_CASE("integration error shrinks at fourth order") {
  const LinearODEModel model = head_impact_model(14.0, 1.0, {0.0, 60.0});
  const std::vector<double> probe = linspace(0.0, 60.0, 61);
  const Eigen::VectorXd ref =
      rk4_solve(model, kTruth, Eigen::VectorXd::Zero(2),
                make_integration_grid(model, probe, 0.004))
          .eval_many(probe, 0);
  const Eigen::VectorXd coarse =
      rk4_solve(model, kTruth, Eigen::VectorXd::Zero(2),
                make_integration_grid(model, probe, 0.2))
          .eval_many(probe, 0);
  const Eigen::VectorXd fine =
      rk4_solve(model, kTruth, Eigen::VectorXd::Zero(2),
                make_integration_grid(model, probe, 0.1))
          .eval_many(probe, 0);
  const double e_coarse = (coarse - ref).cwiseAbs().maxCoeff();
  const double e_fine = (fine - ref).cwiseAbs().maxCoeff();
  CHECK(e_fine > 0.0);
  const double ratio = e_coarse / e_fine;
  CHECK(ratio > 12.0);
  CHECK(ratio < 20.0);
}

TEST_CASE("solution evaluation reproduces stored states and slopes") {
  const LinearODEModel model = head_impact_model(14.0, 1.0, {0.0, 60.0});
  const std::vector<double> grid =
      make_integration_grid(model, linspace(0.0, 60.0, 31), 0.5);
  const IVPSolution sol =
      rk4_solve(model, kTruth, Eigen::VectorXd::Zero(2), grid);
  for (std::size_t i = 0; i < sol.times.size(); i += 7) {
    CHECK(sol.eval(sol.times[i], 0) ==
          doctest::Approx(sol.states(i, 0)).epsilon(1e-14));
    CHECK(sol.eval(sol.times[i], 1) ==
          doctest::Approx(sol.states(i, 1)).epsilon(1e-14));
  }
  // Between nodes the value interpolates to fine-grid accuracy.
  const std::vector<double> mids = {16.23, 30.77, 51.11};
  const IVPSolution dense =
      rk4_solve(model, kTruth, Eigen::VectorXd::Zero(2),
                make_integration_grid(model, mids, 0.005));
  for (double t : mids)
    CHECK(sol.eval(t, 0) == doctest::Approx(dense.eval(t, 0)).epsilon(1e-5));
  // Out-of-range requests fail loudly.
  CHECK_THROWS_AS(sol.eval(-1.0, 0), DataError);
  CHECK_THROWS_AS(sol.eval(60.5, 0), DataError);
}

TEST_CASE("pulse edges must be integration grid points") {
  const LinearODEModel model = head_impact_model(14.0, 1.0, {0.0, 60.0});
  // A grid that puts nodes at multiples of 4 skips t = 14 and t = 15.
  std::vector<double> grid;
  for (int i = 0; i <= 15; ++i) grid.push_back(4.0 * i);
  CHECK_THROWS_AS(rk4_solve(model, kTruth, Eigen::VectorXd::Zero(2), grid),
                  ConfigError);
  // make_integration_grid inserts them automatically.
  const std::vector<double> fixed =
      make_integration_grid(model, grid, 0.0);
  bool has14 = false, has15 = false;
  for (double t : fixed) {
    has14 = has14 || t == 14.0;
    has15 = has15 || t == 15.0;
  }
  CHECK(has14);
  CHECK(has15);
}

TEST_CASE("divergent dynamics raise a numerical error") {
  const LinearODEModel model = head_impact_model(14.0, 1.0, {0.0, 60.0});
  // Strong positive feedback overflows the state within the domain.
  const Eigen::VectorXd runaway =
      (Eigen::VectorXd(3) << 2000.0, 10.0, 5.0).finished();
  const std::vector<double> grid =
      make_integration_grid(model, linspace(0.0, 60.0, 61), 0.5);
  CHECK_THROWS_AS(rk4_solve(model, runaway, Eigen::VectorXd::Zero(2), grid),
                  NumericalError);
}

TEST_CASE("least squares stays put when started at the solution") {
  const LinearODEModel model = head_impact_model(14.0, 1.0, {0.0, 60.0});
  const std::vector<double> times = linspace(0.0, 60.0, 101);
  const Eigen::VectorXd y = observe(model, kTruth, times, 0.0, 0);
  const NlsResult res =
      nls_fit(y, times, model, kTruth, Eigen::VectorXd::Zero(2));
  CHECK(res.converged);
  CHECK((res.theta_hat - kTruth).cwiseAbs().maxCoeff() < 1e-8);
  CHECK(res.init_hat.cwiseAbs().maxCoeff() < 1e-8);
  CHECK(res.sse < 1e-12);
}

TEST_CASE("least squares recovers parameters from noise-free data") {
  const LinearODEModel model = head_impact_model(14.0, 1.0, {0.0, 60.0});
  const std::vector<double> times = linspace(0.0, 60.0, 101);
  const Eigen::VectorXd y = observe(model, kTruth, times, 0.0, 0);
  const NlsResult res =
      nls_fit(y, times, model, Eigen::VectorXd::Constant(3, 0.01),
              Eigen::VectorXd::Zero(2));
  CHECK(res.converged);
  for (int j = 0; j < 3; ++j)
    CHECK(std::abs(res.theta_hat[j] - kTruth[j]) < 1e-3);
}

TEST_CASE("least squares covariance is finite and positive on noisy data") {
  const LinearODEModel model = head_impact_model(14.0, 1.0, {0.0, 60.0});
  const std::vector<double> times = linspace(0.0, 60.0, 101);
  const Eigen::VectorXd y = observe(model, kTruth, times, 0.05, 42);
  // Start inside the basin: this exercises the covariance at a noisy
  // optimum, not the global search.
  const NlsResult res =
      nls_fit(y, times, model, kTruth, Eigen::VectorXd::Zero(2));
  CHECK(res.converged);
  REQUIRE(res.covariance.rows() == 5);
  REQUIRE(res.covariance.cols() == 5);
  CHECK(res.covariance.allFinite());
  for (int j = 0; j < 5; ++j) CHECK(res.covariance(j, j) > 0.0);
  for (int j = 0; j < 3; ++j)
    CHECK(std::abs(res.theta_hat[j] - kTruth[j]) < 0.1);
}

TEST_CASE("acceptance probability behaves across rules") {
  using Rule = AnnealerConfig::Rule;
  // A zero-cost move is a coin flip under the smoothed rule and certain
  // under the threshold rule.
  CHECK(sa_acceptance_probability(0.0, 1.0, Rule::kBarker) ==
        doctest::Approx(0.5));
  CHECK(sa_acceptance_probability(0.0, 1.0, Rule::kMetropolis) ==
        doctest::Approx(1.0));
  // Monotone decreasing in the cost increase, increasing in temperature.
  double prev_b = 1.0, prev_m = 2.0;
  for (double d : {0.1, 0.5, 2.0, 10.0}) {
    const double b = sa_acceptance_probability(d, 1.0, Rule::kBarker);
    const double m = sa_acceptance_probability(d, 1.0, Rule::kMetropolis);
    CHECK(b < prev_b);
    CHECK(m < prev_m);
    CHECK(b > 0.0);
    CHECK(b < 0.5);
    CHECK(m > 0.0);
    CHECK(m <= 1.0);
    // The smoothed rule never exceeds the threshold rule.
    CHECK(b <= m);
    prev_b = b;
    prev_m = m;
  }
  CHECK(sa_acceptance_probability(1.0, 10.0, Rule::kBarker) >
        sa_acceptance_probability(1.0, 1.0, Rule::kBarker));
  // Extreme costs underflow to zero instead of overflowing.
  CHECK(sa_acceptance_probability(1e6, 1e-3, Rule::kBarker) == 0.0);
  CHECK(sa_acceptance_probability(1e6, 1e-3, Rule::kMetropolis) == 0.0);
}

TEST_CASE("annealer is reproducible and seed-sensitive") {
  const LinearODEModel model = head_impact_model(14.0, 1.0, {0.0, 60.0});
  const std::vector<double> times = linspace(0.0, 60.0, 51);
  const Eigen::VectorXd y = observe(model, kTruth, times, 0.05, 7);
  AnnealerConfig config;
  config.max_iters = 300;
  config.seed = 11;
  config.max_step = 0.25;
  config.keep_trace = true;
  const SaResult a =
      sa_fit(y, times, model, Eigen::VectorXd::Constant(3, 0.01),
             Eigen::VectorXd::Zero(2), config);
  const SaResult b =
      sa_fit(y, times, model, Eigen::VectorXd::Constant(3, 0.01),
             Eigen::VectorXd::Zero(2), config);
  CHECK((a.theta_hat - b.theta_hat).cwiseAbs().maxCoeff() == 0.0);
  CHECK(a.sse == b.sse);
  CHECK(a.accepted == b.accepted);
  REQUIRE(a.sse_trace.size() == b.sse_trace.size());
  for (std::size_t i = 0; i < a.sse_trace.size(); ++i)
    CHECK(a.sse_trace[i] == b.sse_trace[i]);

  config.seed = 12;
  const SaResult c =
      sa_fit(y, times, model, Eigen::VectorXd::Constant(3, 0.01),
             Eigen::VectorXd::Zero(2), config);
  CHECK((a.theta_hat - c.theta_hat).cwiseAbs().maxCoeff() > 0.0);
}

TEST_CASE("annealer reports the best visited cost, refined when enabled") {
  const LinearODEModel model = head_impact_model(14.0, 1.0, {0.0, 60.0});
  const std::vector<double> times = linspace(0.0, 60.0, 51);
  const Eigen::VectorXd y = observe(model, kTruth, times, 0.1, 17);
  AnnealerConfig config;
  config.max_iters = 500;
  config.seed = 3;
  config.max_step = 0.25;
  config.keep_trace = true;
  config.polish = false;
  const SaResult raw =
      sa_fit(y, times, model, Eigen::VectorXd::Constant(3, 0.01),
             Eigen::VectorXd::Zero(2), config);
  REQUIRE(!raw.sse_trace.empty());
  double best = raw.sse_trace.front();
  for (double s : raw.sse_trace) best = std::min(best, s);
  CHECK(raw.sse == doctest::Approx(best));
  CHECK(raw.evaluated >= raw.accepted);
  CHECK(raw.accepted > 0);

  // The local descent only improves on the best visited point, and the
  // trace still records the raw walk.
  config.polish = true;
  const SaResult refined =
      sa_fit(y, times, model, Eigen::VectorXd::Constant(3, 0.01),
             Eigen::VectorXd::Zero(2), config);
  CHECK(refined.sse <= raw.sse);
  REQUIRE(refined.sse_trace.size() == raw.sse_trace.size());
  for (std::size_t i = 0; i < raw.sse_trace.size(); ++i)
    CHECK(refined.sse_trace[i] == raw.sse_trace[i]);
}

TEST_CASE("annealer recovers the parameters on noise-free data") {
  const LinearODEModel model = head_impact_model(14.0, 1.0, {0.0, 60.0});
  const std::vector<double> times = linspace(0.0, 60.0, 101);
  const Eigen::VectorXd y = observe(model, kTruth, times, 0.0, 0);
  // A short walk reaches the basin; the descent supplies the precision.
  AnnealerConfig config;
  config.seed = 20260816;
  config.max_iters = 2000;
  config.max_step = 0.05;
  const SaResult res =
      sa_fit(y, times, model, Eigen::VectorXd::Constant(3, 0.01),
             Eigen::VectorXd::Zero(2), config);
  for (int j = 0; j < 3; ++j)
    CHECK(std::abs(res.theta_hat[j] - kTruth[j]) < 1e-2);
}
