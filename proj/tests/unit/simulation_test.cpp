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

#include <doctest.h>

#include <cmath>
#include <vector>

#include "data2ld/simulation.hpp"

using namespace data2ld;

TEST_CASE("the truth rests before the pulse and decays after it") {
  SimulationScenario scenario;
  const IVPSolution truth = true_solution(scenario);
  const std::vector<double> before = {0.0, 5.0, 10.0, 13.9};
  const Eigen::VectorXd x_before = truth.eval_many(before);
  CHECK(x_before.cwiseAbs().maxCoeff() < 1e-12);

  std::vector<double> early, late;
  for (double t = 15.0; t <= 25.0; t += 0.1) early.push_back(t);
  for (double t = 50.0; t <= 60.0; t += 0.1) late.push_back(t);
  const double early_amp = truth.eval_many(early).cwiseAbs().maxCoeff();
  const double late_amp = truth.eval_many(late).cwiseAbs().maxCoeff();
  CHECK(early_amp > 0.1);
  CHECK(late_amp < early_amp);

  // Underdamped: the response crosses zero within its first period
  // (natural frequency near 0.22, so the period is near thirty units).
  std::vector<double> cycle;
  for (double t = 15.0; t <= 45.0; t += 0.1) cycle.push_back(t);
  const Eigen::VectorXd x_cycle = truth.eval_many(cycle);
  CHECK(x_cycle.minCoeff() < 0.0);
  CHECK(x_cycle.maxCoeff() > 0.0);
}

TEST_CASE("doubling the reference resolution leaves the truth unchanged") {
  SimulationScenario coarse, fine;
  fine.reference_resolution = 2 * coarse.reference_resolution - 1;
  const std::vector<double> grid = coarse.observation_grid();
  const Eigen::VectorXd a = true_solution(coarse).eval_many(grid);
  const Eigen::VectorXd b = true_solution(fine).eval_many(grid);
  CHECK((a - b).cwiseAbs().maxCoeff() < 1e-9);
}

TEST_CASE("zero noise reproduces the truth exactly") {
  SimulationScenario scenario;
  scenario.sigma = 0.0;
  const ReplicateData data = generate_data(scenario, 0);
  const Eigen::VectorXd x = true_solution(scenario).eval_many(data.times);
  for (int i = 0; i < data.y.size(); ++i) CHECK(data.y[i] == x[i]);
  CHECK(data.noise_sd == 0.0);
}

TEST_CASE("replicates are deterministic in the seed and independent") {
  SimulationScenario scenario;
  const ReplicateData a = generate_data(scenario, 7);
  const ReplicateData b = generate_data(scenario, 7);
  CHECK((a.y.array() == b.y.array()).all());

  const ReplicateData c = generate_data(scenario, 8);
  CHECK(!(a.y.array() == c.y.array()).all());

  SimulationScenario other = scenario;
  other.base_seed = scenario.base_seed + 1;
  const ReplicateData d = generate_data(other, 7);
  CHECK(!(a.y.array() == d.y.array()).all());
}

TEST_CASE("the noise scale matches sigma times the trajectory range") {
  SimulationScenario scenario;
  const Eigen::VectorXd x =
      true_solution(scenario).eval_many(scenario.observation_grid());
  const double range = x.maxCoeff() - x.minCoeff();
  CHECK(generate_data(scenario, 0).noise_sd ==
        doctest::Approx(scenario.sigma * range).epsilon(1e-12));

  // Pooled standard deviation over many replicates concentrates on it.
  double ss = 0.0;
  int n = 0;
  for (int rep = 0; rep < 200; ++rep) {
    const ReplicateData data = generate_data(scenario, rep);
    ss += (data.y - x).squaredNorm();
    n += static_cast<int>(data.y.size());
  }
  const double pooled = std::sqrt(ss / n);
  CHECK(pooled ==
        doctest::Approx(scenario.sigma * range).epsilon(0.02));
}

TEST_CASE("basis recipes produce the documented sizes") {
  SimulationScenario scenario;
  const BSplineBasis pulse =
      pulse_basis({scenario.domain_start, scenario.domain_end},
                  scenario.impact_time, scenario.pulse_width);
  CHECK(pulse.size() == 22);
  const BSplineBasis interp =
      interpolating_basis({scenario.domain_start, scenario.domain_end},
                          scenario.n_obs);
  CHECK(interp.size() == 104);
}

TEST_CASE("a noise-free study recovers the parameters in every replicate") {
  SimulationScenario scenario;
  scenario.sigma = 0.0;
  scenario.replicates = 2;
  const MetricsTable table =
      run_study(scenario, {EstimatorKind::kData2LD}, {});
  REQUIRE(table.cells.size() == 1);
  const CellMetrics& cell = table.cells[0];
  CHECK(cell.estimator == "data2ld");
  CHECK(cell.replicates_done == 2);
  CHECK(cell.failures == 0);
  CHECK(!cell.low_confidence);
  // The reported scale is 100 x RMSE.
  for (int j = 0; j < 3; ++j) CHECK(cell.rmse_theta[j] < 0.1);
  CHECK(cell.rmse_x < 0.1);
  CHECK(cell.mean_fit_seconds > 0.0);
}

TEST_CASE("study metrics are reproducible") {
  SimulationScenario scenario;
  scenario.n_obs = 21;
  scenario.replicates = 2;
  const MetricsTable a = run_study(scenario, {EstimatorKind::kData2LD}, {});
  const MetricsTable b = run_study(scenario, {EstimatorKind::kData2LD}, {});
  CHECK((a.cells[0].rmse_theta.array() == b.cells[0].rmse_theta.array()).all());
  CHECK(a.cells[0].rmse_x == b.cells[0].rmse_x);
  CHECK((a.cells[0].coverage_pct.array() ==
         b.cells[0].coverage_pct.array()).all());
}

TEST_CASE("estimator names are stable") {
  CHECK(estimator_name(EstimatorKind::kData2LD) == "data2ld");
  CHECK(estimator_name(EstimatorKind::kNls) == "nls");
  CHECK(estimator_name(EstimatorKind::kSa) == "sa");
}
