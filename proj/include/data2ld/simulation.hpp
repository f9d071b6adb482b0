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

#ifndef DATA2LD_SIMULATION_HPP_
#define DATA2LD_SIMULATION_HPP_

#include <Eigen/Core>
#include <cstdint>
#include <string>
#include <vector>

#include "data2ld/baselines.hpp"
#include "data2ld/ladder.hpp"
#include "data2ld/model.hpp"

namespace data2ld {

// Basis recipes for pulse-driven fits. The pulse recipe places triple knots
// at both pulse edges (order - 3 - 1 = one continuous derivative survives
// there for order 5), nothing before the pulse, and equispaced knots after
// it. The interpolating recipe spreads n_obs - 2 singleton knots over the
// domain, giving n_obs + order - 2 basis functions.
BSplineBasis pulse_basis(std::pair<double, double> domain, double impact_time,
                         double pulse_width, int order = 5,
                         int post_pulse_knots = 11);
BSplineBasis interpolating_basis(std::pair<double, double> domain, int n_obs,
                                 int order = 5);

// One cell of the simulation design: a pulse-driven second-order model
// observed at n_obs equispaced times with noise sd sigma * range(x).
struct SimulationScenario {
  Eigen::VectorXd true_theta =
      (Eigen::VectorXd(3) << -0.05, -0.15, 0.39).finished();
  double domain_start = 0.0;
  double domain_end = 60.0;
  double impact_time = 14.0;
  double pulse_width = 1.0;
  int n_obs = 101;
  double sigma = 0.05;
  int replicates = 100;
  std::uint64_t base_seed = 20260816u;
  // Base point count of the reference integration grid for the truth.
  int reference_resolution = 6001;

  LinearODEModel model() const;
  std::vector<double> observation_grid() const;
};

// Reference trajectory from rest, integrated at the reference resolution
// (with the pulse edges inserted into the grid).
IVPSolution true_solution(const SimulationScenario& scenario);

struct ReplicateData {
  std::vector<double> times;
  Eigen::VectorXd y;
  double noise_sd = 0.0;
};

// Observations for one replicate: truth at the observation grid plus
// Gaussian noise with sd sigma * range(truth on that grid). Deterministic
// in (base_seed, replicate_index) and independent across indices.
ReplicateData generate_data(const SimulationScenario& scenario,
                            int replicate_index);

enum class EstimatorKind { kData2LD, kNls, kSa };

std::string estimator_name(EstimatorKind kind);

// Ladder controls for replicate studies: the library defaults except for a
// higher smoothing cap. The penalty weight is normalized by the domain
// length, so the penalty-to-data weight ratio at rho is rho/(1-rho) scaled
// by N/T; on this sixty-unit domain the parameter errors keep shrinking
// until logit(rho) is near nine, plateau through logit(rho) = 11.5 (the
// study cap, where the theta path has stabilized), and turn numerically
// noisy past logit(rho) ~ 12 as M's data block underflows its penalty
// block. The single-fit default cap of 0.995 stops mid-transition and
// leaves smoothing bias several times the plateau error. At the study cap
// the fixed-theta smoother trace undercounts the effective dimension
// (df ~ 1.2 < order 2): R's null space is only approximately in the spline
// span, so df -> 0 rather than the order as rho -> 1.
LadderControls study_ladder_defaults();

struct StudyControls {
  LadderControls ladder = study_ladder_defaults();
  NlsControls nls;
  AnnealerConfig sa;
  // Start for the baselines; empty selects 0.01 everywhere, matching the
  // ladder's default.
  Eigen::VectorXd theta0;
  int threads = 1;
  // Basis recipe for the cascade fits.
  bool interpolating = false;
  int basis_order = 5;
  int post_pulse_knots = 11;
  int quad_points = 0;  // 0 = auto
};

// Accuracy and timing summary for one (estimator, n_obs, sigma) cell.
// RMSE entries follow the convention of reporting 100 * RMSE.
struct CellMetrics {
  std::string estimator;
  int n_obs = 0;
  double sigma = 0.0;
  int replicates_requested = 0;
  int replicates_done = 0;
  int failures = 0;
  Eigen::VectorXd rmse_theta;       // 100 * per-parameter RMSE over replicates
  double rmse_x = 0.0;              // 100 * mean per-replicate curve RMSE
  Eigen::VectorXd coverage_pct;     // 95% CI coverage per parameter
  Eigen::VectorXd coverage_se_pct;  // binomial standard error
  double mean_fit_seconds = 0.0;
  bool low_confidence = false;      // flagged when failures exceed 20%
  std::vector<std::string> failure_notes;  // first few failure messages
};

struct MetricsTable {
  std::vector<CellMetrics> cells;
};

// Runs every requested estimator over the scenario's replicates. Replicates
// are independent and may be processed by several threads; aggregation is
// by replicate index, so results do not depend on the thread count. Failed
// replicates are excluded from the aggregates and counted.
MetricsTable run_study(const SimulationScenario& scenario,
                       const std::vector<EstimatorKind>& estimators,
                       const StudyControls& controls = {});

}  // namespace data2ld

#endif  // DATA2LD_SIMULATION_HPP_
