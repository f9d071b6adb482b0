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

#ifndef DATA2LD_CONFIG_HPP_
#define DATA2LD_CONFIG_HPP_

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "data2ld/baselines.hpp"
#include "data2ld/ladder.hpp"
#include "data2ld/simulation.hpp"

namespace data2ld {

// Every run option, with its default. The text form is a flat sectioned
// key = value file; parse_config and serialize_config share one schema
// table, so parse(serialize(parse(text))) == parse(text) field for field.
// Unknown sections, unknown keys, and duplicate keys are rejected with the
// offending line number.
struct RunConfig {
  // [model] second-order equation with a constant damping coefficient on the
  // first derivative, a constant stiffness coefficient on the level, and a
  // unit-pulse forcing of estimated gain.
  double model_impact_time = 14.0;
  double model_pulse_width = 1.0;
  double model_domain_start = 0.0;
  double model_domain_end = 60.0;

  // [basis] "pulse" concentrates knots around the forcing pulse;
  // "interpolating" spreads one knot per interior observation.
  int basis_order = 5;
  std::string basis_recipe = "pulse";
  int basis_post_pulse_knots = 11;

  // [quadrature] Gauss-Legendre nodes per knot interval; 0 selects
  // max(order, 5).
  int quadrature_points = 0;

  // [ladder] smoothing schedule. rho_max is optional: when unset, fit and
  // surface stop at 0.995 while benchmark continues to 0.99999 (replicate
  // studies need the deeper plateau; see the note on study_ladder_defaults).
  double ladder_gamma0 = -4.0;
  double ladder_dgamma_init = 1.0;
  double ladder_dgamma_floor = 1.0 / 64.0;
  double ladder_eps0 = 0.2;
  double ladder_eps1 = 1e-4;
  std::optional<double> ladder_rho_max;
  int ladder_max_rungs = 200;
  bool ladder_per_rung_intervals = true;

  // [outer] damped Gauss-Newton controls for each rung's minimization.
  double outer_grad_tol = 1e-8;
  double outer_step_tol = 1e-10;
  int outer_max_iters = 100;
  double outer_damping_init = 1e-3;
  double outer_damping_decrease = 0.3;
  double outer_damping_increase = 3.0;
  double outer_damping_max = 1e10;
  int outer_max_halvings = 20;

  // [estimators] which fitters the benchmark runs, plus the shared starting
  // point (one value broadcasts across all parameters).
  bool estimators_data2ld = true;
  bool estimators_nls = false;
  bool estimators_sa = false;
  std::vector<double> estimators_theta0 = {0.01};

  // [scenario] simulated-data generator.
  int scenario_n_obs = 101;
  double scenario_sigma = 0.05;
  int scenario_replicates = 100;
  std::uint64_t scenario_base_seed = 20260816u;
  int scenario_reference_resolution = 6001;
  std::vector<double> scenario_true_theta = {-0.05, -0.15, 0.39};

  // [nls] Gauss-Newton over parameters and initial state.
  int nls_max_iters = 100;
  double nls_grad_tol = 1e-10;
  double nls_step_tol = 1e-12;
  double nls_fd_rel_step = 1e-6;
  int nls_max_halvings = 20;
  double nls_damping_init = 1e-3;
  double nls_damping_decrease = 0.3;
  double nls_damping_increase = 3.0;
  double nls_damping_max = 1e10;
  double nls_max_step = 0.01;

  // [sa] simulated annealing over parameters and initial state.
  double sa_t0 = 100.0;
  int sa_max_iters = 20000;
  std::uint64_t sa_seed = 1u;
  std::string sa_rule = "barker";  // barker | metropolis
  double sa_proposal_scale_factor = 0.1;
  int sa_adapt_interval = 50;
  double sa_target_acceptance = 0.3;
  double sa_max_step = 0.01;
  bool sa_polish = true;
  int sa_polish_iters = 100;

  // [benchmark] the study grid: every (n_obs, sigma) pair is one cell.
  int benchmark_threads = 1;
  std::vector<double> benchmark_n_obs = {101};
  std::vector<double> benchmark_sigma = {0.05};

  // [surface] criterion-function grid dump: H over (beta0, beta1) with the
  // forcing gain held fixed, one sheet per rho.
  std::vector<double> surface_rho = {0.99, 0.5};
  double surface_beta0_min = -0.55;
  double surface_beta0_max = 0.45;
  int surface_beta0_count = 41;
  double surface_beta1_min = -0.65;
  double surface_beta1_max = 0.35;
  int surface_beta1_count = 41;
  double surface_alpha = 0.39;
  int surface_replicate = 0;

  // [output]
  std::string output_dir = "out";
};

// Parses the sectioned key = value text. '#' starts a comment; blank lines
// are skipped. Throws ConfigError with a line number on unknown sections or
// keys, duplicate keys, malformed values, or out-of-range values.
RunConfig parse_config(const std::string& text);

// Reads and parses a config file. Throws ConfigError when unreadable.
RunConfig load_config(const std::string& path);

// Canonical text form: every field, schema order, 17-significant-digit
// numerics. Unset optional fields are omitted.
std::string serialize_config(const RunConfig& config);

// Cross-field checks shared by every command (positive widths and counts,
// recipe and rule names, domain ordering). Throws ConfigError.
void validate_config(const RunConfig& config);

// Conversions into the library control structs. theta0 with a single entry
// broadcasts to theta_dim.
SimulationScenario scenario_from(const RunConfig& config);
Eigen::VectorXd theta0_from(const RunConfig& config, int theta_dim);
LadderControls ladder_from(const RunConfig& config, double default_rho_max,
                           int theta_dim);
OuterControls outer_from(const RunConfig& config);
NlsControls nls_from(const RunConfig& config);
AnnealerConfig annealer_from(const RunConfig& config);
StudyControls study_from(const RunConfig& config, int theta_dim);

}  // namespace data2ld

#endif  // DATA2LD_CONFIG_HPP_
