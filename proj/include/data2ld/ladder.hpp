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

#ifndef DATA2LD_LADDER_HPP_
#define DATA2LD_LADDER_HPP_

#include <Eigen/Core>
#include <string>
#include <vector>

#include "data2ld/outer_optimizer.hpp"

namespace data2ld {

// Logistic map gamma -> rho = exp(gamma) / (1 + exp(gamma)), overflow-safe,
// strictly increasing, range (0, 1).
double logistic_rho(double gamma);

struct LadderControls {
  double gamma0 = -4.0;
  // Empty selects 0.01 for every free parameter.
  Eigen::VectorXd theta0;
  double dgamma_init = 1.0;
  double dgamma_floor = 1.0 / 64.0;
  double eps0 = 0.2;     // relative H-change guard between rungs
  double eps1 = 1e-4;    // |theta change|_inf stopping threshold
  double rho_max = 0.995;
  int max_rungs = 200;
  bool per_rung_intervals = true;
  OuterControls outer;
};

// One accepted rung of the ladder.
struct LadderState {
  double gamma = 0.0;
  double rho = 0.0;
  Eigen::VectorXd theta;
  double h = 0.0;
  double gamma_increment = 0.0;  // increment that produced this rung
  // 1.96-sigma half-widths per parameter; NaN when intervals are disabled
  // or the rung's information matrix is singular.
  Eigen::VectorXd ci_half_width;
};

struct LadderTrace {
  std::vector<LadderState> states;
  Eigen::VectorXd theta_hat;
  Eigen::VectorXd c_hat;
  double rho_hat = 0.0;
  double h_hat = 0.0;
  bool converged = false;
  std::string failure;  // empty unless the ladder stopped early

  const LadderState& final_state() const { return states.back(); }
};

// Runs the full cascade: minimize H at rho(gamma0), then repeatedly step
// gamma up by a pending increment (halved, with the previous rung restored,
// whenever the relative H change is eps0 or more; never below dgamma_floor,
// at which point the rung is accepted regardless), warm-starting each
// minimization at the previous rung's theta. Stops when theta stabilizes
// within eps1 or rho reaches rho_max. Accepted rhos are strictly increasing
// and never exceed rho_max.
LadderTrace run_ladder(const FitProblem& prob,
                       const LadderControls& controls = {});

}  // namespace data2ld

#endif  // DATA2LD_LADDER_HPP_
