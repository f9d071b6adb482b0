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

#ifndef DATA2LD_COMMANDS_HPP_
#define DATA2LD_COMMANDS_HPP_

#include <optional>
#include <string>

#include "data2ld/config.hpp"

namespace data2ld {

// Command implementations behind the CLI. Each writes its outputs into
// config.output_dir (created if absent) and throws ConfigError, DataError,
// or NumericalError on failure; outputs are deterministic functions of the
// config and input data. Overrides from flags (--seed, --threads, --out)
// are applied to the config before these run.

// Runs the smoothing ladder on the observations in data_path (required,
// header `t,y`, times sorted and inside the declared domain). Writes
// report.txt (key = value, 17 significant digits, bit-exact on reparse),
// curve.csv (t, x_hat, ci_lo, ci_hi, pi_lo, pi_hi at the data times), and
// ladder.csv (rho, theta per rung, confidence-interval widths per rung).
void cmd_fit(const RunConfig& config,
             const std::optional<std::string>& data_path);

// Writes truth.csv (t, x at the observation grid) and one
// replicate_NNN.csv (t, y) per replicate; byte-identical for a fixed seed.
void cmd_simulate(const RunConfig& config);

// Runs the replicate study over every (n_obs, sigma) cell with the enabled
// estimators. Writes metrics.csv (one row per estimator and cell) and
// table.txt (accuracy, coverage, and timing blocks; a '!' marks cells with
// failure rates over 20%, a '*' marks coverage entries with fewer than 30
// completed replicates).
void cmd_benchmark(const RunConfig& config);

// Dumps the outer criterion H on a (beta0, beta1) grid with the forcing
// gain fixed, one sheet per rho, for the observations in data_path (or the
// configured scenario replicate when absent). Writes surface.csv
// (rho, beta0, beta1, h) and argmin.csv (the grid minimum per rho).
void cmd_surface(const RunConfig& config,
                 const std::optional<std::string>& data_path);

}  // namespace data2ld

#endif  // DATA2LD_COMMANDS_HPP_
