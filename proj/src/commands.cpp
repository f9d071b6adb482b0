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

#include "data2ld/commands.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <limits>
#include <map>
#include <vector>

#include "data2ld/csv.hpp"
#include "data2ld/errors.hpp"
#include "data2ld/inference.hpp"

namespace data2ld {
namespace {

namespace fs = std::filesystem;

fs::path ensure_out_dir(const RunConfig& config) {
  fs::path dir(config.output_dir);
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw DataError("cannot create output directory " + dir.string());
  return dir;
}

std::vector<double> to_std(const Eigen::VectorXd& v) {
  return std::vector<double>(v.data(), v.data() + v.size());
}

void check_domain(const TimeSeries& data, const RunConfig& config,
                  const std::string& path) {
  for (int i = 0; i < data.times.size(); ++i)
    if (data.times[i] < config.model_domain_start ||
        data.times[i] > config.model_domain_end)
      throw DataError(path + ": t = " + format_full(data.times[i]) +
                      " outside declared domain [" +
                      format_full(config.model_domain_start) + ", " +
                      format_full(config.model_domain_end) + "]");
}

BSplineBasis basis_from(const RunConfig& config, int n_obs) {
  const std::pair<double, double> domain{config.model_domain_start,
                                         config.model_domain_end};
  if (config.basis_recipe == "interpolating")
    return interpolating_basis(domain, n_obs, config.basis_order);
  return pulse_basis(domain, config.model_impact_time,
                     config.model_pulse_width, config.basis_order,
                     config.basis_post_pulse_knots);
}

FitProblem problem_from(const RunConfig& config, const TimeSeries& data) {
  const SimulationScenario scenario = scenario_from(config);
  const LinearODEModel model = scenario.model();
  const BSplineBasis basis =
      basis_from(config, static_cast<int>(data.times.size()));
  const QuadratureRule quad =
      make_quadrature(basis, config.quadrature_points);
  return make_fit_problem(data.values, to_std(data.times), model, basis,
                          quad);
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot open " + path.string() + " for writing");
  out << text;
  if (!out) throw DataError("write to " + path.string() + " failed");
}

std::string kv(const std::string& key, const std::string& value) {
  return key + " = " + value + "\n";
}
std::string kv(const std::string& key, double value) {
  return kv(key, format_full(value));
}
std::string kv(const std::string& key, int value) {
  return kv(key, std::to_string(value));
}

// Fixed-width human-readable cell; deterministic for a given value.
std::string fixed(double value, int decimals) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.*f", decimals, value);
  return buf;
}

}  // namespace

void cmd_fit(const RunConfig& config,
             const std::optional<std::string>& data_path) {
  if (!data_path) throw ConfigError("fit requires --data");
  const TimeSeries data = read_time_series(*data_path);
  check_domain(data, config, *data_path);

  const fs::path out_dir = ensure_out_dir(config);
  const FitProblem prob = problem_from(config, data);
  const int theta_dim = prob.assembler.model().theta_dim();
  const LadderControls controls = ladder_from(config, 0.995, theta_dim);
  const LadderTrace trace = run_ladder(prob, controls);
  if (trace.states.empty())
    throw NumericalError("ladder produced no accepted rungs: " +
                         trace.failure);
  const InferenceReport report =
      build_inference(trace.theta_hat, trace.rho_hat, prob);

  const Eigen::VectorXd residuals = data.values - report.x_hat;
  const double rmse = std::sqrt(residuals.squaredNorm() /
                                static_cast<double>(residuals.size()));

  std::string text;
  text += kv("command", "fit");
  text += kv("n_obs", prob.n_obs());
  text += kv("domain_start", config.model_domain_start);
  text += kv("domain_end", config.model_domain_end);
  text += kv("converged", trace.converged ? "true" : "false");
  if (!trace.failure.empty()) text += kv("failure", trace.failure);
  text += kv("rungs", static_cast<int>(trace.states.size()));
  text += kv("rho_hat", trace.rho_hat);
  text += kv("h_hat", trace.h_hat);
  text += kv("df", report.df);
  text += kv("sigma_y_hat", std::sqrt(report.sigma2_y));
  text += kv("rmse_residuals", rmse);
  text += kv("theta_dim", theta_dim);
  for (int j = 0; j < theta_dim; ++j) {
    const std::string suffix = "_" + std::to_string(j);
    text += kv("theta_hat" + suffix, report.theta_hat[j]);
    text += kv("theta_se" + suffix, report.theta_se[j]);
    text += kv("theta_ci_lo" + suffix, report.theta_ci(j, 0));
    text += kv("theta_ci_hi" + suffix, report.theta_ci(j, 1));
  }
  write_text(out_dir / "report.txt", text);

  Eigen::MatrixXd curve(prob.n_obs(), 6);
  curve.col(0) = data.times;
  curve.col(1) = report.x_hat;
  curve.col(2) = report.x_ci.col(0);
  curve.col(3) = report.x_ci.col(1);
  curve.col(4) = report.x_pi.col(0);
  curve.col(5) = report.x_pi.col(1);
  write_csv((out_dir / "curve.csv").string(),
            {"t", "x_hat", "ci_lo", "ci_hi", "pi_lo", "pi_hi"}, curve);

  const int n_rungs = static_cast<int>(trace.states.size());
  Eigen::MatrixXd ladder(n_rungs, 1 + 2 * theta_dim);
  std::vector<std::string> columns = {"rho"};
  for (int j = 0; j < theta_dim; ++j)
    columns.push_back("theta_" + std::to_string(j));
  for (int j = 0; j < theta_dim; ++j)
    columns.push_back("ci_width_" + std::to_string(j));
  for (int i = 0; i < n_rungs; ++i) {
    const LadderState& state = trace.states[i];
    ladder(i, 0) = state.rho;
    for (int j = 0; j < theta_dim; ++j) {
      ladder(i, 1 + j) = state.theta[j];
      ladder(i, 1 + theta_dim + j) =
          state.ci_half_width.size() ? 2.0 * state.ci_half_width[j]
                                     : std::numeric_limits<double>::quiet_NaN();
    }
  }
  write_csv((out_dir / "ladder.csv").string(), columns, ladder);
}

void cmd_simulate(const RunConfig& config) {
  const fs::path out_dir = ensure_out_dir(config);
  const SimulationScenario scenario = scenario_from(config);
  const IVPSolution truth = true_solution(scenario);
  const std::vector<double> grid = scenario.observation_grid();
  const Eigen::VectorXd x = truth.eval_many(grid);

  Eigen::MatrixXd truth_rows(static_cast<int>(grid.size()), 2);
  for (std::size_t i = 0; i < grid.size(); ++i) {
    truth_rows(static_cast<int>(i), 0) = grid[i];
    truth_rows(static_cast<int>(i), 1) = x[static_cast<int>(i)];
  }
  write_csv((out_dir / "truth.csv").string(), {"t", "x"}, truth_rows);

  for (int rep = 0; rep < scenario.replicates; ++rep) {
    const ReplicateData data = generate_data(scenario, rep);
    Eigen::MatrixXd rows(static_cast<int>(data.times.size()), 2);
    for (std::size_t i = 0; i < data.times.size(); ++i) {
      rows(static_cast<int>(i), 0) = data.times[i];
      rows(static_cast<int>(i), 1) = data.y[static_cast<int>(i)];
    }
    char name[32];
    std::snprintf(name, sizeof name, "replicate_%03d.csv", rep);
    write_csv((out_dir / name).string(), {"t", "y"}, rows);
  }
}

void cmd_benchmark(const RunConfig& config) {
  std::vector<EstimatorKind> estimators;
  if (config.estimators_data2ld) estimators.push_back(EstimatorKind::kData2LD);
  if (config.estimators_nls) estimators.push_back(EstimatorKind::kNls);
  if (config.estimators_sa) estimators.push_back(EstimatorKind::kSa);
  if (estimators.empty())
    throw ConfigError("benchmark requires at least one enabled estimator");

  const fs::path out_dir = ensure_out_dir(config);
  const StudyControls controls = study_from(config, 3);

  std::vector<CellMetrics> cells;
  for (double sigma : config.benchmark_sigma) {
    for (double n_obs : config.benchmark_n_obs) {
      SimulationScenario scenario = scenario_from(config);
      scenario.n_obs = static_cast<int>(n_obs);
      scenario.sigma = sigma;
      const MetricsTable table = run_study(scenario, estimators, controls);
      cells.insert(cells.end(), table.cells.begin(), table.cells.end());
    }
  }

  // Tidy per-cell metrics, one row per (estimator, n_obs, sigma).
  std::string csv =
      "estimator,n_obs,sigma,replicates_requested,replicates_done,failures,"
      "rmse_beta0_x100,rmse_beta1_x100,rmse_alpha_x100,rmse_x_x100,"
      "coverage_beta0_pct,coverage_beta1_pct,coverage_alpha_pct,"
      "coverage_se_beta0_pct,coverage_se_beta1_pct,coverage_se_alpha_pct,"
      "mean_fit_seconds,low_confidence\n";
  for (const CellMetrics& cell : cells) {
    csv += cell.estimator;
    csv += ',' + std::to_string(cell.n_obs);
    csv += ',' + format_full(cell.sigma);
    csv += ',' + std::to_string(cell.replicates_requested);
    csv += ',' + std::to_string(cell.replicates_done);
    csv += ',' + std::to_string(cell.failures);
    for (int j = 0; j < 3; ++j) csv += ',' + format_full(cell.rmse_theta[j]);
    csv += ',' + format_full(cell.rmse_x);
    for (int j = 0; j < 3; ++j)
      csv += ',' + format_full(cell.coverage_pct[j]);
    for (int j = 0; j < 3; ++j)
      csv += ',' + format_full(cell.coverage_se_pct[j]);
    csv += ',' + format_full(cell.mean_fit_seconds);
    csv += cell.low_confidence ? ",true\n" : ",false\n";
  }
  write_text(out_dir / "metrics.csv", csv);

  // Human-readable table: one block per metric, rows grouped by sigma and
  // estimator, one column per n_obs. '!' marks cells whose failure rate
  // exceeds 20%; '*' marks coverage from fewer than 30 replicates.
  std::vector<double> sigmas = config.benchmark_sigma;
  std::vector<double> n_list = config.benchmark_n_obs;
  auto cell_at = [&](const std::string& name, double sigma,
                     double n) -> const CellMetrics* {
    for (const CellMetrics& c : cells)
      if (c.estimator == name && c.sigma == sigma &&
          c.n_obs == static_cast<int>(n))
        return &c;
    return nullptr;
  };
  std::vector<std::string> names;
  for (EstimatorKind kind : estimators) names.push_back(estimator_name(kind));

  std::string table;
  auto emit_block = [&](const std::string& title,
                        auto value_of, int decimals, bool star_low_reps) {
    table += title + "\n";
    table += "  sigma  estimator ";
    for (double n : n_list) {
      char head[24];
      std::snprintf(head, sizeof head, " %9s", ("N=" + std::to_string(
                        static_cast<int>(n))).c_str());
      table += head;
    }
    table += "\n";
    for (double sigma : sigmas) {
      for (const std::string& name : names) {
        char row[64];
        std::snprintf(row, sizeof row, "  %-6s %-10s", fixed(sigma, 2).c_str(),
                      name.c_str());
        table += row;
        for (double n : n_list) {
          const CellMetrics* c = cell_at(name, sigma, n);
          std::string value = c ? fixed(value_of(*c), decimals) : "-";
          if (c && c->low_confidence) value += '!';
          if (c && star_low_reps && c->replicates_done < 30) value += '*';
          char entry[24];
          std::snprintf(entry, sizeof entry, " %9s", value.c_str());
          table += entry;
        }
        table += "\n";
      }
    }
    table += "\n";
  };

  const char* theta_names[3] = {"beta0", "beta1", "alpha"};
  for (int j = 0; j < 3; ++j)
    emit_block(std::string("100 x RMSE(") + theta_names[j] + ")",
               [j](const CellMetrics& c) { return c.rmse_theta[j]; }, 2,
               false);
  emit_block("100 x RMSE(x)",
             [](const CellMetrics& c) { return c.rmse_x; }, 2, false);
  for (int j = 0; j < 3; ++j)
    emit_block(std::string("95% CI coverage of ") + theta_names[j] + " (%)",
               [j](const CellMetrics& c) { return c.coverage_pct[j]; }, 1,
               true);
  emit_block("mean fit time (s)",
             [](const CellMetrics& c) { return c.mean_fit_seconds; }, 3,
             false);
  write_text(out_dir / "table.txt", table);
}

void cmd_surface(const RunConfig& config,
                 const std::optional<std::string>& data_path) {
  const fs::path out_dir = ensure_out_dir(config);
  TimeSeries data;
  if (data_path) {
    data = read_time_series(*data_path);
    check_domain(data, config, *data_path);
  } else {
    const SimulationScenario scenario = scenario_from(config);
    const ReplicateData rep =
        generate_data(scenario, config.surface_replicate);
    data.times = Eigen::Map<const Eigen::VectorXd>(
        rep.times.data(), static_cast<int>(rep.times.size()));
    data.values = rep.y;
  }
  const FitProblem prob = problem_from(config, data);

  auto grid_value = [](double lo, double hi, int count, int i) {
    if (count == 1) return lo;
    return lo + (hi - lo) * static_cast<double>(i) /
                    static_cast<double>(count - 1);
  };

  const int n0 = config.surface_beta0_count;
  const int n1 = config.surface_beta1_count;
  const int sheets = static_cast<int>(config.surface_rho.size());
  Eigen::MatrixXd rows(sheets * n0 * n1, 4);
  Eigen::MatrixXd argmin(sheets, 4);
  int r = 0;
  for (int s = 0; s < sheets; ++s) {
    const double rho = config.surface_rho[s];
    double best = std::numeric_limits<double>::infinity();
    int best_row = -1;
    for (int i = 0; i < n0; ++i) {
      const double b0 = grid_value(config.surface_beta0_min,
                                   config.surface_beta0_max, n0, i);
      for (int j = 0; j < n1; ++j) {
        const double b1 = grid_value(config.surface_beta1_min,
                                     config.surface_beta1_max, n1, j);
        Eigen::VectorXd theta(3);
        theta << b0, b1, config.surface_alpha;
        const double h = H_value(theta, rho, prob);
        rows.row(r) << rho, b0, b1, h;
        if (h < best) {
          best = h;
          best_row = r;
        }
        ++r;
      }
    }
    argmin.row(s) << rho, rows(best_row, 1), rows(best_row, 2), best;
  }
  write_csv((out_dir / "surface.csv").string(), {"rho", "beta0", "beta1", "h"},
            rows);
  write_csv((out_dir / "argmin.csv").string(), {"rho", "beta0", "beta1", "h"},
            argmin);
}

}  // namespace data2ld
