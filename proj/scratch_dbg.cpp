// Throwaway measurement probe; not part of the build.
#include <chrono>
#include <cstdio>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "data2ld/baselines.hpp"
#include "data2ld/inference.hpp"
#include "data2ld/inner_solver.hpp"
#include "data2ld/ladder.hpp"
#include "data2ld/model.hpp"
#include "data2ld/outer_optimizer.hpp"
#include "data2ld/simulation.hpp"

using namespace data2ld;

namespace {

FitProblem problem_for(const SimulationScenario& sc,
                       const ReplicateData& data) {
  const LinearODEModel model = sc.model();
  const BSplineBasis basis =
      pulse_basis({sc.domain_start, sc.domain_end}, sc.impact_time,
                  sc.pulse_width);
  return make_fit_problem(data.y, data.times, model, basis,
                          make_quadrature(basis));
}

void mode_reps() {
  SimulationScenario sc;
  const Eigen::VectorXd truth = sc.true_theta;
  for (int rep = 0; rep < 10; ++rep) {
    const ReplicateData data = generate_data(sc, rep);
    const FitProblem prob = problem_for(sc, data);
    LadderControls controls = study_ladder_defaults();
    controls.per_rung_intervals = false;
    const LadderTrace trace = run_ladder(prob, controls);
    const int n = static_cast<int>(trace.states.size());
    double tail = 0.0;
    for (int i = std::max(1, n - 3); i < n; ++i)
      tail = std::max(tail, (trace.states[i].theta - trace.states[i - 1].theta)
                                .cwiseAbs()
                                .maxCoeff());
    const InferenceReport rep_inf =
        build_inference(trace.theta_hat, trace.rho_hat, prob);
    std::printf(
        "rep %d conv %d rungs %2d rho %.6f df %.3f tail3 %.2e err*100 "
        "(%.4f, %.4f, %.4f)\n",
        rep, trace.converged ? 1 : 0, n, trace.rho_hat, rep_inf.df, tail,
        100.0 * std::abs(trace.theta_hat[0] - truth[0]),
        100.0 * std::abs(trace.theta_hat[1] - truth[1]),
        100.0 * std::abs(trace.theta_hat[2] - truth[2]));
  }
}

void mode_tail() {
  SimulationScenario sc;
  const Eigen::VectorXd truth = sc.true_theta;
  for (double cap : {0.99999, 0.999999}) {
    for (int rep = 0; rep < 5; ++rep) {
      const ReplicateData data = generate_data(sc, rep);
      const FitProblem prob = problem_for(sc, data);
      LadderControls controls = study_ladder_defaults();
      controls.rho_max = cap;
      controls.per_rung_intervals = false;
      const LadderTrace trace = run_ladder(prob, controls);
      const int n = static_cast<int>(trace.states.size());
      std::printf("cap %.6f rep %d rungs %2d rho %.7f err*100 (%.4f, %.4f, "
                  "%.4f) moves:",
                  cap, rep, n, trace.rho_hat,
                  100.0 * std::abs(trace.theta_hat[0] - truth[0]),
                  100.0 * std::abs(trace.theta_hat[1] - truth[1]),
                  100.0 * std::abs(trace.theta_hat[2] - truth[2]));
      for (int i = std::max(1, n - 6); i < n; ++i)
        std::printf(" %.1e", (trace.states[i].theta - trace.states[i - 1].theta)
                                 .cwiseAbs()
                                 .maxCoeff());
      const InferenceReport inf =
          build_inference(trace.theta_hat, trace.rho_hat, prob);
      std::printf(" df %.3f\n", inf.df);
    }
  }
}

void mode_trio(int reps) {
  SimulationScenario sc;
  sc.replicates = reps;
  StudyControls controls;
  const MetricsTable table = run_study(
      sc, {EstimatorKind::kData2LD, EstimatorKind::kNls, EstimatorKind::kSa},
      controls);
  for (const CellMetrics& c : table.cells)
    std::printf(
        "trio %-8s done %3d fail %d rmse*100 (%.4f, %.4f, %.4f) x %.4f "
        "mean_fit %.4fs\n",
        c.estimator.c_str(), c.replicates_done, c.failures, c.rmse_theta[0],
        c.rmse_theta[1], c.rmse_theta[2], c.rmse_x, c.mean_fit_seconds);
}

void mode_sa_cell() {
  SimulationScenario sc;
  sc.sigma = 0.01;
  sc.replicates = 100;
  StudyControls controls;
  const MetricsTable table = run_study(sc, {EstimatorKind::kSa}, controls);
  const CellMetrics& c = table.cells[0];
  std::printf(
      "sa cell sigma 0.01 done %d fail %d rmse*100 (%.4f, %.4f, %.4f) "
      "mean_fit %.3fs\n",
      c.replicates_done, c.failures, c.rmse_theta[0], c.rmse_theta[1],
      c.rmse_theta[2], c.mean_fit_seconds);
}

void mode_starts() {
  SimulationScenario sc;
  const ReplicateData data = generate_data(sc, 0);
  const FitProblem prob = problem_for(sc, data);
  RngStream rng(424242);
  for (double rho : {0.1, 0.3, 0.5}) {
    double lo = 1e300, hi = -1e300;
    int conv = 0;
    for (int s = 0; s < 20; ++s) {
      Eigen::VectorXd t0(3);
      for (int j = 0; j < 3; ++j) t0[j] = 2.0 * rng.uniform() - 1.0;
      const OuterResult res = minimize_H(t0, rho, prob);
      conv += res.converged;
      lo = std::min(lo, res.h);
      hi = std::max(hi, res.h);
    }
    std::printf("rho %.2f conv %d/20 h spread %.3e (lo %.10f)\n", rho, conv,
                hi - lo, lo);
  }
  int bad = 0;
  for (int s = 0; s < 100; ++s) {
    Eigen::VectorXd t0(3);
    for (int j = 0; j < 3; ++j) t0[j] = 2.0 * rng.uniform() - 1.0;
    const OuterResult res = minimize_H(t0, 0.3, prob);
    for (std::size_t i = 1; i < res.step_trace.size(); ++i)
      if (res.step_trace[i].second > res.step_trace[i - 1].second + 1e-12)
        ++bad;
  }
  std::printf("h-increase violations over 100 starts: %d\n", bad);
}

void mode_zero() {
  SimulationScenario sc;
  sc.sigma = 0.0;
  sc.replicates = 3;
  StudyControls controls;
  for (EstimatorKind kind :
       {EstimatorKind::kData2LD, EstimatorKind::kNls, EstimatorKind::kSa}) {
    const MetricsTable table = run_study(sc, {kind}, controls);
    const CellMetrics& c = table.cells[0];
    std::printf("zero %s done %d fail %d rmse*100 (%.2e, %.2e, %.2e) x %.2e\n",
                c.estimator.c_str(), c.replicates_done, c.failures,
                c.rmse_theta[0], c.rmse_theta[1], c.rmse_theta[2], c.rmse_x);
  }
}

void mode_study(int reps) {
  SimulationScenario sc;
  sc.replicates = reps;
  StudyControls controls;
  const auto t0 = std::chrono::steady_clock::now();
  const MetricsTable table = run_study(sc, {EstimatorKind::kData2LD}, controls);
  const double secs =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
          .count();
  const CellMetrics& c = table.cells[0];
  std::printf(
      "study %s reps %d done %d fail %d rmse*100 (%.4f, %.4f, %.4f) "
      "x %.4f cover (%.1f, %.1f, %.1f) mean_fit %.3fs wall %.1fs\n",
      c.estimator.c_str(), c.replicates_requested, c.replicates_done,
      c.failures, c.rmse_theta[0], c.rmse_theta[1], c.rmse_theta[2], c.rmse_x,
      c.coverage_pct[0], c.coverage_pct[1], c.coverage_pct[2],
      c.mean_fit_seconds, secs);
}

void mode_cov() {
  SimulationScenario sc;
  sc.sigma = 0.10;
  sc.replicates = 200;
  StudyControls controls;
  const auto t0 = std::chrono::steady_clock::now();
  const MetricsTable table = run_study(sc, {EstimatorKind::kData2LD}, controls);
  const double secs =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
          .count();
  const CellMetrics& c = table.cells[0];
  std::printf(
      "cov sigma 0.10 done %d fail %d cover beta0 %.1f +- %.1f "
      "(b1 %.1f, a %.1f) rmse*100 (%.3f, %.3f, %.3f) wall %.1fs\n",
      c.replicates_done, c.failures, c.coverage_pct[0], c.coverage_se_pct[0],
      c.coverage_pct[1], c.coverage_pct[2], c.rmse_theta[0], c.rmse_theta[1],
      c.rmse_theta[2], secs);
}

void mode_surf() {
  SimulationScenario sc;
  for (int rep = 0; rep < 3; ++rep) {
    const ReplicateData data = generate_data(sc, rep);
    const FitProblem prob = problem_for(sc, data);
    for (double rho : {0.99, 0.5}) {
      double best = 1e300;
      double b0_best = 0.0, b1_best = 0.0;
      for (int i = 0; i < 41; ++i) {
        for (int j = 0; j < 41; ++j) {
          const double b0 = -0.55 + 0.025 * i;
          const double b1 = -0.65 + 0.025 * j;
          Eigen::VectorXd theta(3);
          theta << b0, b1, 0.39;
          const double h = H_value(theta, rho, prob);
          if (h < best) {
            best = h;
            b0_best = b0;
            b1_best = b1;
          }
        }
      }
      std::printf("surf rep %d rho %.2f argmin (%.3f, %.3f) H %.6f\n", rep,
                  rho, b0_best, b1_best, best);
    }
  }
}

}  // namespace

int main(int argc, char** argv) {
  const std::string mode = argc > 1 ? argv[1] : "reps";
  if (mode == "reps") mode_reps();
  if (mode == "tail") mode_tail();
  if (mode == "zero") mode_zero();
  if (mode == "study") mode_study(argc > 2 ? std::atoi(argv[2]) : 100);
  if (mode == "cov") mode_cov();
  if (mode == "surf") mode_surf();
  if (mode == "trio") mode_trio(argc > 2 ? std::atoi(argv[2]) : 100);
  if (mode == "sacell") mode_sa_cell();
  return 0;
}
