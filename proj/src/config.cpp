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

#include "data2ld/config.hpp"

#include <cstdlib>
#include <fstream>
#include <functional>
#include <set>
#include <sstream>
#include <utility>

#include "data2ld/csv.hpp"
#include "data2ld/errors.hpp"

namespace data2ld {
namespace {

std::string trimmed(const std::string& s) {
  std::size_t b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  std::size_t e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

[[noreturn]] void fail(const std::string& where, const std::string& what) {
  throw ConfigError(where + ": " + what);
}

double to_double(const std::string& v, const std::string& where) {
  const char* begin = v.c_str();
  char* end = nullptr;
  double x = std::strtod(begin, &end);
  if (v.empty() || end != begin + v.size())
    fail(where, "expected a number, got \"" + v + "\"");
  return x;
}

void parse_value(const std::string& v, const std::string& where, double& out) {
  out = to_double(v, where);
}

void parse_value(const std::string& v, const std::string& where, int& out) {
  double x = to_double(v, where);
  out = static_cast<int>(x);
  if (static_cast<double>(out) != x)
    fail(where, "expected an integer, got \"" + v + "\"");
}

void parse_value(const std::string& v, const std::string& where, bool& out) {
  if (v == "true") {
    out = true;
  } else if (v == "false") {
    out = false;
  } else {
    fail(where, "expected true or false, got \"" + v + "\"");
  }
}

void parse_value(const std::string& v, const std::string& where,
                 std::uint64_t& out) {
  const char* begin = v.c_str();
  char* end = nullptr;
  out = std::strtoull(begin, &end, 10);
  if (v.empty() || end != begin + v.size() || v[0] == '-')
    fail(where, "expected a non-negative integer, got \"" + v + "\"");
}

void parse_value(const std::string& v, const std::string& where,
                 std::string& out) {
  if (v.empty()) fail(where, "expected a value");
  out = v;
}

void parse_value(const std::string& v, const std::string& where,
                 std::vector<double>& out) {
  out.clear();
  std::stringstream ss(v);
  std::string field;
  while (std::getline(ss, field, ','))
    out.push_back(to_double(trimmed(field), where));
  if (out.empty()) fail(where, "expected a comma-separated list of numbers");
}

void parse_value(const std::string& v, const std::string& where,
                 std::optional<double>& out) {
  out = to_double(v, where);
}

std::string print_value(double x) { return format_full(x); }
std::string print_value(int x) { return std::to_string(x); }
std::string print_value(bool x) { return x ? "true" : "false"; }
std::string print_value(std::uint64_t x) { return std::to_string(x); }
std::string print_value(const std::string& x) { return x; }
std::string print_value(const std::vector<double>& xs) {
  std::string out;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    if (i) out += ',';
    out += format_full(xs[i]);
  }
  return out;
}

// One schema row: a (section, key) name bound to a RunConfig field.
struct KeyDef {
  std::string section;
  std::string key;
  std::function<void(RunConfig&, const std::string&, const std::string&)> set;
  // Returns the serialized value, or nullopt when the field is unset.
  std::function<std::optional<std::string>(const RunConfig&)> get;
};

template <class T>
KeyDef def(const char* section, const char* key, T RunConfig::*member) {
  KeyDef d;
  d.section = section;
  d.key = key;
  d.set = [member](RunConfig& c, const std::string& v,
                   const std::string& where) { parse_value(v, where, c.*member); };
  d.get = [member](const RunConfig& c) -> std::optional<std::string> {
    return print_value(c.*member);
  };
  return d;
}

KeyDef def(const char* section, const char* key,
           std::optional<double> RunConfig::*member) {
  KeyDef d;
  d.section = section;
  d.key = key;
  d.set = [member](RunConfig& c, const std::string& v,
                   const std::string& where) { parse_value(v, where, c.*member); };
  d.get = [member](const RunConfig& c) -> std::optional<std::string> {
    if (!(c.*member)) return std::nullopt;
    return print_value(*(c.*member));
  };
  return d;
}

const std::vector<KeyDef>& schema() {
  static const std::vector<KeyDef> defs = {
      def("model", "impact_time", &RunConfig::model_impact_time),
      def("model", "pulse_width", &RunConfig::model_pulse_width),
      def("model", "domain_start", &RunConfig::model_domain_start),
      def("model", "domain_end", &RunConfig::model_domain_end),
      def("basis", "order", &RunConfig::basis_order),
      def("basis", "recipe", &RunConfig::basis_recipe),
      def("basis", "post_pulse_knots", &RunConfig::basis_post_pulse_knots),
      def("quadrature", "points", &RunConfig::quadrature_points),
      def("ladder", "gamma0", &RunConfig::ladder_gamma0),
      def("ladder", "dgamma_init", &RunConfig::ladder_dgamma_init),
      def("ladder", "dgamma_floor", &RunConfig::ladder_dgamma_floor),
      def("ladder", "eps0", &RunConfig::ladder_eps0),
      def("ladder", "eps1", &RunConfig::ladder_eps1),
      def("ladder", "rho_max", &RunConfig::ladder_rho_max),
      def("ladder", "max_rungs", &RunConfig::ladder_max_rungs),
      def("ladder", "per_rung_intervals",
          &RunConfig::ladder_per_rung_intervals),
      def("outer", "grad_tol", &RunConfig::outer_grad_tol),
      def("outer", "step_tol", &RunConfig::outer_step_tol),
      def("outer", "max_iters", &RunConfig::outer_max_iters),
      def("outer", "damping_init", &RunConfig::outer_damping_init),
      def("outer", "damping_decrease", &RunConfig::outer_damping_decrease),
      def("outer", "damping_increase", &RunConfig::outer_damping_increase),
      def("outer", "damping_max", &RunConfig::outer_damping_max),
      def("outer", "max_halvings", &RunConfig::outer_max_halvings),
      def("estimators", "data2ld", &RunConfig::estimators_data2ld),
      def("estimators", "nls", &RunConfig::estimators_nls),
      def("estimators", "sa", &RunConfig::estimators_sa),
      def("estimators", "theta0", &RunConfig::estimators_theta0),
      def("scenario", "n_obs", &RunConfig::scenario_n_obs),
      def("scenario", "sigma", &RunConfig::scenario_sigma),
      def("scenario", "replicates", &RunConfig::scenario_replicates),
      def("scenario", "base_seed", &RunConfig::scenario_base_seed),
      def("scenario", "reference_resolution",
          &RunConfig::scenario_reference_resolution),
      def("scenario", "true_theta", &RunConfig::scenario_true_theta),
      def("nls", "max_iters", &RunConfig::nls_max_iters),
      def("nls", "grad_tol", &RunConfig::nls_grad_tol),
      def("nls", "step_tol", &RunConfig::nls_step_tol),
      def("nls", "fd_rel_step", &RunConfig::nls_fd_rel_step),
      def("nls", "max_halvings", &RunConfig::nls_max_halvings),
      def("nls", "damping_init", &RunConfig::nls_damping_init),
      def("nls", "damping_decrease", &RunConfig::nls_damping_decrease),
      def("nls", "damping_increase", &RunConfig::nls_damping_increase),
      def("nls", "damping_max", &RunConfig::nls_damping_max),
      def("nls", "max_step", &RunConfig::nls_max_step),
      def("sa", "t0", &RunConfig::sa_t0),
      def("sa", "max_iters", &RunConfig::sa_max_iters),
      def("sa", "seed", &RunConfig::sa_seed),
      def("sa", "rule", &RunConfig::sa_rule),
      def("sa", "proposal_scale_factor",
          &RunConfig::sa_proposal_scale_factor),
      def("sa", "adapt_interval", &RunConfig::sa_adapt_interval),
      def("sa", "target_acceptance", &RunConfig::sa_target_acceptance),
      def("sa", "max_step", &RunConfig::sa_max_step),
      def("sa", "polish", &RunConfig::sa_polish),
      def("sa", "polish_iters", &RunConfig::sa_polish_iters),
      def("benchmark", "threads", &RunConfig::benchmark_threads),
      def("benchmark", "n_obs", &RunConfig::benchmark_n_obs),
      def("benchmark", "sigma", &RunConfig::benchmark_sigma),
      def("surface", "rho", &RunConfig::surface_rho),
      def("surface", "beta0_min", &RunConfig::surface_beta0_min),
      def("surface", "beta0_max", &RunConfig::surface_beta0_max),
      def("surface", "beta0_count", &RunConfig::surface_beta0_count),
      def("surface", "beta1_min", &RunConfig::surface_beta1_min),
      def("surface", "beta1_max", &RunConfig::surface_beta1_max),
      def("surface", "beta1_count", &RunConfig::surface_beta1_count),
      def("surface", "alpha", &RunConfig::surface_alpha),
      def("surface", "replicate", &RunConfig::surface_replicate),
      def("output", "dir", &RunConfig::output_dir),
  };
  return defs;
}

bool known_section(const std::string& name) {
  for (const KeyDef& d : schema())
    if (d.section == name) return true;
  return false;
}

const KeyDef* find_key(const std::string& section, const std::string& key) {
  for (const KeyDef& d : schema())
    if (d.section == section && d.key == key) return &d;
  return nullptr;
}

void require(bool ok, const std::string& what) {
  if (!ok) throw ConfigError(what);
}

}  // namespace

RunConfig parse_config(const std::string& text) {
  RunConfig config;
  std::stringstream in(text);
  std::string raw;
  std::string section;
  std::set<std::pair<std::string, std::string>> seen;
  int line_no = 0;
  while (std::getline(in, raw)) {
    ++line_no;
    const std::string where = "line " + std::to_string(line_no);
    std::string line = raw;
    const std::size_t hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    line = trimmed(line);
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line.back() != ']') fail(where, "unterminated section header");
      section = trimmed(line.substr(1, line.size() - 2));
      if (!known_section(section))
        fail(where, "unknown section [" + section + "]");
      continue;
    }
    const std::size_t eq = line.find('=');
    if (eq == std::string::npos)
      fail(where, "expected key = value, got \"" + line + "\"");
    const std::string key = trimmed(line.substr(0, eq));
    const std::string value = trimmed(line.substr(eq + 1));
    if (section.empty()) fail(where, "key \"" + key + "\" outside a section");
    const KeyDef* def = find_key(section, key);
    if (!def)
      fail(where, "unknown key \"" + key + "\" in section [" + section + "]");
    if (!seen.insert({section, key}).second)
      fail(where, "duplicate key \"" + key + "\" in section [" + section + "]");
    def->set(config, value, where);
  }
  validate_config(config);
  return config;
}

RunConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file " + path);
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_config(buf.str());
}

std::string serialize_config(const RunConfig& config) {
  std::string out;
  std::string section;
  for (const KeyDef& d : schema()) {
    const std::optional<std::string> value = d.get(config);
    if (!value) continue;
    if (d.section != section) {
      if (!out.empty()) out += '\n';
      out += "[" + d.section + "]\n";
      section = d.section;
    }
    out += d.key + " = " + *value + "\n";
  }
  return out;
}

void validate_config(const RunConfig& c) {
  require(c.model_pulse_width > 0, "model.pulse_width must be positive");
  require(c.model_domain_end > c.model_domain_start,
          "model.domain_end must exceed model.domain_start");
  require(c.model_impact_time >= c.model_domain_start &&
              c.model_impact_time + c.model_pulse_width <= c.model_domain_end,
          "the forcing pulse must lie inside the domain");
  require(c.basis_order >= 4, "basis.order must be at least 4");
  require(c.basis_recipe == "pulse" || c.basis_recipe == "interpolating",
          "basis.recipe must be pulse or interpolating");
  require(c.basis_post_pulse_knots >= 2,
          "basis.post_pulse_knots must be at least 2");
  require(c.quadrature_points >= 0, "quadrature.points must be non-negative");
  require(c.ladder_dgamma_init > 0, "ladder.dgamma_init must be positive");
  require(c.ladder_dgamma_floor > 0 &&
              c.ladder_dgamma_floor <= c.ladder_dgamma_init,
          "ladder.dgamma_floor must be in (0, dgamma_init]");
  require(c.ladder_eps0 > 0, "ladder.eps0 must be positive");
  require(c.ladder_eps1 > 0, "ladder.eps1 must be positive");
  if (c.ladder_rho_max)
    require(*c.ladder_rho_max > 0 && *c.ladder_rho_max < 1,
            "ladder.rho_max must be in (0, 1)");
  require(c.ladder_max_rungs >= 1, "ladder.max_rungs must be at least 1");
  require(c.outer_grad_tol > 0 && c.outer_step_tol > 0,
          "outer tolerances must be positive");
  require(c.outer_max_iters >= 1, "outer.max_iters must be at least 1");
  require(c.outer_damping_init > 0 && c.outer_damping_max > 0,
          "outer damping bounds must be positive");
  require(c.outer_damping_decrease > 0 && c.outer_damping_decrease < 1,
          "outer.damping_decrease must be in (0, 1)");
  require(c.outer_damping_increase > 1,
          "outer.damping_increase must exceed 1");
  require(c.outer_max_halvings >= 0,
          "outer.max_halvings must be non-negative");
  require(!c.estimators_theta0.empty(), "estimators.theta0 must be non-empty");
  require(c.scenario_n_obs >= 2, "scenario.n_obs must be at least 2");
  require(c.scenario_sigma >= 0, "scenario.sigma must be non-negative");
  require(c.scenario_replicates >= 1,
          "scenario.replicates must be at least 1");
  require(c.scenario_reference_resolution >= 2,
          "scenario.reference_resolution must be at least 2");
  require(c.scenario_true_theta.size() == 3,
          "scenario.true_theta must have 3 entries");
  require(c.nls_max_iters >= 1, "nls.max_iters must be at least 1");
  require(c.nls_grad_tol > 0 && c.nls_step_tol > 0 && c.nls_fd_rel_step > 0,
          "nls tolerances must be positive");
  require(c.nls_max_halvings >= 0, "nls.max_halvings must be non-negative");
  require(c.nls_damping_init > 0 && c.nls_damping_max > 0,
          "nls damping bounds must be positive");
  require(c.nls_damping_decrease > 0 && c.nls_damping_decrease < 1,
          "nls.damping_decrease must be in (0, 1)");
  require(c.nls_damping_increase > 1, "nls.damping_increase must exceed 1");
  require(c.nls_max_step > 0, "nls.max_step must be positive");
  require(c.sa_t0 > 0, "sa.t0 must be positive");
  require(c.sa_max_iters >= 1, "sa.max_iters must be at least 1");
  require(c.sa_rule == "barker" || c.sa_rule == "metropolis",
          "sa.rule must be barker or metropolis");
  require(c.sa_proposal_scale_factor > 0,
          "sa.proposal_scale_factor must be positive");
  require(c.sa_adapt_interval >= 1, "sa.adapt_interval must be at least 1");
  require(c.sa_target_acceptance > 0 && c.sa_target_acceptance < 1,
          "sa.target_acceptance must be in (0, 1)");
  require(c.sa_max_step > 0, "sa.max_step must be positive");
  require(c.sa_polish_iters >= 0, "sa.polish_iters must be non-negative");
  require(c.benchmark_threads >= 1, "benchmark.threads must be at least 1");
  require(!c.benchmark_n_obs.empty() && !c.benchmark_sigma.empty(),
          "benchmark.n_obs and benchmark.sigma must be non-empty");
  for (double n : c.benchmark_n_obs)
    require(n >= 2 && n == static_cast<int>(n),
            "benchmark.n_obs entries must be integers of at least 2");
  for (double s : c.benchmark_sigma)
    require(s >= 0, "benchmark.sigma entries must be non-negative");
  require(!c.surface_rho.empty(), "surface.rho must be non-empty");
  for (double r : c.surface_rho)
    require(r > 0 && r < 1, "surface.rho entries must be in (0, 1)");
  require(c.surface_beta0_count >= 1 && c.surface_beta1_count >= 1,
          "surface grid counts must be at least 1");
  require(c.surface_beta0_max >= c.surface_beta0_min &&
              c.surface_beta1_max >= c.surface_beta1_min,
          "surface grid bounds must be ordered");
  require(c.surface_replicate >= 0,
          "surface.replicate must be non-negative");
  require(!c.output_dir.empty(), "output.dir must be non-empty");
}

SimulationScenario scenario_from(const RunConfig& c) {
  SimulationScenario s;
  s.true_theta = Eigen::Map<const Eigen::VectorXd>(
      c.scenario_true_theta.data(),
      static_cast<int>(c.scenario_true_theta.size()));
  s.domain_start = c.model_domain_start;
  s.domain_end = c.model_domain_end;
  s.impact_time = c.model_impact_time;
  s.pulse_width = c.model_pulse_width;
  s.n_obs = c.scenario_n_obs;
  s.sigma = c.scenario_sigma;
  s.replicates = c.scenario_replicates;
  s.base_seed = c.scenario_base_seed;
  s.reference_resolution = c.scenario_reference_resolution;
  return s;
}

Eigen::VectorXd theta0_from(const RunConfig& c, int theta_dim) {
  const std::vector<double>& t0 = c.estimators_theta0;
  if (t0.size() == 1)
    return Eigen::VectorXd::Constant(theta_dim, t0.front());
  if (static_cast<int>(t0.size()) == theta_dim)
    return Eigen::Map<const Eigen::VectorXd>(t0.data(), theta_dim);
  throw ConfigError("estimators.theta0 must have 1 or " +
                    std::to_string(theta_dim) + " entries");
}

LadderControls ladder_from(const RunConfig& c, double default_rho_max,
                           int theta_dim) {
  LadderControls controls;
  controls.gamma0 = c.ladder_gamma0;
  controls.theta0 = theta0_from(c, theta_dim);
  controls.dgamma_init = c.ladder_dgamma_init;
  controls.dgamma_floor = c.ladder_dgamma_floor;
  controls.eps0 = c.ladder_eps0;
  controls.eps1 = c.ladder_eps1;
  controls.rho_max = c.ladder_rho_max.value_or(default_rho_max);
  controls.max_rungs = c.ladder_max_rungs;
  controls.per_rung_intervals = c.ladder_per_rung_intervals;
  controls.outer = outer_from(c);
  return controls;
}

OuterControls outer_from(const RunConfig& c) {
  OuterControls controls;
  controls.grad_tol = c.outer_grad_tol;
  controls.step_tol = c.outer_step_tol;
  controls.max_iters = c.outer_max_iters;
  controls.damping_init = c.outer_damping_init;
  controls.damping_decrease = c.outer_damping_decrease;
  controls.damping_increase = c.outer_damping_increase;
  controls.damping_max = c.outer_damping_max;
  controls.max_halvings = c.outer_max_halvings;
  return controls;
}

NlsControls nls_from(const RunConfig& c) {
  NlsControls controls;
  controls.max_iters = c.nls_max_iters;
  controls.grad_tol = c.nls_grad_tol;
  controls.step_tol = c.nls_step_tol;
  controls.fd_rel_step = c.nls_fd_rel_step;
  controls.max_halvings = c.nls_max_halvings;
  controls.damping_init = c.nls_damping_init;
  controls.damping_decrease = c.nls_damping_decrease;
  controls.damping_increase = c.nls_damping_increase;
  controls.damping_max = c.nls_damping_max;
  controls.max_step = c.nls_max_step;
  return controls;
}

AnnealerConfig annealer_from(const RunConfig& c) {
  AnnealerConfig config;
  config.t0 = c.sa_t0;
  config.max_iters = c.sa_max_iters;
  config.seed = c.sa_seed;
  config.rule = c.sa_rule == "metropolis" ? AnnealerConfig::Rule::kMetropolis
                                          : AnnealerConfig::Rule::kBarker;
  config.proposal_scale_factor = c.sa_proposal_scale_factor;
  config.adapt_interval = c.sa_adapt_interval;
  config.target_acceptance = c.sa_target_acceptance;
  config.max_step = c.sa_max_step;
  config.polish = c.sa_polish;
  config.polish_iters = c.sa_polish_iters;
  return config;
}

StudyControls study_from(const RunConfig& c, int theta_dim) {
  StudyControls controls;
  controls.ladder =
      ladder_from(c, study_ladder_defaults().rho_max, theta_dim);
  controls.nls = nls_from(c);
  controls.sa = annealer_from(c);
  controls.theta0 = theta0_from(c, theta_dim);
  controls.threads = c.benchmark_threads;
  controls.interpolating = c.basis_recipe == "interpolating";
  controls.basis_order = c.basis_order;
  controls.post_pulse_knots = c.basis_post_pulse_knots;
  controls.quad_points = c.quadrature_points;
  return controls;
}

}  // namespace data2ld
