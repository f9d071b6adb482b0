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

#include <cstdio>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "data2ld/commands.hpp"
#include "data2ld/errors.hpp"

namespace {

// Exit codes: 0 success, 2 configuration, 3 data, 4 numerical failure.
constexpr int kConfigExit = 2;
constexpr int kDataExit = 3;
constexpr int kNumericalExit = 4;

struct Flags {
  std::optional<std::string> config_path;
  std::optional<std::string> data_path;
  std::optional<std::string> out_dir;
  std::optional<std::uint64_t> seed;
  std::optional<int> threads;
};

void add_common_flags(CLI::App* cmd, Flags& flags) {
  cmd->add_option_function<std::string>(
      "--config", [&](const std::string& v) { flags.config_path = v; },
      "Config file (sectioned key = value; defaults apply when omitted)");
  cmd->add_option_function<std::string>(
      "--out", [&](const std::string& v) { flags.out_dir = v; },
      "Output directory (default: the config's output.dir)");
  cmd->add_option_function<std::uint64_t>(
      "--seed", [&](std::uint64_t v) { flags.seed = v; },
      "Override scenario.base_seed");
  cmd->add_option_function<int>(
      "--threads", [&](int v) { flags.threads = v; },
      "Override benchmark.threads");
}

data2ld::RunConfig resolve_config(const Flags& flags) {
  data2ld::RunConfig config;
  if (flags.config_path) config = data2ld::load_config(*flags.config_path);
  if (flags.out_dir) config.output_dir = *flags.out_dir;
  if (flags.seed) config.scenario_base_seed = *flags.seed;
  if (flags.threads) config.benchmark_threads = *flags.threads;
  data2ld::validate_config(config);
  return config;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{
      "Parameter and solution estimation for linear differential equations "
      "from noisy observations"};
  app.require_subcommand(1);

  Flags flags;

  CLI::App* fit = app.add_subcommand(
      "fit", "Estimate parameters and fitted curve from a t,y CSV");
  add_common_flags(fit, flags);
  fit->add_option_function<std::string>(
      "--data", [&](const std::string& v) { flags.data_path = v; },
      "Observation CSV with header t,y (required)");

  CLI::App* simulate = app.add_subcommand(
      "simulate", "Write simulated replicate CSVs and the truth curve");
  add_common_flags(simulate, flags);

  CLI::App* benchmark = app.add_subcommand(
      "benchmark", "Run the replicate study and write accuracy tables");
  add_common_flags(benchmark, flags);

  CLI::App* surface = app.add_subcommand(
      "surface", "Dump the outer criterion on a parameter grid");
  add_common_flags(surface, flags);
  surface->add_option_function<std::string>(
      "--data", [&](const std::string& v) { flags.data_path = v; },
      "Observation CSV (default: the configured scenario replicate)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kConfigExit;
  }

  try {
    const data2ld::RunConfig config = resolve_config(flags);
    if (fit->parsed()) data2ld::cmd_fit(config, flags.data_path);
    if (simulate->parsed()) data2ld::cmd_simulate(config);
    if (benchmark->parsed()) data2ld::cmd_benchmark(config);
    if (surface->parsed()) data2ld::cmd_surface(config, flags.data_path);
  } catch (const data2ld::ConfigError& e) {
    std::fprintf(stderr, "config error: %s\n", e.what());
    return kConfigExit;
  } catch (const data2ld::DataError& e) {
    std::fprintf(stderr, "data error: %s\n", e.what());
    return kDataExit;
  } catch (const data2ld::NumericalError& e) {
    std::fprintf(stderr, "numerical error: %s\n", e.what());
    return kNumericalExit;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return 0;
}
