// Copyright 2026 The speedobs Authors
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

#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "speedobs/cli.hpp"

int main(int argc, char** argv) {
  namespace cli = speedobs::cli;
  CLI::App app{"Momenta observers for mechanical systems: run, check, sweep"};
  app.require_subcommand(1);

  std::string config;
  std::string out_dir;
  std::string param;
  std::string values;

  auto* run = app.add_subcommand("run", "integrate a scenario and write CSV/metrics");
  run->add_option("config", config, "configuration file")->required();
  run->add_option("-o,--output", out_dir,
                  std::string("output directory (default: [output] directory, $") +
                      cli::kOutputDirEnv + ", ./" + cli::kFallbackOutputDir + ")");

  auto* check = app.add_subcommand("check", "report the structural assumption checks");
  check->add_option("config", config, "configuration file")->required();

  auto* sw = app.add_subcommand("sweep", "run one scenario per parameter value");
  sw->add_option("config", config, "configuration file")->required();
  sw->add_option("--param", param, "lambda, psi3, q0_<i> or mom0_<i>")->required();
  sw->add_option("--values", values, "comma-separated values")->required();
  sw->add_option("-o,--output", out_dir, "output directory");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : cli::kExitConfig;
  }

  const auto dir = out_dir.empty() ? std::nullopt : std::optional<std::string>(out_dir);
  if (*run) return cli::cmd_run(config, dir, std::cout, std::cerr);
  if (*check) return cli::cmd_check(config, std::cout, std::cerr);
  return cli::cmd_sweep(config, param, values, dir, std::cout, std::cerr);
}
