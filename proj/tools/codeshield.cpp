// Copyright (c) 2026, the codeshield authors
// SPDX-License-Identifier: Apache-2.0
//
// codeshield <command> --config PATH [--set key=value]... [--workdir PATH]
//            [--seed INT] [--jobs N] [input]

#include <omp.h>

#include <iostream>
#include <map>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "codeshield/kernels.hpp"
#include "codeshield/pipeline.hpp"

namespace {

using codeshield::Pipeline;
using nlohmann::json;

const std::vector<std::string> kCommands = {
    "ingest", "poison", "train-victim", "train-embedders", "embed",  "train-detector", "detect",
    "onion",  "evaluate", "loao",       "ablate",          "full",   "validate"};

void summary_line(const json& j) { std::cout << j.dump() << std::endl; }

json dispatch(Pipeline& p, const std::string& command, const std::string& input) {
  if (command == "ingest") return p.ingest();
  if (command == "poison") return p.poison();
  if (command == "train-victim") return p.train_victim();
  if (command == "train-embedders") return p.train_embedders();
  if (command == "embed") return p.embed();
  if (command == "train-detector") return p.train_detector();
  if (command == "onion") return p.onion();
  if (command == "evaluate") return p.evaluate();
  if (command == "loao") return p.loao();
  if (command == "ablate") return p.ablate();
  if (command == "full") return p.full();
  return p.detect(input);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Poison Java method corpora and detect poisoned samples."};
  std::string command, config_path, workdir, input;
  std::vector<std::string> overrides;
  std::uint64_t seed = 0;
  int jobs = 0;
  app.add_option("command", command, "Pipeline command")
      ->required()
      ->check(CLI::IsMember(kCommands));
  app.add_option("input", input, "Method file for detect (.java, or JSON with a \"source\" field)");
  app.add_option("--config", config_path, "Configuration file (JSON)")->required();
  app.add_option("--set", overrides, "Override a key, e.g. --set detector.max_epochs=8")
      ->allow_extra_args(false);
  auto* workdir_opt = app.add_option("--workdir", workdir, "Run directory (paths.workdir)");
  auto* seed_opt = app.add_option("--seed", seed, "Run seed");
  app.add_option("--jobs", jobs, "Maximum worker threads")->check(CLI::PositiveNumber);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << app.help() << "\nerror: " << e.what() << "\n";
    summary_line({{"status", "usage_error"}, {"message", e.what()}});
    return 1;
  }
  if (command == "detect" && input.empty()) {
    std::cerr << "error: detect needs an input file\n";
    summary_line({{"status", "usage_error"}, {"message", "detect needs an input file"}});
    return 1;
  }
  if (*workdir_opt) overrides.push_back("paths.workdir=" + json(workdir).dump());
  if (*seed_opt) overrides.push_back("seed=" + std::to_string(seed));
  if (jobs > 0) {
    omp_set_num_threads(jobs);
    codeshield::kernels::set_max_threads(jobs);
  }

  if (command == "validate") {
    const auto diags = codeshield::validate_config(config_path, overrides);
    for (const auto& d : diags) std::cout << "  " << d << "\n";
    summary_line({{"status", diags.empty() ? "ok" : "config_error"},
                  {"command", command},
                  {"diagnostics", diags}});
    return diags.empty() ? 0 : 1;
  }

  codeshield::RunConfig config;
  try {
    config = codeshield::load_run_config(config_path, overrides);
  } catch (const codeshield::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    summary_line({{"status", "config_error"}, {"command", command}, {"message", e.what()}});
    return 1;
  }

  try {
    Pipeline pipeline(config);
    json result = dispatch(pipeline, command, input);
    if (command == "detect") {
      summary_line(result);
    } else {
      summary_line({{"status", "ok"}, {"command", command},
                    {"workdir", config.workdir.string()}, {"result", result}});
    }
    return 0;
  } catch (const codeshield::StageError& e) {
    std::cerr << "error in stage " << e.stage() << ": " << e.what() << "\n";
    summary_line({{"status", "pipeline_error"}, {"command", command},
                  {"stage", e.stage()}, {"message", e.what()}});
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    summary_line({{"status", "pipeline_error"}, {"command", command},
                  {"stage", command}, {"message", e.what()}});
    return 2;
  }
}
