#include <cstdio>
#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "upcs/errors.hpp"
#include "upcs/pipeline.hpp"

namespace {

// Exit codes: 0 success, 2 validation error, 3 dependency error,
// 4 provider error.
enum ExitCode : int {
  kOk = 0,
  kFailure = 1,
  kValidation = 2,
  kDependency = 3,
  kProvider = 4,
};

struct Options {
  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> backend;  // mock | remote, overrides every provider
  bool force = false;
};

void apply_overrides(upcs::PipelineConfig& config, const Options& options) {
  if (options.seed) config.seed = *options.seed;
  if (options.backend == "mock") {
    config.generator.backend = "mock";
    config.embedder.backend = "hash";
    config.reviewer.backend = "mock";
    config.scorer.backend = "lexicon";
  } else if (options.backend == "remote") {
    config.generator.backend = "remote";
    config.embedder.backend = "remote";
    config.reviewer.backend = "remote";
    config.scorer.backend = "remote";
  }
}

int run_command(const std::string& command, const Options& options) {
  upcs::PipelineConfig config = upcs::validate_config(options.config_path);
  apply_overrides(config, options);

  if (command == "validate") {
    std::cout << config.to_json().dump(2) << "\n";
    return kOk;
  }
  if (command == "run-all") {
    const auto report = upcs::run_all(config, options.force);
    for (std::size_t i = 0; i < report.stages.size(); ++i) {
      std::fprintf(stderr, "stage %-8s  %8.1f ms\n",
                   std::string(upcs::stage_label(report.stages[i].stage)).c_str(),
                   report.stage_ms[i]);
    }
    std::cout << "wrote " << config.io.work_dir << "/pipeline_report.json\n";
    return kOk;
  }
  const auto stage = upcs::stage_from_label(command);
  if (!stage) throw upcs::ValidationError("unknown command: " + command);
  const auto result = upcs::run_stage(*stage, config, options.force);
  for (const auto& artifact : result.artifacts) {
    std::cout << "wrote " << artifact.string() << "\n";
  }
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"UPCS persona pipeline: builds debiased and unbiased persona sets"};
  app.require_subcommand(1);

  Options options;
  std::string command;
  for (const char* name : {"generate", "debias", "fill", "resample", "evaluate",
                           "run-all", "validate"}) {
    auto* sub = app.add_subcommand(name);
    sub->add_option("--config", options.config_path, "pipeline config file")
        ->required();
    sub->add_option("--seed", options.seed, "override the config seed");
    sub->add_option("--backend", options.backend,
                    "override every provider backend (mock|remote)")
        ->check(CLI::IsMember({"mock", "remote"}));
    sub->add_flag("--force", options.force, "overwrite existing stage outputs");
    sub->callback([&command, name] { command = name; });
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? kOk : kValidation;
  }

  try {
    return run_command(command, options);
  } catch (const upcs::ValidationError& e) {
    for (const auto& violation : e.violations()) {
      std::cerr << "config error: " << violation << "\n";
    }
    return kValidation;
  } catch (const upcs::DependencyError& e) {
    std::cerr << "dependency error: " << e.what() << "\n";
    return kDependency;
  } catch (const upcs::ProviderError& e) {
    std::cerr << "provider error: " << e.what() << "\n";
    return kProvider;
  } catch (const upcs::GenerationError& e) {
    std::cerr << "provider error: " << e.what() << "\n";
    if (!e.raw_text().empty()) std::cerr << "raw completion: " << e.raw_text() << "\n";
    return kProvider;
  } catch (const upcs::ParseError& e) {
    std::cerr << "input error: " << e.what() << "\n";
    return kValidation;
  } catch (const upcs::IntegrityError& e) {
    std::cerr << "input error: " << e.what() << "\n";
    return kValidation;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kFailure;
  }
}
