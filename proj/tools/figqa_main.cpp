#include <cstdlib>
#include <iostream>
#include <memory>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "figqa/errors.hpp"
#include "figqa/mock_backend.hpp"
#include "figqa/pipeline.hpp"
#include "figqa/run_config.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitConfig = 2;
constexpr int kExitInput = 3;
constexpr int kExitAuth = 4;
constexpr int kExitUnavailable = 5;

std::optional<figqa::Stage> parse_stage(const std::string& name) {
  for (figqa::Stage stage : figqa::kBatchStages) {
    if (figqa::to_string(stage) == name) return stage;
  }
  return std::nullopt;
}

void print_report(const figqa::StageReport& report) {
  std::cout << figqa::to_string(report.stage) << " batch " << report.batch << ": "
            << (report.skipped ? "already complete" : (report.complete ? "complete" : "incomplete (deferred items)"))
            << '\n';
}

int run(int argc, char** argv) {
  CLI::App app{"Figure question-answering dataset pipeline"};
  std::string config_path;
  std::string stage_name = "run";
  std::optional<std::uint64_t> seed;
  std::optional<double> threshold;
  std::optional<int> concurrency;
  std::optional<std::string> mock_script;
  std::optional<std::string> output;
  std::optional<std::size_t> batch;
  std::optional<std::string> input;
  std::optional<std::size_t> sample;

  app.add_option("--config", config_path, "Run configuration (JSON)")->required();
  app.add_option("--stage", stage_name, "prepare|extract|generate|verify|annotate|stats|evaluate|run")
      ->check(CLI::IsMember({"prepare", "extract", "generate", "verify", "annotate", "stats", "evaluate", "run"}));
  app.add_option("--seed", seed, "Run seed");
  app.add_option("--threshold", threshold, "Caption match threshold");
  app.add_option("--concurrency", concurrency, "Parallel model requests");
  app.add_option("--mock", mock_script, "Serve all endpoints from a mock script");
  app.add_option("--output", output, "Output directory");
  app.add_option("--batch", batch, "Run a stage on one batch only");
  app.add_option("--input", input, "Dataset to evaluate");
  app.add_option("--sample", sample, "Evaluation sample size");
  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitConfig;
  }

  figqa::RunConfig config = figqa::load_run_config(config_path);
  if (seed) config.seed = *seed;
  if (threshold) config.threshold = *threshold;
  if (concurrency) config.concurrency = *concurrency;
  if (output) config.output_dir = *output;
  if (mock_script) config.mock_script = *mock_script;
  config.validate();
  std::filesystem::create_directories(config.output_dir);

  std::shared_ptr<figqa::ModelBackend> backend;
  if (config.mock_script) {
    backend = std::make_shared<figqa::MockBackend>(figqa::MockScript::load(*config.mock_script),
                                                   config.output_dir / "mock_ledger.jsonl");
  }
  figqa::Pipeline pipeline(config, backend);

  if (stage_name == "run") {
    const figqa::FunnelStats funnel = pipeline.run_all();
    std::cout << figqa::format_funnel_table(funnel);
    return kExitOk;
  }
  if (stage_name == "stats") {
    std::cout << figqa::format_funnel_table(pipeline.stats());
    return kExitOk;
  }
  if (stage_name == "evaluate") {
    const std::filesystem::path dataset = input ? std::filesystem::path(*input) : config.output_dir / "dataset.jsonl";
    const figqa::EvalResult result = pipeline.evaluate(dataset, sample);
    std::cout << figqa::format_eval_report(result);
    if (result.unevaluated.size() > config.max_unevaluated) {
      std::cerr << result.unevaluated.size() << " items could not be evaluated\n";
      return kExitUnavailable;
    }
    return kExitOk;
  }

  const figqa::Stage stage = *parse_stage(stage_name);
  bool complete = true;
  const std::size_t first = batch.value_or(0);
  const std::size_t last = batch ? *batch + 1 : pipeline.batch_count();
  for (std::size_t b = first; b < last; ++b) {
    const figqa::StageReport report = pipeline.run_stage(stage, b);
    print_report(report);
    complete = complete && report.complete;
  }
  return complete ? kExitOk : kExitUnavailable;
}

}  // namespace

int main(int argc, char** argv) {
  try {
    return run(argc, argv);
  } catch (const figqa::ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const figqa::UnscriptedRequest& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const figqa::MissingVariable& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const figqa::AuthError& e) {
    std::cerr << "auth error: " << e.what() << '\n';
    return kExitAuth;
  } catch (const figqa::EndpointUnavailable& e) {
    std::cerr << "endpoint unavailable: " << e.what() << '\n';
    return kExitUnavailable;
  } catch (const figqa::Error& e) {
    std::cerr << "input error: " << e.what() << '\n';
    return kExitInput;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitInput;
  }
}
