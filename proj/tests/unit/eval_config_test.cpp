#include <doctest.h>

#include "figqa/errors.hpp"
#include "figqa/eval_harness.hpp"
#include "figqa/run_config.hpp"
#include "test_support.hpp"

using namespace figqa;
using namespace figqa::testing;

namespace {

VerifiedRecord eval_record(int i, const std::string& image, char correct, std::string domain,
                           std::optional<std::string> figure_type, std::optional<std::string> question_type) {
  VerifiedRecord r;
  r.key = "k" + std::to_string(i);
  r.question = "Question number " + std::to_string(i) + "?";
  r.options = {"w", "x", "y", "z"};
  r.correct_index = correct - 'A';
  r.image_ref = image;
  r.caption = "c";
  r.reasoning = "r";
  r.arxiv_id = "p" + std::to_string(i);
  r.figure_index = 1;
  r.primary_category = std::move(domain);
  r.figure_type = std::move(figure_type);
  r.question_type = std::move(question_type);
  return r;
}

}  // namespace

TEST_CASE("accuracy_hundredths rounds half up") {
  CHECK(accuracy_hundredths(823, 1000) == 8230);
  CHECK(accuracy_hundredths(1, 3) == 3333);
  CHECK(accuracy_hundredths(2, 3) == 6667);
  CHECK(accuracy_hundredths(0, 0) == 0);
  CHECK(CategoryTally{1, 8}.accuracy() == doctest::Approx(12.5));
}

TEST_CASE("evaluate counts unparseable and abstaining answers as wrong") {
  TempDir dir("eval");
  const std::string image = (dir.path() / "f.png").string();
  write_file(image, png_bytes());
  std::vector<VerifiedRecord> records = {
      eval_record(0, image, 'A', "cs", "Line Plot", "Descriptive"),
      eval_record(1, image, 'B', "cs", "Bar Chart", "Comparative"),
      eval_record(2, image, 'C', "physics", "Line Plot", std::nullopt),
      eval_record(3, image, 'D', "physics", std::nullopt, "Comparative"),
      eval_record(4, (dir.path() / "missing.png").string(), 'A', "cs", "Photo", "Structural"),
  };
  const std::map<std::string, std::string> replies = {{"Question number 0?", "<option>A</option>"},
                                                      {"Question number 1?", "<option>C</option>"},
                                                      {"Question number 2?", "I am unsure"},
                                                      {"Question number 3?", "<option>None</option>"}};
  auto backend = std::make_shared<LambdaBackend>([&](const ChatRequest& r) {
    for (const auto& [question, reply] : replies) {
      if (r.prompt.find(question) != std::string::npos) return reply;
    }
    throw UnscriptedRequest(r.prompt);
  });
  ModelGateway model(endpoint(ModelRole::kVision, "vlm", 0.0), backend, no_sleep());
  const TemplateLibrary templates = tagged_templates();
  const EvalResult result = evaluate(model, templates, records, 3);
  CHECK(result.model_name == "vlm");
  CHECK(result.overall == CategoryTally{1, 4});
  CHECK(result.unevaluated == std::vector<std::string>{"k4"});
  CHECK(result.by_domain.at("cs") == CategoryTally{1, 2});
  CHECK(result.by_domain.at("physics") == CategoryTally{0, 2});
  CHECK(result.by_figure_type.at(std::string(kUnlabeledCategory)) == CategoryTally{0, 1});
  CHECK(result.by_question_type.at("Comparative") == CategoryTally{0, 2});
  REQUIRE(result.per_item.size() == 4);
  CHECK(result.per_item[2].predicted == OptionSelection::ambiguous());
  CHECK(result.per_item[3].predicted == OptionSelection::none());
  for (const ChatRequest& r : backend->requests()) CHECK(r.sample == 0);
  const std::string report = format_eval_report(result);
  CHECK(report.find("25.00") != std::string::npos);
  CHECK(to_json(result)["overall"]["accuracy"] == 25.0);
  CHECK(to_json(evaluate(model, templates, records, 1)) == to_json(result));
}

TEST_CASE("evaluate requires greedy decoding on a vision endpoint") {
  auto backend = std::make_shared<LambdaBackend>([](const ChatRequest&) { return std::string(); });
  const TemplateLibrary templates = tagged_templates();
  ModelGateway hot(endpoint(ModelRole::kVision, "vlm", 1.0), backend, no_sleep());
  CHECK_THROWS_AS(evaluate(hot, templates, {}), ConfigError);
  ModelGateway text(endpoint(ModelRole::kText, "llm", 0.0), backend, no_sleep());
  CHECK_THROWS_AS(evaluate(text, templates, {}), ConfigError);
}

TEST_CASE("run config loading") {
  TempDir dir("cfg");
  write_file(dir.path() / "run.json", R"({
    "corpus": "data/corpus.jsonl", "latex_dir": "/abs/latex", "prompts_dir": "prompts", "output_dir": "out",
    "seed": 11, "threshold": 0.85, "batch_size": 2,
    "endpoints": {"text": {"role": "text", "model": "t", "api_key_env": "KEY"},
                  "vision": {"role": "vision", "model": "v", "timeout_s": 5}}
  })");
  const RunConfig config = load_run_config(dir.path() / "run.json");
  CHECK(config.corpus == dir.path() / "data/corpus.jsonl");
  CHECK(config.latex_dir == "/abs/latex");
  CHECK(config.seed == 11);
  CHECK(config.threshold == 0.85);
  CHECK(config.batch_size == 2);
  CHECK(config.endpoints.at("vision").role == ModelRole::kVision);
  CHECK(config.endpoints.at("vision").timeout == std::chrono::milliseconds(5000));
  CHECK(config.endpoints.at("text").api_key_env == "KEY");

  RunConfig moved = config;
  moved.output_dir = "/elsewhere";
  moved.concurrency = 16;
  CHECK(config_digest(moved) == config_digest(config));
  moved.seed = 12;
  CHECK(config_digest(moved) != config_digest(config));

  write_file(dir.path() / "bad.json", R"({"threshold": 1.5})");
  CHECK_THROWS_AS(load_run_config(dir.path() / "bad.json"), ConfigError);
  write_file(dir.path() / "bad.json", R"({"endpoints": {"x": {"role": "audio"}}})");
  CHECK_THROWS_AS(load_run_config(dir.path() / "bad.json"), ConfigError);
  write_file(dir.path() / "bad.json", "{not json");
  CHECK_THROWS_AS(load_run_config(dir.path() / "bad.json"), ConfigError);
  CHECK_THROWS_AS(load_run_config(dir.path() / "absent.json"), ConfigError);
}
