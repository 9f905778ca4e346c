#include <doctest.h>

#include <fstream>

#include "figqa/dataset.hpp"
#include "figqa/errors.hpp"
#include "test_support.hpp"

using namespace figqa;
using namespace figqa::testing;

namespace {

VerifiedRecord make_record(int i, std::string category, std::optional<std::string> figure_type,
                           std::optional<std::string> question_type) {
  VerifiedRecord r;
  r.key = "p" + std::to_string(i) + "#1#0";
  r.question = "Question " + std::to_string(i) + "?";
  r.options = {"one", "two", "three", "four"};
  r.correct_index = i % 4;
  r.image_ref = "img/" + std::to_string(i) + ".png";
  r.caption = "Caption é " + std::to_string(i);
  r.reasoning = "Because.\n<option>" + std::string(1, static_cast<char>('A' + i % 4)) + "</option>";
  r.arxiv_id = "p" + std::to_string(i);
  r.figure_index = 1;
  r.primary_category = std::move(category);
  r.figure_type = std::move(figure_type);
  r.question_type = std::move(question_type);
  r.annotators = {{"figure_type", "labeler"}};
  r.provenance = {"The figure shows x.", "abc123", {r.key + "|SourceConsistency"}};
  return r;
}

}  // namespace

TEST_CASE("funnel reproduces the reference retention figures") {
  const FunnelStats stats = compute_funnel({44345, 680877, 261116, 55372, 20351});
  CHECK(stats.retention_tenths.at("claims") == 1000);
  CHECK(stats.retention_tenths.at("qa_generated") == 384);
  CHECK(stats.retention_tenths.at("after_text_filtering") == 81);
  CHECK(stats.retention_tenths.at("after_vision_filtering") == 30);
  CHECK(stats.retention("qa_generated") == doctest::Approx(38.4));
  const std::string table = format_funnel_table(stats);
  CHECK(table.find("680,877") != std::string::npos);
  CHECK(table.find("38.4%") != std::string::npos);
  CHECK(table.find("100.0%") != std::string::npos);
}

TEST_CASE("retention rounds to hundredths, then to tenths") {
  CHECK(retention_tenths(1, 2000) == 1);     // 0.05 -> 0.1
  CHECK(retention_tenths(1, 2001) == 1);     // 0.04997 -> 0.05 -> 0.1
  CHECK(retention_tenths(1, 2300) == 0);     // 0.04347 -> 0.04 -> 0.0
  CHECK(retention_tenths(261116, 680877) == 384);
  CHECK(retention_tenths(7, 7) == 1000);
  CHECK(retention_tenths(0, 5) == 0);
}

TEST_CASE("funnel rejects inconsistent counts") {
  CHECK_THROWS_AS(compute_funnel({1, 0, 0, 0, 0}), InvalidFunnel);
  CHECK_THROWS_AS(compute_funnel({1, 10, 11, 0, 0}), InvalidFunnel);
  CHECK_THROWS_AS(compute_funnel({1, 10, 5, 6, 0}), InvalidFunnel);
  CHECK_THROWS_AS(compute_funnel({1, 10, 5, 4, 5}), InvalidFunnel);
  CHECK_NOTHROW(compute_funnel({1, 10, 10, 10, 10}));
}

TEST_CASE("dataset round-trips every field") {
  TempDir dir("ds");
  const std::vector<VerifiedRecord> records = {make_record(0, "cs", "Line Plot", "Comparative"),
                                               make_record(1, "physics", std::nullopt, std::nullopt)};
  const auto path = dir.path() / "dataset.jsonl";
  write_dataset(records, path);
  CHECK(read_dataset(path) == records);
  CHECK(record_digest(records[0]) != record_digest(records[1]));
  CHECK(record_digest(records[0]) == record_digest(read_dataset(path)[0]));
}

TEST_CASE("read_dataset reports the offending line and field") {
  TempDir dir("ds-bad");
  const auto path = dir.path() / "bad.jsonl";
  Json good = to_json(make_record(0, "cs", "Photo", "Structural"));
  Json bad = good;
  bad["figure_type"] = "Chart";
  write_file(path, good.dump() + "\n" + bad.dump() + "\n");
  try {
    read_dataset(path);
    FAIL("expected SchemaViolation");
  } catch (const SchemaViolation& e) {
    CHECK(e.line() == 2);
    CHECK(e.field() == "figure_type");
  }
  Json missing = good;
  missing.erase("reasoning");
  write_file(path, missing.dump() + "\n");
  CHECK_THROWS_AS(read_dataset(path), SchemaViolation);
}

TEST_CASE("taxonomy replies map onto the closed vocabulary") {
  CHECK(kFigureTypes.size() == 12);
  CHECK(kQuestionTypes.size() == 5);
  CHECK(parse_taxonomy_reply("<label>line plot</label>", TaxonomyKind::kFigureType) == "Line Plot");
  CHECK(parse_taxonomy_reply("Comparative.", TaxonomyKind::kQuestionType) == "Comparative");
  CHECK_FALSE(parse_taxonomy_reply("Chart", TaxonomyKind::kFigureType).has_value());
  CHECK_FALSE(parse_taxonomy_reply("Line Plot", TaxonomyKind::kQuestionType).has_value());
}

TEST_CASE("annotate_taxonomy routes by kind and retries once") {
  TempDir dir("tax");
  VerifiedRecord record = make_record(0, "cs", std::nullopt, std::nullopt);
  record.image_ref = (dir.path() / "f.png").string();
  write_file(record.image_ref, png_bytes());
  record.question = "Which model performs best?";
  const TemplateLibrary templates = tagged_templates();

  auto backend = std::make_shared<LambdaBackend>([](const ChatRequest& r) -> std::string {
    if (r.prompt.starts_with("FIGTYPE")) return "<label>Line Plot</label>";
    return "<label>Comparative</label>";
  });
  ModelGateway vision(endpoint(ModelRole::kVision, "labeler"), backend, no_sleep());
  ModelGateway text(endpoint(ModelRole::kText, "qlabeler"), backend, no_sleep());
  const TaxonomyLabel figure = annotate_taxonomy(record, TaxonomyKind::kFigureType, vision, templates);
  CHECK(figure.value == "Line Plot");
  CHECK(figure.annotator_model == "labeler");
  const TaxonomyLabel question = annotate_taxonomy(record, TaxonomyKind::kQuestionType, text, templates);
  CHECK(question.value == "Comparative");
  const auto requests = backend->requests();
  REQUIRE(requests.size() == 2);
  CHECK(requests[0].image_ref == record.image_ref);
  CHECK_FALSE(requests[1].image_ref.has_value());

  auto vague = std::make_shared<LambdaBackend>([](const ChatRequest&) { return std::string("Chart"); });
  ModelGateway vague_model(endpoint(ModelRole::kVision), vague, no_sleep());
  CHECK_FALSE(annotate_taxonomy(record, TaxonomyKind::kFigureType, vague_model, templates).value.has_value());
  CHECK(vague->requests().size() == 2);
}

TEST_CASE("proportional allocation examples") {
  using Pop = std::map<StratumKey, std::size_t>;
  CHECK(proportional_allocation(Pop{{{"a"}, 50}, {{"b"}, 50}}, 10) == Pop{{{"a"}, 5}, {{"b"}, 5}});
  CHECK(proportional_allocation(Pop{{{"a"}, 75}, {{"b"}, 25}}, 8) == Pop{{{"a"}, 6}, {{"b"}, 2}});
  // Equal remainders: the larger stratum wins, then the smaller key.
  CHECK(proportional_allocation(Pop{{{"a"}, 1}, {{"b"}, 3}}, 2) == Pop{{{"a"}, 0}, {{"b"}, 2}});
  CHECK(proportional_allocation(Pop{{{"a"}, 1}, {{"b"}, 1}}, 1) == Pop{{{"a"}, 1}, {{"b"}, 0}});
  CHECK_THROWS_AS(proportional_allocation(Pop{{{"a"}, 3}}, 4), InsufficientStratum);
}

TEST_CASE("stratified_sample is exact, deterministic and skips unlabeled records") {
  std::vector<VerifiedRecord> records;
  for (int i = 0; i < 100; ++i) {
    records.push_back(make_record(i, i % 4 == 0 ? "physics" : "cs", i % 10 == 0 ? std::nullopt : std::optional<std::string>("Photo"),
                                  "Descriptive"));
  }
  const std::vector<StratumField> fields = {StratumField::kQuestionType, StratumField::kDomain,
                                            StratumField::kFigureType};
  const SampleResult a = stratified_sample(records, 30, fields, 5);
  const SampleResult b = stratified_sample(records, 30, fields, 5);
  CHECK(a.records.size() == 30);
  CHECK(a.records == b.records);
  CHECK(a.excluded_unlabeled == 10);
  for (const VerifiedRecord& r : a.records) CHECK(r.figure_type.has_value());
  const SampleResult c = stratified_sample(records, 30, fields, 6);
  CHECK(c.records != a.records);
  CHECK_THROWS_AS(stratified_sample(records, 91, fields, 5), InsufficientStratum);
}
