#include <doctest.h>

#include <set>

#include "figqa/errors.hpp"
#include "figqa/generation.hpp"
#include "test_support.hpp"

using namespace figqa;
using namespace figqa::testing;

namespace {

FigureContext sample_context() {
  FigureContext ctx;
  ctx.arxiv_id = "2301.00003";
  ctx.primary_category = "cs";
  ctx.figure_index = 2;
  ctx.image_ref = "fig2.png";
  ctx.caption = "Accuracy over training.";
  ctx.label = "fig:acc";
  ctx.context = "As shown in Fig.~\\ref{fig:acc}, accuracy rises by 20%.";
  ctx.citing_paragraph_count = 1;
  return ctx;
}

const char* kQaReply =
    "<question>By how much does accuracy rise?</question>\n"
    "<A>20%</A>\n<B>5%</B>\n<C>50%</C>\n<D>It falls</D>\n<answer>A</answer>";

}  // namespace

TEST_CASE("extract_claims keeps conforming claims") {
  auto backend = std::make_shared<LambdaBackend>([](const ChatRequest&) {
    return std::string(
        "<Patterns>\nThe figure shows accuracy rises by 20%.\nAccuracy improves a lot.\n"
        "  the figure   shows a second trend.\n</Patterns>");
  });
  ModelGateway text(endpoint(ModelRole::kText), backend, no_sleep());
  const TemplateLibrary templates = tagged_templates();
  const ClaimExtraction result = extract_claims(sample_context(), text, templates);
  CHECK(result.status == ClaimExtraction::Status::kOk);
  REQUIRE(result.claims.size() == 2);
  CHECK(result.claims[0].text == "The figure shows accuracy rises by 20%.");
  CHECK(result.claims[0].ordinal == 0);
  CHECK(result.claims[1].text == "the figure shows a second trend.");
  CHECK(result.claims[1].ordinal == 1);
  CHECK(result.claims[1].key() == "2301.00003#2#1");
  CHECK(result.rejected_prefix == 1);
  const auto requests = backend->requests();
  REQUIRE(requests.size() == 1);
  CHECK(requests[0].prompt.find("label=fig:acc") != std::string::npos);
  CHECK(requests[0].prompt.find("accuracy rises by 20%") != std::string::npos);
}

TEST_CASE("extract_claims handles None and retries malformed replies once") {
  const TemplateLibrary templates = tagged_templates();
  auto none = std::make_shared<LambdaBackend>([](const ChatRequest&) { return std::string("None"); });
  ModelGateway none_model(endpoint(ModelRole::kText), none, no_sleep());
  const ClaimExtraction declined = extract_claims(sample_context(), none_model, templates);
  CHECK(declined.status == ClaimExtraction::Status::kNone);
  CHECK(declined.claims.empty());

  auto garbled = std::make_shared<LambdaBackend>([](const ChatRequest& r) {
    return r.sample == 0 ? std::string("no tags") : std::string("<Patterns>The figure shows x.</Patterns>");
  });
  ModelGateway garbled_model(endpoint(ModelRole::kText), garbled, no_sleep());
  CHECK(extract_claims(sample_context(), garbled_model, templates).claims.size() == 1);
  CHECK(garbled->requests().size() == 2);

  auto hopeless = std::make_shared<LambdaBackend>([](const ChatRequest&) { return std::string("no tags"); });
  ModelGateway hopeless_model(endpoint(ModelRole::kText), hopeless, no_sleep());
  const ClaimExtraction failed = extract_claims(sample_context(), hopeless_model, templates);
  CHECK(failed.status == ClaimExtraction::Status::kMalformed);
  CHECK(failed.claims.empty());
  CHECK(hopeless->requests().size() == 2);
}

TEST_CASE("parse_qa_response") {
  const auto parsed = parse_qa_response(kQaReply);
  const auto& candidate = std::get<QACandidate>(parsed);
  CHECK(candidate.question == "By how much does accuracy rise?");
  CHECK(candidate.options[3] == "It falls");
  CHECK(candidate.correct_index == 0);
  CHECK(std::get<Declined>(parse_qa_response("None")).reason == "None");
  CHECK_THROWS_AS(parse_qa_response("<question>q</question><A>a</A>"), MalformedResponse);
}

TEST_CASE("generate_qa shuffles options with a recorded permutation") {
  auto backend = std::make_shared<LambdaBackend>([](const ChatRequest&) { return std::string(kQaReply); });
  ModelGateway text(endpoint(ModelRole::kText), backend, no_sleep());
  const TemplateLibrary templates = tagged_templates();
  const AtomicClaim claim{"2301.00003", 2, 0, "The figure shows accuracy rises by 20%."};
  const QAGeneration result = generate_qa(claim, "Accuracy over training.", "ctx", text, templates, 42);
  const auto& candidate = std::get<QACandidate>(result.outcome);
  CHECK(candidate.options[static_cast<std::size_t>(candidate.correct_index)] == "20%");
  CHECK(candidate.permutation == option_permutation(42, claim.key()));
  const std::array<std::string, 4> raw = {"20%", "5%", "50%", "It falls"};
  for (int i = 0; i < 4; ++i) {
    CHECK(candidate.options[static_cast<std::size_t>(i)] ==
          raw[static_cast<std::size_t>(candidate.permutation[static_cast<std::size_t>(i)])]);
  }
  CHECK(candidate.caption == "Accuracy over training.");
  CHECK(candidate.claim_text == claim.text);
  CHECK(candidate.key() == claim.key());
  const QAGeneration again = generate_qa(claim, "Accuracy over training.", "ctx", text, templates, 42);
  CHECK(std::get<QACandidate>(again.outcome).options == candidate.options);
}

TEST_CASE("option permutations are valid and cover every position") {
  std::set<int> correct_positions;
  for (int k = 0; k < 200; ++k) {
    const auto perm = option_permutation(7, "paper#1#" + std::to_string(k));
    std::array<int, 4> sorted = perm;
    std::sort(sorted.begin(), sorted.end());
    CHECK(sorted == std::array<int, 4>{0, 1, 2, 3});
    for (int i = 0; i < 4; ++i) {
      if (perm[static_cast<std::size_t>(i)] == 0) correct_positions.insert(i);
    }
  }
  CHECK(correct_positions.size() == 4);
}

TEST_CASE("generate_qa declines invalid candidates") {
  const TemplateLibrary templates = tagged_templates();
  const AtomicClaim claim{"p", 1, 0, "The figure shows the workflow of self-supervision."};
  auto decline = std::make_shared<LambdaBackend>([](const ChatRequest&) { return std::string("None"); });
  ModelGateway decline_model(endpoint(ModelRole::kText), decline, no_sleep());
  CHECK(std::get<Declined>(generate_qa(claim, "c", "ctx", decline_model, templates, 1).outcome).reason == "None");

  auto duplicate = std::make_shared<LambdaBackend>([](const ChatRequest&) {
    return std::string("<question>q</question><A>x</A><B> x </B><C>y</C><D>z</D><answer>A</answer>");
  });
  ModelGateway duplicate_model(endpoint(ModelRole::kText), duplicate, no_sleep());
  CHECK(std::get<Declined>(generate_qa(claim, "c", "ctx", duplicate_model, templates, 1).outcome)
            .reason.starts_with("MalformedQA"));

  auto bad_answer = std::make_shared<LambdaBackend>([](const ChatRequest&) {
    return std::string("<question>q</question><A>w</A><B>x</B><C>y</C><D>z</D><answer>E</answer>");
  });
  ModelGateway bad_model(endpoint(ModelRole::kText), bad_answer, no_sleep());
  CHECK(std::get<Declined>(generate_qa(claim, "c", "ctx", bad_model, templates, 1).outcome)
            .reason.starts_with("MalformedQA"));

  auto empty = std::make_shared<LambdaBackend>([](const ChatRequest&) {
    return std::string("<question>q</question><A></A><B>x</B><C>y</C><D>z</D><answer>A</answer>");
  });
  ModelGateway empty_model(endpoint(ModelRole::kText), empty, no_sleep());
  CHECK(std::get<Declined>(generate_qa(claim, "c", "ctx", empty_model, templates, 1).outcome)
            .reason.starts_with("MalformedQA"));
}

TEST_CASE("stage records round-trip through JSON") {
  const AtomicClaim claim{"p", 3, 1, "The figure shows y."};
  const AtomicClaim claim_back = claim_from_json(to_json(claim), 1);
  CHECK(claim_back.key() == claim.key());
  CHECK(claim_back.text == claim.text);

  QACandidate candidate;
  candidate.arxiv_id = "p";
  candidate.figure_index = 3;
  candidate.claim_ordinal = 1;
  candidate.question = "q";
  candidate.options = {"a", "b", "c", "d"};
  candidate.correct_index = 2;
  candidate.permutation = {3, 1, 0, 2};
  candidate.caption = "cap";
  candidate.claim_text = claim.text;
  const QACandidate back = candidate_from_json(to_json(candidate), 1);
  CHECK(back.options == candidate.options);
  CHECK(back.permutation == candidate.permutation);
  CHECK(back.correct_index == 2);
  CHECK(back.key() == candidate.key());

  const FigureContext ctx = sample_context();
  const FigureContext ctx_back = context_from_json(to_json(ctx), 1);
  CHECK(ctx_back.context == ctx.context);
  CHECK(ctx_back.label == ctx.label);
  CHECK(ctx_back.image_ref == ctx.image_ref);

  Json broken = to_json(candidate);
  broken.erase("question");
  CHECK_THROWS_AS(candidate_from_json(broken, 9), SchemaViolation);
}
