#include "figqa/pipeline.hpp"

#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <unordered_map>

#include "figqa/digest.hpp"
#include "figqa/errors.hpp"
#include "figqa/figure_context.hpp"
#include "figqa/generation.hpp"
#include "figqa/http_backend.hpp"
#include "figqa/text_util.hpp"
#include "figqa/verification.hpp"
#include "figqa/worker_pool.hpp"

namespace figqa {
namespace {

constexpr int kRequeueRounds = 2;
constexpr const char* kCrashEnv = "FIGQA_CRASH_AFTER_CALLS";

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError("cannot open " + path.string());
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return buffer.str();
}

std::vector<Json> read_all(const std::filesystem::path& path) {
  if (!std::filesystem::exists(path)) throw InputError("missing stage input " + path.string());
  std::vector<Json> records;
  read_jsonl(path, [&](const Json& record, std::size_t) { records.push_back(record); });
  return records;
}

std::string latex_file_name(const std::string& arxiv_id) {
  std::string name = arxiv_id;
  for (char& c : name) {
    if (c == '/') c = '_';
  }
  return name + ".tex";
}

Json figures_json(const std::vector<FigureCaptionPair>& figures) {
  Json out = Json::array();
  for (const FigureCaptionPair& f : figures) {
    out.push_back(Json{{"figure_index", f.figure_index}, {"image", f.image_ref}, {"caption", f.caption}});
  }
  return out;
}

std::vector<FigureCaptionPair> figures_from_json(const Json& array, std::size_t line) {
  std::vector<FigureCaptionPair> figures;
  for (const Json& f : array) {
    figures.push_back({require_field<int>(f, "figure_index", line), require_field<std::string>(f, "image", line),
                       require_field<std::string>(f, "caption", line)});
  }
  return figures;
}

Json manifest_header(Stage stage, std::size_t batch, const std::string& digest) {
  Json manifest;
  manifest["stage"] = to_string(stage);
  manifest["batch"] = batch;
  manifest["config_digest"] = digest;
  return manifest;
}

// Runs `attempt(i)` for each index, requeueing the ones that return false.
// Returns the indices still failing after the last round.
std::vector<std::size_t> with_requeue(std::size_t count, int workers, const std::function<bool(std::size_t)>& attempt) {
  std::vector<std::size_t> pending(count);
  for (std::size_t i = 0; i < count; ++i) pending[i] = i;
  for (int round = 0; round <= kRequeueRounds && !pending.empty(); ++round) {
    std::vector<char> done(pending.size(), 0);
    parallel_for(pending.size(), workers, [&](std::size_t k) { done[k] = attempt(pending[k]) ? 1 : 0; });
    std::vector<std::size_t> next;
    for (std::size_t k = 0; k < pending.size(); ++k) {
      if (!done[k]) next.push_back(pending[k]);
    }
    pending = std::move(next);
  }
  return pending;
}

}  // namespace

std::string_view to_string(Stage stage) {
  switch (stage) {
    case Stage::kPrepare: return "prepare";
    case Stage::kExtract: return "extract";
    case Stage::kGenerate: return "generate";
    case Stage::kVerify: return "verify";
    case Stage::kAnnotate: return "annotate";
  }
  return "unknown";
}

std::vector<CorpusPaper> read_corpus(const std::filesystem::path& path) {
  if (!std::filesystem::exists(path)) throw InputError("corpus not found: " + path.string());
  std::vector<CorpusPaper> papers;
  std::unordered_map<std::string, std::size_t> index;
  std::set<std::pair<std::string, int>> seen;
  const std::filesystem::path base = path.parent_path();
  read_jsonl(path, [&](const Json& record, std::size_t line) {
    const auto arxiv_id = require_field<std::string>(record, "arxiv_id", line);
    if (arxiv_id.empty()) throw SchemaViolation(line, "arxiv_id", "empty");
    const auto category = require_field<std::string>(record, "primary_category", line);
    FigureCaptionPair pair;
    pair.figure_index = require_field<int>(record, "figure_index", line);
    const auto image = require_field<std::string>(record, "image", line);
    const bool is_url = image.find("://") != std::string::npos || image.starts_with("data:");
    pair.image_ref = (is_url || std::filesystem::path(image).is_absolute()) ? image : (base / image).string();
    pair.caption = require_field<std::string>(record, "caption", line);
    if (!seen.insert({arxiv_id, pair.figure_index}).second) {
      throw SchemaViolation(line, "figure_index", "duplicate figure for " + arxiv_id);
    }
    auto [it, inserted] = index.emplace(arxiv_id, papers.size());
    if (inserted) papers.push_back({arxiv_id, category, {}});
    CorpusPaper& paper = papers[it->second];
    if (paper.primary_category != category) {
      throw SchemaViolation(line, "primary_category", "inconsistent category for " + arxiv_id);
    }
    paper.figures.push_back(std::move(pair));
  });
  return papers;
}

void shuffle_papers(std::vector<CorpusPaper>& papers, std::uint64_t seed) {
  SeededRng rng(derive_seed(seed, "paper-shuffle"));
  for (std::size_t i = papers.size(); i > 1; --i) {
    const std::size_t j = static_cast<std::size_t>(rng.uniform(i));
    std::swap(papers[i - 1], papers[j]);
  }
}

Pipeline::Pipeline(RunConfig config, std::shared_ptr<ModelBackend> backend)
    : config_(std::move(config)), digest_(config_digest(config_)), backend_(std::move(backend)) {
  config_.validate();
  if (!backend_) backend_ = std::make_shared<HttpChatBackend>();
  if (const char* limit = std::getenv(kCrashEnv); limit != nullptr && *limit != '\0') {
    backend_ = std::make_shared<FaultInjectingBackend>(backend_, std::strtol(limit, nullptr, 10));
  }
}

const std::vector<CorpusPaper>& Pipeline::shuffled_corpus() {
  if (!corpus_) {
    corpus_ = read_corpus(config_.corpus);
    shuffle_papers(*corpus_, config_.seed);
  }
  return *corpus_;
}

std::size_t Pipeline::batch_count() const {
  auto papers = read_corpus(config_.corpus);
  std::size_t count = (papers.size() + config_.batch_size - 1) / config_.batch_size;
  if (config_.max_batches) count = std::min(count, *config_.max_batches);
  return count;
}

std::filesystem::path Pipeline::batch_dir(std::size_t batch) const {
  char name[32];
  std::snprintf(name, sizeof(name), "batch-%04zu", batch);
  return config_.output_dir / name;
}

const TemplateLibrary& Pipeline::templates() {
  if (!templates_) templates_ = TemplateLibrary::load(config_.prompts_dir);
  return *templates_;
}

ModelGateway& Pipeline::gateway(const std::string& slot) {
  if (auto it = gateways_.find(slot); it != gateways_.end()) return *it->second;
  auto endpoint = config_.endpoints.find(slot);
  if (endpoint == config_.endpoints.end()) {
    const char* fallback = slot == kFigureAnnotatorEndpoint     ? kVisionEndpoint
                           : slot == kQuestionAnnotatorEndpoint ? kTextEndpoint
                                                                : nullptr;
    if (fallback) endpoint = config_.endpoints.find(fallback);
  }
  if (endpoint == config_.endpoints.end()) throw ConfigError("no endpoint configured for '" + slot + "'");
  auto [it, inserted] = gateways_.emplace(slot, std::make_unique<ModelGateway>(endpoint->second, backend_));
  return *it->second;
}

std::optional<Json> Pipeline::completed_manifest(Stage stage, std::size_t batch) {
  const auto path = batch_dir(batch) / (std::string(to_string(stage)) + ".manifest.json");
  if (!std::filesystem::exists(path)) return std::nullopt;
  const Json manifest = Json::parse(read_file(path), nullptr, false);
  if (manifest.is_discarded() || !manifest.value("complete", false)) return std::nullopt;
  if (manifest.value("config_digest", "") != digest_) return std::nullopt;
  if (manifest.contains("templates_digest") && manifest.at("templates_digest") != templates().digest()) {
    return std::nullopt;
  }
  return manifest;
}

void Pipeline::write_manifest(Stage stage, std::size_t batch, Json manifest, bool complete) {
  manifest["complete"] = complete;
  write_text_atomic(batch_dir(batch) / (std::string(to_string(stage)) + ".manifest.json"), manifest.dump(2) + "\n");
}

StageReport Pipeline::run_stage(Stage stage, std::size_t batch) {
  if (auto manifest = completed_manifest(stage, batch)) {
    StageReport report{stage, batch, true, true, *manifest};
    return report;
  }
  switch (stage) {
    case Stage::kPrepare: return prepare(batch);
    case Stage::kExtract: return extract(batch);
    case Stage::kGenerate: return generate(batch);
    case Stage::kVerify: return verify(batch);
    case Stage::kAnnotate: return annotate(batch);
  }
  throw std::logic_error("unknown stage");
}

StageReport Pipeline::prepare(std::size_t batch) {
  const std::vector<CorpusPaper>& corpus = shuffled_corpus();
  const std::size_t begin = batch * config_.batch_size;
  if (begin >= corpus.size()) throw InputError("batch " + std::to_string(batch) + " is beyond the corpus");
  const std::size_t end = std::min(corpus.size(), begin + config_.batch_size);

  PrepOptions options;
  options.macro_depth = config_.macro_depth;
  options.paragraph_separator = config_.paragraph_separator;

  struct Prepared {
    std::optional<Json> record;
    std::optional<std::string> skip_reason;
  };
  std::vector<Prepared> results(end - begin);
  parallel_for(results.size(), config_.concurrency, [&](std::size_t k) {
    const CorpusPaper& paper = corpus[begin + k];
    const auto latex_path = config_.latex_dir / latex_file_name(paper.arxiv_id);
    if (!std::filesystem::exists(latex_path)) {
      results[k].skip_reason = "MissingLatex";
      return;
    }
    RawPaper raw{paper.arxiv_id, paper.primary_category, read_file(latex_path), paper.figures};
    try {
      CleanPaper clean = prepare_paper(raw, options);
      Json record;
      record["arxiv_id"] = paper.arxiv_id;
      record["primary_category"] = paper.primary_category;
      record["figures"] = figures_json(paper.figures);
      record["body"] = clean.body;
      record["paragraphs"] = clean.paragraphs;
      results[k].record = std::move(record);
    } catch (const RecursionLimitExceeded& e) {
      results[k].skip_reason = std::string("RecursionLimitExceeded: ") + e.what();
    }
  });

  std::vector<Json> records;
  Json skipped = Json::array();
  for (std::size_t k = 0; k < results.size(); ++k) {
    if (results[k].record) {
      records.push_back(std::move(*results[k].record));
    } else {
      skipped.push_back(Json{{"arxiv_id", corpus[begin + k].arxiv_id}, {"reason", *results[k].skip_reason}});
    }
  }
  write_jsonl_atomic(batch_dir(batch) / "papers.jsonl", records);

  Json manifest = manifest_header(Stage::kPrepare, batch, digest_);
  manifest["papers"] = end - begin;
  manifest["prepared"] = records.size();
  manifest["skipped"] = skipped;
  write_manifest(Stage::kPrepare, batch, manifest, true);
  return {Stage::kPrepare, batch, false, true, manifest};
}

StageReport Pipeline::extract(std::size_t batch) {
  const std::vector<Json> papers = read_all(batch_dir(batch) / "papers.jsonl");
  ExtractionOptions options;
  options.threshold = config_.threshold;
  options.paragraph_separator = config_.paragraph_separator;
  options.citation_commands = config_.citation_commands;

  std::vector<ExtractionResult> results(papers.size());
  std::vector<std::size_t> figure_counts(papers.size());
  parallel_for(papers.size(), config_.concurrency, [&](std::size_t k) {
    const Json& record = papers[k];
    RawPaper raw;
    raw.arxiv_id = require_field<std::string>(record, "arxiv_id", k + 1);
    raw.primary_category = require_field<std::string>(record, "primary_category", k + 1);
    raw.figures = figures_from_json(require_field<Json>(record, "figures", k + 1), k + 1);
    CleanPaper clean;
    clean.arxiv_id = raw.arxiv_id;
    clean.body = require_field<std::string>(record, "body", k + 1);
    clean.paragraphs = require_field<std::vector<std::string>>(record, "paragraphs", k + 1);
    results[k] = build_figure_contexts(raw, clean, options);
    figure_counts[k] = raw.figures.size();
  });

  std::vector<Json> contexts;
  std::vector<Json> discards;
  std::map<std::string, long long> totals;
  for (DiscardKind kind : {DiscardKind::kEmptyCaption, DiscardKind::kNoEnvironmentMatch, DiscardKind::kAmbiguousMatch,
                           DiscardKind::kNoLabel, DiscardKind::kNoCitingParagraph}) {
    totals[std::string(to_string(kind))] = 0;
  }
  Json per_paper = Json::array();
  std::size_t figures = 0;
  for (std::size_t k = 0; k < results.size(); ++k) {
    Json counts = Json::object();
    for (const FigureContext& ctx : results[k].contexts) contexts.push_back(to_json(ctx));
    for (const FigureDiscard& d : results[k].discards) {
      const std::string kind(to_string(d.reason.kind));
      discards.push_back(
          Json{{"arxiv_id", d.arxiv_id}, {"figure_index", d.figure_index}, {"kind", kind}, {"detail", d.reason.detail}});
      ++totals[kind];
      counts[kind] = counts.value(kind, 0) + 1;
    }
    figures += figure_counts[k];
    per_paper.push_back(Json{{"arxiv_id", papers[k].at("arxiv_id")},
                             {"figures", figure_counts[k]},
                             {"contexts", results[k].contexts.size()},
                             {"discards", counts}});
  }
  write_jsonl_atomic(batch_dir(batch) / "contexts.jsonl", contexts);
  write_jsonl_atomic(batch_dir(batch) / "discards.jsonl", discards);

  Json manifest = manifest_header(Stage::kExtract, batch, digest_);
  manifest["figures"] = figures;
  manifest["contexts"] = contexts.size();
  manifest["discards"] = totals;
  manifest["per_paper"] = per_paper;
  write_manifest(Stage::kExtract, batch, manifest, true);
  return {Stage::kExtract, batch, false, true, manifest};
}

StageReport Pipeline::generate(std::size_t batch) {
  std::vector<FigureContext> contexts;
  read_jsonl(batch_dir(batch) / "contexts.jsonl",
             [&](const Json& record, std::size_t line) { contexts.push_back(context_from_json(record, line)); });
  ModelGateway& text = gateway(kTextEndpoint);
  const TemplateLibrary& library = templates();

  std::vector<std::optional<ClaimExtraction>> extractions(contexts.size());
  const std::vector<std::size_t> deferred_figures =
      with_requeue(contexts.size(), config_.concurrency, [&](std::size_t i) {
        try {
          extractions[i] = extract_claims(contexts[i], text, library);
          return true;
        } catch (const EndpointUnavailable&) {
          return false;
        }
      });

  struct ClaimWork {
    AtomicClaim claim;
    const FigureContext* context;
  };
  std::vector<ClaimWork> work;
  long long none_figures = 0, malformed_figures = 0, prefix_rejected = 0, duplicate_claims = 0;
  for (std::size_t i = 0; i < contexts.size(); ++i) {
    if (!extractions[i]) continue;
    const ClaimExtraction& extraction = *extractions[i];
    if (extraction.status == ClaimExtraction::Status::kNone) ++none_figures;
    if (extraction.status == ClaimExtraction::Status::kMalformed) ++malformed_figures;
    prefix_rejected += extraction.rejected_prefix;
    std::set<std::string> seen;
    for (const AtomicClaim& claim : extraction.claims) {
      if (!seen.insert(ascii_lower(claim.text)).second) ++duplicate_claims;
      work.push_back({claim, &contexts[i]});
    }
  }

  std::vector<std::optional<QAGeneration>> generations(work.size());
  const std::vector<std::size_t> deferred_claims = with_requeue(work.size(), config_.concurrency, [&](std::size_t i) {
    try {
      generations[i] = generate_qa(work[i].claim, work[i].context->caption, work[i].context->context, text, library,
                                   config_.seed);
      return true;
    } catch (const EndpointUnavailable&) {
      return false;
    }
  });

  std::vector<Json> claims, candidates, declined;
  for (std::size_t i = 0; i < work.size(); ++i) {
    claims.push_back(to_json(work[i].claim));
    if (!generations[i]) continue;
    if (const auto* candidate = std::get_if<QACandidate>(&generations[i]->outcome)) {
      candidates.push_back(to_json(*candidate));
    } else {
      declined.push_back(
          Json{{"key", work[i].claim.key()}, {"reason", std::get<Declined>(generations[i]->outcome).reason}});
    }
  }
  write_jsonl_atomic(batch_dir(batch) / "claims.jsonl", claims);
  write_jsonl_atomic(batch_dir(batch) / "candidates.jsonl", candidates);
  write_jsonl_atomic(batch_dir(batch) / "declined.jsonl", declined);

  Json manifest = manifest_header(Stage::kGenerate, batch, digest_);
  manifest["templates_digest"] = library.digest();
  manifest["contexts"] = contexts.size();
  manifest["claims"] = claims.size();
  manifest["qa_generated"] = candidates.size();
  manifest["declined"] = declined.size();
  manifest["figures_none"] = none_figures;
  manifest["figures_malformed"] = malformed_figures;
  manifest["claims_prefix_rejected"] = prefix_rejected;
  manifest["duplicate_claims"] = duplicate_claims;
  manifest["deferred_figures"] = deferred_figures.size();
  manifest["deferred_claims"] = deferred_claims.size();
  const bool complete = deferred_figures.empty() && deferred_claims.empty();
  write_manifest(Stage::kGenerate, batch, manifest, complete);
  return {Stage::kGenerate, batch, false, complete, manifest};
}

StageReport Pipeline::verify(std::size_t batch) {
  std::vector<QACandidate> candidates;
  read_jsonl(batch_dir(batch) / "candidates.jsonl",
             [&](const Json& record, std::size_t line) { candidates.push_back(candidate_from_json(record, line)); });
  std::unordered_map<std::string, FigureContext> contexts;
  read_jsonl(batch_dir(batch) / "contexts.jsonl", [&](const Json& record, std::size_t line) {
    FigureContext ctx = context_from_json(record, line);
    contexts.emplace(figure_key(ctx.arxiv_id, ctx.figure_index), std::move(ctx));
  });

  VerdictLog log(batch_dir(batch) / "verdicts.jsonl");
  const std::size_t replayed = log.replayed();
  CascadeModels models{&gateway(kTextEndpoint), &gateway(kVisionEndpoint), &templates(), config_.unanimous_vote};

  std::vector<std::optional<CascadeOutcome>> outcomes(candidates.size());
  const std::vector<std::size_t> deferred = with_requeue(candidates.size(), config_.concurrency, [&](std::size_t i) {
    const QACandidate& candidate = candidates[i];
    const auto ctx = contexts.find(figure_key(candidate.arxiv_id, candidate.figure_index));
    if (ctx == contexts.end()) throw InputError("candidate " + candidate.key() + " has no figure context");
    CascadeOutcome outcome = run_cascade(candidate, ctx->second, models, log);
    if (outcome.status == CascadeOutcome::Status::kDeferred) return false;
    outcomes[i] = std::move(outcome);
    return true;
  });

  std::vector<VerifiedRecord> retained;
  std::map<std::string, long long> rejected;
  for (FilterKind kind : kCascadeOrder) rejected[std::string(to_string(kind))] = 0;
  long long after_text = 0, vision_ties = 0;
  for (std::size_t i = 0; i < candidates.size(); ++i) {
    if (!outcomes[i]) continue;
    const CascadeOutcome& outcome = *outcomes[i];
    const bool text_passed = outcome.status == CascadeOutcome::Status::kRetained ||
                             outcome.rejected_at == FilterKind::kVisionConsistency;
    if (text_passed) ++after_text;
    if (outcome.status == CascadeOutcome::Status::kRejected) {
      ++rejected[std::string(to_string(*outcome.rejected_at))];
      const FilterVerdict& last = outcome.verdicts.back();
      if (last.voting && !last.voting->majority) ++vision_ties;
      continue;
    }
    const auto& ctx = contexts.at(figure_key(candidates[i].arxiv_id, candidates[i].figure_index));
    retained.push_back(make_verified_record(candidates[i], ctx, outcome));
  }
  write_dataset(retained, batch_dir(batch) / "retained.jsonl");

  Json deferred_keys = Json::array();
  for (std::size_t i : deferred) deferred_keys.push_back(candidates[i].key());
  Json manifest = manifest_header(Stage::kVerify, batch, digest_);
  manifest["templates_digest"] = templates().digest();
  manifest["candidates"] = candidates.size();
  manifest["rejected"] = rejected;
  manifest["vision_ties"] = vision_ties;
  manifest["after_text_filtering"] = after_text;
  manifest["after_vision_filtering"] = retained.size();
  manifest["verdicts_replayed"] = replayed;
  manifest["deferred"] = deferred_keys;
  write_manifest(Stage::kVerify, batch, manifest, deferred.empty());
  return {Stage::kVerify, batch, false, deferred.empty(), manifest};
}

StageReport Pipeline::annotate(std::size_t batch) {
  std::vector<VerifiedRecord> records = read_dataset(batch_dir(batch) / "retained.jsonl");
  ModelGateway& figure_model = gateway(kFigureAnnotatorEndpoint);
  ModelGateway& question_model = gateway(kQuestionAnnotatorEndpoint);
  if (figure_model.config().role != ModelRole::kVision) throw ConfigError("figure annotation needs a vision endpoint");
  const TemplateLibrary& library = templates();

  const std::vector<std::size_t> deferred = with_requeue(records.size(), config_.concurrency, [&](std::size_t i) {
    VerifiedRecord& record = records[i];
    try {
      if (!record.figure_type) {
        record.annotators["figure_type"] = figure_model.config().model_name;
        try {
          record.figure_type = annotate_taxonomy(record, TaxonomyKind::kFigureType, figure_model, library).value;
        } catch (const ImageUnreadable&) {
        }
      }
      if (!record.question_type) {
        const TaxonomyLabel label = annotate_taxonomy(record, TaxonomyKind::kQuestionType, question_model, library);
        record.question_type = label.value;
        record.annotators["question_type"] = label.annotator_model;
      }
      return true;
    } catch (const EndpointUnavailable&) {
      return false;
    }
  });
  write_dataset(records, batch_dir(batch) / "annotated.jsonl");

  long long figure_unlabeled = 0, question_unlabeled = 0;
  for (const VerifiedRecord& record : records) {
    if (!record.figure_type) ++figure_unlabeled;
    if (!record.question_type) ++question_unlabeled;
  }
  Json manifest = manifest_header(Stage::kAnnotate, batch, digest_);
  manifest["templates_digest"] = library.digest();
  manifest["records"] = records.size();
  manifest["figure_type_unlabeled"] = figure_unlabeled;
  manifest["question_type_unlabeled"] = question_unlabeled;
  manifest["deferred"] = deferred.size();
  write_manifest(Stage::kAnnotate, batch, manifest, deferred.empty());
  merge_dataset();
  return {Stage::kAnnotate, batch, false, deferred.empty(), manifest};
}

std::vector<VerifiedRecord> Pipeline::merge_dataset() {
  std::vector<VerifiedRecord> merged;
  std::set<std::string> digests;
  for (std::size_t batch = 0; std::filesystem::exists(batch_dir(batch)); ++batch) {
    const auto path = batch_dir(batch) / "annotated.jsonl";
    if (!std::filesystem::exists(path)) continue;
    for (VerifiedRecord& record : read_dataset(path)) {
      if (digests.insert(record_digest(record)).second) merged.push_back(std::move(record));
    }
  }
  write_dataset(merged, config_.output_dir / "dataset.jsonl");
  return merged;
}

FunnelStats Pipeline::stats() {
  FunnelCounts counts;
  std::size_t batches = 0;
  for (std::size_t batch = 0; std::filesystem::exists(batch_dir(batch)); ++batch, ++batches) {
    auto load = [&](Stage stage) {
      const auto path = batch_dir(batch) / (std::string(to_string(stage)) + ".manifest.json");
      if (!std::filesystem::exists(path)) throw InputError("missing manifest " + path.string());
      const Json manifest = Json::parse(read_file(path), nullptr, false);
      if (manifest.is_discarded()) throw InputError("unreadable manifest " + path.string());
      return manifest;
    };
    const Json prepare = load(Stage::kPrepare);
    const Json generate = load(Stage::kGenerate);
    const Json verify = load(Stage::kVerify);
    counts.papers += prepare.at("papers").get<long long>();
    counts.claims += generate.at("claims").get<long long>();
    counts.qa_generated += generate.at("qa_generated").get<long long>();
    counts.after_text_filtering += verify.at("after_text_filtering").get<long long>();
    counts.after_vision_filtering += verify.at("after_vision_filtering").get<long long>();
  }
  if (batches == 0) throw InputError("no batch outputs under " + config_.output_dir.string());
  FunnelStats funnel = compute_funnel(counts);
  write_text_atomic(config_.output_dir / "funnel.json", to_json(funnel).dump(2) + "\n");
  write_text_atomic(config_.output_dir / "funnel.txt", format_funnel_table(funnel));
  return funnel;
}

FunnelStats Pipeline::run_all() {
  const std::size_t batches = batch_count();
  for (std::size_t batch = 0; batch < batches; ++batch) {
    for (Stage stage : kBatchStages) {
      const StageReport report = run_stage(stage, batch);
      if (!report.complete) {
        throw EndpointUnavailable("stage " + std::string(to_string(stage)) + " of batch " + std::to_string(batch) +
                                  " left deferred items; rerun to resume");
      }
    }
    if (config_.target_size && merge_dataset().size() >= *config_.target_size) break;
  }
  merge_dataset();
  return stats();
}

EvalResult Pipeline::evaluate(const std::filesystem::path& dataset, std::optional<std::size_t> sample_size) {
  std::vector<VerifiedRecord> records = read_dataset(dataset);
  const std::size_t n = sample_size.value_or(config_.eval_sample_size);
  std::vector<std::string> notes;
  if (records.size() > n) {
    SampleResult sample = stratified_sample(
        records, n, {StratumField::kQuestionType, StratumField::kDomain, StratumField::kFigureType}, config_.seed);
    records = std::move(sample.records);
    notes = std::move(sample.notes);
  }
  ModelGateway& model = gateway(kEvaluatorEndpoint);
  EvalResult result = figqa::evaluate(model, templates(), records, config_.concurrency);

  const auto dir = config_.output_dir / "eval";
  std::string stem = result.model_name.empty() ? "model" : result.model_name;
  for (char& c : stem) {
    if (c == '/' || c == ' ') c = '_';
  }
  Json summary = to_json(result);
  summary["sample_notes"] = notes;
  write_text_atomic(dir / (stem + ".summary.json"), summary.dump(2) + "\n");
  write_text_atomic(dir / (stem + ".report.txt"), format_eval_report(result));
  return result;
}

}  // namespace figqa
