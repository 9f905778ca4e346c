#pragma once

#include <array>
#include <filesystem>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "figqa/dataset.hpp"
#include "figqa/eval_harness.hpp"
#include "figqa/gateway.hpp"
#include "figqa/jsonl.hpp"
#include "figqa/latex_prep.hpp"
#include "figqa/run_config.hpp"
#include "figqa/templates.hpp"

namespace figqa {

enum class Stage { kPrepare, kExtract, kGenerate, kVerify, kAnnotate };

inline constexpr std::array<Stage, 5> kBatchStages = {Stage::kPrepare, Stage::kExtract, Stage::kGenerate,
                                                      Stage::kVerify, Stage::kAnnotate};

std::string_view to_string(Stage stage);

/// One corpus paper before LaTeX loading: metadata plus figure-caption pairs.
struct CorpusPaper {
  std::string arxiv_id;
  std::string primary_category;
  std::vector<FigureCaptionPair> figures;
};

/// Groups line-delimited corpus records by arxiv_id in first-seen order.
/// Relative image paths resolve against the corpus file's directory.
std::vector<CorpusPaper> read_corpus(const std::filesystem::path& path);

/// Seeded Fisher-Yates shuffle of the paper pool.
void shuffle_papers(std::vector<CorpusPaper>& papers, std::uint64_t seed);

struct StageReport {
  Stage stage;
  std::size_t batch = 0;
  bool skipped = false;  // already complete with the same config
  bool complete = true;  // false when items remain deferred
  Json manifest;
};

/// Stage orchestration over batch directories "<output>/batch-NNNN". Stage
/// files are the only interface between stages.
class Pipeline {
 public:
  /// `backend` overrides every endpoint (mock runs); otherwise endpoints use HTTP.
  explicit Pipeline(RunConfig config, std::shared_ptr<ModelBackend> backend = nullptr);

  std::size_t batch_count() const;
  std::filesystem::path batch_dir(std::size_t batch) const;

  StageReport run_stage(Stage stage, std::size_t batch);
  StageReport prepare(std::size_t batch);
  StageReport extract(std::size_t batch);
  StageReport generate(std::size_t batch);
  StageReport verify(std::size_t batch);
  StageReport annotate(std::size_t batch);

  /// Concatenates annotated records of all batches into <output>/dataset.jsonl.
  std::vector<VerifiedRecord> merge_dataset();

  /// Funnel over all batch manifests; writes funnel.json and funnel.txt.
  FunnelStats stats();

  /// Batches in order until the target size is reached; returns the final funnel.
  FunnelStats run_all();

  /// Zero-shot evaluation of the configured evaluator on a dataset file,
  /// stratified down to the configured sample size when larger.
  EvalResult evaluate(const std::filesystem::path& dataset, std::optional<std::size_t> sample_size = std::nullopt);

  const RunConfig& config() const { return config_; }

 private:
  ModelGateway& gateway(const std::string& slot);
  const TemplateLibrary& templates();
  std::optional<Json> completed_manifest(Stage stage, std::size_t batch);
  void write_manifest(Stage stage, std::size_t batch, Json manifest, bool complete);
  const std::vector<CorpusPaper>& shuffled_corpus();

  RunConfig config_;
  std::string digest_;
  std::shared_ptr<ModelBackend> backend_;
  std::optional<TemplateLibrary> templates_;
  std::map<std::string, std::unique_ptr<ModelGateway>> gateways_;
  std::optional<std::vector<CorpusPaper>> corpus_;
};

}  // namespace figqa
