#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"
#include "upcs/similarity.hpp"

namespace upcs {

struct GeneratorSettings {
  std::string backend = "mock";  // mock | remote
  std::string endpoint;
  std::string model;
  double temperature = 0.7;
  int max_retries = 2;
};

struct EmbedderSettings {
  std::string backend = "hash";  // hash | remote
  std::size_t dimension = 256;
  std::string endpoint;
  std::string model;
  int timeout_ms = 10000;
};

struct ReviewerSettings {
  std::string backend = "mock";  // mock | remote
  int bias_percent = 10;         // mock: share of sentences judged biased
  std::string endpoint;
  std::string model;
  int max_retries = 2;
};

struct ScorerSettings {
  std::string backend = "lexicon";  // lexicon | remote
  std::string endpoint;
  std::string model;
};

struct IoSettings {
  std::string work_dir;
  std::string seed_prompts;  // generate input: one prompt per line
  std::string lexicon;
  std::string distribution;
  std::string transcripts;   // evaluate input
  std::string prompts_dir;   // remote backends' prompt templates
};

// Everything a run needs, in one auditable file. Relative io paths are
// resolved against the config file's directory.
struct PipelineConfig {
  std::uint64_t seed = 0;
  SimilarityWeights weights;
  Bm25Params bm25;
  double screen_threshold = 0.75;
  double fill_theta = 0.5;
  int concurrency = 1;
  GeneratorSettings generator;
  EmbedderSettings embedder;
  ReviewerSettings reviewer;
  ScorerSettings scorer;
  IoSettings io;

  nlohmann::json to_json() const;
};

// Parses, injects defaults, checks every invariant, and resolves io
// paths. All violations are collected into one ValidationError rather
// than failing on the first.
PipelineConfig validate_config(const std::filesystem::path& path);
PipelineConfig parse_config(const nlohmann::json& j,
                            const std::filesystem::path& base_dir);

enum class Stage : std::uint8_t { generate, debias, fill, resample, evaluate };

std::string_view stage_label(Stage stage);
std::optional<Stage> stage_from_label(std::string_view label);

// Set artifact written by a stage, under io.work_dir.
std::filesystem::path stage_set_path(const PipelineConfig& config, Stage stage);
// Stage report path, under io.work_dir.
std::filesystem::path stage_report_path(const PipelineConfig& config, Stage stage);

struct StageResult {
  Stage stage = Stage::generate;
  std::vector<std::filesystem::path> artifacts;
  nlohmann::json report;
};

// Runs one stage against the artifacts on disk. Prerequisites are the
// stage DAG generate -> debias -> {fill, resample}; evaluate stands
// alone. Outputs are written atomically, and an existing output is only
// replaced when force is set.
StageResult run_stage(Stage stage, const PipelineConfig& config, bool force = false);

struct PipelineReport {
  std::uint64_t seed = 0;
  nlohmann::json config_snapshot;
  std::vector<StageResult> stages;
  std::vector<double> stage_ms;  // console diagnostics; not serialized

  nlohmann::json to_json() const;
};

// generate -> debias -> fill -> resample, then the merged report file.
PipelineReport run_all(const PipelineConfig& config, bool force = false);

// Atomic file write: temp file in the same directory, then rename.
void write_file_atomic(const std::filesystem::path& path, const std::string& payload);

}  // namespace upcs
