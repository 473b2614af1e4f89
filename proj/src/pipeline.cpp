#include "upcs/pipeline.hpp"

#include <chrono>
#include <cstdio>
#include <fstream>
#include <memory>
#include <sstream>

#include "upcs/bias_eliminator.hpp"
#include "upcs/bias_metrics.hpp"
#include "upcs/collaborative_filler.hpp"
#include "upcs/embedding.hpp"
#include "upcs/errors.hpp"
#include "upcs/generator.hpp"
#include "upcs/resampler.hpp"
#include "upcs/rng.hpp"

namespace upcs {

using nlohmann::json;

namespace {

constexpr std::string_view kConfigSchema = "upcs-config/1";

std::string resolve_path(const std::string& value, const std::filesystem::path& base_dir) {
  if (value.empty()) return value;
  std::filesystem::path p(value);
  if (p.is_absolute()) return p.lexically_normal().string();
  return (base_dir / p).lexically_normal().string();
}

template <typename T>
void read_field(const json& j, const char* name, T& target,
                std::vector<std::string>& violations, const std::string& prefix) {
  if (!j.contains(name)) return;
  try {
    target = j.at(name).get<T>();
  } catch (const json::exception&) {
    violations.push_back(prefix + name + ": wrong type");
  }
}

}  // namespace

std::string_view stage_label(Stage stage) {
  switch (stage) {
    case Stage::generate: return "generate";
    case Stage::debias: return "debias";
    case Stage::fill: return "fill";
    case Stage::resample: return "resample";
    case Stage::evaluate: return "evaluate";
  }
  return "";
}

std::optional<Stage> stage_from_label(std::string_view label) {
  for (Stage stage : {Stage::generate, Stage::debias, Stage::fill, Stage::resample,
                      Stage::evaluate}) {
    if (stage_label(stage) == label) return stage;
  }
  return std::nullopt;
}

PipelineConfig parse_config(const json& j, const std::filesystem::path& base_dir) {
  std::vector<std::string> violations;
  PipelineConfig config;

  if (!j.is_object()) {
    throw ValidationError("config root must be a JSON object");
  }
  if (j.contains("schema") && j.at("schema") != kConfigSchema) {
    violations.push_back("schema: expected upcs-config/1");
  }
  read_field(j, "seed", config.seed, violations, "");
  read_field(j, "concurrency", config.concurrency, violations, "");

  if (j.contains("weights")) {
    const auto& w = j.at("weights");
    read_field(w, "alpha", config.weights.alpha, violations, "weights.");
    read_field(w, "beta", config.weights.beta, violations, "weights.");
  }
  if (j.contains("bm25")) {
    const auto& b = j.at("bm25");
    read_field(b, "k1", config.bm25.k1, violations, "bm25.");
    read_field(b, "b", config.bm25.b, violations, "bm25.");
  }
  if (j.contains("thresholds")) {
    const auto& t = j.at("thresholds");
    read_field(t, "screen", config.screen_threshold, violations, "thresholds.");
    read_field(t, "fill_theta", config.fill_theta, violations, "thresholds.");
  }
  if (j.contains("generator")) {
    const auto& g = j.at("generator");
    read_field(g, "backend", config.generator.backend, violations, "generator.");
    read_field(g, "endpoint", config.generator.endpoint, violations, "generator.");
    read_field(g, "model", config.generator.model, violations, "generator.");
    read_field(g, "temperature", config.generator.temperature, violations, "generator.");
    read_field(g, "max_retries", config.generator.max_retries, violations, "generator.");
  }
  if (j.contains("embedder")) {
    const auto& e = j.at("embedder");
    read_field(e, "backend", config.embedder.backend, violations, "embedder.");
    read_field(e, "dimension", config.embedder.dimension, violations, "embedder.");
    read_field(e, "endpoint", config.embedder.endpoint, violations, "embedder.");
    read_field(e, "model", config.embedder.model, violations, "embedder.");
    read_field(e, "timeout_ms", config.embedder.timeout_ms, violations, "embedder.");
  }
  if (j.contains("reviewer")) {
    const auto& r = j.at("reviewer");
    read_field(r, "backend", config.reviewer.backend, violations, "reviewer.");
    read_field(r, "bias_percent", config.reviewer.bias_percent, violations, "reviewer.");
    read_field(r, "endpoint", config.reviewer.endpoint, violations, "reviewer.");
    read_field(r, "model", config.reviewer.model, violations, "reviewer.");
    read_field(r, "max_retries", config.reviewer.max_retries, violations, "reviewer.");
  }
  if (j.contains("scorer")) {
    const auto& s = j.at("scorer");
    read_field(s, "backend", config.scorer.backend, violations, "scorer.");
    read_field(s, "endpoint", config.scorer.endpoint, violations, "scorer.");
    read_field(s, "model", config.scorer.model, violations, "scorer.");
  }
  if (j.contains("io")) {
    const auto& io = j.at("io");
    read_field(io, "work_dir", config.io.work_dir, violations, "io.");
    read_field(io, "seed_prompts", config.io.seed_prompts, violations, "io.");
    read_field(io, "lexicon", config.io.lexicon, violations, "io.");
    read_field(io, "distribution", config.io.distribution, violations, "io.");
    read_field(io, "transcripts", config.io.transcripts, violations, "io.");
    read_field(io, "prompts_dir", config.io.prompts_dir, violations, "io.");
  }

  // Invariants. Violations accumulate; nothing is fail-fast.
  if (config.weights.alpha < 0.0) violations.push_back("weights.alpha: must be >= 0");
  if (config.weights.beta < 0.0) violations.push_back("weights.beta: must be >= 0");
  if (config.weights.alpha >= 0.0 && config.weights.beta >= 0.0 &&
      config.weights.alpha + config.weights.beta <= 0.0) {
    violations.push_back("weights: alpha + beta must be positive");
  }
  if (!(config.bm25.k1 > 0.0)) violations.push_back("bm25.k1: must be > 0");
  if (config.bm25.b < 0.0 || config.bm25.b > 1.0) {
    violations.push_back("bm25.b: must lie in [0, 1]");
  }
  if (config.screen_threshold < 0.0 || config.screen_threshold > 1.0) {
    violations.push_back("thresholds.screen: must lie in [0, 1]");
  }
  if (config.fill_theta < 0.0 || config.fill_theta > 1.0) {
    violations.push_back("thresholds.fill_theta: must lie in [0, 1]");
  }
  if (config.concurrency < 1) violations.push_back("concurrency: must be >= 1");
  if (config.embedder.dimension < 2) {
    violations.push_back("embedder.dimension: must be >= 2");
  }
  if (config.generator.max_retries < 0) {
    violations.push_back("generator.max_retries: must be >= 0");
  }
  if (config.reviewer.max_retries < 0) {
    violations.push_back("reviewer.max_retries: must be >= 0");
  }
  if (config.reviewer.bias_percent < 0 || config.reviewer.bias_percent > 100) {
    violations.push_back("reviewer.bias_percent: must lie in [0, 100]");
  }
  auto check_backend = [&violations](const char* field, const std::string& value,
                                     const char* first, const char* second) {
    if (value != first && value != second) {
      violations.push_back(std::string(field) + ": must be " + first + " or " + second);
    }
  };
  check_backend("generator.backend", config.generator.backend, "mock", "remote");
  check_backend("embedder.backend", config.embedder.backend, "hash", "remote");
  check_backend("reviewer.backend", config.reviewer.backend, "mock", "remote");
  check_backend("scorer.backend", config.scorer.backend, "lexicon", "remote");
  const bool any_remote = config.generator.backend == "remote" ||
                          config.reviewer.backend == "remote";
  if (config.generator.backend == "remote" && config.generator.endpoint.empty()) {
    violations.push_back("generator.endpoint: required for the remote backend");
  }
  if (config.embedder.backend == "remote" && config.embedder.endpoint.empty()) {
    violations.push_back("embedder.endpoint: required for the remote backend");
  }
  if (config.reviewer.backend == "remote" && config.reviewer.endpoint.empty()) {
    violations.push_back("reviewer.endpoint: required for the remote backend");
  }
  if (config.scorer.backend == "remote" && config.scorer.endpoint.empty()) {
    violations.push_back("scorer.endpoint: required for the remote backend");
  }

  // Path resolution and existence. work_dir is created on demand;
  // transcripts and prompts_dir are only required when used (evaluate
  // stage, remote chat backends), but must resolve whenever set.
  config.io.work_dir = resolve_path(config.io.work_dir, base_dir);
  auto check_path = [&violations, &base_dir](const char* name, std::string& path,
                                             bool required) {
    if (path.empty()) {
      if (required) violations.push_back(std::string(name) + ": path missing");
      return;
    }
    path = resolve_path(path, base_dir);
    if (!std::filesystem::exists(path)) {
      violations.push_back(std::string(name) + ": does not exist: " + path);
    }
  };
  check_path("io.seed_prompts", config.io.seed_prompts, true);
  check_path("io.lexicon", config.io.lexicon, true);
  check_path("io.distribution", config.io.distribution, true);
  check_path("io.transcripts", config.io.transcripts, false);
  check_path("io.prompts_dir", config.io.prompts_dir, any_remote);
  if (config.io.work_dir.empty()) violations.push_back("io.work_dir: path missing");

  if (!violations.empty()) throw ValidationError(std::move(violations));
  return config;
}

PipelineConfig validate_config(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ValidationError("cannot open config: " + path.string());
  std::ostringstream buffer;
  buffer << in.rdbuf();
  const std::string content = buffer.str();
  json j;
  if (content.find_first_not_of(" \t\r\n") == std::string::npos) {
    j = json::object();  // empty file: defaults plus missing-path errors
  } else {
    try {
      j = json::parse(content);
    } catch (const json::exception& e) {
      throw ValidationError(std::string("config is not valid JSON: ") + e.what());
    }
  }
  return parse_config(j, std::filesystem::absolute(path).parent_path());
}

json PipelineConfig::to_json() const {
  return json{
      {"schema", kConfigSchema},
      {"seed", seed},
      {"concurrency", concurrency},
      {"weights", {{"alpha", weights.alpha}, {"beta", weights.beta}}},
      {"bm25", {{"k1", bm25.k1}, {"b", bm25.b}}},
      {"thresholds", {{"screen", screen_threshold}, {"fill_theta", fill_theta}}},
      {"generator",
       {{"backend", generator.backend},
        {"endpoint", generator.endpoint},
        {"model", generator.model},
        {"temperature", generator.temperature},
        {"max_retries", generator.max_retries}}},
      {"embedder",
       {{"backend", embedder.backend},
        {"dimension", embedder.dimension},
        {"endpoint", embedder.endpoint},
        {"model", embedder.model},
        {"timeout_ms", embedder.timeout_ms}}},
      {"reviewer",
       {{"backend", reviewer.backend},
        {"bias_percent", reviewer.bias_percent},
        {"endpoint", reviewer.endpoint},
        {"model", reviewer.model},
        {"max_retries", reviewer.max_retries}}},
      {"scorer",
       {{"backend", scorer.backend},
        {"endpoint", scorer.endpoint},
        {"model", scorer.model}}},
      {"io",
       {{"work_dir", io.work_dir},
        {"seed_prompts", io.seed_prompts},
        {"lexicon", io.lexicon},
        {"distribution", io.distribution},
        {"transcripts", io.transcripts},
        {"prompts_dir", io.prompts_dir}}},
  };
}

void write_file_atomic(const std::filesystem::path& path, const std::string& payload) {
  const std::filesystem::path tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error("cannot write " + tmp.string());
    out.write(payload.data(), static_cast<std::streamsize>(payload.size()));
    if (!out.good()) throw Error("write failed: " + tmp.string());
  }
  std::filesystem::rename(tmp, path);
}

std::filesystem::path stage_set_path(const PipelineConfig& config, Stage stage) {
  const std::filesystem::path dir(config.io.work_dir);
  switch (stage) {
    case Stage::generate: return dir / "initial.jsonl";
    case Stage::debias: return dir / "incomplete_debiased.jsonl";
    case Stage::fill: return dir / "debiased.jsonl";
    case Stage::resample: return dir / "unbiased.jsonl";
    case Stage::evaluate: return dir / "metrics.json";
  }
  throw Error("unknown stage");
}

std::filesystem::path stage_report_path(const PipelineConfig& config, Stage stage) {
  return std::filesystem::path(config.io.work_dir) /
         ("report_" + std::string(stage_label(stage)) + ".json");
}

namespace {

struct Providers {
  std::unique_ptr<ChatClient> generator_chat;
  std::unique_ptr<DescriptionGenerator> generator;
  std::unique_ptr<EmbeddingProvider> embedder;
  std::unique_ptr<ChatClient> reviewer_chat;
  std::unique_ptr<BiasReviewer> reviewer;
  std::unique_ptr<SentenceScorer> scorer;
};

std::unique_ptr<DescriptionGenerator> make_generator(const PipelineConfig& config,
                                                     Providers& providers) {
  if (config.generator.backend == "mock") {
    return std::make_unique<MockGenerator>(config.seed);
  }
  RemoteChatConfig chat;
  chat.endpoint = config.generator.endpoint;
  chat.model = config.generator.model;
  chat.temperature = config.generator.temperature;
  providers.generator_chat = std::make_unique<RemoteChatClient>(chat);
  return std::make_unique<RemoteGenerator>(*providers.generator_chat,
                                           GeneratorPrompts::load(config.io.prompts_dir),
                                           config.generator.max_retries);
}

std::unique_ptr<EmbeddingProvider> make_embedder(const PipelineConfig& config) {
  if (config.embedder.backend == "hash") {
    return std::make_unique<HashEmbedder>(config.embedder.dimension);
  }
  RemoteEmbedderConfig remote;
  remote.endpoint = config.embedder.endpoint;
  remote.model = config.embedder.model;
  remote.dimension = 0;  // accept the service's native dimension
  remote.timeout_ms = config.embedder.timeout_ms;
  remote.max_in_flight = config.concurrency;
  return std::make_unique<RemoteEmbedder>(remote);
}

std::unique_ptr<BiasReviewer> make_reviewer(const PipelineConfig& config,
                                            Providers& providers) {
  if (config.reviewer.backend == "mock") {
    return std::make_unique<HashReviewer>(config.seed, config.reviewer.bias_percent);
  }
  RemoteChatConfig chat;
  chat.endpoint = config.reviewer.endpoint;
  chat.model = config.reviewer.model;
  chat.temperature = 0.0;
  providers.reviewer_chat = std::make_unique<RemoteChatClient>(chat);
  const auto prompt = PromptTemplate::load(
      std::filesystem::path(config.io.prompts_dir) / "bias_review.v1.txt");
  return std::make_unique<RemoteReviewer>(*providers.reviewer_chat, prompt,
                                          config.reviewer.max_retries);
}

std::unique_ptr<SentenceScorer> make_scorer(const PipelineConfig& config,
                                            const BiasLexicon& lexicon) {
  if (config.scorer.backend == "lexicon") {
    return std::make_unique<LexiconScorer>(lexicon, config.bm25);
  }
  RemoteScorerConfig remote;
  remote.endpoint = config.scorer.endpoint;
  remote.model = config.scorer.model;
  return std::make_unique<RemoteScorer>(remote);
}

void require_stage_input(const std::filesystem::path& path, std::string_view producer) {
  if (!std::filesystem::exists(path)) {
    throw DependencyError("missing " + path.string() + "; run the " +
                          std::string(producer) + " stage first");
  }
}

void refuse_overwrite(const std::filesystem::path& path, bool force) {
  if (!force && std::filesystem::exists(path)) {
    throw ValidationError(path.string() + " exists; pass --force to overwrite");
  }
}

std::vector<std::string> read_prompt_lines(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ValidationError("cannot open seed prompts: " + path.string());
  std::vector<std::string> prompts;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.find_first_not_of(" \t") == std::string::npos) continue;
    prompts.push_back(line);
  }
  return prompts;
}

StageResult run_generate(const PipelineConfig& config, bool force) {
  const auto set_path = stage_set_path(config, Stage::generate);
  const auto report_path = stage_report_path(config, Stage::generate);
  refuse_overwrite(set_path, force);

  const auto prompts = read_prompt_lines(config.io.seed_prompts);
  if (prompts.empty()) {
    throw ValidationError("seed prompt file has no prompts: " + config.io.seed_prompts);
  }

  Providers providers;
  providers.generator = make_generator(config, providers);

  PersonaSet set;
  set.stage = SetStage::initial;
  for (std::size_t i = 0; i < prompts.size(); ++i) {
    const auto desc = providers.generator->generate_description(prompts[i]);
    // Stable ids: position plus a short content hash.
    char suffix[17];
    std::snprintf(suffix, sizeof suffix, "%08llx",
                  static_cast<unsigned long long>(rng::fnv1a64(prompts[i]) & 0xffffffffULL));
    const std::string id = "p" + std::to_string(i + 1) + "-" + suffix;
    set.personas.push_back(providers.generator->build_initial_persona(desc, id));
  }
  validate_set(set);

  std::filesystem::create_directories(config.io.work_dir);
  save_set(set, set_path);
  StageResult result;
  result.stage = Stage::generate;
  result.report = json{{"schema", "upcs-generate-report/1"},
                       {"backend", config.generator.backend},
                       {"prompts", prompts.size()},
                       {"personas", set.personas.size()}};
  write_file_atomic(report_path, result.report.dump(2) + "\n");
  result.artifacts = {set_path, report_path};
  return result;
}

StageResult run_debias(const PipelineConfig& config, bool force) {
  const auto input_path = stage_set_path(config, Stage::generate);
  const auto set_path = stage_set_path(config, Stage::debias);
  const auto report_path = stage_report_path(config, Stage::debias);
  require_stage_input(input_path, stage_label(Stage::generate));
  refuse_overwrite(set_path, force);

  const PersonaSet input = load_set(input_path);
  const BiasLexicon lexicon = load_lexicon(config.io.lexicon);
  Providers providers;
  providers.reviewer = make_reviewer(config, providers);

  EliminateConfig eliminate_config;
  eliminate_config.bm25 = config.bm25;
  eliminate_config.screen_threshold = config.screen_threshold;
  auto [output, report] = eliminate(input, *providers.reviewer, lexicon, eliminate_config);

  std::filesystem::create_directories(config.io.work_dir);
  save_set(output, set_path);
  StageResult result;
  result.stage = Stage::debias;
  result.report = report.to_json();
  write_file_atomic(report_path, result.report.dump(2) + "\n");
  result.artifacts = {set_path, report_path};
  return result;
}

StageResult run_fill(const PipelineConfig& config, bool force) {
  const auto input_path = stage_set_path(config, Stage::debias);
  const auto set_path = stage_set_path(config, Stage::fill);
  const auto report_path = stage_report_path(config, Stage::fill);
  require_stage_input(input_path, stage_label(Stage::debias));
  refuse_overwrite(set_path, force);

  const PersonaSet input = load_set(input_path);
  auto embedder = make_embedder(config);

  FillConfig fill_config;
  fill_config.weights = config.weights;
  fill_config.theta = config.fill_theta;
  fill_config.bm25 = config.bm25;
  auto [output, records] = fill(input, *embedder, fill_config);

  std::filesystem::create_directories(config.io.work_dir);
  save_set(output, set_path);
  StageResult result;
  result.stage = Stage::fill;
  result.report = fill_records_to_json(records);
  write_file_atomic(report_path, result.report.dump(2) + "\n");
  result.artifacts = {set_path, report_path};
  return result;
}

StageResult run_resample(const PipelineConfig& config, bool force) {
  const auto input_path = stage_set_path(config, Stage::debias);
  const auto set_path = stage_set_path(config, Stage::resample);
  const auto report_path = stage_report_path(config, Stage::resample);
  require_stage_input(input_path, stage_label(Stage::debias));
  refuse_overwrite(set_path, force);

  const PersonaSet input = load_set(input_path);
  const DistributionSpec spec = load_distribution(config.io.distribution);
  auto [output, report] = resample_set(input, spec, config.seed);

  std::filesystem::create_directories(config.io.work_dir);
  save_set(output, set_path);
  StageResult result;
  result.stage = Stage::resample;
  result.report = report.to_json();
  write_file_atomic(report_path, result.report.dump(2) + "\n");
  result.artifacts = {set_path, report_path};
  return result;
}

StageResult run_evaluate(const PipelineConfig& config, bool force) {
  const auto report_path = stage_report_path(config, Stage::evaluate);
  refuse_overwrite(report_path, force);
  if (config.io.transcripts.empty() || !std::filesystem::exists(config.io.transcripts)) {
    throw ValidationError("evaluate needs io.transcripts");
  }

  const auto entries = load_transcripts(config.io.transcripts);
  if (entries.empty()) throw ValidationError("transcripts file has no entries");
  const BiasLexicon lexicon = load_lexicon(config.io.lexicon);
  auto scorer = make_scorer(config, lexicon);

  // Pool every system's sentences, score, rank.
  std::map<std::string, std::vector<std::string>> by_system;
  for (const auto& entry : entries) by_system[entry.system].push_back(entry.sentence);

  std::vector<ScoredSentence> pool;
  for (const auto& [system, sentences] : by_system) {
    const auto scored = score_sentences(sentences, *scorer, system);
    pool.insert(pool.end(), scored.begin(), scored.end());
  }
  const RankResult ranks = average_rank(pool);

  json report{{"schema", "upcs-evaluate-report/1"},
              {"scorer", config.scorer.backend},
              {"rank", rank_result_to_json(ranks)}};

  // Pairwise bias quantity when exactly two systems are present.
  if (by_system.size() == 2) {
    auto it = by_system.begin();
    const auto& [left_system, left_sentences] = *it;
    ++it;
    const auto& [right_system, right_sentences] = *it;
    auto comparator = ScoreDiffComparator(*scorer);
    const BiasQuantity quantity = bias_quantity(left_sentences, right_sentences,
                                                comparator, left_system, right_system);
    report["bias_quantity"] = bias_quantity_to_json(quantity);
  }

  std::filesystem::create_directories(config.io.work_dir);
  StageResult result;
  result.stage = Stage::evaluate;
  result.report = report;
  write_file_atomic(report_path, report.dump(2) + "\n");
  result.artifacts = {report_path};
  return result;
}

}  // namespace

StageResult run_stage(Stage stage, const PipelineConfig& config, bool force) {
  switch (stage) {
    case Stage::generate: return run_generate(config, force);
    case Stage::debias: return run_debias(config, force);
    case Stage::fill: return run_fill(config, force);
    case Stage::resample: return run_resample(config, force);
    case Stage::evaluate: return run_evaluate(config, force);
  }
  throw Error("unknown stage");
}

PipelineReport run_all(const PipelineConfig& config, bool force) {
  PipelineReport report;
  report.seed = config.seed;
  report.config_snapshot = config.to_json();
  for (Stage stage : {Stage::generate, Stage::debias, Stage::fill, Stage::resample}) {
    const auto start = std::chrono::steady_clock::now();
    report.stages.push_back(run_stage(stage, config, force));
    const auto elapsed = std::chrono::steady_clock::now() - start;
    report.stage_ms.push_back(
        std::chrono::duration<double, std::milli>(elapsed).count());
  }
  const auto merged_path = std::filesystem::path(config.io.work_dir) / "pipeline_report.json";
  write_file_atomic(merged_path, report.to_json().dump(2) + "\n");
  return report;
}

json PipelineReport::to_json() const {
  // Wall-clock timings stay out of the serialized report so that equal
  // (inputs, config, seed) runs produce byte-identical artifacts.
  json stages_json = json::array();
  for (const auto& stage : stages) {
    json artifacts = json::array();
    for (const auto& path : stage.artifacts) artifacts.push_back(path.string());
    stages_json.push_back({{"name", stage_label(stage.stage)},
                           {"artifacts", artifacts},
                           {"report", stage.report}});
  }
  return json{{"schema", "upcs-pipeline-report/1"},
              {"seed", seed},
              {"config", config_snapshot},
              {"stages", stages_json}};
}

}  // namespace upcs
