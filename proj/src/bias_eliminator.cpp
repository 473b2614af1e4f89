#include "upcs/bias_eliminator.hpp"

#include <fstream>
#include <sstream>

#include "upcs/errors.hpp"
#include "upcs/rng.hpp"

namespace upcs {

using nlohmann::json;

namespace {

std::string trim(std::string_view s) {
  const auto begin = s.find_first_not_of(" \t\r\n");
  if (begin == std::string_view::npos) return {};
  const auto end = s.find_last_not_of(" \t\r\n");
  return std::string(s.substr(begin, end - begin + 1));
}

std::vector<std::vector<std::string>> tokenize_entries(
    const std::vector<LexiconEntry>& entries) {
  std::vector<std::vector<std::string>> docs;
  docs.reserve(entries.size());
  for (const auto& entry : entries) docs.push_back(tokenize(entry.expression));
  return docs;
}

}  // namespace

BiasLexicon load_lexicon(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ParseError("cannot open lexicon: " + path.string());
  BiasLexicon lexicon;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (trim(line).empty()) continue;
    json j;
    try {
      j = json::parse(line);
    } catch (const json::exception& e) {
      throw ParseError(std::string("invalid JSON: ") + e.what(), line_no);
    }
    if (line_no == 1 && j.contains("schema")) {
      lexicon.version = j.value("version", "unversioned");
      continue;
    }
    try {
      lexicon.entries.push_back(
          {j.at("expression").get<std::string>(), j.value("category", "")});
    } catch (const json::exception& e) {
      throw ParseError(std::string("bad lexicon entry: ") + e.what(), line_no);
    }
  }
  validate_lexicon(lexicon);
  return lexicon;
}

void validate_lexicon(const BiasLexicon& lexicon) {
  if (lexicon.entries.empty()) throw ValidationError("lexicon has no entries");
  for (const auto& entry : lexicon.entries) {
    if (trim(entry.expression).empty()) {
      throw ValidationError("lexicon contains an empty expression");
    }
  }
}

HashReviewer::HashReviewer(std::uint64_t seed, int bias_percent, int rereview_bias_percent)
    : seed_(seed), bias_percent_(bias_percent), rereview_bias_percent_(rereview_bias_percent) {
  if (bias_percent < 0 || bias_percent > 100 || rereview_bias_percent < 0 ||
      rereview_bias_percent > 100) {
    throw ValidationError("bias percentages must lie in [0, 100]");
  }
}

BiasReviewVerdict HashReviewer::review(const std::string& sentence,
                                       const ReviewContext& context) {
  const std::uint64_t salt = context.pass == ReviewPass::initial ? 0x1 : 0x2;
  const std::uint64_t h = rng::mix(seed_ ^ salt, rng::fnv1a64(sentence));
  const int percent =
      context.pass == ReviewPass::initial ? bias_percent_ : rereview_bias_percent_;
  BiasReviewVerdict verdict;
  verdict.sentence = sentence;
  verdict.biased = static_cast<int>(h % 100) < percent;
  verdict.rationale = verdict.biased ? "mock verdict: biased" : "mock verdict: clean";
  verdict.reviewer_id = "mock-hash";
  return verdict;
}

RemoteReviewer::RemoteReviewer(ChatClient& client, PromptTemplate prompt, int max_retries)
    : client_(&client), prompt_(std::move(prompt)), max_retries_(max_retries) {
  if (max_retries_ < 0) throw ValidationError("max retries must be >= 0");
}

BiasReviewVerdict RemoteReviewer::review(const std::string& sentence,
                                         const ReviewContext& context) {
  const std::string rendered = prompt_.render({
      {"sentence", sentence},
      {"pass", context.pass == ReviewPass::initial ? "initial" : "re_review"},
      {"matched_expression", context.matched_expression},
  });
  std::string last_raw;
  for (int attempt = 0; attempt <= max_retries_; ++attempt) {
    const std::string completion = client_->complete({{"user", rendered}});
    try {
      return parse_review_verdict(completion, sentence);
    } catch (const GenerationError&) {
      last_raw = completion;
    }
  }
  throw GenerationError("review verdict unparseable after retries", last_raw);
}

BiasReviewVerdict parse_review_verdict(const std::string& completion,
                                       const std::string& sentence) {
  const json j = extract_fenced_json(completion);
  if (!j.contains("verdict") || !j["verdict"].is_string()) {
    throw GenerationError("verdict field missing", completion);
  }
  const std::string verdict = j["verdict"].get<std::string>();
  if (verdict != "biased" && verdict != "clean") {
    throw GenerationError("verdict must be \"biased\" or \"clean\", got " + verdict,
                          completion);
  }
  BiasReviewVerdict out;
  out.sentence = sentence;
  out.biased = verdict == "biased";
  out.rationale = j.value("rationale", "");
  out.reviewer_id = "remote";
  return out;
}

std::vector<std::string> split_sentences(std::string_view text) {
  std::vector<std::string> sentences;
  std::size_t start = 0;
  for (std::size_t i = 0; i < text.size(); ++i) {
    const char c = text[i];
    if (c != '.' && c != '!' && c != '?') continue;
    const bool at_end = i + 1 == text.size();
    const char next = at_end ? ' ' : text[i + 1];
    if (at_end || next == ' ' || next == '\t' || next == '\n' || next == '\r') {
      std::string sentence = trim(text.substr(start, i - start + 1));
      if (!sentence.empty()) sentences.push_back(std::move(sentence));
      start = i + 1;
    }
  }
  if (start < text.size()) {
    std::string tail = trim(text.substr(start));
    if (!tail.empty()) sentences.push_back(std::move(tail));
  }
  return sentences;
}

LexiconScreener::LexiconScreener(const BiasLexicon& lexicon, Bm25Params params,
                                 double threshold)
    : entries_(lexicon.entries),
      index_(tokenize_entries(lexicon.entries)),
      params_(params),
      threshold_(threshold) {
  validate_lexicon(lexicon);
  if (threshold < 0.0 || threshold > 1.0) {
    throw ValidationError("screen threshold must lie in [0, 1]");
  }
}

ScreenResult LexiconScreener::screen(const std::string& sentence) const {
  ScreenResult result;
  const auto query = tokenize(sentence);
  if (query.empty()) return result;
  for (std::size_t i = 0; i < entries_.size(); ++i) {
    const double score = bm25_normalized(index_, query, i, params_);
    if (!result.matched_entry || score > result.best_score) {
      result.best_score = score;
      result.matched_entry = i;
    }
  }
  result.flagged = result.best_score > threshold_;
  return result;
}

ScreenResult screen_sentence(const std::string& sentence, const BiasLexicon& lexicon,
                             const Bm25Params& params, double threshold) {
  return LexiconScreener(lexicon, params, threshold).screen(sentence);
}

namespace {

// Shared by the seven text dimensions and external free_text: runs the
// review pass then the screen + re-review pass over one dimension's
// sentences, appending deletions to the report.
std::vector<std::string> debias_sentences(const std::vector<std::string>& sentences,
                                          const std::string& persona_id,
                                          DimensionKey dimension, BiasReviewer& reviewer,
                                          const LexiconScreener& screener,
                                          const std::vector<LexiconEntry>& entries,
                                          PersonaDebias& persona_report,
                                          DebiasReport& report) {
  std::vector<std::string> survivors;
  for (const auto& sentence : sentences) {
    const auto verdict = reviewer.review(sentence, ReviewContext{});
    if (verdict.biased) {
      persona_report.deletions.push_back({persona_id, dimension, sentence,
                                          ReviewPass::initial, verdict.rationale, 0.0,
                                          ""});
      ++report.reviewer_deleted;
    } else {
      survivors.push_back(sentence);
    }
  }

  std::vector<std::string> kept;
  for (const auto& sentence : survivors) {
    const ScreenResult screen = screener.screen(sentence);
    if (!screen.flagged) {
      kept.push_back(sentence);
      continue;
    }
    ++report.screen_flagged;
    ReviewContext context;
    context.pass = ReviewPass::re_review;
    context.screen_score = screen.best_score;
    context.matched_expression = entries[*screen.matched_entry].expression;
    const auto verdict = reviewer.review(sentence, context);
    if (verdict.biased) {
      persona_report.deletions.push_back({persona_id, dimension, sentence,
                                          ReviewPass::re_review, verdict.rationale,
                                          screen.best_score,
                                          context.matched_expression});
      ++report.rereview_deleted;
    } else {
      kept.push_back(sentence);
    }
  }
  return kept;
}

std::string join_sentences(const std::vector<std::string>& sentences) {
  std::string out;
  for (const auto& s : sentences) {
    if (!out.empty()) out += ' ';
    out += s;
  }
  return out;
}

}  // namespace

std::pair<PersonaSet, DebiasReport> eliminate(const PersonaSet& set,
                                              BiasReviewer& reviewer,
                                              const BiasLexicon& lexicon,
                                              const EliminateConfig& config) {
  if (set.stage != SetStage::initial) {
    throw ValidationError("eliminate requires a set in stage initial, got " +
                          std::string(stage_name(set.stage)));
  }
  const LexiconScreener screener(lexicon, config.bm25, config.screen_threshold);

  PersonaSet output;
  output.stage = SetStage::incomplete_debiased;
  DebiasReport report;

  for (const Persona& persona : set.personas) {
    Persona out;
    out.id = persona.id;
    out.provenance = persona.provenance;
    out.provenance.push_back("debias");

    PersonaDebias persona_report;
    persona_report.persona_id = persona.id;

    for (DimensionKey key : kAllDimensions) {
      auto it = persona.dimensions.find(key);
      if (it == persona.dimensions.end()) continue;

      if (const auto* text = std::get_if<TextDimension>(&it->second)) {
        const auto sentences = split_sentences(text->text);
        persona_report.input_sentences += sentences.size();
        const auto kept =
            debias_sentences(sentences, persona.id, key, reviewer, screener,
                             lexicon.entries, persona_report, report);
        persona_report.output_sentences += kept.size();
        if (kept.empty()) {
          persona_report.emptied_dimensions.push_back(key);
        } else {
          TextDimension survived;
          survived.text = join_sentences(kept);
          survived.attributes = text->attributes;
          out.dimensions.emplace(key, std::move(survived));
        }
        continue;
      }

      // external_features: only the free text holds sentences to review;
      // structured fields pass through untouched.
      ExternalFeatures ext = std::get<ExternalFeatures>(it->second);
      if (ext.free_text) {
        const auto sentences = split_sentences(*ext.free_text);
        persona_report.input_sentences += sentences.size();
        const auto kept =
            debias_sentences(sentences, persona.id, key, reviewer, screener,
                             lexicon.entries, persona_report, report);
        persona_report.output_sentences += kept.size();
        if (kept.empty()) {
          ext.free_text.reset();
        } else {
          ext.free_text = join_sentences(kept);
        }
      }
      if (ext.age || ext.race || ext.gender || ext.free_text) {
        out.dimensions.emplace(key, std::move(ext));
      } else {
        persona_report.emptied_dimensions.push_back(key);
      }
    }

    report.personas.push_back(std::move(persona_report));
    output.personas.push_back(std::move(out));
  }
  return {std::move(output), std::move(report)};
}

json DebiasReport::to_json() const {
  json personas_json = json::array();
  for (const auto& p : personas) {
    json deletions = json::array();
    for (const auto& d : p.deletions) {
      json entry{{"dimension", dimension_name(d.dimension)},
                 {"sentence", d.sentence},
                 {"phase", d.phase == ReviewPass::initial ? "review" : "re_review"},
                 {"rationale", d.rationale}};
      if (d.phase == ReviewPass::re_review) {
        entry["screen_score"] = d.screen_score;
        entry["matched_expression"] = d.matched_expression;
      }
      deletions.push_back(std::move(entry));
    }
    json emptied = json::array();
    for (DimensionKey key : p.emptied_dimensions) emptied.push_back(dimension_name(key));
    personas_json.push_back({{"persona_id", p.persona_id},
                             {"input_sentences", p.input_sentences},
                             {"output_sentences", p.output_sentences},
                             {"deletions", deletions},
                             {"emptied_dimensions", emptied}});
  }
  return json{{"schema", "upcs-debias-report/1"},
              {"reviewer_deleted", reviewer_deleted},
              {"screen_flagged", screen_flagged},
              {"rereview_deleted", rereview_deleted},
              {"personas", personas_json}};
}

}  // namespace upcs
