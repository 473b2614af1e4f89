#include <algorithm>
#include <filesystem>
#include <fstream>
#include <map>
#include <set>

#include "doctest.h"
#include "oracles.hpp"
#include "upcs/bias_eliminator.hpp"
#include "upcs/errors.hpp"

using namespace upcs;

namespace {

// Reviewer with scripted per-(sentence, pass) verdicts; everything else
// is clean.
class ScriptedReviewer final : public BiasReviewer {
 public:
  void script(const std::string& sentence, ReviewPass pass, bool biased) {
    verdicts_[{sentence, pass}] = biased;
  }

  BiasReviewVerdict review(const std::string& sentence, const ReviewContext& ctx) override {
    ++calls;
    if (ctx.pass == ReviewPass::initial) ++initial_calls;
    if (ctx.pass == ReviewPass::re_review) ++rereview_calls;
    BiasReviewVerdict verdict;
    verdict.sentence = sentence;
    verdict.reviewer_id = "scripted";
    auto it = verdicts_.find({sentence, ctx.pass});
    verdict.biased = it != verdicts_.end() && it->second;
    verdict.rationale = verdict.biased ? "scripted biased" : "scripted clean";
    return verdict;
  }

  int calls = 0;
  int initial_calls = 0;
  int rereview_calls = 0;

 private:
  std::map<std::pair<std::string, ReviewPass>, bool> verdicts_;
};

BiasLexicon small_lexicon() {
  BiasLexicon lexicon;
  lexicon.version = "test";
  lexicon.entries = {{"women are bad drivers", "gender"},
                     {"old people cannot use technology", "age"},
                     {"poor people are lazy", "class"}};
  return lexicon;
}

PersonaSet one_persona_set(const std::string& habits_text) {
  PersonaSet set;
  set.stage = SetStage::initial;
  Persona p;
  p.id = "p1";
  p.dimensions.emplace(DimensionKey::habits, TextDimension{habits_text, {"routine=x"}});
  p.dimensions.emplace(DimensionKey::experience, TextDimension{"Taught math.", {}});
  p.provenance = {"initial"};
  set.personas.push_back(p);
  return set;
}

std::size_t count_sentences(const Persona& p) {
  std::size_t n = 0;
  for (const auto& [key, value] : p.dimensions) {
    if (const auto* text = std::get_if<TextDimension>(&value)) {
      n += split_sentences(text->text).size();
    } else if (const auto& ext = std::get<ExternalFeatures>(value); ext.free_text) {
      n += split_sentences(*ext.free_text).size();
    }
  }
  return n;
}

}  // namespace

TEST_CASE("split_sentences follows the stated rule") {
  CHECK(split_sentences("").empty());
  CHECK(split_sentences("Runs daily. Reads at night!") ==
        std::vector<std::string>{"Runs daily.", "Reads at night!"});
  CHECK(split_sentences("no terminal punctuation") ==
        std::vector<std::string>{"no terminal punctuation"});
  CHECK(split_sentences("Wait... what? Yes.") ==
        std::vector<std::string>{"Wait...", "what?", "Yes."});
  CHECK(split_sentences("  spaced.   out!  ") ==
        std::vector<std::string>{"spaced.", "out!"});
}

TEST_CASE("splitting the joined survivors is stable") {
  const std::string text = "One here. Two there! Three? tail without period";
  const auto sentences = split_sentences(text);
  std::string joined;
  for (const auto& s : sentences) {
    if (!joined.empty()) joined += ' ';
    joined += s;
  }
  CHECK(split_sentences(joined) == sentences);
}

TEST_CASE("screen_sentence hits 1.0 on a lexicon entry and 0 on disjoint text") {
  const auto lexicon = small_lexicon();
  const auto hit = screen_sentence("women are bad drivers", lexicon);
  CHECK(hit.best_score == 1.0);
  CHECK(hit.flagged);
  CHECK(lexicon.entries[*hit.matched_entry].expression == "women are bad drivers");

  const auto miss = screen_sentence("gardening relaxes everyone", lexicon);
  CHECK(miss.best_score == 0.0);
  CHECK(!miss.flagged);

  const auto empty = screen_sentence("", lexicon);
  CHECK(empty.best_score == 0.0);
  CHECK(!empty.flagged);
}

TEST_CASE("screen_sentence subset score matches the ratio oracle") {
  const auto lexicon = small_lexicon();
  std::vector<oracle::TokenDoc> corpus;
  for (const auto& entry : lexicon.entries) corpus.push_back(tokenize(entry.expression));

  const std::string sentence = "old people technology";  // subset of entry 1
  double best = 0.0;
  for (std::size_t i = 0; i < corpus.size(); ++i) {
    best = std::max(best, oracle::bm25_normalized(corpus, tokenize(sentence), i));
  }
  const auto result = screen_sentence(sentence, lexicon);
  CHECK(result.best_score == doctest::Approx(best).epsilon(1e-12));
  CHECK(result.flagged == (best > 0.75));
}

TEST_CASE("eliminate is a no-op when everything is clean") {
  const auto set = one_persona_set("Runs daily. Reads at night.");
  ScriptedReviewer reviewer;
  const auto [output, report] = eliminate(set, reviewer, small_lexicon());

  CHECK(output.stage == SetStage::incomplete_debiased);
  REQUIRE(output.personas.size() == 1);
  CHECK(output.personas[0].dimensions == set.personas[0].dimensions);
  CHECK(output.personas[0].provenance ==
        std::vector<std::string>{"initial", "debias"});
  CHECK(report.reviewer_deleted == 0);
  CHECK(report.screen_flagged == 0);
  CHECK(report.rereview_deleted == 0);
}

TEST_CASE("screen flag plus biased re-review empties the dimension") {
  auto set = one_persona_set("Old people cannot use technology.");
  ScriptedReviewer reviewer;
  reviewer.script("Old people cannot use technology.", ReviewPass::re_review, true);

  const auto [output, report] = eliminate(set, reviewer, small_lexicon());
  CHECK(!output.personas[0].has(DimensionKey::habits));
  CHECK(output.personas[0].has(DimensionKey::experience));
  CHECK(report.screen_flagged == 1);
  CHECK(report.rereview_deleted == 1);
  CHECK(report.reviewer_deleted == 0);
  REQUIRE(report.personas.size() == 1);
  CHECK(report.personas[0].emptied_dimensions ==
        std::vector<DimensionKey>{DimensionKey::habits});
  REQUIRE(report.personas[0].deletions.size() == 1);
  const auto& deletion = report.personas[0].deletions[0];
  CHECK(deletion.phase == ReviewPass::re_review);
  CHECK(deletion.matched_expression == "old people cannot use technology");
  CHECK(deletion.screen_score == 1.0);
}

TEST_CASE("screen flag with clean re-review keeps the sentence") {
  auto set = one_persona_set("Old people cannot use technology.");
  ScriptedReviewer reviewer;  // re-review defaults to clean
  const auto [output, report] = eliminate(set, reviewer, small_lexicon());
  CHECK(output.personas[0].has(DimensionKey::habits));
  CHECK(report.screen_flagged == 1);
  CHECK(report.rereview_deleted == 0);
}

TEST_CASE("all-biased personas survive with every dimension absent") {
  auto set = one_persona_set("First thing. Second thing.");
  ScriptedReviewer reviewer;
  reviewer.script("First thing.", ReviewPass::initial, true);
  reviewer.script("Second thing.", ReviewPass::initial, true);
  reviewer.script("Taught math.", ReviewPass::initial, true);

  const auto [output, report] = eliminate(set, reviewer, small_lexicon());
  REQUIRE(output.personas.size() == 1);
  CHECK(output.personas[0].id == "p1");
  CHECK(output.personas[0].dimensions.empty());
  CHECK(report.reviewer_deleted == 3);
}

TEST_CASE("external feature free text is reviewed, structured fields pass through") {
  PersonaSet set;
  set.stage = SetStage::initial;
  Persona p;
  p.id = "p1";
  ExternalFeatures ext;
  ext.age = 40;
  ext.free_text = "Wears glasses. Poor people are lazy.";
  p.dimensions.emplace(DimensionKey::external_features, ext);
  set.personas.push_back(p);

  ScriptedReviewer reviewer;
  reviewer.script("Poor people are lazy.", ReviewPass::re_review, true);
  const auto [output, report] = eliminate(set, reviewer, small_lexicon());
  const auto& out_ext = std::get<ExternalFeatures>(
      output.personas[0].dimensions.at(DimensionKey::external_features));
  CHECK(out_ext.age == 40);
  CHECK(out_ext.free_text == "Wears glasses.");
  CHECK(report.rereview_deleted == 1);
}

TEST_CASE("eliminate enforces the stage precondition") {
  PersonaSet set;
  set.stage = SetStage::debiased;
  ScriptedReviewer reviewer;
  CHECK_THROWS_AS(eliminate(set, reviewer, small_lexicon()), ValidationError);
}

TEST_CASE("deletion-only, call budget and reconciliation over random runs") {
  for (std::uint64_t seed = 0; seed < 30; ++seed) {
    PersonaSet set;
    set.stage = SetStage::initial;
    for (int i = 0; i < 4; ++i) {
      Persona p;
      p.id = "p" + std::to_string(i);
      p.dimensions.emplace(
          DimensionKey::habits,
          TextDimension{"Sentence one. Sentence two seed " + std::to_string(seed) +
                            ". Old people cannot use technology. Sentence four!",
                        {}});
      p.dimensions.emplace(DimensionKey::experience,
                           TextDimension{"Unique tale " + std::to_string(i) + ".", {}});
      set.personas.push_back(p);
    }
    HashReviewer reviewer(seed, 35, 60);
    const auto [output, report] = eliminate(set, reviewer, small_lexicon());

    for (std::size_t i = 0; i < set.personas.size(); ++i) {
      // deletion-only: surviving sentences are a sub-multiset of the input
      std::multiset<std::string> input_sentences, output_sentences;
      const auto& in_dim =
          std::get<TextDimension>(set.personas[i].dimensions.at(DimensionKey::habits));
      for (const auto& s : split_sentences(in_dim.text)) input_sentences.insert(s);
      if (output.personas[i].has(DimensionKey::habits)) {
        const auto& out_dim = std::get<TextDimension>(
            output.personas[i].dimensions.at(DimensionKey::habits));
        for (const auto& s : split_sentences(out_dim.text)) output_sentences.insert(s);
      }
      for (const auto& s : output_sentences) CHECK(input_sentences.count(s) > 0);
      CHECK(std::includes(input_sentences.begin(), input_sentences.end(),
                          output_sentences.begin(), output_sentences.end()));

      // report reconciliation
      const auto& pr = report.personas[i];
      CHECK(pr.input_sentences - pr.output_sentences == pr.deletions.size());
      CHECK(pr.input_sentences == count_sentences(set.personas[i]));
      CHECK(pr.output_sentences == count_sentences(output.personas[i]));
    }
  }
}

TEST_CASE("a second pass with the same deterministic reviewer deletes nothing") {
  PersonaSet set;
  set.stage = SetStage::initial;
  for (int i = 0; i < 6; ++i) {
    Persona p;
    p.id = "p" + std::to_string(i);
    p.dimensions.emplace(
        DimensionKey::habits,
        TextDimension{"Keeps a garden " + std::to_string(i) +
                          ". Old people cannot use technology. Walks at dusk.",
                      {}});
    p.provenance = {"initial"};
    set.personas.push_back(p);
  }
  HashReviewer reviewer(99, 40, 60);
  const auto [first, first_report] = eliminate(set, reviewer, small_lexicon());

  PersonaSet again = first;
  again.stage = SetStage::initial;
  const auto [second, second_report] = eliminate(again, reviewer, small_lexicon());
  CHECK(second_report.reviewer_deleted == 0);
  CHECK(second_report.rereview_deleted == 0);
  for (std::size_t i = 0; i < first.personas.size(); ++i) {
    CHECK(second.personas[i].dimensions == first.personas[i].dimensions);
  }
}

TEST_CASE("reviewer call accounting stays within two calls per sentence") {
  auto set = one_persona_set(
      "Sentence a. Old people cannot use technology. Sentence c.");
  ScriptedReviewer reviewer;
  const std::size_t input_sentences = count_sentences(set.personas[0]);
  const auto [output, report] = eliminate(set, reviewer, small_lexicon());
  CHECK(reviewer.initial_calls == static_cast<int>(input_sentences));
  CHECK(reviewer.rereview_calls == static_cast<int>(report.screen_flagged));
  CHECK(reviewer.calls <= 2 * static_cast<int>(input_sentences));
}

TEST_CASE("lexicon loader validates entries") {
  const auto dir = std::filesystem::temp_directory_path();
  const auto path = dir / "upcs_lexicon_test.jsonl";
  {
    std::ofstream out(path);
    out << R"({"schema":"upcs-lexicon/1","version":"9"})" << "\n";
    out << R"({"expression":"x are all y","category":"test"})" << "\n";
  }
  const auto lexicon = load_lexicon(path);
  CHECK(lexicon.version == "9");
  CHECK(lexicon.entries.size() == 1);
  std::filesystem::remove(path);

  BiasLexicon empty;
  CHECK_THROWS_AS(validate_lexicon(empty), ValidationError);
  BiasLexicon blank;
  blank.entries = {{"  ", "x"}};
  CHECK_THROWS_AS(validate_lexicon(blank), ValidationError);
}

TEST_CASE("bundled lexicon loads and spans multiple categories") {
  const auto lexicon =
      load_lexicon(std::filesystem::path(UPCS_DATA_DIR) / "lexicon" / "bias_lexicon.jsonl");
  CHECK(lexicon.entries.size() >= 50);
  std::set<std::string> categories;
  for (const auto& entry : lexicon.entries) categories.insert(entry.category);
  CHECK(categories.count("gender"));
  CHECK(categories.count("race"));
  CHECK(categories.count("age"));
  CHECK(categories.count("religion"));
}
