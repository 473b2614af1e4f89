#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>

#include "doctest.h"
#include "upcs/errors.hpp"
#include "upcs/persona.hpp"

using namespace upcs;

namespace {

Persona make_full_persona(const std::string& id) {
  Persona p;
  p.id = id;
  p.dimensions.emplace(DimensionKey::personality, TextDimension{"Cheerful.", {"trait=cheerful"}});
  p.dimensions.emplace(DimensionKey::experience, TextDimension{"Taught math.", {}});
  p.dimensions.emplace(DimensionKey::hobbies, TextDimension{"Paints.", {"activity=painting"}});
  p.dimensions.emplace(DimensionKey::special_skills, TextDimension{"First aid.", {}});
  p.dimensions.emplace(DimensionKey::living_environment, TextDimension{"City flat.", {}});
  p.dimensions.emplace(DimensionKey::habits, TextDimension{"Runs daily.", {}});
  p.dimensions.emplace(DimensionKey::cultural_background, TextDimension{"Bilingual home.", {}});
  ExternalFeatures ext;
  ext.age = 30;
  ext.race = "asian";
  ext.gender = "female";
  p.dimensions.emplace(DimensionKey::external_features, ext);
  p.provenance = {"initial"};
  return p;
}

std::filesystem::path temp_path(const char* name) {
  return std::filesystem::temp_directory_path() / name;
}

}  // namespace

TEST_CASE("missing_dimensions on a complete persona is empty") {
  CHECK(missing_dimensions(make_full_persona("p1")).empty());
}

TEST_CASE("missing_dimensions with only experience returns the other seven") {
  Persona p;
  p.id = "p1";
  p.dimensions.emplace(DimensionKey::experience, TextDimension{"Taught math.", {}});
  const auto missing = missing_dimensions(p);
  CHECK(missing.size() == 7);
  CHECK(!missing.count(DimensionKey::experience));
}

TEST_CASE("missing_dimensions reports exactly the absent keys") {
  Persona p = make_full_persona("p1");
  p.dimensions.erase(DimensionKey::hobbies);
  p.dimensions.erase(DimensionKey::habits);
  const auto missing = missing_dimensions(p);
  CHECK(missing == std::set<DimensionKey>{DimensionKey::hobbies, DimensionKey::habits});
}

TEST_CASE("missing and present keys partition the eight dimensions") {
  std::mt19937_64 rng(41);
  for (int round = 0; round < 50; ++round) {
    Persona p = make_full_persona("p");
    for (DimensionKey key : kAllDimensions) {
      if (rng() % 2) p.dimensions.erase(key);
    }
    const auto missing = missing_dimensions(p);
    CHECK(missing.size() + p.dimensions.size() == 8);
    for (DimensionKey key : missing) CHECK(!p.has(key));
  }
}

TEST_CASE("persona_text of an empty persona is empty") {
  Persona p;
  p.id = "p1";
  CHECK(persona_text(p).empty());
}

TEST_CASE("persona_text is deterministic and keyed by dimension") {
  const Persona p = make_full_persona("p1");
  const std::string text = persona_text(p);
  CHECK(text == persona_text(p));
  CHECK(text.find("personality: Cheerful.") != std::string::npos);
  CHECK(text.find("external_features: age 30; race asian; gender female") !=
        std::string::npos);
}

TEST_CASE("personas differing only in hobbies differ only in the hobbies line") {
  Persona a = make_full_persona("p1");
  Persona b = make_full_persona("p1");
  b.dimensions.erase(DimensionKey::hobbies);
  b.dimensions.emplace(DimensionKey::hobbies, TextDimension{"Collects stamps.", {}});

  std::istringstream lines_a(persona_text(a));
  std::istringstream lines_b(persona_text(b));
  std::string line_a, line_b;
  while (std::getline(lines_a, line_a) && std::getline(lines_b, line_b)) {
    if (line_a.rfind("hobbies:", 0) == 0) {
      CHECK(line_a != line_b);
    } else {
      CHECK(line_a == line_b);
    }
  }
}

TEST_CASE("equal persona texts imply equal dimension contents") {
  // Injectivity up to content equality, over a generated corpus.
  std::mt19937_64 rng(6);
  std::vector<Persona> corpus;
  for (int i = 0; i < 120; ++i) {
    Persona p = make_full_persona("p" + std::to_string(i));
    for (DimensionKey key : kAllDimensions) {
      if (rng() % 3 == 0) p.dimensions.erase(key);
    }
    if (rng() % 2) {
      auto it = p.dimensions.find(DimensionKey::experience);
      if (it != p.dimensions.end()) {
        std::get<TextDimension>(it->second).text = "Variant " + std::to_string(rng() % 5) + ".";
      }
    }
    corpus.push_back(std::move(p));
  }
  for (const auto& a : corpus) {
    for (const auto& b : corpus) {
      if (persona_text(a) == persona_text(b)) {
        CHECK(a.dimensions == b.dimensions);
      }
    }
  }
}

TEST_CASE("save then load is the identity") {
  PersonaSet set;
  set.stage = SetStage::initial;
  set.personas = {make_full_persona("p1"), make_full_persona("p2")};
  set.personas[1].dimensions.erase(DimensionKey::habits);

  const auto path = temp_path("upcs_roundtrip.jsonl");
  save_set(set, path);
  const PersonaSet loaded = load_set(path);
  CHECK(loaded == set);

  // Canonical bytes are reproduced by a save of the loaded set.
  std::ifstream in(path, std::ios::binary);
  std::ostringstream bytes;
  bytes << in.rdbuf();
  CHECK(bytes.str() == serialize_set(loaded));
  std::filesystem::remove(path);
}

TEST_CASE("duplicate ids are an integrity error") {
  const auto path = temp_path("upcs_dup.jsonl");
  {
    std::ofstream out(path);
    out << R"({"schema":"upcs-persona/1","stage":"initial"})" << "\n";
    out << R"({"id":"p1","dimensions":{"experience":{"text":"A."}},"provenance":[]})" << "\n";
    out << R"({"id":"p1","dimensions":{"experience":{"text":"B."}},"provenance":[]})" << "\n";
  }
  CHECK_THROWS_AS(load_set(path), IntegrityError);
  std::filesystem::remove(path);
}

TEST_CASE("three-persona fixture loads with the header stage") {
  const auto path = std::filesystem::path(UPCS_FIXTURE_DIR) / "personas_3.jsonl";
  const PersonaSet set = load_set(path);
  CHECK(set.personas.size() == 3);
  CHECK(set.stage == SetStage::initial);
  CHECK(set.personas[0].id == "ada");
  const auto& hobbies = std::get<TextDimension>(
      set.personas[0].dimensions.at(DimensionKey::hobbies));
  CHECK(hobbies.text == "Paints landscapes on weekends.");
}

TEST_CASE("malformed line reports its line number") {
  const auto path = temp_path("upcs_malformed.jsonl");
  {
    std::ofstream out(path);
    out << R"({"schema":"upcs-persona/1","stage":"initial"})" << "\n";
    out << R"({"id":"p1","dimensions":{},"provenance":[]})" << "\n";
    out << "this is not json\n";
  }
  try {
    load_set(path);
    FAIL("expected ParseError");
  } catch (const ParseError& e) {
    CHECK(e.line() == 3);
  }
  std::filesystem::remove(path);
}

TEST_CASE("persona invariants are enforced") {
  Persona blank_text = make_full_persona("p1");
  std::get<TextDimension>(blank_text.dimensions.at(DimensionKey::habits)).text = "   ";
  CHECK_THROWS_AS(validate_persona(blank_text), ValidationError);

  Persona bad_age = make_full_persona("p2");
  std::get<ExternalFeatures>(bad_age.dimensions.at(DimensionKey::external_features)).age = 131;
  CHECK_THROWS_AS(validate_persona(bad_age), ValidationError);

  Persona empty_ext = make_full_persona("p3");
  empty_ext.dimensions.erase(DimensionKey::external_features);
  empty_ext.dimensions.emplace(DimensionKey::external_features, ExternalFeatures{});
  CHECK_THROWS_AS(validate_persona(empty_ext), ValidationError);

  CHECK_NOTHROW(validate_persona(make_full_persona("p4")));
}

TEST_CASE("stage names round-trip") {
  for (SetStage stage : {SetStage::initial, SetStage::incomplete_debiased,
                         SetStage::debiased, SetStage::unbiased}) {
    CHECK(stage_from_name(stage_name(stage)) == stage);
  }
  CHECK(!stage_from_name("bogus"));
}
