#include "upcs/generator.hpp"

#include <array>
#include <string_view>

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

// Template pools for the mock backend. Attribute labels line up with
// the vocabularies in the bundled distribution file so the resampler
// has something realistic to rewrite.
struct PoolEntry {
  std::string_view text;
  std::array<std::string_view, 2> attributes;  // empty entries ignored
};

constexpr std::array<PoolEntry, 8> kPersonalityPool = {{
    {"Cheerful and quick to encourage whoever is nearby.", {"trait=cheerful", ""}},
    {"Reserved in groups and careful with words.", {"trait=reserved", ""}},
    {"Empathetic to a fault, always reading the room.", {"trait=empathetic", ""}},
    {"Analytical about everyday decisions. Keeps spreadsheets for groceries.",
     {"trait=analytical", ""}},
    {"Adventurous whenever a plan allows it.", {"trait=adventurous", ""}},
    {"Organized to the point of labeling drawers.", {"trait=organized", ""}},
    {"Curious about how machines and people work.", {"trait=curious", ""}},
    {"Patient even when queues crawl. Rarely raises a voice.", {"trait=patient", ""}},
}};

constexpr std::array<PoolEntry, 8> kExperiencePool = {{
    {"Worked five seasons as a park ranger.", {"", ""}},
    {"Ran a small bakery before moving abroad. Sold it to a cousin.", {"", ""}},
    {"Volunteered at a community radio station.", {"", ""}},
    {"Taught high-school mathematics for a decade.", {"", ""}},
    {"Served as a ship's cook on cargo routes.", {"", ""}},
    {"Spent years restoring old houses.", {"", ""}},
    {"Managed a village library. Catalogued every donated box.", {"", ""}},
    {"Apprenticed with a clockmaker.", {"", ""}},
}};

constexpr std::array<PoolEntry, 8> kHobbiesPool = {{
    {"Paints landscapes on weekends. Never sells a single canvas.",
     {"activity=painting", ""}},
    {"Plays pickup basketball at the park.", {"activity=basketball", ""}},
    {"Collects stamps from defunct postal services.", {"activity=stamp_collecting", ""}},
    {"Keeps a small vegetable garden.", {"activity=gardening", ""}},
    {"Studies chess endgames.", {"activity=chess", ""}},
    {"Photographs birds at dawn.", {"activity=photography", ""}},
    {"Hikes a new trail every month.", {"activity=hiking", ""}},
    {"Bakes sourdough for neighbors.", {"activity=baking", ""}},
}};

constexpr std::array<PoolEntry, 8> kSkillsPool = {{
    {"Fluent in four languages.", {"skill=multilingual_fluency", ""}},
    {"Cooks restaurant-grade meals from scraps.", {"skill=culinary_expertise", ""}},
    {"Builds furniture by hand.", {"skill=carpentry", ""}},
    {"Certified in wilderness first aid.", {"skill=first_aid", ""}},
    {"Writes small programs to automate chores.", {"skill=coding", ""}},
    {"Letters signs in flawless calligraphy.", {"skill=calligraphy", ""}},
    {"Navigates by the stars when needed.", {"skill=navigation", ""}},
    {"Comfortable addressing large crowds.", {"skill=public_speaking", ""}},
}};

constexpr std::array<PoolEntry, 6> kEnvironmentPool = {{
    {"Lives in a compact city apartment.", {"setting=city_apartment", ""}},
    {"Lives in a quiet suburban house.", {"setting=suburban_house", ""}},
    {"Lives in a countryside farmhouse. The porch needs paint.",
     {"setting=countryside_farmhouse", ""}},
    {"Lives in a small coastal town.", {"setting=coastal_town", ""}},
    {"Lives in a mountain village.", {"setting=mountain_village", ""}},
    {"Lives near a desert settlement.", {"setting=desert_settlement", ""}},
}};

constexpr std::array<PoolEntry, 6> kHabitsPool = {{
    {"Starts every day with a morning run.", {"routine=morning_runs", ""}},
    {"Reads a chapter before bed.", {"routine=bedtime_reading", ""}},
    {"Keeps a daily journal. Numbers every page.", {"routine=daily_journaling", ""}},
    {"Wakes before sunrise.", {"routine=early_rising", ""}},
    {"Takes long evening walks.", {"routine=evening_walks", ""}},
    {"Preps meals every Sunday.", {"routine=weekly_meal_prep", ""}},
}};

constexpr std::array<PoolEntry, 6> kCulturePool = {{
    {"Raised in an east asian household, mandarin spoken at home.",
     {"heritage=east_asian", "language=mandarin"}},
    {"South asian roots, hindi spoken with family.",
     {"heritage=south_asian", "language=hindi"}},
    {"African heritage, swahili kept alive at gatherings.",
     {"heritage=african", "language=swahili"}},
    {"European background, french used with relatives.",
     {"heritage=european", "language=french"}},
    {"Latin american family, spanish at every table.",
     {"heritage=latin_american", "language=spanish"}},
    {"Middle eastern lineage, arabic read and written.",
     {"heritage=middle_eastern", "language=arabic"}},
}};

constexpr std::array<std::string_view, 7> kRacePool = {
    "asian",          "african",        "european", "latin_american",
    "middle_eastern", "north_american", "oceanian"};

constexpr std::array<std::string_view, 2> kGenderPool = {"female", "male"};

constexpr std::array<std::string_view, 4> kFreeTextPool = {
    "tall", "wears round glasses", "soft-spoken voice", ""};

constexpr std::array<std::string_view, 8> kMotivationPool = {
    "To map every footpath in the county.",
    "To keep the family recipes alive.",
    "To finish the night-school degree started years ago.",
    "To see the town choir win regionals.",
    "To repair things others throw away.",
    "To document local stories before they fade.",
    "To grow enough food to share.",
    "To teach the next apprentice properly.",
};

constexpr std::array<std::string_view, 8> kAbilityPool = {
    "Remembers faces and names after one meeting.",
    "Fixes engines by ear.",
    "Reads weather from cloud banks.",
    "Calms tense rooms with a few words.",
    "Estimates distances within a stride.",
    "Keeps accounts balanced to the cent.",
    "Finds shortcuts in any city grid.",
    "Whittles toys from scrap wood.",
};

constexpr std::array<std::string_view, 8> kDesirePool = {
    "Wants a quiet workshop with good light.",
    "Wants to host one great harvest dinner.",
    "Wants to cross the continent by rail.",
    "Wants the library reopened on weekends.",
    "Wants to learn one more language.",
    "Wants to swim in every nearby lake.",
    "Wants a garden that outlives the house.",
    "Wants to archive the family letters.",
};

constexpr std::array<std::string_view, 8> kTraitPool = {
    "Hums while working.",
    "Collects maps of places never visited.",
    "Counts stairs out of habit.",
    "Keeps a spare umbrella for strangers.",
    "Names every houseplant.",
    "Writes letters instead of calling.",
    "Always arrives ten minutes early.",
    "Quotes proverbs slightly wrong.",
};

constexpr std::array<std::string_view, 6> kSummaryPool = {
    "A steady presence with an eye for small details.",
    "A wanderer at heart who keeps meticulous lists.",
    "A quiet fixer trusted by the whole street.",
    "A storyteller who prefers listening.",
    "A practical dreamer with calloused hands.",
    "An early riser drawn to unfinished projects.",
};

template <std::size_t N>
std::string_view pick(const std::array<std::string_view, N>& pool, std::uint64_t& state) {
  return pool[rng::splitmix64(state) % N];
}

template <std::size_t N>
const PoolEntry& pick_entry(const std::array<PoolEntry, N>& pool, std::uint64_t& state) {
  return pool[rng::splitmix64(state) % N];
}

TextDimension make_text_dimension(const PoolEntry& entry) {
  TextDimension dim;
  dim.text = std::string(entry.text);
  for (const auto& attr : entry.attributes) {
    if (!attr.empty()) dim.attributes.emplace_back(attr);
  }
  return dim;
}

}  // namespace

CharacterDescription MockGenerator::generate_description(const std::string& seed_prompt) {
  if (trim(seed_prompt).empty()) {
    throw GenerationError("seed prompt is empty", seed_prompt);
  }
  std::uint64_t state = rng::mix(rng::fnv1a64(seed_prompt), seed_);
  CharacterDescription desc;
  desc.motivations = std::string(pick(kMotivationPool, state));
  desc.abilities = std::string(pick(kAbilityPool, state));
  desc.desires = std::string(pick(kDesirePool, state));
  desc.other_traits = std::string(pick(kTraitPool, state));
  desc.summary = std::string(pick(kSummaryPool, state));
  return desc;
}

Persona MockGenerator::build_initial_persona(const CharacterDescription& desc,
                                             const std::string& id) {
  if (trim(desc.summary).empty()) {
    throw GenerationError("character description has an empty summary");
  }
  std::uint64_t state = rng::mix(
      rng::fnv1a64(desc.summary + '\n' + desc.motivations + '\n' + desc.abilities +
                   '\n' + desc.desires + '\n' + desc.other_traits),
      seed_);
  // 1..255 over eight bits: at least one dimension is always present.
  const std::uint64_t mask = 1 + rng::splitmix64(state) % 255;

  Persona p;
  p.id = id;
  for (std::size_t i = 0; i < kAllDimensions.size(); ++i) {
    if (!(mask & (1ULL << i))) continue;
    const DimensionKey key = kAllDimensions[i];
    switch (key) {
      case DimensionKey::personality:
        p.dimensions.emplace(key, make_text_dimension(pick_entry(kPersonalityPool, state)));
        break;
      case DimensionKey::experience:
        p.dimensions.emplace(key, make_text_dimension(pick_entry(kExperiencePool, state)));
        break;
      case DimensionKey::hobbies:
        p.dimensions.emplace(key, make_text_dimension(pick_entry(kHobbiesPool, state)));
        break;
      case DimensionKey::special_skills:
        p.dimensions.emplace(key, make_text_dimension(pick_entry(kSkillsPool, state)));
        break;
      case DimensionKey::living_environment:
        p.dimensions.emplace(key, make_text_dimension(pick_entry(kEnvironmentPool, state)));
        break;
      case DimensionKey::habits:
        p.dimensions.emplace(key, make_text_dimension(pick_entry(kHabitsPool, state)));
        break;
      case DimensionKey::cultural_background:
        p.dimensions.emplace(key, make_text_dimension(pick_entry(kCulturePool, state)));
        break;
      case DimensionKey::external_features: {
        ExternalFeatures ext;
        ext.age = static_cast<int>(18 + rng::splitmix64(state) % 62);
        ext.race = std::string(pick(kRacePool, state));
        ext.gender = std::string(pick(kGenderPool, state));
        const auto free_text = pick(kFreeTextPool, state);
        if (!free_text.empty()) ext.free_text = std::string(free_text);
        p.dimensions.emplace(key, ext);
        break;
      }
    }
  }
  p.provenance.push_back("initial");
  validate_persona(p);
  return p;
}

GeneratorPrompts GeneratorPrompts::load(const std::filesystem::path& prompts_dir) {
  GeneratorPrompts prompts;
  prompts.character_description =
      PromptTemplate::load(prompts_dir / "character_description.v1.txt");
  prompts.initial_persona = PromptTemplate::load(prompts_dir / "initial_persona.v1.txt");
  return prompts;
}

RemoteGenerator::RemoteGenerator(ChatClient& client, GeneratorPrompts prompts,
                                 int max_retries)
    : client_(&client), prompts_(std::move(prompts)), max_retries_(max_retries) {
  if (max_retries_ < 0) throw ValidationError("max retries must be >= 0");
}

CharacterDescription RemoteGenerator::generate_description(const std::string& seed_prompt) {
  if (trim(seed_prompt).empty()) {
    throw GenerationError("seed prompt is empty", seed_prompt);
  }
  const std::string prompt =
      prompts_.character_description.render({{"seed_prompt", seed_prompt}});
  std::string last_raw;
  for (int attempt = 0; attempt <= max_retries_; ++attempt) {
    const std::string completion = client_->complete({{"user", prompt}});
    try {
      return parse_character_description(extract_fenced_json(completion));
    } catch (const GenerationError&) {
      last_raw = completion;
    }
  }
  throw GenerationError("completion unparseable after retries", last_raw);
}

Persona RemoteGenerator::build_initial_persona(const CharacterDescription& desc,
                                               const std::string& id) {
  const std::string prompt = prompts_.initial_persona.render({
      {"motivations", desc.motivations},
      {"abilities", desc.abilities},
      {"desires", desc.desires},
      {"other_traits", desc.other_traits},
      {"summary", desc.summary},
  });
  std::string last_raw;
  for (int attempt = 0; attempt <= max_retries_; ++attempt) {
    const std::string completion = client_->complete({{"user", prompt}});
    try {
      return parse_persona_dimensions(extract_fenced_json(completion), id);
    } catch (const GenerationError&) {
      last_raw = completion;
    }
  }
  throw GenerationError("completion unparseable after retries", last_raw);
}

CharacterDescription parse_character_description(const json& j) {
  CharacterDescription desc;
  const std::array<std::pair<std::string_view, std::string*>, 5> fields = {{
      {"motivations", &desc.motivations},
      {"abilities", &desc.abilities},
      {"desires", &desc.desires},
      {"other_traits", &desc.other_traits},
      {"summary", &desc.summary},
  }};
  for (const auto& [name, target] : fields) {
    const std::string key(name);
    if (!j.contains(key) || !j[key].is_string() || trim(j[key].get<std::string>()).empty()) {
      throw GenerationError("description is missing field: " + key, j.dump());
    }
    *target = j[key].get<std::string>();
  }
  return desc;
}

Persona parse_persona_dimensions(const json& j, const std::string& id) {
  Persona p;
  p.id = id;
  for (const auto& [name, value] : j.items()) {
    const auto key = dimension_from_name(name);
    if (!key) throw GenerationError("unknown dimension key: " + name, j.dump());
    if (*key == DimensionKey::external_features) {
      if (!value.is_object()) {
        throw GenerationError("external_features must be an object", j.dump());
      }
      ExternalFeatures ext;
      try {
        if (value.contains("age")) ext.age = value["age"].get<int>();
        if (value.contains("race")) ext.race = value["race"].get<std::string>();
        if (value.contains("gender")) ext.gender = value["gender"].get<std::string>();
        if (value.contains("free_text")) ext.free_text = value["free_text"].get<std::string>();
      } catch (const json::exception& e) {
        throw GenerationError(std::string("bad external_features: ") + e.what(), j.dump());
      }
      p.dimensions.emplace(*key, std::move(ext));
      continue;
    }
    TextDimension dim;
    if (value.is_string()) {
      dim.text = value.get<std::string>();
    } else if (value.is_object() && value.contains("text") && value["text"].is_string()) {
      dim.text = value["text"].get<std::string>();
      if (value.contains("attributes")) {
        try {
          dim.attributes = value["attributes"].get<std::vector<std::string>>();
        } catch (const json::exception& e) {
          throw GenerationError(std::string("bad attributes: ") + e.what(), j.dump());
        }
      }
    } else {
      throw GenerationError("dimension " + name + " must be text", j.dump());
    }
    p.dimensions.emplace(*key, std::move(dim));
  }
  p.provenance.push_back("initial");
  try {
    validate_persona(p);
  } catch (const ValidationError& e) {
    throw GenerationError(std::string("generated persona invalid: ") + e.what(), j.dump());
  }
  return p;
}

}  // namespace upcs
