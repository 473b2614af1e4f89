#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

namespace upcs {

// The eight persona dimensions. Iteration order is fixed: it is the
// declaration order below, exposed through kAllDimensions, and every
// deterministic traversal in the library uses it.
enum class DimensionKey : std::uint8_t {
  personality = 0,
  experience,
  hobbies,
  special_skills,
  living_environment,
  habits,
  cultural_background,
  external_features,
};

inline constexpr std::array<DimensionKey, 8> kAllDimensions = {
    DimensionKey::personality,        DimensionKey::experience,
    DimensionKey::hobbies,            DimensionKey::special_skills,
    DimensionKey::living_environment, DimensionKey::habits,
    DimensionKey::cultural_background, DimensionKey::external_features,
};

std::string_view dimension_name(DimensionKey key);
std::optional<DimensionKey> dimension_from_name(std::string_view name);

// Value of the seven free-text dimensions: the text itself plus optional
// attribute labels ("name=value") that the resampler rewrites.
struct TextDimension {
  std::string text;
  std::vector<std::string> attributes;

  bool operator==(const TextDimension&) const = default;
};

// Structured value of the external_features dimension. Age is bounded to
// [0, 130]; at least one field must be present.
struct ExternalFeatures {
  std::optional<int> age;
  std::optional<std::string> race;
  std::optional<std::string> gender;
  std::optional<std::string> free_text;

  bool operator==(const ExternalFeatures&) const = default;
};

using DimensionValue = std::variant<TextDimension, ExternalFeatures>;

struct Persona {
  std::string id;
  std::map<DimensionKey, DimensionValue> dimensions;
  std::vector<std::string> provenance;  // append-only across stages

  bool has(DimensionKey key) const { return dimensions.count(key) != 0; }
  bool operator==(const Persona&) const = default;
};

enum class SetStage : std::uint8_t {
  initial = 0,
  incomplete_debiased,
  debiased,
  unbiased,
};

std::string_view stage_name(SetStage stage);
std::optional<SetStage> stage_from_name(std::string_view name);

struct PersonaSet {
  SetStage stage = SetStage::initial;
  std::vector<Persona> personas;

  bool operator==(const PersonaSet&) const = default;
};

// Exactly the keys absent from p.dimensions.
std::set<DimensionKey> missing_dimensions(const Persona& p);

// Canonical text form consumed by embeddings and BM25. One line per
// present dimension, in kAllDimensions order, "<key>: <content>".
// Attribute labels are appended as "(a, b)"; external features render
// their structured fields. Empty string for a persona with no dimensions.
std::string persona_text(const Persona& p);

// Throw ValidationError listing every violated persona invariant.
void validate_persona(const Persona& p);
// Persona validation plus the no-duplicate-id rule (IntegrityError).
void validate_set(const PersonaSet& set);

// JSONL persistence. Line 1 is the header object
// {"schema":"upcs-persona/1","stage":...}; each following line is one
// persona. UTF-8, LF line endings. save_set writes atomically
// (temp file + rename) and load(save(s)) == s.
PersonaSet load_set(const std::filesystem::path& path);
void save_set(const PersonaSet& set, const std::filesystem::path& path);

// The canonical byte serialization save_set would produce.
std::string serialize_set(const PersonaSet& set);
PersonaSet parse_set(std::string_view content);

}  // namespace upcs
