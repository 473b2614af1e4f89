#pragma once

#include <cstdint>
#include <filesystem>
#include <string>

#include "json.hpp"
#include "upcs/chat_client.hpp"
#include "upcs/persona.hpp"

namespace upcs {

// Output of the character-description step: the traits that seed
// persona construction.
struct CharacterDescription {
  std::string motivations;
  std::string abilities;
  std::string desires;
  std::string other_traits;
  std::string summary;  // non-empty

  bool operator==(const CharacterDescription&) const = default;
};

class DescriptionGenerator {
 public:
  virtual ~DescriptionGenerator() = default;

  virtual CharacterDescription generate_description(const std::string& seed_prompt) = 0;

  // Builds a persona whose dimensions come from the description. Any
  // subset of the eight dimensions may be present. Provenance records
  // the initial stage. `id` becomes the persona id.
  virtual Persona build_initial_persona(const CharacterDescription& desc,
                                        const std::string& id) = 0;
};

// Deterministic offline backend: a pure function of (inputs, seed).
// Fills descriptions and personas from fixed template pools keyed by a
// hash of the input text and the configured seed.
class MockGenerator final : public DescriptionGenerator {
 public:
  explicit MockGenerator(std::uint64_t seed) : seed_(seed) {}

  CharacterDescription generate_description(const std::string& seed_prompt) override;
  Persona build_initial_persona(const CharacterDescription& desc,
                                const std::string& id) override;

 private:
  std::uint64_t seed_;
};

struct GeneratorPrompts {
  PromptTemplate character_description;
  PromptTemplate initial_persona;

  // Loads character_description.v1.txt and initial_persona.v1.txt.
  static GeneratorPrompts load(const std::filesystem::path& prompts_dir);
};

// Remote backend over the chat-completion contract. Completions must
// carry a fenced JSON object; responses that stay unparseable after
// max_retries re-asks raise GenerationError with the raw text attached.
class RemoteGenerator final : public DescriptionGenerator {
 public:
  RemoteGenerator(ChatClient& client, GeneratorPrompts prompts, int max_retries = 2);

  CharacterDescription generate_description(const std::string& seed_prompt) override;
  Persona build_initial_persona(const CharacterDescription& desc,
                                const std::string& id) override;

 private:
  ChatClient* client_;
  GeneratorPrompts prompts_;
  int max_retries_;
};

// Parse a completion's JSON object into a description. All five fields
// are required and must be non-empty.
CharacterDescription parse_character_description(const nlohmann::json& j);

// Parse a completion's JSON object mapping dimension names to values
// into a persona. Text dimensions accept a plain string or
// {"text", "attributes"}; external_features requires its structured
// object. Unknown keys and invariant violations are rejected.
Persona parse_persona_dimensions(const nlohmann::json& j, const std::string& id);

}  // namespace upcs
