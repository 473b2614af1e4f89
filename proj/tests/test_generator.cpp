#include <filesystem>
#include <fstream>
#include <sstream>

#include "doctest.h"
#include "json.hpp"
#include "upcs/chat_client.hpp"
#include "upcs/errors.hpp"
#include "upcs/generator.hpp"

using namespace upcs;
using nlohmann::json;

namespace {

// Canned chat backend: returns queued completions in order.
class ScriptedChatClient final : public ChatClient {
 public:
  explicit ScriptedChatClient(std::vector<std::string> replies)
      : replies_(std::move(replies)) {}

  std::string complete(const std::vector<ChatMessage>& messages) override {
    last_messages = messages;
    ++calls;
    if (replies_.empty()) throw ProviderError("script exhausted", false);
    std::string reply = replies_.front();
    replies_.erase(replies_.begin());
    return reply;
  }

  std::vector<ChatMessage> last_messages;
  int calls = 0;

 private:
  std::vector<std::string> replies_;
};

std::string read_fixture(const char* name) {
  const auto path = std::filesystem::path(UPCS_FIXTURE_DIR) / "wire" / name;
  std::ifstream in(path, std::ios::binary);
  REQUIRE(in);
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return buffer.str();
}

GeneratorPrompts test_prompts() {
  return GeneratorPrompts::load(std::filesystem::path(UPCS_DATA_DIR) / "prompts");
}

}  // namespace

TEST_CASE("mock generator is deterministic") {
  MockGenerator generator(42);
  const auto a = generator.generate_description("a retired lighthouse keeper");
  const auto b = generator.generate_description("a retired lighthouse keeper");
  CHECK(a == b);
  CHECK(!a.summary.empty());

  MockGenerator other_seed(43);
  const auto c = other_seed.generate_description("a retired lighthouse keeper");
  CHECK(a != c);
}

TEST_CASE("mock generator rejects empty seed prompts") {
  MockGenerator generator(42);
  CHECK_THROWS_AS(generator.generate_description("   "), GenerationError);
}

TEST_CASE("mock personas satisfy the persona contract") {
  MockGenerator generator(7);
  for (int i = 0; i < 40; ++i) {
    const auto desc =
        generator.generate_description("seed prompt number " + std::to_string(i));
    const Persona p = generator.build_initial_persona(desc, "p" + std::to_string(i));
    CHECK_NOTHROW(validate_persona(p));
    CHECK(p.dimensions.size() >= 1);
    CHECK(p.dimensions.size() <= 8);
    CHECK(p.provenance == std::vector<std::string>{"initial"});
    // determinism
    CHECK(generator.build_initial_persona(desc, "p" + std::to_string(i)) == p);
  }
}

TEST_CASE("fixture completion parses into a description") {
  const std::string body = read_fixture("completion_description.json");
  const std::string content = parse_chat_completion(json::parse(body));
  const auto desc = parse_character_description(extract_fenced_json(content));
  CHECK(desc.motivations == "To chart the coastline by hand.");
  CHECK(desc.abilities == "Reads tides and weather without instruments.");
  CHECK(desc.desires == "Wants one quiet winter without storms.");
  CHECK(desc.other_traits == "Keeps a log of every passing ship.");
  CHECK(desc.summary == "A weathered keeper who trusts routines over luck.");
}

TEST_CASE("description parsing rejects missing fields") {
  const json incomplete{{"motivations", "m"}, {"abilities", "a"}};
  CHECK_THROWS_AS(parse_character_description(incomplete), GenerationError);
  const json blank{{"motivations", "m"}, {"abilities", "a"}, {"desires", "d"},
                   {"other_traits", "o"}, {"summary", "  "}};
  CHECK_THROWS_AS(parse_character_description(blank), GenerationError);
}

TEST_CASE("fixture persona completion yields exactly the listed dimensions") {
  const std::string body = read_fixture("completion_persona_5dims.json");
  const std::string content = parse_chat_completion(json::parse(body));
  const Persona p = parse_persona_dimensions(extract_fenced_json(content), "fix-1");
  CHECK(p.id == "fix-1");
  CHECK(p.dimensions.size() == 5);
  CHECK(p.has(DimensionKey::personality));
  CHECK(p.has(DimensionKey::experience));
  CHECK(p.has(DimensionKey::hobbies));
  CHECK(p.has(DimensionKey::living_environment));
  CHECK(p.has(DimensionKey::external_features));
  CHECK(missing_dimensions(p) ==
        std::set<DimensionKey>{DimensionKey::special_skills, DimensionKey::habits,
                               DimensionKey::cultural_background});
  const auto& ext = std::get<ExternalFeatures>(
      p.dimensions.at(DimensionKey::external_features));
  CHECK(ext.age == 61);
  CHECK(ext.gender == "male");
}

TEST_CASE("persona parsing rejects unknown keys and bad values") {
  CHECK_THROWS_AS(parse_persona_dimensions(json{{"mood", "sunny"}}, "x"), GenerationError);
  CHECK_THROWS_AS(parse_persona_dimensions(json{{"hobbies", 3}}, "x"), GenerationError);
  CHECK_THROWS_AS(
      parse_persona_dimensions(json{{"external_features", "tall"}}, "x"),
      GenerationError);
  // invariant violation: age out of range is rejected, not repaired
  CHECK_THROWS_AS(
      parse_persona_dimensions(json{{"external_features", {{"age", 200}}}}, "x"),
      GenerationError);
}

TEST_CASE("remote generator retries unparseable completions then fails") {
  ScriptedChatClient chat({"not json at all", "still not json", "nope"});
  RemoteGenerator generator(chat, test_prompts(), 2);
  try {
    generator.generate_description("a seed");
    FAIL("expected GenerationError");
  } catch (const GenerationError& e) {
    CHECK(e.raw_text() == "nope");
  }
  CHECK(chat.calls == 3);
}

TEST_CASE("remote generator renders the seed prompt into the template") {
  const json reply{
      {"motivations", "m"}, {"abilities", "a"}, {"desires", "d"},
      {"other_traits", "o"}, {"summary", "s"}};
  ScriptedChatClient chat({"```json\n" + reply.dump() + "\n```"});
  RemoteGenerator generator(chat, test_prompts(), 0);
  const auto desc = generator.generate_description("the seed idea");
  CHECK(desc.summary == "s");
  REQUIRE(chat.last_messages.size() == 1);
  CHECK(chat.last_messages[0].role == "user");
  CHECK(chat.last_messages[0].content.find("the seed idea") != std::string::npos);
  CHECK(chat.last_messages[0].content.find("{{seed_prompt}}") == std::string::npos);
}
