#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "json.hpp"

namespace upcs {

struct ChatMessage {
  std::string role;  // "system" | "user" | "assistant"
  std::string content;
};

// Minimal chat-completion contract shared by the generator, the bias
// reviewer and the bias comparator.
class ChatClient {
 public:
  virtual ~ChatClient() = default;
  virtual std::string complete(const std::vector<ChatMessage>& messages) = 0;
};

struct RemoteChatConfig {
  std::string endpoint;  // e.g. http://host:port/v1/chat/completions
  std::string model;
  double temperature = 0.7;
  int timeout_ms = 30000;
  int max_attempts = 3;
  std::string api_key_env = "UPCS_LLM_API_KEY";
};

// JSON POST {"model","messages":[{"role","content"}],"temperature"}
// -> {"choices":[{"message":{"content"}}]}. Retries transport errors
// and 5xx with exponential backoff.
class RemoteChatClient final : public ChatClient {
 public:
  explicit RemoteChatClient(RemoteChatConfig config);
  std::string complete(const std::vector<ChatMessage>& messages) override;

 private:
  RemoteChatConfig config_;
};

// Extract choices[0].message.content from a completion response body.
std::string parse_chat_completion(const nlohmann::json& body);

// Find and parse the JSON object in a completion: either a ```json
// fenced block or the whole trimmed text. Throws GenerationError with
// the raw text attached when no object can be parsed.
nlohmann::json extract_fenced_json(const std::string& completion);

// Prompt template file with {{name}} placeholders. Templates ship as
// versioned data files so they can be audited and replaced.
class PromptTemplate {
 public:
  static PromptTemplate load(const std::filesystem::path& path);
  static PromptTemplate from_string(std::string text);

  std::string render(const std::map<std::string, std::string>& values) const;

 private:
  std::string text_;
};

}  // namespace upcs
